#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "usrecon/cell.hpp"
#include "usrecon/field.hpp"
#include "usrecon/sequence.hpp"

namespace usrecon {

struct LossWeights {
  double beta_dist = 0.03;   // windowed plane-offset penalty
  double beta_angle = 30.0;  // windowed plane-angle penalty
  double beta_volume = 1.0;  // subcell-variance regularizer
};

struct AblationFlags {
  bool cell_model = true;           // off: single center sample per pixel
  bool pose_refinement = true;      // off: poses stay at their initial values
  bool pose_regularization = true;  // off: windowed penalties leave the loss
  bool volume_regularization = true;
};

// One-sided quadratic corridor: zero inside [lo, hi], squared overshoot
// outside. Requires lo <= hi.
double penalty(double x, double lo, double hi);
double penalty_derivative(double x, double lo, double hi);

// Per adjacent-pair [min, max] corridors for the plane offset and plane angle,
// taken over a window of pairs around each index in the initial trajectory.
// Computed once; fixed for the whole run.
struct PairWindowBounds {
  std::vector<double> dist_lo, dist_hi;    // mm
  std::vector<double> angle_lo, angle_hi;  // rad
  size_t num_pairs() const { return dist_lo.size(); }
};

PairWindowBounds compute_window_bounds(const std::vector<RigidPose>& initial,
                                       int window);

struct PoseRegTerms {
  double l_dist = 0.0;   // max over pairs of the offset penalty
  double l_angle = 0.0;  // max over pairs of the angle penalty
  int argmax_dist = -1;
  int argmax_angle = -1;
};

PoseRegTerms pose_regularizers(const std::vector<RigidPose>& poses,
                               const PairWindowBounds& bounds);

// Same values, plus gradients w.r.t. each frame's (omega, tau) at the state
// exp_map(delta[i], base[i]), accumulated into grad scaled by scale_dist /
// scale_angle. Only the arg-max pair of each penalty carries gradient.
PoseRegTerms pose_regularizers_with_grad(const std::vector<RigidPose>& base,
                                         const std::vector<PoseParam>& delta,
                                         const PairWindowBounds& bounds,
                                         double scale_dist, double scale_angle,
                                         std::vector<Vec6>& grad);

// Mean squared error; sizes must match.
double intensity_loss(const Eigen::VectorXd& predicted,
                      const Eigen::VectorXd& observed);

// Coarse-to-fine schedules; both are nondecreasing in the epoch index.
// Subcells ramp from k_init to k_final, reaching k_final at 60% of the run;
// active encoding levels ramp linearly, reaching num_levels at the last epoch.
int subcell_count_at_epoch(int epoch, int total_epochs, int k_init, int k_final);
int active_levels_at_epoch(int epoch, int total_epochs, int start_levels,
                           int num_levels);

// Pose step-size anneal: 1.0 while the subcell ramp is active, then linear to
// final_scale at the last epoch. final_scale = 1 keeps the rate constant.
double pose_lr_scale_at_epoch(int epoch, int total_epochs, double final_scale);

struct TrainConfig {
  CellConfig cell;        // K at full resolution
  int k_init = 3;         // subcell ramp start
  int start_levels = 4;   // encoding-level ramp start
  int epochs = 30;
  int batch_size = 4096;
  int chunk_pixels = 2048;  // memory bound for batched field evaluation
  double lr_table = 1e-2;
  double lr_mlp = 1e-3;
  double lr_pose = 1e-4;
  double pose_lr_final = 1.0;  // end-of-run multiplier on lr_pose (anneal)
  // Step-size multiplier for the rotational pose components. Adam steps are
  // sized in each parameter's own unit, so 1.0 gives rotations lr_pose
  // radians per step; ~1/lever-arm (mm^-1) balances them against translation.
  double lr_pose_rot_scale = 1.0;
  int window = 5;  // half-width, in pairs, of the bound windows
  LossWeights weights;
  AblationFlags flags;
  uint64_t seed = 0;

  void validate() const;
};

struct LossBreakdown {
  double chi = 0.0;   // total objective (disabled terms excluded)
  double l_i = 0.0;
  double l_dist = 0.0;
  double l_angle = 0.0;
  double r_v = 0.0;   // batch mean of the subcell-variance term
};

struct EpochTrace {
  int epoch = 0;
  int subcells = 0;
  int levels = 0;
  double l_i = 0, l_dist = 0, l_angle = 0, r_v = 0, chi = 0;
  double mean_dt_mm = 0;   // mean ||tau|| over frames
  double mean_dr_deg = 0;  // mean ||omega|| over frames, degrees
};

struct TrainResult {
  std::vector<PoseParam> pose_params;
  std::vector<RigidPose> refined_poses;
  std::vector<EpochTrace> trace;
};

// Raised when a loss component stops being finite; the message names the
// offending component.
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One evaluation of the objective on an explicit pixel batch (ids are
// f*height*width + h*width + w) at the pose state exp_map(deltas, seq.poses).
// Pass field_grads/pose_grads together to accumulate gradients; pose_grads may
// be null while field_grads is set when poses are frozen. The cell config is
// used as given (schedules are applied by the caller); when flags.cell_model
// is off, a single unjittered center sample replaces the cell. train() runs
// through this same path.
LossBreakdown total_loss(const FrameSequence& seq, const ImplicitField& field,
                         const std::vector<PoseParam>& deltas,
                         const PairWindowBounds& bounds,
                         const std::vector<uint32_t>& batch_pixels, int epoch,
                         const CellConfig& cell, const LossWeights& weights,
                         const AblationFlags& flags, uint64_t seed,
                         int chunk_pixels, FieldGradients* field_grads,
                         std::vector<Vec6>* pose_grads);

using EpochCallback = std::function<void(const EpochTrace&)>;

// Joint optimization of field parameters and pose deltas over shuffled pixel
// batches. Deterministic for a fixed seed and configuration.
TrainResult train(const FrameSequence& seq, ImplicitField& field,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace usrecon
