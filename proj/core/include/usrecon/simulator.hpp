#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "usrecon/geometry.hpp"
#include "usrecon/sequence.hpp"
#include "usrecon/volume.hpp"

namespace usrecon {

struct WireSpec {
  Vec3 point = Vec3::Zero();       // any point on the axis
  Vec3 direction = Vec3::UnitZ();  // need not be unit; normalized on use
  double radius = 0.5;             // mm
  double intensity = 0.9;
};

struct BrickSpec {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Ones();
  double intensity = 0.5;
};

struct SpeckleSpec {
  double amplitude = 0.0;       // 0 disables
  double correlation_mm = 1.0;  // lattice spacing of the value noise
  uint64_t seed = 0;
};

// Analytic phantom. A point takes the max intensity over the primitives that
// contain it, the background level otherwise; speckle then modulates
// multiplicatively and the result is clamped to [0, 1].
struct Scene {
  double background = 0.0;
  std::vector<WireSpec> wires;
  std::vector<BrickSpec> bricks;
  SpeckleSpec speckle;

  double intensity(const Vec3& p) const;
  void validate() const;
};

struct SweepSpec {
  int num_frames = 64;
  int width = 96;
  int height = 96;
  double d_pixel = 0.5;         // mm
  double step = 0.75;           // inter-frame advance along the normal, mm
  double slice_thickness = 3.0; // S_t, mm
  double render_sigma = -1.0;   // elevation Gaussian std; <= 0 -> S_t/4
  int quadrature_points = 64;   // dense rule across S_t
  double gain_jitter_std = 0.0; // per-frame multiplicative gain spread
                                // (uncompensated TGC/AGC variation); 0 = off
  uint64_t gain_seed = 7;       // stream for the per-frame gains
  RigidPose base_pose;          // frame 0; the sweep advances along its normal

  void validate() const;
};

struct NoiseSpec {
  double trans_std_mm = 0.0;   // per-axis Gaussian jitter
  double rot_std_deg = 0.0;    // per-axis axis-angle jitter
  double drift_amp_mm = 0.0;   // sinusoidal drift along the sweep normal
  double drift_wavelength_frames = 50.0;

  void validate() const;
};

// Named presets: "none", "light" (0.2 mm, 0.1 deg, no drift), "heavy"
// (0.8 mm, 0.4 deg, 1.0 mm drift). Throws on unknown names.
NoiseSpec noise_preset(const std::string& name);

// Renders a parallel sweep with the same Gaussian-weighted slice-thickness
// integration the reconstructor assumes, via dense quadrature across S_t.
// Both poses and truth_poses hold the exact trajectory.
FrameSequence render_sweep(const Scene& scene, const SweepSpec& spec);

// Applies jitter + drift to seq.poses; truth_poses is left untouched.
void corrupt_poses(FrameSequence& seq, const NoiseSpec& noise, uint64_t seed);

// Scene integrated along `axis` with the same truncated-Gaussian elevation
// profile the renderer uses. Reference target for fidelity checks.
Volume blurred_scene_volume(const Scene& scene, const VolumeGrid& grid,
                            const Vec3& axis, double slice_thickness,
                            double sigma, int quadrature_points = 64);

}  // namespace usrecon
