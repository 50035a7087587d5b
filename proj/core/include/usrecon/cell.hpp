#pragma once

#include <cstdint>
#include <vector>

#include "usrecon/field.hpp"
#include "usrecon/geometry.hpp"
#include "usrecon/rng.hpp"

namespace usrecon {

struct CellConfig {
  int num_subcells = 8;          // K
  int num_samples = 2;           // Monte Carlo draws per subcell
  double slice_thickness = 3.0;  // S_t, mm
  double sigma = -1.0;           // elevation Gaussian std, mm; <= 0 -> S_t/4

  double resolved_sigma() const {
    return sigma > 0 ? sigma : slice_thickness / 4.0;
  }
  void validate() const;
};

struct SubcellLayout {
  std::vector<double> centers;  // signed offsets from the image plane, mm
  double half_width = 0;        // S_t / (2K)
};

// K equal subcells across [-S_t/2, +S_t/2]; centers are symmetric about 0.
SubcellLayout subcell_layout(int K, double slice_thickness);

// Gaussian elevation weights at the subcell centers, normalized to sum 1.
std::vector<double> gaussian_weights(const SubcellLayout& layout, double sigma);

// Jittered elevation offsets for one pixel: centers[k] + U with U uniform in
// [-half_width, +half_width), stratified per subcell. The (k, j) draw uses
// counter index k*num_samples + j, so offsets are schedule-independent.
void subcell_offsets(const CellConfig& cfg, const SubcellLayout& layout,
                     const CounterRng& rng, uint64_t frame, uint64_t pixel,
                     uint64_t epoch, std::vector<double>& offsets);

struct CellPrediction {
  double value = 0;                   // ĝ
  std::vector<double> subcell_means;  // per-subcell Monte Carlo means
};

// Resolution-cell response at pixel center p with cell axis n (unit):
// ĝ = Σ_k η_k · mean_j Φ(p + n·(c_k + U_kj)).
CellPrediction predict_intensity(const ImplicitField& field, const Vec3& p,
                                 const Vec3& n, const CellConfig& cfg,
                                 const CounterRng& rng, uint64_t frame,
                                 uint64_t pixel, uint64_t epoch);

// Weighted spread of the subcell means around the cell estimate:
// Σ_k η_k (m_k - value)².
double volume_regularizer(const std::vector<double>& means,
                          const std::vector<double>& weights, double value);

}  // namespace usrecon
