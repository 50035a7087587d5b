#include "usrecon/cell.hpp"

#include <cmath>
#include <stdexcept>

namespace usrecon {

void CellConfig::validate() const {
  if (num_subcells < 1) throw std::invalid_argument("num_subcells must be >= 1");
  if (num_samples < 1) throw std::invalid_argument("num_samples must be >= 1");
  if (!(slice_thickness > 0))
    throw std::invalid_argument("slice_thickness must be positive");
  if (!(resolved_sigma() > 0))
    throw std::invalid_argument("sigma must be positive");
}

SubcellLayout subcell_layout(int K, double slice_thickness) {
  if (K < 1) throw std::invalid_argument("subcell count must be >= 1");
  if (!(slice_thickness > 0))
    throw std::invalid_argument("slice_thickness must be positive");
  SubcellLayout layout;
  layout.half_width = slice_thickness / (2.0 * K);
  layout.centers.resize(K);
  for (int k = 0; k < K; ++k) {
    layout.centers[k] =
        -0.5 * slice_thickness + (k + 0.5) * slice_thickness / K;
  }
  return layout;
}

std::vector<double> gaussian_weights(const SubcellLayout& layout, double sigma) {
  if (!(sigma > 0)) throw std::invalid_argument("sigma must be positive");
  std::vector<double> w(layout.centers.size());
  double sum = 0.0;
  for (size_t k = 0; k < w.size(); ++k) {
    const double d = layout.centers[k];
    w[k] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += w[k];
  }
  for (double& v : w) v /= sum;
  return w;
}

void subcell_offsets(const CellConfig& cfg, const SubcellLayout& layout,
                     const CounterRng& rng, uint64_t frame, uint64_t pixel,
                     uint64_t epoch, std::vector<double>& offsets) {
  const int K = cfg.num_subcells;
  const int S = cfg.num_samples;
  offsets.resize(static_cast<size_t>(K) * S);
  for (int k = 0; k < K; ++k) {
    for (int j = 0; j < S; ++j) {
      const double u = rng.uniform(frame, pixel, epoch,
                                   static_cast<uint64_t>(k) * S + j);
      offsets[static_cast<size_t>(k) * S + j] =
          layout.centers[k] + (2.0 * u - 1.0) * layout.half_width;
    }
  }
}

CellPrediction predict_intensity(const ImplicitField& field, const Vec3& p,
                                 const Vec3& n, const CellConfig& cfg,
                                 const CounterRng& rng, uint64_t frame,
                                 uint64_t pixel, uint64_t epoch) {
  cfg.validate();
  const SubcellLayout layout =
      subcell_layout(cfg.num_subcells, cfg.slice_thickness);
  const std::vector<double> weights =
      gaussian_weights(layout, cfg.resolved_sigma());

  std::vector<double> offsets;
  subcell_offsets(cfg, layout, rng, frame, pixel, epoch, offsets);

  const int K = cfg.num_subcells;
  const int S = cfg.num_samples;
  Eigen::Matrix3Xd pts(3, static_cast<Eigen::Index>(K) * S);
  for (int i = 0; i < K * S; ++i) pts.col(i) = p + offsets[i] * n;
  const Eigen::VectorXd values = field.evaluate(pts);

  CellPrediction out;
  out.subcell_means.resize(K);
  for (int k = 0; k < K; ++k) {
    double m = 0.0;
    for (int j = 0; j < S; ++j) m += values(static_cast<Eigen::Index>(k) * S + j);
    m /= S;
    out.subcell_means[k] = m;
    out.value += weights[k] * m;
  }
  return out;
}

double volume_regularizer(const std::vector<double>& means,
                          const std::vector<double>& weights, double value) {
  if (means.size() != weights.size())
    throw std::invalid_argument("means/weights size mismatch");
  double r = 0.0;
  for (size_t k = 0; k < means.size(); ++k) {
    const double d = means[k] - value;
    r += weights[k] * d * d;
  }
  return r;
}

}  // namespace usrecon
