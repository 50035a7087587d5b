#include "usrecon/field.hpp"

#include <cmath>
#include <stdexcept>

#include "usrecon/rng.hpp"

namespace usrecon {

namespace {

// Spatial hash primes for the y/z coordinates; x uses the identity so dense
// and hashed layouts agree on axis ordering.
constexpr uint32_t kHashPrimeY = 2654435761u;
constexpr uint32_t kHashPrimeZ = 805459861u;

void sin_and_scaled_cos(const Eigen::MatrixXd& Z, double omega,
                        Eigen::MatrixXd& S, Eigen::MatrixXd& C) {
  S.resize(Z.rows(), Z.cols());
  C.resize(Z.rows(), Z.cols());
  const double* z = Z.data();
  double* s = S.data();
  double* c = C.data();
  const Eigen::Index n = Z.size();
  for (Eigen::Index i = 0; i < n; ++i) {
#if defined(__GNUC__)
    double sv, cv;
    ::sincos(omega * z[i], &sv, &cv);
#else
    const double sv = std::sin(omega * z[i]);
    const double cv = std::cos(omega * z[i]);
#endif
    s[i] = sv;
    c[i] = cv * omega;
  }
}

}  // namespace

int HashEncodingConfig::level_resolution(int level) const {
  const double r =
      static_cast<double>(base_resolution) * std::pow(per_level_scale, level);
  const int n = static_cast<int>(std::floor(r));
  return n < 1 ? 1 : n;
}

void HashEncodingConfig::validate() const {
  if (num_levels < 1 || num_levels > 32)
    throw std::invalid_argument("num_levels must be in [1, 32]");
  if (features_per_level < 1 || features_per_level > 8)
    throw std::invalid_argument("features_per_level must be in [1, 8]");
  if (table_size_log2 < 1 || table_size_log2 > 24)
    throw std::invalid_argument("table_size_log2 must be in [1, 24]");
  if (base_resolution < 1)
    throw std::invalid_argument("base_resolution must be positive");
  if (!(per_level_scale >= 1.0))
    throw std::invalid_argument("per_level_scale must be >= 1");
  for (int a = 0; a < 3; ++a) {
    if (!(domain.hi[a] > domain.lo[a]))
      throw std::invalid_argument("domain box must have positive extent");
  }
}

void MlpConfig::validate() const {
  if (hidden_layers < 1 || hidden_layers > 16)
    throw std::invalid_argument("hidden_layers must be in [1, 16]");
  if (hidden_dim < 1 || hidden_dim > 4096)
    throw std::invalid_argument("hidden_dim must be in [1, 4096]");
  if (!(omega0 > 0)) throw std::invalid_argument("omega0 must be positive");
}

ImplicitField::ImplicitField(const HashEncodingConfig& enc, const MlpConfig& mlp)
    : enc_(enc), mlpc_(mlp), active_levels_(enc.num_levels) {
  enc_.validate();
  mlpc_.validate();
  table_.assign(enc_.table_param_count(), 0.0);

  const int H = mlpc_.hidden_layers;
  const int D = enc_.feature_dim();
  const int W = mlpc_.hidden_dim;
  mlp_.W.resize(H + 1);
  mlp_.b.resize(H + 1);
  for (int i = 0; i <= H; ++i) {
    const int rows = (i == H) ? 1 : W;
    const int cols = (i == 0) ? D : W;
    mlp_.W[i] = Eigen::MatrixXd::Zero(rows, cols);
    mlp_.b[i] = Eigen::VectorXd::Zero(rows);
  }
}

void ImplicitField::init_params(uint64_t seed) {
  SplitMix rng(splitmix64(seed ^ 0x8f1d9a2be67cull));
  for (double& v : table_) v = (rng.uniform() * 2.0 - 1.0) * 1e-4;

  const int H = mlpc_.hidden_layers;
  for (int i = 0; i <= H; ++i) {
    const int fan_in = static_cast<int>(mlp_.W[i].cols());
    // Sinusoidal-network scheme: wide first layer, later layers scaled by
    // 1/omega0 so preactivations keep unit-ish spread.
    const double bound = (i == 0)
                             ? 1.0 / fan_in
                             : std::sqrt(6.0 / fan_in) / mlpc_.omega0;
    for (Eigen::Index r = 0; r < mlp_.W[i].rows(); ++r)
      for (Eigen::Index c = 0; c < mlp_.W[i].cols(); ++c)
        mlp_.W[i](r, c) = (rng.uniform() * 2.0 - 1.0) * bound;
    mlp_.b[i].setZero();
  }
}

void ImplicitField::set_active_levels(int k) {
  if (k < 1 || k > enc_.num_levels)
    throw std::invalid_argument("active_levels outside [1, num_levels]");
  active_levels_ = k;
}

size_t ImplicitField::mlp_param_count() const {
  size_t n = 0;
  for (size_t i = 0; i < mlp_.W.size(); ++i)
    n += static_cast<size_t>(mlp_.W[i].size()) + mlp_.b[i].size();
  return n;
}

void ImplicitField::encode(const Eigen::Matrix3Xd& pts, Eigen::MatrixXd& features,
                           std::vector<uint32_t>* corner_cache) const {
  const Eigen::Index M = pts.cols();
  const int F = enc_.features_per_level;
  features.setZero(enc_.feature_dim(), M);
  if (corner_cache)
    corner_cache->resize(static_cast<size_t>(M) * active_levels_ * 8);

  const uint32_t T = enc_.table_size();
  const uint32_t mask = T - 1;
  Vec3 inv_ext;
  for (int a = 0; a < 3; ++a) inv_ext[a] = 1.0 / enc_.domain.extent()[a];

  for (Eigen::Index m = 0; m < M; ++m) {
    double x[3];
    for (int a = 0; a < 3; ++a) {
      double v = (pts(a, m) - enc_.domain.lo[a]) * inv_ext[a];
      x[a] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }
    for (int l = 0; l < active_levels_; ++l) {
      const int N = enc_.level_resolution(l);
      const bool dense =
          static_cast<uint64_t>(N + 1) * (N + 1) * (N + 1) <= T;
      int c[3];
      double f[3];
      for (int a = 0; a < 3; ++a) {
        const double g = x[a] * N;
        int ci = static_cast<int>(g);
        if (ci > N - 1) ci = N - 1;
        c[a] = ci;
        f[a] = g - ci;
      }
      const uint32_t level_base = static_cast<uint32_t>(l) * T;
      for (int d = 0; d < 8; ++d) {
        const int vx = c[0] + (d & 1);
        const int vy = c[1] + ((d >> 1) & 1);
        const int vz = c[2] + ((d >> 2) & 1);
        uint32_t slot;
        if (dense) {
          slot = static_cast<uint32_t>(vx) +
                 static_cast<uint32_t>(N + 1) *
                     (static_cast<uint32_t>(vy) +
                      static_cast<uint32_t>(N + 1) * static_cast<uint32_t>(vz));
        } else {
          slot = (static_cast<uint32_t>(vx) ^
                  static_cast<uint32_t>(vy) * kHashPrimeY ^
                  static_cast<uint32_t>(vz) * kHashPrimeZ) &
                 mask;
        }
        const uint32_t base = (level_base + slot) * static_cast<uint32_t>(F);
        const double w = ((d & 1) ? f[0] : 1.0 - f[0]) *
                         ((d & 2) ? f[1] : 1.0 - f[1]) *
                         ((d & 4) ? f[2] : 1.0 - f[2]);
        for (int q = 0; q < F; ++q)
          features(l * F + q, m) += w * table_[base + q];
        if (corner_cache)
          (*corner_cache)[(static_cast<size_t>(m) * active_levels_ + l) * 8 + d] =
              base;
      }
    }
  }
}

void ImplicitField::encode_backward(const FieldForwardCache& cache,
                                    const Eigen::MatrixXd& dfeatures,
                                    FieldGradients& grads,
                                    Eigen::Matrix3Xd* point_grads) const {
  const Eigen::Index M = cache.points.cols();
  const int F = enc_.features_per_level;
  const int active = cache.active_levels;
  Vec3 inv_ext;
  for (int a = 0; a < 3; ++a) inv_ext[a] = 1.0 / enc_.domain.extent()[a];

  for (Eigen::Index m = 0; m < M; ++m) {
    double x[3];
    bool clamped[3];
    for (int a = 0; a < 3; ++a) {
      double v = (cache.points(a, m) - enc_.domain.lo[a]) * inv_ext[a];
      clamped[a] = v < 0.0 || v > 1.0;
      x[a] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }
    for (int l = 0; l < active; ++l) {
      const int N = enc_.level_resolution(l);
      int c[3];
      double f[3];
      for (int a = 0; a < 3; ++a) {
        const double g = x[a] * N;
        int ci = static_cast<int>(g);
        if (ci > N - 1) ci = N - 1;
        c[a] = ci;
        f[a] = g - ci;
      }
      double dg[3] = {0, 0, 0};
      for (int d = 0; d < 8; ++d) {
        const uint32_t base =
            cache.corner_idx[(static_cast<size_t>(m) * active + l) * 8 + d];
        const double wx = (d & 1) ? f[0] : 1.0 - f[0];
        const double wy = (d & 2) ? f[1] : 1.0 - f[1];
        const double wz = (d & 4) ? f[2] : 1.0 - f[2];
        const double w = wx * wy * wz;
        double s = 0.0;
        for (int q = 0; q < F; ++q) {
          const double up = dfeatures(l * F + q, m);
          grads.add_table(base + q, w * up);
          s += table_[base + q] * up;
        }
        if (point_grads) {
          dg[0] += s * ((d & 1) ? 1.0 : -1.0) * wy * wz;
          dg[1] += s * ((d & 2) ? 1.0 : -1.0) * wx * wz;
          dg[2] += s * ((d & 4) ? 1.0 : -1.0) * wx * wy;
        }
      }
      if (point_grads) {
        for (int a = 0; a < 3; ++a) {
          if (!clamped[a]) (*point_grads)(a, m) += dg[a] * N * inv_ext[a];
        }
      }
    }
  }
}

Eigen::VectorXd ImplicitField::evaluate(const Eigen::Matrix3Xd& points) const {
  Eigen::MatrixXd act;
  encode(points, act, nullptr);
  const int H = mlpc_.hidden_layers;
  Eigen::MatrixXd z;
  for (int i = 0; i < H; ++i) {
    z.noalias() = mlp_.W[i] * act;
    z.colwise() += mlp_.b[i];
    act = (mlpc_.omega0 * z).array().sin();
  }
  Eigen::VectorXd out = (mlp_.W[H] * act).transpose();
  out.array() += mlp_.b[H](0);
  out = 1.0 / (1.0 + (-out.array()).exp());
  return out;
}

double ImplicitField::evaluate_one(const Vec3& p) const {
  Eigen::Matrix3Xd pts(3, 1);
  pts.col(0) = p;
  return evaluate(pts)(0);
}

Eigen::VectorXd ImplicitField::forward(const Eigen::Matrix3Xd& points,
                                       FieldForwardCache& cache) const {
  cache.points = points;
  cache.active_levels = active_levels_;
  encode(points, cache.features, &cache.corner_idx);

  const int H = mlpc_.hidden_layers;
  cache.A.resize(H);
  cache.C.resize(H);
  Eigen::MatrixXd z;
  const Eigen::MatrixXd* prev = &cache.features;
  for (int i = 0; i < H; ++i) {
    z.noalias() = mlp_.W[i] * (*prev);
    z.colwise() += mlp_.b[i];
    sin_and_scaled_cos(z, mlpc_.omega0, cache.A[i], cache.C[i]);
    prev = &cache.A[i];
  }
  Eigen::VectorXd out = (mlp_.W[H] * (*prev)).transpose();
  out.array() += mlp_.b[H](0);
  cache.y = 1.0 / (1.0 + (-out.array()).exp());
  return cache.y;
}

void ImplicitField::backward(const FieldForwardCache& cache,
                             const Eigen::VectorXd& upstream,
                             FieldGradients& grads,
                             Eigen::Matrix3Xd* point_grads) const {
  const Eigen::Index M = cache.points.cols();
  if (upstream.size() != M)
    throw std::invalid_argument("upstream size does not match cached batch");
  const int H = mlpc_.hidden_layers;

  // Output squash: dL/dz_out = dL/dy * y * (1 - y)
  Eigen::RowVectorXd dz =
      (upstream.array() * cache.y.array() * (1.0 - cache.y.array()))
          .transpose();
  grads.W[H].noalias() += dz * cache.A[H - 1].transpose();
  grads.b[H](0) += dz.sum();

  Eigen::MatrixXd G;
  G.noalias() = mlp_.W[H].transpose() * dz;
  Eigen::MatrixXd next;
  for (int i = H - 1; i >= 0; --i) {
    G.array() *= cache.C[i].array();  // dL/dZ_i
    const Eigen::MatrixXd& Aprev = (i == 0) ? cache.features : cache.A[i - 1];
    grads.W[i].noalias() += G * Aprev.transpose();
    grads.b[i].noalias() += G.rowwise().sum();
    if (i == 0) {
      next.noalias() = mlp_.W[0].transpose() * G;  // dL/dfeatures
    } else {
      next.noalias() = mlp_.W[i].transpose() * G;
      G.swap(next);
    }
  }
  if (point_grads) point_grads->setZero(3, M);
  encode_backward(cache, next, grads, point_grads);
}

void FieldGradients::init(const ImplicitField& field) {
  table.assign(field.table_param_count(), 0.0);
  stamp_.assign(field.table_param_count(), 0u);
  stamp_id_ = 0;
  touched.clear();
  const MlpParams& p = field.mlp();
  W.resize(p.W.size());
  b.resize(p.b.size());
  for (size_t i = 0; i < p.W.size(); ++i) {
    W[i] = Eigen::MatrixXd::Zero(p.W[i].rows(), p.W[i].cols());
    b[i] = Eigen::VectorXd::Zero(p.b[i].size());
  }
}

void FieldGradients::begin_batch() {
  touched.clear();
  ++stamp_id_;
  if (stamp_id_ == 0) {  // wrapped; restart stamps
    std::fill(stamp_.begin(), stamp_.end(), 0u);
    stamp_id_ = 1;
  }
  for (size_t i = 0; i < W.size(); ++i) {
    W[i].setZero();
    b[i].setZero();
  }
}

}  // namespace usrecon
