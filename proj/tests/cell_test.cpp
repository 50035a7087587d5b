#include <cmath>
#include <vector>

#include <doctest.h>

#include "usrecon/cell.hpp"
#include "usrecon/field.hpp"
#include "usrecon/rng.hpp"

using namespace usrecon;

namespace {

ImplicitField rough_field(uint64_t seed) {
  HashEncodingConfig enc;
  enc.num_levels = 4;
  enc.features_per_level = 2;
  enc.table_size_log2 = 6;
  enc.base_resolution = 4;
  enc.per_level_scale = 1.5;
  enc.domain.lo = Vec3(-4, -4, -4);
  enc.domain.hi = Vec3(4, 4, 4);
  MlpConfig mlp;
  mlp.hidden_layers = 2;
  mlp.hidden_dim = 16;
  ImplicitField f(enc, mlp);
  f.init_params(seed);
  SplitMix sm(seed ^ 0x77);
  for (double& v : f.table()) v = 0.6 * (sm.uniform() - 0.5);
  return f;
}

// Midpoint-rule mean of the field over each subcell along the cell axis; the
// Monte Carlo estimate must agree within its own standard error.
double quadrature_reference(const ImplicitField& field, const Vec3& p,
                            const Vec3& n, const CellConfig& cfg,
                            std::vector<double>* subcell_var) {
  const SubcellLayout layout =
      subcell_layout(cfg.num_subcells, cfg.slice_thickness);
  const std::vector<double> w =
      gaussian_weights(layout, cfg.resolved_sigma());
  const int Q = 512;
  double total = 0.0;
  if (subcell_var) subcell_var->assign(layout.centers.size(), 0.0);
  for (size_t k = 0; k < layout.centers.size(); ++k) {
    Eigen::Matrix3Xd pts(3, Q);
    for (int q = 0; q < Q; ++q) {
      const double u = (q + 0.5) / Q;  // [0,1) midpoint
      const double off =
          layout.centers[k] + (2.0 * u - 1.0) * layout.half_width;
      pts.col(q) = p + off * n;
    }
    const Eigen::VectorXd vals = field.evaluate(pts);
    const double mean = vals.mean();
    total += w[k] * mean;
    if (subcell_var)
      (*subcell_var)[k] = vals.array().square().mean() - mean * mean;
  }
  return total;
}

}  // namespace

TEST_CASE("subcell_layout: exact centers and half width") {
  const SubcellLayout l = subcell_layout(4, 3.0);
  REQUIRE(l.centers.size() == 4);
  CHECK(l.half_width == 0.375);
  CHECK(l.centers[0] == -1.125);
  CHECK(l.centers[1] == -0.375);
  CHECK(l.centers[2] == 0.375);
  CHECK(l.centers[3] == 1.125);

  const SubcellLayout one = subcell_layout(1, 2.0);
  CHECK(one.centers.size() == 1);
  CHECK(one.centers[0] == 0.0);
  CHECK(one.half_width == 1.0);

  CHECK_THROWS_AS(subcell_layout(0, 3.0), std::invalid_argument);
  CHECK_THROWS_AS(subcell_layout(4, 0.0), std::invalid_argument);
}

TEST_CASE("gaussian_weights: normalized, symmetric, peaked at the center") {
  const SubcellLayout l = subcell_layout(8, 3.0);
  const std::vector<double> w = gaussian_weights(l, 0.75);
  REQUIRE(w.size() == 8);
  double sum = 0.0;
  for (double v : w) sum += v;
  CHECK(std::abs(sum - 1.0) <= 1e-15);
  for (int k = 0; k < 4; ++k) {
    CHECK(w[k] == doctest::Approx(w[7 - k]).epsilon(1e-14));
  }
  CHECK(w[3] > w[0]);

  const std::vector<double> single =
      gaussian_weights(subcell_layout(1, 2.0), 0.5);
  CHECK(single[0] == 1.0);

  CHECK_THROWS_AS(gaussian_weights(l, 0.0), std::invalid_argument);
}

TEST_CASE("gaussian_weights: normalization holds across random shapes") {
  SplitMix sm(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const int K = 1 + static_cast<int>(sm.uniform_int(16));
    const double st = 0.5 + 4.5 * sm.uniform();
    const double sigma = 0.1 + 2.0 * sm.uniform();
    const std::vector<double> w =
        gaussian_weights(subcell_layout(K, st), sigma);
    double sum = 0.0;
    for (double v : w) sum += v;
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    for (double v : w) CHECK(v >= 0.0);
  }
}

TEST_CASE("subcell_offsets: stratified ranges and key determinism") {
  CellConfig cfg;
  cfg.num_subcells = 4;
  cfg.num_samples = 3;
  cfg.slice_thickness = 3.0;
  const SubcellLayout l = subcell_layout(cfg.num_subcells, cfg.slice_thickness);
  const CounterRng rng{77};

  std::vector<double> offs;
  subcell_offsets(cfg, l, rng, 2, 5, 1, offs);
  REQUIRE(offs.size() == 12);
  for (int k = 0; k < 4; ++k) {
    for (int j = 0; j < 3; ++j) {
      const double o = offs[k * 3 + j];
      CHECK(o >= l.centers[k] - l.half_width);
      CHECK(o < l.centers[k] + l.half_width);
    }
  }

  std::vector<double> again;
  subcell_offsets(cfg, l, rng, 2, 5, 1, again);
  CHECK(offs == again);

  std::vector<double> other;
  subcell_offsets(cfg, l, rng, 2, 5, 2, other);  // different epoch
  CHECK(offs != other);
}

TEST_CASE("predict_intensity: constant field reproduces the constant") {
  // All-zero parameters squash to exactly 1/2 everywhere.
  HashEncodingConfig enc;
  enc.num_levels = 2;
  enc.features_per_level = 2;
  enc.table_size_log2 = 4;
  enc.base_resolution = 4;
  enc.domain.lo = Vec3(-4, -4, -4);
  enc.domain.hi = Vec3(4, 4, 4);
  MlpConfig mlp;
  mlp.hidden_layers = 1;
  mlp.hidden_dim = 8;
  ImplicitField f(enc, mlp);  // params stay zero

  CellConfig cfg;
  cfg.num_subcells = 8;
  cfg.num_samples = 2;
  cfg.slice_thickness = 3.0;
  const CounterRng rng{1};
  const CellPrediction pred =
      predict_intensity(f, Vec3(0.1, 0.2, 0.3), Vec3(0, 0, 1), cfg, rng, 0, 0, 0);
  CHECK(std::abs(pred.value - 0.5) <= 1e-12);
  REQUIRE(pred.subcell_means.size() == 8);
  for (double m : pred.subcell_means) CHECK(m == 0.5);
}

TEST_CASE("predict_intensity: agrees with dense quadrature within MC error") {
  CellConfig cfg;
  cfg.num_subcells = 6;
  cfg.num_samples = 64;
  cfg.slice_thickness = 3.0;
  const Vec3 n = Vec3(0.3, -0.5, 0.8).normalized();

  for (uint64_t fs : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    const ImplicitField field = rough_field(fs);
    const Vec3 p(0.2 * static_cast<double>(fs) - 0.5, 0.1, -0.2);
    std::vector<double> var;
    const double ref = quadrature_reference(field, p, n, cfg, &var);
    const std::vector<double> w = gaussian_weights(
        subcell_layout(cfg.num_subcells, cfg.slice_thickness),
        cfg.resolved_sigma());
    double se2 = 0.0;
    for (size_t k = 0; k < var.size(); ++k)
      se2 += w[k] * w[k] * var[k] / cfg.num_samples;
    const double se = std::sqrt(se2);

    const CounterRng rng{fs * 31 + 7};
    const CellPrediction pred =
        predict_intensity(field, p, n, cfg, rng, 0, 0, 0);
    CHECK_MESSAGE(std::abs(pred.value - ref) <= 3.5 * se + 1e-6,
                  "field seed " << fs << ": mc " << pred.value << " ref "
                                << ref << " se " << se);
  }
}

TEST_CASE("predict_intensity: estimator variance scales as 1/num_samples") {
  const ImplicitField field = rough_field(21);
  const Vec3 p(0.3, -0.1, 0.4);
  const Vec3 n = Vec3(0.2, 0.9, -0.4).normalized();
  CellConfig c1, c4;
  c1.num_subcells = c4.num_subcells = 4;
  c1.slice_thickness = c4.slice_thickness = 3.0;
  c1.num_samples = 1;
  c4.num_samples = 4;

  const CounterRng rng{5};
  const int n_keys = 2000;
  auto sample_var = [&](const CellConfig& cfg) {
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n_keys; ++i) {
      const double v =
          predict_intensity(field, p, n, cfg, rng, 0, i, 0).value;
      s += v;
      s2 += v * v;
    }
    const double mean = s / n_keys;
    return s2 / n_keys - mean * mean;
  };
  const double v1 = sample_var(c1);
  const double v4 = sample_var(c4);
  REQUIRE(v4 > 0.0);
  const double ratio = v1 / v4;
  CHECK(ratio > 2.8);
  CHECK(ratio < 5.6);
}

TEST_CASE("volume_regularizer: exact weighted spread") {
  CHECK(volume_regularizer({0.25, 0.75}, {0.5, 0.5}, 0.5) == 0.0625);
  CHECK(volume_regularizer({0.5, 0.5}, {0.5, 0.5}, 0.5) == 0.0);
  CHECK(volume_regularizer({1.0}, {1.0}, 1.0) == 0.0);
  CHECK_THROWS_AS(volume_regularizer({0.1}, {0.5, 0.5}, 0.1),
                  std::invalid_argument);
}

TEST_CASE("cell config validation") {
  CellConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.resolved_sigma() == 0.75);  // S_t / 4 default
  c.sigma = 0.4;
  CHECK(c.resolved_sigma() == 0.4);

  CellConfig bad;
  bad.num_subcells = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = CellConfig{};
  bad.num_samples = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = CellConfig{};
  bad.slice_thickness = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
