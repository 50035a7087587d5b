#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "usrecon/geometry.hpp"

namespace usrecon {

struct DomainBox {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Ones();
  Vec3 extent() const { return hi - lo; }
};

struct HashEncodingConfig {
  int num_levels = 12;
  int features_per_level = 2;
  int table_size_log2 = 18;
  int base_resolution = 16;
  double per_level_scale = 1.5;
  DomainBox domain;

  uint32_t table_size() const { return 1u << table_size_log2; }
  int level_resolution(int level) const;
  int feature_dim() const { return num_levels * features_per_level; }
  size_t table_param_count() const {
    return static_cast<size_t>(num_levels) * table_size() * features_per_level;
  }
  void validate() const;
};

struct MlpConfig {
  int hidden_layers = 4;
  int hidden_dim = 128;
  double omega0 = 30.0;  // sinusoidal activation frequency
  void validate() const;
};

struct MlpParams {
  std::vector<Eigen::MatrixXd> W;  // hidden_layers + 1 entries
  std::vector<Eigen::VectorXd> b;
};

class ImplicitField;

// Parameter gradient accumulators. Table gradients are kept dense but the set
// of entries touched since begin_batch() is tracked, so optimizers can skip
// the untouched bulk of the table.
struct FieldGradients {
  std::vector<double> table;
  std::vector<uint32_t> touched;  // first-touch order
  std::vector<Eigen::MatrixXd> W;
  std::vector<Eigen::VectorXd> b;

  void init(const ImplicitField& field);
  void begin_batch();
  inline void add_table(uint32_t idx, double g) {
    if (stamp_[idx] != stamp_id_) {
      stamp_[idx] = stamp_id_;
      table[idx] = 0.0;
      touched.push_back(idx);
    }
    table[idx] += g;
  }

 private:
  std::vector<uint32_t> stamp_;
  uint32_t stamp_id_ = 0;
};

// Activations retained by forward() for the matching backward() call.
struct FieldForwardCache {
  Eigen::Matrix3Xd points;
  Eigen::MatrixXd features;              // feature_dim x M
  std::vector<Eigen::MatrixXd> A;        // sin activations per hidden layer
  std::vector<Eigen::MatrixXd> C;        // omega * cos of preactivations
  Eigen::VectorXd y;                     // squashed outputs
  std::vector<uint32_t> corner_idx;      // M * active_levels * 8 table indices
  int active_levels = 0;
};

// Continuous intensity model: multiresolution hash encoding feeding a
// sinusoidal MLP, output squashed to [0, 1]. Collisions in the hashed levels
// are unresolved by design; colliding vertices share one table entry and
// gradients accumulate there.
class ImplicitField {
 public:
  ImplicitField(const HashEncodingConfig& enc, const MlpConfig& mlp);

  void init_params(uint64_t seed);

  const HashEncodingConfig& encoding() const { return enc_; }
  const MlpConfig& mlp_config() const { return mlpc_; }

  // Coarse-to-fine control: features of levels >= k are zero and receive no
  // gradient. k in [1, num_levels].
  void set_active_levels(int k);
  int active_levels() const { return active_levels_; }

  // Values only, no caches kept. points is 3 x M.
  Eigen::VectorXd evaluate(const Eigen::Matrix3Xd& points) const;
  double evaluate_one(const Vec3& p) const;

  Eigen::VectorXd forward(const Eigen::Matrix3Xd& points,
                          FieldForwardCache& cache) const;
  // upstream = dL/d(output), length M. Accumulates into grads; when
  // point_grads is non-null it receives dL/d(point) per column (derivatives
  // are zero along axes clamped to the domain box).
  void backward(const FieldForwardCache& cache, const Eigen::VectorXd& upstream,
                FieldGradients& grads, Eigen::Matrix3Xd* point_grads) const;

  std::vector<double>& table() { return table_; }
  const std::vector<double>& table() const { return table_; }
  MlpParams& mlp() { return mlp_; }
  const MlpParams& mlp() const { return mlp_; }

  size_t table_param_count() const { return table_.size(); }
  size_t mlp_param_count() const;

 private:
  HashEncodingConfig enc_;
  MlpConfig mlpc_;
  int active_levels_;
  std::vector<double> table_;
  MlpParams mlp_;

  void encode(const Eigen::Matrix3Xd& pts, Eigen::MatrixXd& features,
              std::vector<uint32_t>* corner_cache) const;
  void encode_backward(const FieldForwardCache& cache,
                       const Eigen::MatrixXd& dfeatures, FieldGradients& grads,
                       Eigen::Matrix3Xd* point_grads) const;
};

}  // namespace usrecon
