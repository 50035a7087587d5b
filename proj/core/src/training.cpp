#include "usrecon/training.hpp"

#include <algorithm>
#include <cmath>

#include "usrecon/rng.hpp"

namespace usrecon {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEpsMlp = 1e-8;
// Table entries see sparse, tiny gradients; the usual 1e-8 floor would stall
// their effective step size.
constexpr double kAdamEpsTable = 1e-15;

struct FramePrecomp {
  Mat3 R, E, Et, JrT, R0;
  Vec3 t, n;
};

std::vector<FramePrecomp> precompute_frames(const std::vector<RigidPose>& base,
                                            const std::vector<PoseParam>& delta) {
  std::vector<FramePrecomp> out(base.size());
  for (size_t i = 0; i < base.size(); ++i) {
    FramePrecomp& f = out[i];
    f.R0 = base[i].R;
    f.E = so3_exp(delta[i].omega);
    f.Et = f.E.transpose();
    f.JrT = so3_right_jacobian(delta[i].omega).transpose();
    f.R = f.E * base[i].R;
    f.t = base[i].t + delta[i].tau;
    f.n = f.R.col(0).cross(f.R.col(1));
  }
  return out;
}

void check_finite(double v, const char* component) {
  if (!std::isfinite(v)) {
    throw TrainingError(std::string("non-finite ") + component +
                        " in objective");
  }
}

struct AdamMoments {
  Eigen::ArrayXXd m, v;

  void init(Eigen::Index rows, Eigen::Index cols) {
    m = Eigen::ArrayXXd::Zero(rows, cols);
    v = Eigen::ArrayXXd::Zero(rows, cols);
  }
  void apply(Eigen::Ref<Eigen::MatrixXd> p, const Eigen::MatrixXd& g, double lr,
             double bc1, double bc2, double eps) {
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g.array();
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.array().square();
    p.array() -= lr * (m / bc1) / ((v / bc2).sqrt() + eps);
  }
};

// Moment updates restricted to entries touched this batch; untouched entries
// would receive exactly zero gradient, so skipping their moment decay trades a
// little Adam semantics for not sweeping the full table every step.
struct TableAdam {
  std::vector<double> m, v;

  void init(size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
  }
  void apply(std::vector<double>& p, const FieldGradients& g, double lr,
             double bc1, double bc2) {
    for (uint32_t idx : g.touched) {
      const double gr = g.table[idx];
      const double mi = (m[idx] = kAdamBeta1 * m[idx] + (1.0 - kAdamBeta1) * gr);
      const double vi =
          (v[idx] = kAdamBeta2 * v[idx] + (1.0 - kAdamBeta2) * gr * gr);
      p[idx] -= lr * (mi / bc1) / (std::sqrt(vi / bc2) + kAdamEpsTable);
    }
  }
};

Vec3 rotation_axis(const Mat3& R) {
  Eigen::AngleAxisd aa(R);
  return aa.axis();
}

}  // namespace

double penalty(double x, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("penalty interval is empty");
  const double e = std::max(std::max(lo - x, x - hi), 0.0);
  return e * e;
}

double penalty_derivative(double x, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("penalty interval is empty");
  if (x < lo) return -2.0 * (lo - x);
  if (x > hi) return 2.0 * (x - hi);
  return 0.0;
}

PairWindowBounds compute_window_bounds(const std::vector<RigidPose>& initial,
                                       int window) {
  if (window < 0) throw std::invalid_argument("window must be >= 0");
  PairWindowBounds b;
  const int n = static_cast<int>(initial.size());
  if (n < 2) return b;

  const int pairs = n - 1;
  std::vector<double> dist(pairs), angle(pairs);
  for (int i = 0; i < pairs; ++i) {
    const Vec3 ni = initial[i].R.col(0).cross(initial[i].R.col(1));
    dist[i] = std::abs((initial[i + 1].t - initial[i].t).dot(ni));
    angle[i] = geodesic_angle(initial[i].R, initial[i + 1].R);
  }
  b.dist_lo.resize(pairs);
  b.dist_hi.resize(pairs);
  b.angle_lo.resize(pairs);
  b.angle_hi.resize(pairs);
  for (int i = 0; i < pairs; ++i) {
    const int lo = std::max(0, i - window);
    const int hi = std::min(pairs - 1, i + window);
    double dmin = dist[lo], dmax = dist[lo], amin = angle[lo], amax = angle[lo];
    for (int j = lo + 1; j <= hi; ++j) {
      dmin = std::min(dmin, dist[j]);
      dmax = std::max(dmax, dist[j]);
      amin = std::min(amin, angle[j]);
      amax = std::max(amax, angle[j]);
    }
    b.dist_lo[i] = dmin;
    b.dist_hi[i] = dmax;
    b.angle_lo[i] = amin;
    b.angle_hi[i] = amax;
  }
  return b;
}

PoseRegTerms pose_regularizers(const std::vector<RigidPose>& poses,
                               const PairWindowBounds& bounds) {
  PoseRegTerms t;
  if (bounds.num_pairs() == 0) return t;
  if (poses.size() != bounds.num_pairs() + 1)
    throw std::invalid_argument("bounds do not match pose count");
  for (size_t i = 0; i < bounds.num_pairs(); ++i) {
    const Vec3 ni = poses[i].R.col(0).cross(poses[i].R.col(1));
    const double d = std::abs((poses[i + 1].t - poses[i].t).dot(ni));
    const double pd = penalty(d, bounds.dist_lo[i], bounds.dist_hi[i]);
    if (pd > t.l_dist || t.argmax_dist < 0) {
      t.l_dist = pd;
      t.argmax_dist = static_cast<int>(i);
    }
    const double th = geodesic_angle(poses[i].R, poses[i + 1].R);
    const double pa = penalty(th, bounds.angle_lo[i], bounds.angle_hi[i]);
    if (pa > t.l_angle || t.argmax_angle < 0) {
      t.l_angle = pa;
      t.argmax_angle = static_cast<int>(i);
    }
  }
  return t;
}

PoseRegTerms pose_regularizers_with_grad(const std::vector<RigidPose>& base,
                                         const std::vector<PoseParam>& delta,
                                         const PairWindowBounds& bounds,
                                         double scale_dist, double scale_angle,
                                         std::vector<Vec6>& grad) {
  PoseRegTerms t;
  if (bounds.num_pairs() == 0) return t;
  if (base.size() != bounds.num_pairs() + 1 || delta.size() != base.size())
    throw std::invalid_argument("bounds do not match pose count");
  if (grad.size() != base.size())
    throw std::invalid_argument("gradient buffer size mismatch");

  const std::vector<FramePrecomp> fp = precompute_frames(base, delta);
  std::vector<RigidPose> cur(base.size());
  for (size_t i = 0; i < base.size(); ++i) {
    cur[i].R = fp[i].R;
    cur[i].t = fp[i].t;
  }
  t = pose_regularizers(cur, bounds);

  if (t.argmax_dist >= 0) {
    const int i = t.argmax_dist;
    const Vec3 v = cur[i + 1].t - cur[i].t;
    const Vec3 ni = fp[i].n;
    const double dot = v.dot(ni);
    const double d = std::abs(dot);
    const double dpen =
        penalty_derivative(d, bounds.dist_lo[i], bounds.dist_hi[i]);
    if (dpen != 0.0) {
      const double sgn = dot >= 0.0 ? 1.0 : -1.0;
      const double g = scale_dist * dpen * sgn;
      grad[i + 1].tail<3>() += g * ni;
      grad[i].tail<3>() -= g * ni;
      const Vec3 zi = fp[i].R0.col(0).cross(fp[i].R0.col(1));
      grad[i].head<3>() += g * (fp[i].JrT * zi.cross(fp[i].Et * v));
    }
  }
  if (t.argmax_angle >= 0) {
    const int i = t.argmax_angle;
    const double th = geodesic_angle(cur[i].R, cur[i + 1].R);
    const double dpen =
        penalty_derivative(th, bounds.angle_lo[i], bounds.angle_hi[i]);
    if (dpen != 0.0 && th > 1e-9 && th < kPi - 1e-6) {
      const double g = scale_angle * dpen;
      const Mat3 Sn = fp[i + 1].R0 * cur[i].R.transpose() * fp[i + 1].E;
      grad[i + 1].head<3>() += g * (fp[i + 1].JrT * rotation_axis(Sn));
      const Mat3 Sp = fp[i].R0 * cur[i + 1].R.transpose() * fp[i].E;
      grad[i].head<3>() += g * (fp[i].JrT * rotation_axis(Sp));
    }
  }
  return t;
}

double intensity_loss(const Eigen::VectorXd& predicted,
                      const Eigen::VectorXd& observed) {
  if (predicted.size() != observed.size() || predicted.size() == 0)
    throw std::invalid_argument("prediction/observation size mismatch");
  return (predicted - observed).squaredNorm() / predicted.size();
}

int subcell_count_at_epoch(int epoch, int total_epochs, int k_init,
                           int k_final) {
  if (total_epochs < 1 || epoch < 0 || epoch >= total_epochs)
    throw std::invalid_argument("epoch outside [0, total_epochs)");
  if (k_init < 1 || k_final < k_init)
    throw std::invalid_argument("need 1 <= k_init <= k_final");
  const int ramp = std::max(1, static_cast<int>(std::floor(0.6 * total_epochs)));
  if (epoch >= ramp) return k_final;
  return static_cast<int>(
      std::ceil(k_init + (k_final - k_init) * static_cast<double>(epoch) / ramp));
}

int active_levels_at_epoch(int epoch, int total_epochs, int start_levels,
                           int num_levels) {
  if (total_epochs < 1 || epoch < 0 || epoch >= total_epochs)
    throw std::invalid_argument("epoch outside [0, total_epochs)");
  if (start_levels < 1 || num_levels < 1)
    throw std::invalid_argument("level counts must be positive");
  const int a0 = std::min(start_levels, num_levels);
  if (total_epochs == 1) return num_levels;
  const double f =
      a0 + (num_levels - a0) * static_cast<double>(epoch) / (total_epochs - 1);
  int a = static_cast<int>(std::llround(f));
  return std::max(1, std::min(a, num_levels));
}

double pose_lr_scale_at_epoch(int epoch, int total_epochs, double final_scale) {
  if (total_epochs < 1 || epoch < 0 || epoch >= total_epochs)
    throw std::invalid_argument("epoch outside [0, total_epochs)");
  if (!(final_scale > 0))
    throw std::invalid_argument("final_scale must be positive");
  const int ramp = std::max(1, static_cast<int>(std::floor(0.6 * total_epochs)));
  if (epoch <= ramp || total_epochs - 1 <= ramp) return 1.0;
  const double t = static_cast<double>(epoch - ramp) /
                   static_cast<double>(total_epochs - 1 - ramp);
  return 1.0 + (final_scale - 1.0) * t;
}

void TrainConfig::validate() const {
  cell.validate();
  if (k_init < 1 || k_init > cell.num_subcells)
    throw std::invalid_argument("k_init must be in [1, num_subcells]");
  if (start_levels < 1)
    throw std::invalid_argument("start_levels must be >= 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (chunk_pixels < 1) throw std::invalid_argument("chunk_pixels must be >= 1");
  if (!(lr_table > 0) || !(lr_mlp > 0) || !(lr_pose > 0))
    throw std::invalid_argument("learning rates must be positive");
  if (!(pose_lr_final > 0))
    throw std::invalid_argument("pose_lr_final must be positive");
  if (!(lr_pose_rot_scale > 0))
    throw std::invalid_argument("lr_pose_rot_scale must be positive");
  if (window < 0) throw std::invalid_argument("window must be >= 0");
  if (weights.beta_dist < 0 || weights.beta_angle < 0 || weights.beta_volume < 0)
    throw std::invalid_argument("loss weights must be >= 0");
}

LossBreakdown total_loss(const FrameSequence& seq, const ImplicitField& field,
                         const std::vector<PoseParam>& deltas,
                         const PairWindowBounds& bounds,
                         const std::vector<uint32_t>& batch_pixels, int epoch,
                         const CellConfig& cell, const LossWeights& weights,
                         const AblationFlags& flags, uint64_t seed,
                         int chunk_pixels, FieldGradients* field_grads,
                         std::vector<Vec6>* pose_grads) {
  if (batch_pixels.empty()) throw std::invalid_argument("empty pixel batch");
  if (deltas.size() != seq.poses.size())
    throw std::invalid_argument("pose delta count does not match frames");
  if (chunk_pixels < 1) throw std::invalid_argument("chunk_pixels must be >= 1");
  if (pose_grads && !field_grads)
    throw std::invalid_argument("pose gradients require field gradients");
  if (pose_grads && pose_grads->size() != deltas.size())
    throw std::invalid_argument("pose gradient buffer size mismatch");

  CellConfig cc = cell;
  if (!flags.cell_model) {
    cc.num_subcells = 1;
    cc.num_samples = 1;
  }
  cc.validate();
  const int K = cc.num_subcells;
  const int S = cc.num_samples;
  const int spp = K * S;
  const SubcellLayout layout = subcell_layout(K, cc.slice_thickness);
  const std::vector<double> eta = gaussian_weights(layout, cc.resolved_sigma());
  const CounterRng crng{seed};

  const std::vector<FramePrecomp> fp = precompute_frames(seq.poses, deltas);
  const int N = seq.num_frames();
  const int W = seq.width;
  const size_t frame_px = static_cast<size_t>(W) * seq.height;
  const double B = static_cast<double>(batch_pixels.size());

  double li_sum = 0.0, rv_sum = 0.0;

  FieldForwardCache cache;
  Eigen::Matrix3Xd pts, point_grads;
  Eigen::VectorXd upstream;
  std::vector<double> offs;
  std::vector<double> chunk_off;
  std::vector<int> chunk_frame, chunk_w, chunk_h;
  std::vector<double> chunk_obs;

  for (size_t start = 0; start < batch_pixels.size();
       start += static_cast<size_t>(chunk_pixels)) {
    const size_t np =
        std::min(static_cast<size_t>(chunk_pixels), batch_pixels.size() - start);
    const Eigen::Index M = static_cast<Eigen::Index>(np) * spp;
    pts.resize(3, M);
    chunk_off.resize(M);
    chunk_frame.resize(np);
    chunk_w.resize(np);
    chunk_h.resize(np);
    chunk_obs.resize(np);

    for (size_t i = 0; i < np; ++i) {
      const uint32_t id = batch_pixels[start + i];
      const int f = static_cast<int>(id / frame_px);
      if (f >= N) throw std::invalid_argument("pixel id outside sequence");
      const uint32_t rem = static_cast<uint32_t>(id % frame_px);
      const int h = static_cast<int>(rem / W);
      const int w = static_cast<int>(rem % W);
      const FramePrecomp& fr = fp[f];
      const Vec3 p =
          fr.R * Vec3(w * seq.d_pixel, h * seq.d_pixel, 0.0) + fr.t;
      if (flags.cell_model) {
        subcell_offsets(cc, layout, crng, f, rem, epoch, offs);
      } else {
        offs.assign(1, 0.0);
      }
      for (int s = 0; s < spp; ++s) {
        const Eigen::Index col = static_cast<Eigen::Index>(i) * spp + s;
        pts.col(col) = p + offs[s] * fr.n;
        chunk_off[col] = offs[s];
      }
      chunk_frame[i] = f;
      chunk_w[i] = w;
      chunk_h[i] = h;
      chunk_obs[i] = seq.pixel(f, w, h);
    }

    const Eigen::VectorXd vals =
        field_grads ? field.forward(pts, cache) : field.evaluate(pts);

    if (field_grads) upstream.resize(M);
    std::vector<double> means(K);
    for (size_t i = 0; i < np; ++i) {
      const Eigen::Index base = static_cast<Eigen::Index>(i) * spp;
      double ghat = 0.0;
      for (int k = 0; k < K; ++k) {
        double m = 0.0;
        for (int j = 0; j < S; ++j) m += vals(base + k * S + j);
        m /= S;
        means[k] = m;
        ghat += eta[k] * m;
      }
      const double resid = ghat - chunk_obs[i];
      li_sum += resid * resid;
      double rv = 0.0;
      for (int k = 0; k < K; ++k) {
        const double d = means[k] - ghat;
        rv += eta[k] * d * d;
      }
      rv_sum += rv;
      if (field_grads) {
        for (int k = 0; k < K; ++k) {
          double coef = (2.0 / B) * resid;
          if (flags.volume_regularization) {
            coef += (2.0 * weights.beta_volume / B) * (means[k] - ghat);
          }
          coef *= eta[k] / S;
          for (int j = 0; j < S; ++j) upstream(base + k * S + j) = coef;
        }
      }
    }

    if (field_grads) {
      field.backward(cache, upstream, *field_grads,
                     pose_grads ? &point_grads : nullptr);
      if (pose_grads) {
        for (size_t i = 0; i < np; ++i) {
          const FramePrecomp& fr = fp[chunk_frame[i]];
          const double wx = chunk_w[i] * seq.d_pixel;
          const double wy = chunk_h[i] * seq.d_pixel;
          Vec3 tau_acc = Vec3::Zero();
          Vec3 om_acc = Vec3::Zero();
          for (int s = 0; s < spp; ++s) {
            const Eigen::Index col = static_cast<Eigen::Index>(i) * spp + s;
            const Vec3 g3 = point_grads.col(col);
            tau_acc += g3;
            const Vec3 a = fr.R0 * Vec3(wx, wy, chunk_off[col]);
            om_acc += fr.JrT * a.cross(fr.Et * g3);
          }
          (*pose_grads)[chunk_frame[i]].head<3>() += om_acc;
          (*pose_grads)[chunk_frame[i]].tail<3>() += tau_acc;
        }
      }
    }
  }

  LossBreakdown lb;
  lb.l_i = li_sum / B;
  lb.r_v = rv_sum / B;

  if (flags.pose_regularization && bounds.num_pairs() > 0) {
    PoseRegTerms terms;
    if (pose_grads) {
      terms = pose_regularizers_with_grad(seq.poses, deltas, bounds,
                                          weights.beta_dist, weights.beta_angle,
                                          *pose_grads);
    } else {
      std::vector<RigidPose> cur(seq.poses.size());
      for (size_t i = 0; i < cur.size(); ++i)
        cur[i] = exp_map(deltas[i], seq.poses[i]);
      terms = pose_regularizers(cur, bounds);
    }
    lb.l_dist = terms.l_dist;
    lb.l_angle = terms.l_angle;
  }

  lb.chi = lb.l_i;
  if (flags.pose_regularization) {
    lb.chi += weights.beta_dist * lb.l_dist + weights.beta_angle * lb.l_angle;
  }
  if (flags.volume_regularization) {
    lb.chi += weights.beta_volume * lb.r_v;
  }

  check_finite(lb.l_i, "intensity term");
  check_finite(lb.l_dist, "plane-offset penalty");
  check_finite(lb.l_angle, "plane-angle penalty");
  check_finite(lb.r_v, "subcell-variance term");
  check_finite(lb.chi, "total objective");
  return lb;
}

TrainResult train(const FrameSequence& seq, ImplicitField& field,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  seq.validate();
  TrainConfig conf = cfg;
  conf.cell.slice_thickness = seq.slice_thickness;
  conf.validate();

  const int N = seq.num_frames();
  const size_t total_px =
      static_cast<size_t>(N) * seq.width * seq.height;
  if (total_px > 0xffffffffull)
    throw std::invalid_argument("sequence too large for 32-bit pixel ids");

  const PairWindowBounds bounds = compute_window_bounds(seq.poses, conf.window);

  std::vector<PoseParam> deltas(N);
  FieldGradients fg;
  fg.init(field);
  std::vector<Vec6> pg(N, Vec6::Zero());

  TableAdam table_adam;
  table_adam.init(field.table_param_count());
  const int layers = static_cast<int>(field.mlp().W.size());
  std::vector<AdamMoments> w_adam(layers), b_adam(layers);
  for (int i = 0; i < layers; ++i) {
    w_adam[i].init(field.mlp().W[i].rows(), field.mlp().W[i].cols());
    b_adam[i].init(field.mlp().b[i].size(), 1);
  }
  AdamMoments omega_adam, tau_adam;
  omega_adam.init(3, N);
  tau_adam.init(3, N);
  Eigen::MatrixXd omega_mat(3, N), tau_mat(3, N);
  Eigen::MatrixXd omega_grad(3, N), tau_grad(3, N);
  omega_mat.setZero();
  tau_mat.setZero();

  std::vector<uint32_t> order(total_px);
  for (size_t i = 0; i < total_px; ++i) order[i] = static_cast<uint32_t>(i);

  TrainResult res;
  std::vector<uint32_t> batch;
  int64_t step = 0;

  for (int e = 0; e < conf.epochs; ++e) {
    const int k_e = conf.flags.cell_model
                        ? subcell_count_at_epoch(e, conf.epochs, conf.k_init,
                                                 conf.cell.num_subcells)
                        : 1;
    CellConfig cc = conf.cell;
    cc.num_subcells = k_e;
    field.set_active_levels(active_levels_at_epoch(
        e, conf.epochs, conf.start_levels, field.encoding().num_levels));
    const double lr_pose_e =
        conf.lr_pose * pose_lr_scale_at_epoch(e, conf.epochs, conf.pose_lr_final);

    SplitMix shuffler(splitmix64(conf.seed ^ (0x9e3779b9ull + 0x1000ull * e)));
    deterministic_shuffle(order, shuffler);

    EpochTrace tr;
    tr.epoch = e;
    tr.subcells = k_e;
    tr.levels = field.active_levels();
    double px_sum = 0.0;

    for (size_t s = 0; s < total_px; s += conf.batch_size) {
      const size_t nb = std::min<size_t>(conf.batch_size, total_px - s);
      batch.assign(order.begin() + s, order.begin() + s + nb);

      fg.begin_batch();
      if (conf.flags.pose_refinement)
        std::fill(pg.begin(), pg.end(), Vec6::Zero());

      const LossBreakdown lb = total_loss(
          seq, field, deltas, bounds, batch, e, cc, conf.weights, conf.flags,
          conf.seed, conf.chunk_pixels, &fg,
          conf.flags.pose_refinement ? &pg : nullptr);

      ++step;
      const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));

      table_adam.apply(field.table(), fg, conf.lr_table, bc1, bc2);
      for (int i = 0; i < layers; ++i) {
        w_adam[i].apply(field.mlp().W[i], fg.W[i], conf.lr_mlp, bc1, bc2,
                        kAdamEpsMlp);
        b_adam[i].apply(field.mlp().b[i], fg.b[i], conf.lr_mlp, bc1, bc2,
                        kAdamEpsMlp);
      }
      if (conf.flags.pose_refinement) {
        for (int i = 0; i < N; ++i) {
          omega_grad.col(i) = pg[i].head<3>();
          tau_grad.col(i) = pg[i].tail<3>();
        }
        omega_adam.apply(omega_mat, omega_grad,
                         lr_pose_e * conf.lr_pose_rot_scale, bc1, bc2,
                         kAdamEpsMlp);
        tau_adam.apply(tau_mat, tau_grad, lr_pose_e, bc1, bc2, kAdamEpsMlp);
        for (int i = 0; i < N; ++i) {
          deltas[i].omega = omega_mat.col(i);
          deltas[i].tau = tau_mat.col(i);
        }
      }

      const double wgt = static_cast<double>(nb);
      tr.l_i += lb.l_i * wgt;
      tr.l_dist += lb.l_dist * wgt;
      tr.l_angle += lb.l_angle * wgt;
      tr.r_v += lb.r_v * wgt;
      tr.chi += lb.chi * wgt;
      px_sum += wgt;
    }

    tr.l_i /= px_sum;
    tr.l_dist /= px_sum;
    tr.l_angle /= px_sum;
    tr.r_v /= px_sum;
    tr.chi /= px_sum;
    double dt = 0.0, dr = 0.0;
    for (int i = 0; i < N; ++i) {
      dt += deltas[i].tau.norm();
      dr += deltas[i].omega.norm();
    }
    tr.mean_dt_mm = dt / N;
    tr.mean_dr_deg = dr / N * 180.0 / kPi;
    res.trace.push_back(tr);
    if (on_epoch) on_epoch(tr);
  }

  res.pose_params = deltas;
  res.refined_poses.resize(N);
  for (int i = 0; i < N; ++i)
    res.refined_poses[i] = exp_map(deltas[i], seq.poses[i]);
  return res;
}

}  // namespace usrecon
