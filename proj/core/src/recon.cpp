#include "usrecon/recon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace usrecon {

Volume query_volume(const ImplicitField& field, const VolumeGrid& grid,
                    int chunk_voxels) {
  grid.validate();
  if (chunk_voxels < 1)
    throw std::invalid_argument("chunk_voxels must be >= 1");
  Volume vol;
  vol.grid = grid;
  const size_t n = grid.count();
  vol.data.assign(n, 0.0f);

  Eigen::Matrix3Xd pts;
  size_t at = 0;
  while (at < n) {
    const size_t m = std::min<size_t>(chunk_voxels, n - at);
    pts.resize(3, static_cast<Eigen::Index>(m));
    for (size_t i = 0; i < m; ++i) {
      const size_t idx = at + i;
      const int x = static_cast<int>(idx % grid.nx);
      const int y = static_cast<int>((idx / grid.nx) % grid.ny);
      const int z = static_cast<int>(idx / (static_cast<size_t>(grid.nx) * grid.ny));
      pts.col(static_cast<Eigen::Index>(i)) = grid.center(x, y, z);
    }
    const Eigen::VectorXd vals = field.evaluate(pts);
    for (size_t i = 0; i < m; ++i)
      vol.data[at + i] = static_cast<float>(vals(static_cast<Eigen::Index>(i)));
    at += m;
  }
  return vol;
}

bool grid_within_domain(const VolumeGrid& grid, const DomainBox& domain) {
  grid.validate();
  const Vec3 lo = grid.center(0, 0, 0);
  const Vec3 hi = grid.center(grid.nx - 1, grid.ny - 1, grid.nz - 1);
  for (int a = 0; a < 3; ++a) {
    if (lo[a] < domain.lo[a] || hi[a] > domain.hi[a]) return false;
  }
  return true;
}

VnnResult vnn_reconstruct(const FrameSequence& seq,
                          const std::vector<RigidPose>& poses,
                          const VolumeGrid& grid) {
  seq.validate();
  grid.validate();
  if (poses.size() != static_cast<size_t>(seq.num_frames()))
    throw std::invalid_argument("pose count does not match frames");

  const size_t n = grid.count();
  std::vector<double> sum(n, 0.0);
  std::vector<uint32_t> cnt(n, 0);

  for (int f = 0; f < seq.num_frames(); ++f) {
    const Mat3& R = poses[f].R;
    const Vec3& t = poses[f].t;
    for (int h = 0; h < seq.height; ++h) {
      for (int w = 0; w < seq.width; ++w) {
        const Vec3 p =
            R * Vec3(w * seq.d_pixel, h * seq.d_pixel, 0.0) + t;
        bool inside = true;
        int ix[3];
        for (int a = 0; a < 3; ++a) {
          const double g = (p[a] - grid.origin[a]) / grid.spacing;
          const long long i = std::llround(g);
          if (i < 0 || i >= grid.dim(a)) {
            inside = false;
            break;
          }
          ix[a] = static_cast<int>(i);
        }
        if (!inside) continue;
        const size_t idx = grid.index(ix[0], ix[1], ix[2]);
        sum[idx] += seq.pixel(f, w, h);
        ++cnt[idx];
      }
    }
  }

  VnnResult res;
  res.volume.grid = grid;
  res.volume.data.assign(n, 0.0f);
  size_t filled = 0;
  for (size_t i = 0; i < n; ++i) {
    if (cnt[i]) {
      res.volume.data[i] = static_cast<float>(sum[i] / cnt[i]);
      ++filled;
    }
  }
  res.fill_ratio = static_cast<double>(filled) / n;
  return res;
}

double otsu_threshold(const std::vector<float>& values) {
  if (values.empty())
    throw std::invalid_argument("otsu_threshold on empty input");
  constexpr int kBins = 256;
  std::array<int64_t, kBins> hist{};
  for (float v : values) {
    double c = std::min(1.0, std::max(0.0, static_cast<double>(v)));
    int b = std::min(kBins - 1, static_cast<int>(c * kBins));
    ++hist[b];
  }
  const double total = static_cast<double>(values.size());
  double mu_total = 0.0;
  for (int b = 0; b < kBins; ++b)
    mu_total += (b + 0.5) / kBins * hist[b];
  mu_total /= total;

  double best = -1.0;
  int best_k = 0;
  double w0 = 0.0, m0 = 0.0;
  for (int k = 0; k < kBins - 1; ++k) {
    const double center = (k + 0.5) / kBins;
    w0 += hist[k] / total;
    m0 += center * hist[k] / total;
    if (w0 <= 0.0 || w0 >= 1.0) continue;
    const double mu0 = m0 / w0;
    const double mu1 = (mu_total - m0) / (1.0 - w0);
    const double var = w0 * (1.0 - w0) * (mu0 - mu1) * (mu0 - mu1);
    if (var > best) {
      best = var;
      best_k = k;
    }
  }
  // Boundary between bin best_k and best_k + 1; foreground is >= this.
  return static_cast<double>(best_k + 1) / kBins;
}

LineFitReport line_fit_error(const Volume& vol, const LineFitOptions& opt) {
  vol.grid.validate();
  if (vol.data.size() != vol.grid.count())
    throw std::invalid_argument("volume data size does not match grid");
  if (opt.axis < 0 || opt.axis > 2)
    throw std::invalid_argument("slicing axis must be 0, 1, or 2");

  int lo[3], hi[3];
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max(0, opt.lo[a]);
    hi[a] = opt.hi[a] < 0 ? vol.grid.dim(a) - 1
                          : std::min(opt.hi[a], vol.grid.dim(a) - 1);
    if (lo[a] > hi[a])
      throw std::invalid_argument("empty bounding box along an axis");
  }

  LineFitReport rep;
  if (opt.threshold >= 0) {
    rep.threshold = opt.threshold;
  } else {
    std::vector<float> region;
    region.reserve(static_cast<size_t>(hi[0] - lo[0] + 1) *
                   (hi[1] - lo[1] + 1) * (hi[2] - lo[2] + 1));
    for (int z = lo[2]; z <= hi[2]; ++z)
      for (int y = lo[1]; y <= hi[1]; ++y)
        for (int x = lo[0]; x <= hi[0]; ++x)
          region.push_back(vol.data[vol.grid.index(x, y, z)]);
    rep.threshold = otsu_threshold(region);
  }

  const int a0 = opt.axis;
  const int a1 = (a0 + 1) % 3, a2 = (a0 + 2) % 3;
  for (int s = lo[a0]; s <= hi[a0]; ++s) {
    double wsum = 0.0;
    Vec3 acc = Vec3::Zero();
    int ix[3];
    ix[a0] = s;
    for (int i = lo[a1]; i <= hi[a1]; ++i) {
      ix[a1] = i;
      for (int j = lo[a2]; j <= hi[a2]; ++j) {
        ix[a2] = j;
        const float v = vol.data[vol.grid.index(ix[0], ix[1], ix[2])];
        if (v >= rep.threshold) {
          const Vec3 c = vol.grid.center(ix[0], ix[1], ix[2]);
          acc += static_cast<double>(v) * c;
          wsum += v;
        }
      }
    }
    if (wsum > 0.0) rep.barycenters.push_back(acc / wsum);
  }

  if (rep.barycenters.size() < 3)
    throw std::runtime_error(
        "line fit needs at least 3 populated slices above the threshold");

  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : rep.barycenters) mean += p;
  mean /= static_cast<double>(rep.barycenters.size());
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : rep.barycenters) {
    const Vec3 d = p - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  rep.line_point = mean;
  rep.line_direction = es.eigenvectors().col(2).normalized();

  double dsum = 0.0;
  rep.distances.reserve(rep.barycenters.size());
  for (const Vec3& p : rep.barycenters) {
    const Vec3 d = p - mean;
    const double dist = (d - rep.line_direction.dot(d) * rep.line_direction).norm();
    rep.distances.push_back(dist);
    dsum += dist;
  }
  rep.lfe = dsum / rep.barycenters.size();
  return rep;
}

namespace {
void require_same_grid(const Volume& a, const Volume& b) {
  const VolumeGrid& g = a.grid;
  const VolumeGrid& h = b.grid;
  if (g.nx != h.nx || g.ny != h.ny || g.nz != h.nz ||
      g.spacing != h.spacing || g.origin != h.origin)
    throw std::invalid_argument("volumes are on different grids");
  if (a.data.size() != a.grid.count() || b.data.size() != b.grid.count())
    throw std::invalid_argument("volume data size does not match grid");
}
}  // namespace

double psnr(const Volume& a, const Volume& b) {
  require_same_grid(a, b);
  double se = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    se += d * d;
  }
  const double mse = se / a.data.size();
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

double pearson(const Volume& a, const Volume& b) {
  require_same_grid(a, b);
  const size_t n = a.data.size();
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    ma += a.data[i];
    mb += b.data[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double da = a.data[i] - ma;
    const double db = b.data[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0)
    throw std::invalid_argument("correlation undefined for a constant volume");
  return sab / std::sqrt(saa * sbb);
}

PoseError pose_error(const std::vector<RigidPose>& estimated,
                     const std::vector<RigidPose>& reference) {
  if (estimated.size() != reference.size() || estimated.empty())
    throw std::invalid_argument("pose sequences must have equal nonzero length");
  PoseError e;
  for (size_t i = 0; i < estimated.size(); ++i) {
    e.mean_translation_mm += (estimated[i].t - reference[i].t).norm();
    e.mean_rotation_deg += geodesic_angle(estimated[i].R, reference[i].R);
  }
  e.mean_translation_mm /= estimated.size();
  e.mean_rotation_deg *= 180.0 / 3.14159265358979323846 / estimated.size();
  return e;
}

}  // namespace usrecon
