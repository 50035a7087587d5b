#include "usrecon/simulator.hpp"

#include <cmath>
#include <stdexcept>

#include "usrecon/rng.hpp"

namespace usrecon {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Box-Muller on explicit SplitMix draws; reproducible across platforms,
// unlike std::normal_distribution.
double gaussian(SplitMix& rng) {
  const double u1 = 1.0 - rng.uniform();  // (0, 1]
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

double smoothstep(double f) { return f * f * (3.0 - 2.0 * f); }

// Value noise in [-1, 1] on a lattice of the given spacing.
double lattice_noise(const Vec3& p, double spacing, uint64_t seed) {
  double g[3], f[3];
  int64_t c[3];
  for (int a = 0; a < 3; ++a) {
    g[a] = p[a] / spacing;
    c[a] = static_cast<int64_t>(std::floor(g[a]));
    f[a] = smoothstep(g[a] - c[a]);
  }
  double v = 0.0;
  for (int d = 0; d < 8; ++d) {
    const int64_t vx = c[0] + (d & 1);
    const int64_t vy = c[1] + ((d >> 1) & 1);
    const int64_t vz = c[2] + ((d >> 2) & 1);
    uint64_t h = splitmix64(seed ^ 0x5eedbead5eedbeadull);
    h = splitmix64(h ^ static_cast<uint64_t>(vx));
    h = splitmix64(h ^ static_cast<uint64_t>(vy));
    h = splitmix64(h ^ static_cast<uint64_t>(vz));
    const double corner = 2.0 * to_unit_double(h) - 1.0;
    const double w = ((d & 1) ? f[0] : 1.0 - f[0]) *
                     ((d & 2) ? f[1] : 1.0 - f[1]) *
                     ((d & 4) ? f[2] : 1.0 - f[2]);
    v += w * corner;
  }
  return v;
}

void quadrature_rule(int points, double slice_thickness, double sigma,
                     std::vector<double>& offsets, std::vector<double>& weights) {
  offsets.resize(points);
  weights.resize(points);
  double sum = 0.0;
  for (int q = 0; q < points; ++q) {
    const double t =
        -0.5 * slice_thickness + (q + 0.5) * slice_thickness / points;
    offsets[q] = t;
    weights[q] = std::exp(-t * t / (2.0 * sigma * sigma));
    sum += weights[q];
  }
  for (double& w : weights) w /= sum;
}

}  // namespace

double Scene::intensity(const Vec3& p) const {
  double v = background;
  bool inside = false;
  for (const WireSpec& wire : wires) {
    const Vec3 d = wire.direction.normalized();
    const Vec3 rel = p - wire.point;
    const double dist2 = (rel - rel.dot(d) * d).squaredNorm();
    if (dist2 <= wire.radius * wire.radius) {
      v = inside ? std::max(v, wire.intensity) : wire.intensity;
      inside = true;
    }
  }
  for (const BrickSpec& brick : bricks) {
    if ((p.array() >= brick.lo.array()).all() &&
        (p.array() <= brick.hi.array()).all()) {
      v = inside ? std::max(v, brick.intensity) : brick.intensity;
      inside = true;
    }
  }
  if (speckle.amplitude > 0) {
    v *= 1.0 + speckle.amplitude *
                   lattice_noise(p, speckle.correlation_mm, speckle.seed);
    v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  }
  return v;
}

void Scene::validate() const {
  if (background < 0 || background > 1)
    throw std::invalid_argument("background intensity outside [0, 1]");
  for (const WireSpec& w : wires) {
    if (!(w.direction.norm() > 0))
      throw std::invalid_argument("wire direction must be nonzero");
    if (!(w.radius > 0)) throw std::invalid_argument("wire radius must be positive");
    if (w.intensity < 0 || w.intensity > 1)
      throw std::invalid_argument("wire intensity outside [0, 1]");
  }
  for (const BrickSpec& b : bricks) {
    for (int a = 0; a < 3; ++a) {
      if (!(b.hi[a] > b.lo[a]))
        throw std::invalid_argument("brick extents must be positive");
    }
    if (b.intensity < 0 || b.intensity > 1)
      throw std::invalid_argument("brick intensity outside [0, 1]");
  }
  if (speckle.amplitude < 0)
    throw std::invalid_argument("speckle amplitude must be >= 0");
  if (speckle.amplitude > 0 && !(speckle.correlation_mm > 0))
    throw std::invalid_argument("speckle correlation length must be positive");
}

void SweepSpec::validate() const {
  if (num_frames < 1) throw std::invalid_argument("num_frames must be >= 1");
  if (width < 1 || height < 1)
    throw std::invalid_argument("frame dimensions must be positive");
  if (!(d_pixel > 0)) throw std::invalid_argument("d_pixel must be positive");
  if (!(slice_thickness > 0))
    throw std::invalid_argument("slice_thickness must be positive");
  if (quadrature_points < 1)
    throw std::invalid_argument("quadrature_points must be >= 1");
  if (gain_jitter_std < 0)
    throw std::invalid_argument("gain_jitter_std must be >= 0");
}

void NoiseSpec::validate() const {
  if (trans_std_mm < 0 || rot_std_deg < 0 || drift_amp_mm < 0)
    throw std::invalid_argument("noise magnitudes must be >= 0");
  if (drift_amp_mm > 0 && !(drift_wavelength_frames > 0))
    throw std::invalid_argument("drift wavelength must be positive");
}

NoiseSpec noise_preset(const std::string& name) {
  NoiseSpec n;
  if (name == "none") return n;
  if (name == "light") {
    n.trans_std_mm = 0.2;
    n.rot_std_deg = 0.1;
    return n;
  }
  if (name == "heavy") {
    n.trans_std_mm = 0.8;
    n.rot_std_deg = 0.4;
    n.drift_amp_mm = 1.0;
    n.drift_wavelength_frames = 50.0;
    return n;
  }
  throw std::invalid_argument("unknown noise preset: " + name);
}

FrameSequence render_sweep(const Scene& scene, const SweepSpec& spec) {
  scene.validate();
  spec.validate();

  FrameSequence seq;
  seq.width = spec.width;
  seq.height = spec.height;
  seq.d_pixel = spec.d_pixel;
  seq.slice_thickness = spec.slice_thickness;
  seq.pixels.resize(static_cast<size_t>(spec.num_frames) * spec.height *
                    spec.width);

  const Vec3 n = spec.base_pose.R.col(0).cross(spec.base_pose.R.col(1));
  seq.poses.resize(spec.num_frames);
  for (int i = 0; i < spec.num_frames; ++i) {
    seq.poses[i].R = spec.base_pose.R;
    seq.poses[i].t = spec.base_pose.t + i * spec.step * n;
  }
  seq.truth_poses = seq.poses;

  const double sigma = spec.render_sigma > 0 ? spec.render_sigma
                                             : spec.slice_thickness / 4.0;
  std::vector<double> offsets, weights;
  quadrature_rule(spec.quadrature_points, spec.slice_thickness, sigma, offsets,
                  weights);

  // Per-frame gain: an uncompensated receive-gain wobble multiplies the whole
  // frame. Gains are drawn once per frame so reruns reproduce them exactly.
  std::vector<double> gains(spec.num_frames, 1.0);
  if (spec.gain_jitter_std > 0) {
    SplitMix grng(splitmix64(spec.gain_seed ^ 0x6a1f9d3b42ull));
    for (int f = 0; f < spec.num_frames; ++f)
      gains[f] =
          std::max(0.05, 1.0 + gaussian(grng) * spec.gain_jitter_std);
  }

  for (int f = 0; f < spec.num_frames; ++f) {
    const RigidPose& pose = seq.poses[f];
    for (int h = 0; h < spec.height; ++h) {
      for (int w = 0; w < spec.width; ++w) {
        const Vec3 p = pixel_to_world(w, h, pose, spec.d_pixel);
        double acc = 0.0;
        for (size_t q = 0; q < offsets.size(); ++q)
          acc += weights[q] * scene.intensity(p + offsets[q] * n);
        // The receive chain saturates at the display range.
        if (spec.gain_jitter_std > 0)
          acc = std::min(1.0, std::max(0.0, acc * gains[f]));
        seq.pixels[seq.pixel_index(f, w, h)] = static_cast<float>(acc);
      }
    }
  }
  return seq;
}

void corrupt_poses(FrameSequence& seq, const NoiseSpec& noise, uint64_t seed) {
  noise.validate();
  if (seq.truth_poses.size() != seq.poses.size())
    throw std::invalid_argument("corrupt_poses needs a truth trajectory");

  SplitMix rng(splitmix64(seed ^ 0xc0441e5ed5ecull));
  const double rot_std = noise.rot_std_deg * kPi / 180.0;
  for (int i = 0; i < seq.num_frames(); ++i) {
    const RigidPose& truth = seq.truth_poses[i];
    Vec3 dt, drot;
    for (int a = 0; a < 3; ++a) dt[a] = gaussian(rng) * noise.trans_std_mm;
    for (int a = 0; a < 3; ++a) drot[a] = gaussian(rng) * rot_std;
    const Vec3 n = truth.R.col(0).cross(truth.R.col(1));
    const double drift =
        noise.drift_amp_mm *
        std::sin(2.0 * kPi * i / noise.drift_wavelength_frames);
    seq.poses[i].R = so3_exp(drot) * truth.R;
    seq.poses[i].t = truth.t + dt + drift * n;
  }
}

Volume blurred_scene_volume(const Scene& scene, const VolumeGrid& grid,
                            const Vec3& axis, double slice_thickness,
                            double sigma, int quadrature_points) {
  scene.validate();
  grid.validate();
  if (!(axis.norm() > 0)) throw std::invalid_argument("axis must be nonzero");
  if (!(slice_thickness > 0) || !(sigma > 0))
    throw std::invalid_argument("slice_thickness and sigma must be positive");

  const Vec3 n = axis.normalized();
  std::vector<double> offsets, weights;
  quadrature_rule(quadrature_points, slice_thickness, sigma, offsets, weights);

  Volume vol;
  vol.grid = grid;
  vol.data.resize(grid.count());
  for (int iz = 0; iz < grid.nz; ++iz) {
    for (int iy = 0; iy < grid.ny; ++iy) {
      for (int ix = 0; ix < grid.nx; ++ix) {
        const Vec3 p = grid.center(ix, iy, iz);
        double acc = 0.0;
        for (size_t q = 0; q < offsets.size(); ++q)
          acc += weights[q] * scene.intensity(p + offsets[q] * n);
        vol.data[grid.index(ix, iy, iz)] = static_cast<float>(acc);
      }
    }
  }
  return vol;
}

}  // namespace usrecon
