// Microbenchmarks for the hot paths: field evaluation, gradient accumulation,
// the resolution-cell forward model, one full objective step, and volume
// sampling. Counters report per-point throughput where it is meaningful.

#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "usrecon/cell.hpp"
#include "usrecon/field.hpp"
#include "usrecon/recon.hpp"
#include "usrecon/rng.hpp"
#include "usrecon/simulator.hpp"
#include "usrecon/training.hpp"

namespace {

using namespace usrecon;

ImplicitField make_field() {
  HashEncodingConfig enc;
  enc.num_levels = 10;
  enc.features_per_level = 2;
  enc.table_size_log2 = 14;
  enc.base_resolution = 4;
  enc.per_level_scale = 1.5;
  enc.domain.lo = Vec3(-2, -2, -4);
  enc.domain.hi = Vec3(50, 50, 36);
  MlpConfig mlp;
  mlp.hidden_layers = 2;
  mlp.hidden_dim = 32;
  ImplicitField field(enc, mlp);
  field.init_params(7);
  SplitMix rng(11);
  for (double& v : field.table()) v += 0.4 * (rng.uniform() - 0.5);
  return field;
}

Eigen::Matrix3Xd random_points(int n) {
  Eigen::Matrix3Xd pts(3, n);
  SplitMix rng(21);
  for (int i = 0; i < n; ++i)
    pts.col(i) = Vec3(-2 + 52 * rng.uniform(), -2 + 52 * rng.uniform(),
                      -4 + 40 * rng.uniform());
  return pts;
}

FrameSequence make_sequence() {
  Scene scene;
  scene.background = 0.1;
  WireSpec wire;
  wire.point = Vec3(16, 20, 0);
  wire.radius = 1.5;
  scene.wires.push_back(wire);
  SweepSpec sweep;
  sweep.num_frames = 16;
  sweep.width = 64;
  sweep.height = 64;
  sweep.d_pixel = 0.6;
  sweep.step = 0.6;
  sweep.quadrature_points = 16;
  return render_sweep(scene, sweep);
}

void BM_FieldEvaluate(benchmark::State& state) {
  const ImplicitField field = make_field();
  const int n = static_cast<int>(state.range(0));
  const Eigen::Matrix3Xd pts = random_points(n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(field.evaluate(pts));
  }
  state.counters["pts/s"] = benchmark::Counter(
      static_cast<double>(n) * state.iterations(), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_FieldEvaluate)->Arg(256)->Arg(4096);

void BM_FieldForwardBackward(benchmark::State& state) {
  ImplicitField field = make_field();
  const int n = static_cast<int>(state.range(0));
  const Eigen::Matrix3Xd pts = random_points(n);
  FieldGradients grads;
  grads.init(field);
  const Eigen::VectorXd upstream = Eigen::VectorXd::Constant(n, 1.0 / n);
  FieldForwardCache cache;
  Eigen::Matrix3Xd point_grads(3, n);
  for (auto _ : state) {
    grads.begin_batch();
    benchmark::DoNotOptimize(field.forward(pts, cache));
    field.backward(cache, upstream, grads, &point_grads);
  }
  state.counters["pts/s"] = benchmark::Counter(
      static_cast<double>(n) * state.iterations(), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_FieldForwardBackward)->Arg(256)->Arg(4096);

void BM_PredictIntensity(benchmark::State& state) {
  const ImplicitField field = make_field();
  CellConfig cfg;
  cfg.num_subcells = 8;
  cfg.num_samples = 2;
  cfg.slice_thickness = 3.0;
  CounterRng rng;
  rng.seed = 3;
  const Vec3 p(20, 20, 10);
  const Vec3 n = Vec3::UnitZ();
  uint64_t pixel = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        predict_intensity(field, p, n, cfg, rng, 1, pixel++, 2));
  }
}
BENCHMARK(BM_PredictIntensity);

void BM_ObjectiveStep(benchmark::State& state) {
  const FrameSequence seq = make_sequence();
  ImplicitField field = make_field();
  const PairWindowBounds bounds = compute_window_bounds(seq.poses, 5);
  std::vector<PoseParam> deltas(seq.poses.size());
  CellConfig cell;
  cell.num_subcells = 6;
  cell.num_samples = 1;
  cell.slice_thickness = seq.slice_thickness;
  const LossWeights weights;
  const AblationFlags flags;
  std::vector<uint32_t> batch(4096);
  SplitMix rng(5);
  for (auto& id : batch)
    id = static_cast<uint32_t>(rng.uniform_int(seq.pixels.size()));
  FieldGradients fg;
  fg.init(field);
  std::vector<Vec6> pg(seq.poses.size(), Vec6::Zero());
  for (auto _ : state) {
    fg.begin_batch();
    for (auto& v : pg) v.setZero();
    benchmark::DoNotOptimize(total_loss(seq, field, deltas, bounds, batch, 1,
                                        cell, weights, flags, 9, 2048, &fg,
                                        &pg));
  }
  state.counters["px/s"] = benchmark::Counter(
      4096.0 * state.iterations(), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_ObjectiveStep);

void BM_VnnReconstruct(benchmark::State& state) {
  const FrameSequence seq = make_sequence();
  VolumeGrid grid;
  grid.origin = Vec3(0, 0, 0);
  grid.spacing = 0.6;
  grid.nx = 64;
  grid.ny = 64;
  grid.nz = 18;
  for (auto _ : state) {
    benchmark::DoNotOptimize(vnn_reconstruct(seq, seq.poses, grid));
  }
}
BENCHMARK(BM_VnnReconstruct);

void BM_QueryVolume(benchmark::State& state) {
  const ImplicitField field = make_field();
  VolumeGrid grid;
  grid.origin = Vec3(0, 0, 0);
  grid.spacing = 1.0;
  grid.nx = 48;
  grid.ny = 48;
  grid.nz = 32;
  for (auto _ : state) {
    benchmark::DoNotOptimize(query_volume(field, grid));
  }
  state.counters["voxels/s"] = benchmark::Counter(
      static_cast<double>(grid.count()) * state.iterations(),
      benchmark::Counter::kIsRate);
}
BENCHMARK(BM_QueryVolume);

}  // namespace

BENCHMARK_MAIN();
