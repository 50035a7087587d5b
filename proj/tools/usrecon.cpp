// Command-line surface for the sweep-reconstruction pipeline:
//   simulate    render a synthetic tracked sweep into a bundle directory
//   train       fit the implicit field (and refine poses) on a bundle
//   reconstruct sample a trained field, or run the VNN baseline, onto a grid
//   evaluate    PSNR / correlation / line-fit / pose-error metrics
//   ablate      train a list of flag configurations and tabulate metrics
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "usrecon/config.hpp"
#include "usrecon/io.hpp"
#include "usrecon/recon.hpp"
#include "usrecon/simulator.hpp"
#include "usrecon/training.hpp"

namespace fs = std::filesystem;
using namespace usrecon;

namespace {

Vec3 flag_vec3(const std::string& s, const std::string& what) {
  return parse_vec3(s, what);
}

VolumeGrid make_grid(const Vec3& lo, const Vec3& hi, double spacing) {
  if (spacing <= 0) throw std::runtime_error("grid spacing must be positive");
  VolumeGrid g;
  g.origin = lo;
  g.spacing = spacing;
  g.nx = std::max(1, static_cast<int>(std::floor((hi.x() - lo.x()) / spacing)) + 1);
  g.ny = std::max(1, static_cast<int>(std::floor((hi.y() - lo.y()) / spacing)) + 1);
  g.nz = std::max(1, static_cast<int>(std::floor((hi.z() - lo.z()) / spacing)) + 1);
  g.validate();
  return g;
}

// Axis-aligned bounds of all frame rectangles under the given poses.
void data_bbox(const FrameSequence& seq, const std::vector<RigidPose>& poses,
               Vec3& lo, Vec3& hi) {
  lo = Vec3::Constant(std::numeric_limits<double>::max());
  hi = Vec3::Constant(std::numeric_limits<double>::lowest());
  const double w = (seq.width - 1) * seq.d_pixel;
  const double h = (seq.height - 1) * seq.d_pixel;
  for (size_t f = 0; f < poses.size(); ++f) {
    const Vec3 corners[4] = {Vec3(0, 0, 0), Vec3(w, 0, 0), Vec3(0, h, 0),
                             Vec3(w, h, 0)};
    for (const Vec3& c : corners) {
      const Vec3 p = poses[f].R * c + poses[f].t;
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }
}

Vec3 sweep_axis(const RunConfig& cfg) {
  const Mat3& R = cfg.sweep.base_pose.R;
  return R.col(0).cross(R.col(1));
}

int dominant_axis(const Vec3& v) {
  int a = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(v[i]) > std::abs(v[a])) a = i;
  return a;
}

void apply_ablate_list(const std::string& list, AblationFlags& flags) {
  std::istringstream is(list);
  std::string name;
  while (std::getline(is, name, ',')) {
    if (name.empty()) continue;
    if (name == "cell" || name == "cell_model") flags.cell_model = false;
    else if (name == "pose_refinement") flags.pose_refinement = false;
    else if (name == "pose_regularization") flags.pose_regularization = false;
    else if (name == "volume_regularization") flags.volume_regularization = false;
    else
      throw std::runtime_error(
          "unknown ablation term '" + name +
          "' (expected cell, pose_refinement, pose_regularization, "
          "volume_regularization)");
  }
}

// Encoding box fitted to the data with room for jitter and the cell extent.
void fit_domain(RunConfig& cfg, const FrameSequence& seq) {
  if (!cfg.domain_auto) return;
  Vec3 lo, hi;
  data_bbox(seq, seq.poses, lo, hi);
  const double margin = seq.slice_thickness / 2.0 + 2.0;
  cfg.encoding.domain.lo = lo - Vec3::Constant(margin);
  cfg.encoding.domain.hi = hi + Vec3::Constant(margin);
  cfg.domain_auto = false;  // resolved; reruns reuse the exact box
}

void print_epoch(const EpochTrace& t) {
  std::printf(
      "epoch %3d  K=%d levels=%2d  chi=%.6e l_i=%.6e l_dist=%.3e l_angle=%.3e "
      "r_v=%.3e  |dt|=%.3f mm |dr|=%.3f deg\n",
      t.epoch, t.subcells, t.levels, t.chi, t.l_i, t.l_dist, t.l_angle, t.r_v,
      t.mean_dt_mm, t.mean_dr_deg);
  std::fflush(stdout);
}

struct MetricRow {
  std::string name;
  double value;
};

void emit_metrics(const std::vector<MetricRow>& rows, const std::string& csv) {
  for (const MetricRow& r : rows)
    std::printf("%s=%.10g\n", r.name.c_str(), r.value);
  if (!csv.empty()) {
    std::ostringstream os;
    os.precision(17);
    os << "metric,value\n";
    for (const MetricRow& r : rows) os << r.name << "," << r.value << "\n";
    atomic_write_file(csv, os.str());
  }
}

int cmd_simulate(const std::string& config, const std::string& out,
                 long long seed_flag) {
  RunConfig cfg =
      config.empty() ? RunConfig{} : RunConfig::from_file(config);
  if (seed_flag >= 0) cfg.train.seed = static_cast<uint64_t>(seed_flag);
  cfg.validate();

  FrameSequence seq = render_sweep(cfg.scene, cfg.sweep);
  corrupt_poses(seq, cfg.noise, cfg.train.seed);
  fs::create_directories(out);
  save_bundle(out, seq);
  cfg.save(out + "/config.ini");
  std::printf("simulate: wrote %d frames (%dx%d, noise preset '%s') to %s\n",
              seq.num_frames(), seq.width, seq.height,
              cfg.noise_preset.c_str(), out.c_str());
  return 0;
}

int cmd_train(const std::string& bundle, const std::string& config,
              const std::string& out, long long seed_flag,
              const std::string& ablate, bool quiet) {
  FrameSequence seq = load_bundle(bundle);
  RunConfig cfg =
      config.empty() ? RunConfig{} : RunConfig::from_file(config);
  if (seed_flag >= 0) cfg.train.seed = static_cast<uint64_t>(seed_flag);
  apply_ablate_list(ablate, cfg.train.flags);
  fit_domain(cfg, seq);
  cfg.validate();

  ImplicitField field(cfg.encoding, cfg.mlp);
  field.init_params(cfg.train.seed);
  TrainResult res =
      train(seq, field, cfg.train, quiet ? EpochCallback{} : print_epoch);

  fs::create_directories(out);
  save_checkpoint(out + "/checkpoint.bin",
                  checkpoint_from(field, res.refined_poses,
                                  seq.slice_thickness));
  save_trace_csv(out + "/trace.csv", res.trace);
  save_poses_csv(out + "/poses_refined.csv", res.refined_poses);
  cfg.save(out + "/config.ini");
  std::printf("train: final chi=%.6e after %d epochs; outputs in %s\n",
              res.trace.back().chi, cfg.train.epochs, out.c_str());
  return 0;
}

int cmd_reconstruct(const std::string& checkpoint, const std::string& baseline,
                    const std::string& bundle, const std::string& poses_file,
                    bool use_truth, const std::string& out, double spacing,
                    const std::string& lo_s, const std::string& hi_s) {
  fs::create_directories(out);
  Vec3 lo, hi;
  const bool explicit_grid = !lo_s.empty() || !hi_s.empty();
  if (!lo_s.empty() != !hi_s.empty())
    throw std::runtime_error("--grid-lo and --grid-hi must be given together");
  if (explicit_grid) {
    lo = flag_vec3(lo_s, "--grid-lo");
    hi = flag_vec3(hi_s, "--grid-hi");
  }

  if (!checkpoint.empty()) {
    const Checkpoint ck = load_checkpoint(checkpoint);
    const ImplicitField field = field_from(ck);
    if (!explicit_grid) {
      lo = ck.encoding.domain.lo;
      hi = ck.encoding.domain.hi;
    }
    const VolumeGrid grid = make_grid(lo, hi, spacing);
    if (!grid_within_domain(grid, ck.encoding.domain))
      std::fprintf(stderr,
                   "warning: grid extends outside the trained domain; "
                   "outside samples clamp to the boundary\n");
    const Volume vol = query_volume(field, grid);
    save_volume(out + "/volume", vol);
    std::printf("reconstruct: %dx%dx%d voxels at %.3g mm from %s\n", grid.nx,
                grid.ny, grid.nz, spacing, checkpoint.c_str());
    return 0;
  }

  if (baseline != "vnn")
    throw std::runtime_error(
        "need --checkpoint, or --baseline vnn with --bundle");
  if (bundle.empty())
    throw std::runtime_error("--baseline vnn requires --bundle");
  const FrameSequence seq = load_bundle(bundle);
  std::vector<RigidPose> poses = seq.poses;
  if (use_truth) {
    if (seq.truth_poses.empty())
      throw std::runtime_error("bundle has no truth poses");
    poses = seq.truth_poses;
  }
  if (!poses_file.empty()) poses = load_poses_csv(poses_file);
  if (!explicit_grid) {
    data_bbox(seq, poses, lo, hi);
    lo -= Vec3::Constant(spacing);
    hi += Vec3::Constant(spacing);
  }
  const VolumeGrid grid = make_grid(lo, hi, spacing);
  const VnnResult res = vnn_reconstruct(seq, poses, grid);
  save_volume(out + "/volume", res.volume);
  std::printf("reconstruct: VNN baseline, %dx%dx%d voxels, fill ratio %.3f\n",
              grid.nx, grid.ny, grid.nz, res.fill_ratio);
  return 0;
}

int cmd_evaluate(const std::string& volume, const std::string& ref_volume,
                 const std::string& bundle, const std::string& poses_file,
                 const std::string& ref_poses_file, bool lfe, int lfe_axis,
                 double lfe_threshold, const std::string& bbox_lo_s,
                 const std::string& bbox_hi_s, const std::string& csv) {
  std::vector<MetricRow> rows;
  bool did_anything = false;

  if (!volume.empty() && (!ref_volume.empty() || !bundle.empty())) {
    const Volume vol = load_volume(volume);
    Volume ref;
    if (!ref_volume.empty()) {
      ref = load_volume(ref_volume);
    } else {
      // Reference is the scene from the bundle's resolved config, blurred
      // along the sweep axis exactly as the renderer blurred the frames.
      const RunConfig cfg = RunConfig::from_file(bundle + "/config.ini");
      const double sigma = cfg.sweep.render_sigma > 0
                               ? cfg.sweep.render_sigma
                               : cfg.sweep.slice_thickness / 4.0;
      ref = blurred_scene_volume(cfg.scene, vol.grid, sweep_axis(cfg),
                                 cfg.sweep.slice_thickness, sigma,
                                 cfg.sweep.quadrature_points);
    }
    rows.push_back({"psnr_db", psnr(vol, ref)});
    rows.push_back({"pearson_r", pearson(vol, ref)});
    did_anything = true;
  }

  if (lfe) {
    if (volume.empty()) throw std::runtime_error("--lfe requires --volume");
    const Volume vol = load_volume(volume);
    LineFitOptions opt;
    opt.axis = lfe_axis;
    opt.threshold = lfe_threshold;
    if (!bbox_lo_s.empty() || !bbox_hi_s.empty()) {
      if (bbox_lo_s.empty() || bbox_hi_s.empty())
        throw std::runtime_error("--bbox-lo and --bbox-hi must be given together");
      const Vec3 blo = flag_vec3(bbox_lo_s, "--bbox-lo");
      const Vec3 bhi = flag_vec3(bbox_hi_s, "--bbox-hi");
      for (int a = 0; a < 3; ++a) {
        opt.lo[a] = static_cast<int>(
            std::floor((blo[a] - vol.grid.origin[a]) / vol.grid.spacing));
        opt.hi[a] = static_cast<int>(
            std::ceil((bhi[a] - vol.grid.origin[a]) / vol.grid.spacing));
      }
    }
    const LineFitReport rep = line_fit_error(vol, opt);
    rows.push_back({"lfe_mm", rep.lfe});
    rows.push_back({"lfe_slices", static_cast<double>(rep.barycenters.size())});
    rows.push_back({"lfe_threshold", rep.threshold});
    did_anything = true;
  }

  if (!poses_file.empty()) {
    const std::vector<RigidPose> est = load_poses_csv(poses_file);
    std::vector<RigidPose> ref;
    if (!ref_poses_file.empty()) {
      ref = load_poses_csv(ref_poses_file);
    } else if (!bundle.empty()) {
      const FrameSequence seq = load_bundle(bundle);
      if (seq.truth_poses.empty())
        throw std::runtime_error("bundle has no truth poses");
      ref = seq.truth_poses;
    } else {
      throw std::runtime_error(
          "pose error needs --reference-poses or --bundle with truth poses");
    }
    const PoseError pe = pose_error(est, ref);
    rows.push_back({"mean_trans_err_mm", pe.mean_translation_mm});
    rows.push_back({"mean_rot_err_deg", pe.mean_rotation_deg});
    did_anything = true;
  }

  if (!did_anything)
    throw std::runtime_error(
        "nothing to evaluate; pass --volume with --reference-volume/--bundle, "
        "--lfe, or --poses");
  emit_metrics(rows, csv);
  return 0;
}

int cmd_ablate(const std::string& bundle, const std::string& config,
               const std::string& out, const std::string& seeds_s,
               const std::string& sets_s, double spacing, int lfe_axis,
               const std::string& bbox_lo_s, const std::string& bbox_hi_s) {
  const FrameSequence seq = load_bundle(bundle);
  RunConfig base_cfg =
      config.empty() ? RunConfig{} : RunConfig::from_file(config);
  fit_domain(base_cfg, seq);
  if (spacing > 0) base_cfg.recon_spacing = spacing;
  base_cfg.validate();

  std::vector<uint64_t> seeds;
  {
    std::istringstream is(seeds_s);
    std::string tok;
    while (std::getline(is, tok, ','))
      if (!tok.empty()) seeds.push_back(std::stoull(tok));
  }
  if (seeds.empty()) throw std::runtime_error("no seeds given");

  std::vector<std::string> sets;
  {
    std::istringstream is(sets_s);
    std::string tok;
    while (std::getline(is, tok, ','))
      if (!tok.empty()) sets.push_back(tok);
  }
  if (sets.empty()) throw std::runtime_error("no configuration sets given");

  const RunConfig bundle_cfg = RunConfig::from_file(bundle + "/config.ini");
  const Vec3 axis = sweep_axis(bundle_cfg);
  const double sigma = bundle_cfg.sweep.render_sigma > 0
                           ? bundle_cfg.sweep.render_sigma
                           : bundle_cfg.sweep.slice_thickness / 4.0;
  const VolumeGrid grid =
      make_grid(base_cfg.encoding.domain.lo, base_cfg.encoding.domain.hi,
                base_cfg.recon_spacing);
  const Volume reference =
      blurred_scene_volume(bundle_cfg.scene, grid, axis,
                           bundle_cfg.sweep.slice_thickness, sigma,
                           bundle_cfg.sweep.quadrature_points);

  LineFitOptions lfe_opt;
  lfe_opt.axis = lfe_axis >= 0 ? lfe_axis : dominant_axis(axis);
  if (!bbox_lo_s.empty() && !bbox_hi_s.empty()) {
    const Vec3 blo = flag_vec3(bbox_lo_s, "--bbox-lo");
    const Vec3 bhi = flag_vec3(bbox_hi_s, "--bbox-hi");
    for (int a = 0; a < 3; ++a) {
      lfe_opt.lo[a] = static_cast<int>(
          std::floor((blo[a] - grid.origin[a]) / grid.spacing));
      lfe_opt.hi[a] = static_cast<int>(
          std::ceil((bhi[a] - grid.origin[a]) / grid.spacing));
    }
  }

  fs::create_directories(out);
  std::ostringstream csv;
  csv.precision(17);
  csv << "config,seed,psnr_db,pearson_r,lfe_mm,mean_trans_err_mm,"
         "mean_rot_err_deg\n";

  struct Agg {
    double psnr = 0, lfe = 0, terr = 0;
    int n = 0, nlfe = 0;
  };
  std::map<std::string, Agg> agg;

  auto eval_volume = [&](const std::string& name, uint64_t seed,
                         const Volume& vol,
                         const std::vector<RigidPose>& poses) {
    const double p = psnr(vol, reference);
    const double r = pearson(vol, reference);
    double lfe = std::numeric_limits<double>::quiet_NaN();
    try {
      lfe = line_fit_error(vol, lfe_opt).lfe;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "warning: %s seed %llu: %s\n", name.c_str(),
                   static_cast<unsigned long long>(seed), e.what());
    }
    PoseError pe{};
    if (!seq.truth_poses.empty()) pe = pose_error(poses, seq.truth_poses);
    csv << name << "," << seed << "," << p << "," << r << "," << lfe << ","
        << pe.mean_translation_mm << "," << pe.mean_rotation_deg << "\n";
    Agg& a = agg[name];
    a.psnr += p;
    a.terr += pe.mean_translation_mm;
    ++a.n;
    if (std::isfinite(lfe)) {
      a.lfe += lfe;
      ++a.nlfe;
    }
  };

  for (uint64_t seed : seeds) {
    const VnnResult vnn = vnn_reconstruct(seq, seq.poses, grid);
    eval_volume("vnn_baseline", seed, vnn.volume, seq.poses);
    break;  // seed-independent; one row suffices
  }

  for (const std::string& set : sets) {
    for (uint64_t seed : seeds) {
      RunConfig cfg = base_cfg;
      cfg.train.seed = seed;
      cfg.train.flags = AblationFlags{};
      if (set == "full") {
      } else if (set == "no_cell") {
        cfg.train.flags.cell_model = false;
      } else if (set == "no_pose_refinement") {
        cfg.train.flags.pose_refinement = false;
      } else if (set == "no_pose_regularization") {
        cfg.train.flags.pose_regularization = false;
      } else if (set == "no_volume_regularization") {
        cfg.train.flags.volume_regularization = false;
      } else {
        throw std::runtime_error("unknown configuration set '" + set + "'");
      }

      std::printf("ablate: %s seed %llu\n", set.c_str(),
                  static_cast<unsigned long long>(seed));
      std::fflush(stdout);
      ImplicitField field(cfg.encoding, cfg.mlp);
      field.init_params(seed);
      const TrainResult res = train(seq, field, cfg.train);
      const Volume vol = query_volume(field, grid);

      const std::string run_dir =
          out + "/" + set + "_seed" + std::to_string(seed);
      fs::create_directories(run_dir);
      save_trace_csv(run_dir + "/trace.csv", res.trace);
      save_poses_csv(run_dir + "/poses_refined.csv", res.refined_poses);
      cfg.save(run_dir + "/config.ini");

      eval_volume(set, seed, vol, res.refined_poses);
    }
  }

  atomic_write_file(out + "/summary.csv", csv.str());
  base_cfg.save(out + "/config.ini");

  std::printf("\n%-28s %10s %10s %12s\n", "config", "LFE(mm)", "PSNR(dB)",
              "trans err(mm)");
  for (const auto& [name, a] : agg) {
    std::printf("%-28s %10.4f %10.2f %12.4f\n", name.c_str(),
                a.nlfe ? a.lfe / a.nlfe : std::numeric_limits<double>::quiet_NaN(),
                a.psnr / a.n, a.terr / a.n);
  }
  std::printf("ablate: summary written to %s/summary.csv\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tracked-sweep implicit volume reconstruction"};
  app.require_subcommand(1);

  // simulate
  std::string sim_config, sim_out;
  long long sim_seed = -1;
  CLI::App* sim = app.add_subcommand("simulate", "Render a synthetic sweep");
  sim->add_option("--config", sim_config, "Scene/sweep/noise config (INI)");
  sim->add_option("--out", sim_out, "Output bundle directory")->required();
  sim->add_option("--seed", sim_seed, "Noise seed (overrides config)");

  // train
  std::string tr_bundle, tr_config, tr_out, tr_ablate;
  long long tr_seed = -1;
  bool tr_quiet = false;
  CLI::App* tr = app.add_subcommand("train", "Fit the field, refine poses");
  tr->add_option("--bundle", tr_bundle, "Input bundle directory")->required();
  tr->add_option("--config", tr_config, "Run config (INI)");
  tr->add_option("--out", tr_out, "Output directory")->required();
  tr->add_option("--seed", tr_seed, "Training seed (overrides config)");
  tr->add_option("--ablate", tr_ablate,
                 "Comma list of terms to disable: cell, pose_refinement, "
                 "pose_regularization, volume_regularization");
  tr->add_flag("--quiet", tr_quiet, "Suppress per-epoch progress");

  // reconstruct
  std::string rc_checkpoint, rc_baseline, rc_bundle, rc_poses, rc_out;
  std::string rc_lo, rc_hi;
  bool rc_truth = false;
  double rc_spacing = 0.2;
  CLI::App* rc = app.add_subcommand("reconstruct", "Sample a volume");
  rc->add_option("--checkpoint", rc_checkpoint, "Trained checkpoint file");
  rc->add_option("--baseline", rc_baseline, "Baseline name (vnn)");
  rc->add_option("--bundle", rc_bundle, "Bundle directory (baseline mode)");
  rc->add_option("--poses", rc_poses, "Pose CSV overriding bundle poses");
  rc->add_flag("--use-truth-poses", rc_truth, "Use the bundle's truth poses");
  rc->add_option("--out", rc_out, "Output directory")->required();
  rc->add_option("--spacing", rc_spacing, "Voxel spacing, mm")
      ->check(CLI::PositiveNumber);
  rc->add_option("--grid-lo", rc_lo, "Grid lower corner 'x,y,z' (mm)");
  rc->add_option("--grid-hi", rc_hi, "Grid upper corner 'x,y,z' (mm)");

  // evaluate
  std::string ev_volume, ev_ref_volume, ev_bundle, ev_poses, ev_ref_poses;
  std::string ev_bbox_lo, ev_bbox_hi, ev_csv;
  bool ev_lfe = false;
  int ev_axis = 2;
  double ev_threshold = -1.0;
  CLI::App* ev = app.add_subcommand("evaluate", "Compute metrics");
  ev->add_option("--volume", ev_volume, "Volume stem (expects .raw/.json)");
  ev->add_option("--reference-volume", ev_ref_volume, "Reference volume stem");
  ev->add_option("--bundle", ev_bundle,
                 "Bundle directory (blurred-scene reference / truth poses)");
  ev->add_option("--poses", ev_poses, "Estimated pose CSV");
  ev->add_option("--reference-poses", ev_ref_poses, "Reference pose CSV");
  ev->add_flag("--lfe", ev_lfe, "Line-fit error of a wire in --volume");
  ev->add_option("--axis", ev_axis, "LFE slicing axis (0/1/2)");
  ev->add_option("--threshold", ev_threshold,
                 "LFE wire threshold; negative selects Otsu");
  ev->add_option("--bbox-lo", ev_bbox_lo, "LFE bounding box corner 'x,y,z' mm");
  ev->add_option("--bbox-hi", ev_bbox_hi, "LFE bounding box corner 'x,y,z' mm");
  ev->add_option("--out", ev_csv, "Write metrics CSV here");

  // ablate
  std::string ab_bundle, ab_config, ab_out;
  std::string ab_seeds = "0";
  std::string ab_sets =
      "full,no_cell,no_pose_refinement,no_pose_regularization,"
      "no_volume_regularization";
  std::string ab_bbox_lo, ab_bbox_hi;
  double ab_spacing = -1.0;
  int ab_axis = -1;
  CLI::App* ab = app.add_subcommand("ablate", "Train and compare flag sets");
  ab->add_option("--bundle", ab_bundle, "Input bundle directory")->required();
  ab->add_option("--config", ab_config, "Run config (INI)");
  ab->add_option("--out", ab_out, "Output directory")->required();
  ab->add_option("--seeds", ab_seeds, "Comma list of seeds");
  ab->add_option("--sets", ab_sets, "Comma list of configuration sets");
  ab->add_option("--spacing", ab_spacing, "Voxel spacing, mm");
  ab->add_option("--lfe-axis", ab_axis, "LFE slicing axis; default sweep axis");
  ab->add_option("--bbox-lo", ab_bbox_lo, "LFE bounding box corner 'x,y,z' mm");
  ab->add_option("--bbox-hi", ab_bbox_hi, "LFE bounding box corner 'x,y,z' mm");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim_config, sim_out, sim_seed);
    if (tr->parsed())
      return cmd_train(tr_bundle, tr_config, tr_out, tr_seed, tr_ablate,
                       tr_quiet);
    if (rc->parsed())
      return cmd_reconstruct(rc_checkpoint, rc_baseline, rc_bundle, rc_poses,
                             rc_truth, rc_out, rc_spacing, rc_lo, rc_hi);
    if (ev->parsed())
      return cmd_evaluate(ev_volume, ev_ref_volume, ev_bundle, ev_poses,
                          ev_ref_poses, ev_lfe, ev_axis, ev_threshold,
                          ev_bbox_lo, ev_bbox_hi, ev_csv);
    if (ab->parsed())
      return cmd_ablate(ab_bundle, ab_config, ab_out, ab_seeds, ab_sets,
                        ab_spacing, ab_axis, ab_bbox_lo, ab_bbox_hi);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "usrecon: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
