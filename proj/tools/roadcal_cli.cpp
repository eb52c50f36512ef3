#include "roadcal/config.hpp"
#include "roadcal/dataset_io.hpp"
#include "roadcal/pipeline.hpp"
#include "roadcal/synthetic_world.hpp"

#include <CLI11.hpp>
#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace roadcal;

namespace {

const char* kParamNames[6] = {"tx", "ty", "tz", "rx", "ry", "rz"};

int parse_param(const std::string& s) {
  for (int i = 0; i < 6; ++i)
    if (s == kParamNames[i] || s == std::to_string(i)) return i;
  throw CalibrationError("unknown parameter '" + s + "' (tx, ty, tz, rx, ry, rz or 0..5)");
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw CalibrationError("cannot write " + p.string());
  f.precision(17);
  return f;
}

struct Global {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  bool verbose = false;

  Config load() const {
    Config c = config.empty() ? Config{} : load_config(config);
    if (seed) {
      c.seed = *seed;
      c.propagate_seed();
    }
    spdlog::info("random seed {}", c.seed);
    return c;
  }
};

struct DatasetArgs {
  std::string dir;
  std::string camera = "left";
  std::string disparity;

  void add(CLI::App* cmd) {
    cmd->add_option("dataset", dir, "dataset directory")->required();
    cmd->add_option("--camera", camera, "camera to calibrate: left or right");
    cmd->add_option("--disparity", disparity,
                    "directory of precomputed 16-bit disparity PGMs (disp_<ns>.pgm)");
  }

  std::optional<DisparityMap> disparities(const Dataset& ds) const {
    if (disparity.empty()) return std::nullopt;
    DisparityMap m;
    for (const auto& fr : ds.frames) {
      const fs::path p =
          fs::path(disparity) / ("disp_" + std::to_string(seconds_to_ns(fr.timestamp)) + ".pgm");
      if (fs::exists(p)) m[fr.id] = read_pgm16(p);
    }
    spdlog::info("loaded {} precomputed disparity maps", m.size());
    return m;
  }
};

Pose6 pose_or(const std::string& file, const std::optional<Pose6>& fallback, const char* what) {
  if (!file.empty()) return read_pose_file(file);
  if (fallback) return *fallback;
  throw CalibrationError(std::string("no ") + what + " pose given and none in the dataset");
}

void write_csv_breakdown_header(std::ofstream& f) { f << "param,offset,f_edge,f_nid,f_plane,f_sum\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stereo camera to LiDAR extrinsic calibration from road markings"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--config", g.config, "key=value configuration file");
  app.add_option("--seed", g.seed, "random seed (overrides the config)");
  app.add_option("--out", g.out, "output directory");
  app.add_flag("-v,--verbose", g.verbose, "debug logging");

  // generate
  auto* gen = app.add_subcommand("generate", "render a synthetic dataset");
  std::string spec_file;
  std::optional<double> noise;
  gen->add_option("--spec", spec_file, "scene spec (key=value overrides of the default scene)");
  gen->add_option("--noise", noise, "scale every noise level (0 disables noise)");

  // select
  auto* sel = app.add_subcommand("select", "score frames and select the informative ones");
  DatasetArgs sel_args;
  std::optional<int> sel_k;
  bool overlays = true;
  sel_args.add(sel);
  sel->add_option("--images", sel_k, "number of frames to select");
  sel->add_flag("!--no-overlays", overlays, "skip the overlay images");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "estimate the camera extrinsic");
  DatasetArgs cal_args;
  std::string init_file;
  std::optional<int> cal_k;
  cal_args.add(cal);
  cal->add_option("--init", init_file, "initial pose file (default: dataset nominal)");
  cal->add_option("--images", cal_k, "number of frames to use");

  // sweep
  auto* swp = app.add_subcommand("sweep", "one-parameter cost sweep");
  DatasetArgs swp_args;
  std::string ref_file;
  std::vector<std::string> params{"tx", "ty", "tz", "rx", "ry", "rz"};
  double range_t = 0.3, range_r = 3.0;
  std::optional<double> range;
  int steps = 61;
  std::optional<int> swp_k;
  std::vector<int> frame_ids;
  swp_args.add(swp);
  swp->add_option("--reference", ref_file, "reference pose file (default: dataset truth)");
  swp->add_option("--param", params, "parameters to sweep (tx ty tz rx ry rz)");
  swp->add_option("--range", range, "half range in m or deg for every swept parameter");
  swp->add_option("--range-t", range_t, "half range for translations, m");
  swp->add_option("--range-r", range_r, "half range for rotations, deg");
  swp->add_option("--steps", steps, "number of samples");
  swp->add_option("--images", swp_k, "number of selected frames");
  swp->add_option("--frames", frame_ids, "explicit frame ids instead of the selection");

  // repeat
  auto* rep = app.add_subcommand("repeat", "repeatability from random initial points");
  DatasetArgs rep_args;
  std::string rep_ref;
  std::optional<int> runs, threads;
  std::optional<double> perturb_t, perturb_r;
  std::vector<int> counts;
  rep_args.add(rep);
  rep->add_option("--reference", rep_ref, "reference pose file (default: dataset truth)");
  rep->add_option("--runs", runs, "number of runs");
  rep->add_option("--perturb-t", perturb_t, "translation perturbation, m");
  rep->add_option("--perturb-r", perturb_r, "rotation perturbation, deg");
  rep->add_option("--counts", counts, "image counts to compare");
  rep->add_option("--threads", threads, "worker threads (default: all cores)");

  // project
  auto* prj = app.add_subcommand("project", "project the map onto a stereo frame");
  DatasetArgs prj_args;
  std::string pose_file;
  std::optional<int> prj_frame;
  prj_args.add(prj);
  prj->add_option("--pose", pose_file, "camera pose file (result or truth format)");
  prj->add_option("--frame", prj_frame, "frame id (default: best selected frame)");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    const fs::path out = g.out;
    if (gen->parsed()) {
      SceneSpec spec = spec_file.empty() ? default_scene_spec() : load_scene_spec(spec_file);
      if (noise) {
        if (*noise < 0) throw CalibrationError("--noise must be non-negative");
        spec.range_sigma *= *noise;
        spec.intensity_sigma *= *noise;
        spec.gray_sigma *= *noise;
      }
      const std::uint64_t seed = g.seed.value_or(g.config.empty() ? 0 : load_config(g.config).seed);
      spdlog::info("random seed {}", seed);
      const Dataset ds = render_dataset(spec, seed);
      save_dataset(out, ds);
      spdlog::info("wrote {} frames and {} scans to {}", ds.frames.size(), ds.scans.size(),
                   out.string());
      return 0;
    }

    Config cfg = g.load();
    DatasetArgs* args = sel->parsed()   ? &sel_args
                        : cal->parsed() ? &cal_args
                        : swp->parsed() ? &swp_args
                        : rep->parsed() ? &rep_args
                                        : &prj_args;
    const Dataset ds = load_dataset(args->dir);
    if (ds.frames.empty()) throw CalibrationError("dataset has no stereo frames");
    const CameraSide side = parse_camera_side(args->camera);
    const auto disp = args->disparities(ds);
    CalibrationProblem problem(ds, cfg, side, disp ? &*disp : nullptr);
    const auto& truth = side == CameraSide::Left ? ds.truth_left : ds.truth_right;
    const auto& nominal = side == CameraSide::Left ? ds.nominal : ds.nominal_right;

    if (sel->parsed()) {
      const int k = sel_k.value_or(cfg.select_k);
      std::vector<int> chosen;
      try {
        chosen = problem.select(k);
      } catch (const CalibrationError& e) {
        spdlog::warn("{}", e.what());
      }
      std::ofstream csv = open_out(out / "utility.csv");
      if (overlays) fs::create_directories(out / "overlays");
      csv << "frame_id,timestamp_s,n_segments,u_van,u_i,selected\n";
      for (const auto& a : problem.analyses()) {
        const bool selected = std::find(chosen.begin(), chosen.end(), a.frame_id) != chosen.end();
        csv << a.frame_id << ',' << a.timestamp << ',' << a.utility.n_segments << ','
            << a.utility.u_van << ',' << a.utility.u_i << ',' << (selected ? 1 : 0) << '\n';
        if (overlays) {
          const StereoFrame& fr = ds.frames[static_cast<std::size_t>(&a - problem.analyses().data())];
          const GrayImage& img = side == CameraSide::Left ? fr.left : fr.right;
          write_ppm(out / "overlays" / fmt::format("frame_{:04d}.ppm", a.frame_id),
                    draw_selection_overlay(img, a.segments, a.vanishing));
          write_pgm(out / "overlays" / fmt::format("mask_{:04d}.pgm", a.frame_id),
                    mask_to_gray(a.road_mask));
        }
      }
      if (chosen.empty()) throw CalibrationError("no informative frames");
      spdlog::info("selected {}", fmt::join(chosen, ", "));
      return 0;
    }

    if (cal->parsed()) {
      const Pose6 init = pose_or(init_file, nominal, "initial");
      const CalibrationResult r = calibrate(problem, init, cal_k.value_or(cfg.select_k));
      fs::create_directories(out);
      write_result(out / "result.txt", {r.estimate, r.cost, r.iterations, r.converged});
      std::ofstream f = open_out(out / "result_frames.csv");
      f << "frame_id,f_edge,f_nid,f_plane,f_sum,plane_used\n";
      for (const auto& c : r.breakdown.frames)
        f << c.frame_id << ',' << c.f_edge << ',' << c.f_nid << ',' << c.f_plane << ',' << c.f_sum
          << ',' << (c.plane_used ? 1 : 0) << '\n';
      std::ofstream h = open_out(out / "history.csv");
      h << "iteration,best_cost\n";
      for (std::size_t i = 0; i < r.best_history.size(); ++i) h << i + 1 << ',' << r.best_history[i] << '\n';
      if (truth) {
        const Vector6d e = pose_error(r.estimate, *truth);
        spdlog::info("error vs truth: {:.4f} {:.4f} {:.4f} m, {:.4f} {:.4f} {:.4f} deg", e[0], e[1],
                     e[2], e[3], e[4], e[5]);
      }
      return 0;
    }

    if (swp->parsed()) {
      const Pose6 ref = pose_or(ref_file, truth, "reference");
      const std::vector<int> ids =
          frame_ids.empty() ? problem.select(swp_k.value_or(cfg.select_k)) : frame_ids;
      const auto frames = problem.prepare(ids, problem.anchor(ref));
      std::ofstream f = open_out(out / "sweep.csv");
      write_csv_breakdown_header(f);
      for (const auto& name : params) {
        const int p = parse_param(name);
        const double r = range.value_or(p < 3 ? range_t : range_r);
        const auto rows = sweep(frames, cfg, ref, p, r, steps);
        for (const auto& row : rows)
          f << kParamNames[p] << ',' << row.offset << ',' << row.cost.f_edge << ','
            << row.cost.f_nid << ',' << row.cost.f_plane << ',' << row.cost.f_sum << '\n';
        spdlog::info("{}: argmin at offset {}", kParamNames[p], rows[sweep_argmin(rows)].offset);
      }
      return 0;
    }

    if (rep->parsed()) {
      const Pose6 ref = pose_or(rep_ref, truth, "reference");
      RepeatOptions ro;
      ro.runs = runs.value_or(cfg.repeat_runs);
      ro.perturb_t = perturb_t.value_or(cfg.repeat_perturb_t);
      ro.perturb_r_deg = perturb_r.value_or(cfg.repeat_perturb_r_deg);
      ro.counts = counts.empty() ? cfg.repeat_counts : counts;
      ro.seed = cfg.seed;
      ro.threads = threads.value_or(0);
      const RepeatabilityReport rep_out = repeatability(problem, ref, ro);
      std::ofstream f = open_out(out / "runs.csv");
      f << "run,images,init_tx,init_ty,init_tz,init_rx_deg,init_ry_deg,init_rz_deg,"
           "err_tx,err_ty,err_tz,err_rx_deg,err_ry_deg,err_rz_deg,cost,iters,converged\n";
      for (const auto& r : rep_out.runs) {
        f << r.run << ',' << r.images;
        for (int i = 0; i < 6; ++i) f << ',' << (i < 3 ? r.init[i] : rad2deg(r.init[i]));
        for (int i = 0; i < 6; ++i) f << ',' << r.error[i];
        f << ',' << r.cost << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << '\n';
      }
      std::ofstream s = open_out(out / "summary.csv");
      s << "images,param,q25,median,q75,iqr,median_abs\n";
      for (const auto& q : rep_out.summary)
        s << q.images << ',' << kParamNames[q.param] << ',' << q.q25 << ',' << q.q50 << ','
          << q.q75 << ',' << q.iqr() << ',' << q.median_abs << '\n';
      return 0;
    }

    // project
    const Pose6 pose = pose_or(pose_file, truth, "projection");
    const int id = prj_frame ? *prj_frame : problem.select(1).front();
    fs::create_directories(out);
    write_ppm(out / fmt::format("projection_{:04d}.ppm", id), projection_overlay(problem, id, pose));
    return 0;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
