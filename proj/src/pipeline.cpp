#include "roadcal/pipeline.hpp"

#include "roadcal/hough.hpp"
#include "roadcal/local_map.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <thread>
#include <unordered_map>

namespace roadcal {

namespace {

int worker_count(int requested, std::size_t jobs) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  n = std::max(1, n);
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), std::max<std::size_t>(jobs, 1)));
}

// Runs body(i) for i in [0, n) on `threads` workers. Results must be written
// to per-index slots so the outcome does not depend on scheduling.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
  const int workers = worker_count(threads, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

CameraSide parse_camera_side(const std::string& s) {
  if (s == "left") return CameraSide::Left;
  if (s == "right") return CameraSide::Right;
  throw CalibrationError("camera must be 'left' or 'right', got '" + s + "'");
}

// --- stereo analysis --------------------------------------------------------

FrameAnalysis analyze_frame(const StereoFrame& frame, const CameraIntrinsics& k, CameraSide side,
                            const Config& cfg, const DisparityImage* disparity) {
  FrameAnalysis a;
  a.frame_id = frame.id;
  a.timestamp = frame.timestamp;
  a.utility.frame_id = frame.id;
  a.utility.timestamp = frame.timestamp;
  const GrayImage& ref = side == CameraSide::Left ? frame.left : frame.right;
  const int w = ref.width(), h = ref.height();
  const int region_w = std::max(1, w / cfg.vp_region_width_div);
  const int region_h = std::max(1, h / cfg.vp_region_height_div);

  DisparityImage computed;
  if (!disparity) {
    computed = side == CameraSide::Left
                   ? compute_disparity(frame.left, frame.right, cfg.disparity)
                   : compute_disparity_right_reference(frame.left, frame.right, cfg.disparity);
    disparity = &computed;
  } else if (!disparity->same_size(ref)) {
    throw CalibrationError("disparity of frame " + std::to_string(frame.id) +
                           " does not match the image size");
  }

  try {
    const VDisparity vd = build_v_disparity(*disparity, cfg.disparity.max_disparity + 1);
    a.line = fit_road_line(vd, cfg.road_line);
    a.horizon = horizon_row(a.line, h);
    a.road_mask = extract_road_mask(*disparity, a.line, cfg.road_tau);
    a.plane = fit_road_plane(*disparity, a.road_mask, k, cfg.plane);
    a.road_found = true;
  } catch (const RoadNotFound& e) {
    a.failure = e.what();
    a.road_mask = BinaryImage(w, h);
    a.vanishing = estimate_vanishing_point({}, {0.5 * w, 0.5 * h}, region_w, region_h, cfg.vote);
    spdlog::debug("frame {}: no road ({})", frame.id, a.failure);
    return a;
  }

  a.segments = detect_segments(ref, a.road_mask, cfg.segments);
  a.vanishing = estimate_vanishing_point(a.segments, {0.5 * w, a.horizon}, region_w, region_h,
                                         cfg.vote);
  a.utility.n_segments = a.segments.size();
  a.utility.u_van = a.vanishing.u_van;
  a.utility.u_i = image_utility(a.segments, a.vanishing);
  return a;
}

std::vector<FrameAnalysis> analyze_frames(const Dataset& ds, CameraSide side, const Config& cfg,
                                          const DisparityMap* disparities) {
  std::vector<FrameAnalysis> out(ds.frames.size());
  parallel_for(ds.frames.size(), 0, [&](std::size_t i) {
    const StereoFrame& fr = ds.frames[i];
    const DisparityImage* d = nullptr;
    if (disparities) {
      auto it = disparities->find(fr.id);
      if (it != disparities->end()) d = &it->second;
    }
    out[i] = analyze_frame(fr, ds.intrinsics, side, cfg, d);
  });
  return out;
}

std::vector<ImageUtility> utilities_of(const std::vector<FrameAnalysis>& analyses) {
  std::vector<ImageUtility> u;
  u.reserve(analyses.size());
  for (const auto& a : analyses) u.push_back(a.utility);
  return u;
}

std::vector<int> select_frames(const std::vector<FrameAnalysis>& analyses, int k) {
  std::vector<ImageUtility> candidates;
  for (const auto& a : analyses)
    if (a.road_found) {
      candidates.push_back(a.utility);
      candidates.back().frame_id = a.frame_id;
      candidates.back().timestamp = a.timestamp;
    }
  if (candidates.empty()) throw CalibrationError("no informative frames");
  return select_informative(candidates, k);
}

// --- problem ----------------------------------------------------------------

CalibrationProblem::CalibrationProblem(const Dataset& ds, Config cfg, CameraSide side,
                                       const DisparityMap* disparities)
    : ds_(ds), cfg_(std::move(cfg)), side_(side) {
  if (ds_.frames.empty()) throw CalibrationError("dataset has no stereo frames");
  if (ds_.trajectory.empty()) throw CalibrationError("dataset has no trajectory");
  analyses_ = analyze_frames(ds_, side_, cfg_, disparities);
  windows_ = map_windows(ds_.trajectory, cfg_.map_window_m);
  maps_.resize(windows_.size());
}

const FrameAnalysis& CalibrationProblem::analysis(int frame_id) const {
  for (const auto& a : analyses_)
    if (a.frame_id == frame_id) return a;
  throw CalibrationError("unknown frame id " + std::to_string(frame_id));
}

Pose6 CalibrationProblem::anchor(const Pose6& fallback) const {
  const auto& nominal = side_ == CameraSide::Left ? ds_.nominal : ds_.nominal_right;
  return nominal ? *nominal : fallback;
}

CalibrationProblem::LocalMap& CalibrationProblem::local_map_for(double timestamp) {
  // the window whose centre is closest to the image time
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < windows_.size(); ++i) {
    const auto [b, e] = windows_[i];
    if (timestamp < b || timestamp > e) continue;
    const double dist = std::abs(timestamp - 0.5 * (b + e));
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  if (!std::isfinite(best_dist))
    throw CalibrationError("image time " + std::to_string(timestamp) + " outside the trajectory");

  if (!maps_[best]) {
    auto lm = std::make_unique<LocalMap>();
    lm->t_begin = windows_[best].first;
    lm->t_end = windows_[best].second;
    std::vector<LidarScan> scans;
    for (const auto& s : ds_.scans)
      if (s.timestamp >= lm->t_begin && s.timestamp <= lm->t_end) scans.push_back(s);
    AccumulateReport report;
    lm->map = accumulate(scans, ds_.trajectory, ds_.lidar_extrinsics, &report);
    for (const auto& d : report.diagnostics) spdlog::warn("{}", d);
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(lm->map.cloud.size());
    for (const auto& p : lm->map.cloud.points) pts.push_back(p.position());
    auto seg = std::make_shared<RegionSegmentation>(pts, cfg_.region);
    lm->labels.resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) lm->labels[i] = seg->label_of(pts[i]);
    lm->regions = std::move(seg);
    spdlog::info("local map [{:.2f}, {:.2f}] s: {} scans, {} points, {} regions", lm->t_begin,
                 lm->t_end, report.accepted_scans, pts.size(), lm->regions->region_count());
    maps_[best] = std::move(lm);
  }
  return *maps_[best];
}

const GlobalMap& CalibrationProblem::map_at(double timestamp) {
  return local_map_for(timestamp).map;
}

std::shared_ptr<const RegionSegmentation> CalibrationProblem::regions_at(double timestamp) {
  return local_map_for(timestamp).regions;
}

std::vector<FrameInputs> CalibrationProblem::prepare(const std::vector<int>& frame_ids,
                                                     const Pose6& anchor) {
  const CameraIntrinsics& k = ds_.intrinsics;
  const RigidTransform anchor_tf = pose_to_transform(anchor);
  const RigidTransform vehicle_to_anchor = anchor_tf.inverse();
  const double margin = cfg_.map_crop_margin;
  const double u_lo = -margin * k.width, u_hi = (1.0 + margin) * k.width;
  const double base = 0.005, ratio = 1.25;

  std::vector<FrameInputs> out;
  for (int id : frame_ids) {
    const FrameAnalysis& a = analysis(id);
    if (!a.road_found)
      throw CalibrationError("frame " + std::to_string(id) + " has no detected road");
    const StereoFrame* frame = nullptr;
    for (const auto& f : ds_.frames)
      if (f.id == id) frame = &f;
    const GrayImage& gray = side_ == CameraSide::Left ? frame->left : frame->right;
    FrameInputs in = make_frame_inputs(id, a.timestamp, k, gray, a.road_mask, a.plane, cfg_.cost.canny);

    // rows outside the road band (plus the margin) never reach any cost term
    const double v_lo = in.row_begin - margin * k.height, v_hi = in.row_end + margin * k.height;

    LocalMap& lm = local_map_for(a.timestamp);
    const RigidTransform global_to_vehicle = pose_to_transform(pose_at(ds_.trajectory, a.timestamp)).inverse();

    // one representative per voxel; voxel edge grows geometrically with distance
    std::unordered_map<std::uint64_t, std::pair<std::size_t, double>> keep;
    std::vector<Eigen::Vector3d> vehicle_pts;
    const auto& pts = lm.map.cloud.points;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Eigen::Vector3d pv = global_to_vehicle * pts[i].position();
      const Eigen::Vector3d pc = vehicle_to_anchor * pv;
      if (pc.z() <= 0.3 || pc.z() >= cfg_.map_max_range) continue;
      const double u = k.f * pc.x() / pc.z() + k.cu, v = k.f * pc.y() / pc.z() + k.cv;
      if (u < u_lo || u > u_hi || v < v_lo || v > v_hi) continue;
      const double want = cfg_.map_thin_factor * pc.norm();
      int level = want > base ? static_cast<int>(std::floor(std::log(want / base) / std::log(ratio))) : 0;
      level = std::clamp(level, 0, 63);
      const double size = base * std::pow(ratio, level);
      const Eigen::Vector3d cell = (pv / size).array().floor();
      const Eigen::Vector3d centre = (cell.array() + 0.5) * size;
      const double dist = (pv - centre).squaredNorm();
      auto pack = [](double c) { return static_cast<std::uint64_t>(static_cast<std::int64_t>(c) + (1 << 18)) & 0x7ffff; };
      const std::uint64_t key = (static_cast<std::uint64_t>(level) << 57) | (pack(cell.x()) << 38) |
                                (pack(cell.y()) << 19) | pack(cell.z());
      auto [it, inserted] = keep.try_emplace(key, i, dist);
      if (!inserted && (dist < it->second.second ||
                        (dist == it->second.second && i < it->second.first)))
        it->second = {i, dist};
    }
    std::vector<std::size_t> chosen;
    chosen.reserve(keep.size());
    for (const auto& [key, v] : keep) chosen.push_back(v.first);
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t i : chosen) {
      const Eigen::Vector3d pv = global_to_vehicle * pts[i].position();
      in.points.xyz.push_back(pv.cast<float>());
      in.points.intensity.push_back(pts[i].intensity);
      in.points.label.push_back(lm.labels[i]);
    }
    in.regions = lm.regions;
    spdlog::debug("frame {}: {} map points after crop and thinning", id, in.points.xyz.size());
    out.push_back(std::move(in));
  }
  return out;
}

// --- optimization -----------------------------------------------------------

namespace {

struct FrameSum {
  const std::vector<FrameInputs>& frames;
  const Config& cfg;
  FrameEvaluator evaluator;

  CostBreakdown operator()(const Pose6& p) {
    CostBreakdown b;
    for (const FrameInputs& f : frames) {
      const FrameCost c = evaluator.evaluate(f, p, cfg.weights, cfg.cost);
      b.f_edge += c.f_edge;
      b.f_nid += c.f_nid;
      b.f_plane += c.f_plane;
      b.f_sum += c.f_sum;
      b.frames.push_back(c);
    }
    return b;
  }
};

}  // namespace

CalibrationResult optimize(const std::vector<FrameInputs>& frames, const Config& cfg,
                           const Pose6& init) {
  if (frames.empty()) throw CalibrationError("no informative frames");
  FrameSum sum{frames, cfg, {}};
  const Objective f = [&](const Vector6d& x) { return sum(Pose6::from_vector(x)).f_sum; };
  const NelderMeadResult r = nelder_mead(f, init.to_vector(), cfg.optimizer);
  CalibrationResult out;
  out.estimate = Pose6::from_vector(r.x).normalized();
  out.initial_cost = r.initial_cost;
  out.iterations = r.iterations;
  out.evaluations = r.evaluations;
  out.converged = r.converged;
  out.best_history = r.best_history;
  out.breakdown = sum(out.estimate);
  out.cost = out.breakdown.f_sum;
  for (const auto& fr : frames) out.frame_ids.push_back(fr.frame_id);
  return out;
}

CalibrationResult calibrate(CalibrationProblem& problem, const Pose6& init, int k) {
  const std::vector<int> ids = problem.select(k);
  spdlog::info("selected frames: {}", fmt::join(ids, ", "));
  const std::vector<FrameInputs> frames = problem.prepare(ids, problem.anchor(init));
  CalibrationResult r = optimize(frames, problem.config(), init);
  spdlog::info("calibration: cost {:.6g} -> {:.6g} in {} iterations ({} evaluations), converged={}",
               r.initial_cost, r.cost, r.iterations, r.evaluations, r.converged);
  return r;
}

std::vector<SweepRow> sweep(const std::vector<FrameInputs>& frames, const Config& cfg,
                            const Pose6& reference, int param, double range, int steps) {
  if (param < 0 || param > 5) throw CalibrationError("sweep parameter must be 0..5");
  if (steps < 1) throw CalibrationError("sweep needs at least one step");
  if (range < 0) throw CalibrationError("sweep range must be non-negative");
  if (frames.empty()) throw CalibrationError("no informative frames");
  const int n = range == 0 ? 1 : steps;
  std::vector<SweepRow> rows(static_cast<std::size_t>(n));
  parallel_for(rows.size(), 0, [&](std::size_t i) {
    const double offset =
        n == 1 ? 0.0 : range * (2.0 * static_cast<double>(i) - (n - 1)) / static_cast<double>(n - 1);
    Pose6 p = reference;
    p[param] += param < 3 ? offset : deg2rad(offset);
    FrameSum sum{frames, cfg, {}};
    rows[i] = {param, offset, sum(p)};
  });
  return rows;
}

std::size_t sweep_argmin(const std::vector<SweepRow>& rows) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].cost.f_sum < rows[best].cost.f_sum) best = i;
  return best;
}

// --- repeatability ------------------------------------------------------------

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw CalibrationError("quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Vector6d pose_error(const Pose6& estimate, const Pose6& reference) {
  Vector6d e;
  for (int i = 0; i < 3; ++i) e[i] = estimate[i] - reference[i];
  for (int i = 3; i < 6; ++i) e[i] = rad2deg(normalize_angle(estimate[i] - reference[i]));
  return e;
}

const RepeatSummary& RepeatabilityReport::at(int images, int param) const {
  for (const auto& s : summary)
    if (s.images == images && s.param == param) return s;
  throw CalibrationError("no repeatability summary for " + std::to_string(images) + " images");
}

RepeatabilityReport repeatability(CalibrationProblem& problem, const Pose6& reference,
                                  const RepeatOptions& opts) {
  if (opts.runs < 1) throw CalibrationError("repeatability needs at least one run");
  if (opts.counts.empty()) throw CalibrationError("repeatability needs image counts");
  for (int c : opts.counts)
    if (c < 1) throw CalibrationError("image counts must be >= 1");
  const int max_k = *std::max_element(opts.counts.begin(), opts.counts.end());
  const std::vector<int> ids = problem.select(max_k);
  const std::vector<FrameInputs> all = problem.prepare(ids, problem.anchor(reference));

  // one initial offset per run, shared by every image count
  std::vector<Pose6> inits(static_cast<std::size_t>(opts.runs));
  for (int r = 0; r < opts.runs; ++r) {
    std::mt19937_64 rng(mix(opts.seed ^ mix(static_cast<std::uint64_t>(r) + 1)));
    std::uniform_real_distribution<double> ut(-opts.perturb_t, opts.perturb_t);
    std::uniform_real_distribution<double> ur(-opts.perturb_r_deg, opts.perturb_r_deg);
    Vector6d d;
    for (int i = 0; i < 3; ++i) d[i] = opts.perturb_t > 0 ? ut(rng) : 0.0;
    for (int i = 3; i < 6; ++i) d[i] = opts.perturb_r_deg > 0 ? deg2rad(ur(rng)) : 0.0;
    inits[static_cast<std::size_t>(r)] = Pose6::from_vector(reference.to_vector() + d);
  }

  RepeatabilityReport report;
  const std::size_t n_counts = opts.counts.size();
  report.runs.resize(static_cast<std::size_t>(opts.runs) * n_counts);
  std::atomic<int> done{0};
  parallel_for(report.runs.size(), opts.threads, [&](std::size_t job) {
    const int run = static_cast<int>(job / n_counts);
    const int images = std::min<int>(opts.counts[job % n_counts], static_cast<int>(all.size()));
    const std::vector<FrameInputs> frames(all.begin(), all.begin() + images);
    const CalibrationResult res = optimize(frames, problem.config(), inits[static_cast<std::size_t>(run)]);
    RepeatRun& out = report.runs[job];
    out.run = run;
    out.images = opts.counts[job % n_counts];
    out.init = inits[static_cast<std::size_t>(run)];
    out.estimate = res.estimate;
    out.error = pose_error(res.estimate, reference);
    out.cost = res.cost;
    out.iterations = res.iterations;
    out.converged = res.converged;
    out.history_monotone = is_non_increasing(res.best_history);
    const int n = ++done;
    spdlog::info("repeat {}/{}: run {} with {} images, cost {:.6g}, iters {}", n,
                 report.runs.size(), run, out.images, out.cost, out.iterations);
  });

  for (int images : opts.counts) {
    for (int p = 0; p < 6; ++p) {
      std::vector<double> err, abs_err;
      for (const auto& r : report.runs)
        if (r.images == images) {
          err.push_back(r.error[p]);
          abs_err.push_back(std::abs(r.error[p]));
        }
      RepeatSummary s;
      s.images = images;
      s.param = p;
      s.q25 = quantile(err, 0.25);
      s.q50 = quantile(err, 0.5);
      s.q75 = quantile(err, 0.75);
      s.median_abs = quantile(abs_err, 0.5);
      report.summary.push_back(s);
    }
  }
  return report;
}

// --- projection ---------------------------------------------------------------

RgbImage projection_overlay(CalibrationProblem& problem, int frame_id,
                            const Pose6& camera_to_vehicle) {
  const std::vector<FrameInputs> frames = problem.prepare({frame_id}, camera_to_vehicle);
  const FrameInputs& f = frames.front();
  std::vector<CameraPoint> cam;
  const RigidTransform to_cam = pose_to_transform(camera_to_vehicle).inverse();
  for (std::size_t i = 0; i < f.points.xyz.size(); ++i) {
    const Eigen::Vector3f p = (to_cam * f.points.xyz[i].cast<double>()).cast<float>();
    cam.push_back({p.x(), p.y(), p.z(), f.points.intensity[i]});
  }
  LidarIntensityImage lidar;
  RenderScratch scratch;
  RenderOptions ro = problem.config().cost.render;
  ro.splat_radius = 0;
  render_points(cam, f.k, ro, lidar, scratch);

  RgbImage out(f.gray.width(), f.gray.height());
  for (int v = 0; v < out.height(); ++v)
    for (int u = 0; u < out.width(); ++u) {
      const std::uint8_t g = f.gray(u, v);
      if (!lidar.valid(u, v)) {
        out(u, v) = {g, g, g};
        continue;
      }
      // intensity drawn from blue (dark) to yellow (bright)
      const double t = lidar.intensity(u, v) / 255.0;
      out(u, v) = {clamp_intensity(255.0 * t), clamp_intensity(255.0 * t),
                   clamp_intensity(255.0 * (1.0 - t))};
    }
  return out;
}

}  // namespace roadcal
