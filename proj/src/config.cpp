#include "roadcal/config.hpp"

#include <algorithm>
#include <charconv>
#include <spdlog/fmt/fmt.h>
#include <functional>
#include <sstream>

namespace roadcal {

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw CalibrationError("config key '" + key + "': cannot parse '" + text + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw CalibrationError("config key '" + key + "': expected true/false, got '" + text + "'");
}

std::string format_number(double v) { return fmt::format("{}", v); }

struct Field {
  std::string key;
  std::function<std::string(Config&)> get;
  std::function<void(Config&, const std::string&)> set;
};

template <typename T>
Field number(std::string key, std::function<T&(Config&)> ref) {
  return {key, [ref](Config& c) { return fmt::format("{}", ref(c)); },
          [ref, key](Config& c, const std::string& s) { ref(c) = parse_number<T>(key, s); }};
}

Field boolean(std::string key, std::function<bool&(Config&)> ref) {
  return {key, [ref](Config& c) { return std::string(ref(c) ? "true" : "false"); },
          [ref, key](Config& c, const std::string& s) { ref(c) = parse_bool(key, s); }};
}

// angles stored in radians, exposed in degrees
Field degrees(std::string key, std::function<double&(Config&)> ref) {
  return {key, [ref](Config& c) { return format_number(rad2deg(ref(c))); },
          [ref, key](Config& c, const std::string& s) {
            ref(c) = deg2rad(parse_number<double>(key, s));
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(number<std::uint64_t>("seed", [](Config& c) -> std::uint64_t& { return c.seed; }));
    f.push_back(number<double>("weights.k1", [](Config& c) -> double& { return c.weights.k1; }));
    f.push_back(number<double>("weights.k2", [](Config& c) -> double& { return c.weights.k2; }));
    f.push_back(number<double>("weights.k3", [](Config& c) -> double& { return c.weights.k3; }));
    f.push_back(number<int>("nid.bins", [](Config& c) -> int& { return c.cost.nid_bins; }));
    f.push_back(number<std::size_t>("nid.min_covalid",
                                    [](Config& c) -> std::size_t& { return c.cost.min_covalid; }));
    f.push_back(number<double>("canny.low", [](Config& c) -> double& { return c.cost.canny.low; }));
    f.push_back(number<double>("canny.high", [](Config& c) -> double& { return c.cost.canny.high; }));
    f.push_back(number<double>("canny.sigma", [](Config& c) -> double& { return c.cost.canny.sigma; }));
    f.push_back({"plane.residual",
                 [](Config& c) {
                   return std::string(c.cost.plane_residual == PlaneResidual::Absolute ? "abs"
                                                                                       : "signed");
                 },
                 [](Config& c, const std::string& s) {
                   if (s == "abs") c.cost.plane_residual = PlaneResidual::Absolute;
                   else if (s == "signed") c.cost.plane_residual = PlaneResidual::Signed;
                   else throw CalibrationError("config key 'plane.residual': expected abs|signed");
                 }});
    f.push_back(boolean("edge.normalize", [](Config& c) -> bool& { return c.cost.edge_normalize; }));
    f.push_back(number<int>("region.k", [](Config& c) -> int& { return c.region.k; }));
    f.push_back(number<double>("region.theta_smooth_deg",
                               [](Config& c) -> double& { return c.region.theta_smooth_deg; }));
    f.push_back(number<double>("region.tau_seed", [](Config& c) -> double& { return c.region.tau_seed; }));
    f.push_back(number<double>("region.voxel", [](Config& c) -> double& { return c.region.voxel; }));
    f.push_back(number<int>("disparity.window", [](Config& c) -> int& { return c.disparity.window; }));
    f.push_back(number<int>("disparity.max", [](Config& c) -> int& { return c.disparity.max_disparity; }));
    f.push_back(number<double>("disparity.lr_tolerance",
                               [](Config& c) -> double& { return c.disparity.lr_tolerance; }));
    f.push_back(number<int>("vdisp.iterations", [](Config& c) -> int& { return c.road_line.iterations; }));
    f.push_back(number<double>("vdisp.inlier_threshold",
                               [](Config& c) -> double& { return c.road_line.inlier_threshold; }));
    f.push_back(number<double>("vdisp.min_inlier_fraction",
                               [](Config& c) -> double& { return c.road_line.min_inlier_fraction; }));
    f.push_back(number<double>("road.tau", [](Config& c) -> double& { return c.road_tau; }));
    f.push_back(number<double>("plane.tau", [](Config& c) -> double& { return c.plane.inlier_threshold; }));
    f.push_back(number<std::size_t>("plane.min_points",
                                    [](Config& c) -> std::size_t& { return c.plane.min_points; }));
    f.push_back(number<int>("plane.ransac_iters", [](Config& c) -> int& { return c.plane.iterations; }));
    f.push_back(number<double>("plane.min_inlier_ratio",
                               [](Config& c) -> double& { return c.plane.min_inlier_ratio; }));
    f.push_back(number<double>("segments.min_length",
                               [](Config& c) -> double& { return c.segments.hough.min_length; }));
    f.push_back(number<int>("segments.max_gap", [](Config& c) -> int& { return c.segments.hough.max_gap; }));
    f.push_back(number<int>("segments.threshold",
                            [](Config& c) -> int& { return c.segments.hough.threshold; }));
    f.push_back(number<double>("segments.mask_fraction",
                               [](Config& c) -> double& { return c.segments.min_mask_fraction; }));
    f.push_back(number<double>("vp.threshold_deg", [](Config& c) -> double& { return c.vote.threshold_deg; }));
    f.push_back(number<double>("vp.cap", [](Config& c) -> double& { return c.vote.cap; }));
    f.push_back(number<int>("vp.region_width_div", [](Config& c) -> int& { return c.vp_region_width_div; }));
    f.push_back(number<int>("vp.region_height_div", [](Config& c) -> int& { return c.vp_region_height_div; }));
    f.push_back(number<int>("select.k", [](Config& c) -> int& { return c.select_k; }));
    f.push_back(number<double>("optimizer.step_t", [](Config& c) -> double& { return c.optimizer.initial_step[0]; }));
    f.push_back(degrees("optimizer.step_r_deg", [](Config& c) -> double& { return c.optimizer.initial_step[3]; }));
    f.push_back(number<double>("optimizer.f_tol", [](Config& c) -> double& { return c.optimizer.f_tol; }));
    f.push_back(number<double>("optimizer.x_tol_t", [](Config& c) -> double& { return c.optimizer.x_tol[0]; }));
    f.push_back(degrees("optimizer.x_tol_r_deg", [](Config& c) -> double& { return c.optimizer.x_tol[3]; }));
    f.push_back(number<int>("optimizer.max_iter", [](Config& c) -> int& { return c.optimizer.max_iter; }));
    f.push_back(boolean("optimizer.restart", [](Config& c) -> bool& { return c.optimizer.restart; }));
    f.push_back(number<double>("map.window_m", [](Config& c) -> double& { return c.map_window_m; }));
    f.push_back(number<double>("map.thin_factor", [](Config& c) -> double& { return c.map_thin_factor; }));
    f.push_back(number<double>("map.max_range", [](Config& c) -> double& { return c.map_max_range; }));
    f.push_back(number<double>("map.crop_margin", [](Config& c) -> double& { return c.map_crop_margin; }));
    f.push_back(number<int>("render.splat_radius", [](Config& c) -> int& { return c.cost.render.splat_radius; }));
    f.push_back(number<double>("proj.z_min", [](Config& c) -> double& { return c.cost.render.z_min; }));
    f.push_back(number<int>("repeat.runs", [](Config& c) -> int& { return c.repeat_runs; }));
    f.push_back(number<double>("repeat.perturb_t", [](Config& c) -> double& { return c.repeat_perturb_t; }));
    f.push_back(number<double>("repeat.perturb_r_deg",
                               [](Config& c) -> double& { return c.repeat_perturb_r_deg; }));
    f.push_back({"repeat.counts",
                 [](Config& c) {
                   std::string s;
                   for (std::size_t i = 0; i < c.repeat_counts.size(); ++i)
                     s += (i ? "," : "") + std::to_string(c.repeat_counts[i]);
                   return s;
                 },
                 [](Config& c, const std::string& s) {
                   std::vector<int> counts;
                   std::stringstream ss(s);
                   std::string item;
                   while (std::getline(ss, item, ','))
                     counts.push_back(parse_number<int>("repeat.counts", item));
                   if (counts.empty()) throw CalibrationError("config key 'repeat.counts' is empty");
                   c.repeat_counts = counts;
                 }});
    return f;
  }();
  return table;
}

void validate(const Config& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw CalibrationError(std::string("invalid config: ") + what);
  };
  require(c.weights.k1 >= 0 && c.weights.k2 >= 0 && c.weights.k3 >= 0, "weights must be >= 0");
  require(c.cost.nid_bins >= 1 && c.cost.nid_bins <= 256, "nid.bins must be in [1, 256]");
  require(c.cost.canny.sigma > 0 && c.cost.canny.low <= c.cost.canny.high, "canny thresholds");
  require(c.disparity.window >= 1 && c.disparity.window % 2 == 1, "disparity.window must be odd");
  require(c.disparity.max_disparity >= 1, "disparity.max must be >= 1");
  require(c.select_k >= 1, "select.k must be >= 1");
  require(c.region.k >= 3, "region.k must be >= 3");
  require(c.optimizer.max_iter >= 1, "optimizer.max_iter must be >= 1");
  require(c.map_window_m > 0, "map.window_m must be > 0");
  require(c.map_thin_factor >= 0, "map.thin_factor must be >= 0");
  require(c.repeat_runs >= 1, "repeat.runs must be >= 1");
  require(c.vp_region_width_div >= 1 && c.vp_region_height_div >= 1, "vp region divisors");
  for (int k : c.repeat_counts) require(k >= 1, "repeat.counts entries must be >= 1");
}

}  // namespace

std::vector<std::string> Config::keys() {
  std::vector<std::string> k;
  for (const Field& f : fields()) k.push_back(f.key);
  return k;
}

std::vector<std::pair<std::string, std::string>> Config::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  Config copy = *this;
  for (const Field& f : fields()) out.emplace_back(f.key, f.get(copy));
  return out;
}

void Config::apply(const KeyValues& kv) {
  for (const auto& [key, value] : kv) {
    auto it = std::find_if(fields().begin(), fields().end(),
                           [&](const Field& f) { return f.key == key; });
    if (it == fields().end()) throw CalibrationError("unknown config key '" + key + "'");
    it->set(*this, value);
  }
  // the optimizer steps and tolerances are set per group
  for (int i = 1; i < 3; ++i) {
    optimizer.initial_step[i] = optimizer.initial_step[0];
    optimizer.x_tol[i] = optimizer.x_tol[0];
  }
  for (int i = 4; i < 6; ++i) {
    optimizer.initial_step[i] = optimizer.initial_step[3];
    optimizer.x_tol[i] = optimizer.x_tol[3];
  }
  validate(*this);
  propagate_seed();
}

void Config::propagate_seed() {
  road_line.seed = seed;
  plane.seed = seed;
  segments.hough.seed = seed;
  segments.canny = cost.canny;
  region.tau_seed = region.tau_seed > 0 ? region.tau_seed : 0.1;
  cost.tau_seed = region.tau_seed;
}

Config parse_config(const std::string& text) {
  Config c;
  c.apply(parse_key_values(text));
  return c;
}

Config load_config(const std::filesystem::path& path) {
  Config c;
  c.apply(read_key_values(path));
  return c;
}

std::string format_config(const Config& c) {
  std::string out;
  for (const auto& [k, v] : c.entries()) out += k + "=" + v + "\n";
  return out;
}

}  // namespace roadcal
