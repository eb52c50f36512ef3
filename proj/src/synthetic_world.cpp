#include "roadcal/synthetic_world.hpp"

#include "roadcal/local_map.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace roadcal {

namespace {

constexpr double kNoHit = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ (tag << 56)) ^ index);
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

}  // namespace

// ---------------------------------------------------------------------------

std::vector<LidarSpec> default_lidars() {
  std::vector<double> rings;
  for (int i = 0; i < 16; ++i) rings.push_back(-15.0 + 2.0 * i);

  LidarSpec left;
  left.id = 0;
  left.kind = LidarSpec::Kind::Spinning;
  left.mount = {0.5, 0.8, 1.9, deg2rad(-40.0), 0.0, 0.0};
  left.rate_hz = 10.0;
  left.time_offset = 0.0;
  left.elevations_deg = rings;
  left.az_min_deg = -180.0;
  left.az_max_deg = 180.0;
  left.az_step_deg = 1.2;
  left.use_sector = true;
  left.sector_min_deg = 45.0;
  left.sector_max_deg = 135.0;

  LidarSpec right = left;
  right.id = 1;
  right.mount = {0.5, -0.9, 1.9, deg2rad(40.0), 0.0, 0.0};
  right.time_offset = 0.05;
  right.sector_min_deg = -135.0;
  right.sector_max_deg = -45.0;

  LidarSpec front;
  front.id = 2;
  front.kind = LidarSpec::Kind::Planar;
  front.mount = {3.5, 0.0, 0.4, 0.0, deg2rad(30.0), 0.0};
  front.rate_hz = 50.0;
  front.time_offset = 0.01;
  front.elevations_deg = {0.0};
  front.az_min_deg = -85.0;
  front.az_max_deg = 85.0;
  front.az_step_deg = 0.5;
  front.max_range = 30.0;

  LidarSpec rear = front;
  rear.id = 3;
  rear.mount = {-1.0, 0.0, 0.4, 0.0, deg2rad(30.0), deg2rad(180.0)};
  rear.time_offset = 0.03;
  return {left, right, front, rear};
}

SceneSpec default_scene_spec() {
  SceneSpec s;
  s.lidars = default_lidars();
  return s;
}

void SceneSpec::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw CalibrationError("invalid scene spec: " + what);
  };
  require(road_width > 0 && sidewalk_width >= 0 && curb_height >= 0 && wall_height >= 0,
          "road geometry");
  require(road_x_max > road_x_min, "road extent");
  require(trajectory_length > 0 && speed > 0 && trajectory_rate > 0, "trajectory");
  require(camera_rate > 0 && camera_offset >= 0, "camera rate");
  require(supersample >= 1, "supersample must be >= 1");
  require(range_sigma >= 0 && intensity_sigma >= 0 && gray_sigma >= 0, "noise levels");
  require(center_dash >= 0 && center_gap >= 0, "centre line dashes");
  require(crosswalk_pitch > 0, "crosswalk pitch");
  intrinsics.validate();
  for (const auto& l : lidars) {
    require(l.rate_hz > 0 && l.az_step_deg > 0 && !l.elevations_deg.empty(),
            "lidar " + std::to_string(l.id));
    require(l.az_max_deg >= l.az_min_deg, "lidar azimuth range");
  }
  const Vector6d t = camera_truth.to_vector();
  for (int i = 0; i < 6; ++i) require(std::isfinite(t[i]), "camera truth must be finite");
}

SceneSpec without_noise(SceneSpec spec) {
  spec.range_sigma = 0;
  spec.intensity_sigma = 0;
  spec.gray_sigma = 0;
  return spec;
}

// --- spec parsing ---------------------------------------------------------

namespace {

double to_double(const std::string& key, const std::string& s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw CalibrationError("scene spec key '" + key + "': cannot parse '" + s + "'");
  return v;
}

std::vector<double> to_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  if (s.empty() || s == "none") return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
  return out;
}

}  // namespace

SceneSpec parse_scene_spec(const KeyValues& kv, SceneSpec base) {
  SceneSpec s = std::move(base);
  for (const auto& [key, value] : kv) {
    auto num = [&] { return to_double(key, value); };
    auto set = [&](const char* name, double& field) {
      if (key != name) return false;
      field = num();
      return true;
    };
    auto set_deg = [&](const char* name, double& field) {
      if (key != name) return false;
      field = deg2rad(num());
      return true;
    };
    if (set("road.width", s.road_width) || set("road.x_min", s.road_x_min) ||
        set("road.x_max", s.road_x_max) || set("sidewalk.width", s.sidewalk_width) ||
        set("curb.height", s.curb_height) || set("wall.height", s.wall_height) ||
        set("marking.edge_width", s.edge_line_width) ||
        set("marking.edge_inset", s.edge_line_inset) ||
        set("marking.center_width", s.center_line_width) ||
        set("marking.center_dash", s.center_dash) || set("marking.center_gap", s.center_gap) ||
        set("crosswalk.stripe_width", s.crosswalk_stripe_width) ||
        set("crosswalk.pitch", s.crosswalk_pitch) || set("crosswalk.length", s.crosswalk_length) ||
        set("stopline.width", s.stop_line_width) || set("stopline.gap", s.stop_line_gap) ||
        set("trajectory.start_x", s.start_x) || set("trajectory.length", s.trajectory_length) ||
        set("trajectory.speed", s.speed) ||
        set("trajectory.weave_amplitude", s.weave_amplitude) ||
        set("trajectory.weave_period", s.weave_period) ||
        set("trajectory.rate", s.trajectory_rate) || set("camera.f", s.intrinsics.f) ||
        set("camera.cu", s.intrinsics.cu) || set("camera.cv", s.intrinsics.cv) ||
        set("camera.baseline", s.intrinsics.baseline) || set("camera.rate", s.camera_rate) ||
        set("camera.offset", s.camera_offset) || set("camera.tx", s.camera_truth.tx) ||
        set("camera.ty", s.camera_truth.ty) || set("camera.tz", s.camera_truth.tz) ||
        set_deg("camera.rx_deg", s.camera_truth.rx) || set_deg("camera.ry_deg", s.camera_truth.ry) ||
        set_deg("camera.rz_deg", s.camera_truth.rz) || set("nominal.dtx", s.nominal_offset.tx) ||
        set("nominal.dty", s.nominal_offset.ty) || set("nominal.dtz", s.nominal_offset.tz) ||
        set_deg("nominal.drx_deg", s.nominal_offset.rx) ||
        set_deg("nominal.dry_deg", s.nominal_offset.ry) ||
        set_deg("nominal.drz_deg", s.nominal_offset.rz) ||
        set("reflect.asphalt", s.reflect_asphalt) || set("reflect.marking", s.reflect_marking) ||
        set("reflect.sidewalk", s.reflect_sidewalk) || set("reflect.curb", s.reflect_curb) ||
        set("reflect.wall", s.reflect_wall) || set("reflect.box", s.reflect_box) ||
        set("sky.gray", s.sky_gray) || set("texture.asphalt", s.texture_asphalt) ||
        set("texture.marking", s.texture_marking) || set("texture.sidewalk", s.texture_sidewalk) ||
        set("texture.wall", s.texture_wall) || set("texture.box", s.texture_box) ||
        set("noise.range", s.range_sigma) || set("noise.intensity", s.intensity_sigma) ||
        set("noise.gray", s.gray_sigma))
      continue;
    if (key == "camera.width") s.intrinsics.width = static_cast<int>(num());
    else if (key == "camera.height") s.intrinsics.height = static_cast<int>(num());
    else if (key == "camera.supersample") s.supersample = static_cast<int>(num());
    else if (key == "crosswalk.x") s.crosswalks = to_list(key, value);
    else if (key == "lidar.rate_3d" || key == "lidar.rate_2d") {
      const auto kind = key == "lidar.rate_3d" ? LidarSpec::Kind::Spinning : LidarSpec::Kind::Planar;
      for (auto& l : s.lidars)
        if (l.kind == kind) l.rate_hz = num();
    } else if (key.rfind("box.", 0) == 0) {
      // box.<n>=cx,cy,sx,sy,sz[,yaw_deg]
      const auto v = to_list(key, value);
      if (v.size() != 5 && v.size() != 6)
        throw CalibrationError("scene spec key '" + key + "': expected cx,cy,sx,sy,sz[,yaw_deg]");
      s.boxes.push_back({v[0], v[1], v[2], v[3], v[4], v.size() == 6 ? deg2rad(v[5]) : 0.0});
    } else {
      throw CalibrationError("unknown scene spec key '" + key + "'");
    }
  }
  s.validate();
  return s;
}

SceneSpec load_scene_spec(const std::filesystem::path& path) {
  return parse_scene_spec(read_key_values(path));
}

// --- scene ----------------------------------------------------------------

SyntheticScene::SyntheticScene(SceneSpec spec, std::uint64_t texture_seed)
    : spec_(std::move(spec)), seed_(texture_seed) {
  spec_.validate();
}

Hit SyntheticScene::intersect(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                              double t_min) const {
  const SceneSpec& s = spec_;
  const double half = 0.5 * s.road_width;
  const double outer = half + s.sidewalk_width;
  Hit best;
  best.t = kNoHit;
  auto consider = [&](double t, Surface surf) {
    if (t > t_min && t < best.t) {
      best.t = t;
      best.surface = surf;
    }
  };
  auto in_x = [&](double x) { return x >= s.road_x_min && x <= s.road_x_max; };

  if (d.z() < 0) {
    const double t = -o.z() / d.z();
    const Eigen::Vector3d p = o + t * d;
    if (std::abs(p.y()) <= half && in_x(p.x())) consider(t, Surface::Road);
    if (o.z() > s.curb_height) {
      const double ts = (s.curb_height - o.z()) / d.z();
      const Eigen::Vector3d q = o + ts * d;
      if (std::abs(q.y()) > half && std::abs(q.y()) <= outer && in_x(q.x()))
        consider(ts, Surface::Sidewalk);
    }
  }
  if (d.y() != 0) {
    for (double side : {-1.0, 1.0}) {
      const double tc = (side * half - o.y()) / d.y();
      const Eigen::Vector3d pc = o + tc * d;
      if (pc.z() >= 0 && pc.z() <= s.curb_height && in_x(pc.x())) consider(tc, Surface::Curb);
      const double tw = (side * outer - o.y()) / d.y();
      const Eigen::Vector3d pw = o + tw * d;
      if (pw.z() >= s.curb_height && pw.z() <= s.curb_height + s.wall_height && in_x(pw.x()))
        consider(tw, Surface::Wall);
    }
  }
  for (const BoxObstacle& b : s.boxes) {
    // slab test in the box frame
    const double c = std::cos(-b.yaw), sn = std::sin(-b.yaw);
    const Eigen::Vector3d lo(o.x() - b.cx, o.y() - b.cy, o.z());
    const Eigen::Vector3d ol(c * lo.x() - sn * lo.y(), sn * lo.x() + c * lo.y(), lo.z());
    const Eigen::Vector3d dl(c * d.x() - sn * d.y(), sn * d.x() + c * d.y(), d.z());
    const Eigen::Vector3d bmin(-0.5 * b.sx, -0.5 * b.sy, 0.0), bmax(0.5 * b.sx, 0.5 * b.sy, b.sz);
    double t0 = -kNoHit, t1 = kNoHit;
    bool miss = false;
    for (int i = 0; i < 3 && !miss; ++i) {
      if (dl[i] == 0) {
        if (ol[i] < bmin[i] || ol[i] > bmax[i]) miss = true;
        continue;
      }
      double ta = (bmin[i] - ol[i]) / dl[i], tb = (bmax[i] - ol[i]) / dl[i];
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) miss = true;
    }
    if (!miss) consider(t0 > t_min ? t0 : t1, Surface::Box);
  }
  if (best.surface != Surface::None) best.point = o + best.t * d;
  return best;
}

bool SyntheticScene::is_marking(double x, double y) const {
  const SceneSpec& s = spec_;
  const double half = 0.5 * s.road_width;
  const double ay = std::abs(y);
  if (ay > half) return false;
  const double edge_centre = half - s.edge_line_inset;
  if (std::abs(ay - edge_centre) <= 0.5 * s.edge_line_width) return true;
  const double inner = edge_centre - 0.5 * s.edge_line_width;
  for (double xc : s.crosswalks) {
    const double near = xc - 0.5 * s.crosswalk_length;
    if (std::abs(x - xc) <= 0.5 * s.crosswalk_length) {
      const double k = std::round(y / s.crosswalk_pitch);
      const double yc = k * s.crosswalk_pitch;
      if (std::abs(y - yc) <= 0.5 * s.crosswalk_stripe_width &&
          std::abs(yc) + 0.5 * s.crosswalk_stripe_width <= inner)
        return true;
      return false;  // no centre line across the crosswalk
    }
    const double stop_end = near - s.stop_line_gap;
    if (x <= stop_end && x >= stop_end - s.stop_line_width && ay <= inner) return true;
  }
  if (ay <= 0.5 * s.center_line_width) {
    if (s.center_dash <= 0) return true;
    const double period = s.center_dash + s.center_gap;
    const double phase = std::fmod(x - s.road_x_min, period);
    return phase < s.center_dash;
  }
  return false;
}

double SyntheticScene::reflectance(const Hit& h) const {
  switch (h.surface) {
    case Surface::Road:
      return is_marking(h.point.x(), h.point.y()) ? spec_.reflect_marking : spec_.reflect_asphalt;
    case Surface::Sidewalk: return spec_.reflect_sidewalk;
    case Surface::Curb: return spec_.reflect_curb;
    case Surface::Wall: return spec_.reflect_wall;
    case Surface::Box: return spec_.reflect_box;
    case Surface::None: break;
  }
  return 0.0;
}

double SyntheticScene::value_noise(double x, double y, double cell, std::uint64_t channel) const {
  const double fx = x / cell, fy = y / cell;
  const double x0 = std::floor(fx), y0 = std::floor(fy);
  const double tx = smoothstep(fx - x0), ty = smoothstep(fy - y0);
  auto lattice = [&](double ix, double iy) {
    const auto a = static_cast<std::uint64_t>(static_cast<std::int64_t>(ix));
    const auto b = static_cast<std::uint64_t>(static_cast<std::int64_t>(iy));
    const std::uint64_t h = splitmix64(seed_ ^ splitmix64(a ^ splitmix64(b ^ (channel << 48))));
    return static_cast<double>(h >> 11) * (2.0 / 9007199254740992.0) - 1.0;
  };
  const double v00 = lattice(x0, y0), v10 = lattice(x0 + 1, y0);
  const double v01 = lattice(x0, y0 + 1), v11 = lattice(x0 + 1, y0 + 1);
  return (v00 * (1 - tx) + v10 * tx) * (1 - ty) + (v01 * (1 - tx) + v11 * tx) * ty;
}

double SyntheticScene::albedo(const Hit& h) const {
  const Eigen::Vector3d& p = h.point;
  auto two_octaves = [&](double u, double v, double coarse, double fine, std::uint64_t ch) {
    return 0.5 * value_noise(u, v, coarse, ch) + 0.5 * value_noise(u, v, fine, ch + 1);
  };
  const double base = reflectance(h);
  switch (h.surface) {
    case Surface::Road: {
      const bool marking = is_marking(p.x(), p.y());
      const double amp = marking ? spec_.texture_marking : spec_.texture_asphalt;
      return base + amp * two_octaves(p.x(), p.y(), 0.2, 0.03, 1);
    }
    case Surface::Sidewalk: {
      // paving slabs with darker joints
      const double jx = std::abs(p.x() / 0.5 - std::round(p.x() / 0.5)) * 0.5;
      const double jy = std::abs(p.y() / 0.5 - std::round(p.y() / 0.5)) * 0.5;
      const double joint = (jx < 0.01 || jy < 0.01) ? -25.0 : 0.0;
      return base + joint + spec_.texture_sidewalk * two_octaves(p.x(), p.y(), 0.15, 0.04, 3);
    }
    case Surface::Curb: return base + 8.0 * two_octaves(p.x(), p.z(), 0.1, 0.03, 5);
    case Surface::Wall: return base + spec_.texture_wall * two_octaves(p.x(), p.z(), 0.3, 0.06, 7);
    case Surface::Box:
      return base + spec_.texture_box * two_octaves(p.x() + p.y(), p.z(), 0.2, 0.05, 9);
    case Surface::None: break;
  }
  return spec_.sky_gray;
}

Pose6 SyntheticScene::vehicle_pose(double t) const {
  const SceneSpec& s = spec_;
  const double x = s.start_x + s.speed * t;
  const double k = 2.0 * kPi / s.weave_period;
  Pose6 p;
  p.tx = x;
  p.ty = s.weave_amplitude * std::sin(k * x);
  p.rz = std::atan(s.weave_amplitude * k * std::cos(k * x));
  return p;
}

RigidTransform SyntheticScene::camera_to_global(double t, bool right) const {
  RigidTransform cam = pose_to_transform(spec_.camera_truth);
  if (right) cam = cam * RigidTransform::from_translation(spec_.intrinsics.baseline, 0, 0);
  return pose_to_transform(vehicle_pose(t)) * cam;
}

std::vector<double> SyntheticScene::render_camera(double t, bool right) const {
  const CameraIntrinsics& k = spec_.intrinsics;
  const RigidTransform T = camera_to_global(t, right);
  const Eigen::Matrix3d& R = T.rotation();
  const Eigen::Vector3d& o = T.translation();
  const int ss = spec_.supersample;
  std::vector<double> out(static_cast<std::size_t>(k.width) * k.height, 0.0);
  for (int v = 0; v < k.height; ++v)
    for (int u = 0; u < k.width; ++u) {
      double acc = 0;
      for (int j = 0; j < ss; ++j)
        for (int i = 0; i < ss; ++i) {
          const double su = u - 0.5 + (i + 0.5) / ss;
          const double sv = v - 0.5 + (j + 0.5) / ss;
          const Eigen::Vector3d dir = R * Eigen::Vector3d((su - k.cu) / k.f, (sv - k.cv) / k.f, 1.0);
          const Hit h = intersect(o, dir);
          acc += h.surface == Surface::None ? spec_.sky_gray : albedo(h);
        }
      out[static_cast<std::size_t>(v) * k.width + u] = acc / (ss * ss);
    }
  return out;
}

Pose6 truth(const SceneSpec& spec) { return spec.camera_truth.normalized(); }

Pose6 right_camera_truth(const SceneSpec& spec) {
  const RigidTransform right = pose_to_transform(spec.camera_truth) *
                               RigidTransform::from_translation(spec.intrinsics.baseline, 0, 0);
  return transform_to_pose(right);
}

// --- dataset --------------------------------------------------------------

namespace {

Pose6 add_offset(const Pose6& p, const Pose6& d) {
  return Pose6::from_vector(p.to_vector() + d.to_vector()).normalized();
}

LidarScan scan_once(const SyntheticScene& scene, const LidarSpec& l, double t, std::uint64_t seed) {
  const SceneSpec& s = scene.spec();
  LidarScan scan;
  scan.timestamp = t;
  scan.sensor_id = l.id;
  scan.cloud.frame_id = "lidar" + std::to_string(l.id);
  const RigidTransform mount = pose_to_transform(l.mount);
  const RigidTransform to_global = pose_to_transform(scene.vehicle_pose(t)) * mount;
  const Eigen::Vector3d origin = to_global.translation();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> range_noise(0.0, s.range_sigma);
  std::normal_distribution<double> intensity_noise(0.0, s.intensity_sigma);
  const int n_az = static_cast<int>(std::floor((l.az_max_deg - l.az_min_deg) / l.az_step_deg + 1e-9)) + 1;
  for (double elev : l.elevations_deg) {
    const double ce = std::cos(deg2rad(elev)), se = std::sin(deg2rad(elev));
    for (int a = 0; a < n_az; ++a) {
      const double az = deg2rad(l.az_min_deg + a * l.az_step_deg);
      if (l.kind == LidarSpec::Kind::Spinning && a == n_az - 1 &&
          std::abs(l.az_max_deg - l.az_min_deg - 360.0) < 1e-9)
        continue;  // full turn: the last azimuth repeats the first
      const Eigen::Vector3d d_sensor(ce * std::cos(az), ce * std::sin(az), se);
      const Eigen::Vector3d d_vehicle = mount.rotation() * d_sensor;
      if (l.use_sector) {
        const double vaz = rad2deg(std::atan2(d_vehicle.y(), d_vehicle.x()));
        if (vaz < l.sector_min_deg || vaz > l.sector_max_deg) continue;
      }
      const Hit h = scene.intersect(origin, to_global.rotation() * d_sensor);
      if (h.surface == Surface::None || h.t > l.max_range || h.t < 0.3) continue;
      const double r = h.t + (s.range_sigma > 0 ? range_noise(rng) : 0.0);
      const double refl = scene.reflectance(h) + (s.intensity_sigma > 0 ? intensity_noise(rng) : 0.0);
      const Eigen::Vector3d p = d_sensor * r;
      // stored the way the files store it, so memory and disk agree
      scan.cloud.points.push_back({static_cast<double>(static_cast<float>(p.x())),
                                   static_cast<double>(static_cast<float>(p.y())),
                                   static_cast<double>(static_cast<float>(p.z())),
                                   clamp_intensity(refl)});
    }
  }
  return scan;
}

GrayImage quantize(const std::vector<double>& img, int w, int h, double sigma, std::uint64_t seed) {
  GrayImage out(w, h);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (std::size_t i = 0; i < img.size(); ++i)
    out.data()[i] = clamp_intensity(img[i] + (sigma > 0 ? noise(rng) : 0.0));
  return out;
}

}  // namespace

Dataset render_dataset(const SceneSpec& spec, std::uint64_t seed) {
  spec.validate();
  const SyntheticScene scene(spec);
  Dataset ds;
  ds.intrinsics = spec.intrinsics;
  for (const auto& l : spec.lidars) ds.lidar_extrinsics[l.id] = l.mount;

  const std::int64_t end_ns = seconds_to_ns(scene.duration());
  const auto step_ns = static_cast<std::int64_t>(std::llround(1e9 / spec.trajectory_rate));
  for (std::int64_t ns = 0; ns <= end_ns; ns += step_ns) {
    const double t = ns_to_seconds(ns);
    ds.trajectory.push_back({t, scene.vehicle_pose(t)});
  }
  const double t_end = ds.trajectory.back().timestamp;

  for (const auto& l : spec.lidars) {
    const double period = 1.0 / l.rate_hz;
    for (int j = 0;; ++j) {
      const std::int64_t ns = seconds_to_ns(l.time_offset + j * period);
      const double t = ns_to_seconds(ns);
      if (t > t_end) break;
      ds.scans.push_back(scan_once(scene, l, t, stream_seed(seed, 1 + static_cast<std::uint64_t>(l.id),
                                                            static_cast<std::uint64_t>(j))));
    }
  }

  const CameraIntrinsics& k = spec.intrinsics;
  std::size_t road_hits = 0;
  for (int j = 0;; ++j) {
    const std::int64_t ns = seconds_to_ns(spec.camera_offset + j / spec.camera_rate);
    const double t = ns_to_seconds(ns);
    if (t > t_end) break;
    StereoFrame fr;
    fr.id = j;
    fr.timestamp = t;
    fr.left = quantize(scene.render_camera(t, false), k.width, k.height, spec.gray_sigma,
                       stream_seed(seed, 100, 2 * static_cast<std::uint64_t>(j)));
    fr.right = quantize(scene.render_camera(t, true), k.width, k.height, spec.gray_sigma,
                        stream_seed(seed, 100, 2 * static_cast<std::uint64_t>(j) + 1));
    ds.frames.push_back(std::move(fr));

    const RigidTransform cam = scene.camera_to_global(t, false);
    for (int v = k.height / 2; v < k.height; v += 8)
      for (int u = 0; u < k.width; u += 8) {
        const Eigen::Vector3d dir =
            cam.rotation() * Eigen::Vector3d((u - k.cu) / k.f, (v - k.cv) / k.f, 1.0);
        if (scene.intersect(cam.translation(), dir).surface == Surface::Road) ++road_hits;
      }
  }
  if (ds.frames.empty() || road_hits == 0)
    throw CalibrationError("degenerate scene: the camera never sees the road");

  ds.truth_left = truth(spec);
  ds.truth_right = right_camera_truth(spec);
  ds.nominal = add_offset(*ds.truth_left, spec.nominal_offset);
  ds.nominal_right = add_offset(*ds.truth_right, spec.nominal_offset);
  return ds;
}

}  // namespace roadcal
