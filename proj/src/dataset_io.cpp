#include "roadcal/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

namespace roadcal {

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CalibrationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_text_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw CalibrationError("cannot write " + path.string());
  return out;
}

double parse_double(std::string_view s, const std::string& what) {
  double v = 0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  if (b < e && *b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr == b) throw CalibrationError("malformed number in " + what);
  return v;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream tokens(line);
    std::string tok;
    while (tokens >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos || eq == 0)
        throw CalibrationError("expected key=value, got '" + tok + "'");
      kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
  }
  return kv;
}

KeyValues read_key_values(const fs::path& path) { return parse_key_values(slurp(path)); }

double kv_double(const KeyValues& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw CalibrationError("missing key '" + key + "'");
  return parse_double(it->second, key);
}

// ---------------------------------------------------------------------------

IntensityCloud read_ply(const fs::path& path) {
  const std::string text = slurp(path);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0) throw CalibrationError(path.string() + " is not a PLY file");
  std::size_t n = 0;
  std::vector<std::string> props;
  bool ascii = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string kind;
      ls >> kind;
      ascii = kind == "ascii";
    } else if (word == "element") {
      std::string name;
      ls >> name >> n;
      if (name != "vertex") throw CalibrationError("unsupported PLY element in " + path.string());
    } else if (word == "property") {
      std::string type, name;
      ls >> type >> name;
      props.push_back(name);
    } else if (word == "end_header") {
      break;
    }
  }
  if (!ascii) throw CalibrationError("only ASCII PLY is supported: " + path.string());
  const std::vector<std::string> expected{"x", "y", "z", "intensity"};
  if (props != expected)
    throw CalibrationError("PLY vertex properties must be x y z intensity: " + path.string());

  IntensityCloud cloud;
  cloud.frame_id = "lidar";
  cloud.points.reserve(n);
  const std::size_t body = static_cast<std::size_t>(in.tellg());
  const char* p = text.data() + body;
  const char* end = text.data() + text.size();
  auto next_number = [&](auto& out) {
    while (p < end && (*p == ' ' || *p == '\n' || *p == '\r' || *p == '\t')) ++p;
    auto [ptr, ec] = std::from_chars(p, end, out);
    if (ec != std::errc() || ptr == p) throw CalibrationError("truncated PLY body: " + path.string());
    p = ptr;
  };
  for (std::size_t i = 0; i < n; ++i) {
    // coordinates are declared float, so they are parsed at float precision
    float x, y, z;
    double it;
    next_number(x);
    next_number(y);
    next_number(z);
    next_number(it);
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
      throw CalibrationError("non-finite point in " + path.string());
    cloud.points.push_back({x, y, z, clamp_intensity(it)});
  }
  return cloud;
}

void write_ply(const fs::path& path, const IntensityCloud& cloud) {
  std::string out;
  out.reserve(64 + cloud.size() * 36);
  out += "ply\nformat ascii 1.0\nelement vertex " + std::to_string(cloud.size()) +
         "\nproperty float x\nproperty float y\nproperty float z\nproperty uchar intensity\n"
         "end_header\n";
  char buf[96];
  for (const auto& pt : cloud.points) {
    const int len = std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %u\n",
                                  static_cast<double>(static_cast<float>(pt.x)),
                                  static_cast<double>(static_cast<float>(pt.y)),
                                  static_cast<double>(static_cast<float>(pt.z)),
                                  static_cast<unsigned>(pt.intensity));
    out.append(buf, static_cast<std::size_t>(len));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw CalibrationError("cannot write " + path.string());
  f << out;
}

std::string scan_file_name(int sensor_id, std::int64_t timestamp_ns) {
  return "scan_" + std::to_string(sensor_id) + "_" + std::to_string(timestamp_ns) + ".ply";
}

std::optional<std::pair<int, std::int64_t>> parse_scan_file_name(const std::string& name) {
  static const std::regex re(R"(scan_(\d+)_(\d+)\.ply)");
  std::smatch m;
  if (!std::regex_match(name, m, re)) return std::nullopt;
  return std::make_pair(std::stoi(m[1]), static_cast<std::int64_t>(std::stoll(m[2])));
}

std::int64_t seconds_to_ns(double t) { return static_cast<std::int64_t>(std::llround(t * 1e9)); }

// ---------------------------------------------------------------------------

Trajectory read_trajectory_csv(const fs::path& path) {
  std::istringstream in(slurp(path));
  std::string line;
  Trajectory traj;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("timestamp", 0) == 0) continue;
    std::vector<double> vals;
    std::size_t start = 0;
    while (start <= line.size()) {
      const auto comma = line.find(',', start);
      const auto stop = comma == std::string::npos ? line.size() : comma;
      vals.push_back(parse_double(std::string_view(line).substr(start, stop - start),
                                  path.string() + ":" + std::to_string(line_no)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (vals.size() != 7)
      throw CalibrationError(path.string() + ":" + std::to_string(line_no) +
                             ": expected 7 columns");
    traj.push_back({vals[0], {vals[1], vals[2], vals[3], vals[4], vals[5], vals[6]}});
  }
  validate_trajectory(traj);
  return traj;
}

void write_trajectory_csv(const fs::path& path, const Trajectory& trajectory) {
  auto out = open_text_out(path);
  out << "timestamp_s,tx,ty,tz,rx,ry,rz\n";
  for (const auto& s : trajectory) {
    out << fmt_double(s.timestamp);
    for (int i = 0; i < 6; ++i) out << ',' << fmt_double(s.pose[i]);
    out << '\n';
  }
}

LidarExtrinsics read_lidar_extrinsics(const fs::path& path) {
  static const std::regex key_re(R"(lidar(\d+)\.(tx|ty|tz|rx|ry|rz))");
  static const std::map<std::string, int> axis{{"tx", 0}, {"ty", 1}, {"tz", 2},
                                               {"rx", 3}, {"ry", 4}, {"rz", 5}};
  LidarExtrinsics ext;
  std::map<int, int> seen;
  for (const auto& [key, value] : read_key_values(path)) {
    std::smatch m;
    if (!std::regex_match(key, m, key_re))
      throw CalibrationError("unknown key '" + key + "' in " + path.string());
    const int id = std::stoi(m[1]);
    ext[id][axis.at(m[2])] = parse_double(value, key);
    seen[id] |= 1 << axis.at(m[2]);
  }
  for (const auto& [id, bits] : seen)
    if (bits != 0x3f)
      throw CalibrationError("incomplete extrinsic for lidar" + std::to_string(id));
  return ext;
}

void write_lidar_extrinsics(const fs::path& path, const LidarExtrinsics& ext) {
  static const char* names[6] = {"tx", "ty", "tz", "rx", "ry", "rz"};
  auto out = open_text_out(path);
  for (const auto& [id, pose] : ext)
    for (int i = 0; i < 6; ++i)
      out << "lidar" << id << '.' << names[i] << '=' << fmt_double(pose[i]) << '\n';
}

CameraIntrinsics read_intrinsics(const fs::path& path) {
  const KeyValues kv = read_key_values(path);
  CameraIntrinsics k;
  k.f = kv_double(kv, "f");
  k.cu = kv_double(kv, "cu");
  k.cv = kv_double(kv, "cv");
  k.baseline = kv_double(kv, "baseline");
  k.width = static_cast<int>(kv_double(kv, "width"));
  k.height = static_cast<int>(kv_double(kv, "height"));
  k.validate();
  return k;
}

void write_intrinsics(const fs::path& path, const CameraIntrinsics& k) {
  auto out = open_text_out(path);
  out << "f=" << fmt_double(k.f) << "\ncu=" << fmt_double(k.cu) << "\ncv=" << fmt_double(k.cv)
      << "\nbaseline=" << fmt_double(k.baseline) << "\nwidth=" << k.width
      << "\nheight=" << k.height << '\n';
}

// ---------------------------------------------------------------------------

std::string format_result(const ResultRecord& r) {
  std::ostringstream out;
  out << "tx=" << fmt_double(r.pose.tx) << '\n'
      << "ty=" << fmt_double(r.pose.ty) << '\n'
      << "tz=" << fmt_double(r.pose.tz) << '\n'
      << "rx_deg=" << fmt_double(rad2deg(r.pose.rx)) << '\n'
      << "ry_deg=" << fmt_double(rad2deg(r.pose.ry)) << '\n'
      << "rz_deg=" << fmt_double(rad2deg(r.pose.rz)) << '\n'
      << "cost=" << fmt_double(r.cost) << '\n'
      << "iters=" << r.iterations << '\n'
      << "converged=" << (r.converged ? "true" : "false") << '\n';
  return out.str();
}

ResultRecord parse_result(const std::string& text) {
  const KeyValues kv = parse_key_values(text);
  ResultRecord r;
  r.pose.tx = kv_double(kv, "tx");
  r.pose.ty = kv_double(kv, "ty");
  r.pose.tz = kv_double(kv, "tz");
  r.pose.rx = deg2rad(kv_double(kv, "rx_deg"));
  r.pose.ry = deg2rad(kv_double(kv, "ry_deg"));
  r.pose.rz = deg2rad(kv_double(kv, "rz_deg"));
  if (kv.count("cost")) r.cost = kv_double(kv, "cost");
  if (kv.count("iters")) r.iterations = static_cast<int>(kv_double(kv, "iters"));
  if (auto it = kv.find("converged"); it != kv.end())
    r.converged = it->second == "true" || it->second == "1";
  return r;
}

ResultRecord read_result(const fs::path& path) { return parse_result(slurp(path)); }

void write_result(const fs::path& path, const ResultRecord& r) {
  auto out = open_text_out(path);
  out << format_result(r);
}

Pose6 read_pose_file(const fs::path& path) { return read_result(path).pose; }

// ---------------------------------------------------------------------------

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw CalibrationError("dataset directory not found: " + dir.string());
  Dataset ds;
  ds.intrinsics = read_intrinsics(dir / "camera.txt");
  if (!fs::exists(dir / "trajectory.csv"))
    throw CalibrationError("missing trajectory file: " + (dir / "trajectory.csv").string());
  ds.trajectory = read_trajectory_csv(dir / "trajectory.csv");
  ds.lidar_extrinsics = read_lidar_extrinsics(dir / "lidar_extrinsics.txt");

  std::vector<fs::path> scan_files;
  if (fs::is_directory(dir / "scans"))
    for (const auto& e : fs::directory_iterator(dir / "scans"))
      if (e.is_regular_file() && parse_scan_file_name(e.path().filename().string()))
        scan_files.push_back(e.path());
  std::sort(scan_files.begin(), scan_files.end());
  for (const auto& p : scan_files) {
    const auto [id, ns] = *parse_scan_file_name(p.filename().string());
    LidarScan scan;
    scan.sensor_id = id;
    scan.timestamp = ns_to_seconds(ns);
    scan.cloud = read_ply(p);
    scan.cloud.frame_id = "lidar" + std::to_string(id);
    ds.scans.push_back(std::move(scan));
  }

  static const std::regex left_re(R"(left_(\d+)\.pgm)");
  std::vector<std::pair<std::int64_t, fs::path>> lefts;
  if (fs::is_directory(dir / "images"))
    for (const auto& e : fs::directory_iterator(dir / "images")) {
      std::smatch m;
      const std::string name = e.path().filename().string();
      if (std::regex_match(name, m, left_re)) lefts.emplace_back(std::stoll(m[1]), e.path());
    }
  std::sort(lefts.begin(), lefts.end());
  for (const auto& [ns, path] : lefts) {
    StereoFrame fr;
    fr.id = static_cast<int>(ds.frames.size());
    fr.timestamp = ns_to_seconds(ns);
    fr.left = read_pgm8(path);
    const fs::path right = dir / "images" / ("right_" + std::to_string(ns) + ".pgm");
    if (!fs::exists(right)) throw CalibrationError("missing right image " + right.string());
    fr.right = read_pgm8(right);
    if (!fr.left.same_size(ds.intrinsics.width, ds.intrinsics.height) ||
        !fr.right.same_size(ds.intrinsics.width, ds.intrinsics.height))
      throw CalibrationError("image size does not match camera.txt: " + path.string());
    ds.frames.push_back(std::move(fr));
  }

  if (fs::exists(dir / "truth.txt")) ds.truth_left = read_pose_file(dir / "truth.txt");
  if (fs::exists(dir / "truth_right.txt")) ds.truth_right = read_pose_file(dir / "truth_right.txt");
  if (fs::exists(dir / "nominal.txt")) ds.nominal = read_pose_file(dir / "nominal.txt");
  if (fs::exists(dir / "nominal_right.txt"))
    ds.nominal_right = read_pose_file(dir / "nominal_right.txt");
  return ds;
}

void save_dataset(const fs::path& dir, const Dataset& ds) {
  fs::create_directories(dir / "scans");
  fs::create_directories(dir / "images");
  write_intrinsics(dir / "camera.txt", ds.intrinsics);
  write_trajectory_csv(dir / "trajectory.csv", ds.trajectory);
  write_lidar_extrinsics(dir / "lidar_extrinsics.txt", ds.lidar_extrinsics);
  for (const auto& scan : ds.scans)
    write_ply(dir / "scans" / scan_file_name(scan.sensor_id, seconds_to_ns(scan.timestamp)),
              scan.cloud);
  for (const auto& fr : ds.frames) {
    const std::string ns = std::to_string(seconds_to_ns(fr.timestamp));
    write_pgm(dir / "images" / ("left_" + ns + ".pgm"), fr.left);
    write_pgm(dir / "images" / ("right_" + ns + ".pgm"), fr.right);
  }
  auto write_pose = [&](const char* name, const std::optional<Pose6>& p) {
    if (p) write_result(dir / name, ResultRecord{*p, 0.0, 0, true});
  };
  write_pose("truth.txt", ds.truth_left);
  write_pose("truth_right.txt", ds.truth_right);
  write_pose("nominal.txt", ds.nominal);
  write_pose("nominal_right.txt", ds.nominal_right);
}

}  // namespace roadcal
