#pragma once

#include "roadcal/costs.hpp"
#include "roadcal/dataset_io.hpp"
#include "roadcal/hough.hpp"
#include "roadcal/image_selection.hpp"
#include "roadcal/nelder_mead.hpp"
#include "roadcal/region_growing.hpp"
#include "roadcal/stereo_road.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace roadcal {

/// Every tunable of the pipeline. Built from flat key=value text; keys not
/// listed in `Config::keys()` are rejected, missing keys keep their defaults.
struct Config {
  std::uint64_t seed = 0;

  CostWeights weights;
  CostOptions cost;

  DisparityOptions disparity;
  RoadLineOptions road_line;
  double road_tau = 2.0;
  PlaneFitOptions plane;
  RegionGrowingOptions region;

  SegmentOptions segments;
  VoteOptions vote;
  int vp_region_width_div = 4;
  int vp_region_height_div = 8;
  int select_k = 5;

  NelderMeadOptions optimizer;

  double map_window_m = 80.0;
  double map_thin_factor = 0.004;  // voxel edge per metre of camera distance
  double map_max_range = 80.0;     // m
  double map_crop_margin = 0.3;    // fraction of the image size

  int repeat_runs = 40;
  double repeat_perturb_t = 0.3;       // m
  double repeat_perturb_r_deg = 3.0;
  std::vector<int> repeat_counts{1, 2, 5};

  /// All recognised keys with their current values, in a stable order.
  std::vector<std::pair<std::string, std::string>> entries() const;
  static std::vector<std::string> keys();

  /// Applies key=value pairs over the current values.
  void apply(const KeyValues& kv);

  /// Seed-dependent sub-options follow `seed`.
  void propagate_seed();
};

Config parse_config(const std::string& text);
Config load_config(const std::filesystem::path& path);
std::string format_config(const Config& c);

}  // namespace roadcal
