#pragma once

#include "roadcal/dataset_io.hpp"
#include "roadcal/synthetic_world.hpp"

#include <random>

namespace roadcal::testing {

// A short zero-noise drive that passes the first crosswalk; cheap enough to
// render once per test binary.
inline SceneSpec small_scene() {
  SceneSpec s = without_noise(default_scene_spec());
  s.start_x = 14.0;
  s.trajectory_length = 16.0;
  return s;
}

inline const Dataset& small_dataset() {
  static const Dataset ds = render_dataset(small_scene(), 7);
  return ds;
}

inline GrayImage random_image(int w, int h, std::mt19937_64& rng, int levels = 256) {
  std::uniform_int_distribution<int> d(0, levels - 1);
  GrayImage img(w, h);
  for (auto& p : img.data()) p = static_cast<std::uint8_t>(d(rng));
  return img;
}

// Smooth random texture (box-blurred noise), good for block matching.
inline GrayImage random_texture(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const GrayImage n = random_image(w, h, rng);
  GrayImage out(w, h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      int sum = 0, cnt = 0;
      for (int dv = -1; dv <= 1; ++dv)
        for (int du = -1; du <= 1; ++du)
          if (n.contains(u + du, v + dv)) {
            sum += n(u + du, v + dv);
            ++cnt;
          }
      out(u, v) = static_cast<std::uint8_t>(sum / cnt);
    }
  return out;
}

}  // namespace roadcal::testing
