#pragma once

#include "roadcal/geometry.hpp"

#include <array>
#include <functional>
#include <vector>

namespace roadcal {

struct NelderMeadOptions {
  Vector6d initial_step = (Vector6d() << 0.1, 0.1, 0.1, deg2rad(1.0), deg2rad(1.0), deg2rad(1.0))
                              .finished();
  double f_tol = 1e-6;  // relative spread of vertex costs
  Vector6d x_tol = (Vector6d() << 1e-4, 1e-4, 1e-4, deg2rad(0.01), deg2rad(0.01), deg2rad(0.01))
                       .finished();
  int max_iter = 2000;  // per run; a restart gets its own budget
  bool restart = true;
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
};

struct SimplexState {
  std::array<Vector6d, 7> vertices;
  std::array<double, 7> costs;  // ascending after every step
  int iteration = 0;
  std::vector<double> best_history;
};

struct NelderMeadResult {
  Vector6d x = Vector6d::Zero();
  double cost = 0;
  double initial_cost = 0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::vector<double> best_history;  // best vertex cost after each iteration
};

using Objective = std::function<double(const Vector6d&)>;
using SimplexObserver = std::function<void(const SimplexState&)>;

/// Downhill simplex minimization. Non-finite costs are treated as +inf, so
/// such vertices are contracted away; if the initial point is not finite the
/// result is a failure with converged = false.
NelderMeadResult nelder_mead(const Objective& f, const Vector6d& x0,
                             const NelderMeadOptions& opts = {},
                             const SimplexObserver& observer = {});

/// True if the sequence never increases.
bool is_non_increasing(const std::vector<double>& values);

}  // namespace roadcal
