#include "roadcal/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace roadcal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Run {
  const Objective& f;
  const NelderMeadOptions& opts;
  const SimplexObserver& observer;
  int evaluations = 0;

  double eval(const Vector6d& x) {
    ++evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : kInf;
  }

  void sort(SimplexState& s) const {
    std::array<int, 7> idx;
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return s.costs[a] < s.costs[b]; });
    SimplexState sorted = s;
    for (int i = 0; i < 7; ++i) {
      sorted.vertices[i] = s.vertices[idx[i]];
      sorted.costs[i] = s.costs[idx[i]];
    }
    s.vertices = sorted.vertices;
    s.costs = sorted.costs;
  }

  bool converged(const SimplexState& s) const {
    const double lo = s.costs.front(), hi = s.costs.back();
    if (!std::isfinite(hi)) return false;
    const double spread = 2.0 * std::abs(hi - lo) / (std::abs(hi) + std::abs(lo) + 1e-300);
    if (spread <= opts.f_tol) return true;
    for (int i = 1; i < 7; ++i)
      for (int j = 0; j < 6; ++j)
        if (std::abs(s.vertices[i][j] - s.vertices[0][j]) > opts.x_tol[j]) return false;
    return true;
  }

  // One simplex descent from x0 whose cost is already known.
  bool descend(const Vector6d& x0, double f0, SimplexState& s, std::vector<double>& history,
               int& iterations) {
    s.vertices[0] = x0;
    s.costs[0] = f0;
    for (int i = 0; i < 6; ++i) {
      s.vertices[i + 1] = x0;
      s.vertices[i + 1][i] += opts.initial_step[i];
      s.costs[i + 1] = eval(s.vertices[i + 1]);
    }
    sort(s);
    for (int it = 0; it < opts.max_iter; ++it) {
      if (converged(s)) return true;
      if (!std::isfinite(s.costs[0])) return false;

      Vector6d centroid = Vector6d::Zero();
      for (int i = 0; i < 6; ++i) centroid += s.vertices[i];
      centroid /= 6.0;
      const Vector6d& worst = s.vertices[6];
      const double f_best = s.costs[0], f_second = s.costs[5], f_worst = s.costs[6];

      const Vector6d xr = centroid + opts.reflection * (centroid - worst);
      const double fr = eval(xr);
      bool do_shrink = false;
      if (fr < f_best) {
        const Vector6d xe = centroid + opts.expansion * (xr - centroid);
        const double fe = eval(xe);
        if (fe < fr) {
          s.vertices[6] = xe;
          s.costs[6] = fe;
        } else {
          s.vertices[6] = xr;
          s.costs[6] = fr;
        }
      } else if (fr < f_second) {
        s.vertices[6] = xr;
        s.costs[6] = fr;
      } else if (fr < f_worst) {
        const Vector6d xc = centroid + opts.contraction * (xr - centroid);
        const double fc = eval(xc);
        if (fc <= fr) {
          s.vertices[6] = xc;
          s.costs[6] = fc;
        } else {
          do_shrink = true;
        }
      } else {
        const Vector6d xc = centroid + opts.contraction * (worst - centroid);
        const double fc = eval(xc);
        if (fc < f_worst) {
          s.vertices[6] = xc;
          s.costs[6] = fc;
        } else {
          do_shrink = true;
        }
      }
      if (do_shrink) {
        for (int i = 1; i < 7; ++i) {
          s.vertices[i] = s.vertices[0] + opts.shrink * (s.vertices[i] - s.vertices[0]);
          s.costs[i] = eval(s.vertices[i]);
        }
      }
      sort(s);
      ++iterations;
      ++s.iteration;
      history.push_back(s.costs[0]);
      s.best_history = history;
      if (observer) observer(s);
    }
    return converged(s);
  }
};

}  // namespace

NelderMeadResult nelder_mead(const Objective& f, const Vector6d& x0, const NelderMeadOptions& opts,
                             const SimplexObserver& observer) {
  Run run{f, opts, observer};
  NelderMeadResult res;
  res.x = x0;
  const double f0 = run.eval(x0);
  res.initial_cost = f0;
  res.cost = f0;
  res.evaluations = run.evaluations;
  if (!std::isfinite(f0)) return res;

  SimplexState s;
  bool ok = run.descend(x0, f0, s, res.best_history, res.iterations);
  if (opts.restart && std::isfinite(s.costs[0])) {
    // fresh simplex around the minimum found so far
    const Vector6d xb = s.vertices[0];
    const double fb = s.costs[0];
    ok = run.descend(xb, fb, s, res.best_history, res.iterations);
  }
  res.evaluations = run.evaluations;
  res.x = s.vertices[0];
  res.cost = s.costs[0];
  res.converged = ok && std::isfinite(res.cost);
  if (!std::isfinite(res.cost)) {
    res.x = x0;
    res.cost = f0;
  }
  return res;
}

bool is_non_increasing(const std::vector<double>& values) {
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[i - 1]) return false;
  return true;
}

}  // namespace roadcal
