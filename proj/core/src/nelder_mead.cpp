#include "fednb/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fednb/error.hpp"

namespace fednb {

NelderMeadResult nelder_mead(const Objective& f, std::span<const double> start, const NelderMeadOptions& opt) {
  const auto n = start.size();
  if (n == 0) throw Error(ErrorKind::optimizer, "empty start point");
  if (opt.max_iters < 0) throw Error(ErrorKind::optimizer, "max_iters must be >= 0");

  NelderMeadResult result;
  auto eval = [&](const std::vector<double>& x) {
    ++result.evaluations;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  std::vector<std::vector<double>> simplex(n + 1, std::vector<double>(start.begin(), start.end()));
  for (std::size_t i = 0; i < n; ++i) {
    auto& x = simplex[i + 1][i];
    x = x != 0.0 ? x * (1.0 + opt.relative_step) : opt.zero_step;
  }
  std::vector<double> fx(n + 1);
  for (std::size_t i = 0; i <= n; ++i) fx[i] = eval(simplex[i]);
  if (!std::isfinite(fx[0])) throw Error(ErrorKind::optimizer, "objective is not finite at the start point");

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n);
  auto along = [&](double t, const std::vector<double>& worst) {
    // centroid + t * (centroid - worst)
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = centroid[i] + t * (centroid[i] - worst[i]);
    return p;
  };
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
    std::vector<std::vector<double>> s2(n + 1);
    std::vector<double> f2(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      s2[i] = std::move(simplex[order[i]]);
      f2[i] = fx[order[i]];
    }
    simplex.swap(s2);
    fx.swap(f2);
  };

  // largest coordinate distance from the best vertex
  auto diameter = [&] {
    double d = 0.0;
    for (std::size_t v = 1; v <= n; ++v) {
      for (std::size_t i = 0; i < n; ++i) d = std::max(d, std::abs(simplex[v][i] - simplex[0][i]));
    }
    return d;
  };

  sort_simplex();
  while (result.iterations < opt.max_iters) {
    if (fx[n] - fx[0] < opt.f_tolerance && diameter() < opt.x_tolerance) break;
    ++result.iterations;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v][i];
    }
    for (auto& c : centroid) c /= static_cast<double>(n);

    const auto& worst = simplex[n];
    auto xr = along(opt.reflection, worst);
    const double fr = eval(xr);
    bool do_shrink = false;
    if (fr < fx[0]) {
      auto xe = along(opt.reflection * opt.expansion, worst);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[n] = std::move(xe);
        fx[n] = fe;
      } else {
        simplex[n] = std::move(xr);
        fx[n] = fr;
      }
    } else if (fr < fx[n - 1]) {
      simplex[n] = std::move(xr);
      fx[n] = fr;
    } else if (fr < fx[n]) {
      auto xc = along(opt.reflection * opt.contraction, worst);
      const double fc = eval(xc);
      if (fc <= fr) {
        simplex[n] = std::move(xc);
        fx[n] = fc;
      } else {
        do_shrink = true;
      }
    } else {
      auto xcc = along(-opt.contraction, worst);
      const double fcc = eval(xcc);
      if (fcc < fx[n]) {
        simplex[n] = std::move(xcc);
        fx[n] = fcc;
      } else {
        do_shrink = true;
      }
    }
    if (do_shrink) {
      for (std::size_t v = 1; v <= n; ++v) {
        for (std::size_t i = 0; i < n; ++i) {
          simplex[v][i] = simplex[0][i] + opt.shrink * (simplex[v][i] - simplex[0][i]);
        }
        fx[v] = eval(simplex[v]);
      }
    }
    sort_simplex();
  }
  result.x = simplex[0];
  result.fx = fx[0];
  return result;
}

}  // namespace fednb
