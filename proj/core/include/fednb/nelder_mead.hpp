#pragma once

#include <functional>
#include <span>
#include <vector>

namespace fednb {

struct NelderMeadOptions {
  int max_iters = 500;
  // stop once f(worst) - f(best) and the simplex diameter are both below these
  double f_tolerance = 1e-10;
  double x_tolerance = 1e-8;
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  double relative_step = 0.05;  // initial vertex i: start[i] * (1 + step)
  double zero_step = 0.00025;   // ... or this, when start[i] == 0
};

struct NelderMeadResult {
  std::vector<double> x;
  double fx = 0.0;
  int iterations = 0;
  int evaluations = 0;
};

using Objective = std::function<double(std::span<const double>)>;

// Downhill simplex minimization. NaN objective values compare as +inf.
// Throws Error(optimizer) if f(start) is not finite or start is empty.
NelderMeadResult nelder_mead(const Objective& f, std::span<const double> start,
                             const NelderMeadOptions& options = {});

}  // namespace fednb
