#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace replimeta::numerics {

struct OptimizerResult {
  std::vector<double> argmin;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  /// Best objective value after each iteration (index 0 is the start).
  std::vector<double> trace;
};

struct NelderMeadOptions {
  /// Converged once max f - min f over the simplex falls below this.
  double tolerance = 1e-9;
  std::size_t max_iter = 2000;
  /// Edge length of the initial simplex, per coordinate.
  double initial_step = 0.5;
  /// Dimension-dependent coefficients (Gao & Han) for dimension > 2.
  bool adaptive = true;
};

using Objective = std::function<double(const std::vector<double>&)>;

/// Derivative-free minimization. Non-finite objective values are treated as
/// +inf so the simplex retreats from infeasible regions. Throws
/// std::invalid_argument if f(x0) is not finite.
OptimizerResult nelder_mead(const Objective& f, std::vector<double> x0,
                            const NelderMeadOptions& options = {});

}  // namespace replimeta::numerics
