#include "replimeta/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace replimeta::numerics {

namespace {

double safe_eval(const Objective& f, const std::vector<double>& x) {
  const double v = f(x);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

OptimizerResult nelder_mead(const Objective& f, std::vector<double> x0,
                            const NelderMeadOptions& options) {
  const std::size_t n = x0.size();
  if (n == 0) throw std::invalid_argument("nelder_mead: empty starting point");
  const double f0 = f(x0);
  if (!std::isfinite(f0)) throw std::invalid_argument("nelder_mead: f(x0) is not finite");

  const double dim = static_cast<double>(n);
  const bool adapt = options.adaptive && n > 2;
  const double alpha = 1.0;
  const double gamma = adapt ? 1.0 + 2.0 / dim : 2.0;
  const double rho = adapt ? 0.75 - 0.5 / dim : 0.5;
  const double sigma = adapt ? 1.0 - 1.0 / dim : 0.5;

  std::vector<std::vector<double>> simplex(n + 1, x0);
  std::vector<double> values(n + 1, f0);
  for (std::size_t i = 0; i < n; ++i) {
    simplex[i + 1][i] += options.initial_step;
    values[i + 1] = safe_eval(f, simplex[i + 1]);
  }

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::vector<double>> s(n + 1);
    std::vector<double> v(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      s[i] = std::move(simplex[order[i]]);
      v[i] = values[order[i]];
    }
    simplex = std::move(s);
    values = std::move(v);
  };

  auto along = [&](const std::vector<double>& centroid, const std::vector<double>& worst,
                   double coef) {
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = centroid[k] + coef * (centroid[k] - worst[k]);
    return x;
  };

  OptimizerResult result;
  sort_simplex();
  result.trace.push_back(values[0]);

  std::size_t iter = 0;
  bool converged = false;
  while (true) {
    if (values[n] - values[0] < options.tolerance) {
      converged = true;
      break;
    }
    if (iter >= options.max_iter) break;
    ++iter;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / dim;
    }

    const auto xr = along(centroid, simplex[n], alpha);
    const double fr = safe_eval(f, xr);
    if (fr < values[0]) {
      const auto xe = along(centroid, simplex[n], alpha * gamma);
      const double fe = safe_eval(f, xe);
      if (fe < fr) {
        simplex[n] = xe;
        values[n] = fe;
      } else {
        simplex[n] = xr;
        values[n] = fr;
      }
    } else if (fr < values[n - 1]) {
      simplex[n] = xr;
      values[n] = fr;
    } else {
      // Outside contraction when the reflection improved on the worst point,
      // inside contraction otherwise.
      const bool outside = fr < values[n];
      const auto xc = along(centroid, simplex[n], outside ? alpha * rho : -rho);
      const double fc = safe_eval(f, xc);
      if (fc < (outside ? fr : values[n])) {
        simplex[n] = xc;
        values[n] = fc;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t k = 0; k < n; ++k) {
            simplex[i][k] = simplex[0][k] + sigma * (simplex[i][k] - simplex[0][k]);
          }
          values[i] = safe_eval(f, simplex[i]);
        }
      }
    }
    sort_simplex();
    result.trace.push_back(values[0]);
  }

  result.argmin = simplex[0];
  result.value = values[0];
  result.iterations = iter;
  result.converged = converged && std::isfinite(values[0]);
  return result;
}

}  // namespace replimeta::numerics
