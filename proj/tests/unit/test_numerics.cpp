#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "helpers.hpp"
#include "replimeta/distributions.hpp"
#include "replimeta/linalg.hpp"
#include "replimeta/optimize.hpp"

using namespace replimeta::numerics;
using testing::integrate;

namespace {

constexpr double kOracleTol = 1e-8;

double normal_density(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double t_density(double x, double df) {
  const double c = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                   0.5 * std::log(df * std::numbers::pi);
  return std::exp(c - 0.5 * (df + 1.0) * std::log1p(x * x / df));
}

double chisq_density(double x, double k) {
  if (x <= 0.0) return 0.0;
  return std::exp((0.5 * k - 1.0) * std::log(x) - 0.5 * x - 0.5 * k * std::log(2.0) -
                  std::lgamma(0.5 * k));
}

/// P(X <= x) by integrating the density over u = sqrt(x), which removes the
/// derivative singularity at zero.
double chisq_cdf_oracle(double x, double k) {
  return integrate([k](double u) { return chisq_density(u * u, k) * 2.0 * u; }, 0.0, std::sqrt(x));
}

double beta_oracle(double a, double b, double x) {
  const double log_b = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  return integrate(
      [=](double t) {
        if (t <= 0.0 || t >= 1.0) return 0.0;
        return std::exp((a - 1.0) * std::log(t) + (b - 1.0) * std::log1p(-t) - log_b);
      },
      0.0, x);
}

MatrixXd spd(int n, unsigned seed) {
  MatrixXd a(n, n);
  unsigned s = seed;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      s = s * 1664525u + 1013904223u;
      a(i, j) = static_cast<double>(s % 1000) / 100.0 - 5.0;
    }
  }
  return a * a.transpose() + n * MatrixXd::Identity(n, n);
}

}  // namespace

TEST_CASE("normal cdf agrees with integrated density") {
  for (double x : {-6.0, -2.5, -1.0, -0.1, 0.0, 0.3, 1.0, 1.96, 3.7, 6.0}) {
    const double oracle = 0.5 + integrate(normal_density, 0.0, x);
    CHECK(std::fabs(normal_cdf(x) - oracle) <= kOracleTol);
    CHECK(std::fabs(normal_sf(x) - (1.0 - oracle)) <= kOracleTol);
  }
}

TEST_CASE("t cdf agrees with integrated density") {
  for (double df : {1.0, 2.0, 3.0, 5.5, 10.0, 28.0, 56.0, 200.0}) {
    for (double x : {-8.0, -2.0, -0.5, 0.0, 0.7, 1.5, 2.228, 4.0, 12.0}) {
      const double oracle = 0.5 + integrate([df](double t) { return t_density(t, df); }, 0.0, x);
      CAPTURE(df);
      CAPTURE(x);
      CHECK(std::fabs(t_cdf(x, df) - oracle) <= kOracleTol);
      CHECK(std::fabs(t_sf(x, df) - (1.0 - oracle)) <= kOracleTol);
    }
  }
}

TEST_CASE("chi-square cdf agrees with integrated density") {
  for (double k : {1.0, 2.0, 3.0, 8.0, 20.0}) {
    for (double x : {0.05, 0.5, 1.0, 3.0, 7.5, 15.5, 30.0}) {
      CAPTURE(k);
      CAPTURE(x);
      const double oracle = chisq_cdf_oracle(x, k);
      CHECK(std::fabs(chisq_cdf(x, k) - oracle) <= kOracleTol);
      CHECK(std::fabs(chisq_sf(x, k) - (1.0 - oracle)) <= kOracleTol);
    }
  }
}

TEST_CASE("regularized incomplete beta agrees with integrated density") {
  for (auto [a, b] : {std::pair{1.0, 1.0}, {2.5, 3.5}, {5.0, 1.5}, {10.0, 12.0}, {1.0, 30.0}}) {
    for (double x : {0.01, 0.2, 0.5, 0.77, 0.99}) {
      CAPTURE(a);
      CAPTURE(b);
      CAPTURE(x);
      CHECK(std::fabs(incomplete_beta(a, b, x) - beta_oracle(a, b, x)) <= kOracleTol);
    }
  }
  CHECK(incomplete_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(incomplete_beta(2.0, 3.0, 1.0) == 1.0);
  CHECK_THROWS_AS(incomplete_beta(-1.0, 2.0, 0.5), std::domain_error);
  CHECK_THROWS_AS(incomplete_beta(1.0, 2.0, 1.5), std::domain_error);
}

TEST_CASE("incomplete gamma: P + Q = 1 and the upper tail keeps relative precision") {
  for (double a : {0.5, 1.0, 4.0, 25.0}) {
    for (double x : {0.1, 1.0, 5.0, 40.0}) {
      CHECK(incomplete_gamma_p(a, x) + incomplete_gamma_q(a, x) == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
  // Q(1, x) = exp(-x) exactly.
  CHECK(incomplete_gamma_q(1.0, 50.0) == doctest::Approx(std::exp(-50.0)).epsilon(1e-10));
  CHECK(chisq_sf(200.0, 2.0) == doctest::Approx(std::exp(-100.0)).epsilon(1e-10));
}

TEST_CASE("quantiles invert the cdfs and match printed table values") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(t_quantile(0.975, 10.0) == doctest::Approx(2.228138851986274).epsilon(1e-10));
  CHECK(t_quantile(0.975, 1.0) == doctest::Approx(12.70620473617471).epsilon(1e-9));
  CHECK(t_quantile(0.95, 3.0) == doctest::Approx(2.353363434801823).epsilon(1e-10));
  for (double df : {1.0, 4.0, 29.0, 1e6}) {
    for (double p : {1e-6, 0.01, 0.3, 0.5, 0.9, 0.999}) {
      CHECK(t_cdf(t_quantile(p, df), df) == doctest::Approx(p).epsilon(1e-10));
    }
  }
  for (double p : {1e-12, 1e-4, 0.2, 0.8, 1 - 1e-9}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
  }
  CHECK_THROWS_AS(normal_quantile(0.0), std::domain_error);
  CHECK_THROWS_AS(t_quantile(0.5, 0.0), std::domain_error);
}

TEST_CASE("two-sided p-values") {
  CHECK(two_sided_p(0.0, 5.0) == doctest::Approx(1.0));
  CHECK(two_sided_p(2.228138851986274, 10.0) == doctest::Approx(0.05).epsilon(1e-10));
  CHECK(two_sided_p(-1.959963984540054, std::numeric_limits<double>::infinity()) ==
        doctest::Approx(0.05).epsilon(1e-10));
  CHECK(two_sided_p(40.0, 10.0) > 0.0);
}

TEST_CASE("Cholesky reconstructs the input to 1e-10 relative") {
  for (int n : {1, 2, 5, 12, 40}) {
    const MatrixXd a = spd(n, 17u + static_cast<unsigned>(n));
    const MatrixXd l = cholesky(a);
    CHECK(l.isLowerTriangular());
    const double rel = (l * l.transpose() - a).norm() / a.norm();
    CAPTURE(n);
    CHECK(rel <= 1e-10);
    const MatrixXd from_packed = cholesky(SymmetricMatrix::from_dense(a));
    CHECK((from_packed - l).norm() <= 1e-12 * l.norm());
    CHECK(cholesky_log_det(l) == doctest::Approx(std::log(a.determinant())).epsilon(1e-9));
    const VectorXd b = VectorXd::LinSpaced(n, -1.0, 2.0);
    CHECK((a * cholesky_solve(l, b) - b).norm() <= 1e-10 * b.norm());
    CHECK((a * cholesky_inverse(l) - MatrixXd::Identity(n, n)).norm() <= 1e-9);
  }
}

TEST_CASE("Cholesky reports the failing pivot") {
  MatrixXd a(3, 3);
  a << 4, 2, 0, 2, 1, 0, 0, 0, 1;  // second pivot is exactly zero
  try {
    (void)cholesky(a);
    FAIL("expected NotPositiveDefinite");
  } catch (const NotPositiveDefinite& e) {
    CHECK(e.pivot() == 1);
  }
  MatrixXd asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  CHECK_THROWS_AS(SymmetricMatrix::from_dense(asym), std::invalid_argument);
}

TEST_CASE("symmetric packed storage") {
  auto s = SymmetricMatrix::identity(3);
  s.set(2, 0, 0.25);
  CHECK(s(0, 2) == 0.25);
  CHECK(s.to_dense()(2, 0) == 0.25);
  CHECK(s.to_dense().isApprox(s.to_dense().transpose()));
}

TEST_CASE("weighted least squares against normal equations") {
  MatrixXd x(6, 2);
  x << 1, 0, 1, 1, 1, 2, 1, 3, 1, 4, 1, 5;
  VectorXd y(6);
  y << 1.1, 2.9, 5.2, 7.1, 8.8, 11.2;
  VectorXd w(6);
  w << 1, 2, 1, 0.5, 3, 1;
  const auto fit = wls_solve(x, y, w);
  const MatrixXd xtw = x.transpose() * w.asDiagonal();
  const VectorXd expected = (xtw * x).ldlt().solve(xtw * y);
  CHECK((fit.coefficients - expected).norm() <= 1e-12);
  CHECK((fit.unscaled_covariance - (xtw * x).inverse()).norm() <= 1e-12);
  CHECK(fit.residual_df == 4);
  const VectorXd r = y - x * expected;
  CHECK(fit.weighted_rss == doctest::Approx(r.dot(w.asDiagonal() * r)).epsilon(1e-12));

  MatrixXd collinear(4, 2);
  collinear << 1, 2, 1, 2, 1, 2, 1, 2;
  CHECK_THROWS_AS(wls_solve(collinear, VectorXd::Ones(4), VectorXd::Ones(4)), RankDeficient);
  CHECK_THROWS_AS(wls_solve(x, y, -w), std::invalid_argument);
}

TEST_CASE("Nelder-Mead finds the Rosenbrock minimum with a monotone trace") {
  const Objective rosen = [](const std::vector<double>& p) {
    return 100.0 * std::pow(p[1] - p[0] * p[0], 2) + std::pow(1.0 - p[0], 2);
  };
  NelderMeadOptions opt;
  opt.tolerance = 1e-14;
  opt.max_iter = 5000;
  const auto r = nelder_mead(rosen, {-1.2, 1.0}, opt);
  CHECK(r.converged);
  CHECK(r.argmin[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.argmin[1] == doctest::Approx(1.0).epsilon(1e-4));
  for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] <= r.trace[i - 1]);

  const Objective bowl = [](const std::vector<double>& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += (i + 1.0) * std::pow(p[i] - 0.5 * i, 2);
    return s;
  };
  const auto r5 = nelder_mead(bowl, std::vector<double>(5, 3.0), opt);
  for (std::size_t i = 0; i < 5; ++i) CHECK(r5.argmin[i] == doctest::Approx(0.5 * i).epsilon(1e-5).scale(1.0));

  const Objective nan_start = [](const std::vector<double>&) { return std::nan(""); };
  CHECK_THROWS_AS(nelder_mead(nan_start, {0.0}), std::invalid_argument);
}
