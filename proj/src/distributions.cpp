#include "replimeta/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace replimeta::numerics {

namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 20000;

void require(bool ok, const char* what) {
  if (!ok) throw std::domain_error(what);
}

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete_beta: continued fraction did not converge");
}

// Power series for I_x(a, b), used when x is tiny relative to the mean a/(a+b)
// and the continued fraction would need many terms.
double beta_series(double a, double b, double x, double log_prefactor) {
  // I_x(a,b) = x^a (1-x)^b / (a B(a,b)) * sum_n [(a+b)_n / (a+1)_n] x^n
  double term = 1.0;
  double sum = 1.0;
  for (int n = 0; n < kMaxIter; ++n) {
    term *= (a + b + n) * x / (a + 1.0 + n);
    sum += term;
    if (std::fabs(term) < kEps * std::fabs(sum)) break;
  }
  return std::exp(log_prefactor) * sum / a;
}

double log_beta_prefactor(double a, double b, double x) {
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
         b * std::log1p(-x);
}

// Series for P(a, x), valid for x < a + 1.
double gamma_series(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) {
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
  }
  throw std::runtime_error("incomplete_gamma: series did not converge");
}

// Continued fraction for Q(a, x), valid for x >= a + 1.
double gamma_continued_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) {
      return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
    }
  }
  throw std::runtime_error("incomplete_gamma: continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, "incomplete_beta: a and b must be positive");
  require(x >= 0.0 && x <= 1.0, "incomplete_beta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_pre = log_beta_prefactor(a, b, x);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    if (x * (a + b) < 0.05 * (a + 1.0)) return beta_series(a, b, x, log_pre);
    return std::exp(log_pre) * beta_continued_fraction(a, b, x) / a;
  }
  // Symmetry I_x(a,b) = 1 - I_{1-x}(b,a).
  const double y = 1.0 - x;
  const double log_pre_sym = log_beta_prefactor(b, a, y);
  if (y * (a + b) < 0.05 * (b + 1.0)) return 1.0 - beta_series(b, a, y, log_pre_sym);
  return 1.0 - std::exp(log_pre_sym) * beta_continued_fraction(b, a, y) / b;
}

double incomplete_gamma_p(double a, double x) {
  require(a > 0.0, "incomplete_gamma: a must be positive");
  require(x >= 0.0, "incomplete_gamma: x must be non-negative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_series(a, x);
  return 1.0 - gamma_continued_fraction(a, x);
}

double incomplete_gamma_q(double a, double x) {
  require(a > 0.0, "incomplete_gamma: a must be positive");
  require(x >= 0.0, "incomplete_gamma: x must be non-negative");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_series(a, x);
  return gamma_continued_fraction(a, x);
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double x) {
  require(!std::isnan(x), "normal_cdf: x is NaN");
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_sf(double x) {
  require(!std::isnan(x), "normal_sf: x is NaN");
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, "normal_quantile: p must lie in (0, 1)");
  // Acklam's rational approximation followed by one Halley step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Refine against the tail that keeps precision.
  for (int i = 0; i < 2; ++i) {
    const double e = x < 0.0 ? normal_cdf(x) - p : (1.0 - p) - normal_sf(x);
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
  }
  return x;
}

double t_sf(double x, double df) {
  require(df > 0.0, "t distribution: df must be positive");
  require(!std::isnan(x), "t distribution: x is NaN");
  if (std::isinf(df)) return normal_sf(x);
  if (std::isinf(x)) return x > 0 ? 0.0 : 1.0;
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + x * x));
  return x >= 0.0 ? tail : 1.0 - tail;
}

double t_cdf(double x, double df) {
  require(df > 0.0, "t distribution: df must be positive");
  require(!std::isnan(x), "t distribution: x is NaN");
  if (x == 0.0) return 0.5;
  return t_sf(-x, df);
}

double t_quantile(double p, double df) {
  require(df > 0.0, "t_quantile: df must be positive");
  require(p > 0.0 && p < 1.0, "t_quantile: p must lie in (0, 1)");
  if (std::isinf(df)) return normal_quantile(p);
  if (p == 0.5) return 0.0;
  // Solve in the upper tail with bracketing Newton; symmetric for p < 0.5.
  const bool upper = p > 0.5;
  const double tail = upper ? 1.0 - p : p;
  double lo = 0.0;
  double hi = 1.0;
  while (t_sf(hi, df) > tail) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw std::runtime_error("t_quantile: bracket failed");
  }
  double x = std::max(lo, std::min(hi, std::fabs(normal_quantile(tail))));
  for (int i = 0; i < 200; ++i) {
    const double f = t_sf(x, df) - tail;
    if (f > 0.0) lo = x; else hi = x;
    const double dens = std::exp(std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                                 0.5 * std::log(df * std::numbers::pi) -
                                 0.5 * (df + 1.0) * std::log1p(x * x / df));
    double next = x + f / dens;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - x) <= 1e-14 * std::max(1.0, std::fabs(x))) {
      x = next;
      break;
    }
    x = next;
  }
  return upper ? x : -x;
}

double chisq_cdf(double x, double df) {
  require(df > 0.0, "chi-square: df must be positive");
  require(x >= 0.0, "chi-square: x must be non-negative");
  return incomplete_gamma_p(0.5 * df, 0.5 * x);
}

double chisq_sf(double x, double df) {
  require(df > 0.0, "chi-square: df must be positive");
  require(x >= 0.0, "chi-square: x must be non-negative");
  return incomplete_gamma_q(0.5 * df, 0.5 * x);
}

double two_sided_p(double statistic, double df) {
  const double a = std::fabs(statistic);
  const double p = std::isinf(df) ? 2.0 * normal_sf(a) : 2.0 * t_sf(a, df);
  return std::min(1.0, p);
}

}  // namespace replimeta::numerics
