#include "replimeta/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <fmt/core.h>

namespace replimeta::numerics {

SymmetricMatrix::SymmetricMatrix(std::size_t order)
    : order_(order), lower_(order * (order + 1) / 2, 0.0) {
  if (order == 0) throw std::invalid_argument("SymmetricMatrix: order must be >= 1");
}

SymmetricMatrix SymmetricMatrix::from_dense(const MatrixXd& dense, double tolerance) {
  if (dense.rows() != dense.cols() || dense.rows() == 0) {
    throw std::invalid_argument("SymmetricMatrix: input must be square and non-empty");
  }
  SymmetricMatrix out(static_cast<std::size_t>(dense.rows()));
  for (Eigen::Index i = 0; i < dense.rows(); ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      if (std::fabs(dense(i, j) - dense(j, i)) > tolerance) {
        throw std::invalid_argument(
            fmt::format("SymmetricMatrix: entries ({0},{1}) and ({1},{0}) differ", i, j));
      }
      out.set(i, j, dense(i, j));
    }
  }
  return out;
}

SymmetricMatrix SymmetricMatrix::identity(std::size_t order) {
  SymmetricMatrix out(order);
  for (std::size_t i = 0; i < order; ++i) out.set(i, i, 1.0);
  return out;
}

std::size_t SymmetricMatrix::index(std::size_t row, std::size_t col) const {
  if (row >= order_ || col >= order_) throw std::out_of_range("SymmetricMatrix index");
  if (col > row) std::swap(row, col);
  return row * (row + 1) / 2 + col;
}

double SymmetricMatrix::operator()(std::size_t row, std::size_t col) const {
  return lower_[index(row, col)];
}

void SymmetricMatrix::set(std::size_t row, std::size_t col, double value) {
  lower_[index(row, col)] = value;
}

MatrixXd SymmetricMatrix::to_dense() const {
  const auto n = static_cast<Eigen::Index>(order_);
  MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      out(i, j) = out(j, i) = (*this)(i, j);
    }
  }
  return out;
}

NotPositiveDefinite::NotPositiveDefinite(std::size_t pivot)
    : std::runtime_error(
          fmt::format("matrix is not positive definite (pivot {} is not positive)", pivot)),
      pivot_(pivot) {}

RankDeficient::RankDeficient(std::size_t column)
    : std::runtime_error(
          fmt::format("design matrix is rank deficient (column {} is dependent)", column)),
      column_(column) {}

MatrixXd cholesky(const MatrixXd& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("cholesky: matrix must be square");
  const Eigen::Index n = a.rows();
  MatrixXd l = MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double diag = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(diag > 0.0)) throw NotPositiveDefinite(static_cast<std::size_t>(j));
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
    }
  }
  return l;
}

MatrixXd cholesky(const SymmetricMatrix& a) { return cholesky(a.to_dense()); }

VectorXd cholesky_solve(const MatrixXd& lower, const VectorXd& b) {
  const auto tri = lower.triangularView<Eigen::Lower>();
  VectorXd z = tri.solve(b);
  return tri.transpose().solve(z);
}

MatrixXd cholesky_solve(const MatrixXd& lower, const MatrixXd& b) {
  const auto tri = lower.triangularView<Eigen::Lower>();
  MatrixXd z = tri.solve(b);
  return tri.transpose().solve(z);
}

MatrixXd cholesky_inverse(const MatrixXd& lower) {
  const MatrixXd eye = MatrixXd::Identity(lower.rows(), lower.cols());
  return cholesky_solve(lower, eye);
}

double cholesky_log_det(const MatrixXd& lower) {
  return 2.0 * lower.diagonal().array().log().sum();
}

WlsResult wls_solve(const MatrixXd& x, const VectorXd& y, const VectorXd& weights) {
  if (x.rows() != y.size() || y.size() != weights.size()) {
    throw std::invalid_argument("wls_solve: X, y and weights must have matching rows");
  }
  if (x.cols() == 0) throw std::invalid_argument("wls_solve: X has no columns");
  if ((weights.array() < 0.0).any() || !weights.allFinite()) {
    throw std::invalid_argument("wls_solve: weights must be finite and non-negative");
  }
  const Eigen::Index p = x.cols();
  const MatrixXd xtw = x.transpose() * weights.asDiagonal();
  const MatrixXd xtwx = xtw * x;
  const VectorXd xtwy = xtw * y;

  // Cholesky with a relative pivot test so that collinear columns are
  // reported instead of producing huge coefficients.
  MatrixXd l = MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double diag = xtwx(j, j) - l.row(j).head(j).squaredNorm();
    if (!(diag > 1e-10 * std::max(xtwx(j, j), 1e-300))) {
      throw RankDeficient(static_cast<std::size_t>(j));
    }
    l(j, j) = std::sqrt(diag);
    for (Eigen::Index i = j + 1; i < p; ++i) {
      l(i, j) = (xtwx(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }

  WlsResult out;
  out.coefficients = cholesky_solve(l, xtwy);
  out.unscaled_covariance = cholesky_inverse(l);
  out.residuals = y - x * out.coefficients;
  out.weighted_rss = (weights.array() * out.residuals.array().square()).sum();
  const auto positive = (weights.array() > 0.0).count();
  out.residual_df = positive > p ? static_cast<std::size_t>(positive - p) : 0;
  return out;
}

}  // namespace replimeta::numerics
