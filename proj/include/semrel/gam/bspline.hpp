#pragma once

// Cubic B-spline smooth terms with quantile knots and a second-difference
// penalty.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semrel/error.hpp"

namespace semrel::gam {

// 41 log-spaced values, 1e-4 .. 1e4.
inline std::vector<double> default_lambda_grid() {
  std::vector<double> grid(41);
  for (int i = 0; i < 41; ++i) grid[static_cast<std::size_t>(i)] = std::pow(10.0, -4.0 + 0.2 * i);
  return grid;
}

struct SmoothTermSpec {
  std::string covariate;
  int basis_size = 10;
  int degree = 3;
  int penalty_order = 2;
  std::vector<double> lambda_grid = default_lambda_grid();

  void validate() const {
    if (degree < 1) throw Error(Errc::kInvalidArgument, "spline degree must be >= 1");
    if (basis_size < degree + 2) throw Error(Errc::kInvalidArgument, "basis size must be >= degree + 2");
    if (penalty_order < 1 || penalty_order >= basis_size) {
      throw Error(Errc::kInvalidArgument, "penalty order must be in [1, basis size)");
    }
    if (lambda_grid.empty()) throw Error(Errc::kInvalidArgument, "lambda grid is empty");
    for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
      if (!(lambda_grid[i] > 0.0) || (i > 0 && !(lambda_grid[i] > lambda_grid[i - 1]))) {
        throw Error(Errc::kInvalidArgument, "lambda grid must be positive and strictly increasing");
      }
    }
  }
};

// Type-7 (linear interpolation) sample quantile of sorted data.
inline double quantile_sorted(std::span<const double> sorted, double prob) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

class BSplineBasis {
 public:
  BSplineBasis() = default;

  // Boundary knots at the data range, interior knots at quantiles of the
  // distinct values. The basis shrinks when there are fewer distinct values
  // than requested functions; `reduced` reports that.
  static BSplineBasis from_data(std::span<const double> x, int basis_size, int degree, bool* reduced = nullptr) {
    if (x.empty()) throw Error(Errc::kDegenerateCovariate, "no covariate values");
    std::vector<double> u(x.begin(), x.end());
    for (double v : u) {
      if (!std::isfinite(v)) throw Error(Errc::kInvalidArgument, "non-finite covariate value");
    }
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    if (u.size() < 2) throw Error(Errc::kDegenerateCovariate, "covariate is constant");

    const int distinct = static_cast<int>(std::min<std::size_t>(u.size(), 1'000'000));
    const int k = std::clamp(distinct, degree + 2, basis_size);
    if (reduced) *reduced = k < basis_size;

    BSplineBasis b;
    b.degree_ = degree;
    b.size_ = k;
    const int interior = k - degree - 1;
    b.knots_.assign(static_cast<std::size_t>(degree + 1), u.front());
    for (int j = 1; j <= interior; ++j) {
      b.knots_.push_back(quantile_sorted(u, static_cast<double>(j) / static_cast<double>(interior + 1)));
    }
    b.knots_.insert(b.knots_.end(), static_cast<std::size_t>(degree + 1), u.back());
    return b;
  }

  int size() const noexcept { return size_; }
  int degree() const noexcept { return degree_; }
  double lower() const noexcept { return knots_.front(); }
  double upper() const noexcept { return knots_.back(); }
  const std::vector<double>& knots() const noexcept { return knots_; }

  // Writes all basis values at x into row (length size()); x outside the
  // knot range is clamped to the nearer boundary.
  void eval(double x, std::span<double> row) const {
    std::fill(row.begin(), row.end(), 0.0);
    x = std::clamp(x, lower(), upper());
    const int p = degree_;
    const int span = find_span(x);
    std::vector<double> left(static_cast<std::size_t>(p + 1));
    std::vector<double> right(static_cast<std::size_t>(p + 1));
    std::vector<double> n(static_cast<std::size_t>(p + 1));
    n[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
      left[j] = x - knots_[static_cast<std::size_t>(span + 1 - j)];
      right[j] = knots_[static_cast<std::size_t>(span + j)] - x;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        const double temp = n[r] / (right[r + 1] + left[j - r]);
        n[r] = saved + right[r + 1] * temp;
        saved = left[j - r] * temp;
      }
      n[j] = saved;
    }
    for (int j = 0; j <= p; ++j) row[static_cast<std::size_t>(span - p + j)] = n[j];
  }

  Eigen::MatrixXd design(std::span<const double> x) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(x.size()), size_);
    std::vector<double> row(static_cast<std::size_t>(size_));
    for (std::size_t i = 0; i < x.size(); ++i) {
      eval(x[i], row);
      for (int j = 0; j < size_; ++j) out(static_cast<Eigen::Index>(i), j) = row[static_cast<std::size_t>(j)];
    }
    return out;
  }

 private:
  // Index of the knot interval holding x; the right boundary belongs to the
  // last nonempty interval.
  int find_span(double x) const {
    if (x >= knots_[static_cast<std::size_t>(size_)]) return size_ - 1;
    int lo = degree_;
    int hi = size_;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      if (x < knots_[static_cast<std::size_t>(mid)]) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return lo;
  }

  int degree_ = 3;
  int size_ = 0;
  std::vector<double> knots_;
};

// Difference matrix of the given order: (k - order) x k.
inline Eigen::MatrixXd difference_matrix(int k, int order) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(k, k);
  for (int o = 0; o < order; ++o) {
    const Eigen::Index rows = d.rows() - 1;
    d = (d.bottomRows(rows) - d.topRows(rows)).eval();
  }
  return d;
}

// A smooth term ready for fitting: the raw basis is column-centered on the
// training data, then the one direction the centering makes redundant (the
// all-ones coefficient vector, since rows sum to one) is projected out.
struct SmoothBlock {
  std::string name;
  BSplineBasis basis;
  Eigen::RowVectorXd column_means;  // of the raw basis over the training rows
  Eigen::MatrixXd constraint;       // k x (k-1), orthonormal complement of 1
  Eigen::MatrixXd design;           // n x (k-1)
  Eigen::MatrixXd penalty;          // (k-1) x (k-1)
  bool reduced = false;

  // Centered partial effect at arbitrary covariate values.
  Eigen::VectorXd effect(std::span<const double> x, const Eigen::VectorXd& coef) const {
    Eigen::MatrixXd raw = basis.design(x);
    raw.rowwise() -= column_means;
    return raw * constraint * coef;
  }
};

inline SmoothBlock bspline_basis(std::span<const double> x, const SmoothTermSpec& spec) {
  spec.validate();
  SmoothBlock block;
  block.name = spec.covariate;
  block.basis = BSplineBasis::from_data(x, spec.basis_size, spec.degree, &block.reduced);
  const int k = block.basis.size();

  Eigen::MatrixXd raw = block.basis.design(x);
  block.column_means = raw.colwise().mean();
  raw.rowwise() -= block.column_means;

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd::Ones(k, 1));
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
  block.constraint = q.rightCols(k - 1);
  block.design = raw * block.constraint;

  const int order = std::min(spec.penalty_order, k - 1);
  const Eigen::MatrixXd d = difference_matrix(k, order);
  block.penalty = block.constraint.transpose() * (d.transpose() * d) * block.constraint;
  return block;
}

}  // namespace semrel::gam
