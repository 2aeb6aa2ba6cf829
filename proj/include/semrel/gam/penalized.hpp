#pragma once

// Penalized least squares: minimize ||z - X b||^2 + sum_j lambda_j b_j' S_j b_j
// over column blocks b_j, with GCV-driven smoothing-parameter selection.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semrel/error.hpp"

namespace semrel::gam {

// One group of design columns. An empty penalty means the block is left
// unpenalized.
struct DesignBlock {
  std::string name;
  Eigen::MatrixXd design;
  Eigen::MatrixXd penalty;
  std::vector<double> lambda_grid;

  bool penalized() const noexcept { return penalty.size() > 0; }
};

struct FitResult {
  Eigen::VectorXd coefficients;
  std::vector<double> lambdas;          // one per penalized block, in block order
  std::vector<std::string> block_names;
  std::vector<double> edf_per_block;    // aligned with block_names
  std::vector<Eigen::Index> block_offsets;
  double edf_total = 0.0;
  double rss = 0.0;
  std::size_t n_used = 0;
  std::size_t n_dropped = 0;
  double aic = 0.0;
  double gcv = 0.0;
  std::vector<std::string> warnings;

  double edf_of(const std::string& block) const {
    for (std::size_t i = 0; i < block_names.size(); ++i) {
      if (block_names[i] == block) return edf_per_block[i];
    }
    return 0.0;
  }

  Eigen::VectorXd block_coefficients(std::size_t i) const {
    const Eigen::Index end =
        i + 1 < block_offsets.size() ? block_offsets[i + 1] : coefficients.size();
    return coefficients.segment(block_offsets[i], end - block_offsets[i]);
  }
};

// Gaussian AIC with the residual variance counted as one extra parameter.
inline double gaussian_aic(std::size_t n, double rss, double edf) {
  if (!(rss > 0.0)) return -std::numeric_limits<double>::infinity();
  const double nn = static_cast<double>(n);
  return nn * std::log(rss / nn) + 2.0 * (edf + 1.0);
}

inline double gcv_score(std::size_t n, double rss, double edf) {
  const double nn = static_cast<double>(n);
  const double denom = nn - edf;
  if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
  return nn * rss / (denom * denom);
}

// Assembled problem with the cross products cached so that trying many
// smoothing parameters costs only p x p work each.
class PenalizedProblem {
 public:
  PenalizedProblem(const std::vector<DesignBlock>& blocks, const Eigen::VectorXd& z) : z_(z) {
    if (blocks.empty()) throw Error(Errc::kInvalidArgument, "no design blocks");
    Eigen::Index p = 0;
    for (const auto& b : blocks) {
      if (b.design.rows() != z.size()) {
        throw Error(Errc::kDimensionMismatch, "block '" + b.name + "' has " + std::to_string(b.design.rows()) +
                                                  " rows, response has " + std::to_string(z.size()));
      }
      if (b.penalized() && (b.penalty.rows() != b.design.cols() || b.penalty.cols() != b.design.cols())) {
        throw Error(Errc::kDimensionMismatch, "penalty of block '" + b.name + "' does not match its columns");
      }
      offsets_.push_back(p);
      names_.push_back(b.name);
      p += b.design.cols();
    }
    x_.resize(z.size(), p);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      x_.middleCols(offsets_[i], blocks[i].design.cols()) = blocks[i].design;
      if (blocks[i].penalized()) {
        penalized_.push_back(i);
        penalties_.push_back(blocks[i].penalty);
      }
    }
    widths_.reserve(blocks.size());
    for (const auto& b : blocks) widths_.push_back(b.design.cols());
    gram_ = x_.transpose() * x_;
    xtz_ = x_.transpose() * z_;
    ztz_ = z_.squaredNorm();
  }

  std::size_t rows() const noexcept { return static_cast<std::size_t>(z_.size()); }
  Eigen::Index cols() const noexcept { return x_.cols(); }
  std::size_t penalized_count() const noexcept { return penalized_.size(); }
  const Eigen::MatrixXd& design() const noexcept { return x_; }

  struct Solution {
    Eigen::VectorXd beta;
    Eigen::MatrixXd influence;  // (X'X + S)^-1 X'X
    double edf = 0.0;
    double rss = 0.0;
  };

  Solution solve(std::span<const double> lambdas, bool exact_rss) const {
    if (lambdas.size() != penalized_.size()) {
      throw Error(Errc::kInvalidArgument, "expected " + std::to_string(penalized_.size()) + " lambdas");
    }
    Eigen::MatrixXd a = gram_;
    for (std::size_t j = 0; j < penalized_.size(); ++j) {
      const std::size_t b = penalized_[j];
      a.block(offsets_[b], offsets_[b], widths_[b], widths_[b]) += lambdas[j] * penalties_[j];
    }
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-13)) {
      throw Error(Errc::kSingularSystem, "penalized normal matrix is numerically singular");
    }
    Solution s;
    s.beta = llt.solve(xtz_);
    s.influence = llt.solve(gram_);
    s.edf = s.influence.trace();
    if (exact_rss) {
      s.rss = (z_ - x_ * s.beta).squaredNorm();
      // an exact fit leaves only rounding residue
      if (s.rss <= 1e-24 * std::max(1.0, ztz_)) s.rss = 0.0;
    } else {
      s.rss = std::max(0.0, ztz_ - 2.0 * s.beta.dot(xtz_) + s.beta.dot(gram_ * s.beta));
    }
    return s;
  }

  double gcv(std::span<const double> lambdas) const {
    const Solution s = solve(lambdas, false);
    return gcv_score(rows(), s.rss, s.edf);
  }

  FitResult finish(std::span<const double> lambdas) const {
    const Solution s = solve(lambdas, true);
    FitResult r;
    r.coefficients = s.beta;
    r.lambdas.assign(lambdas.begin(), lambdas.end());
    r.block_names = names_;
    r.block_offsets = offsets_;
    for (std::size_t b = 0; b < names_.size(); ++b) {
      r.edf_per_block.push_back(s.influence.diagonal().segment(offsets_[b], widths_[b]).sum());
    }
    r.edf_total = s.edf;
    r.rss = s.rss;
    r.n_used = rows();
    r.gcv = gcv_score(rows(), s.rss, s.edf);
    r.aic = gaussian_aic(rows(), s.rss, s.edf);
    if (!(s.rss > 0.0)) r.warnings.push_back("residual sum of squares is zero; AIC reported as -infinity");
    return r;
  }

 private:
  Eigen::MatrixXd x_;
  Eigen::VectorXd z_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd xtz_;
  double ztz_ = 0.0;
  std::vector<Eigen::Index> offsets_;
  std::vector<Eigen::Index> widths_;
  std::vector<std::string> names_;
  std::vector<std::size_t> penalized_;
  std::vector<Eigen::MatrixXd> penalties_;
};

// Solves the penalized normal equations at fixed smoothing parameters
// (one per penalized block).
inline FitResult fit_penalized(const std::vector<DesignBlock>& blocks, const Eigen::VectorXd& z,
                               std::span<const double> lambdas) {
  return PenalizedProblem(blocks, z).finish(lambdas);
}

struct LambdaSelection {
  std::vector<double> lambdas;
  std::vector<double> gcv_trace;  // GCV after each block update
};

// Coordinate descent over penalized blocks: each block's lambda is set to the
// GCV-minimizing grid value with the others held fixed. Two full sweeps,
// starting every block at the middle of its grid; ties keep the earlier grid
// value.
inline LambdaSelection select_lambdas(const PenalizedProblem& problem,
                                      const std::vector<std::vector<double>>& grids, int sweeps = 2) {
  if (grids.size() != problem.penalized_count()) {
    throw Error(Errc::kInvalidArgument, "one lambda grid per penalized block is required");
  }
  LambdaSelection sel;
  for (const auto& g : grids) {
    if (g.empty()) throw Error(Errc::kInvalidArgument, "empty lambda grid");
    sel.lambdas.push_back(g[g.size() / 2]);
  }
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t j = 0; j < grids.size(); ++j) {
      double best_score = std::numeric_limits<double>::infinity();
      double best_lambda = sel.lambdas[j];
      std::vector<double> trial = sel.lambdas;
      for (double lam : grids[j]) {
        trial[j] = lam;
        double score = std::numeric_limits<double>::infinity();
        try {
          score = problem.gcv(trial);
        } catch (const Error& e) {
          if (e.code() != Errc::kSingularSystem) throw;
        }
        if (score < best_score) {
          best_score = score;
          best_lambda = lam;
        }
      }
      sel.lambdas[j] = best_lambda;
      sel.gcv_trace.push_back(best_score);
    }
  }
  return sel;
}

inline LambdaSelection select_lambdas(const std::vector<DesignBlock>& blocks, const Eigen::VectorXd& z) {
  PenalizedProblem problem(blocks, z);
  std::vector<std::vector<double>> grids;
  for (const auto& b : blocks) {
    if (b.penalized()) grids.push_back(b.lambda_grid);
  }
  return select_lambdas(problem, grids);
}

}  // namespace semrel::gam
