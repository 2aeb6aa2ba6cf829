#pragma once

// log(response) ~ 1 + s(x1) + ... + re(f1) + ...
//
// Smooth terms are penalized cubic B-splines; random intercepts are centered
// dummy blocks under a ridge penalty, the penalized-regression form of an
// i.i.d. Gaussian intercept per level.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "semrel/error.hpp"
#include "semrel/gam/bspline.hpp"
#include "semrel/gam/penalized.hpp"

namespace semrel::gam {

enum class Response { kTotalDuration, kFixationCount };

constexpr std::string_view to_string(Response r) {
  return r == Response::kTotalDuration ? "total_duration" : "fixation_number";
}

struct ModelSpec {
  std::string response = "y";
  std::vector<SmoothTermSpec> smooth_terms;
  std::vector<std::string> random_intercept_factors;
  std::vector<double> ridge_lambda_grid = default_lambda_grid();
  std::size_t min_rows = 10;
};

// Column-oriented data. All columns have the same length.
struct ModelData {
  std::map<std::string, std::vector<double>> numeric;
  std::map<std::string, std::vector<std::string>> factors;

  std::size_t rows() const {
    if (!numeric.empty()) return numeric.begin()->second.size();
    if (!factors.empty()) return factors.begin()->second.size();
    return 0;
  }
};

struct PartialEffect {
  std::string term;
  std::vector<double> covariate;
  std::vector<double> effect;
};

struct ModelFit {
  FitResult fit;
  std::vector<SmoothBlock> smooths;  // in spec order
  std::vector<std::size_t> smooth_block_index;
  std::vector<std::vector<std::string>> factor_levels;

  // Centered effect of a smooth term at `points` evenly spaced values over
  // the observed covariate range.
  PartialEffect partial_effect(const std::string& term, int points = 200) const {
    for (std::size_t i = 0; i < smooths.size(); ++i) {
      if (smooths[i].name != term) continue;
      const SmoothBlock& s = smooths[i];
      PartialEffect pe;
      pe.term = term;
      const double lo = s.basis.lower();
      const double hi = s.basis.upper();
      for (int k = 0; k < points; ++k) {
        const double t = points == 1 ? 0.0 : static_cast<double>(k) / (points - 1);
        pe.covariate.push_back(k == points - 1 ? hi : lo + t * (hi - lo));
      }
      const Eigen::VectorXd e = s.effect(pe.covariate, fit.block_coefficients(smooth_block_index[i]));
      pe.effect.assign(e.data(), e.data() + e.size());
      return pe;
    }
    throw Error(Errc::kInvalidArgument, "no smooth term named '" + term + "'");
  }

  Eigen::VectorXd effect_at(const std::string& term, std::span<const double> x) const {
    for (std::size_t i = 0; i < smooths.size(); ++i) {
      if (smooths[i].name == term) return smooths[i].effect(x, fit.block_coefficients(smooth_block_index[i]));
    }
    throw Error(Errc::kInvalidArgument, "no smooth term named '" + term + "'");
  }
};

// Centered one-column-per-level indicator block.
inline DesignBlock factor_block(const std::string& name, const std::vector<std::string>& values,
                                const std::vector<double>& grid, std::vector<std::string>* levels_out = nullptr) {
  std::vector<std::string> levels(values.begin(), values.end());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  const auto n = static_cast<Eigen::Index>(values.size());
  const auto k = static_cast<Eigen::Index>(levels.size());
  DesignBlock b;
  b.name = name;
  b.design = Eigen::MatrixXd::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto it = std::lower_bound(levels.begin(), levels.end(), values[static_cast<std::size_t>(i)]);
    b.design(i, it - levels.begin()) = 1.0;
  }
  b.design.rowwise() -= b.design.colwise().mean();
  b.penalty = Eigen::MatrixXd::Identity(k, k);
  b.lambda_grid = grid;
  if (levels_out) *levels_out = std::move(levels);
  return b;
}

// Removes unpenalized directions of smooth block `s` that are already spanned
// by `free` (intercept plus earlier smooths' null spaces). Without this an
// exact copy of an earlier covariate leaves the system singular. Surviving
// null-space columns are appended to `free`. Returns the number dropped.
inline int apply_side_constraint(SmoothBlock& s, Eigen::MatrixXd& free) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.penalty);
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double cut = 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> keep;
  int dropped = 0;
  for (Eigen::Index j = 0; j < ev.size(); ++j) {
    if (ev(j) > cut) {
      keep.push_back(j);
      continue;
    }
    const Eigen::VectorXd c = s.design * eig.eigenvectors().col(j);
    const Eigen::VectorXd coef = free.colPivHouseholderQr().solve(c);
    if ((c - free * coef).norm() <= 1e-8 * c.norm()) {
      ++dropped;
      continue;
    }
    keep.push_back(j);
    free.conservativeResize(Eigen::NoChange, free.cols() + 1);
    free.col(free.cols() - 1) = c;
  }
  if (dropped == 0) return 0;
  Eigen::MatrixXd u(ev.size(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) u.col(static_cast<Eigen::Index>(i)) = eig.eigenvectors().col(keep[i]);
  s.constraint = s.constraint * u;
  s.design = s.design * u;
  s.penalty = u.transpose() * s.penalty * u;
  return dropped;
}

// Fits log(y) with GCV-selected smoothing parameters. Rows with y <= 0 are
// dropped and counted in n_dropped.
inline ModelFit fit_model(const ModelSpec& spec, const ModelData& data) {
  const auto y_it = data.numeric.find(spec.response);
  if (y_it == data.numeric.end()) throw Error(Errc::kInvalidArgument, "missing response column " + spec.response);
  const std::vector<double>& y = y_it->second;

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] > 0.0 && std::isfinite(y[i])) keep.push_back(i);
  }
  if (keep.size() < spec.min_rows) {
    throw Error(Errc::kTooFewRows, std::to_string(keep.size()) + " usable rows, need " + std::to_string(spec.min_rows));
  }
  const auto n = static_cast<Eigen::Index>(keep.size());
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = std::log(y[keep[static_cast<std::size_t>(i)]]);

  ModelFit out;
  std::vector<DesignBlock> blocks;
  blocks.push_back(DesignBlock{"(Intercept)", Eigen::MatrixXd::Ones(n, 1), {}, {}});
  Eigen::MatrixXd free = Eigen::MatrixXd::Ones(n, 1);

  for (const SmoothTermSpec& term : spec.smooth_terms) {
    const auto it = data.numeric.find(term.covariate);
    if (it == data.numeric.end()) throw Error(Errc::kInvalidArgument, "missing covariate column " + term.covariate);
    std::vector<double> x(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) x[i] = it->second[keep[i]];
    SmoothBlock s;
    try {
      s = bspline_basis(x, term);
    } catch (const Error& e) {
      if (e.code() == Errc::kDegenerateCovariate) {
        throw Error(Errc::kDegenerateCovariate, "s(" + term.covariate + "): covariate is constant");
      }
      throw;
    }
    if (s.reduced) {
      out.fit.warnings.push_back("s(" + term.covariate + "): basis reduced to " + std::to_string(s.basis.size()) +
                                 " functions (few distinct values)");
    }
    if (apply_side_constraint(s, free) > 0) {
      out.fit.warnings.push_back("s(" + term.covariate +
                                 "): unpenalized component confounded with earlier terms and removed");
    }
    out.smooth_block_index.push_back(blocks.size());
    blocks.push_back(DesignBlock{"s(" + term.covariate + ")", s.design, s.penalty, term.lambda_grid});
    out.smooths.push_back(std::move(s));
  }

  for (const std::string& f : spec.random_intercept_factors) {
    const auto it = data.factors.find(f);
    if (it == data.factors.end()) throw Error(Errc::kInvalidArgument, "missing factor column " + f);
    std::vector<std::string> values(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) values[i] = it->second[keep[i]];
    std::vector<std::string> levels;
    blocks.push_back(factor_block("re(" + f + ")", values, spec.ridge_lambda_grid, &levels));
    out.factor_levels.push_back(std::move(levels));
  }

  PenalizedProblem problem(blocks, z);
  std::vector<std::vector<double>> grids;
  for (const auto& b : blocks) {
    if (b.penalized()) grids.push_back(b.lambda_grid);
  }
  const LambdaSelection sel = select_lambdas(problem, grids);
  std::vector<std::string> warnings = std::move(out.fit.warnings);
  out.fit = problem.finish(sel.lambdas);
  out.fit.warnings.insert(out.fit.warnings.begin(), warnings.begin(), warnings.end());
  out.fit.n_dropped = y.size() - keep.size();
  return out;
}

}  // namespace semrel::gam
