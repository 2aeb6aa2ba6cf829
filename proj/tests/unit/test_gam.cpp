#include <gtest/gtest.h>

#include <cmath>

#include "semrel/gam/bspline.hpp"
#include "semrel/gam/model.hpp"
#include "semrel/gam/penalized.hpp"
#include "semrel/gam/random.hpp"
#include "support/gam_fixtures.hpp"

namespace g = semrel::gam;
namespace t = semrel::testing;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

g::DesignBlock intercept(Eigen::Index n) { return {"(Intercept)", MatrixXd::Ones(n, 1), {}, {}}; }

g::DesignBlock smooth_block(const std::vector<double>& x, const std::string& name = "s(x)") {
  g::SmoothTermSpec spec;
  spec.covariate = name;
  const g::SmoothBlock s = g::bspline_basis(x, spec);
  return {name, s.design, s.penalty, spec.lambda_grid};
}

std::size_t grid_index(double lambda) {
  const auto grid = g::default_lambda_grid();
  return static_cast<std::size_t>(std::find(grid.begin(), grid.end(), lambda) - grid.begin());
}

}  // namespace

TEST(Random, SplitMixStream) {
  // reference values of splitmix64 seeded with 0
  g::SplitMix64 a(0);
  EXPECT_EQ(a.next(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(a.next(), 0x6e789e6aa1b965f4ULL);
  g::SplitMix64 b(42), c(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(b.next(), c.next());
  g::SplitMix64 u(9);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    ASSERT_GE(v, 0.0);
    ASSERT_LT(v, 1.0);
  }
}

TEST(Random, NormalMoments) {
  g::SplitMix64 r(3);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    s += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(BSpline, PartitionOfUnityAndClamping) {
  const auto sample = t::sin_sample(1, 300, 0.1);
  const auto basis = g::BSplineBasis::from_data(sample.x, 10, 3);
  EXPECT_EQ(basis.size(), 10);
  std::vector<double> row(10), edge(10);
  for (double x = basis.lower(); x <= basis.upper(); x += 0.01) {
    basis.eval(x, row);
    double sum = 0;
    for (double v : row) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  basis.eval(basis.lower() - 5.0, row);
  basis.eval(basis.lower(), edge);
  EXPECT_EQ(row, edge);
  basis.eval(basis.upper() + 1.0, row);
  basis.eval(basis.upper(), edge);
  EXPECT_EQ(row, edge);
}

TEST(BSpline, DegenerateAndReduced) {
  std::vector<double> constant(20, 2.5);
  g::SmoothTermSpec spec;
  spec.covariate = "c";
  EXPECT_THROW(g::bspline_basis(constant, spec), semrel::Error);
  std::vector<double> few = {0, 1, 2, 0, 1, 2, 0, 1, 2, 2, 1, 0};
  const auto s = g::bspline_basis(few, spec);
  EXPECT_TRUE(s.reduced);
  EXPECT_EQ(s.basis.size(), 5);  // degree + 2
}

TEST(BSpline, CenteredDesign) {
  const auto sample = t::sin_sample(2, 200, 0.1);
  g::SmoothTermSpec spec;
  spec.covariate = "x";
  const auto s = g::bspline_basis(sample.x, spec);
  EXPECT_EQ(s.design.cols(), 9);
  EXPECT_LT(s.design.colwise().sum().cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Penalized, InterceptOnly) {
  VectorXd z(3);
  z << 1, 2, 3;
  const auto fit = g::fit_penalized({intercept(3)}, z, {});
  EXPECT_NEAR(fit.coefficients(0), 2.0, 1e-15);
  EXPECT_NEAR(fit.rss, 2.0, 1e-14);
  EXPECT_NEAR(fit.edf_total, 1.0, 1e-14);
  EXPECT_NEAR(fit.aic, 3.0 * std::log(2.0 / 3.0) + 4.0, 1e-12);
  EXPECT_NEAR(fit.aic, 2.7836, 5e-5);
  EXPECT_NEAR(fit.gcv, 3.0 * 2.0 / 4.0, 1e-14);
}

TEST(Penalized, HugeLambdaLimits) {
  const auto s = t::sin_sample(4, 200, 0.1);
  const auto n = s.z.size();
  const double mean = s.z.mean();
  const double rss0 = (s.z.array() - mean).square().sum();

  // ridge penalty: the block vanishes and the fit becomes the intercept fit
  g::DesignBlock ridge = smooth_block(s.x);
  ridge.penalty = MatrixXd::Identity(ridge.design.cols(), ridge.design.cols());
  const std::vector<double> big = {1e12};
  const auto fr = g::fit_penalized({intercept(n), ridge}, s.z, big);
  EXPECT_LT(fr.edf_of("s(x)"), 1e-6);
  EXPECT_NEAR(fr.coefficients(0), mean, 1e-9);
  EXPECT_NEAR(fr.rss, rss0, 1e-6 * rss0);

  // second-difference penalty: only the linear direction survives
  const auto fd = g::fit_penalized({intercept(n), smooth_block(s.x)}, s.z, big);
  EXPECT_NEAR(fd.edf_of("s(x)"), 1.0, 1e-4);
}

TEST(Penalized, DuplicateColumnWithRidge) {
  const auto s = t::sin_sample(5, 50, 0.1);
  MatrixXd x(50, 2);
  for (int i = 0; i < 50; ++i) x(i, 0) = x(i, 1) = s.x[static_cast<std::size_t>(i)];
  g::DesignBlock dup{"dup", x, MatrixXd::Identity(2, 2), {}};
  const std::vector<double> lam = {1.0};
  const auto fit = g::fit_penalized({intercept(50), dup}, s.z, lam);
  EXPECT_TRUE(fit.coefficients.allFinite());
  EXPECT_NEAR(fit.coefficients(1), fit.coefficients(2), 1e-10);

  g::DesignBlock free{"dup", x, {}, {}};
  EXPECT_THROW(g::fit_penalized({intercept(50), free}, s.z, {}), semrel::Error);
}

TEST(Penalized, AicIdentityAndEdfBounds) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto s = t::sin_sample(seed, 120, 0.3);
    for (double lam : {1e-4, 1.0, 1e4}) {
      const std::vector<double> l = {lam};
      const auto fit = g::fit_penalized({intercept(120), smooth_block(s.x)}, s.z, l);
      const double n = 120.0;
      EXPECT_NEAR(fit.aic, n * std::log(fit.rss / n) + 2.0 * (fit.edf_total + 1.0), 1e-9);
      EXPECT_GE(fit.edf_total, 1.0 - 1e-12);
      EXPECT_LE(fit.edf_total, 10.0 + 1e-12);
      double sum = 0;
      for (double e : fit.edf_per_block) sum += e;
      EXPECT_NEAR(sum, fit.edf_total, 1e-10);
    }
  }
}

TEST(Penalized, NestingAtFixedLambdas) {
  g::SplitMix64 rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 150;
    std::vector<double> x1(n), x2(n);
    VectorXd z(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      x1[i] = rng.uniform(-2, 2);
      x2[i] = rng.uniform(0, 1);
      z(static_cast<Eigen::Index>(i)) = std::cos(x1[i]) + 0.5 * x2[i] + 0.2 * rng.normal();
    }
    const double l1 = std::pow(10.0, rng.uniform(-3, 3));
    const std::vector<double> base_l = {l1};
    const std::vector<double> full_l = {l1, 1e-4};
    const auto base = g::fit_penalized({intercept(150), smooth_block(x1, "s(x1)")}, z, base_l);
    const auto full =
        g::fit_penalized({intercept(150), smooth_block(x1, "s(x1)"), smooth_block(x2, "s(x2)")}, z, full_l);
    EXPECT_LE(full.rss, base.rss * (1 + 1e-12));
  }
}

TEST(LambdaSelection, PureNoiseMostlyGoesToTop) {
  // GCV undersmooths a minority of null samples, so this is a frequency check
  // over a fixed block of seeds (19 of 30 land in the top two grid points).
  const std::size_t n = 300;
  int top = 0;
  for (std::uint64_t seed = 2020; seed < 2050; ++seed) {
    g::SplitMix64 rng(seed);
    std::vector<double> x(n);
    VectorXd z(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) x[i] = rng.uniform();
    for (std::size_t i = 0; i < n; ++i) z(static_cast<Eigen::Index>(i)) = rng.normal();
    const auto sel = g::select_lambdas({intercept(300), smooth_block(x)}, z);
    if (grid_index(sel.lambdas[0]) >= 39u) ++top;
  }
  EXPECT_EQ(top, 19);
}

TEST(LambdaSelection, SinSignalIsInterior) {
  const auto s = t::sin_sample(11, 500, 0.1);
  const auto sel = g::select_lambdas({intercept(500), smooth_block(s.x)}, s.z);
  const std::size_t i = grid_index(sel.lambdas[0]);
  EXPECT_GT(i, 0u);
  EXPECT_LT(i, 40u);
}

TEST(LambdaSelection, SingleBlockMatchesExhaustiveSearch) {
  for (std::uint64_t seed : {21u, 22u, 23u}) {
    const auto s = t::sin_sample(seed, 200, 0.5);
    const std::vector<g::DesignBlock> blocks = {intercept(200), smooth_block(s.x)};
    const g::PenalizedProblem problem(blocks, s.z);
    double best = std::numeric_limits<double>::infinity();
    double best_lambda = 0;
    for (double lam : g::default_lambda_grid()) {
      const std::vector<double> l = {lam};
      const double score = problem.gcv(l);
      if (score < best) {
        best = score;
        best_lambda = lam;
      }
    }
    const auto sel = g::select_lambdas(blocks, s.z);
    EXPECT_EQ(sel.lambdas[0], best_lambda);
    EXPECT_EQ(sel.gcv_trace.back(), best);
  }
}

TEST(FitModel, SinRecovery) {
  const auto s = t::sin_sample(42, 500, 0.1);
  const auto data = t::as_model_data(s);
  const auto m = g::fit_model(t::smooth_spec(), data);
  const VectorXd f = t::fitted_values(m, data);
  double sse = 0;
  for (std::size_t i = 0; i < s.x.size(); ++i) sse += std::pow(f(static_cast<Eigen::Index>(i)) - std::sin(s.x[i]), 2);
  EXPECT_LT(std::sqrt(sse / 500.0), 0.05);

  g::ModelSpec none;
  const auto m0 = g::fit_model(none, data);
  EXPECT_LT(m.fit.aic, m0.fit.aic - 100.0);
  EXPECT_NEAR(m0.fit.edf_total, 1.0, 1e-12);
}

TEST(FitModel, AffineInvariance) {
  const auto s = t::sin_sample(8, 300, 0.2);
  const auto data = t::as_model_data(s);
  auto moved = data;
  for (double& v : moved.numeric["x"]) v = 3.5 * v - 7.0;
  const auto a = g::fit_model(t::smooth_spec(), data);
  const auto b = g::fit_model(t::smooth_spec(), moved);
  EXPECT_NEAR(a.fit.aic, b.fit.aic, 1e-8);
  EXPECT_NEAR(a.fit.edf_total, b.fit.edf_total, 1e-8);
  const VectorXd fa = t::fitted_values(a, data);
  const VectorXd fb = t::fitted_values(b, moved);
  EXPECT_LT((fa - fb).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FitModel, PartialEffectsCentered) {
  const auto s = t::sin_sample(12, 400, 0.2);
  const auto data = t::as_model_data(s);
  const auto m = g::fit_model(t::smooth_spec(), data);
  EXPECT_NEAR(m.effect_at("x", s.x).mean(), 0.0, 1e-8);
  const auto pe = m.partial_effect("x");
  ASSERT_EQ(pe.covariate.size(), 200u);
  EXPECT_EQ(pe.covariate.front(), *std::min_element(s.x.begin(), s.x.end()));
  EXPECT_EQ(pe.covariate.back(), *std::max_element(s.x.begin(), s.x.end()));
  EXPECT_TRUE(std::is_sorted(pe.covariate.begin(), pe.covariate.end()));
}

TEST(FitModel, DropsNonPositiveAndCounts) {
  auto data = t::as_model_data(t::sin_sample(13, 60, 0.1));
  data.numeric["y"][3] = 0.0;
  data.numeric["y"][7] = -1.0;
  const auto m = g::fit_model(t::smooth_spec(), data);
  EXPECT_EQ(m.fit.n_used, 58u);
  EXPECT_EQ(m.fit.n_dropped, 2u);
}

TEST(FitModel, Errors) {
  auto small = t::as_model_data(t::sin_sample(14, 9, 0.1));
  try {
    g::fit_model(t::smooth_spec(), small);
    FAIL();
  } catch (const semrel::Error& e) {
    EXPECT_EQ(e.code(), semrel::Errc::kTooFewRows);
  }
  auto flat = t::as_model_data(t::sin_sample(15, 30, 0.1));
  std::fill(flat.numeric["x"].begin(), flat.numeric["x"].end(), 1.0);
  try {
    g::fit_model(t::smooth_spec(), flat);
    FAIL();
  } catch (const semrel::Error& e) {
    EXPECT_EQ(e.code(), semrel::Errc::kDegenerateCovariate);
  }
}

TEST(FitModel, ConstantResponseGivesMinusInfinity) {
  g::ModelData d;
  d.numeric["y"] = std::vector<double>(12, 5.0);
  const auto m = g::fit_model(g::ModelSpec{}, d);
  EXPECT_EQ(m.fit.rss, 0.0);
  EXPECT_TRUE(std::isinf(m.fit.aic) && m.fit.aic < 0);
  EXPECT_FALSE(m.fit.warnings.empty());
}

TEST(FitModel, SingleLevelFactor) {
  auto d = t::as_model_data(t::sin_sample(16, 40, 0.1));
  d.factors["participant"] = std::vector<std::string>(40, "p1");
  g::ModelSpec spec = t::smooth_spec();
  spec.random_intercept_factors = {"participant"};
  const auto m = g::fit_model(spec, d);
  EXPECT_EQ(m.factor_levels.at(0), (std::vector<std::string>{"p1"}));
  EXPECT_LE(m.fit.edf_of("re(participant)"), 1.0);
}

TEST(FitModel, RandomInterceptsAbsorbGroupShifts) {
  g::SplitMix64 rng(31);
  g::ModelData d;
  const double shift[] = {-0.5, 0.0, 0.7};
  for (int i = 0; i < 300; ++i) {
    const int grp = i % 3;
    const double x = rng.uniform(0, 6);
    d.numeric["x"].push_back(x);
    d.factors["grp"].push_back("g" + std::to_string(grp));
    d.numeric["y"].push_back(std::exp(std::sin(x) + shift[grp] + 0.1 * rng.normal()));
  }
  g::ModelSpec with = t::smooth_spec();
  with.random_intercept_factors = {"grp"};
  const auto a = g::fit_model(with, d);
  const auto b = g::fit_model(t::smooth_spec(), d);
  EXPECT_LT(a.fit.aic, b.fit.aic - 100.0);
  EXPECT_GT(a.fit.edf_of("re(grp)"), 1.5);
}

TEST(FitModel, DuplicatedSmoothLosesItsLinearPart) {
  auto d = t::as_model_data(t::sin_sample(21, 400, 0.2));
  d.numeric["x_copy"] = d.numeric["x"];
  auto spec = t::smooth_spec();
  auto copy = spec.smooth_terms[0];
  copy.covariate = "x_copy";
  spec.smooth_terms.push_back(copy);
  const auto one = g::fit_model(t::smooth_spec(), d);
  const auto two = g::fit_model(spec, d);
  ASSERT_EQ(two.fit.warnings.size(), 1u);
  EXPECT_NE(two.fit.warnings[0].find("x_copy"), std::string::npos);
  EXPECT_EQ(two.smooths[1].design.cols(), one.smooths[0].design.cols() - 1);
  EXPECT_GT(two.fit.aic - one.fit.aic, -2.0 * spec.smooth_terms[0].basis_size);
  EXPECT_LT(std::abs(two.fit.rss - one.fit.rss), 0.01 * one.fit.rss);
}
