// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "semrel/semrel.hpp"
#include "support/bundle_fuzz.hpp"
#include "support/cli_runner.hpp"
#include "support/gam_fixtures.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
namespace g = semrel::gam;
namespace t = semrel::testing;
using semrel::Metric;
using semrel::Vector;

namespace {

const fs::path kFixtures = SEMREL_FIXTURE_DIR;

// Collects failed checks for one criterion.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    if (!(std::abs(got - want) <= tol)) {
      std::ostringstream os;
      os.precision(17);
      os << what << " (got " << got << ", want " << want << " +/- " << tol << ")";
      failures_.push_back(os.str());
    }
  }
  std::string detail;
  const std::vector<std::string>& failures() const { return failures_; }

 private:
  std::vector<std::string> failures_;
};

struct Criterion {
  const char* name;
  double time_limit_s;  // 0 = none
  std::function<void(Checks&)> body;
};

// ---------------------------------------------------------------------------

void algebraic_identities(Checks& c) {
  std::mt19937_64 rng(101);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  auto vec = [&](std::size_t d) {
    std::vector<double> v(d);
    for (double& x : v) x = n(rng);
    return v;
  };
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t d = 1 + static_cast<std::size_t>(trial % 64);
    auto u = vec(d);
    auto v = vec(d);
    const double cuv = semrel::cosine(Vector(u), Vector(v));
    c.expect(cuv == semrel::cosine(Vector(v), Vector(u)), "cosine symmetry");
    c.expect(std::abs(cuv) <= 1.0, "cosine bound");
    const double a = scale(rng), b = scale(rng);
    for (double& x : u) x *= a;
    for (double& x : v) x *= b;
    c.near(semrel::cosine(Vector(u), Vector(v)), cuv, 1e-12, "cosine scale invariance");
  }
  c.expect(semrel::cosine(Vector{3, 4}, Vector{3, 4}) == 1.0, "cosine self");
  c.expect(semrel::cosine(Vector{1, 2, 2}, Vector{-1, -2, -2}) == -1.0, "cosine antiparallel");

  const auto store = semrel::load_vec_file(kFixtures / "words.vec");
  for (const char* name : {"scene_three.json", "scene_image.json"}) {
    for (auto hood : {semrel::Neighborhood::kAdjacentOverlap, semrel::Neighborhood::kAllOthers}) {
      const auto rows =
          semrel::compute_metric_table(semrel::read_bundle(kFixtures / name), store, &store, {hood, hood}, kFixtures)
              .rows;
      for (const auto& r : rows) {
        c.expect(*r.overall_vissim == *r.obj_image_vissim + *r.objs_vissim, "overall_vissim identity");
        c.expect(*r.overall_semsim == *r.sent_semsim + *r.words_semsim, "overall_semsim identity");
        c.expect(*r.sum_vissem_sim == *r.overall_semsim + *r.obj_image_vissim, "sum_vissem_sim identity");
      }
    }
  }
  c.expect(!semrel::overall_vissim(std::nullopt, 1.0), "missing obj_image propagates");
  c.expect(!semrel::overall_semsim(0.5, std::nullopt), "missing words propagates");
  c.expect(!semrel::overall_semsim(std::nullopt, 0.5), "missing sent propagates");
  c.expect(!semrel::sum_vissem_sim(std::nullopt, 0.5), "missing overall_semsim propagates");
  c.expect(!semrel::sum_vissem_sim(0.5, std::nullopt), "missing obj_image propagates to sum");
}

void saliency_oracle(Checks& c) {
  double worst = 0.0, worst_shift = 0.0;
  for (const auto& img : t::saliency_fixtures()) {
    const auto ref = t::reference_spectral_residual(img);
    const auto map = semrel::spectral_residual(img);
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(ref[i] - map.pixels[i]));
    const auto shifted = semrel::spectral_residual(t::circular_shift(img, 8, 8));
    const auto expected = t::circular_shift(map, 8, 8);
    for (std::size_t i = 0; i < expected.pixels.size(); ++i) {
      worst_shift = std::max(worst_shift, std::abs(expected.pixels[i] - shifted.pixels[i]));
    }
  }
  c.expect(worst < 1e-6, "oracle max abs diff " + std::to_string(worst));
  c.expect(worst_shift < 1e-9, "shift max abs diff " + std::to_string(worst_shift));
  const auto flat = semrel::spectral_residual(semrel::GrayImage{64, 64, std::vector<double>(4096, 0.37)});
  c.expect(std::all_of(flat.pixels.begin(), flat.pixels.end(), [](double v) { return v == 0.0; }),
           "constant image gives zeros");
  char buf[96];
  std::snprintf(buf, sizeof buf, "oracle %.1e, shift %.1e", worst, worst_shift);
  c.detail = buf;
}

void fft_inversion(Checks& c) {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int w : {8, 16, 32, 64}) {
    for (int h : {8, 16, 32, 64}) {
      semrel::ComplexGrid grid{w, h, std::vector<std::complex<double>>(static_cast<std::size_t>(w * h))};
      double scale = 0.0;
      for (auto& z : grid.data) {
        z = {u(rng), u(rng)};
        scale = std::max(scale, std::abs(z));
      }
      const auto back = semrel::fft2(semrel::fft2(grid, true), false);
      for (std::size_t i = 0; i < grid.data.size(); ++i) {
        worst = std::max(worst, std::abs(back.data[i] - grid.data[i]) / scale);
      }
    }
  }
  c.expect(worst < 1e-9, "relative error " + std::to_string(worst));
  char buf[64];
  std::snprintf(buf, sizeof buf, "max rel err %.1e", worst);
  c.detail = buf;
}

void gamm_recovery(Checks& c) {
  const auto s = t::sin_sample(42, 500, 0.1);
  const auto data = t::as_model_data(s);
  const auto m = g::fit_model(t::smooth_spec(), data);
  const auto f = t::fitted_values(m, data);
  double sse = 0;
  for (std::size_t i = 0; i < s.x.size(); ++i) sse += std::pow(f(static_cast<Eigen::Index>(i)) - std::sin(s.x[i]), 2);
  const double rmse = std::sqrt(sse / 500.0);
  c.expect(rmse < 0.05, "rmse " + std::to_string(rmse));
  const auto m0 = g::fit_model(g::ModelSpec{}, data);
  c.expect(m.fit.aic < m0.fit.aic - 100.0, "AIC(s(x)) < AIC(intercept) - 100");
  const double n = static_cast<double>(m.fit.n_used);
  c.near(m.fit.aic, n * std::log(m.fit.rss / n) + 2.0 * (m.fit.edf_total + 1.0), 1e-9, "AIC identity");

  auto moved = data;
  for (double& v : moved.numeric["x"]) v = 0.25 * v + 100.0;
  const auto ma = g::fit_model(t::smooth_spec(), moved);
  c.near(ma.fit.aic, m.fit.aic, 1e-8, "affine AIC");
  c.near(ma.fit.edf_total, m.fit.edf_total, 1e-8, "affine edf");
  c.expect((t::fitted_values(ma, moved) - f).cwiseAbs().maxCoeff() < 1e-8, "affine fitted values");
  char buf[96];
  std::snprintf(buf, sizeof buf, "rmse %.4f, dAIC vs intercept %.1f", rmse, m.fit.aic - m0.fit.aic);
  c.detail = buf;
}

g::ComparisonReport seed42_report() {
  static const g::ComparisonReport report = [] {
    const auto sim = g::simulate_benchmark(42, 2000);
    return g::evaluate_metrics(sim.metrics, sim.fixations);
  }();
  return report;
}

const g::MetricComparison* find_row(const g::ResponseSection& s, Metric m, std::size_t* rank = nullptr) {
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    if (s.rows[i].metric == m) {
      if (rank) *rank = i;
      return &s.rows[i];
    }
  }
  return nullptr;
}

void end_to_end(Checks& c) {
  const auto report = seed42_report();
  std::string detail;
  for (const auto& s : report.sections) {
    const std::string tag(g::to_string(s.response));
    const auto* driver = find_row(s, Metric::kSumVissemSim);
    const auto* noise = find_row(s, Metric::kConceptsSemsim);
    c.expect(driver && driver->delta_aic && *driver->delta_aic < -50.0, tag + ": driver dAIC < -50");
    c.expect(s.rows.front().metric == Metric::kSumVissemSim, tag + ": driver ranked first");
    c.expect(noise && noise->delta_aic && *noise->delta_aic > -10.0, tag + ": noise dAIC > -10");
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s driver %.1f noise %.2f; ", tag.c_str(), *driver->delta_aic, *noise->delta_aic);
    detail += buf;
  }
  // base vs base
  const auto sim = g::simulate_benchmark(42, 2000);
  g::JoinStats stats;
  const auto rows = g::join_rows(sim.metrics, sim.fixations, stats);
  std::vector<std::size_t> all(rows.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto spec = g::detail::base_spec(g::EvaluationConfig{}, true);
  const auto data = g::detail::build_data(rows, all, g::Response::kTotalDuration, std::nullopt);
  const double d0 = g::fit_model(spec, data).fit.aic - g::fit_model(spec, data).fit.aic;
  c.expect(d0 == 0.0, "base vs base dAIC == 0");
  c.detail = detail + "base-vs-base " + std::to_string(d0);
}

void ordering(Checks& c) {
  const auto report = seed42_report();
  std::string detail;
  for (const auto& s : report.sections) {
    std::size_t r_sum = 0, r_sem = 0, r_img = 0;
    const auto* sum = find_row(s, Metric::kSumVissemSim, &r_sum);
    const auto* sem = find_row(s, Metric::kOverallSemsim, &r_sem);
    const auto* img = find_row(s, Metric::kObjImageVissim, &r_img);
    const std::string tag(g::to_string(s.response));
    c.expect(*sum->delta_aic < *sem->delta_aic && *sem->delta_aic < *img->delta_aic,
             tag + ": sum_vissem_sim < overall_semsim < obj_image_vissim");
    c.expect(r_sum < r_sem && r_sem < r_img, tag + ": rank order");
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s %.1f < %.1f < %.1f; ", tag.c_str(), *sum->delta_aic, *sem->delta_aic,
                  *img->delta_aic);
    detail += buf;
  }
  c.detail = detail;
}

void formats(Checks& c) {
  const auto dir = t::scratch_dir("acceptance_formats");
  for (const char* name : {"scene_three.json", "scene_image.json"}) {
    const auto b = semrel::read_bundle(kFixtures / name);
    semrel::write_bundle(b, dir / name);
    c.expect(semrel::read_bundle(dir / name) == b, std::string("bundle round trip ") + name);
  }
  const auto sim = g::simulate_benchmark(3, 500);
  auto table = sim.metrics;
  table[1].saliency.reset();
  table[2].words_semsim.reset();
  semrel::write_metric_table(table, dir / "m.csv");
  c.expect(semrel::read_metric_table(dir / "m.csv") == table, "metric table round trip");
  semrel::write_fixations(sim.fixations, dir / "f.csv");
  c.expect(semrel::read_fixations(dir / "f.csv") == sim.fixations, "fixation round trip");

  std::mt19937_64 rng(99);
  int mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    auto doc = t::clean_bundle_json();
    const std::size_t k = static_cast<std::size_t>(trial) % (t::defect_catalog().size() + 1);
    t::inject_defects(doc, k, rng);
    semrel::ValidationReport r;
    semrel::parse_bundle_text(doc.dump(), r);
    if (r.errors.size() != k || r.ok() != (k == 0)) ++mismatches;
  }
  c.expect(mismatches == 0, std::to_string(mismatches) + " fuzz documents miscounted");

  {
    std::ofstream out(dir / "large.vec", std::ios::binary);
    out << t::synthetic_vec_text(10000, 300);
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto store = semrel::load_vec_file(dir / "large.vec");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(store.size() == 10000 && store.dim() == 300, "large store shape");
  c.expect(secs < 1.0, "10000x300 load took " + std::to_string(secs) + " s");
  char buf[64];
  std::snprintf(buf, sizeof buf, "10000x300 load %.3f s", secs);
  c.detail = buf;
}

void cli_determinism(Checks& c) {
  const auto dir = t::scratch_dir("acceptance_cli");
  auto q = [](const fs::path& p) { return "\"" + p.string() + "\""; };
  auto run_all = [&](const std::string& tag) {
    const fs::path d = dir / tag;
    fs::create_directories(d);
    const auto log = d / "log.txt";
    int bad = 0;
    bad += t::run_cli("simulate --seed 42 --n-scenes 400 --out-metrics " + q(d / "sim.csv") + " --out-fixations " +
                          q(d / "fix.csv"),
                      log)
               .exit_code;
    bad += t::run_cli("metrics --bundle " + q(kFixtures / "scene_image.json") + " --wordvec " +
                          q(kFixtures / "words.vec") + " --conceptnet " + q(kFixtures / "concepts.vec") + " --out " +
                          q(d / "metrics.csv"),
                      log)
               .exit_code;
    bad += t::run_cli("saliency --image " + q(kFixtures / "scene_image.pgm") + " --out-map " + q(d / "map.pgm") +
                          " --out-csv " + q(d / "map.csv"),
                      log)
               .exit_code;
    bad += t::run_cli("evaluate --metrics " + q(d / "sim.csv") + " --fixations " + q(d / "fix.csv") + " --out " +
                          q(d / "report"),
                      log)
               .exit_code;
    fs::remove(log);
    return bad;
  };
  c.expect(run_all("a") == 0, "first run exit codes");
  c.expect(run_all("b") == 0, "second run exit codes");
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir / "a");
    const auto other = dir / "b" / rel;
    c.expect(fs::exists(other) && t::slurp(e.path()) == t::slurp(other), "differs: " + rel.string());
    ++compared;
  }
  c.expect(compared >= 8, "too few outputs compared");
  c.detail = std::to_string(compared) + " files byte-identical";
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"algebraic identities", 1.0, algebraic_identities},
      {"saliency oracle equivalence", 10.0, saliency_oracle},
      {"fft inversion", 0.0, fft_inversion},
      {"gamm-lite recovery", 30.0, gamm_recovery},
      {"end-to-end delta-AIC discrimination", 60.0, end_to_end},
      {"ordering correspondence", 0.0, ordering},
      {"format round trips and validation", 0.0, formats},
      {"cli determinism", 0.0, cli_determinism},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Checks checks;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.body(checks);
    } catch (const std::exception& e) {
      checks.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.time_limit_s > 0 && secs >= cr.time_limit_s) {
      checks.expect(false, "runtime " + std::to_string(secs) + " s over limit");
    }
    const bool ok = checks.failures().empty();
    if (!ok) ++failed;
    std::printf("%s  %-38s %7.2fs  %s\n", ok ? "PASS" : "FAIL", cr.name, secs, checks.detail.c_str());
    for (const auto& f : checks.failures()) std::printf("        - %s\n", f.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
