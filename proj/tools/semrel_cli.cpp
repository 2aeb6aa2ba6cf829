// semrel: command-line driver for relevance metrics, saliency maps, metric
// evaluation, bundle validation and benchmark simulation.
//
// Exit codes: 0 success, 1 usage error, 2 data or I/O error.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "semrel/semrel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SaliencyFlags {
  int work_size = 64;
  double sigma = 2.0;
  double log_epsilon = 1e-8;

  semrel::SRParams params() const {
    semrel::SRParams p;
    p.work_size = work_size;
    p.gaussian_sigma = sigma;
    p.log_epsilon = log_epsilon;
    return p;
  }
};

void add_saliency_flags(CLI::App* cmd, SaliencyFlags& f) {
  cmd->add_option("--work-size", f.work_size, "FFT working resolution")
      ->check(CLI::IsMember({32, 64, 128, 256}))
      ->capture_default_str();
  cmd->add_option("--sigma", f.sigma, "Gaussian sigma for log-spectrum smoothing")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--log-epsilon", f.log_epsilon, "Offset inside the log amplitude")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

json sr_json(const semrel::SRParams& p) {
  return {{"work_size", p.work_size},
          {"gaussian_sigma", p.gaussian_sigma},
          {"kernel_radius", p.kernel_radius()},
          {"log_epsilon", p.log_epsilon}};
}

std::string reduce_name(semrel::SaliencyReduce r) {
  switch (r) {
    case semrel::SaliencyReduce::kMean: return "mean";
    case semrel::SaliencyReduce::kMax: return "max";
    case semrel::SaliencyReduce::kSum: return "sum";
  }
  return "mean";
}

unsigned worker_count(std::size_t jobs) {
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("RELEVANCE_THREADS")) {
    try {
      const long v = std::stol(env);
      workers = v <= 0 ? 1u : static_cast<unsigned>(v);
    } catch (const std::exception&) {
      throw UsageError("RELEVANCE_THREADS must be an integer");
    }
  }
  return static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(jobs, 1)));
}

std::vector<fs::path> bundle_inputs(const fs::path& p) {
  if (!fs::is_directory(p)) return {p};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(p)) {
    if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw semrel::Error(semrel::Errc::kIoError, "no .json bundles in " + p.string());
  return out;
}

// ---------------------------------------------------------------------------

struct MetricsArgs {
  std::string bundle;
  std::string wordvec;
  std::string conceptnet;
  std::string out;
  std::string vision = "adjacent";
  std::string language = "all";
  std::string objs_variant = "table";
  std::string reduce = "mean";
  SaliencyFlags sr;
};

int run_metrics(const MetricsArgs& a) {
  semrel::RelevanceConfig cfg;
  cfg.vision_neighborhood = *semrel::parse_neighborhood(a.vision);
  cfg.language_neighborhood = *semrel::parse_neighborhood(a.language);
  cfg.objs_variant =
      a.objs_variant == "prose" ? semrel::ObjsVissimVariant::kWithImageTerm : semrel::ObjsVissimVariant::kSurroundingOnly;
  cfg.saliency_reduce = a.reduce == "max"   ? semrel::SaliencyReduce::kMax
                        : a.reduce == "sum" ? semrel::SaliencyReduce::kSum
                                            : semrel::SaliencyReduce::kMean;
  cfg.sr = a.sr.params();

  const semrel::WordVectorStore store = semrel::load_vec_file(a.wordvec);
  std::optional<semrel::WordVectorStore> concepts;
  if (!a.conceptnet.empty()) concepts = semrel::load_vec_file(a.conceptnet);

  const std::vector<fs::path> inputs = bundle_inputs(a.bundle);
  struct SceneResult {
    semrel::SceneMetrics metrics;
    std::vector<semrel::Issue> warnings;
    std::string error;
    semrel::Errc code = semrel::Errc::kIoError;
  };
  std::vector<SceneResult> results(inputs.size());
  auto work = [&](std::size_t i) {
    try {
      const semrel::SceneBundle scene = semrel::read_bundle(inputs[i], &results[i].warnings);
      results[i].metrics = semrel::compute_metric_table(scene, store, concepts ? &*concepts : nullptr, cfg,
                                                        inputs[i].parent_path());
    } catch (const semrel::Error& e) {
      results[i].error = e.what();
      results[i].code = e.code();
    }
  };
  const unsigned workers = worker_count(inputs.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < inputs.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < inputs.size(); i = next++) work(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!results[i].error.empty()) throw semrel::Error(results[i].code, results[i].error);
  }

  semrel::MetricTable table;
  json scenes = json::array();
  std::array<std::size_t, 8> missing{};
  std::size_t missing_saliency = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& sm = results[i].metrics;
    json js;
    js["bundle"] = inputs[i].filename().string();
    js["saliency_computed"] = sm.saliency_computed;
    json warns = json::array();
    for (const auto& w : results[i].warnings) warns.push_back(w.path + ": " + w.message);
    js["warnings"] = std::move(warns);
    json rows = json::array();
    for (std::size_t r = 0; r < sm.rows.size(); ++r) {
      const auto& d = sm.diagnostics[r];
      rows.push_back({{"object_id", d.object_id},
                      {"vision_neighbors", d.vision_neighbors},
                      {"vision_skipped_zero_norm", d.vision_skipped},
                      {"language_neighbors", d.language_neighbors},
                      {"words_skipped_missing", d.words_skipped},
                      {"concepts_skipped_missing", d.concepts_skipped},
                      {"sentence_embeddings",
                       d.sentence_source == semrel::SentenceSource::kPrecomputed ? "precomputed" : "fallback"}});
      for (std::size_t m = 0; m < semrel::kAllMetrics.size(); ++m) {
        if (!semrel::metric_value(sm.rows[r], semrel::kAllMetrics[m])) ++missing[m];
      }
      if (!sm.rows[r].saliency) ++missing_saliency;
      table.push_back(sm.rows[r]);
    }
    js["rows"] = std::move(rows);
    scenes.push_back(std::move(js));
  }

  semrel::write_metric_table(table, a.out);

  json diag;
  diag["tool"] = semrel::gam::kToolVersion;
  diag["policies"] = {{"vision_neighborhood", semrel::to_string(cfg.vision_neighborhood)},
                      {"language_neighborhood", semrel::to_string(cfg.language_neighborhood)},
                      {"objs_vissim_variant", a.objs_variant},
                      {"saliency_reduce", reduce_name(cfg.saliency_reduce)},
                      {"proportion", "bounding-box area / image area"},
                      {"sentence_split", ". ! ? ;"}};
  diag["saliency_params"] = sr_json(cfg.sr);
  auto store_json = [](const std::string& path, const semrel::WordVectorStore& s) {
    return json{{"path", path},
                {"dim", s.dim()},
                {"entries", s.size()},
                {"declared_count", s.declared_count()},
                {"warnings", s.warnings()}};
  };
  diag["wordvec"] = store_json(a.wordvec, store);
  diag["conceptnet"] = concepts ? store_json(a.conceptnet, *concepts) : json(nullptr);
  json miss;
  for (std::size_t m = 0; m < semrel::kAllMetrics.size(); ++m) miss[std::string(semrel::to_string(semrel::kAllMetrics[m]))] = missing[m];
  miss["saliency"] = missing_saliency;
  diag["missing_counts"] = std::move(miss);
  diag["rows"] = table.size();
  diag["scenes"] = std::move(scenes);
  semrel::write_text_file(a.out + ".diagnostics.json", diag.dump(2) + "\n");
  std::cout << "wrote " << table.size() << " rows to " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SaliencyArgs {
  std::string image;
  std::string out_map;
  std::string out_csv;
  SaliencyFlags sr;
};

int run_saliency(const SaliencyArgs& a) {
  const semrel::GrayImage img = semrel::load_gray(a.image);
  const semrel::SaliencyMap map = semrel::spectral_residual(img, a.sr.params());
  semrel::write_text_file(a.out_map, semrel::encode_p5(map));
  if (!a.out_csv.empty()) semrel::write_text_file(a.out_csv, semrel::encode_grid_csv(map));
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string metrics;
  std::string fixations;
  std::string response = "both";
  std::string out;
};

int run_evaluate(const EvaluateArgs& a) {
  const semrel::MetricTable table = semrel::read_metric_table(a.metrics);
  const auto fixations = semrel::read_fixations(a.fixations);
  semrel::gam::EvaluationConfig cfg;
  if (a.response == "duration") cfg.responses = {semrel::gam::Response::kTotalDuration};
  if (a.response == "count") cfg.responses = {semrel::gam::Response::kFixationCount};

  const semrel::gam::ComparisonReport report = semrel::gam::evaluate_metrics(table, fixations, cfg);
  json doc = semrel::gam::report_to_json(report);
  doc["provenance"]["inputs"] = {{"metrics", fs::path(a.metrics).filename().string()},
                                 {"fixations", fs::path(a.fixations).filename().string()}};
  const fs::path sidecar = a.metrics + ".diagnostics.json";
  if (fs::exists(sidecar)) {
    try {
      const json d = json::parse(semrel::detail::read_file_bytes(sidecar));
      if (d.contains("policies")) doc["provenance"]["metric_policies"] = d["policies"];
      if (d.contains("saliency_params")) doc["provenance"]["saliency_params"] = d["saliency_params"];
    } catch (const json::exception&) {
      doc["provenance"]["metric_policies"] = "unreadable diagnostics sidecar";
    }
  }

  const fs::path out(a.out);
  fs::create_directories(out / "effects");
  semrel::write_text_file(out / "report.json", doc.dump(2) + "\n");
  for (const auto& s : report.sections) {
    const std::string prefix = std::string(semrel::gam::to_string(s.response)) + "__";
    for (const auto& pe : s.base_effects) {
      semrel::write_text_file(out / "effects" / (prefix + pe.term + ".csv"), semrel::gam::format_partial_effect(pe));
    }
    for (const auto& r : s.rows) {
      if (r.effect) {
        semrel::write_text_file(out / "effects" / (prefix + r.effect->term + ".csv"),
                                semrel::gam::format_partial_effect(*r.effect));
      }
    }
  }

  for (const auto& s : report.sections) {
    std::printf("%s (n joined %zu)\n", std::string(semrel::gam::to_string(s.response)).c_str(), report.join.joined);
    int rank = 0;
    for (const auto& r : s.rows) {
      if (r.delta_aic) {
        std::printf("  %2d  %-18s  dAIC %12.3f  edf %6.2f\n", ++rank, std::string(semrel::to_string(r.metric)).c_str(),
                    *r.delta_aic, r.edf_metric);
      } else {
        std::printf("   -  %-18s  skipped: %s\n", std::string(semrel::to_string(r.metric)).c_str(), r.note.c_str());
      }
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

int run_validate(const std::string& bundle) {
  const semrel::ValidationReport report = semrel::validate_bundle(bundle);
  for (const auto& e : report.errors) {
    std::cout << "error   " << (e.path.empty() ? "<document>" : e.path) << ": " << e.message << "\n";
  }
  for (const auto& w : report.warnings) {
    std::cout << "warning " << (w.path.empty() ? "<document>" : w.path) << ": " << w.message << "\n";
  }
  std::cout << (report.ok() ? "ok" : "invalid") << " (" << report.errors.size() << " errors, "
            << report.warnings.size() << " warnings)\n";
  return report.ok() ? kExitOk : kExitData;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::uint64_t seed = 42;
  std::size_t n_scenes = 2000;
  std::string out_metrics;
  std::string out_fixations;
  std::string driver = "sum_vissem_sim";
};

int run_simulate(const SimulateArgs& a) {
  semrel::gam::SimulationConfig cfg;
  cfg.driver = *semrel::parse_metric(a.driver);
  const auto sim = semrel::gam::simulate_benchmark(a.seed, a.n_scenes, cfg);
  semrel::write_metric_table(sim.metrics, a.out_metrics);
  semrel::write_fixations(sim.fixations, a.out_fixations);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contextual semantic relevance metrics, saliency, and fixation-model comparison"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(semrel::gam::kToolVersion));

  std::vector<std::string> neighborhoods = {"adjacent", "all"};

  MetricsArgs metrics;
  auto* cmd_metrics = app.add_subcommand("metrics", "Compute the per-object metric table for one bundle or a directory");
  cmd_metrics->add_option("--bundle", metrics.bundle, "Bundle JSON file or directory of bundles")->required();
  cmd_metrics->add_option("--wordvec", metrics.wordvec, "Word-vector text file")->required();
  cmd_metrics->add_option("--conceptnet", metrics.conceptnet, "Alternate concept vector file");
  cmd_metrics->add_option("--out", metrics.out, "Output metric CSV")->required();
  cmd_metrics->add_option("--vision-neighborhood", metrics.vision)
      ->check(CLI::IsMember(neighborhoods))
      ->capture_default_str();
  cmd_metrics->add_option("--language-neighborhood", metrics.language)
      ->check(CLI::IsMember(neighborhoods))
      ->capture_default_str();
  cmd_metrics->add_option("--objs-variant", metrics.objs_variant,
                          "table: surrounding objects only; prose: also add the object-image cosine")
      ->check(CLI::IsMember({"table", "prose"}))
      ->capture_default_str();
  cmd_metrics->add_option("--saliency-reduce", metrics.reduce, "Per-object saliency reduction")
      ->check(CLI::IsMember({"mean", "max", "sum"}))
      ->capture_default_str();
  add_saliency_flags(cmd_metrics, metrics.sr);

  SaliencyArgs saliency;
  auto* cmd_saliency = app.add_subcommand("saliency", "Spectral-residual saliency map of a PGM/PPM image");
  cmd_saliency->add_option("--image", saliency.image, "Input P2/P3/P5/P6 image")->required();
  cmd_saliency->add_option("--out-map", saliency.out_map, "Output P5 map")->required();
  cmd_saliency->add_option("--out-csv", saliency.out_csv, "Optional CSV of map values");
  add_saliency_flags(cmd_saliency, saliency.sr);

  EvaluateArgs evaluate;
  auto* cmd_evaluate = app.add_subcommand("evaluate", "Compare metrics by delta AIC against the base fixation model");
  cmd_evaluate->add_option("--metrics", evaluate.metrics, "Metric CSV")->required();
  cmd_evaluate->add_option("--fixations", evaluate.fixations, "Fixation CSV")->required();
  cmd_evaluate->add_option("--response", evaluate.response)
      ->check(CLI::IsMember({"duration", "count", "both"}))
      ->capture_default_str();
  cmd_evaluate->add_option("--out", evaluate.out, "Output directory (report.json, effects/)")->required();

  std::string validate_path;
  auto* cmd_validate = app.add_subcommand("validate", "Check a bundle document and list every problem");
  cmd_validate->add_option("--bundle", validate_path, "Bundle JSON file")->required();

  SimulateArgs simulate;
  auto* cmd_simulate = app.add_subcommand("simulate", "Write a deterministic synthetic benchmark");
  cmd_simulate->add_option("--seed", simulate.seed)->capture_default_str();
  cmd_simulate->add_option("--n-scenes", simulate.n_scenes)->capture_default_str();
  cmd_simulate->add_option("--out-metrics", simulate.out_metrics)->required();
  cmd_simulate->add_option("--out-fixations", simulate.out_fixations)->required();
  std::vector<std::string> metric_names;
  for (auto m : semrel::kAllMetrics) metric_names.emplace_back(semrel::to_string(m));
  cmd_simulate->add_option("--driver", simulate.driver, "Metric that drives the simulated responses")
      ->check(CLI::IsMember(metric_names))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (cmd_metrics->parsed()) return run_metrics(metrics);
    if (cmd_saliency->parsed()) return run_saliency(saliency);
    if (cmd_evaluate->parsed()) return run_evaluate(evaluate);
    if (cmd_validate->parsed()) return run_validate(validate_path);
    if (cmd_simulate->parsed()) return run_simulate(simulate);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const semrel::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
