#pragma once

// Metric comparison: for each response and metric, fit the base model
//   log(y) ~ s(proportion) + s(saliency) + re(participant) + re(position)
// and the same model plus s(metric) on identical rows, and report
// delta_aic = AIC(base + metric) - AIC(base). More negative is better.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "semrel/bundle_io.hpp"
#include "semrel/error.hpp"
#include "semrel/gam/model.hpp"
#include "semrel/relevance.hpp"

namespace semrel::gam {

inline constexpr std::string_view kToolVersion = "semrel 1.0.0";

struct EvaluationConfig {
  std::vector<Response> responses = {Response::kTotalDuration, Response::kFixationCount};
  std::vector<Metric> metrics{kAllMetrics.begin(), kAllMetrics.end()};
  int basis_size = 10;
  std::vector<double> lambda_grid = default_lambda_grid();
  int effect_points = 200;
  std::size_t min_rows = 10;
};

struct MetricComparison {
  Metric metric = Metric::kObjImageVissim;
  std::optional<double> delta_aic;
  double aic_base = 0.0;
  double aic_full = 0.0;
  double edf_base = 0.0;
  double edf_full = 0.0;
  double edf_metric = 0.0;
  double rss_base = 0.0;
  double rss_full = 0.0;
  std::size_t n_used = 0;
  std::size_t n_dropped = 0;
  // Approximate F statistic for the added smooth; not an exact GAMM test.
  std::optional<double> approx_f;
  std::string note;
  std::optional<PartialEffect> effect;
};

struct ResponseSection {
  Response response = Response::kTotalDuration;
  bool saliency_term = false;
  std::vector<MetricComparison> rows;  // ascending delta_aic, skipped metrics last
  std::optional<ModelFit> base_fit;    // base model on all usable rows
  std::vector<PartialEffect> base_effects;
  std::vector<std::string> warnings;
};

struct JoinStats {
  std::size_t fixations = 0;
  std::size_t metric_rows = 0;
  std::size_t joined = 0;
  std::size_t orphan_fixations = 0;
  std::size_t unobserved_metric_rows = 0;
};

struct ComparisonReport {
  JoinStats join;
  EvaluationConfig config;
  std::vector<ResponseSection> sections;

  const ResponseSection* section(Response r) const {
    for (const auto& s : sections) {
      if (s.response == r) return &s;
    }
    return nullptr;
  }
};

struct JoinedRow {
  const MetricRow* metrics = nullptr;
  const FixationRecord* fixation = nullptr;
};

inline std::vector<JoinedRow> join_rows(const MetricTable& table, const std::vector<FixationRecord>& fixations,
                                        JoinStats& stats) {
  std::map<std::pair<std::string, std::string>, const MetricRow*> index;
  for (const auto& r : table) index.emplace(std::make_pair(r.image_id, r.object_id), &r);
  std::set<const MetricRow*> observed;
  std::vector<JoinedRow> out;
  for (const auto& f : fixations) {
    const auto it = index.find({f.image_id, f.object_id});
    if (it == index.end()) {
      ++stats.orphan_fixations;
      continue;
    }
    observed.insert(it->second);
    out.push_back({it->second, &f});
  }
  stats.fixations = fixations.size();
  stats.metric_rows = table.size();
  stats.joined = out.size();
  stats.unobserved_metric_rows = table.size() - observed.size();
  return out;
}

namespace detail {

inline double response_value(const FixationRecord& f, Response r) {
  return r == Response::kTotalDuration ? f.total_duration_ms : static_cast<double>(f.fixation_count);
}

inline ModelData build_data(const std::vector<JoinedRow>& rows, const std::vector<std::size_t>& subset,
                            Response response, std::optional<Metric> metric) {
  ModelData d;
  auto& y = d.numeric["y"];
  auto& prop = d.numeric["proportion"];
  auto& sal = d.numeric["saliency"];
  auto& participant = d.factors["participant"];
  auto& position = d.factors["position"];
  std::vector<double>* m = metric ? &d.numeric[std::string(to_string(*metric))] : nullptr;
  for (std::size_t i : subset) {
    const JoinedRow& r = rows[i];
    y.push_back(response_value(*r.fixation, response));
    prop.push_back(r.metrics->proportion);
    sal.push_back(r.metrics->saliency.value_or(0.0));
    participant.push_back(r.fixation->participant);
    position.emplace_back(to_string(r.metrics->position));
    if (m) m->push_back(*metric_value(*r.metrics, *metric));
  }
  return d;
}

inline ModelSpec base_spec(const EvaluationConfig& cfg, bool saliency_term) {
  ModelSpec spec;
  spec.response = "y";
  spec.min_rows = cfg.min_rows;
  spec.ridge_lambda_grid = cfg.lambda_grid;
  auto smooth = [&](const std::string& name) {
    SmoothTermSpec s;
    s.covariate = name;
    s.basis_size = cfg.basis_size;
    s.lambda_grid = cfg.lambda_grid;
    return s;
  };
  spec.smooth_terms.push_back(smooth("proportion"));
  if (saliency_term) spec.smooth_terms.push_back(smooth("saliency"));
  spec.random_intercept_factors = {"participant", "position"};
  return spec;
}

}  // namespace detail

inline ComparisonReport evaluate_metrics(const MetricTable& table, const std::vector<FixationRecord>& fixations,
                                         const EvaluationConfig& config = {}) {
  ComparisonReport report;
  report.config = config;
  const std::vector<JoinedRow> rows = join_rows(table, fixations, report.join);
  if (rows.size() < config.min_rows) {
    throw Error(Errc::kJoinFailure, "only " + std::to_string(rows.size()) + " fixation rows matched a metric row (" +
                                        std::to_string(report.join.orphan_fixations) + " orphans); need " +
                                        std::to_string(config.min_rows));
  }

  // s(saliency) enters the model when any joined row carries saliency; rows
  // without it are then excluded from every fit.
  const bool saliency_term =
      std::any_of(rows.begin(), rows.end(), [](const JoinedRow& r) { return r.metrics->saliency.has_value(); });

  for (Response response : config.responses) {
    ResponseSection section;
    section.response = response;
    section.saliency_term = saliency_term;
    if (!saliency_term) section.warnings.push_back("no saliency values; s(saliency) omitted from the base model");

    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (saliency_term && !rows[i].metrics->saliency) continue;
      eligible.push_back(i);
    }
    const ModelSpec base = detail::base_spec(config, saliency_term);
    try {
      section.base_fit = fit_model(base, detail::build_data(rows, eligible, response, std::nullopt));
      for (const auto& s : section.base_fit->smooths) {
        section.base_effects.push_back(section.base_fit->partial_effect(s.name, config.effect_points));
      }
    } catch (const Error& e) {
      section.warnings.push_back(std::string("base model on all rows failed: ") + e.what());
    }

    // Base fits are shared between metrics whose usable rows coincide.
    std::map<std::vector<std::size_t>, ModelFit> base_cache;
    for (Metric metric : config.metrics) {
      MetricComparison mc;
      mc.metric = metric;
      std::vector<std::size_t> subset;
      for (std::size_t i : eligible) {
        if (metric_value(*rows[i].metrics, metric)) subset.push_back(i);
      }
      try {
        auto cached = base_cache.find(subset);
        if (cached == base_cache.end()) {
          cached = base_cache.emplace(subset, fit_model(base, detail::build_data(rows, subset, response, std::nullopt)))
                       .first;
        }
        const ModelFit& base_fit = cached->second;

        ModelSpec full = base;
        SmoothTermSpec term;
        term.covariate = std::string(to_string(metric));
        term.basis_size = config.basis_size;
        term.lambda_grid = config.lambda_grid;
        full.smooth_terms.push_back(term);
        const ModelFit full_fit = fit_model(full, detail::build_data(rows, subset, response, metric));

        mc.aic_base = base_fit.fit.aic;
        mc.aic_full = full_fit.fit.aic;
        mc.delta_aic = full_fit.fit.aic - base_fit.fit.aic;
        mc.edf_base = base_fit.fit.edf_total;
        mc.edf_full = full_fit.fit.edf_total;
        mc.edf_metric = full_fit.fit.edf_of("s(" + term.covariate + ")");
        mc.rss_base = base_fit.fit.rss;
        mc.rss_full = full_fit.fit.rss;
        mc.n_used = full_fit.fit.n_used;
        mc.n_dropped = (rows.size() - subset.size()) + full_fit.fit.n_dropped;
        const double dedf = mc.edf_full - mc.edf_base;
        const double resid_df = static_cast<double>(mc.n_used) - mc.edf_full;
        if (dedf > 1e-8 && resid_df > 0.0 && mc.rss_full > 0.0) {
          mc.approx_f = ((mc.rss_base - mc.rss_full) / dedf) / (mc.rss_full / resid_df);
        }
        mc.effect = full_fit.partial_effect(term.covariate, config.effect_points);
      } catch (const Error& e) {
        if (e.code() != Errc::kTooFewRows && e.code() != Errc::kDegenerateCovariate &&
            e.code() != Errc::kSingularSystem) {
          throw;
        }
        mc.note = e.what();
      }
      section.rows.push_back(std::move(mc));
    }
    std::stable_sort(section.rows.begin(), section.rows.end(), [](const MetricComparison& a, const MetricComparison& b) {
      if (a.delta_aic.has_value() != b.delta_aic.has_value()) return a.delta_aic.has_value();
      if (!a.delta_aic) return false;
      return *a.delta_aic < *b.delta_aic;
    });
    report.sections.push_back(std::move(section));
  }
  return report;
}

inline nlohmann::json report_to_json(const ComparisonReport& report) {
  using nlohmann::json;
  auto num = [](double v) -> json {
    if (std::isfinite(v)) return v;
    return v < 0 ? json("-inf") : json("inf");
  };
  json doc;
  json& prov = doc["provenance"];
  prov["tool"] = kToolVersion;
  prov["model"] = "log(y) ~ s(proportion) + s(saliency) + re(participant) + re(position) [+ s(metric)]";
  prov["smooth_basis"] = {{"type", "cubic B-spline, quantile knots, column-centered"},
                          {"basis_size", report.config.basis_size},
                          {"penalty", "second-order difference"}};
  prov["random_effects"] = "centered indicator columns with ridge penalty";
  prov["lambda_selection"] = "GCV, coordinate descent, 2 sweeps";
  prov["lambda_grid"] = report.config.lambda_grid;
  prov["aic"] = "n*ln(rss/n) + 2*(edf+1)";
  prov["delta_aic"] = "AIC(base+metric) - AIC(base), refit on identical rows";
  prov["significance"] = "approximate F on the penalized fit; not an exact GAMM p-value";

  doc["join"] = {{"fixations", report.join.fixations},
                 {"metric_rows", report.join.metric_rows},
                 {"joined", report.join.joined},
                 {"orphan_fixations", report.join.orphan_fixations},
                 {"unobserved_metric_rows", report.join.unobserved_metric_rows}};

  json sections = json::array();
  for (const auto& s : report.sections) {
    json js;
    js["response"] = to_string(s.response);
    js["saliency_term"] = s.saliency_term;
    js["warnings"] = s.warnings;
    if (s.base_fit) {
      const FitResult& f = s.base_fit->fit;
      js["base"] = {{"aic", num(f.aic)}, {"edf", f.edf_total}, {"rss", f.rss}, {"n_used", f.n_used},
                    {"n_dropped", f.n_dropped}, {"gcv", num(f.gcv)}, {"lambdas", f.lambdas},
                    {"warnings", f.warnings}};
    }
    json rows = json::array();
    int rank = 0;
    for (const auto& r : s.rows) {
      json jr;
      jr["metric"] = to_string(r.metric);
      if (r.delta_aic) {
        jr["rank"] = ++rank;
        jr["delta_aic"] = num(*r.delta_aic);
        jr["aic_base"] = num(r.aic_base);
        jr["aic_full"] = num(r.aic_full);
        jr["edf_metric"] = r.edf_metric;
        jr["edf_base"] = r.edf_base;
        jr["edf_full"] = r.edf_full;
        jr["n_used"] = r.n_used;
        jr["n_dropped"] = r.n_dropped;
        jr["approx_f"] = r.approx_f ? json(*r.approx_f) : json(nullptr);
      } else {
        jr["rank"] = nullptr;
        jr["delta_aic"] = nullptr;
        jr["skipped"] = r.note;
      }
      rows.push_back(std::move(jr));
    }
    js["metrics"] = std::move(rows);
    sections.push_back(std::move(js));
  }
  doc["sections"] = std::move(sections);
  return doc;
}

inline std::string format_partial_effect(const PartialEffect& pe) {
  std::string out = "covariate_value,effect\n";
  for (std::size_t i = 0; i < pe.covariate.size(); ++i) {
    out += format_real(pe.covariate[i]) + ',' + format_real(pe.effect[i]) + '\n';
  }
  return out;
}

}  // namespace semrel::gam
