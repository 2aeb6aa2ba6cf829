#pragma once

// Deterministic synthetic benchmark: metric tables and fixation records whose
// log responses are driven by one designated metric.
//
// Draw order (all from one SplitMix64 stream seeded with `seed`):
//   1. participant offsets, participants x N(0,1) scaled by participant_sd
//   2. position offsets, 9 x N(0,1) scaled by position_sd
//   3. per scene, one object viewed by one participant:
//        obj_image_vissim, objs_vissim, sent_semsim, words_semsim,
//        concepts_semsim (uniforms on their ranges),
//        log-uniform proportion, uniform saliency, position cell,
//        participant, duration noise N(0,1), count noise N(0,1)
// Derived metrics are exact sums of the primitive draws. One fixation row per
// object keeps rows independent given the covariates.

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "semrel/bundle_io.hpp"
#include "semrel/gam/random.hpp"
#include "semrel/relevance.hpp"

namespace semrel::gam {

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

struct SimulationConfig {
  Metric driver = Metric::kSumVissemSim;
  double driver_effect = 0.35;  // half-amplitude of the driver's curve on the log scale
  int participants = 5;
  double participant_sd = 0.15;
  double position_sd = 0.10;
  double duration_noise_sd = 0.30;
  double count_noise_sd = 0.25;
  double log_base_duration = std::log(250.0);
  double log_base_count = std::log(3.0);
  double proportion_slope = 0.12;  // per unit of log(proportion)
  double saliency_slope = -0.20;

  Range obj_image{0.0, 1.0};
  Range objs{0.0, 3.0};
  Range sent{0.0, 1.0};
  Range words{0.0, 3.0};
  Range concepts{0.0, 3.0};
  Range proportion{0.001, 0.5};
};

struct SimulatedBenchmark {
  MetricTable metrics;
  std::vector<FixationRecord> fixations;
};

// Range of a metric implied by the primitive ranges.
inline Range metric_range(const SimulationConfig& c, Metric m) {
  auto sum = [](Range a, Range b) { return Range{a.lo + b.lo, a.hi + b.hi}; };
  switch (m) {
    case Metric::kObjImageVissim: return c.obj_image;
    case Metric::kObjsVissim: return c.objs;
    case Metric::kOverallVissim: return sum(c.obj_image, c.objs);
    case Metric::kSentSemsim: return c.sent;
    case Metric::kWordsSemsim: return c.words;
    case Metric::kConceptsSemsim: return c.concepts;
    case Metric::kOverallSemsim: return sum(c.sent, c.words);
    case Metric::kSumVissemSim: return sum(sum(c.sent, c.words), c.obj_image);
  }
  return {};
}

// Monotone S-shaped response to the driver over its range: effect * sin(pi*(u - 1/2)).
inline double driver_curve(const SimulationConfig& c, double value) {
  const Range r = metric_range(c, c.driver);
  const double u = (value - r.lo) / (r.hi - r.lo);
  return c.driver_effect * std::sin(std::numbers::pi * (u - 0.5));
}

inline SimulatedBenchmark simulate_benchmark(std::uint64_t seed, std::size_t n_scenes,
                                             const SimulationConfig& config = {}) {
  SimulatedBenchmark out;
  if (n_scenes == 0) return out;
  SplitMix64 rng(seed);

  std::vector<double> participant_offset(static_cast<std::size_t>(config.participants));
  for (double& o : participant_offset) o = config.participant_sd * rng.normal();
  std::array<double, 9> position_offset{};
  for (double& o : position_offset) o = config.position_sd * rng.normal();

  const int width = static_cast<int>(std::to_string(n_scenes).size());
  out.metrics.reserve(n_scenes);
  out.fixations.reserve(n_scenes);
  for (std::size_t s = 0; s < n_scenes; ++s) {
    MetricRow row;
    std::string idx = std::to_string(s + 1);
    row.image_id = "img_" + std::string(static_cast<std::size_t>(width) - idx.size(), '0') + idx;
    row.object_id = "obj_0";
    row.name = "object";
    row.obj_image_vissim = rng.uniform(config.obj_image.lo, config.obj_image.hi);
    row.objs_vissim = rng.uniform(config.objs.lo, config.objs.hi);
    row.sent_semsim = rng.uniform(config.sent.lo, config.sent.hi);
    row.words_semsim = rng.uniform(config.words.lo, config.words.hi);
    row.concepts_semsim = rng.uniform(config.concepts.lo, config.concepts.hi);
    row.overall_vissim = overall_vissim(row.obj_image_vissim, row.objs_vissim);
    row.overall_semsim = overall_semsim(row.sent_semsim, row.words_semsim);
    row.sum_vissem_sim = sum_vissem_sim(row.overall_semsim, row.obj_image_vissim);
    row.proportion = std::exp(rng.uniform(std::log(config.proportion.lo), std::log(config.proportion.hi)));
    row.saliency = rng.uniform();
    const int cell = std::min(8, static_cast<int>(rng.uniform() * 9.0));
    row.position = static_cast<Position>(cell);

    const std::size_t p = std::min(participant_offset.size() - 1,
                                   static_cast<std::size_t>(rng.uniform() * static_cast<double>(participant_offset.size())));
    const double eta = driver_curve(config, *metric_value(row, config.driver)) +
                       config.proportion_slope * std::log(row.proportion / 0.02) +
                       config.saliency_slope * (*row.saliency - 0.5) + position_offset[static_cast<std::size_t>(cell)] +
                       participant_offset[p];
    const double dur_noise = rng.normal();
    const double cnt_noise = rng.normal();
    FixationRecord f;
    f.image_id = row.image_id;
    f.object_id = row.object_id;
    f.participant = "p" + std::to_string(p + 1);
    f.total_duration_ms = std::exp(config.log_base_duration + eta + config.duration_noise_sd * dur_noise);
    f.fixation_count = std::llround(std::exp(config.log_base_count + eta + config.count_noise_sd * cnt_noise));
    out.fixations.push_back(std::move(f));
    out.metrics.push_back(std::move(row));
  }
  return out;
}

}  // namespace semrel::gam
