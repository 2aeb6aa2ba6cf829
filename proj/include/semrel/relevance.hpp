#pragma once

// Per-object contextual relevance metrics.
//
// Vision-based:   obj_image_vissim, objs_vissim, overall_vissim
// Language-based: sent_semsim, words_semsim, concepts_semsim, overall_semsim
// Combined:       sum_vissem_sim = overall_semsim + obj_image_vissim
//
// Every metric is optional: a missing input propagates as a missing value and
// is never replaced by 0.

#include <array>
#include <cctype>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "semrel/error.hpp"
#include "semrel/geometry.hpp"
#include "semrel/lexicon.hpp"
#include "semrel/saliency.hpp"
#include "semrel/scene.hpp"
#include "semrel/vecmath.hpp"

namespace semrel {

enum class Neighborhood { kAdjacentOverlap, kAllOthers };

constexpr std::string_view to_string(Neighborhood n) {
  return n == Neighborhood::kAdjacentOverlap ? "adjacent" : "all";
}

inline std::optional<Neighborhood> parse_neighborhood(std::string_view s) {
  if (s == "adjacent") return Neighborhood::kAdjacentOverlap;
  if (s == "all") return Neighborhood::kAllOthers;
  return std::nullopt;
}

// kWithImageTerm also folds the object-to-image cosine into objs_vissim.
enum class ObjsVissimVariant { kSurroundingOnly, kWithImageTerm };

struct RelevanceConfig {
  Neighborhood vision_neighborhood = Neighborhood::kAdjacentOverlap;
  Neighborhood language_neighborhood = Neighborhood::kAllOthers;
  ObjsVissimVariant objs_variant = ObjsVissimVariant::kSurroundingOnly;
  SRParams sr;
  SaliencyReduce saliency_reduce = SaliencyReduce::kMean;
};

struct MetricRow {
  std::string image_id;
  std::string object_id;
  std::string name;
  std::optional<double> obj_image_vissim;
  std::optional<double> objs_vissim;
  std::optional<double> overall_vissim;
  std::optional<double> sent_semsim;
  std::optional<double> words_semsim;
  std::optional<double> concepts_semsim;
  std::optional<double> overall_semsim;
  std::optional<double> sum_vissem_sim;
  double proportion = 0.0;
  std::optional<double> saliency;
  Position position = Position::kCenter;

  friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

using MetricTable = std::vector<MetricRow>;

// The eight metrics in report order.
enum class Metric {
  kObjImageVissim,
  kObjsVissim,
  kOverallVissim,
  kSentSemsim,
  kWordsSemsim,
  kConceptsSemsim,
  kOverallSemsim,
  kSumVissemSim,
};

inline constexpr std::array<Metric, 8> kAllMetrics = {
    Metric::kObjImageVissim, Metric::kObjsVissim,     Metric::kOverallVissim, Metric::kSentSemsim,
    Metric::kWordsSemsim,    Metric::kConceptsSemsim, Metric::kOverallSemsim, Metric::kSumVissemSim,
};

constexpr std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::kObjImageVissim: return "obj_image_vissim";
    case Metric::kObjsVissim: return "objs_vissim";
    case Metric::kOverallVissim: return "overall_vissim";
    case Metric::kSentSemsim: return "sent_semsim";
    case Metric::kWordsSemsim: return "words_semsim";
    case Metric::kConceptsSemsim: return "concepts_semsim";
    case Metric::kOverallSemsim: return "overall_semsim";
    case Metric::kSumVissemSim: return "sum_vissem_sim";
  }
  return "";
}

inline std::optional<Metric> parse_metric(std::string_view s) {
  for (Metric m : kAllMetrics) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

inline std::optional<double>& metric_value(MetricRow& row, Metric m) {
  switch (m) {
    case Metric::kObjImageVissim: return row.obj_image_vissim;
    case Metric::kObjsVissim: return row.objs_vissim;
    case Metric::kOverallVissim: return row.overall_vissim;
    case Metric::kSentSemsim: return row.sent_semsim;
    case Metric::kWordsSemsim: return row.words_semsim;
    case Metric::kConceptsSemsim: return row.concepts_semsim;
    case Metric::kOverallSemsim: return row.overall_semsim;
    case Metric::kSumVissemSim: return row.sum_vissem_sim;
  }
  throw Error(Errc::kInvalidArgument, "unknown metric");
}

inline const std::optional<double>& metric_value(const MetricRow& row, Metric m) {
  return metric_value(const_cast<MetricRow&>(row), m);
}

// Accumulated cosine over a neighbor set plus how many neighbors were unusable.
struct NeighborSum {
  std::optional<double> value;
  std::size_t used = 0;
  std::size_t skipped = 0;
};

enum class SentenceSource { kPrecomputed, kFallback };

struct RowDiagnostics {
  std::string object_id;
  std::size_t vision_neighbors = 0;
  std::size_t vision_skipped = 0;
  std::size_t language_neighbors = 0;
  std::size_t words_skipped = 0;
  std::size_t concepts_skipped = 0;
  SentenceSource sentence_source = SentenceSource::kFallback;
};

struct SceneMetrics {
  MetricTable rows;
  std::vector<RowDiagnostics> diagnostics;
  bool saliency_computed = false;
};

// Throws SchemaError / DimensionMismatch for an in-memory bundle that breaks
// the bundle invariants.
inline void check_scene(const SceneBundle& scene) {
  if (scene.objects.empty()) throw Error(Errc::kSchemaError, "objects: at least one object is required");
  if (scene.embedding_dim == 0) throw Error(Errc::kSchemaError, "embedding_dim must be positive");
  if (scene.image_embedding.dim() != scene.embedding_dim) {
    throw Error(Errc::kDimensionMismatch, "image_embedding length differs from embedding_dim");
  }
  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto& o = scene.objects[i];
    const std::string path = "objects[" + std::to_string(i) + "]";
    if (!ids.insert(o.object_id).second) throw Error(Errc::kSchemaError, path + ".object_id duplicated");
    if (o.name.empty()) throw Error(Errc::kSchemaError, path + ".name is empty");
    if (o.embedding.dim() != scene.embedding_dim) {
      throw Error(Errc::kDimensionMismatch, path + ".embedding length differs from embedding_dim");
    }
  }
}

inline std::vector<const ObjectRecord*> neighbors(const SceneBundle& scene, std::string_view target_id,
                                                  Neighborhood policy) {
  const ObjectRecord* target = nullptr;
  for (const auto& o : scene.objects) {
    if (o.object_id == target_id) target = &o;
  }
  if (target == nullptr) throw Error(Errc::kUnknownObject, std::string(target_id));

  std::vector<const ObjectRecord*> out;
  for (const auto& o : scene.objects) {
    if (&o == target) continue;
    if (policy == Neighborhood::kAllOthers || is_adjacent(o.bbox, target->bbox)) out.push_back(&o);
  }
  return out;
}

inline std::optional<double> try_cosine(const Vector& u, const Vector& v) {
  if (l2_norm(u) == 0.0 || l2_norm(v) == 0.0) return std::nullopt;
  return cosine(u, v);
}

inline std::optional<double> obj_image_vissim(const ObjectRecord& obj, const SceneBundle& scene) {
  return try_cosine(obj.embedding, scene.image_embedding);
}

inline NeighborSum objs_vissim(const ObjectRecord& obj, const SceneBundle& scene, Neighborhood policy,
                               ObjsVissimVariant variant = ObjsVissimVariant::kSurroundingOnly) {
  NeighborSum out;
  if (l2_norm(obj.embedding) == 0.0) return out;
  double acc = 0.0;
  if (variant == ObjsVissimVariant::kWithImageTerm) {
    if (auto c = obj_image_vissim(obj, scene)) acc += *c;
  }
  for (const ObjectRecord* n : neighbors(scene, obj.object_id, policy)) {
    if (auto c = try_cosine(obj.embedding, n->embedding)) {
      acc += *c;
      ++out.used;
    } else {
      ++out.skipped;
    }
  }
  out.value = acc;
  return out;
}

inline std::optional<double> add_if_present(const std::optional<double>& a, const std::optional<double>& b) {
  if (!a || !b) return std::nullopt;
  return *a + *b;
}

inline std::optional<double> overall_vissim(const std::optional<double>& obj_image,
                                            const std::optional<double>& objs) {
  return add_if_present(obj_image, objs);
}

// Caption split on . ! ? ; with surrounding whitespace trimmed.
inline std::vector<std::string> split_sentences(std::string_view caption) {
  std::vector<std::string> out;
  auto flush = [&](std::string_view piece) {
    std::size_t b = 0;
    std::size_t e = piece.size();
    while (b < e && std::isspace(static_cast<unsigned char>(piece[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(piece[e - 1]))) --e;
    if (e > b) out.emplace_back(piece.substr(b, e - b));
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i < caption.size(); ++i) {
    const char c = caption[i];
    if (c == '.' || c == '!' || c == '?' || c == ';') {
      flush(caption.substr(start, i - start));
      start = i + 1;
    }
  }
  flush(caption.substr(start));
  return out;
}

// Precomputed encoder embeddings are used only when both the name and the
// caption sentences carry them, so both sides always live in one space.
inline SentenceSource sentence_source(const ObjectRecord& obj, const SceneBundle& scene) {
  const bool precomputed = obj.name_text_embedding.has_value() && scene.caption_sentence_embeddings.has_value() &&
                           !scene.caption_sentence_embeddings->empty();
  return precomputed ? SentenceSource::kPrecomputed : SentenceSource::kFallback;
}

inline std::optional<double> sent_semsim(const ObjectRecord& obj, const SceneBundle& scene,
                                         const WordVectorStore& store) {
  std::optional<Vector> name_vec;
  std::vector<Vector> sentences;
  if (sentence_source(obj, scene) == SentenceSource::kPrecomputed) {
    name_vec = obj.name_text_embedding;
    sentences = *scene.caption_sentence_embeddings;
  } else {
    name_vec = fallback_sentence_embedding(store, obj.name);
    for (const std::string& s : split_sentences(scene.caption)) {
      if (auto v = fallback_sentence_embedding(store, s)) sentences.push_back(std::move(*v));
    }
  }
  if (!name_vec || sentences.empty()) return std::nullopt;

  std::optional<double> best;
  for (const Vector& s : sentences) {
    if (auto c = try_cosine(*name_vec, s)) {
      if (!best || *c > *best) best = c;
    }
  }
  return best;
}

// Sum of name-to-name cosines against the neighbor set. Serves both the
// general word-vector store and the concept store.
inline NeighborSum words_semsim(const ObjectRecord& obj, const SceneBundle& scene, const WordVectorStore& store,
                                Neighborhood policy) {
  NeighborSum out;
  const auto target = lookup_name(store, obj.name);
  const auto hood = neighbors(scene, obj.object_id, policy);
  if (!target || l2_norm(*target) == 0.0) {
    out.skipped = hood.size();
    return out;
  }
  double acc = 0.0;
  for (const ObjectRecord* n : hood) {
    const auto v = lookup_name(store, n->name);
    std::optional<double> c = v ? try_cosine(*target, *v) : std::nullopt;
    if (c) {
      acc += *c;
      ++out.used;
    } else {
      ++out.skipped;
    }
  }
  out.value = acc;
  return out;
}

inline NeighborSum concepts_semsim(const ObjectRecord& obj, const SceneBundle& scene,
                                   const WordVectorStore& concepts_store, Neighborhood policy) {
  return words_semsim(obj, scene, concepts_store, policy);
}

inline std::optional<double> overall_semsim(const std::optional<double>& sent, const std::optional<double>& words) {
  return add_if_present(sent, words);
}

inline std::optional<double> sum_vissem_sim(const std::optional<double>& overall_sem,
                                            const std::optional<double>& obj_image) {
  return add_if_present(overall_sem, obj_image);
}

// Maps a box from bundle coordinates onto a map of possibly different size.
inline BBox scale_box(const BBox& b, ImageDims from, int to_w, int to_h) {
  const double sx = static_cast<double>(to_w) / from.width;
  const double sy = static_cast<double>(to_h) / from.height;
  return BBox{b.x * sx, b.y * sy, b.w * sx, b.h * sy};
}

// Computes every row for one scene. When `saliency_map` is given it is used
// as is; otherwise a map is computed from scene.image_path (resolved against
// `base_dir` when relative), and saliency stays missing without an image.
inline SceneMetrics compute_metric_table(const SceneBundle& scene, const WordVectorStore& store,
                                         const WordVectorStore* concepts_store, const RelevanceConfig& config,
                                         const std::filesystem::path& base_dir = {},
                                         const SaliencyMap* saliency_map = nullptr) {
  check_scene(scene);

  std::optional<SaliencyMap> computed;
  if (saliency_map == nullptr && scene.image_path) {
    std::filesystem::path p(*scene.image_path);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    computed = spectral_residual(load_gray(p), config.sr);
    saliency_map = &*computed;
  }

  SceneMetrics out;
  out.saliency_computed = saliency_map != nullptr;
  out.rows.reserve(scene.objects.size());
  for (const ObjectRecord& obj : scene.objects) {
    MetricRow row;
    RowDiagnostics diag;
    row.image_id = scene.image_id;
    row.object_id = obj.object_id;
    row.name = obj.name;
    diag.object_id = obj.object_id;

    row.obj_image_vissim = obj_image_vissim(obj, scene);
    const NeighborSum vis = objs_vissim(obj, scene, config.vision_neighborhood, config.objs_variant);
    row.objs_vissim = vis.value;
    diag.vision_neighbors = vis.used + vis.skipped;
    diag.vision_skipped = vis.skipped;
    row.overall_vissim = overall_vissim(row.obj_image_vissim, row.objs_vissim);

    row.sent_semsim = sent_semsim(obj, scene, store);
    diag.sentence_source = sentence_source(obj, scene);
    const NeighborSum words = words_semsim(obj, scene, store, config.language_neighborhood);
    row.words_semsim = words.value;
    diag.language_neighbors = words.used + words.skipped;
    diag.words_skipped = words.skipped;
    if (concepts_store != nullptr) {
      const NeighborSum concepts = concepts_semsim(obj, scene, *concepts_store, config.language_neighborhood);
      row.concepts_semsim = concepts.value;
      diag.concepts_skipped = concepts.skipped;
    }
    row.overall_semsim = overall_semsim(row.sent_semsim, row.words_semsim);
    row.sum_vissem_sim = sum_vissem_sim(row.overall_semsim, row.obj_image_vissim);

    row.proportion = proportion(obj.bbox, scene.dims);
    row.position = position(obj.bbox, scene.dims);
    if (saliency_map != nullptr) {
      const BBox on_map = scale_box(obj.bbox, scene.dims, saliency_map->width, saliency_map->height);
      row.saliency = object_saliency(*saliency_map, on_map, config.saliency_reduce);
    }
    out.rows.push_back(std::move(row));
    out.diagnostics.push_back(std::move(diag));
  }
  return out;
}

}  // namespace semrel
