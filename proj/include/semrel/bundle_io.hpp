#pragma once

// File contracts: scene bundle documents (JSON), fixation CSV and metric-table
// CSV. Ids follow [A-Za-z0-9_-]+ so neither CSV needs quoting.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "semrel/error.hpp"
#include "semrel/geometry.hpp"
#include "semrel/lexicon.hpp"
#include "semrel/pnm.hpp"
#include "semrel/relevance.hpp"
#include "semrel/scene.hpp"

namespace semrel {

struct Issue {
  std::string path;
  std::string message;
  Errc code = Errc::kSchemaError;
};

struct ValidationReport {
  std::vector<Issue> errors;
  std::vector<Issue> warnings;

  bool ok() const noexcept { return errors.empty(); }
};

inline bool is_valid_id(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' ||
                    c == '-';
    if (!ok) return false;
  }
  return true;
}

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Scene bundles

namespace detail {

using nlohmann::json;

class BundleParser {
 public:
  explicit BundleParser(ValidationReport& report) : report_(report) {}

  std::optional<SceneBundle> parse(const json& doc) {
    if (!doc.is_object()) {
      error("", "document must be a JSON object");
      return std::nullopt;
    }
    static const std::set<std::string> known = {"image_id",   "width",   "height",
                                                "caption",    "embedding_dim", "image_embedding",
                                                "objects",    "caption_sentence_embeddings",
                                                "image_path", "provenance"};
    for (const auto& [key, _] : doc.items()) {
      if (!known.count(key)) warn(key, "unknown field ignored");
    }

    SceneBundle b;
    const std::size_t before = report_.errors.size();

    if (auto id = required_string(doc, "image_id", "image_id")) {
      if (!is_valid_id(*id)) error("image_id", "must match [A-Za-z0-9_-]+");
      b.image_id = *id;
    }
    const auto width = positive_int(doc, "width", "width");
    const auto height = positive_int(doc, "height", "height");
    if (width && height) b.dims = ImageDims{*width, *height};
    if (auto caption = required_string(doc, "caption", "caption")) b.caption = *caption;
    const auto dim = positive_int(doc, "embedding_dim", "embedding_dim");
    if (dim) b.embedding_dim = static_cast<std::size_t>(*dim);

    if (auto v = vector_field(doc, "image_embedding", "image_embedding", dim, true)) b.image_embedding = *v;

    if (!doc.contains("objects")) {
      error("objects", "missing required field");
    } else if (!doc["objects"].is_array()) {
      error("objects", "must be an array");
    } else if (doc["objects"].empty()) {
      error("objects", "at least one object is required");
    } else {
      std::set<std::string> seen;
      const auto& arr = doc["objects"];
      for (std::size_t i = 0; i < arr.size(); ++i) {
        if (auto obj = parse_object(arr[i], "objects[" + std::to_string(i) + "]", dim, width, height, seen)) {
          b.objects.push_back(std::move(*obj));
        }
      }
    }

    if (doc.contains("caption_sentence_embeddings")) {
      const auto& arr = doc["caption_sentence_embeddings"];
      if (!arr.is_array()) {
        error("caption_sentence_embeddings", "must be an array");
      } else {
        std::vector<Vector> sentences;
        for (std::size_t i = 0; i < arr.size(); ++i) {
          const std::string path = "caption_sentence_embeddings[" + std::to_string(i) + "]";
          if (auto v = to_vector(arr[i], path)) {
            if (check_text_dim(*v, path)) sentences.push_back(std::move(*v));
          }
        }
        b.caption_sentence_embeddings = std::move(sentences);
      }
    }
    if (doc.contains("image_path")) {
      if (!doc["image_path"].is_string() || doc["image_path"].get<std::string>().empty()) {
        error("image_path", "must be a nonempty string");
      } else {
        b.image_path = doc["image_path"].get<std::string>();
      }
    }

    if (report_.errors.size() != before) return std::nullopt;
    return b;
  }

 private:
  void error(const std::string& path, const std::string& msg, Errc code = Errc::kSchemaError) {
    report_.errors.push_back({path, msg, code});
  }
  void warn(const std::string& path, const std::string& msg) {
    report_.warnings.push_back({path, msg, Errc::kSchemaError});
  }

  std::optional<std::string> required_string(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key)) {
      error(path, "missing required field");
      return std::nullopt;
    }
    if (!obj[key].is_string()) {
      error(path, "must be a string");
      return std::nullopt;
    }
    return obj[key].get<std::string>();
  }

  std::optional<int> positive_int(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key)) {
      error(path, "missing required field");
      return std::nullopt;
    }
    const auto& v = obj[key];
    if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 1'000'000'000LL) {
      error(path, "must be a positive integer");
      return std::nullopt;
    }
    return static_cast<int>(v.get<long long>());
  }

  std::optional<double> finite_number(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key)) {
      error(path, "missing required field");
      return std::nullopt;
    }
    const auto& v = obj[key];
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      error(path, "must be a finite number");
      return std::nullopt;
    }
    return v.get<double>();
  }

  std::optional<Vector> to_vector(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) {
      error(path, "must be a nonempty array of numbers");
      return std::nullopt;
    }
    std::vector<double> values;
    values.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
        error(path, "element " + std::to_string(i) + " is not a finite number");
        return std::nullopt;
      }
      values.push_back(v[i].get<double>());
    }
    return Vector(std::move(values));
  }

  std::optional<Vector> vector_field(const json& obj, const char* key, const std::string& path,
                                     std::optional<int> dim, bool required) {
    if (!obj.contains(key)) {
      if (required) error(path, "missing required field");
      return std::nullopt;
    }
    auto v = to_vector(obj[key], path);
    if (v && dim && v->dim() != static_cast<std::size_t>(*dim)) {
      error(path, "length " + std::to_string(v->dim()) + " differs from embedding_dim " + std::to_string(*dim),
            Errc::kDimensionMismatch);
      return std::nullopt;
    }
    return v;
  }

  // Text-encoder embeddings share one dimension, which may differ from the
  // image embedding dimension.
  bool check_text_dim(const Vector& v, const std::string& path) {
    if (!text_dim_) {
      text_dim_ = v.dim();
      return true;
    }
    if (v.dim() != *text_dim_) {
      error(path, "length " + std::to_string(v.dim()) + " differs from text embedding length " +
                      std::to_string(*text_dim_),
            Errc::kDimensionMismatch);
      return false;
    }
    return true;
  }

  std::optional<ObjectRecord> parse_object(const json& o, const std::string& path, std::optional<int> dim,
                                           std::optional<int> width, std::optional<int> height,
                                           std::set<std::string>& seen) {
    if (!o.is_object()) {
      error(path, "must be an object");
      return std::nullopt;
    }
    const std::size_t before = report_.errors.size();
    ObjectRecord rec;
    if (auto id = required_string(o, "object_id", path + ".object_id")) {
      if (!is_valid_id(*id)) {
        error(path + ".object_id", "must match [A-Za-z0-9_-]+");
      } else if (!seen.insert(*id).second) {
        error(path + ".object_id", "duplicate object_id '" + *id + "'");
      }
      rec.object_id = *id;
    }
    if (auto name = required_string(o, "name", path + ".name")) {
      if (name->empty()) error(path + ".name", "must be nonempty");
      rec.name = *name;
    }
    if (!o.contains("bbox")) {
      error(path + ".bbox", "missing required field");
    } else if (!o["bbox"].is_object()) {
      error(path + ".bbox", "must be an object with x, y, w, h");
    } else {
      const auto& bb = o["bbox"];
      const std::string bp = path + ".bbox";
      const auto x = finite_number(bb, "x", bp + ".x");
      const auto y = finite_number(bb, "y", bp + ".y");
      const auto w = finite_number(bb, "w", bp + ".w");
      const auto h = finite_number(bb, "h", bp + ".h");
      if (x && y && w && h) {
        if (!(*w > 0.0) || !(*h > 0.0)) {
          error(bp, "w and h must be positive", Errc::kDegenerateBox);
        } else {
          rec.bbox = BBox{*x, *y, *w, *h};
          if (width && height) {
            const ImageDims dims{*width, *height};
            const bool inside = *x >= 0.0 && *y >= 0.0 && rec.bbox.right() <= *width && rec.bbox.bottom() <= *height;
            if (!inside) {
              try {
                rec.bbox = clip_to_image(rec.bbox, dims);
                warn(bp, "box exceeds image bounds; clipped");
              } catch (const Error&) {
                error(bp, "box lies outside the image", Errc::kDegenerateBox);
              }
            }
          }
        }
      }
    }
    if (auto v = vector_field(o, "embedding", path + ".embedding", dim, true)) rec.embedding = *v;
    if (o.contains("name_text_embedding")) {
      const std::string tp = path + ".name_text_embedding";
      if (auto v = to_vector(o["name_text_embedding"], tp)) {
        if (check_text_dim(*v, tp)) rec.name_text_embedding = std::move(*v);
      }
    }
    if (report_.errors.size() != before) return std::nullopt;
    return rec;
  }

  ValidationReport& report_;
  std::optional<std::size_t> text_dim_;
};

}  // namespace detail

// Parses and validates a bundle document, collecting every problem.
inline std::optional<SceneBundle> parse_bundle_text(const std::string& text, ValidationReport& report) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    report.errors.push_back({"", "JSON parse error at byte " + std::to_string(e.byte), Errc::kParseError});
    return std::nullopt;
  }
  return detail::BundleParser(report).parse(doc);
}

inline ValidationReport validate_bundle(const std::filesystem::path& path) {
  ValidationReport report;
  std::string text;
  try {
    text = detail::read_file_bytes(path);
  } catch (const Error& e) {
    report.errors.push_back({"", e.what(), Errc::kIoError});
    return report;
  }
  parse_bundle_text(text, report);
  return report;
}

// Throws the first problem found, naming the offending field path.
inline SceneBundle read_bundle(const std::filesystem::path& path, std::vector<Issue>* warnings = nullptr) {
  ValidationReport report;
  auto bundle = parse_bundle_text(detail::read_file_bytes(path), report);
  if (warnings) *warnings = report.warnings;
  if (!report.ok()) {
    const Issue& first = report.errors.front();
    throw Error(first.code, path.string() + ": " + (first.path.empty() ? "" : first.path + ": ") + first.message);
  }
  return std::move(*bundle);
}

inline nlohmann::json bundle_to_json(const SceneBundle& b) {
  using nlohmann::json;
  json doc;
  doc["image_id"] = b.image_id;
  doc["width"] = b.dims.width;
  doc["height"] = b.dims.height;
  doc["caption"] = b.caption;
  doc["embedding_dim"] = b.embedding_dim;
  doc["image_embedding"] = b.image_embedding.data();
  json objects = json::array();
  for (const auto& o : b.objects) {
    json jo;
    jo["object_id"] = o.object_id;
    jo["name"] = o.name;
    jo["bbox"] = {{"x", o.bbox.x}, {"y", o.bbox.y}, {"w", o.bbox.w}, {"h", o.bbox.h}};
    jo["embedding"] = o.embedding.data();
    if (o.name_text_embedding) jo["name_text_embedding"] = o.name_text_embedding->data();
    objects.push_back(std::move(jo));
  }
  doc["objects"] = std::move(objects);
  if (b.caption_sentence_embeddings) {
    json arr = json::array();
    for (const auto& v : *b.caption_sentence_embeddings) arr.push_back(v.data());
    doc["caption_sentence_embeddings"] = std::move(arr);
  }
  if (b.image_path) doc["image_path"] = *b.image_path;
  return doc;
}

// Writes to a sibling temporary file, then renames over the target.
inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(Errc::kIoError, "cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw Error(Errc::kIoError, "write failed for " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(Errc::kIoError, "cannot move output into place at " + path.string());
  }
}

inline void write_bundle(const SceneBundle& b, const std::filesystem::path& path) {
  write_text_file(path, bundle_to_json(b).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// CSV helpers

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

// Splits text into lines (LF or CRLF); a trailing newline yields no extra line.
inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = end + 1;
  }
  return lines;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Fixations

struct FixationRecord {
  std::string image_id;
  std::string object_id;
  std::string participant;
  double total_duration_ms = 0.0;
  long long fixation_count = 0;

  friend bool operator==(const FixationRecord&, const FixationRecord&) = default;
};

inline constexpr std::string_view kFixationHeader = "image_id,object_id,participant,total_duration_ms,fixation_count";

inline std::vector<FixationRecord> parse_fixations(std::string_view text) {
  const auto lines = detail::split_lines(text);
  if (lines.empty() || lines.front() != kFixationHeader) {
    throw Error(Errc::kBadHeader, "expected header '" + std::string(kFixationHeader) + "'");
  }
  std::vector<FixationRecord> out;
  std::set<std::tuple<std::string, std::string, std::string>> keys;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (lines[i].empty()) continue;
    auto bad = [&](const std::string& why) {
      return Error(Errc::kBadRow, "line " + std::to_string(line_no) + ": " + why);
    };
    const auto f = detail::split_commas(lines[i]);
    if (f.size() != 5) throw bad("expected 5 fields, got " + std::to_string(f.size()));
    FixationRecord r;
    r.image_id = f[0];
    r.object_id = f[1];
    r.participant = f[2];
    if (!is_valid_id(r.image_id) || !is_valid_id(r.object_id) || !is_valid_id(r.participant)) {
      throw bad("ids must match [A-Za-z0-9_-]+");
    }
    if (!detail::parse_double(f[3], r.total_duration_ms) || r.total_duration_ms < 0.0) {
      throw bad("total_duration_ms must be a nonnegative finite number");
    }
    auto [ptr, ec] = std::from_chars(f[4].data(), f[4].data() + f[4].size(), r.fixation_count);
    if (ec != std::errc() || ptr != f[4].data() + f[4].size() || r.fixation_count < 0) {
      throw bad("fixation_count must be a nonnegative integer");
    }
    if (!keys.emplace(r.image_id, r.object_id, r.participant).second) {
      throw Error(Errc::kDuplicateKey, "line " + std::to_string(line_no) + ": repeated (" + r.image_id + ", " +
                                           r.object_id + ", " + r.participant + ")");
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<FixationRecord> read_fixations(const std::filesystem::path& path) {
  return parse_fixations(detail::read_file_bytes(path));
}

inline std::string format_fixations(const std::vector<FixationRecord>& rows) {
  std::string out(kFixationHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += r.image_id + ',' + r.object_id + ',' + r.participant + ',' + format_real(r.total_duration_ms) + ',' +
           std::to_string(r.fixation_count) + '\n';
  }
  return out;
}

inline void write_fixations(const std::vector<FixationRecord>& rows, const std::filesystem::path& path) {
  write_text_file(path, format_fixations(rows));
}

// ---------------------------------------------------------------------------
// Metric tables

inline constexpr std::array<std::string_view, 14> kMetricColumns = {
    "image_id",       "object_id",    "name",          "obj_image_vissim", "objs_vissim",
    "overall_vissim", "sent_semsim",  "words_semsim",  "concepts_semsim",  "overall_semsim",
    "sum_vissem_sim", "proportion",   "saliency",      "position",
};

inline std::string format_metric_table(const MetricTable& rows) {
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
  std::string out;
  for (std::size_t i = 0; i < kMetricColumns.size(); ++i) {
    if (i) out += ',';
    out += kMetricColumns[i];
  }
  out += '\n';
  for (const auto& r : rows) {
    if (!is_valid_id(r.image_id) || !is_valid_id(r.object_id)) {
      throw Error(Errc::kInvalidArgument, "ids must match [A-Za-z0-9_-]+: " + r.image_id + "/" + r.object_id);
    }
    if (r.name.find_first_of(",\r\n") != std::string::npos) {
      throw Error(Errc::kInvalidArgument, "object name contains a comma or line break: " + r.name);
    }
    out += r.image_id + ',' + r.object_id + ',' + r.name;
    for (Metric m : kAllMetrics) out += ',' + opt(metric_value(r, m));
    out += ',' + format_real(r.proportion) + ',' + opt(r.saliency) + ',' + std::string(to_string(r.position));
    out += '\n';
  }
  return out;
}

inline MetricTable parse_metric_table(std::string_view text) {
  const auto lines = detail::split_lines(text);
  if (lines.empty()) throw Error(Errc::kParseError, "empty metric table");
  const auto header = detail::split_commas(lines.front());
  for (const auto& col : header) {
    if (std::find(kMetricColumns.begin(), kMetricColumns.end(), col) == kMetricColumns.end()) {
      throw Error(Errc::kParseError, "unknown column '" + std::string(col) + "'");
    }
  }
  if (header.size() != kMetricColumns.size() || !std::equal(header.begin(), header.end(), kMetricColumns.begin())) {
    throw Error(Errc::kParseError, "header must list the metric columns in the fixed order");
  }

  MetricTable rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string where = "line " + std::to_string(i + 1);
    const auto f = detail::split_commas(lines[i]);
    if (f.size() != kMetricColumns.size()) {
      throw Error(Errc::kParseError, where + ": expected " + std::to_string(kMetricColumns.size()) + " fields");
    }
    auto real = [&](std::size_t col) -> std::optional<double> {
      if (f[col].empty()) return std::nullopt;
      double v = 0.0;
      if (!detail::parse_double(f[col], v)) {
        throw Error(Errc::kParseError, where + ": column " + std::string(kMetricColumns[col]) + " is not a number");
      }
      return v;
    };
    MetricRow r;
    r.image_id = f[0];
    r.object_id = f[1];
    r.name = f[2];
    if (!is_valid_id(r.image_id) || !is_valid_id(r.object_id)) {
      throw Error(Errc::kParseError, where + ": ids must match [A-Za-z0-9_-]+");
    }
    for (std::size_t k = 0; k < kAllMetrics.size(); ++k) metric_value(r, kAllMetrics[k]) = real(3 + k);
    const auto prop = real(11);
    if (!prop) throw Error(Errc::kParseError, where + ": proportion is required");
    r.proportion = *prop;
    r.saliency = real(12);
    const auto pos = parse_position(f[13]);
    if (!pos) throw Error(Errc::kParseError, where + ": unknown position '" + std::string(f[13]) + "'");
    r.position = *pos;
    rows.push_back(std::move(r));
  }
  return rows;
}

inline MetricTable read_metric_table(const std::filesystem::path& path) {
  return parse_metric_table(detail::read_file_bytes(path));
}

inline void write_metric_table(const MetricTable& rows, const std::filesystem::path& path) {
  write_text_file(path, format_metric_table(rows));
}

}  // namespace semrel
