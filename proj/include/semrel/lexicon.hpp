#pragma once

// Word-vector stores in the common text format: a "count dim" header line,
// then one "token v1 ... v_dim" line per entry.

#include <cctype>
#include <charconv>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "semrel/error.hpp"
#include "semrel/pnm.hpp"
#include "semrel/vecmath.hpp"

namespace semrel {

class WordVectorStore {
 public:
  WordVectorStore() = default;
  explicit WordVectorStore(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t declared_count() const noexcept { return declared_count_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  const Vector* find(std::string_view token) const {
    auto it = entries_.find(std::string(token));
    return it == entries_.end() ? nullptr : &it->second;
  }

  // Returns false (keeping the existing entry) when the token is already present.
  bool insert(std::string token, Vector v) {
    if (v.dim() != dim_) {
      throw Error(Errc::kDimensionMismatch, "vector for '" + token + "' has dim " + std::to_string(v.dim()) +
                                                ", store dim " + std::to_string(dim_));
    }
    return entries_.try_emplace(std::move(token), std::move(v)).second;
  }

  friend WordVectorStore parse_vec_text(std::string_view text);

 private:
  std::size_t dim_ = 0;
  std::size_t declared_count_ = 0;
  std::unordered_map<std::string, Vector> entries_;
  std::vector<std::string> warnings_;
};

inline std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

namespace detail {

inline bool parse_double(std::string_view field, double& out) {
  const char* first = field.data();
  const char* last = first + field.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

inline bool parse_size(std::string_view field, std::size_t& out) {
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

inline std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

}  // namespace detail

inline WordVectorStore parse_vec_text(std::string_view text) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    return true;
  };

  std::string_view line;
  if (!next_line(line)) throw Error(Errc::kMalformedHeader, "empty word-vector file");
  const auto header = detail::split_spaces(line);
  std::size_t count = 0;
  std::size_t dim = 0;
  if (header.size() != 2 || !detail::parse_size(header[0], count) || !detail::parse_size(header[1], dim) ||
      dim == 0) {
    throw Error(Errc::kMalformedHeader, "expected 'count dim' on line 1");
  }

  WordVectorStore store(dim);
  store.declared_count_ = count;
  store.entries_.reserve(count);
  std::vector<double> values(dim);
  while (next_line(line)) {
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    const auto fields = detail::split_spaces(line);
    if (fields.size() != dim + 1) {
      throw Error(Errc::kBadLine, "line " + std::to_string(line_no) + ": expected " + std::to_string(dim + 1) +
                                      " fields, got " + std::to_string(fields.size()));
    }
    for (std::size_t i = 0; i < dim; ++i) {
      if (!detail::parse_double(fields[i + 1], values[i])) {
        throw Error(Errc::kBadLine, "line " + std::to_string(line_no) + ": non-numeric component '" +
                                        std::string(fields[i + 1]) + "'");
      }
    }
    std::string token = to_lower_ascii(fields[0]);
    if (!store.insert(token, Vector(values))) {
      store.warnings_.push_back("line " + std::to_string(line_no) + ": duplicate token '" + token +
                                "' ignored (first occurrence kept)");
    }
  }
  if (store.size() != count) {
    store.warnings_.push_back("header declares " + std::to_string(count) + " entries, parsed " +
                              std::to_string(store.size()));
  }
  return store;
}

inline WordVectorStore load_vec_file(const std::filesystem::path& path) {
  return parse_vec_text(detail::read_file_bytes(path));
}

// Lowercased name; a multiword name resolves to the mean of whichever of its
// words are in the store.
inline std::optional<Vector> lookup_name(const WordVectorStore& store, std::string_view name) {
  const std::string lower = to_lower_ascii(name);
  std::vector<Vector> found;
  std::size_t words = 0;
  std::size_t i = 0;
  while (i < lower.size()) {
    while (i < lower.size() && std::isspace(static_cast<unsigned char>(lower[i]))) ++i;
    const std::size_t start = i;
    while (i < lower.size() && !std::isspace(static_cast<unsigned char>(lower[i]))) ++i;
    if (i == start) continue;
    ++words;
    if (const Vector* v = store.find(std::string_view(lower).substr(start, i - start))) found.push_back(*v);
  }
  if (found.empty()) return std::nullopt;
  if (words == 1) return found.front();
  return mean_vector(found);
}

inline std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isspace(u) || std::ispunct(u)) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(u)));
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

// Bag-of-words sentence vector used when no encoder embeddings are supplied.
inline std::optional<Vector> fallback_sentence_embedding(const WordVectorStore& store, std::string_view text) {
  std::vector<Vector> found;
  for (const std::string& tok : tokenize_words(text)) {
    if (const Vector* v = store.find(tok)) found.push_back(*v);
  }
  if (found.empty()) return std::nullopt;
  return mean_vector(found);
}

}  // namespace semrel
