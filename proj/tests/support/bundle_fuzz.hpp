#pragma once

// Bundle documents with a chosen set of independent defects. Each defect in
// the catalog touches a different field, so a validator that reports every
// problem yields exactly one error per injected defect.

#include <functional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace semrel::testing {

inline nlohmann::json clean_bundle_json() {
  using nlohmann::json;
  json objects = json::array();
  const char* names[] = {"cat", "dog", "potted plant"};
  for (int i = 0; i < 3; ++i) {
    objects.push_back({{"object_id", "obj_" + std::to_string(i)},
                       {"name", names[i]},
                       {"bbox", {{"x", 10.0 * i}, {"y", 5.0}, {"w", 20.0}, {"h", 15.5}}},
                       {"embedding", {0.1 * (i + 1), -0.2, 0.3}},
                       {"name_text_embedding", {0.5, 0.25 * i}}});
  }
  return {{"image_id", "img_7"},
          {"width", 64},
          {"height", 48},
          {"caption", "A cat and a dog. A plant."},
          {"embedding_dim", 3},
          {"image_embedding", {0.3, 0.1, -0.7}},
          {"objects", objects},
          {"caption_sentence_embeddings", {{0.4, 0.4}, {0.1, 0.9}}},
          {"image_path", "img_7.pgm"}};
}

struct Defect {
  const char* label;
  std::function<void(nlohmann::json&)> apply;
};

inline const std::vector<Defect>& defect_catalog() {
  static const std::vector<Defect> catalog = {
      {"image_id grammar", [](auto& d) { d["image_id"] = "img 7"; }},
      {"width sign", [](auto& d) { d["width"] = -3; }},
      {"height missing", [](auto& d) { d.erase("height"); }},
      {"caption type", [](auto& d) { d["caption"] = 5; }},
      {"image embedding length", [](auto& d) { d["image_embedding"] = {1.0, 2.0}; }},
      {"object embedding length", [](auto& d) { d["objects"][0]["embedding"] = {1.0, 2.0, 3.0, 4.0}; }},
      {"duplicate object id", [](auto& d) { d["objects"][1]["object_id"] = "obj_0"; }},
      {"zero box width", [](auto& d) { d["objects"][1]["bbox"]["w"] = 0.0; }},
      {"empty name", [](auto& d) { d["objects"][2]["name"] = ""; }},
      {"box field type", [](auto& d) { d["objects"][0]["bbox"]["x"] = "left"; }},
      {"sentence embeddings type", [](auto& d) { d["caption_sentence_embeddings"] = "none"; }},
      {"empty image path", [](auto& d) { d["image_path"] = ""; }},
      {"text embedding length", [](auto& d) { d["objects"][2]["name_text_embedding"] = {1.0, 2.0, 3.0}; }},
      {"embedding element type", [](auto& d) { d["objects"][1]["embedding"][2] = "x"; }},
      {"object id missing", [](auto& d) { d["objects"][2].erase("object_id"); }},
  };
  return catalog;
}

// Applies `k` distinct defects chosen by `rng`; returns their labels.
inline std::vector<std::string> inject_defects(nlohmann::json& doc, std::size_t k, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(defect_catalog().size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < k && i < idx.size(); ++i) {
    defect_catalog()[idx[i]].apply(doc);
    labels.emplace_back(defect_catalog()[idx[i]].label);
  }
  return labels;
}

}  // namespace semrel::testing
