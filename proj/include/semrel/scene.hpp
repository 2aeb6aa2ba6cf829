#pragma once

#include <optional>
#include <string>
#include <vector>

#include "semrel/geometry.hpp"
#include "semrel/vecmath.hpp"

namespace semrel {

struct ObjectRecord {
  std::string object_id;
  std::string name;
  BBox bbox;
  Vector embedding;                           // joint image-text embedding of the crop
  std::optional<Vector> name_text_embedding;  // sentence-encoder embedding of the name

  friend bool operator==(const ObjectRecord&, const ObjectRecord&) = default;
};

struct SceneBundle {
  std::string image_id;
  ImageDims dims;
  std::string caption;
  std::size_t embedding_dim = 0;
  Vector image_embedding;
  std::vector<ObjectRecord> objects;
  std::optional<std::vector<Vector>> caption_sentence_embeddings;
  std::optional<std::string> image_path;

  const ObjectRecord* find_object(const std::string& id) const {
    for (const auto& o : objects) {
      if (o.object_id == id) return &o;
    }
    return nullptr;
  }

  friend bool operator==(const SceneBundle&, const SceneBundle&) = default;
};

}  // namespace semrel
