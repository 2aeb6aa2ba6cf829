#pragma once

// Dense real vectors and the exact primitives every similarity metric is
// built from.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semrel/error.hpp"

namespace semrel {

// A finite, nonempty embedding vector. Construction validates both invariants
// so downstream code never has to re-check them.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::vector<double> values) : values_(std::move(values)) { validate(); }
  Vector(std::initializer_list<double> init) : values_(init) { validate(); }

  std::size_t dim() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& data() const noexcept { return values_; }

  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  void validate() const {
    if (values_.empty()) throw Error(Errc::kEmptyInput, "vector must have dim >= 1");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw Error(Errc::kInvalidArgument, "non-finite vector component at index " + std::to_string(i));
      }
    }
  }

  std::vector<double> values_;
};

inline double dot(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error(Errc::kDimensionMismatch,
                "dims " + std::to_string(u.size()) + " and " + std::to_string(v.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
  return acc;
}

inline double l2_norm(std::span<const double> u) {
  double acc = 0.0;
  for (double x : u) acc += x * x;
  return std::sqrt(acc);
}

inline double l2_norm(const Vector& u) { return l2_norm(u.values()); }

// Cosine similarity clamped to [-1, 1]. Throws ZeroVector for a zero-norm
// operand; callers that tolerate it turn that into a missing value.
inline double cosine(std::span<const double> u, std::span<const double> v) {
  const double uv = dot(u, v);
  const double nu = l2_norm(u);
  const double nv = l2_norm(v);
  if (nu == 0.0 || nv == 0.0) throw Error(Errc::kZeroVector, "cosine of a zero-norm vector");
  return std::clamp(uv / (nu * nv), -1.0, 1.0);
}

inline double cosine(const Vector& u, const Vector& v) { return cosine(u.values(), v.values()); }

inline Vector mean_vector(std::span<const Vector> vs) {
  if (vs.empty()) throw Error(Errc::kEmptyInput, "mean of an empty vector set");
  const std::size_t d = vs.front().dim();
  std::vector<double> acc(d, 0.0);
  for (const Vector& v : vs) {
    if (v.dim() != d) {
      throw Error(Errc::kDimensionMismatch,
                  "dims " + std::to_string(d) + " and " + std::to_string(v.dim()));
    }
    for (std::size_t i = 0; i < d; ++i) acc[i] += v[i];
  }
  const double n = static_cast<double>(vs.size());
  for (double& x : acc) x /= n;
  return Vector(std::move(acc));
}

inline Vector mean_vector(std::initializer_list<Vector> vs) {
  return mean_vector(std::span<const Vector>(vs.begin(), vs.size()));
}

}  // namespace semrel
