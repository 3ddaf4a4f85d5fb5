#pragma once

#include <cstddef>
#include <vector>

#include "types.hpp"

namespace qbh {

// Uniform tensor grid with an odd number of points per axis: k_j = 2 pi j / n,
// j = -(n-1)/2 .. (n-1)/2. Contains k = 0 and is symmetric under k -> -k.
class BZGrid {
 public:
  BZGrid(int D, int n) : n_(static_cast<std::size_t>(D), n) { check(); }
  explicit BZGrid(std::vector<int> n) : n_(std::move(n)) { check(); }

  static BZGrid default_for(int D) { return D == 1 ? BZGrid(1, 1025) : BZGrid(D, 129); }

  int D() const { return static_cast<int>(n_.size()); }
  int n(int axis) const { return n_[axis]; }
  double spacing(int axis) const { return 2.0 * pi / n_[axis]; }

  std::size_t size() const {
    std::size_t s = 1;
    for (int v : n_) s *= static_cast<std::size_t>(v);
    return s;
  }

  std::vector<int> indices(std::size_t idx) const {
    std::vector<int> j(n_.size());
    for (std::size_t a = n_.size(); a-- > 0;) {
      j[a] = static_cast<int>(idx % n_[a]) - (n_[a] - 1) / 2;
      idx /= n_[a];
    }
    return j;
  }

  std::size_t flat(const std::vector<int>& j) const {
    std::size_t idx = 0;
    for (std::size_t a = 0; a < n_.size(); ++a) idx = idx * n_[a] + static_cast<std::size_t>(j[a] + (n_[a] - 1) / 2);
    return idx;
  }

  KVec point(std::size_t idx) const {
    auto j = indices(idx);
    KVec k(j.size());
    for (std::size_t a = 0; a < j.size(); ++a) k[a] = 2.0 * pi * j[a] / n_[a];
    return k;
  }

  std::size_t neg_index(std::size_t idx) const {
    auto j = indices(idx);
    for (int& v : j) v = -v;
    return flat(j);
  }

 private:
  void check() const {
    if (n_.empty()) throw ConfigError("grid needs at least one axis");
    for (int v : n_) {
      if (v < 1) throw ConfigError("empty grid");
      if (v % 2 == 0) throw ConfigError("grid size per axis must be odd (so that k = 0 is included)");
    }
  }

  std::vector<int> n_;
};

}  // namespace qbh
