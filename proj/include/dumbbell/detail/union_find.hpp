#pragma once

#include <numeric>
#include <vector>

namespace dumbbell::detail {

class UnionFind {
public:
  explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

  // Dense component labels 0..k-1 for the elements selected by `active`,
  // numbered in order of first appearance. Inactive elements get -1.
  std::vector<int> labels(const std::vector<bool>& active, int* count = nullptr) {
    std::vector<int> root_label(parent_.size(), -1);
    std::vector<int> out(parent_.size(), -1);
    int next = 0;
    for (std::size_t i = 0; i < parent_.size(); ++i) {
      if (!active[i]) continue;
      const auto r = find(i);
      if (root_label[r] < 0) root_label[r] = next++;
      out[i] = root_label[r];
    }
    if (count) *count = next;
    return out;
  }

private:
  std::vector<std::size_t> parent_;
  std::vector<int> rank_;
};

}  // namespace dumbbell::detail
