#pragma once

#include <cstddef>
#include <span>

namespace dumbbell::detail {

// Fixed-order pairwise summation. The result depends only on the order of
// `values`, never on how the caller produced them.
inline double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 32;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace dumbbell::detail
