#ifndef MVST_SUMMATION_HPP
#define MVST_SUMMATION_HPP

#include <cstddef>
#include <span>

namespace mvst {

/// Fixed-shape pairwise reduction of term(i) over [begin, end).
///
/// The recursion always splits at the midpoint, so the result depends only on
/// the sequence of terms and never on scheduling. A sequence concatenated with
/// itself sums to exactly twice the original.
template <typename T, typename Term>
T pairwise_sum(std::size_t begin, std::size_t end, const Term& term) {
  constexpr std::size_t kBlock = 8;
  const std::size_t count = end - begin;
  if (count <= kBlock) {
    T acc = term(begin);
    for (std::size_t i = begin + 1; i < end; ++i) acc = acc + term(i);
    return acc;
  }
  const std::size_t mid = begin + count / 2;
  T left = pairwise_sum<T>(begin, mid, term);
  T right = pairwise_sum<T>(mid, end, term);
  return left + right;
}

template <typename Scalar>
Scalar pairwise_sum(std::span<const Scalar> values) {
  if (values.empty()) return Scalar(0);
  return pairwise_sum<Scalar>(0, values.size(),
                              [&](std::size_t i) { return values[i]; });
}

}  // namespace mvst

#endif  // MVST_SUMMATION_HPP
