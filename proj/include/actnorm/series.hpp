#pragma once

#include <vector>

namespace actnorm {

/// Formal power series tools for the transform algebra. Series are coefficient
/// vectors indexed by power; all operations truncate at the input length.

/// Coefficients of A(w)*B(w) truncated to max_order (inclusive).
std::vector<double> series_multiply(const std::vector<double>& a, const std::vector<double>& b,
                                    std::size_t max_order);

/// Compositional inverse B of A where A(w) = sum_{j>=1} a[j] w^j with
/// a[1] != 0: A(B(w)) = w. a[0] must be zero. Returns b with b[0] = 0.
std::vector<double> series_revert(const std::vector<double>& a);

/// Coefficients of A(w)/(1+w) truncated at A's length.
std::vector<double> series_divide_one_plus_w(const std::vector<double>& a);

}  // namespace actnorm
