#pragma once

#include <span>

// Reductions compiled with -ffast-math so that exp vectorizes. Nothing in this
// unit may test for NaN/Inf; callers check the returned scalars instead (a
// NaN or +Inf entry always surfaces as a non-finite result).
namespace gradflow::detail {

// log(sum_i exp(a_i)), max-shifted.
double log_sum_exp(std::span<const double> a);

// sum_i a_i, in unspecified order. Used as a cheap non-finiteness probe.
double plain_sum(std::span<const double> a);

}  // namespace gradflow::detail
