#pragma once

#include <cmath>
#include <cstdint>

namespace testutil {

inline double log_poisson_pmf(double mean, std::int64_t k) {
  return -mean + static_cast<double>(k) * std::log(mean) - std::lgamma(static_cast<double>(k) + 1.0);
}

inline double poisson_pmf(double mean, std::int64_t k) { return std::exp(log_poisson_pmf(mean, k)); }

}  // namespace testutil
