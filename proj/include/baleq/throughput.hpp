#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "baleq/imbalance.hpp"
#include "baleq/storage.hpp"

namespace baleq {

// Expected total absolute throughput per firm when that firm is dispatched
// first (first_priority) or after its rival (second_priority), with Monte
// Carlo standard errors; closed forms report zero error and zero sample count.
// first_priority[i] >= second_priority[i] always.
struct ThroughputMoments {
  std::array<double, 2> first_priority{};
  std::array<double, 2> second_priority{};
  std::array<double, 2> se_first{};
  std::array<double, 2> se_second{};
  long long sample_count = 0;
};

// Monte Carlo estimate over `count` sample paths starting at index
// `first_path` of the seed's path sequence. Each path is simulated twice, once
// per priority order, so all four estimates share the same draws.
ThroughputMoments estimate_moments_mc(const std::vector<StorageUnit>& units,
                                      const ImbalanceModel& model, int horizon,
                                      int count, std::uint64_t seed,
                                      int first_path = 0);

// Single period, empty initial charge, known imbalance b >= 0.
ThroughputMoments closed_form_deterministic(double b, double s1, double s2);

// Single period, empty initial charge, half-normal imbalance; antiderivative
// evaluation, no sampling.
ThroughputMoments closed_form_half_normal(double s1, double s2);

}  // namespace baleq
