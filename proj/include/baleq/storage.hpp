#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace baleq {

// One storage unit: energy capacity, the fraction of charge retained across a
// period, and the charge held before the first period.
struct StorageUnit {
  double capacity = 0.0;
  double leakage_retention = 1.0;
  double initial_charge = 0.0;
};

// Per-firm state of charge at one point in time.
struct StorageState {
  std::vector<double> charge;
};

inline void validate(const StorageUnit& u) {
  if (!std::isfinite(u.capacity) || u.capacity < 0.0)
    throw std::invalid_argument("storage capacity must be finite and nonnegative");
  if (!(u.leakage_retention >= 0.0 && u.leakage_retention <= 1.0))
    throw std::invalid_argument("leakage retention must lie in [0, 1]");
  if (!(u.initial_charge >= 0.0 && u.initial_charge <= u.capacity))
    throw std::invalid_argument("initial charge must lie in [0, capacity]");
}

inline void validate(const std::vector<StorageUnit>& units, const StorageState& state) {
  if (state.charge.size() != units.size())
    throw std::invalid_argument("state entry count must match unit count");
  for (std::size_t i = 0; i < units.size(); ++i)
    if (!(state.charge[i] >= 0.0 && state.charge[i] <= units[i].capacity))
      throw std::invalid_argument("state of charge outside [0, capacity]");
}

inline StorageState initial_state(const std::vector<StorageUnit>& units) {
  StorageState s;
  s.charge.reserve(units.size());
  for (const auto& u : units) s.charge.push_back(u.initial_charge);
  return s;
}

}  // namespace baleq
