#pragma once

#include <cstdint>
#include <vector>

#include "baleq/storage.hpp"

namespace baleq {

// Offer prices fixed for a whole horizon. The backstop has infinite capacity;
// a firm priced at exactly the backstop price is dispatched before it.
struct PriceProfile {
  std::vector<double> firm_prices;
  double backstop_price = 1.0;
};

struct AllocationStep {
  std::vector<double> firm_allocations;  // signed, same sign as the imbalance
  double backstop_allocation = 0.0;
  StorageState next_state;
};

// Whether the random priority permutation for equal prices is redrawn every
// period or drawn once per horizon.
enum class TiePolicy { per_period, per_horizon };

// Dispatch one period's imbalance to firms in the given priority order, then
// the backstop. Charges leak first: headroom is S - alpha*charge and the
// releasable amount is alpha*charge. `order` may list a subset of firms;
// omitted firms get no allocation but still leak.
AllocationStep allocate_in_order(const std::vector<StorageUnit>& units,
                                 const StorageState& state,
                                 const std::vector<std::size_t>& order,
                                 double imbalance);

// Merit order derived from prices: ascending price, equal prices ordered by
// tie_draw, firms priced above the backstop never dispatched.
AllocationStep leak_and_allocate(const std::vector<StorageUnit>& units,
                                 const StorageState& state,
                                 const PriceProfile& prices, double imbalance,
                                 const std::vector<std::size_t>& tie_draw);

struct HorizonResult {
  std::vector<double> abs_throughput;    // sum over periods of |X_i|
  std::vector<double> profit;            // price_i * abs_throughput_i
  std::vector<StorageState> trajectory;  // initial state plus one state per period
};

// Run a full horizon at fixed prices over the given imbalance sequence
// (periods t = 0..T). Tie permutations come from tie_seed.
HorizonResult simulate_horizon(const std::vector<StorageUnit>& units,
                               const PriceProfile& prices,
                               const std::vector<double>& imbalance_sequence,
                               std::uint64_t tie_seed,
                               TiePolicy tie_policy = TiePolicy::per_period);

// Horizon run under a forced priority order instead of prices; returns per-firm
// absolute throughput. Used to measure first- vs second-priority throughput.
std::vector<double> simulate_horizon_priority(
    const std::vector<StorageUnit>& units, const std::vector<std::size_t>& order,
    const std::vector<double>& imbalance_sequence);

// True iff greedy merit-order dispatch attains the optimum of the underlying
// cost-minimization program, found independently by enumerating which bound
// each firm's allocation sits on. Supports up to 3 firms.
bool lp_oracle_check(const std::vector<StorageUnit>& units,
                     const StorageState& state, const PriceProfile& prices,
                     double imbalance);

}  // namespace baleq
