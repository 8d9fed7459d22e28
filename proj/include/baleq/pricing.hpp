#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "baleq/imbalance.hpp"
#include "baleq/storage.hpp"
#include "baleq/throughput.hpp"

namespace baleq {

enum class PricingDegeneracy { none, all_zero_price, all_reservation_price };

// Mixed-strategy price equilibrium between two capacity-constrained firms
// under a price ceiling. Firm 0 is the weakly larger firm by convention.
struct PricingEquilibrium {
  double payoff_large = 0.0;
  double payoff_small = 0.0;
  double support_low = 0.0;      // both strategies live on [support_low, reservation]
  double support_high = 0.0;
  double atom_mass_large = 0.0;  // point mass the large firm puts on the ceiling
  double reservation = 0.0;
  ThroughputMoments moments;
  PricingDegeneracy degeneracy = PricingDegeneracy::none;
};

// Equilibrium from priority-ordered throughput moments. Callers pass moments
// with the weakly larger firm at index 0. Near-equal first/second priority
// throughput for both firms collapses to the pure all-ceiling equilibrium;
// zero second-priority throughput for the large firm collapses to all-zero
// prices.
PricingEquilibrium solve_pricing(const ThroughputMoments& moments, double reservation);

// P(price <= x) for firm 0 (large) or 1 (small); 0 below the support, 1 at and
// above the ceiling. The large firm's cdf jumps by its atom at the ceiling.
double strategy_cdf(const PricingEquilibrium& eq, int firm, double x);

// Inverse-transform sample, u in [0, 1). For the large firm, u at or past
// 1 - atom returns exactly the ceiling. Degenerate equilibria return the pure
// price for any u.
double sample_price(const PricingEquilibrium& eq, int firm, double u);

// (expected price of the large firm, of the small firm); the pure price for
// degenerate equilibria.
std::pair<double, double> expected_prices(const PricingEquilibrium& eq);

struct BestResponseReport {
  std::array<double, 2> equilibrium_payoff{};
  std::array<double, 2> best_grid_payoff{};
  std::array<double, 2> best_grid_price{};
  // Max |payoff(p) - payoff*| over grid prices in the firm's own support; the
  // ceiling counts as support only for the large firm, which has an atom there.
  double max_on_support_deviation = 0.0;
  double max_off_support_gain = 0.0;  // max payoff(p) - payoff*, p off support
};

// Empirical Nash check. For each firm and each grid price, the firm's expected
// profit against the rival's mixed strategy is estimated over `count` sampled
// (rival price, imbalance path) pairs; on the support it should equal the
// equilibrium payoff, off it there should be no gain. `units` must be ordered
// large firm first, matching the equilibrium's firm convention.
BestResponseReport verify_best_response(const PricingEquilibrium& eq,
                                        const std::vector<StorageUnit>& units,
                                        const ImbalanceModel& model, int horizon,
                                        const std::vector<double>& price_grid,
                                        int count, std::uint64_t seed);

}  // namespace baleq
