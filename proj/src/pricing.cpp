#include "baleq/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "baleq/dispatch.hpp"
#include "baleq/numeric.hpp"
#include "baleq/parallel.hpp"
#include "baleq/rng.hpp"

namespace baleq {

namespace {

void check_firm(int firm) {
  if (firm != 0 && firm != 1) throw std::invalid_argument("firm must be 0 or 1");
}

double pure_price(const PricingEquilibrium& eq) {
  return eq.degeneracy == PricingDegeneracy::all_reservation_price ? eq.reservation
                                                                   : 0.0;
}

}  // namespace

PricingEquilibrium solve_pricing(const ThroughputMoments& moments,
                                 double reservation) {
  if (!std::isfinite(reservation) || reservation <= 0.0)
    throw std::invalid_argument("reservation price must be positive and finite");
  for (int i = 0; i < 2; ++i) {
    const double slack = 3.0 * (moments.se_first[i] + moments.se_second[i]);
    if (moments.first_priority[i] + slack < moments.second_priority[i])
      throw std::invalid_argument(
          "inconsistent moments: second-priority throughput exceeds first");
    if (moments.first_priority[i] < 0.0 || moments.second_priority[i] < 0.0)
      throw std::invalid_argument("throughput moments must be nonnegative");
  }

  PricingEquilibrium eq;
  eq.reservation = reservation;
  eq.moments = moments;

  const double lead_l = moments.first_priority[0];
  const double trail_l = moments.second_priority[0];
  const double lead_s = moments.first_priority[1];
  const double trail_s = moments.second_priority[1];

  if (trail_l < 1e-9) {
    // The large firm earns nothing when underpriced, so undercutting drives
    // both prices to zero.
    eq.degeneracy = PricingDegeneracy::all_zero_price;
    return eq;
  }
  const bool gap_l = lead_l - trail_l < 1e-9 * std::max(1.0, lead_l);
  const bool gap_s = lead_s - trail_s < 1e-9 * std::max(1.0, lead_s);
  if (gap_l && gap_s) {
    // Priority does not change either firm's throughput; both sell the same
    // amount at any price, so both post the ceiling.
    eq.degeneracy = PricingDegeneracy::all_reservation_price;
    eq.payoff_large = reservation * trail_l;
    eq.payoff_small = reservation * trail_s;
    eq.support_low = eq.support_high = reservation;
    eq.atom_mass_large = 1.0;
    return eq;
  }

  eq.payoff_large = reservation * trail_l;
  eq.payoff_small = reservation * trail_l * lead_s / lead_l;
  eq.support_low = reservation * trail_l / lead_l;
  eq.support_high = reservation;
  eq.atom_mass_large = std::clamp(
      (lead_s * trail_l - trail_s * lead_l) / (lead_l * (lead_s - trail_s)), 0.0,
      1.0);
  return eq;
}

double strategy_cdf(const PricingEquilibrium& eq, int firm, double x) {
  check_firm(firm);
  if (eq.degeneracy != PricingDegeneracy::none)
    return x < pure_price(eq) ? 0.0 : 1.0;
  if (x < eq.support_low) return 0.0;
  if (x >= eq.reservation) return 1.0;

  const auto& m = eq.moments;
  if (firm == 1) {
    const double gap = m.first_priority[0] - m.second_priority[0];
    return std::clamp(m.first_priority[0] / gap - eq.payoff_large / (gap * x), 0.0,
                      1.0);
  }
  const double gap = m.first_priority[1] - m.second_priority[1];
  return std::clamp(m.first_priority[1] / gap - eq.payoff_small / (gap * x), 0.0,
                    1.0);
}

double sample_price(const PricingEquilibrium& eq, int firm, double u) {
  check_firm(firm);
  if (!(u >= 0.0 && u < 1.0))
    throw std::invalid_argument("u must lie in [0, 1)");
  if (eq.degeneracy != PricingDegeneracy::none) return pure_price(eq);

  const auto& m = eq.moments;
  if (firm == 0) {
    if (u >= 1.0 - eq.atom_mass_large) return eq.reservation;
    const double gap = m.first_priority[1] - m.second_priority[1];
    return (eq.payoff_small / gap) / (m.first_priority[1] / gap - u);
  }
  const double gap = m.first_priority[0] - m.second_priority[0];
  return (eq.payoff_large / gap) / (m.first_priority[0] / gap - u);
}

std::pair<double, double> expected_prices(const PricingEquilibrium& eq) {
  if (eq.degeneracy != PricingDegeneracy::none) {
    const double p = pure_price(eq);
    return {p, p};
  }
  const auto& m = eq.moments;
  const double lead_l = m.first_priority[0];
  const double trail_l = m.second_priority[0];
  const double lead_s = m.first_priority[1];
  const double trail_s = m.second_priority[1];
  const double log_ratio = std::log(lead_l / trail_l);

  const double rho_large =
      eq.reservation / (lead_l * (lead_s - trail_s)) *
      (trail_l * lead_s * (1.0 + log_ratio) - trail_s * lead_l);
  const double rho_small =
      eq.reservation * trail_l / (lead_l - trail_l) * log_ratio;
  return {rho_large, rho_small};
}

BestResponseReport verify_best_response(const PricingEquilibrium& eq,
                                        const std::vector<StorageUnit>& units,
                                        const ImbalanceModel& model, int horizon,
                                        const std::vector<double>& price_grid,
                                        int count, std::uint64_t seed) {
  if (units.size() != 2)
    throw std::invalid_argument("verifier requires exactly two firms");
  if (price_grid.empty()) throw std::invalid_argument("price grid must be nonempty");
  if (count < 1) throw std::invalid_argument("count must be at least 1");

  const std::size_t grid_n = price_grid.size();
  std::vector<double> payoff(2 * grid_n, 0.0);

  // Task (firm, grid point); per-task seeds keep the estimate independent of
  // scheduling.
  parallel_for(2 * grid_n, [&](std::size_t task) {
    const int firm = static_cast<int>(task / grid_n);
    const std::size_t g = task % grid_n;
    const std::uint64_t task_seed = derive_seed(stream_seed(seed, "verify"), task);
    Rng strategy_rng(stream_seed(task_seed, "strategy"));
    const std::uint64_t path_seed = stream_seed(task_seed, "imbalance");
    const std::uint64_t tie_base = stream_seed(task_seed, "tie");

    std::vector<double> samples(static_cast<std::size_t>(count));
    PriceProfile prices;
    prices.firm_prices.resize(2);
    prices.backstop_price = eq.reservation;
    for (int k = 0; k < count; ++k) {
      prices.firm_prices[firm] = price_grid[g];
      prices.firm_prices[1 - firm] =
          sample_price(eq, 1 - firm, strategy_rng.uniform());
      const auto path = sample_path(model, horizon, path_seed, k);
      const auto result = simulate_horizon(
          units, prices, path, derive_seed(tie_base, static_cast<std::uint64_t>(k)));
      samples[static_cast<std::size_t>(k)] = result.profit[firm];
    }
    payoff[task] = pairwise_sum(samples) / static_cast<double>(count);
  });

  BestResponseReport report;
  report.equilibrium_payoff = {eq.payoff_large, eq.payoff_small};
  for (int firm = 0; firm < 2; ++firm) {
    // The small firm's mixture puts no mass at the ceiling, so the ceiling
    // itself is outside its support and its payoff may legitimately drop there.
    double lo = pure_price(eq), hi = pure_price(eq);
    bool closed_top = true;
    if (eq.degeneracy == PricingDegeneracy::none) {
      lo = eq.support_low;
      hi = eq.reservation;
      closed_top = firm == 0;
    }
    double best = -1.0, best_price = 0.0;
    for (std::size_t g = 0; g < grid_n; ++g) {
      const double value = payoff[static_cast<std::size_t>(firm) * grid_n + g];
      if (value > best) {
        best = value;
        best_price = price_grid[g];
      }
      const double gap = value - report.equilibrium_payoff[firm];
      const bool on_support =
          price_grid[g] >= lo - 1e-12 &&
          (closed_top ? price_grid[g] <= hi + 1e-12 : price_grid[g] < hi - 1e-12);
      if (on_support) {
        report.max_on_support_deviation =
            std::max(report.max_on_support_deviation, std::fabs(gap));
      } else {
        report.max_off_support_gain = std::max(report.max_off_support_gain, gap);
      }
    }
    report.best_grid_payoff[firm] = best;
    report.best_grid_price[firm] = best_price;
  }
  return report;
}

}  // namespace baleq
