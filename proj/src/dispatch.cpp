#include "baleq/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "baleq/rng.hpp"

namespace baleq {

namespace {

void check_order(std::size_t n, const std::vector<std::size_t>& order,
                 bool full_permutation) {
  if (full_permutation && order.size() != n)
    throw std::invalid_argument("priority order must cover every firm");
  std::vector<bool> seen(n, false);
  for (std::size_t idx : order) {
    if (idx >= n || seen[idx])
      throw std::invalid_argument("priority order must list distinct firm indices");
    seen[idx] = true;
  }
}

void check_prices(std::size_t n, const PriceProfile& prices) {
  if (prices.firm_prices.size() != n)
    throw std::invalid_argument("price count must match unit count");
  if (!std::isfinite(prices.backstop_price) || prices.backstop_price <= 0.0)
    throw std::invalid_argument("backstop price must be positive and finite");
  for (double p : prices.firm_prices)
    if (!std::isfinite(p) || p < 0.0)
      throw std::invalid_argument("firm prices must be finite and nonnegative");
}

}  // namespace

AllocationStep allocate_in_order(const std::vector<StorageUnit>& units,
                                 const StorageState& state,
                                 const std::vector<std::size_t>& order,
                                 double imbalance) {
  validate(units, state);
  check_order(units.size(), order, false);
  if (!std::isfinite(imbalance))
    throw std::invalid_argument("imbalance must be finite");

  AllocationStep step;
  step.firm_allocations.assign(units.size(), 0.0);
  step.next_state.charge.resize(units.size());
  for (std::size_t i = 0; i < units.size(); ++i)
    step.next_state.charge[i] = units[i].leakage_retention * state.charge[i];

  const bool absorbing = imbalance > 0.0;
  const double sgn = absorbing ? 1.0 : -1.0;
  double remaining = std::fabs(imbalance);
  for (std::size_t idx : order) {
    if (remaining == 0.0) break;
    const double post_leak = step.next_state.charge[idx];
    const double room = absorbing ? units[idx].capacity - post_leak : post_leak;
    const double take = std::min(remaining, room);
    if (take > 0.0) {
      step.firm_allocations[idx] = sgn * take;
      // Filling to the bound stores the bound itself, so the charge stays in
      // [0, capacity] exactly; emptying is exact already.
      step.next_state.charge[idx] = absorbing && take == room
                                        ? units[idx].capacity
                                        : post_leak + sgn * take;
      remaining -= take;
    }
  }
  step.backstop_allocation = remaining == 0.0 ? 0.0 : sgn * remaining;
  return step;
}

AllocationStep leak_and_allocate(const std::vector<StorageUnit>& units,
                                 const StorageState& state,
                                 const PriceProfile& prices, double imbalance,
                                 const std::vector<std::size_t>& tie_draw) {
  const std::size_t n = units.size();
  check_prices(n, prices);
  check_order(n, tie_draw, true);

  std::vector<std::size_t> rank(n);
  for (std::size_t pos = 0; pos < n; ++pos) rank[tie_draw[pos]] = pos;

  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (prices.firm_prices[i] <= prices.backstop_price) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (prices.firm_prices[a] != prices.firm_prices[b])
      return prices.firm_prices[a] < prices.firm_prices[b];
    return rank[a] < rank[b];
  });
  return allocate_in_order(units, state, order, imbalance);
}

HorizonResult simulate_horizon(const std::vector<StorageUnit>& units,
                               const PriceProfile& prices,
                               const std::vector<double>& imbalance_sequence,
                               std::uint64_t tie_seed, TiePolicy tie_policy) {
  if (imbalance_sequence.empty())
    throw std::invalid_argument("imbalance sequence must be nonempty");
  for (const auto& u : units) validate(u);
  check_prices(units.size(), prices);

  Rng tie_rng(tie_seed);
  std::vector<std::size_t> horizon_draw;
  if (tie_policy == TiePolicy::per_horizon)
    horizon_draw = random_permutation(units.size(), tie_rng);

  HorizonResult result;
  result.abs_throughput.assign(units.size(), 0.0);
  result.profit.assign(units.size(), 0.0);
  result.trajectory.reserve(imbalance_sequence.size() + 1);

  StorageState state = initial_state(units);
  result.trajectory.push_back(state);
  for (double b : imbalance_sequence) {
    if (tie_policy == TiePolicy::per_period)
      horizon_draw = random_permutation(units.size(), tie_rng);
    AllocationStep step = leak_and_allocate(units, state, prices, b, horizon_draw);
    for (std::size_t i = 0; i < units.size(); ++i)
      result.abs_throughput[i] += std::fabs(step.firm_allocations[i]);
    state = std::move(step.next_state);
    result.trajectory.push_back(state);
  }
  for (std::size_t i = 0; i < units.size(); ++i)
    result.profit[i] = prices.firm_prices[i] * result.abs_throughput[i];
  return result;
}

std::vector<double> simulate_horizon_priority(
    const std::vector<StorageUnit>& units, const std::vector<std::size_t>& order,
    const std::vector<double>& imbalance_sequence) {
  if (imbalance_sequence.empty())
    throw std::invalid_argument("imbalance sequence must be nonempty");
  for (const auto& u : units) validate(u);
  check_order(units.size(), order, true);

  std::vector<double> totals(units.size(), 0.0);
  StorageState state = initial_state(units);
  for (double b : imbalance_sequence) {
    AllocationStep step = allocate_in_order(units, state, order, b);
    for (std::size_t i = 0; i < units.size(); ++i)
      totals[i] += std::fabs(step.firm_allocations[i]);
    state = std::move(step.next_state);
  }
  return totals;
}

bool lp_oracle_check(const std::vector<StorageUnit>& units,
                     const StorageState& state, const PriceProfile& prices,
                     double imbalance) {
  const std::size_t n = units.size();
  if (n > 3) throw std::invalid_argument("oracle supports up to 3 firms");
  check_prices(n, prices);
  validate(units, state);
  if (!std::isfinite(imbalance))
    throw std::invalid_argument("imbalance must be finite");

  std::vector<double> lo(n), hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double post_leak = units[i].leakage_retention * state.charge[i];
    lo[i] = -post_leak;
    hi[i] = units[i].capacity - post_leak;
  }

  const auto objective = [&](const std::vector<double>& x) {
    double cost = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      cost += prices.firm_prices[i] * std::fabs(x[i]);
      total += x[i];
    }
    return cost + prices.backstop_price * std::fabs(imbalance - total);
  };

  // An optimum of the box-constrained program has at most one firm strictly
  // between its bounds, so enumerating bound patterns plus one free firm per
  // pattern covers it.
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> x(n);
  const std::size_t patterns = [&] {
    std::size_t p = 1;
    for (std::size_t i = 0; i < n; ++i) p *= 3;
    return p;
  }();
  for (std::size_t mask = 0; mask < patterns; ++mask) {
    std::size_t m = mask;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t digit = m % 3;
      m /= 3;
      x[i] = digit == 0 ? lo[i] : (digit == 1 ? 0.0 : hi[i]);
    }
    best = std::min(best, objective(x));
    for (std::size_t free = 0; free < n; ++free) {
      double others = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (i != free) others += x[i];
      const double saved = x[free];
      x[free] = std::clamp(imbalance - others, lo[free], hi[free]);
      best = std::min(best, objective(x));
      x[free] = saved;
    }
  }

  std::vector<std::size_t> identity(n);
  for (std::size_t i = 0; i < n; ++i) identity[i] = i;
  AllocationStep greedy = leak_and_allocate(units, state, prices, imbalance, identity);
  return std::fabs(objective(greedy.firm_allocations) - best) <= 1e-9;
}

}  // namespace baleq
