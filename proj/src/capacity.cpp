#include "baleq/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "baleq/throughput.hpp"

namespace baleq {

namespace {

constexpr double kRootTol = 1e-10;
constexpr int kScanPoints = 1000;

bool is_half_normal(const CapacityGameConfig& config) {
  return std::holds_alternative<HalfNormal>(config.demand);
}

double deterministic_value(const CapacityGameConfig& config) {
  const auto& det = std::get<Deterministic>(config.demand);
  if (det.values.size() != 1)
    throw std::invalid_argument("capacity game needs a single-period demand value");
  if (!(det.values[0] >= 0.0))
    throw std::invalid_argument("deterministic demand must be nonnegative");
  return det.values[0];
}

ThroughputMoments single_period_moments(double s_big, double s_small,
                                        const CapacityGameConfig& config) {
  if (is_half_normal(config)) return closed_form_half_normal(s_big, s_small);
  return closed_form_deterministic(deterministic_value(config), s_big, s_small);
}

double demand_mean(const CapacityGameConfig& config) {
  if (is_half_normal(config)) return std::sqrt(2.0 / 3.14159265358979323846);
  return deterministic_value(config);
}

// Maximize a scalar function on [a, b] by golden-section; exact for unimodal
// f, a refinement step otherwise (the grid scan around it covers the rest).
std::pair<double, double> golden_max(const std::function<double(double)>& f,
                                     double a, double b) {
  const double inv_phi = 0.6180339887498949;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 100 && b - a > kRootTol; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    }
  }
  const double mid = 0.5 * (a + b);
  return {mid, f(mid)};
}

double bisect_root(const std::function<double(double)>& g, double lo, double hi) {
  double g_lo = g(lo);
  for (int it = 0; it < 200 && hi - lo > kRootTol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double g_mid = g(mid);
    if ((g_lo <= 0.0) == (g_mid <= 0.0)) {
      lo = mid;
      g_lo = g_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

void validate(const CapacityGameConfig& config) {
  if (!std::isfinite(config.reservation) || config.reservation <= 0.0)
    throw std::invalid_argument("reservation price must be positive and finite");
  for (double g : config.gamma)
    if (!(g > 0.0 && g <= config.reservation))
      throw std::invalid_argument(
          "gamma must lie in (0, reservation] for the capacity game");
  if (!is_half_normal(config) &&
      !std::holds_alternative<Deterministic>(config.demand))
    throw std::invalid_argument(
        "capacity game demand must be half-normal or deterministic");
  if (std::holds_alternative<Deterministic>(config.demand))
    deterministic_value(config);
}

std::pair<double, double> payoff_pair(double s_big, double s_small,
                                      const CapacityGameConfig& config) {
  validate(config);
  if (!(s_big >= s_small && s_small >= 0.0))
    throw std::invalid_argument("payoff_pair requires s_big >= s_small >= 0");
  const ThroughputMoments m = single_period_moments(s_big, s_small, config);
  const double big_payoff = config.reservation * m.second_priority[0];
  const double small_payoff =
      m.first_priority[0] > 0.0
          ? big_payoff * m.first_priority[1] / m.first_priority[0]
          : 0.0;
  return {big_payoff, small_payoff};
}

double net_payoff(double own, double other, int firm,
                  const CapacityGameConfig& config) {
  if (firm != 0 && firm != 1) throw std::invalid_argument("firm must be 0 or 1");
  if (!(own >= 0.0 && other >= 0.0))
    throw std::invalid_argument("capacities must be nonnegative");
  const auto payoffs = own >= other ? payoff_pair(own, other, config)
                                    : payoff_pair(other, own, config);
  const double gross = own >= other ? payoffs.first : payoffs.second;
  return gross - config.gamma[firm] * own;
}

DeterministicSegment deterministic_equilibrium_set(double b,
                                                   const CapacityGameConfig& config) {
  validate(config);
  if (!(b > 0.0)) throw std::invalid_argument("demand must be positive");
  DeterministicSegment seg;
  seg.total = b;
  const double r = config.reservation;
  for (int i = 0; i < 2; ++i)
    seg.lower_bound[i] = b * (r - config.gamma[i]) / (2.0 * r - config.gamma[i]);
  seg.s1_min = seg.lower_bound[0];
  seg.s1_max = b - seg.lower_bound[1];
  seg.note =
      "set taken as {S1+S2=total, Si >= lower_bound[i]}; adding the literal "
      "pairwise cap Si <= S_other would collapse the segment to a single point "
      "and is reported here instead of enforced";
  return seg;
}

double lambda1(double gamma, const CapacityGameConfig& config) {
  if (!is_half_normal(config))
    throw std::invalid_argument("capacity thresholds require half-normal demand");
  if (gamma <= 0.0)
    throw std::domain_error("gamma must be positive: the demand quantile at 1 "
                            "is unbounded");
  if (gamma > config.reservation)
    throw std::domain_error("gamma must not exceed the reservation price");
  if (gamma == config.reservation) return 0.0;
  return half_normal_quantile(1.0 - gamma / config.reservation);
}

double dpi_small_dS(double s_small, double s_big,
                    const CapacityGameConfig& config) {
  if (!is_half_normal(config))
    throw std::invalid_argument("marginal payoff requires half-normal demand");
  if (!(s_small >= 0.0 && s_big >= 0.0))
    throw std::invalid_argument("capacities must be nonnegative");
  const ThroughputMoments m = closed_form_half_normal(s_big, s_small);
  if (m.first_priority[0] <= 0.0)
    throw std::domain_error("large firm capacity must be positive");
  const double r = config.reservation;
  const double big_payoff = r * m.second_priority[0];
  const double cross = half_normal_cdf(s_small) - half_normal_cdf(s_small + s_big);
  return ((1.0 - half_normal_cdf(s_small)) * big_payoff +
          r * cross * m.first_priority[1]) /
         m.first_priority[0];
}

double lambda2(double gamma_small, double lambda1_big,
               const CapacityGameConfig& config) {
  if (!(lambda1_big > 0.0))
    throw std::invalid_argument("lambda1_big must be positive");
  const double lo = 1e-9, hi = lambda1_big / 2.0;
  const auto g = [&](double s) {
    return dpi_small_dS(s, lambda1_big - s, config) - gamma_small;
  };

  // The marginal payoff is not proven single-crossing on the bracket, so scan
  // before bisecting and refuse to pick silently among several roots.
  std::vector<std::pair<double, double>> brackets;
  double prev_x = lo, prev_g = g(lo);
  for (int k = 1; k < kScanPoints; ++k) {
    const double x = lo + (hi - lo) * static_cast<double>(k) /
                              static_cast<double>(kScanPoints - 1);
    const double gx = g(x);
    if ((prev_g <= 0.0) != (gx <= 0.0)) brackets.emplace_back(prev_x, x);
    prev_x = x;
    prev_g = gx;
  }
  if (brackets.empty())
    throw NoRootError("no crossing of the marginal payoff with gamma in bracket");
  if (brackets.size() > 1) {
    std::vector<double> roots;
    roots.reserve(brackets.size());
    for (const auto& [a, b] : brackets) roots.push_back(bisect_root(g, a, b));
    throw AmbiguousRootError("several candidate small-firm capacities", roots);
  }
  return bisect_root(g, brackets.front().first, brackets.front().second);
}

NashVerdict verify_capacity_point(const std::array<double, 2>& caps,
                                  const CapacityGameConfig& config,
                                  double tolerance) {
  validate(config);
  NashVerdict verdict;
  verdict.is_equilibrium = true;
  for (int firm = 0; firm < 2; ++firm) {
    const double fixed = caps[1 - firm];
    const double here = net_payoff(caps[firm], fixed, firm, config);
    const auto psi = [&](double s) { return net_payoff(s, fixed, firm, config); };

    // Net profit is negative beyond gross_max/gamma, so the search interval
    // [0, s_max] contains every potentially profitable deviation.
    const double s_max =
        config.reservation * demand_mean(config) / config.gamma[firm] + 1e-9;

    double best = psi(0.0), best_at = 0.0;
    const auto consider = [&](double s, double value) {
      if (value > best) {
        best = value;
        best_at = s;
      }
    };
    for (int k = 1; k <= kScanPoints; ++k) {
      const double s =
          s_max * static_cast<double>(k) / static_cast<double>(kScanPoints);
      consider(s, psi(s));
    }
    const double kink = std::min(fixed, s_max);
    if (kink > 0.0) {
      const auto [x, v] = golden_max(psi, 0.0, kink);
      consider(x, v);
    }
    if (s_max > kink) {
      const auto [x, v] = golden_max(psi, kink, s_max);
      consider(x, v);
    }

    const double gain = best - here;
    if (gain > verdict.worst_deviation_gain) {
      verdict.worst_deviation_gain = gain;
      verdict.best_deviation_point = best_at;
      verdict.deviating_firm = firm;
    }
    if (gain > tolerance) verdict.is_equilibrium = false;
  }
  return verdict;
}

CapacityOutcome solve_capacity_equilibria(const CapacityGameConfig& config) {
  validate(config);
  if (!is_half_normal(config))
    throw std::invalid_argument(
        "equilibrium candidates require half-normal demand");

  CapacityOutcome outcome;
  for (int big = 0; big < 2; ++big) {
    CapacityCandidate cand;
    cand.large_firm = big;
    cand.lambda1_value = lambda1(config.gamma[big], config);
    if (cand.lambda1_value <= 0.0) {
      // gamma equals the ceiling: committing any capacity is unprofitable.
      cand.capacities = {0.0, 0.0};
      cand.valid = true;
    } else {
      try {
        cand.lambda2_value =
            lambda2(config.gamma[1 - big], cand.lambda1_value, config);
        cand.capacities[big] = cand.lambda1_value - cand.lambda2_value;
        cand.capacities[1 - big] = cand.lambda2_value;
        if (cand.capacities[big] + 1e-12 < cand.capacities[1 - big] ||
            cand.lambda2_value < 0.0) {
          cand.valid = false;
          cand.invalid_reason = "large-firm entry falls below the small-firm entry";
        } else {
          cand.valid = true;
        }
      } catch (const NoRootError& err) {
        cand.valid = false;
        cand.invalid_reason = err.what();
        cand.capacities = {0.0, 0.0};
      }
    }

    NashVerdict verdict;
    if (cand.valid) {
      const double tol =
          std::max(1e-4 * config.reservation * cand.lambda1_value, 1e-12);
      verdict = verify_capacity_point(cand.capacities, config, tol);
    }
    outcome.net_payoffs.push_back(
        {net_payoff(cand.capacities[0], cand.capacities[1], 0, config),
         net_payoff(cand.capacities[1], cand.capacities[0], 1, config)});
    outcome.candidates.push_back(std::move(cand));
    outcome.verdicts.push_back(verdict);
  }
  return outcome;
}

}  // namespace baleq
