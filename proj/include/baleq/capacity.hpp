#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "baleq/imbalance.hpp"

namespace baleq {

// Capacity-stage game: per-firm opportunity cost rates, the reservation price,
// and a single-period demand model (half-normal or a single deterministic value).
struct CapacityGameConfig {
  std::array<double, 2> gamma{0.5, 0.5};
  double reservation = 1.0;
  ImbalanceModel demand = HalfNormal{};
};

void validate(const CapacityGameConfig& config);

// Price-equilibrium payoffs (larger firm, smaller firm) at capacities
// (s_big, s_small) with s_big >= s_small.
std::pair<double, double> payoff_pair(double s_big, double s_small,
                                      const CapacityGameConfig& config);

// Net profit of `firm` holding capacity `own` against `other`: the
// price-equilibrium payoff for its size role minus gamma * own.
double net_payoff(double own, double other, int firm,
                  const CapacityGameConfig& config);

struct DeterministicSegment {
  double total = 0.0;                   // S1 + S2 everywhere on the segment
  std::array<double, 2> lower_bound{};  // per-firm minimum capacity
  double s1_min = 0.0;                  // firm-1 range; S2 = total - S1
  double s1_max = 0.0;
  std::string note;
};

// Pure capacity equilibria when demand is the known constant b: the segment
// S1 + S2 = b with each firm at or above its lower-bound share. Both firms
// price at the ceiling and sell their full capacity on this segment.
DeterministicSegment deterministic_equilibrium_set(double b,
                                                   const CapacityGameConfig& config);

// Capacity at which the marginal value of one more unit, R(1 - F(S)), equals
// the opportunity cost gamma: the (1 - gamma/R) demand quantile.
double lambda1(double gamma, const CapacityGameConfig& config);

// Derivative in s_small of the smaller firm's price-equilibrium payoff at
// capacities (s_small, s_big). Half-normal demand only.
double dpi_small_dS(double s_small, double s_big, const CapacityGameConfig& config);

struct NoRootError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AmbiguousRootError : std::runtime_error {
  AmbiguousRootError(const std::string& what, std::vector<double> found)
      : std::runtime_error(what), roots(std::move(found)) {}
  std::vector<double> roots;
};

// Small-firm capacity on the line s_small + s_big = lambda1_big where the
// small firm's marginal payoff equals gamma_small. Bisection to 1e-10 after a
// 1000-point sign scan of the bracket [1e-9, lambda1_big/2]; no sign change
// raises NoRootError, more than one raises AmbiguousRootError with all roots.
double lambda2(double gamma_small, double lambda1_big,
               const CapacityGameConfig& config);

struct NashVerdict {
  bool is_equilibrium = false;
  double worst_deviation_gain = 0.0;
  double best_deviation_point = 0.0;
  int deviating_firm = -1;
};

struct CapacityCandidate {
  std::array<double, 2> capacities{};
  int large_firm = 0;
  double lambda1_value = 0.0;
  double lambda2_value = 0.0;
  bool valid = false;
  std::string invalid_reason;
};

struct CapacityOutcome {
  std::vector<CapacityCandidate> candidates;       // one per choice of large firm
  std::vector<NashVerdict> verdicts;               // parallel to candidates
  std::vector<std::array<double, 2>> net_payoffs;  // psi per firm at each candidate
};

// Definitional Nash check of a capacity pair: each firm's best unilateral
// deviation is found by a 1000-point grid plus golden-section refinement on
// both sides of the equal-capacity kink; a deviation gaining more than
// `tolerance` defeats the point.
NashVerdict verify_capacity_point(const std::array<double, 2>& caps,
                                  const CapacityGameConfig& config,
                                  double tolerance);

// Build both capacity candidates (either firm as the larger one) and
// Nash-verify every valid candidate. Half-normal demand only. A no-root
// failure inside lambda2 invalidates that candidate; ambiguity propagates.
CapacityOutcome solve_capacity_equilibria(const CapacityGameConfig& config);

}  // namespace baleq
