#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <vector>

#include "baleq/imbalance.hpp"
#include "baleq/rng.hpp"
#include "baleq/storage.hpp"
#include "baleq/throughput.hpp"

using namespace baleq;

namespace {

std::vector<StorageUnit> single_period_units(double s0, double s1) {
  std::vector<StorageUnit> units(2);
  units[0] = {s0, 1.0, 0.0};
  units[1] = {s1, 1.0, 0.0};
  return units;
}

double simpson(double lo, double hi, int intervals,
               const std::function<double(double)>& f) {
  double sum = f(lo) + f(hi);
  const double h = (hi - lo) / intervals;
  for (int k = 1; k < intervals; ++k)
    sum += f(lo + k * h) * (k % 2 == 1 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

// Quadrature oracles for the single-period half-normal expectations. The
// integrands kink where the clamps activate, so integration splits there.
double lead_oracle(double s) {
  const double inner = simpson(0.0, s, 20000, [&](double b) {
    return std::min(b, s) * half_normal_pdf(b);
  });
  return inner + s * (1.0 - half_normal_cdf(s));
}

double trail_oracle(double s, double c) {
  const double inner = simpson(c, c + s, 20000, [&](double b) {
    return (b - c) * half_normal_pdf(b);
  });
  return inner + s * (1.0 - half_normal_cdf(c + s));
}

}  // namespace

TEST_CASE("deterministic single-period moments follow the clamp formulas") {
  const auto m = closed_form_deterministic(2.0, 1.5, 1.0);
  CHECK(m.first_priority[0] == 1.5);
  CHECK(m.first_priority[1] == 1.0);
  CHECK(m.second_priority[0] == 1.0);
  CHECK(m.second_priority[1] == 0.5);
  CHECK(m.se_first[0] == 0.0);
  CHECK(m.sample_count == 0);

  const auto partial = closed_form_deterministic(0.5, 0.3, 1.0);
  CHECK(partial.first_priority[0] == 0.3);
  CHECK(partial.second_priority[0] == 0.0);
  CHECK(partial.first_priority[1] == 0.5);
  CHECK(partial.second_priority[1] == doctest::Approx(0.2));

  CHECK_THROWS_AS(closed_form_deterministic(-1.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("half-normal single-period moments match quadrature and frozen values") {
  const auto m = closed_form_half_normal(1.5, 1.0);
  CHECK(m.first_priority[0] == doctest::Approx(lead_oracle(1.5)).epsilon(1e-8));
  CHECK(m.first_priority[1] == doctest::Approx(lead_oracle(1.0)).epsilon(1e-8));
  CHECK(m.second_priority[0] ==
        doctest::Approx(trail_oracle(1.5, 1.0)).epsilon(1e-8));
  CHECK(m.second_priority[1] ==
        doctest::Approx(trail_oracle(1.0, 1.5)).epsilon(1e-8));

  CHECK(m.first_priority[0] == doctest::Approx(0.7392709733).epsilon(1e-9));
  CHECK(m.first_priority[1] == doctest::Approx(0.6312536196).epsilon(1e-9));
  CHECK(m.second_priority[0] == doctest::Approx(0.1626226668).epsilon(1e-9));
  CHECK(m.second_priority[1] == doctest::Approx(0.0546053132).epsilon(1e-9));

  const auto small = closed_form_half_normal(0.5, 0.3);
  CHECK(small.first_priority[0] == doctest::Approx(0.4022914460).epsilon(1e-9));
  CHECK(small.first_priority[1] == doctest::Approx(0.2643620766).epsilon(1e-9));
  CHECK(small.second_priority[0] == doctest::Approx(0.2931080164).epsilon(1e-9));
}

TEST_CASE("monte carlo over a fixed imbalance reproduces the closed form exactly") {
  const auto units = single_period_units(1.5, 1.0);
  const auto cf = closed_form_deterministic(2.0, 1.5, 1.0);
  const auto mc = estimate_moments_mc(units, Deterministic{{2.0}}, 0, 4, 123);
  for (int i = 0; i < 2; ++i) {
    CHECK(mc.first_priority[i] == cf.first_priority[i]);
    CHECK(mc.second_priority[i] == cf.second_priority[i]);
    CHECK(mc.se_first[i] == 0.0);
    CHECK(mc.se_second[i] == 0.0);
  }
  CHECK(mc.sample_count == 4);
}

TEST_CASE("monte carlo agrees with the half-normal closed form within three ses") {
  const auto units = single_period_units(1.5, 1.0);
  const auto cf = closed_form_half_normal(1.5, 1.0);
  const auto mc = estimate_moments_mc(units, HalfNormal{}, 0, 100000, 2024);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::fabs(mc.first_priority[i] - cf.first_priority[i]) <=
          3.0 * mc.se_first[i]);
    CHECK(std::fabs(mc.second_priority[i] - cf.second_priority[i]) <=
          3.0 * mc.se_second[i]);
    CHECK(mc.se_first[i] > 0.0);
  }
}

TEST_CASE("being dispatched first never hurts, across random configurations") {
  Rng rng(stream_seed(31, "moment-order"));
  for (int trial = 0; trial < 200; ++trial) {
    const double s0 = 0.1 + 2.0 * rng.uniform();
    const double s1 = 0.1 + 2.0 * rng.uniform();
    if (trial % 2 == 0) {
      const auto cf = closed_form_half_normal(s0, s1);
      CHECK(cf.first_priority[0] >= cf.second_priority[0]);
      CHECK(cf.first_priority[1] >= cf.second_priority[1]);
    } else {
      std::vector<StorageUnit> units(2);
      units[0] = {s0, rng.uniform(), 0.0};
      units[1] = {s1, rng.uniform(), 0.0};
      units[0].initial_charge = s0 * rng.uniform();
      units[1].initial_charge = s1 * rng.uniform();
      const int horizon = 1 + trial % 5;
      const auto mc = estimate_moments_mc(units, IIDNormal{1.0}, horizon, 200,
                                          stream_seed(31, "mc") + trial);
      for (int i = 0; i < 2; ++i)
        CHECK(mc.first_priority[i] + 3.0 * (mc.se_first[i] + mc.se_second[i]) >=
              mc.second_priority[i]);
    }
  }
}

TEST_CASE("standard errors shrink like one over the square root of the count") {
  const auto units = single_period_units(1.2, 0.8);
  double ratio_sum = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto small = estimate_moments_mc(units, IIDNormal{1.0}, 3, 500,
                                           stream_seed(77, "se") + trial);
    const auto large = estimate_moments_mc(units, IIDNormal{1.0}, 3, 2000,
                                           stream_seed(97, "se") + trial);
    ratio_sum += large.se_first[0] / small.se_first[0];
  }
  const double mean_ratio = ratio_sum / 20.0;
  CHECK(mean_ratio >= 0.4);
  CHECK(mean_ratio <= 0.6);
}

TEST_CASE("estimates are bit-reproducible and windowed by first_path") {
  const auto units = single_period_units(1.5, 1.0);
  const IIDNormal model{0.5};
  const auto a = estimate_moments_mc(units, model, 4, 300, 5);
  const auto b = estimate_moments_mc(units, model, 4, 300, 5);
  for (int i = 0; i < 2; ++i) {
    CHECK(a.first_priority[i] == b.first_priority[i]);
    CHECK(a.second_priority[i] == b.second_priority[i]);
    CHECK(a.se_first[i] == b.se_first[i]);
  }

  // Two half windows average to the full-window estimate: same draws, split
  // range.
  const auto first_half = estimate_moments_mc(units, model, 4, 150, 5, 0);
  const auto second_half = estimate_moments_mc(units, model, 4, 150, 5, 150);
  for (int i = 0; i < 2; ++i) {
    CHECK(0.5 * (first_half.first_priority[i] + second_half.first_priority[i]) ==
          doctest::Approx(a.first_priority[i]).epsilon(1e-12));
    CHECK(first_half.first_priority[i] != second_half.first_priority[i]);
  }
}
