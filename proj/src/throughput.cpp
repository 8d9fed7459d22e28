#include "baleq/throughput.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "baleq/dispatch.hpp"
#include "baleq/numeric.hpp"
#include "baleq/parallel.hpp"

namespace baleq {

namespace {

// Mean and standard error of the mean from per-sample values.
std::pair<double, double> mean_and_se(const std::vector<double>& samples) {
  const auto n = static_cast<double>(samples.size());
  const double mean = pairwise_sum(samples) / n;
  if (samples.size() < 2) return {mean, 0.0};
  std::vector<double> sq(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double d = samples[i] - mean;
    sq[i] = d * d;
  }
  const double var = pairwise_sum(sq) / (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

}  // namespace

ThroughputMoments estimate_moments_mc(const std::vector<StorageUnit>& units,
                                      const ImbalanceModel& model, int horizon,
                                      int count, std::uint64_t seed,
                                      int first_path) {
  if (units.size() != 2)
    throw std::invalid_argument("moment estimator requires exactly two firms");
  if (count < 1) throw std::invalid_argument("count must be at least 1");
  if (first_path < 0) throw std::invalid_argument("first_path must be nonnegative");
  for (const auto& u : units) validate(u);

  // totals[first][i]: firm i's horizon throughput when `first` leads the order
  std::array<std::array<std::vector<double>, 2>, 2> totals;
  for (auto& per_order : totals)
    for (auto& v : per_order) v.assign(static_cast<std::size_t>(count), 0.0);

  static const std::vector<std::size_t> orders[2] = {{0, 1}, {1, 0}};
  parallel_for(static_cast<std::size_t>(count), [&](std::size_t k) {
    const auto path =
        sample_path(model, horizon, seed, first_path + static_cast<int>(k));
    for (int first = 0; first < 2; ++first) {
      const auto t = simulate_horizon_priority(units, orders[first], path);
      totals[first][0][k] = t[0];
      totals[first][1][k] = t[1];
    }
  });

  ThroughputMoments m;
  m.sample_count = count;
  for (int firm = 0; firm < 2; ++firm) {
    const auto lead = mean_and_se(totals[firm][firm]);
    const auto trail = mean_and_se(totals[1 - firm][firm]);
    m.first_priority[firm] = lead.first;
    m.se_first[firm] = lead.second;
    m.second_priority[firm] = trail.first;
    m.se_second[firm] = trail.second;
  }
  return m;
}

ThroughputMoments closed_form_deterministic(double b, double s1, double s2) {
  if (!(b >= 0.0)) throw std::invalid_argument("imbalance must be nonnegative");
  if (!(s1 >= 0.0 && s2 >= 0.0))
    throw std::invalid_argument("capacities must be nonnegative");
  ThroughputMoments m;
  const double s[2] = {s1, s2};
  for (int i = 0; i < 2; ++i) {
    const double rival_take = std::clamp(b, 0.0, s[1 - i]);
    m.first_priority[i] = std::clamp(b, 0.0, s[i]);
    m.second_priority[i] = std::clamp(b - rival_take, 0.0, s[i]);
  }
  return m;
}

namespace {

// E min(S, B) for half-normal B.
double lead_throughput(double s) {
  return std::sqrt(2.0 / 3.14159265358979323846) * (1.0 - std::exp(-0.5 * s * s)) +
         s * (1.0 - half_normal_cdf(s));
}

// E of the amount landing in a capacity-s unit dispatched after a capacity-c
// rival: clamp(B - c, 0, s) in expectation.
double trail_throughput(double s, double c) {
  const double root = std::sqrt(2.0 / 3.14159265358979323846);
  return root * (std::exp(-0.5 * c * c) - std::exp(-0.5 * (s + c) * (s + c))) -
         c * (half_normal_cdf(s + c) - half_normal_cdf(c)) +
         s * (1.0 - half_normal_cdf(s + c));
}

}  // namespace

ThroughputMoments closed_form_half_normal(double s1, double s2) {
  if (!(s1 >= 0.0 && s2 >= 0.0))
    throw std::invalid_argument("capacities must be nonnegative");
  ThroughputMoments m;
  m.first_priority = {lead_throughput(s1), lead_throughput(s2)};
  m.second_priority = {trail_throughput(s1, s2), trail_throughput(s2, s1)};
  return m;
}

}  // namespace baleq
