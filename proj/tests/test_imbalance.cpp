#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "baleq/imbalance.hpp"
#include "baleq/numeric.hpp"
#include "baleq/rng.hpp"

using namespace baleq;

namespace {

// Composite Simpson quadrature, independent of the library's integrators.
double simpson(double lo, double hi, int intervals,
               const std::function<double(double)>& f) {
  double sum = f(lo) + f(hi);
  const double h = (hi - lo) / intervals;
  for (int k = 1; k < intervals; ++k)
    sum += f(lo + k * h) * (k % 2 == 1 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

}  // namespace

TEST_CASE("half-normal quantiles match reference values") {
  CHECK(half_normal_quantile(0.5) == doctest::Approx(0.6744897502).epsilon(1e-7));
  CHECK(half_normal_quantile(0.75) == doctest::Approx(1.1503493804).epsilon(1e-7));
  CHECK(half_normal_quantile(0.0) == 0.0);
  CHECK_THROWS_AS(half_normal_quantile(1.0), std::domain_error);
  CHECK_THROWS_AS(half_normal_quantile(-0.1), std::domain_error);
  CHECK_THROWS_AS(half_normal_quantile(1.5), std::domain_error);
}

TEST_CASE("the quantile inverts the cdf across the unit interval") {
  for (int k = 0; k < 100; ++k) {
    const double u = (k + 0.5) / 100.0;
    CHECK(half_normal_cdf(half_normal_quantile(u)) ==
          doctest::Approx(u).epsilon(1e-8));
  }
  CHECK_THROWS_AS(half_normal_cdf(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(half_normal_pdf(-0.1), std::invalid_argument);
}

TEST_CASE("the half-normal density normalizes and has the known mean") {
  const double mass = simpson(0.0, 12.0, 4000, half_normal_pdf);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
  const double mean =
      simpson(0.0, 12.0, 4000, [](double b) { return b * half_normal_pdf(b); });
  CHECK(mean == doctest::Approx(std::sqrt(2.0 / 3.14159265358979323846))
                    .epsilon(1e-8));
}

TEST_CASE("the half-normal density is positive and decreasing") {
  double prev = half_normal_pdf(0.0);
  CHECK(prev > 0.0);
  for (int k = 1; k <= 200; ++k) {
    const double cur = half_normal_pdf(0.04 * k);
    CHECK(cur > 0.0);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("the gaussian model treats its parameter as the variance") {
  const int count = 100000;
  const double variance = 3.0;
  const auto batch = sample_sequences(IIDNormal{variance}, 0, count, 42);
  std::vector<double> values(count);
  for (int i = 0; i < count; ++i) values[i] = batch.paths[i][0];
  const double mean = pairwise_sum(values) / count;
  std::vector<double> squares(count);
  for (int i = 0; i < count; ++i) squares[i] = values[i] * values[i];
  const double second = pairwise_sum(squares) / count;
  const double sample_var = second - mean * mean;

  const double se_mean = std::sqrt(variance / count);
  const double se_var = variance * std::sqrt(2.0 / (count - 1));
  CHECK(std::fabs(mean) <= 3.0 * se_mean);
  CHECK(std::fabs(sample_var - variance) <= 3.0 * se_var);
}

TEST_CASE("half-normal samples are the magnitudes of unit normals") {
  const int count = 50000;
  const auto batch = sample_sequences(HalfNormal{}, 0, count, 5);
  double sum = 0.0;
  for (const auto& path : batch.paths) {
    CHECK(path[0] >= 0.0);
    sum += path[0];
  }
  const double mean = sum / count;
  const double target = std::sqrt(2.0 / 3.14159265358979323846);
  const double sd = std::sqrt(1.0 - target * target);
  CHECK(std::fabs(mean - target) <= 3.0 * sd / std::sqrt(double(count)));
}

TEST_CASE("sampling is bit-reproducible and addressable by path index") {
  const IIDNormal model{0.7};
  const auto a = sample_sequences(model, 5, 40, 99);
  const auto b = sample_sequences(model, 5, 40, 99);
  REQUIRE(a.paths.size() == 40);
  for (int i = 0; i < 40; ++i) {
    REQUIRE(a.paths[i].size() == 6);
    for (int t = 0; t <= 5; ++t) CHECK(a.paths[i][t] == b.paths[i][t]);
    const auto direct = sample_path(model, 5, 99, i);
    for (int t = 0; t <= 5; ++t) CHECK(a.paths[i][t] == direct[t]);
  }
  const auto other = sample_sequences(model, 5, 40, 100);
  CHECK(a.paths[0][0] != other.paths[0][0]);
}

TEST_CASE("fixed and external sequences validate their lengths") {
  const Deterministic det{{1.0, 2.0}};
  CHECK(sample_path(det, 1, 0, 17) == std::vector<double>{1.0, 2.0});
  CHECK_THROWS_AS(sample_path(det, 3, 0, 0), std::invalid_argument);

  const ExternalSequence ext{{{1.0, 2.0}, {3.0, 4.0}}};
  CHECK(sample_path(ext, 1, 0, 1) == std::vector<double>{3.0, 4.0});
  CHECK_THROWS_AS(sample_path(ext, 1, 0, 2), std::invalid_argument);
  CHECK_THROWS_AS(sample_path(ext, 2, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(sample_sequences(det, 1, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(sample_path(det, -1, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(sample_path(IIDNormal{0.0}, 1, 0, 0), std::invalid_argument);
}

TEST_CASE("external sequences load from comma-separated lines") {
  const std::string path = "test_sequences.tmp";
  {
    std::ofstream out(path);
    out << "1.5, -2.25, 0\n";
    out << "\n";
    out << "  \t\n";
    out << "0.125,3\n";
  }
  const auto loaded = load_sequences(path);
  REQUIRE(loaded.paths.size() == 2);
  CHECK(loaded.paths[0] == std::vector<double>{1.5, -2.25, 0.0});
  CHECK(loaded.paths[1] == std::vector<double>{0.125, 3.0});

  {
    std::ofstream out(path);
    out << "1.0,oops,2.0\n";
  }
  CHECK_THROWS_AS(load_sequences(path), std::invalid_argument);
  CHECK_THROWS_AS(load_sequences("no_such_file.tmp"), std::invalid_argument);
  std::remove(path.c_str());
}
