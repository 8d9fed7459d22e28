#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace baleq {

// Fixed per-period imbalances; values must have one entry per period.
struct Deterministic {
  std::vector<double> values;
};

// Independent zero-mean Gaussian imbalance each period. `variance` is the
// variance, not the standard deviation.
struct IIDNormal {
  double variance = 1.0;
};

// |Z| for standard normal Z; nonnegative single-period imbalance magnitude.
struct HalfNormal {};

// User-supplied sample paths, e.g. loaded from a file.
struct ExternalSequence {
  std::vector<std::vector<double>> paths;
};

using ImbalanceModel = std::variant<Deterministic, IIDNormal, HalfNormal, ExternalSequence>;

struct SampleBatch {
  std::vector<std::vector<double>> paths;
  std::uint64_t seed = 0;
  int count = 0;
};

// One sample path of length horizon+1, deterministic in (model, horizon, seed,
// index). sample_sequences and the Monte Carlo estimators share this, so a
// batch and a path-at-a-time consumer see identical draws.
std::vector<double> sample_path(const ImbalanceModel& model, int horizon,
                                std::uint64_t seed, int index);

// count paths of length horizon+1; bit-reproducible in (model, horizon, count, seed).
SampleBatch sample_sequences(const ImbalanceModel& model, int horizon, int count,
                             std::uint64_t seed);

double half_normal_pdf(double b);
double half_normal_cdf(double b);

// Inverse cdf on [0, 1) by bisection to 1e-10; quantile(0) == 0, u == 1 is a
// domain error.
double half_normal_quantile(double u);

// Parse sequences from a text file: one sequence per line, comma-separated
// numbers; blank lines ignored.
ExternalSequence load_sequences(const std::string& path);

}  // namespace baleq
