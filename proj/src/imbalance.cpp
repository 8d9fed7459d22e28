#include "baleq/imbalance.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "baleq/rng.hpp"

namespace baleq {

std::vector<double> sample_path(const ImbalanceModel& model, int horizon,
                                std::uint64_t seed, int index) {
  if (horizon < 0) throw std::invalid_argument("horizon must be nonnegative");
  const std::size_t len = static_cast<std::size_t>(horizon) + 1;

  if (const auto* det = std::get_if<Deterministic>(&model)) {
    if (det->values.size() != len)
      throw std::invalid_argument("deterministic value list length must equal horizon+1");
    return det->values;
  }
  if (const auto* ext = std::get_if<ExternalSequence>(&model)) {
    if (static_cast<std::size_t>(index) >= ext->paths.size())
      throw std::invalid_argument("not enough external sequences for requested count");
    const auto& p = ext->paths[static_cast<std::size_t>(index)];
    if (p.size() != len)
      throw std::invalid_argument("external sequence length must equal horizon+1");
    return p;
  }

  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(index)));
  std::vector<double> path(len);
  if (const auto* normal = std::get_if<IIDNormal>(&model)) {
    if (!(normal->variance > 0.0))
      throw std::invalid_argument("variance must be positive");
    const double sd = std::sqrt(normal->variance);
    for (double& b : path) b = sd * rng.normal();
  } else {
    for (double& b : path) b = std::fabs(rng.normal());
  }
  return path;
}

SampleBatch sample_sequences(const ImbalanceModel& model, int horizon, int count,
                             std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("count must be at least 1");
  SampleBatch batch;
  batch.seed = seed;
  batch.count = count;
  batch.paths.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    batch.paths.push_back(sample_path(model, horizon, seed, i));
  return batch;
}

double half_normal_pdf(double b) {
  if (b < 0.0) throw std::invalid_argument("half-normal support is b >= 0");
  return std::sqrt(2.0 / 3.14159265358979323846) * std::exp(-0.5 * b * b);
}

double half_normal_cdf(double b) {
  if (b < 0.0) throw std::invalid_argument("half-normal support is b >= 0");
  return std::erf(b / std::sqrt(2.0));
}

double half_normal_quantile(double u) {
  if (!(u >= 0.0 && u < 1.0))
    throw std::domain_error("quantile defined on [0, 1) only");
  if (u == 0.0) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (half_normal_cdf(hi) < u) hi *= 2.0;  // u < 1 guarantees termination
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (half_normal_cdf(mid) < u ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

ExternalSequence load_sequences(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open sequence file: " + path);
  ExternalSequence out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> seq;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        while (used < cell.size() &&
               (cell[used] == ' ' || cell[used] == '\t' || cell[used] == '\r'))
          ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        seq.push_back(v);
      } catch (const std::exception&) {
        throw std::invalid_argument("bad number in " + path + " line " +
                                    std::to_string(lineno));
      }
    }
    if (seq.empty())
      throw std::invalid_argument("empty sequence in " + path + " line " +
                                  std::to_string(lineno));
    out.paths.push_back(std::move(seq));
  }
  return out;
}

}  // namespace baleq
