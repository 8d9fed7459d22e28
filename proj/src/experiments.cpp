#include "baleq/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "baleq/parallel.hpp"
#include "baleq/pricing.hpp"
#include "baleq/rng.hpp"
#include "baleq/throughput.hpp"

namespace baleq {

namespace {

constexpr const char* kVersion = "baleq 1.0.0";
constexpr int kBatches = 10;

std::uint64_t hash_double(std::uint64_t h, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  return mix64(h ^ bits);
}

// Seed for one price-sweep grid point, derived from the point's parameter
// values rather than its grid position: sweeps that share a parameter tuple
// (and master seed) share their draws exactly.
std::uint64_t point_seed(std::uint64_t master, int horizon, double variance,
                         double s0_frac, double alpha,
                         const std::array<double, 2>& caps) {
  std::uint64_t h = stream_seed(master, "sweep-point");
  h = mix64(h ^ static_cast<std::uint64_t>(horizon));
  h = hash_double(h, variance);
  h = hash_double(h, s0_frac);
  h = hash_double(h, alpha);
  h = hash_double(h, caps[0]);
  h = hash_double(h, caps[1]);
  return h;
}

int degeneracy_code(PricingDegeneracy d) {
  switch (d) {
    case PricingDegeneracy::all_zero_price:
      return 1;
    case PricingDegeneracy::all_reservation_price:
      return 2;
    default:
      return 0;
  }
}

struct PricePoint {
  double rho_large = 0.0, rho_small = 0.0;
  double se_large = 0.0, se_small = 0.0;
  int degenerate = 0;
};

PricePoint estimate_price_point(const std::array<double, 2>& caps, double alpha,
                                double s0_frac, double variance, int horizon,
                                double reservation, int count,
                                std::uint64_t seed) {
  std::vector<StorageUnit> units(2);
  for (int i = 0; i < 2; ++i) {
    units[i].capacity = caps[i];
    units[i].leakage_retention = alpha;
    units[i].initial_charge = s0_frac * caps[i];
  }
  const ImbalanceModel model = IIDNormal{variance};
  const std::uint64_t draw_seed = stream_seed(seed, "imbalance");

  PricePoint point;
  const ThroughputMoments pooled =
      estimate_moments_mc(units, model, horizon, count, draw_seed);
  const PricingEquilibrium eq = solve_pricing(pooled, reservation);
  const auto rho = expected_prices(eq);
  point.rho_large = rho.first;
  point.rho_small = rho.second;
  point.degenerate = degeneracy_code(eq.degeneracy);

  // The expected price is a nonlinear function of the moments, so errors come
  // from batch means over a 10-way split of the same paths.
  if (count >= 2 * kBatches) {
    std::array<double, kBatches> batch_large{}, batch_small{};
    for (int b = 0; b < kBatches; ++b) {
      const int lo = count * b / kBatches;
      const int hi = count * (b + 1) / kBatches;
      const ThroughputMoments part =
          estimate_moments_mc(units, model, horizon, hi - lo, draw_seed, lo);
      const auto rb = expected_prices(solve_pricing(part, reservation));
      batch_large[b] = rb.first;
      batch_small[b] = rb.second;
    }
    const auto spread = [](const std::array<double, kBatches>& v) {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= kBatches;
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      return std::sqrt(ss / (kBatches - 1) / kBatches);
    };
    point.se_large = spread(batch_large);
    point.se_small = spread(batch_small);
  }
  return point;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string join_numbers(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_number(values[i]);
  }
  return out;
}

std::string join_numbers(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

void add_metadata(ResultTable& t, const SweepConfig& c) {
  t.metadata.emplace_back("scenario", c.scenario);
  t.metadata.emplace_back("version", kVersion);
  t.metadata.emplace_back("seed", std::to_string(c.master_seed));
  t.metadata.emplace_back("count", std::to_string(c.sample_count));
  t.metadata.emplace_back("capacities",
                          join_numbers(std::vector<double>{c.capacities[0],
                                                           c.capacities[1]}));
  t.metadata.emplace_back("reservation", format_number(c.reservation));
  if (!c.horizons.empty())
    t.metadata.emplace_back("horizons", join_numbers(c.horizons));
  if (!c.variances.empty())
    t.metadata.emplace_back("variances", join_numbers(c.variances));
  if (!c.alphas.empty())
    t.metadata.emplace_back("alphas", join_numbers(c.alphas));
  if (!c.s0_fracs.empty())
    t.metadata.emplace_back("s0_fracs", join_numbers(c.s0_fracs));
  if (!c.gamma1_grid.empty()) {
    t.metadata.emplace_back("gamma1_grid", join_numbers(c.gamma1_grid));
    t.metadata.emplace_back("gamma2", format_number(c.gamma2));
  }
}

}  // namespace

SweepConfig default_config(const std::string& scenario) {
  SweepConfig c;
  c.scenario = scenario;
  if (scenario == "fig1") {
    c.horizons = {1, 2, 3, 4, 5, 7, 10, 14, 20, 30, 50, 70, 100};
    c.variances = {0.25, 4.0};
    c.s0_fracs = {0.0, 0.25, 0.5};
    c.alphas = {1.0};
  } else if (scenario == "fig2") {
    c.horizons = {100};
    c.variances = {0.1, 1.0, 10.0};
    c.s0_fracs = {0.5};
    for (int k = 0; k <= 20; ++k) c.alphas.push_back(k / 20.0);
  } else if (scenario == "fig3" || scenario == "fig4") {
    for (int k = 1; k <= 20; ++k) c.gamma1_grid.push_back(k / 20.0);
  } else {
    throw std::invalid_argument("unknown scenario: " + scenario);
  }
  return c;
}

ResultTable run_horizon_sweep(const SweepConfig& config) {
  if (config.horizons.empty() || config.variances.empty() ||
      config.s0_fracs.empty())
    throw std::invalid_argument("horizon sweep needs T, variance and s0 grids");
  if (config.alphas.size() != 1)
    throw std::invalid_argument(
        "horizon sweep uses a single leakage retention value");
  const double alpha = config.alphas.front();

  struct Point {
    double sigma, s0f;
    int horizon;
  };
  std::vector<Point> grid;
  for (double sigma : config.variances)
    for (double s0f : config.s0_fracs)
      for (int horizon : config.horizons) grid.push_back({sigma, s0f, horizon});

  std::vector<PricePoint> results(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    const auto& p = grid[i];
    results[i] = estimate_price_point(
        config.capacities, alpha, p.s0f, p.sigma, p.horizon, config.reservation,
        config.sample_count,
        point_seed(config.master_seed, p.horizon, p.sigma, p.s0f, alpha,
                   config.capacities));
  });

  ResultTable t;
  t.columns = {"T", "sigma", "s0_frac", "rho1", "rho2", "se1", "se2", "degenerate"};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& p = grid[i];
    const auto& r = results[i];
    t.rows.push_back({static_cast<double>(p.horizon), p.sigma, p.s0f, r.rho_large,
                      r.rho_small, r.se_large, r.se_small,
                      static_cast<double>(r.degenerate)});
  }
  add_metadata(t, config);
  return t;
}

ResultTable run_leakage_sweep(const SweepConfig& config) {
  if (config.alphas.empty() || config.variances.empty())
    throw std::invalid_argument("leakage sweep needs alpha and variance grids");
  if (config.horizons.size() != 1 || config.s0_fracs.size() != 1)
    throw std::invalid_argument(
        "leakage sweep uses a single horizon and s0 fraction");
  const int horizon = config.horizons.front();
  const double s0f = config.s0_fracs.front();

  struct Point {
    double sigma, alpha;
  };
  std::vector<Point> grid;
  for (double sigma : config.variances)
    for (double alpha : config.alphas) grid.push_back({sigma, alpha});

  std::vector<PricePoint> results(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    const auto& p = grid[i];
    results[i] = estimate_price_point(
        config.capacities, p.alpha, s0f, p.sigma, horizon, config.reservation,
        config.sample_count,
        point_seed(config.master_seed, horizon, p.sigma, s0f, p.alpha,
                   config.capacities));
  });

  ResultTable t;
  t.columns = {"alpha", "sigma", "rho1", "rho2", "se1", "se2", "degenerate"};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& p = grid[i];
    const auto& r = results[i];
    t.rows.push_back({p.alpha, p.sigma, r.rho_large, r.rho_small, r.se_large,
                      r.se_small, static_cast<double>(r.degenerate)});
  }
  add_metadata(t, config);
  return t;
}

ResultTable run_capacity_sweep(const SweepConfig& config) {
  if (config.gamma1_grid.empty())
    throw std::invalid_argument("capacity sweep needs a gamma1 grid");

  std::vector<std::vector<std::vector<double>>> per_gamma(
      config.gamma1_grid.size());
  parallel_for(config.gamma1_grid.size(), [&](std::size_t i) {
    const double g1 = config.gamma1_grid[i];
    const CapacityGameConfig game{{g1, config.gamma2}, config.reservation,
                                  HalfNormal{}};
    try {
      const CapacityOutcome out = solve_capacity_equilibria(game);
      for (std::size_t c = 0; c < out.candidates.size(); ++c) {
        const auto& cand = out.candidates[c];
        const int big = cand.large_firm;
        per_gamma[i].push_back(
            {g1, static_cast<double>(big + 1), cand.capacities[big],
             cand.capacities[1 - big], out.net_payoffs[c][0],
             out.net_payoffs[c][1],
             out.verdicts[c].is_equilibrium ? 1.0 : 0.0,
             cand.valid ? 0.0 : 2.0});
      }
    } catch (const AmbiguousRootError&) {
      // Ambiguity is surfaced as flagged rows, never resolved silently.
      per_gamma[i].push_back({g1, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0});
      per_gamma[i].push_back({g1, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0});
    }
  });

  ResultTable t;
  t.columns = {"gamma1", "candidate_id", "S_large", "S_small",
               "psi1",   "psi2",         "is_nash", "flag"};
  for (auto& rows : per_gamma)
    for (auto& row : rows) t.rows.push_back(std::move(row));
  add_metadata(t, config);
  return t;
}

ResultTable run_format_comparison(const SweepConfig& config) {
  if (config.gamma1_grid.empty())
    throw std::invalid_argument("format comparison needs a gamma1 grid");
  const double requirement = std::sqrt(2.0 / 3.14159265358979323846);

  std::vector<std::vector<double>> rows(config.gamma1_grid.size());
  parallel_for(config.gamma1_grid.size(), [&](std::size_t i) {
    const double g1 = config.gamma1_grid[i];
    const double r = config.reservation;

    double energy_profit = 0.0, energy_capacity = 0.0, flag = 0.0;
    try {
      const CapacityGameConfig energy_game{{g1, config.gamma2}, r, HalfNormal{}};
      const CapacityOutcome out = solve_capacity_equilibria(energy_game);
      bool found = false;
      for (std::size_t c = 0; c < out.candidates.size(); ++c) {
        if (!out.verdicts[c].is_equilibrium) continue;
        const double total = out.net_payoffs[c][0] + out.net_payoffs[c][1];
        if (!found || total > energy_profit) {
          energy_profit = total;
          energy_capacity = out.candidates[c].capacities[0] +
                            out.candidates[c].capacities[1];
        }
        found = true;
      }
      if (!found) flag = 1.0;
    } catch (const AmbiguousRootError&) {
      flag = 1.0;
    }

    const CapacityGameConfig cap_game{
        {g1, config.gamma2}, r, Deterministic{{requirement}}};
    const DeterministicSegment seg =
        deterministic_equilibrium_set(requirement, cap_game);
    const auto segment_profit = [&](double s1) {
      return (r - g1) * s1 + (r - config.gamma2) * (seg.total - s1);
    };
    const double end_lo = segment_profit(seg.s1_min);
    const double end_hi = segment_profit(seg.s1_max);
    rows[i] = {g1,
               energy_profit,
               std::min(end_lo, end_hi),
               segment_profit(0.5 * (seg.s1_min + seg.s1_max)),
               std::max(end_lo, end_hi),
               energy_capacity,
               seg.total,
               flag};
  });

  ResultTable t;
  t.columns = {"gamma1",
               "energy_total_profit",
               "capacity_profit_min",
               "capacity_profit_mid",
               "capacity_profit_max",
               "energy_total_capacity",
               "capacity_total_capacity",
               "flag"};
  t.rows = std::move(rows);
  add_metadata(t, config);
  return t;
}

ResultTable run_scenario(const SweepConfig& config, bool write_files) {
  ResultTable t;
  if (config.scenario == "fig1") {
    t = run_horizon_sweep(config);
  } else if (config.scenario == "fig2") {
    t = run_leakage_sweep(config);
  } else if (config.scenario == "fig3") {
    t = run_capacity_sweep(config);
  } else if (config.scenario == "fig4") {
    t = run_format_comparison(config);
  } else {
    throw std::invalid_argument("unknown scenario: " + config.scenario);
  }
  if (write_files) {
    const std::filesystem::path dir(config.out_dir.empty() ? "."
                                                           : config.out_dir);
    std::filesystem::create_directories(dir);
    const std::string csv_name = config.scenario + ".csv";
    write_csv(t, (dir / csv_name).string());
    write_plot_script(config.scenario, csv_name,
                      (dir / (config.scenario + ".gp")).string());
  }
  return t;
}

std::string to_csv(const ResultTable& table) {
  std::string out;
  for (const auto& [key, value] : table.metadata)
    out += "# " + key + "=" + value + "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out += ',';
    out += table.columns[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size())
      throw std::invalid_argument("row width does not match column count");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (!std::isfinite(row[i]))
        throw std::invalid_argument("result cells must be finite");
      if (i) out += ',';
      out += format_number(row[i]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const ResultTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << to_csv(table);
}

void write_plot_script(const std::string& scenario, const std::string& csv_name,
                       const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << "set datafile separator \",\"\n";
  out << "set key top right\n";
  if (scenario == "fig1") {
    out << "set xlabel \"market horizon T (periods)\"\n"
        << "set ylabel \"expected equilibrium price\"\n"
        << "plot \"" << csv_name << "\" using 1:4 with points title \"large firm\", \\\n"
        << "     \"" << csv_name << "\" using 1:5 with points title \"small firm\"\n";
  } else if (scenario == "fig2") {
    out << "set xlabel \"leakage retention alpha\"\n"
        << "set ylabel \"expected equilibrium price\"\n"
        << "plot \"" << csv_name << "\" using 1:3 with points title \"large firm\", \\\n"
        << "     \"" << csv_name << "\" using 1:4 with points title \"small firm\"\n";
  } else if (scenario == "fig3") {
    out << "set xlabel \"gamma1 (opportunity cost of firm 1)\"\n"
        << "set ylabel \"equilibrium capacity\"\n"
        << "plot \"" << csv_name << "\" using 1:3 with points title \"large firm\", \\\n"
        << "     \"" << csv_name << "\" using 1:4 with points title \"small firm\"\n";
  } else if (scenario == "fig4") {
    out << "set xlabel \"gamma1 (opportunity cost of firm 1)\"\n"
        << "set ylabel \"total profit\"\n"
        << "plot \"" << csv_name << "\" using 1:2 with points title \"energy pricing\", \\\n"
        << "     \"" << csv_name << "\" using 1:3 with lines title \"capacity pricing (min)\", \\\n"
        << "     \"" << csv_name << "\" using 1:5 with lines title \"capacity pricing (max)\"\n";
  } else {
    throw std::invalid_argument("unknown scenario: " + scenario);
  }
}

}  // namespace baleq
