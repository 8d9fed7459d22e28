#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "baleq/capacity.hpp"

namespace baleq {

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::pair<std::string, std::string>> metadata;
};

// One sweep scenario. Unused grids may stay empty; defaults come from
// default_config. Seeds for each grid point are derived from the master seed
// and the point's parameter values, so two sweeps sharing a parameter tuple
// produce identical estimates.
struct SweepConfig {
  std::string scenario;           // fig1 | fig2 | fig3 | fig4
  std::vector<int> horizons;      // T grid
  std::vector<double> variances;  // imbalance variance grid
  std::vector<double> alphas;     // leakage-retention grid
  std::vector<double> gamma1_grid;
  std::array<double, 2> capacities{1.5, 1.0};
  std::vector<double> s0_fracs{0.5};  // initial charge as a fraction of capacity
  double gamma2 = 0.5;
  double reservation = 1.0;
  int sample_count = 10000;
  std::uint64_t master_seed = 1;
  std::string out_dir;
};

SweepConfig default_config(const std::string& scenario);

// Expected-price sweeps. Standard errors come from 10 batch means; degenerate
// price equilibria are recorded with the pure price and a nonzero flag in the
// `degenerate` column (1 = all-zero prices, 2 = all at the ceiling).
ResultTable run_horizon_sweep(const SweepConfig& config);
ResultTable run_leakage_sweep(const SweepConfig& config);

// Capacity-equilibrium sweep over gamma1: one row per candidate with its Nash
// verdict. flag: 0 = normal, 1 = root ambiguity, 2 = no root (candidate invalid).
ResultTable run_capacity_sweep(const SweepConfig& config);

// Energy-pricing vs capacity-pricing totals per gamma1. The capacity side
// commits total capacity equal to the demand mean; its profit is reported at
// the segment's endpoints and midpoint. flag: 1 = no verified energy-side
// equilibrium at that point.
ResultTable run_format_comparison(const SweepConfig& config);

// Dispatch on config.scenario; when write_files is set, writes
// <scenario>.csv and a companion gnuplot script into config.out_dir.
ResultTable run_scenario(const SweepConfig& config, bool write_files);

std::string to_csv(const ResultTable& table);
void write_csv(const ResultTable& table, const std::string& path);
void write_plot_script(const std::string& scenario, const std::string& csv_name,
                       const std::string& path);

}  // namespace baleq
