#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "baleq/capacity.hpp"
#include "baleq/dispatch.hpp"
#include "baleq/experiments.hpp"
#include "baleq/imbalance.hpp"
#include "baleq/pricing.hpp"
#include "baleq/rng.hpp"
#include "baleq/throughput.hpp"

namespace {

using nlohmann::json;
using namespace baleq;

// Numeric flags accept plain decimals or fractions like 1/4.
double parse_number(const std::string& text) {
  const auto parse_plain = [&](const std::string& part) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(part, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad number: " + text);
    }
    if (used != part.size()) throw std::invalid_argument("bad number: " + text);
    return v;
  };
  const auto slash = text.find('/');
  if (slash == std::string::npos) return parse_plain(text);
  const double num = parse_plain(text.substr(0, slash));
  const double den = parse_plain(text.substr(slash + 1));
  if (den == 0.0) throw std::invalid_argument("zero denominator: " + text);
  return num / den;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  for (const auto& part : split(text, ',')) values.push_back(parse_number(part));
  return values;
}

std::array<double, 2> parse_pair(const std::string& text, const char* what) {
  const auto values = parse_list(text);
  if (values.size() != 2)
    throw std::invalid_argument(std::string(what) + " needs two comma-separated values");
  return {values[0], values[1]};
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> values;
  for (double v : parse_list(text)) {
    const int k = static_cast<int>(std::lround(v));
    if (std::fabs(v - k) > 1e-9)
      throw std::invalid_argument("expected integers: " + text);
    values.push_back(k);
  }
  return values;
}

// start:stop:step, inclusive of stop up to rounding.
std::vector<double> parse_grid(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() != 3)
    throw std::invalid_argument("grid must be start:stop:step, got " + text);
  const double start = parse_number(parts[0]);
  const double stop = parse_number(parts[1]);
  const double step = parse_number(parts[2]);
  if (!(step > 0.0) || stop < start)
    throw std::invalid_argument("grid needs stop >= start and step > 0");
  std::vector<double> values;
  for (int k = 0;; ++k) {
    const double v = start + k * step;
    if (v > stop + 1e-9 * step) break;
    values.push_back(std::min(v, stop));
  }
  return values;
}

struct SimOptions {
  std::string caps = "1.5,1";
  std::string alphas = "1,1";
  std::string s0_frac = "1/2";
  std::string sigma;
  int horizon = 100;
  int samples = 10000;
  std::uint64_t seed = 1;
  std::string demand = "halfnormal";
  std::string reservation = "1";
};

void add_sim_flags(CLI::App* sub, SimOptions& o) {
  sub->add_option("--caps", o.caps,
                  "firm capacities (energy units), comma pair, default 1.5,1");
  sub->add_option("--alphas", o.alphas,
                  "per-firm leakage retention per period in [0,1], comma pair");
  sub->add_option("--s0-frac", o.s0_frac,
                  "initial charge as a fraction of capacity (Monte Carlo only; "
                  "single-period closed forms start empty)");
  sub->add_option("--sigma", o.sigma,
                  "imbalance variance (energy units squared); when set, moments "
                  "come from Monte Carlo over Gaussian imbalances");
  sub->add_option("--horizon", o.horizon,
                  "number of trading periods minus one (periods run 0..T)");
  sub->add_option("--samples", o.samples, "Monte Carlo sample paths");
  sub->add_option("--seed", o.seed, "master random seed");
  sub->add_option("--demand", o.demand,
                  "single-period imbalance law: halfnormal or det:<value>");
  sub->add_option("--reservation", o.reservation,
                  "price ceiling / backstop price per unit of energy");
}

struct MomentSetup {
  std::vector<StorageUnit> units;  // weakly larger firm first
  ThroughputMoments moments;
  ImbalanceModel verify_model = HalfNormal{};
  int verify_horizon = 0;
  std::string method;
  int count_used = 0;
};

MomentSetup build_moments(const SimOptions& o) {
  const auto caps = parse_pair(o.caps, "--caps");
  const auto alphas = parse_pair(o.alphas, "--alphas");
  const double s0f = parse_number(o.s0_frac);
  if (!(s0f >= 0.0 && s0f <= 1.0))
    throw std::invalid_argument("--s0-frac must lie in [0, 1]");

  MomentSetup setup;
  const int big = caps[0] >= caps[1] ? 0 : 1;
  for (int k : {big, 1 - big}) {
    StorageUnit u;
    u.capacity = caps[k];
    u.leakage_retention = alphas[k];
    u.initial_charge = s0f * caps[k];
    validate(u);
    setup.units.push_back(u);
  }

  if (!o.sigma.empty()) {
    if (o.samples < 1) throw std::invalid_argument("--samples must be positive");
    setup.verify_model = IIDNormal{parse_number(o.sigma)};
    setup.verify_horizon = o.horizon;
    setup.method = "mc";
    setup.count_used = o.samples;
    setup.moments = estimate_moments_mc(setup.units, setup.verify_model,
                                        o.horizon, o.samples,
                                        stream_seed(o.seed, "moments"));
    return setup;
  }

  // Single-period closed forms start from empty charge.
  for (auto& u : setup.units) u.initial_charge = 0.0;
  setup.verify_horizon = 0;
  setup.method = "closed-form";
  if (o.demand == "halfnormal") {
    setup.verify_model = HalfNormal{};
    setup.moments = closed_form_half_normal(setup.units[0].capacity,
                                            setup.units[1].capacity);
  } else if (o.demand.rfind("det:", 0) == 0) {
    const double b = parse_number(o.demand.substr(4));
    setup.verify_model = Deterministic{{b}};
    setup.moments = closed_form_deterministic(b, setup.units[0].capacity,
                                              setup.units[1].capacity);
  } else {
    throw std::invalid_argument("--demand must be halfnormal or det:<value>");
  }
  return setup;
}

json moments_json(const ThroughputMoments& m) {
  return json{{"first_priority", {m.first_priority[0], m.first_priority[1]}},
              {"second_priority", {m.second_priority[0], m.second_priority[1]}},
              {"se_first", {m.se_first[0], m.se_first[1]}},
              {"se_second", {m.se_second[0], m.se_second[1]}},
              {"sample_count", m.sample_count}};
}

const char* degeneracy_name(PricingDegeneracy d) {
  switch (d) {
    case PricingDegeneracy::all_zero_price:
      return "all_zero_price";
    case PricingDegeneracy::all_reservation_price:
      return "all_reservation_price";
    default:
      return "none";
  }
}

int run_throughput(const SimOptions& o) {
  const MomentSetup setup = build_moments(o);
  json out;
  out["capacities"] = {setup.units[0].capacity, setup.units[1].capacity};
  out["method"] = setup.method;
  out["seed"] = o.seed;
  out["count"] = setup.count_used;
  out["moments"] = moments_json(setup.moments);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_pricing(const SimOptions& o) {
  const MomentSetup setup = build_moments(o);
  const double r = parse_number(o.reservation);
  const PricingEquilibrium eq = solve_pricing(setup.moments, r);
  const auto rho = expected_prices(eq);
  json out;
  out["capacities"] = {setup.units[0].capacity, setup.units[1].capacity};
  out["method"] = setup.method;
  out["seed"] = o.seed;
  out["count"] = setup.count_used;
  out["reservation"] = r;
  out["payoff_large"] = eq.payoff_large;
  out["payoff_small"] = eq.payoff_small;
  out["support_low"] = eq.support_low;
  out["support_high"] = eq.support_high;
  out["atom_mass_large"] = eq.atom_mass_large;
  out["expected_price_large"] = rho.first;
  out["expected_price_small"] = rho.second;
  out["degeneracy"] = degeneracy_name(eq.degeneracy);
  out["moments"] = moments_json(setup.moments);
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct CapacityOptions {
  std::string gamma = "0.5,0.5";
  std::string reservation = "1";
  std::string demand = "halfnormal";
  std::uint64_t seed = 1;
};

int run_capacity(const CapacityOptions& o) {
  CapacityGameConfig config;
  config.gamma = parse_pair(o.gamma, "--gamma");
  config.reservation = parse_number(o.reservation);

  json out;
  out["gamma"] = {config.gamma[0], config.gamma[1]};
  out["reservation"] = config.reservation;
  out["seed"] = o.seed;

  if (o.demand.rfind("det:", 0) == 0) {
    const double b = parse_number(o.demand.substr(4));
    config.demand = Deterministic{{b}};
    validate(config);
    const DeterministicSegment seg = deterministic_equilibrium_set(b, config);
    out["mode"] = "fixed_demand_segment";
    out["total"] = seg.total;
    out["lower_bound"] = {seg.lower_bound[0], seg.lower_bound[1]};
    out["s1_min"] = seg.s1_min;
    out["s1_max"] = seg.s1_max;
    out["note"] = seg.note;
    std::cout << out.dump(2) << "\n";
    return 0;
  }
  if (o.demand != "halfnormal")
    throw std::invalid_argument("--demand must be halfnormal or det:<value>");

  config.demand = HalfNormal{};
  validate(config);
  const CapacityOutcome outcome = solve_capacity_equilibria(config);
  out["mode"] = "half_normal";
  out["candidates"] = json::array();
  for (std::size_t c = 0; c < outcome.candidates.size(); ++c) {
    const auto& cand = outcome.candidates[c];
    const auto& verdict = outcome.verdicts[c];
    json j;
    j["large_firm"] = cand.large_firm;
    j["capacities"] = {cand.capacities[0], cand.capacities[1]};
    j["lambda1"] = cand.lambda1_value;
    j["lambda2"] = cand.lambda2_value;
    j["valid"] = cand.valid;
    j["invalid_reason"] = cand.invalid_reason;
    j["is_equilibrium"] = verdict.is_equilibrium;
    j["worst_deviation_gain"] = verdict.worst_deviation_gain;
    j["best_deviation_point"] = verdict.best_deviation_point;
    j["deviating_firm"] = verdict.deviating_firm;
    j["net_payoffs"] = {outcome.net_payoffs[c][0], outcome.net_payoffs[c][1]};
    out["candidates"].push_back(j);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct FigOptions {
  std::string out_dir;
  std::string format = "csv";
  int samples = 10000;
  std::uint64_t seed = 1;
  std::string caps = "1.5,1";
  std::string reservation = "1";
  std::string sigmas, horizons, s0_fracs, s0_frac, alpha, alpha_grid;
  std::string gamma_grid, gamma2;
  int horizon = 100;
};

void add_fig_common(CLI::App* sub, FigOptions& o) {
  sub->add_option("--samples", o.samples, "Monte Carlo sample paths per grid point");
  sub->add_option("--seed", o.seed, "master random seed");
  sub->add_option("--out", o.out_dir,
                  "output directory for the CSV and gnuplot script; when unset, "
                  "results go to stdout");
  sub->add_option("--format", o.format, "stdout format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--reservation", o.reservation, "price ceiling per unit of energy");
}

int run_fig(const std::string& scenario, const FigOptions& o) {
  SweepConfig config = default_config(scenario);
  config.sample_count = o.samples;
  config.master_seed = o.seed;
  config.out_dir = o.out_dir;
  config.capacities = parse_pair(o.caps, "--caps");
  config.reservation = parse_number(o.reservation);
  if (!o.sigmas.empty()) config.variances = parse_list(o.sigmas);
  if (!o.horizons.empty()) config.horizons = parse_int_list(o.horizons);
  if (!o.s0_fracs.empty()) config.s0_fracs = parse_list(o.s0_fracs);
  if (!o.s0_frac.empty()) config.s0_fracs = {parse_number(o.s0_frac)};
  if (!o.alpha.empty()) config.alphas = {parse_number(o.alpha)};
  if (!o.alpha_grid.empty()) config.alphas = parse_grid(o.alpha_grid);
  if (scenario == "fig2" && o.horizon > 0) config.horizons = {o.horizon};
  if (!o.gamma_grid.empty()) config.gamma1_grid = parse_grid(o.gamma_grid);
  if (!o.gamma2.empty()) config.gamma2 = parse_number(o.gamma2);

  const ResultTable table = run_scenario(config, !o.out_dir.empty());
  if (o.format == "json") {
    json out;
    out["columns"] = table.columns;
    out["rows"] = table.rows;
    out["metadata"] = json::object();
    for (const auto& [key, value] : table.metadata) out["metadata"][key] = value;
    std::cout << out.dump(2) << "\n";
  } else if (o.out_dir.empty()) {
    std::cout << to_csv(table);
  } else {
    const std::filesystem::path dir(o.out_dir);
    std::cout << "wrote " << (dir / (scenario + ".csv")).string() << " and "
              << (dir / (scenario + ".gp")).string() << "\n";
  }
  return 0;
}

struct VerifyOptions : SimOptions {
  std::string grid_step = "0.01";
};

int run_verify(const VerifyOptions& o) {
  const MomentSetup setup = build_moments(o);
  const double r = parse_number(o.reservation);
  const PricingEquilibrium eq = solve_pricing(setup.moments, r);

  const double step = parse_number(o.grid_step);
  if (!(step > 0.0 && step <= r))
    throw std::invalid_argument("--grid-step must lie in (0, reservation]");
  std::vector<double> grid;
  for (int k = 0;; ++k) {
    const double p = k * step;
    if (p > r + 1e-12) break;
    grid.push_back(std::min(p, r));
  }

  const BestResponseReport report = verify_best_response(
      eq, setup.units, setup.verify_model, setup.verify_horizon, grid,
      o.samples, stream_seed(o.seed, "verify-cli"));

  int failures = 0;
  const auto check = [&](const std::string& name, bool ok, const std::string& detail) {
    std::cout << "check " << name << ": " << (ok ? "pass" : "fail") << " (" << detail
              << ")\n";
    if (!ok) ++failures;
  };

  const auto fmt = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };

  check("moment_ordering",
        setup.moments.first_priority[0] + 3.0 * (setup.moments.se_first[0] +
                                                 setup.moments.se_second[0]) >=
                setup.moments.second_priority[0] &&
            setup.moments.first_priority[1] + 3.0 * (setup.moments.se_first[1] +
                                                     setup.moments.se_second[1]) >=
                setup.moments.second_priority[1],
        "first-priority throughput >= second-priority for both firms");

  const double tol = std::max({0.02 * eq.payoff_large, 0.02 * eq.payoff_small,
                               1e-6 * r});
  check("on_support_indifference", report.max_on_support_deviation <= tol,
        "max payoff deviation on the support " +
            fmt(report.max_on_support_deviation) + ", tolerance " + fmt(tol));
  check("no_off_support_gain", report.max_off_support_gain <= tol,
        "max gain off the support " + fmt(report.max_off_support_gain) +
            ", tolerance " + fmt(tol));

  // Dispatch invariants on random single-period instances: greedy dispatch
  // matches the enumeration oracle and conserves the imbalance exactly.
  Rng rng(stream_seed(o.seed, "verify-dispatch"));
  int bad = 0;
  for (int i = 0; i < 200; ++i) {
    std::vector<StorageUnit> units(2);
    StorageState state;
    for (auto& u : units) {
      u.capacity = 0.2 + 2.0 * rng.uniform();
      u.leakage_retention = rng.uniform();
      u.initial_charge = u.capacity * rng.uniform();
      state.charge.push_back(u.initial_charge);
    }
    PriceProfile prices;
    prices.backstop_price = r;
    for (int f = 0; f < 2; ++f)
      prices.firm_prices.push_back(r * (rng.uniform() < 0.2 ? 1.0 : rng.uniform()));
    const double b = 3.0 * (rng.uniform() - 0.5);
    if (!lp_oracle_check(units, state, prices, b)) {
      ++bad;
      continue;
    }
    const auto step_result =
        leak_and_allocate(units, state, prices, b, {0, 1});
    double total = step_result.backstop_allocation;
    for (double x : step_result.firm_allocations) total += x;
    if (std::fabs(total - b) > 1e-9) ++bad;
  }
  check("dispatch_invariants", bad == 0,
        std::to_string(200 - bad) + " of 200 random instances clean");

  std::cout << (failures == 0 ? "all checks passed" : "some checks FAILED")
            << "\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "balancing-market storage competition: throughput moments, mixed-strategy "
      "price equilibria, capacity equilibria, and sweep scenarios"};
  app.require_subcommand(1);

  SimOptions throughput_opts;
  auto* throughput_cmd = app.add_subcommand(
      "throughput", "expected priority-ordered throughput moments");
  add_sim_flags(throughput_cmd, throughput_opts);

  SimOptions pricing_opts;
  auto* pricing_cmd =
      app.add_subcommand("pricing", "mixed-strategy price equilibrium as JSON");
  add_sim_flags(pricing_cmd, pricing_opts);

  CapacityOptions capacity_opts;
  auto* capacity_cmd = app.add_subcommand(
      "capacity", "capacity-stage equilibrium candidates with Nash verdicts");
  capacity_cmd->add_option("--gamma", capacity_opts.gamma,
                           "per-firm opportunity cost rates in (0, R], comma pair");
  capacity_cmd->add_option("--reservation", capacity_opts.reservation,
                           "price ceiling per unit of energy");
  capacity_cmd->add_option("--demand", capacity_opts.demand,
                           "single-period imbalance law: halfnormal or det:<value>");
  capacity_cmd->add_option("--seed", capacity_opts.seed, "echoed into the output");

  std::array<FigOptions, 4> fig_opts;
  std::array<CLI::App*, 4> fig_cmds{};
  const std::array<const char*, 4> fig_names{"fig1", "fig2", "fig3", "fig4"};
  const std::array<const char*, 4> fig_help{
      "expected price vs horizon sweep (CSV + gnuplot script)",
      "expected price vs leakage retention sweep (CSV + gnuplot script)",
      "capacity equilibria vs gamma1 sweep (CSV + gnuplot script)",
      "energy-pricing vs capacity-pricing profit comparison (CSV + gnuplot script)"};
  for (int i = 0; i < 4; ++i) {
    fig_cmds[i] = app.add_subcommand(fig_names[i], fig_help[i]);
    add_fig_common(fig_cmds[i], fig_opts[i]);
  }
  fig_cmds[0]->add_option("--caps", fig_opts[0].caps, "firm capacities, comma pair");
  fig_cmds[0]->add_option("--sigmas", fig_opts[0].sigmas,
                          "imbalance variance grid, comma list");
  fig_cmds[0]->add_option("--horizons", fig_opts[0].horizons,
                          "horizon grid (periods), comma list of integers");
  fig_cmds[0]->add_option("--s0-fracs", fig_opts[0].s0_fracs,
                          "initial charge fractions, comma list");
  fig_cmds[0]->add_option("--alpha", fig_opts[0].alpha,
                          "leakage retention applied to both firms");
  fig_cmds[1]->add_option("--caps", fig_opts[1].caps, "firm capacities, comma pair");
  fig_cmds[1]->add_option("--sigmas", fig_opts[1].sigmas,
                          "imbalance variance grid, comma list");
  fig_cmds[1]->add_option("--horizon", fig_opts[1].horizon, "horizon (periods)");
  fig_cmds[1]->add_option("--s0-frac", fig_opts[1].s0_frac,
                          "initial charge fraction");
  fig_cmds[1]->add_option("--alpha-grid", fig_opts[1].alpha_grid,
                          "leakage retention grid start:stop:step");
  for (int i = 2; i < 4; ++i) {
    fig_cmds[i]->add_option("--gamma-grid", fig_opts[i].gamma_grid,
                            "firm-1 opportunity cost grid start:stop:step");
    fig_cmds[i]->add_option("--gamma2", fig_opts[i].gamma2,
                            "firm-2 opportunity cost rate");
  }

  VerifyOptions verify_opts;
  auto* verify_cmd = app.add_subcommand(
      "verify", "best-response and dispatch invariant checks, prints pass/fail");
  add_sim_flags(verify_cmd, verify_opts);
  verify_cmd->add_option("--grid-step", verify_opts.grid_step,
                         "price grid spacing for the best-response scan");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*throughput_cmd) return run_throughput(throughput_opts);
    if (*pricing_cmd) return run_pricing(pricing_opts);
    if (*capacity_cmd) return run_capacity(capacity_opts);
    for (int i = 0; i < 4; ++i)
      if (*fig_cmds[i]) return run_fig(fig_names[i], fig_opts[i]);
    if (*verify_cmd) return run_verify(verify_opts);
  } catch (const AmbiguousRootError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const NoRootError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
