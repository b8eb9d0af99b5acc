// fphist: run, sweep, catalog and validate Fokker-Planck histogram experiments.
#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fphist/error.hpp"
#include "fphist/experiment.hpp"

namespace {

using fphist::Json;

struct Overrides {
  std::string config_path;
  std::optional<std::string> problem, rule, output_dir, ledger;
  std::optional<double> alpha, epsilon, horizon, tau, box_margin, gamma;
  std::optional<std::size_t> dim, samples, cells, steps, n_eval;
  std::optional<std::uint64_t> seed, metrics_seed;
  std::optional<unsigned> workers;
  std::vector<double> box_lower, box_upper;
  std::vector<std::size_t> snapshots;
  bool uneven = false;
};

void add_config_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config_path, "JSON experiment config");
  cmd->add_option("--problem", o.problem, "catalog problem id");
  cmd->add_option("--dim", o.dim, "problem dimension override");
  cmd->add_option("--alpha", o.alpha, "initial variance alpha");
  cmd->add_option("--epsilon", o.epsilon, "noise level epsilon");
  cmd->add_option("--horizon", o.horizon, "final time T");
  cmd->add_option("--rule", o.rule, "gessaman or btc");
  cmd->add_flag("--uneven", o.uneven, "allow Gessaman cells whose counts differ by one");
  cmd->add_option("-M,--samples", o.samples, "number of trajectories M");
  cmd->add_option("-k,--cells", o.cells, "samples per cell k_M");
  cmd->add_option("-J,--steps", o.steps, "Euler steps J");
  cmd->add_option("--tau", o.tau, "step size (must divide T)");
  cmd->add_option("--seed", o.seed, "simulation seed");
  cmd->add_option("--box-lower", o.box_lower, "evaluation box lower corner")->delimiter(',');
  cmd->add_option("--box-upper", o.box_upper, "evaluation box upper corner")->delimiter(',');
  cmd->add_option("--box-margin", o.box_margin, "widen the default evaluation box");
  cmd->add_option("--n-eval", o.n_eval, "MC points per cell");
  cmd->add_option("--gamma", o.gamma, "diameter threshold for the large-cell fraction");
  cmd->add_option("--metrics-seed", o.metrics_seed, "seed of the MC error estimate");
  cmd->add_option("--snapshots", o.snapshots, "step indices j to keep")->delimiter(',');
  cmd->add_option("-o,--output-dir", o.output_dir, "artifact directory");
  cmd->add_option("--ledger", o.ledger, "results ledger CSV (default <output-dir>/ledger.csv)");
  cmd->add_option("--workers", o.workers, "simulation threads");
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, end - pos);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (item.empty() || used != item.size())
      throw fphist::ConfigError("--values: '" + item + "' is not a number");
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

fphist::ExperimentConfig build_config(const Overrides& o) {
  fphist::ExperimentConfig c;
  if (!o.config_path.empty()) c = fphist::config_from_json(fphist::read_json_file(o.config_path));
  if (o.problem) c.problem = *o.problem;
  if (o.dim) c.params.dim = *o.dim;
  if (o.alpha) c.params.alpha = *o.alpha;
  if (o.epsilon) c.params.epsilon = *o.epsilon;
  if (o.horizon) c.params.horizon = *o.horizon;
  if (o.rule) c.rule = fphist::parse_split_rule(*o.rule);
  if (o.uneven) c.gessaman_uneven = true;
  if (o.samples) c.samples = *o.samples;
  if (o.cells) c.cells = *o.cells;
  // A flag for one of J / tau replaces whatever the file said about the other.
  if (o.steps) {
    c.steps = *o.steps;
    if (!o.tau) c.tau.reset();
  }
  if (o.tau) {
    c.tau = *o.tau;
    if (!o.steps) c.steps.reset();
  }
  if (o.seed) c.seed = *o.seed;
  if (!o.box_lower.empty() || !o.box_upper.empty())
    c.metrics.box = fphist::HyperRect(o.box_lower, o.box_upper);
  if (o.box_margin) c.metrics.box_margin = *o.box_margin;
  if (o.n_eval) c.metrics.n_eval = *o.n_eval;
  if (o.gamma) c.metrics.gamma = *o.gamma;
  if (o.metrics_seed) c.metrics.seed = *o.metrics_seed;
  if (!o.snapshots.empty()) c.snapshots = o.snapshots;
  if (o.output_dir) c.output_dir = *o.output_dir;
  if (o.ledger) c.ledger = *o.ledger;
  if (o.workers) c.workers = *o.workers;
  return c;
}

int fail(const std::string& kind, const std::string& message) {
  std::cerr << Json{{"error", kind}, {"message", message}}.dump() << '\n';
  return 2;
}

template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const fphist::Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail("InternalError", e.what());
  }
}

Json catalog_json() {
  Json list = Json::array();
  for (const auto& p : fphist::catalog())
    list.push_back(Json{{"id", p.id},
                        {"description", p.description},
                        {"dim", p.sde.dim},
                        {"horizon", p.sde.horizon},
                        {"default_tau", p.default_tau},
                        {"analytic", p.solution ? Json(p.solution->name()) : Json(nullptr)}});
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Euler-Maruyama particle simulation with data-dependent histogram estimates"};
  app.require_subcommand(1);

  Overrides run_opts;
  auto* run = app.add_subcommand("run", "simulate, partition, estimate and write artifacts");
  add_config_flags(run, run_opts);

  Overrides val_opts;
  auto* validate = app.add_subcommand("validate", "check a config without computing anything");
  add_config_flags(validate, val_opts);

  Overrides sweep_opts;
  std::string axis;
  std::string values;
  std::optional<double> k_exponent;
  unsigned parallel = 1;
  auto* sweep = app.add_subcommand("sweep", "one run per value of M, k, tau or alpha");
  add_config_flags(sweep, sweep_opts);
  sweep->add_option("--axis", axis, "M, k, tau or alpha")->required();
  sweep->add_option("--values", values, "comma separated values (empty for none)");
  sweep->add_option("--k-exponent", k_exponent, "M sweeps: k = round(M^e)");
  sweep->add_option("--parallel", parallel, "runs executed concurrently");

  auto* catalog = app.add_subcommand("catalog", "list benchmark problems as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("UsageError", e.what());
  }

  if (catalog->parsed()) {
    std::cout << catalog_json().dump(2) << '\n';
    return 0;
  }
  if (validate->parsed()) {
    return guarded([&] {
      const auto rc = fphist::resolve(build_config(val_opts));
      std::cout << Json{{"valid", true}, {"config", fphist::resolved_config_json(rc)}}.dump(2)
                << '\n';
      return 0;
    });
  }
  if (run->parsed()) {
    return guarded([&] {
      const auto result = fphist::run_experiment(build_config(run_opts));
      const Json& report = result.report;
      std::cout << Json{{"output_dir", result.output_dir},
                        {"errors", report.at("errors")},
                        {"tail_mass", report.at("estimate").at("tail_mass")},
                        {"wall_time_s", result.ledger_row.wall_time_s}}
                       .dump()
                << '\n';
      return 0;
    });
  }
  return guarded([&] {
    fphist::SweepOptions opts;
    opts.axis = fphist::parse_sweep_axis(axis);
    opts.values = parse_values(values);
    opts.k_exponent = k_exponent;
    opts.parallel = parallel;
    const auto result = fphist::run_sweep(build_config(sweep_opts), opts);
    std::size_t failed = 0;
    for (const auto& r : result.rows) failed += r.result ? 0 : 1;
    std::cout << Json{{"summary", result.summary_path},
                      {"runs", result.rows.size()},
                      {"failed", failed}}
                     .dump()
              << '\n';
    return 0;
  });
}
