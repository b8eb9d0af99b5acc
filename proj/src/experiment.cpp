#include "fphist/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "fphist/detail/parallel.hpp"
#include "fphist/error.hpp"

namespace fphist {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// JSON reading helpers

void check_keys(const Json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(std::string("unknown key '") + key + "' in " + where);
  }
}

double get_number(const Json& v, const std::string& name) {
  if (!v.is_number()) throw ConfigError("'" + name + "' must be a number");
  return v.get<double>();
}

std::uint64_t get_unsigned(const Json& v, const std::string& name) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
  }
  throw ConfigError("'" + name + "' must be a non-negative integer");
}

std::string get_string(const Json& v, const std::string& name) {
  if (!v.is_string()) throw ConfigError("'" + name + "' must be a string");
  return v.get<std::string>();
}

template <class T, class F>
std::vector<T> get_list(const Json& v, const std::string& name, F item) {
  if (!v.is_array()) throw ConfigError("'" + name + "' must be an array");
  std::vector<T> out;
  for (const auto& e : v) out.push_back(item(e, name));
  return out;
}

Json opt_json(const auto& v) { return v ? Json(*v) : Json(nullptr); }

SliceSpec slice_from_json(const Json& j) {
  check_keys(j, "slices[]", {"axes", "points", "anchor"});
  SliceSpec s;
  if (!j.contains("axes")) throw ConfigError("slice needs 'axes'");
  s.axes = get_list<std::size_t>(j.at("axes"), "axes", get_unsigned);
  if (j.contains("points")) s.points = get_unsigned(j.at("points"), "points");
  if (j.contains("anchor") && !j.at("anchor").is_null())
    s.anchor = get_list<double>(j.at("anchor"), "anchor", get_number);
  return s;
}

Json slice_to_json(const SliceSpec& s) {
  return Json{{"axes", s.axes}, {"points", s.points}, {"anchor", opt_json(s.anchor)}};
}

// ---------------------------------------------------------------------------

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

struct Artifacts {
  Json report;
  Json estimate;
  Json partition;
  std::vector<std::pair<std::string, Slice>> slices;
  std::vector<std::pair<std::size_t, std::pair<Json, Json>>> snapshots;
  LedgerRow ledger_row;
};

Artifacts compute(const ResolvedConfig& rc) {
  const auto& cfg = rc.config;
  const auto& problem = rc.problem;
  const auto started = std::chrono::steady_clock::now();

  const GessamanOptions gopts{cfg.gessaman_uneven};
  const EulerConfig euler{rc.steps, cfg.samples, cfg.seed};
  Simulation sim = simulate(problem.sde, euler, SimulationOptions{cfg.workers, cfg.snapshots});
  const DensityEstimate est(build_partition(sim.terminal, cfg.cells, cfg.rule, gopts), cfg.seed);

  const HyperRect box = cfg.metrics.box ? *cfg.metrics.box
                                        : default_evaluation_box(est, sim.terminal,
                                                                 cfg.metrics.box_margin);
  const PartitionStats stats = partition_stats(est.tree(), box);

  Artifacts out;
  Json errors = nullptr;
  std::optional<ErrorReport> report;
  if (problem.solution) {
    const auto& sol = *problem.solution;
    const double T = problem.sde.horizon;
    const DensityFn ref = [&sol, T](std::span<const double> x) { return sol.density(T, x); };
    report = evaluate_errors(est, ref, box, cfg.metrics.n_eval, rc.metrics_seed);
    errors = error_report_to_json(*report);
  }

  const std::vector<double> mean = sim.terminal.mean();
  Json slice_files = Json::array();
  for (const auto& spec : rc.slices) {
    std::vector<std::size_t> axes;
    std::vector<std::vector<double>> grid;
    std::string name = "slice";
    for (std::size_t a1 : spec.axes) {
      axes.push_back(a1 - 1);
      grid.push_back(linspace(box.lower(a1 - 1), box.upper(a1 - 1), spec.points));
      name += "_x" + std::to_string(a1);
    }
    const std::vector<double> anchor = spec.anchor ? *spec.anchor : mean;
    out.slices.emplace_back("slices/" + name + ".csv", slice(est, axes, anchor, grid));
    slice_files.push_back(out.slices.back().first);
  }

  Json snapshot_files = Json::array();
  for (const auto& [j, samples] : sim.snapshots) {
    const DensityEstimate snap(build_partition(samples, cfg.cells, cfg.rule, gopts), cfg.seed);
    out.snapshots.push_back({j, {partition_to_json(snap.tree()), estimate_to_json(snap)}});
    const std::string dir = "snapshots/step_" + std::to_string(j);
    snapshot_files.push_back(Json{{"step", j},
                                  {"time", static_cast<double>(j) * rc.tau},
                                  {"partition", dir + "/partition.json"},
                                  {"estimate", dir + "/estimate.json"}});
  }

  out.partition = partition_to_json(est.tree());
  out.estimate = estimate_to_json(est);

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                          .count();

  out.report = Json{
      {"config", resolved_config_json(rc)},
      {"problem",
       Json{{"id", problem.id},
            {"description", problem.description},
            {"dim", problem.sde.dim},
            {"horizon", problem.sde.horizon},
            {"analytic", problem.solution ? Json(problem.solution->name()) : Json(nullptr)}}},
      {"steps", rc.steps},
      {"tau", rc.tau},
      {"partition",
       Json{{"rule", to_string(cfg.rule)},
            {"leaf_count", stats.leaf_count},
            {"bounded_leaf_count", stats.bounded_leaf_count},
            {"unbounded_leaf_count", est.unbounded_leaf_count()},
            {"height", est.tree().height()},
            {"max_clipped_diameter", stats.max_diameter},
            {"mean_clipped_diameter", stats.mean_diameter},
            {"large_cell_fraction", large_cell_fraction(est.tree(), box, cfg.metrics.gamma)}}},
      {"estimate",
       Json{{"self_integral", est.self_integral()},
            {"tail_mass", est.tail_mass()},
            {"unbounded_samples", est.unbounded_sample_count()}}},
      {"evaluation_box", rect_to_json(box)},
      {"errors", errors},
      {"files", Json{{"estimate", "estimate.json"},
                     {"partition", "partition.json"},
                     {"slices", slice_files},
                     {"snapshots", snapshot_files}}}};

  out.ledger_row = LedgerRow{problem.id,
                             std::string(to_string(cfg.rule)),
                             cfg.samples,
                             cfg.cells,
                             rc.tau,
                             rc.steps,
                             cfg.seed,
                             report ? std::optional<double>(report->l1) : std::nullopt,
                             report ? std::optional<double>(report->linf) : std::nullopt,
                             est.tail_mass(),
                             wall};
  return out;
}

void write_artifacts(const std::string& dir, const Artifacts& a) {
  const fs::path root(dir);
  fs::create_directories(root / "slices");
  write_json_file((root / "estimate.json").string(), a.estimate);
  write_json_file((root / "partition.json").string(), a.partition);
  for (const auto& [name, s] : a.slices) {
    std::ofstream f(root / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + (root / name).string());
    write_slice_csv(f, s);
  }
  for (const auto& [j, files] : a.snapshots) {
    const fs::path sd = root / "snapshots" / ("step_" + std::to_string(j));
    fs::create_directories(sd);
    write_json_file((sd / "partition.json").string(), files.first);
    write_json_file((sd / "estimate.json").string(), files.second);
  }
  write_json_file((root / "report.json").string(), a.report);
}

std::string ledger_path(const ExperimentConfig& cfg) {
  return cfg.ledger ? *cfg.ledger : (fs::path(cfg.output_dir) / "ledger.csv").string();
}

RunResult run_impl(const ExperimentConfig& config, bool append_ledger) {
  const ResolvedConfig rc = resolve(config);
  Artifacts a = compute(rc);
  write_artifacts(config.output_dir, a);
  if (append_ledger) append_ledger_row(ledger_path(config), a.ledger_row);
  return RunResult{std::move(a.report), a.ledger_row, config.output_dir};
}

}  // namespace

// ---------------------------------------------------------------------------

ExperimentConfig config_from_json(const Json& j) {
  check_keys(j, "config",
             {"problem", "params", "rule", "gessaman_uneven", "M", "k", "J", "tau", "seed",
              "metrics", "snapshots", "slices", "output_dir", "ledger", "workers"});
  ExperimentConfig c;
  if (j.contains("problem")) c.problem = get_string(j.at("problem"), "problem");
  if (j.contains("params") && !j.at("params").is_null()) {
    const Json& p = j.at("params");
    check_keys(p, "params", {"dim", "alpha", "epsilon", "horizon"});
    auto num = [&](const char* key) -> std::optional<double> {
      if (!p.contains(key) || p.at(key).is_null()) return std::nullopt;
      return get_number(p.at(key), key);
    };
    if (p.contains("dim") && !p.at("dim").is_null()) c.params.dim = get_unsigned(p.at("dim"), "dim");
    c.params.alpha = num("alpha");
    c.params.epsilon = num("epsilon");
    c.params.horizon = num("horizon");
  }
  if (j.contains("rule")) c.rule = parse_split_rule(get_string(j.at("rule"), "rule"));
  if (j.contains("gessaman_uneven")) {
    if (!j.at("gessaman_uneven").is_boolean()) throw ConfigError("'gessaman_uneven' must be a bool");
    c.gessaman_uneven = j.at("gessaman_uneven").get<bool>();
  }
  if (j.contains("M")) c.samples = get_unsigned(j.at("M"), "M");
  if (j.contains("k")) c.cells = get_unsigned(j.at("k"), "k");
  if (j.contains("J") && !j.at("J").is_null()) c.steps = get_unsigned(j.at("J"), "J");
  if (j.contains("tau") && !j.at("tau").is_null()) c.tau = get_number(j.at("tau"), "tau");
  if (j.contains("seed")) c.seed = get_unsigned(j.at("seed"), "seed");
  if (j.contains("metrics")) {
    const Json& m = j.at("metrics");
    check_keys(m, "metrics", {"box", "box_margin", "n_eval", "gamma", "seed"});
    if (m.contains("box") && !m.at("box").is_null()) c.metrics.box = rect_from_json(m.at("box"));
    if (m.contains("box_margin")) c.metrics.box_margin = get_number(m.at("box_margin"), "box_margin");
    if (m.contains("n_eval")) c.metrics.n_eval = get_unsigned(m.at("n_eval"), "n_eval");
    if (m.contains("gamma")) c.metrics.gamma = get_number(m.at("gamma"), "gamma");
    if (m.contains("seed") && !m.at("seed").is_null())
      c.metrics.seed = get_unsigned(m.at("seed"), "metrics.seed");
  }
  if (j.contains("snapshots"))
    c.snapshots = get_list<std::size_t>(j.at("snapshots"), "snapshots", get_unsigned);
  if (j.contains("slices")) {
    if (!j.at("slices").is_array()) throw ConfigError("'slices' must be an array");
    for (const auto& s : j.at("slices")) c.slices.push_back(slice_from_json(s));
  }
  if (j.contains("output_dir")) c.output_dir = get_string(j.at("output_dir"), "output_dir");
  if (j.contains("ledger") && !j.at("ledger").is_null())
    c.ledger = get_string(j.at("ledger"), "ledger");
  if (j.contains("workers"))
    c.workers = static_cast<unsigned>(get_unsigned(j.at("workers"), "workers"));
  return c;
}

Json config_to_json(const ExperimentConfig& c) {
  Json slices = Json::array();
  for (const auto& s : c.slices) slices.push_back(slice_to_json(s));
  return Json{{"problem", c.problem},
              {"params",
               Json{{"dim", opt_json(c.params.dim)},
                    {"alpha", opt_json(c.params.alpha)},
                    {"epsilon", opt_json(c.params.epsilon)},
                    {"horizon", opt_json(c.params.horizon)}}},
              {"rule", to_string(c.rule)},
              {"gessaman_uneven", c.gessaman_uneven},
              {"M", c.samples},
              {"k", c.cells},
              {"J", opt_json(c.steps)},
              {"tau", opt_json(c.tau)},
              {"seed", c.seed},
              {"metrics",
               Json{{"box", c.metrics.box ? rect_to_json(*c.metrics.box) : Json(nullptr)},
                    {"box_margin", c.metrics.box_margin},
                    {"n_eval", c.metrics.n_eval},
                    {"gamma", c.metrics.gamma},
                    {"seed", opt_json(c.metrics.seed)}}},
              {"snapshots", c.snapshots},
              {"slices", slices},
              {"output_dir", c.output_dir},
              {"ledger", opt_json(c.ledger)},
              {"workers", c.workers}};
}

ResolvedConfig resolve(const ExperimentConfig& config) {
  ResolvedConfig rc;
  rc.config = config;
  auto& c = rc.config;
  rc.problem = make_problem(c.problem, c.params);
  const auto& sde = rc.problem.sde;
  const double T = sde.horizon;
  const std::size_t d = sde.dim;

  require(c.samples >= 1, "M must be >= 1");
  require(c.cells >= 1, "k must be >= 1");
  require(c.workers >= 1, "workers must be >= 1");
  require(!c.output_dir.empty(), "output_dir must not be empty");

  if (c.steps && c.tau) {
    require(*c.steps >= 1, "J must be >= 1");
    require(std::abs(static_cast<double>(*c.steps) * *c.tau - T) <= 1e-9 * std::max(1.0, T),
            "tau * J must equal T = " + format_double(T));
    rc.steps = *c.steps;
  } else if (c.steps) {
    require(*c.steps >= 1, "J must be >= 1");
    rc.steps = *c.steps;
  } else {
    rc.steps = steps_for_tau(T, c.tau.value_or(rc.problem.default_tau));
  }
  rc.tau = T / static_cast<double>(rc.steps);
  EulerConfig{rc.steps, c.samples, c.seed}.validate();
  check_partition_preconditions(c.samples, c.cells, d, c.rule,
                                GessamanOptions{c.gessaman_uneven});

  const auto& m = c.metrics;
  require(m.n_eval >= 1, "n_eval must be >= 1");
  require(m.gamma > 0.0 && std::isfinite(m.gamma), "gamma must be positive");
  require(m.box_margin >= 0.0 && std::isfinite(m.box_margin), "box_margin must be >= 0");
  if (m.box) {
    require(m.box->dim() == d, "metrics.box must have dimension " + std::to_string(d));
    require(m.box->bounded(), "metrics.box must be finite");
  }
  rc.metrics_seed = m.seed.value_or(c.seed);

  std::sort(c.snapshots.begin(), c.snapshots.end());
  c.snapshots.erase(std::unique(c.snapshots.begin(), c.snapshots.end()), c.snapshots.end());
  if (!c.snapshots.empty())
    require(c.snapshots.back() <= rc.steps, "snapshot step " + std::to_string(c.snapshots.back()) +
                                                " exceeds J = " + std::to_string(rc.steps));

  rc.slices = c.slices;
  if (rc.slices.empty()) rc.slices.push_back(SliceSpec{d == 1 ? std::vector<std::size_t>{1}
                                                              : std::vector<std::size_t>{1, 2},
                                                       101, std::nullopt});
  std::set<std::vector<std::size_t>> seen;
  for (const auto& s : rc.slices) {
    require(s.axes.size() == 1 || s.axes.size() == 2, "slice needs one or two axes");
    for (std::size_t a : s.axes)
      require(a >= 1 && a <= d, "slice axis " + std::to_string(a) + " outside 1.." +
                                    std::to_string(d));
    require(s.axes.size() == 1 || s.axes[0] != s.axes[1], "slice axes must differ");
    require(seen.insert(s.axes).second, "duplicate slice axes");
    require(s.points >= 2, "slice points must be >= 2");
    if (s.anchor) {
      require(s.anchor->size() == d, "slice anchor must have " + std::to_string(d) + " entries");
      for (double v : *s.anchor) require(std::isfinite(v), "slice anchor must be finite");
    }
  }

  sde.validate(c.seed);
  return rc;
}

Json resolved_config_json(const ResolvedConfig& rc) {
  ExperimentConfig c = rc.config;
  c.steps = rc.steps;
  c.tau = rc.tau;
  c.metrics.seed = rc.metrics_seed;
  c.slices = rc.slices;
  c.params.dim = rc.problem.sde.dim;
  c.params.horizon = rc.problem.sde.horizon;
  Json j = config_to_json(c);
  j.erase("output_dir");
  j.erase("ledger");
  j.erase("workers");
  return j;
}

RunResult run_experiment(const ExperimentConfig& config) { return run_impl(config, true); }

// ---------------------------------------------------------------------------
// Sweeps

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "M") return SweepAxis::samples;
  if (name == "k" || name == "k_M") return SweepAxis::cells;
  if (name == "tau") return SweepAxis::tau;
  if (name == "alpha") return SweepAxis::alpha;
  throw ConfigError("unknown sweep axis '" + std::string(name) + "' (M, k, tau, alpha)");
}

std::string_view to_string(SweepAxis axis) noexcept {
  switch (axis) {
    case SweepAxis::samples: return "M";
    case SweepAxis::cells: return "k";
    case SweepAxis::tau: return "tau";
    case SweepAxis::alpha: return "alpha";
  }
  return "?";
}

ExperimentConfig sweep_instance(const ExperimentConfig& base, const SweepOptions& options,
                                std::size_t index) {
  const double v = options.values.at(index);
  auto as_count = [&](const char* what) {
    require(v >= 1.0 && v == std::floor(v) && v < 1e15,
            std::string(what) + " sweep value " + format_double(v) + " is not a positive integer");
    return static_cast<std::size_t>(v);
  };
  ExperimentConfig c = base;
  switch (options.axis) {
    case SweepAxis::samples:
      c.samples = as_count("M");
      if (options.k_exponent)
        c.cells = static_cast<std::size_t>(std::llround(std::pow(v, *options.k_exponent)));
      break;
    case SweepAxis::cells: c.cells = as_count("k"); break;
    case SweepAxis::tau:
      c.tau = v;
      c.steps.reset();
      break;
    case SweepAxis::alpha: c.params.alpha = v; break;
  }
  c.output_dir = (fs::path(base.output_dir) / ("run_" + std::to_string(index))).string();
  c.ledger = ledger_path(base);
  return c;
}

SweepResult run_sweep(const ExperimentConfig& base, const SweepOptions& options) {
  require(options.parallel >= 1, "parallel must be >= 1");
  if (options.k_exponent)
    require(options.axis == SweepAxis::samples && *options.k_exponent > 0.0 &&
                *options.k_exponent < 1.0,
            "k_exponent applies to M sweeps and must lie in (0, 1)");

  SweepResult result;
  result.rows.resize(options.values.size());
  std::vector<ExperimentConfig> configs(options.values.size());
  detail::parallel_for(options.values.size(), options.parallel, [&](std::size_t i) {
    SweepRow& row = result.rows[i];
    row.value = options.values[i];
    try {
      configs[i] = sweep_instance(base, options, i);
      row.result = run_impl(configs[i], false).ledger_row;
    } catch (const Error& e) {
      row.error_kind = e.kind();
      row.error_message = e.what();
    } catch (const std::exception& e) {
      row.error_kind = "InternalError";
      row.error_message = e.what();
    }
  });

  for (std::size_t i = 0; i < result.rows.size(); ++i)
    if (result.rows[i].result) append_ledger_row(configs[i].ledger.value(), *result.rows[i].result);

  const fs::path root(base.output_dir);
  fs::create_directories(root);
  result.summary_path = (root / "summary.csv").string();
  std::ofstream csv(result.summary_path, std::ios::binary);
  if (!csv) throw ConfigError("cannot write " + result.summary_path);
  csv << "index,value,problem,rule,M,k,tau,J,seed,l1,linf,tail,wall_time_s,status,error\n";
  Json rows = Json::array();
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const auto& r = result.rows[i];
    csv << i << ',' << format_double(r.value) << ',';
    Json jr{{"index", i}, {"value", r.value}};
    if (r.result) {
      const std::string line = ledger_line(*r.result);
      csv << line.substr(line.find(',') + 1) << ",ok,\n";
      jr["status"] = "ok";
      jr["M"] = r.result->samples;
      jr["k"] = r.result->cell_count;
      jr["tau"] = r.result->tau;
      jr["J"] = r.result->steps;
      jr["l1"] = opt_json(r.result->l1);
      jr["linf"] = opt_json(r.result->linf);
      jr["tail"] = r.result->tail_mass;
      jr["wall_time_s"] = r.result->wall_time_s;
    } else {
      csv << ",,,,,,,,,,," << "error," << r.error_kind << '\n';
      jr["status"] = "error";
      jr["error"] = Json{{"error", r.error_kind}, {"message", r.error_message}};
    }
    rows.push_back(std::move(jr));
  }
  write_json_file((root / "summary.json").string(),
                  Json{{"axis", to_string(options.axis)},
                       {"values", options.values},
                       {"k_exponent", opt_json(options.k_exponent)},
                       {"seed_policy", "every run uses the base seed " + std::to_string(base.seed)},
                       {"base_config", config_to_json(base)},
                       {"rows", rows}});
  return result;
}

}  // namespace fphist
