#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eivfit/baselines.hpp"
#include "eivfit/dataset.hpp"
#include "eivfit/io.hpp"
#include "eivfit/metrics.hpp"
#include "eivfit/optimize.hpp"
#include "eivfit/simulate.hpp"

namespace fs = std::filesystem;
using namespace eivfit;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNotConverged = 4;

struct Clock {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

SurfaceAxis parse_range(const std::string& text, std::size_t index) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  require(parts.size() == 3, "--range expects lo:hi:n, got '" + text + "'");
  const auto lo = parse_number(parts[0]);
  const auto hi = parse_number(parts[1]);
  const auto n = parse_number(parts[2]);
  require(lo && hi && n && *n >= 2 && *n == static_cast<double>(static_cast<std::size_t>(*n)) && *lo < *hi,
          "--range expects lo < hi and an integer n >= 2, got '" + text + "'");
  return SurfaceAxis{index, *lo, *hi, static_cast<std::size_t>(*n)};
}

Vector parse_list(const std::string& text) {
  Vector out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto v = parse_number(part);
    require(v.has_value(), "expected a comma-separated list of numbers, got '" + text + "'");
    out.push_back(*v);
  }
  return out;
}

IntegrationConfig integration_config(std::size_t mc_samples, std::size_t grid_points, std::uint64_t seed) {
  IntegrationConfig cfg;
  if (mc_samples > 0) {
    cfg.method = IntegrationMethod::MonteCarlo;
    cfg.mc_samples = mc_samples;
  }
  cfg.grid_points_per_dim = grid_points;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

void record_digest(RunManifest& m, const fs::path& file) {
  m.output_digests[file.filename().string()] = sha256_hex(file);
}

void write_tsv_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "\t" : "") << cells[i];
  out << '\n';
}

struct FitArgs {
  std::string data, schema, objective = "auto", key_column, out;
  std::size_t group_size = 1, n_test = 20, mc_samples = 0, grid_points = 0, restarts = 0;
  std::size_t max_iters = OptimizerConfig{}.max_iters;
  std::uint64_t seed = 0;
};

int run_fit(const FitArgs& a) {
  Clock clock;
  TabularSchema schema = TabularSchema::load(a.schema);
  if (!a.key_column.empty()) schema.key_column = a.key_column;
  const LoadedTable table = read_csv(a.data, schema);
  for (const auto& d : table.diagnostics) std::cerr << "warning: " << d << '\n';
  const std::size_t k = schema.input_columns.size();

  std::vector<std::size_t> train_rows(table.data.size());
  std::iota(train_rows.begin(), train_rows.end(), 0);
  std::vector<std::size_t> test_rows;
  if (a.n_test > 0) {
    const TrainTestSplit split = train_test_split(table.data.size(), a.n_test, derive_seed(a.seed, 0));
    train_rows = split.train_rows;
    test_rows = split.test_rows;
  }
  const PairedDataset train = table.data.subset(train_rows);

  Diagnostics grouping_notes;
  std::optional<GroupedDataset> grouped;
  if (a.group_size == 1) {
    grouped.emplace(as_grouped(train));
  } else {
    if (!table.key) throw ContractViolation("--group-size > 1 needs a key column (schema \"key\" or --key-column)");
    Vector key;
    for (std::size_t r : train_rows) key.push_back((*table.key)[r]);
    grouped.emplace(partition_by_key(train, key, a.group_size, &grouping_notes));
  }
  for (const auto& d : grouping_notes) std::cerr << "warning: " << d << '\n';

  const ParametricModel model = k == 1 ? ParametricModel::affine_1d() : ParametricModel::affine_kd(k);
  const ObjectiveKind kind = a.objective == "auto" ? (k == 1 ? ObjectiveKind::GaussLine : ObjectiveKind::GaussPlane)
                                                   : objective_kind_from_string(a.objective);
  const IntegrationConfig int_cfg = integration_config(a.mc_samples, a.grid_points, derive_seed(a.seed, 1));
  OptimizerConfig opt_cfg;
  opt_cfg.restarts = a.restarts;
  opt_cfg.max_iters = a.max_iters;
  opt_cfg.seed = derive_seed(a.seed, 2);
  FitReport report;
  report.fit = fit(*grouped, model, kind, int_cfg, opt_cfg);
  report.fit.diagnostics.insert(report.fit.diagnostics.end(), grouping_notes.begin(), grouping_notes.end());

  report.metrics["groups"] = static_cast<double>(grouped->R());
  report.metrics["rows_dropped"] = static_cast<double>(table.rows_dropped);
  report.metrics["train_size"] = static_cast<double>(train.size());
  report.metrics["test_size"] = static_cast<double>(test_rows.size());
  report.metrics["r2_delta_train"] = r_squared_delta(train, report.fit.alpha_hat, table.input_stds);
  if (!test_rows.empty()) {
    report.metrics["r2_delta_test"] = r_squared_delta(table.data.subset(test_rows), report.fit.alpha_hat, table.input_stds);
  }
  for (std::size_t c = 0; c < k; ++c) report.metrics["input_std." + schema.input_columns[c]] = table.input_stds[c];
  report.metrics["output_std." + schema.output_column] = table.output_std;

  fs::create_directories(a.out);
  const fs::path split_path = fs::path(a.out) / "split.tsv";
  {
    std::ofstream out(split_path);
    write_tsv_row(out, {"row", "id", "set"});
    for (std::size_t r : train_rows) write_tsv_row(out, {std::to_string(r), table.ids[r], "train"});
    for (std::size_t r : test_rows) write_tsv_row(out, {std::to_string(r), table.ids[r], "test"});
    if (!out) throw DataError("write to '" + split_path.string() + "' failed");
  }

  RunManifest& m = report.manifest;
  m.config = {{"command", "fit"},           {"data", a.data},
              {"schema", schema.to_json()}, {"objective", to_string(kind)},
              {"group_size", a.group_size}, {"n_test", a.n_test},
              {"mc_samples", a.mc_samples}, {"grid_points", a.grid_points},
              {"restarts", a.restarts},     {"max_iters", a.max_iters}};
  m.seeds = {{"master", a.seed}, {"split", derive_seed(a.seed, 0)}, {"integration", int_cfg.seed},
             {"optimizer", opt_cfg.seed}};
  m.timestamp = utc_timestamp();
  const fs::path report_path = fs::path(a.out) / "report.txt";
  write_fit_report(report_path, report);
  record_digest(m, fs::path(a.out) / "report.txt.tsv");
  record_digest(m, split_path);
  m.timings_seconds["total"] = clock.seconds();
  write_manifest(fs::path(a.out) / "manifest.json", m);

  std::cout << "alpha_hat:";
  for (double v : report.fit.alpha_hat) std::cout << ' ' << format_number(v);
  std::cout << "\nobjective: " << format_number(report.fit.objective_at_min) << '\n';
  for (const auto& [name, v] : report.metrics) std::cout << name << ": " << format_number(v) << '\n';
  if (!report.fit.converged) {
    std::cerr << "error: optimizer did not converge\n";
    return kExitNotConverged;
  }
  return 0;
}

struct SimArgs {
  std::string scenario = "A", objective = "auto", out;
  std::optional<std::size_t> groups;
  std::size_t reps = 200, mc_samples = 0, grid_points = 0;
  std::uint64_t seed = 0;
};

int run_simulate(const SimArgs& a) {
  Clock clock;
  const ScenarioSpec spec = ScenarioSpec::preset(scenario_from_string(a.scenario), a.groups);
  const ObjectiveKind kind = a.objective == "auto" ? spec.default_objective() : objective_kind_from_string(a.objective);
  const IntegrationConfig int_cfg = integration_config(a.mc_samples, a.grid_points, 0);
  const ReplicationReport rep = replicate(spec, a.reps, kind, int_cfg, OptimizerConfig{}, a.seed);

  fs::create_directories(a.out);
  const fs::path fits_path = fs::path(a.out) / "fits.tsv";
  const fs::path summary_path = fs::path(a.out) / "summary.tsv";
  const std::size_t n = spec.truth.size();
  {
    std::ofstream out(fits_path);
    std::vector<std::string> head{"rep"};
    for (std::size_t j = 0; j < n; ++j) head.push_back("alpha_hat[" + std::to_string(j) + "]");
    for (const char* h : {"objective", "converged", "iterations", "failed"}) head.emplace_back(h);
    write_tsv_row(out, head);
    for (std::size_t i = 0; i < rep.n_reps; ++i) {
      const FitResult& f = rep.fits[i];
      std::vector<std::string> row{std::to_string(i)};
      for (std::size_t j = 0; j < n; ++j) row.push_back(rep.failed[i] ? "nan" : format_number(f.alpha_hat[j]));
      row.push_back(format_number(rep.failed[i] ? std::nan("") : f.objective_at_min));
      row.push_back(f.converged ? "1" : "0");
      row.push_back(std::to_string(f.iterations));
      row.push_back(rep.failed[i] ? "1" : "0");
      write_tsv_row(out, row);
    }
    if (!out) throw DataError("write to '" + fits_path.string() + "' failed");
  }
  {
    std::ofstream out(summary_path);
    write_tsv_row(out, {"parameter", "truth", "q1", "median", "q3", "iqr", "whisker_lo", "whisker_hi", "outliers"});
    if (rep.summary) {
      for (std::size_t j = 0; j < n; ++j) {
        const CoordinateSummary& c = rep.summary->coordinates[j];
        write_tsv_row(out, {"alpha[" + std::to_string(j) + "]", format_number(spec.truth[j]), format_number(c.q1),
                            format_number(c.median), format_number(c.q3), format_number(c.iqr),
                            format_number(c.whisker_lo), format_number(c.whisker_hi),
                            std::to_string(c.outliers.size())});
      }
    }
    if (!out) throw DataError("write to '" + summary_path.string() + "' failed");
  }

  RunManifest m;
  m.config = {{"command", "simulate"}, {"scenario", a.scenario},       {"groups", spec.group_sizes.empty() ? spec.groups : spec.group_sizes.size()},
              {"reps", a.reps},        {"objective", to_string(kind)}, {"mc_samples", a.mc_samples},
              {"grid_points", a.grid_points}};
  m.seeds = {{"master", a.seed}};
  m.timestamp = utc_timestamp();
  record_digest(m, fits_path);
  record_digest(m, summary_path);
  m.timings_seconds["total"] = clock.seconds();
  m.timings_seconds["fit_mean"] = rep.wall_seconds_mean;
  write_manifest(fs::path(a.out) / "manifest.json", m);

  std::cout << "scenario " << a.scenario << ", " << rep.n_reps << " reps, " << rep.failures << " failed, "
            << rep.not_converged << " not converged\n";
  std::ifstream echo(summary_path);
  std::cout << echo.rdbuf();
  return 0;
}

struct SurfaceArgs {
  std::string scenario = "A", objective = "auto", axes = "0,1", fixed, out;
  std::vector<std::string> ranges;
  std::optional<std::size_t> groups;
  std::size_t grid_points = 0;
  std::uint64_t seed = 0;
};

int run_surface(const SurfaceArgs& a) {
  Clock clock;
  const ScenarioSpec spec = ScenarioSpec::preset(scenario_from_string(a.scenario), a.groups);
  const ObjectiveKind kind = a.objective == "auto" ? spec.default_objective() : objective_kind_from_string(a.objective);
  const Vector axes = parse_list(a.axes);
  require(axes.size() == 2, "--axes expects two parameter indices, e.g. 0,1");
  require(a.ranges.size() == 1 || a.ranges.size() == 2, "--range must be given once or twice");
  const auto i1 = static_cast<std::size_t>(axes[0]);
  const auto i2 = static_cast<std::size_t>(axes[1]);
  const SurfaceAxis ax1 = parse_range(a.ranges[0], i1);
  const SurfaceAxis ax2 = parse_range(a.ranges.back(), i2);
  const Vector fixed = a.fixed.empty() ? spec.truth : parse_list(a.fixed);

  Rng rng(a.seed);
  const GeneratedScenario sc = generate_scenario(spec, rng);
  const IntegrationConfig int_cfg = integration_config(0, a.grid_points, 0);
  const Surface s = objective_surface(sc.data, spec.model(), kind, int_cfg, ax1, ax2, fixed);
  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_surface(out, s);

  RunManifest m;
  m.config = {{"command", "surface"}, {"scenario", a.scenario},       {"groups", sc.data.R()},
              {"axes", a.axes},        {"ranges", a.ranges},           {"fixed", fixed},
              {"objective", to_string(kind)}, {"grid_points", a.grid_points}};
  m.seeds = {{"data", a.seed}};
  m.timestamp = utc_timestamp();
  record_digest(m, out);
  m.timings_seconds["total"] = clock.seconds();
  fs::path manifest_path = out;
  manifest_path += ".manifest.json";
  write_manifest(manifest_path, m);
  std::cout << "min " << format_number(s.min_value) << " at (" << format_number(ax1.at(s.argmin_row)) << ", "
            << format_number(ax2.at(s.argmin_col)) << "); cells within 1% of min: "
            << format_number(s.fraction_near_min(0.01)) << '\n';
  return 0;
}

struct EvalArgs {
  std::string fit, data, schema, out;
};

int run_eval(const EvalArgs& a) {
  Clock clock;
  const ReadFitReport report = read_fit_report(a.fit);
  const TabularSchema schema = TabularSchema::load(a.schema);
  const LoadedTable table = read_csv(a.data, schema);
  for (const auto& d : table.diagnostics) std::cerr << "warning: " << d << '\n';
  const double r2 = r_squared_delta(table.data, report.alpha_hat, table.input_stds);
  std::cout << "rows: " << table.data.size() << "\nr2_delta: " << format_number(r2) << '\n';
  if (a.out.empty()) return 0;

  fs::create_directories(a.out);
  const fs::path eval_path = fs::path(a.out) / "eval.tsv";
  {
    std::ofstream out(eval_path);
    write_tsv_row(out, {"name", "value"});
    write_tsv_row(out, {"rows", std::to_string(table.data.size())});
    write_tsv_row(out, {"rows_dropped", std::to_string(table.rows_dropped)});
    write_tsv_row(out, {"r2_delta", format_number(r2)});
    if (!out) throw DataError("write to '" + eval_path.string() + "' failed");
  }
  RunManifest m;
  m.config = {{"command", "eval"}, {"fit", a.fit}, {"data", a.data}, {"schema", schema.to_json()}};
  m.timestamp = utc_timestamp();
  record_digest(m, eval_path);
  m.timings_seconds["total"] = clock.seconds();
  write_manifest(fs::path(a.out) / "manifest.json", m);
  return 0;
}

int run_make_analog(std::uint64_t seed, std::size_t rows, const std::string& out_path) {
  const fs::path out(out_path);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_table_csv(out, generate_worldbank_analog(seed, rows));
  RunManifest m;
  m.config = {{"command", "make-analog"}, {"rows", rows}};
  m.seeds = {{"data", seed}};
  m.timestamp = utc_timestamp();
  record_digest(m, out);
  fs::path manifest_path = out;
  manifest_path += ".manifest.json";
  write_manifest(manifest_path, m);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Errors-in-variables regression for partially unpaired data"};
  app.require_subcommand(1);
  const std::vector<std::string> objectives{"auto", "general", "gauss-line", "gauss-plane", "interval-line"};
  const std::vector<std::string> scenarios{"A", "B", "C", "D", "plane", "plane-switched", "cubic"};

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "Fit an affine model to a CSV table, grouped by a key column");
  fit_cmd->add_option("--data", fa.data, "CSV file with a header row")->required();
  fit_cmd->add_option("--schema", fa.schema, "JSON schema naming columns and error stds")->required();
  fit_cmd->add_option("--objective", fa.objective, "Objective form")->check(CLI::IsMember(objectives));
  fit_cmd->add_option("--group-size", fa.group_size, "Rows per group after sorting by the key")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--key-column", fa.key_column, "Grouping key column (overrides the schema)");
  fit_cmd->add_option("--n-test", fa.n_test, "Held-out rows; 0 disables the split");
  fit_cmd->add_option("--mc-samples", fa.mc_samples, "Use Monte Carlo integration with this many samples");
  fit_cmd->add_option("--grid-points", fa.grid_points, "Quadrature points per dimension (0 = default)");
  fit_cmd->add_option("--restarts", fa.restarts, "Optimizer restarts");
  fit_cmd->add_option("--max-iters", fa.max_iters, "Optimizer iteration cap")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--seed", fa.seed, "Master seed");
  fit_cmd->add_option("--out", fa.out, "Output directory")->required();

  SimArgs sa;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a seeded replication study of a simulation scenario");
  sim_cmd->add_option("--scenario", sa.scenario, "Scenario name")->check(CLI::IsMember(scenarios));
  sim_cmd->add_option("--groups", sa.groups, "Number of groups R");
  sim_cmd->add_option("--reps", sa.reps, "Replications")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--objective", sa.objective, "Objective form")->check(CLI::IsMember(objectives));
  sim_cmd->add_option("--mc-samples", sa.mc_samples, "Use Monte Carlo integration with this many samples");
  sim_cmd->add_option("--grid-points", sa.grid_points, "Quadrature points per dimension (0 = default)");
  sim_cmd->add_option("--seed", sa.seed, "Master seed");
  sim_cmd->add_option("--out", sa.out, "Output directory")->required();

  SurfaceArgs ua;
  auto* surf_cmd = app.add_subcommand("surface", "Evaluate the objective on a two-parameter grid");
  surf_cmd->add_option("--scenario", ua.scenario, "Scenario name")->check(CLI::IsMember(scenarios));
  surf_cmd->add_option("--groups", ua.groups, "Number of groups R");
  surf_cmd->add_option("--axes", ua.axes, "Two parameter indices, e.g. 0,1");
  surf_cmd->add_option("--range", ua.ranges, "lo:hi:n per axis (once for both)")->required();
  surf_cmd->add_option("--fixed", ua.fixed, "Comma-separated values for the other parameters (default: truth)");
  surf_cmd->add_option("--objective", ua.objective, "Objective form")->check(CLI::IsMember(objectives));
  surf_cmd->add_option("--grid-points", ua.grid_points, "Quadrature points per dimension (0 = default)");
  surf_cmd->add_option("--seed", ua.seed, "Data seed");
  surf_cmd->add_option("--out", ua.out, "Output file")->required();

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Recompute R^2_delta of a saved fit on a CSV table");
  eval_cmd->add_option("--fit", ea.fit, "Fit report (report.txt or report.txt.tsv)")->required();
  eval_cmd->add_option("--data", ea.data, "CSV file")->required();
  eval_cmd->add_option("--schema", ea.schema, "JSON schema")->required();
  eval_cmd->add_option("--out", ea.out, "Optional output directory for eval.tsv and a manifest");

  std::uint64_t analog_seed = 192;
  std::size_t analog_rows = 192;
  std::string analog_out;
  auto* analog_cmd = app.add_subcommand("make-analog", "Write the synthetic life-expectancy indicator table");
  analog_cmd->add_option("--seed", analog_seed, "Generator seed");
  analog_cmd->add_option("--rows", analog_rows, "Number of rows")->check(CLI::Range(2, 1000000));
  analog_cmd->add_option("--out", analog_out, "Output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (fit_cmd->parsed()) return run_fit(fa);
    if (sim_cmd->parsed()) return run_simulate(sa);
    if (surf_cmd->parsed()) return run_surface(ua);
    if (eval_cmd->parsed()) return run_eval(ea);
    if (analog_cmd->parsed()) return run_make_analog(analog_seed, analog_rows, analog_out);
  } catch (const ContractViolation& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}
