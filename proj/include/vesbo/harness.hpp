#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vesbo/acquisition.hpp"
#include "vesbo/benchmarks.hpp"
#include "vesbo/gp_model.hpp"

namespace vesbo {

// Configuration of one experiment: a benchmark optimized by one
// acquisition over repeated seeds.
struct ExperimentConfig {
  std::string benchmark = "branin";
  AcquisitionSpec acquisition;
  int n_init = 20;
  int n_iters = 100;
  int n_repeats = 10;
  std::uint64_t seed_base = 0;
  // Mixed into every derived stream; lets two studies on the same
  // seed_base draw independent randomness (see ks_equivalence_study).
  std::uint64_t stream_tag = 0;

  int n_features = 1024;  // Fourier features per path bundle
  FitConfig gp_fit;
  OptimizerConfig optimizer;
  MaxSearchConfig max_search;

  std::string output_dir;  // empty: nothing written to disk
  int threads = 1;         // repeats dispatched concurrently when > 1
};

// Raised for malformed configurations (unknown benchmark or acquisition,
// non-positive counts, ...).  The CLI maps this to its own exit code.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct RegretRecord {
  int iteration = 0;       // 0-based over init + BO rows
  std::string phase;       // "init" or "bo"
  Eigen::VectorXd x;       // unit-cube coordinates
  double y = 0.0;
  double best_y = 0.0;
  double regret = 0.0;     // optimum - best_y, or -best_y if no optimum
  std::optional<double> k_star;
  std::optional<double> beta_star;
  std::optional<double> jensen_gap;
  double wallclock_s = 0.0;
};

struct RegretTrace {
  int repeat = 0;
  std::string benchmark;
  std::string acquisition;
  std::vector<RegretRecord> records;
  bool failed = false;
  std::string error;
};

// One BO run: space-filling initialization followed by n_iters rounds of
// fit / select / evaluate.  All randomness derives from (seed_base,
// stream_tag, repeat, purpose, iteration), so runs are reproducible and
// independent across repeats.  On error the partial trace is returned
// with `failed` set.
RegretTrace run_bo(const ExperimentConfig& config, int repeat);

struct AggregateRow {
  int iteration = 0;
  std::string phase;
  double mean = 0.0;
  double std = 0.0;
  int count = 0;
};

struct SuiteSummary {
  std::string benchmark;
  std::string acquisition;
  std::string metric;  // "log_regret" or "neg_best" (optimum unknown)
  std::vector<RegretTrace> traces;
  std::vector<AggregateRow> aggregate;
};

// Runs all repeats, aggregates the per-iteration metric (mean and sample
// standard deviation across repeats) and, when config.output_dir is set,
// writes one CSV per run, the aggregate CSV and a JSON sidecar recording
// the full configuration.
SuiteSummary run_suite(const ExperimentConfig& config);

struct KsRow {
  int iteration = 0;  // BO step, 1-based
  double statistic_d = 0.0;
  double p_value = 0.0;
  bool pass = false;
};

struct KsReport {
  std::vector<KsRow> rows;
  double passing_rate = 0.0;
};

// Distributional-equivalence study: runs the configured benchmark once
// with closed-form log-EI and once with the exponential variational
// acquisition (independent seeds per method), then applies a two-sample
// KS test to the observed y values across repeats at every BO iteration.
// A row passes at p >= alpha.  Writes ks_report.csv when output_dir is
// set.  Throws std::runtime_error if the completed-run counts differ.
KsReport ks_equivalence_study(const ExperimentConfig& config,
                              double alpha = 0.05);

// A labeled aggregate series for plotting.
struct PlotSeries {
  std::string label;
  std::string metric;
  std::vector<AggregateRow> rows;
};

// Renders mean curves with +/- one-standard-deviation bands to a
// standalone SVG file.  Throws std::invalid_argument when `series` is
// empty or contains no rows.
void emit_plot(const std::vector<PlotSeries>& series,
               const std::string& output_path);

// CSV helpers shared by the harness and the CLI.
void write_trace_csv(const RegretTrace& trace, int dim,
                     const std::string& path);
void write_aggregate_csv(const SuiteSummary& summary, const std::string& path);
PlotSeries read_aggregate_csv(const std::string& path);

}  // namespace vesbo
