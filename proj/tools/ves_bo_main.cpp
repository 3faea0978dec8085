#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vesbo/harness.hpp"

namespace {

namespace fs = std::filesystem;

void add_experiment_options(CLI::App* cmd, vesbo::ExperimentConfig* config,
                            std::string* acquisition) {
  cmd->add_option("--benchmark", config->benchmark,
                  "benchmark name (see list-benchmarks)")
      ->capture_default_str();
  cmd->add_option("--acquisition", *acquisition,
                  "log_ei, mes, ves_exp or ves_gamma")
      ->capture_default_str();
  cmd->add_option("--n-init", config->n_init, "initial random evaluations")
      ->capture_default_str();
  cmd->add_option("--n-iters", config->n_iters, "BO iterations")
      ->capture_default_str();
  cmd->add_option("--repeats", config->n_repeats, "independent repeats")
      ->capture_default_str();
  cmd->add_option("--seed", config->seed_base, "base seed")
      ->capture_default_str();
  cmd->add_option("--mc-samples", config->acquisition.mc_samples,
                  "posterior sample paths per iteration")
      ->capture_default_str();
  cmd->add_option("--inner-iters", config->acquisition.inner_iters,
                  "alternating rounds of the variational inner loop")
      ->capture_default_str();
  cmd->add_option("--reg-lambda",
                  config->acquisition.regularization_lambda,
                  "shape-equation regularizer weight")
      ->capture_default_str();
  cmd->add_flag("--varpro", config->acquisition.use_varpro,
                "use the profiled single-stage objective");
  cmd->add_option("--n-features", config->n_features,
                  "Fourier features per path bundle")
      ->capture_default_str();
  cmd->add_option("--threads", config->threads,
                  "repeats run concurrently")
      ->capture_default_str();
  cmd->add_option("--out", config->output_dir,
                  "output directory for CSV/JSON artifacts");
}

int run_experiment(const vesbo::ExperimentConfig& config) {
  const vesbo::SuiteSummary summary = vesbo::run_suite(config);
  int failed = 0;
  for (const vesbo::RegretTrace& trace : summary.traces)
    if (trace.failed) {
      ++failed;
      std::fprintf(stderr, "repeat %d failed: %s\n", trace.repeat,
                   trace.error.c_str());
    }
  const vesbo::AggregateRow& last = summary.aggregate.back();
  std::printf("%s / %s: %d/%zu repeats completed\n",
              summary.benchmark.c_str(), summary.acquisition.c_str(),
              static_cast<int>(summary.traces.size()) - failed,
              summary.traces.size());
  std::printf("final %s: %.6g +/- %.6g over %d repeats\n",
              summary.metric.c_str(), last.mean, last.std, last.count);
  if (!config.output_dir.empty()) {
    vesbo::PlotSeries series;
    series.label = summary.benchmark + " " + summary.acquisition;
    series.metric = summary.metric;
    series.rows = summary.aggregate;
    const std::string svg = config.output_dir + "/regret_" +
                            summary.benchmark + "_" + summary.acquisition +
                            ".svg";
    vesbo::emit_plot({series}, svg);
    std::printf("artifacts written to %s\n", config.output_dir.c_str());
  }
  return failed == 0 ? 0 : 3;
}

int run_ks(const vesbo::ExperimentConfig& config, double alpha) {
  const vesbo::KsReport report = vesbo::ks_equivalence_study(config, alpha);
  std::printf("iteration  D          p          pass\n");
  for (const vesbo::KsRow& row : report.rows)
    std::printf("%9d  %.6f  %.6f  %s\n", row.iteration, row.statistic_d,
                row.p_value, row.pass ? "yes" : "no");
  std::printf("passing rate at alpha=%g: %.2f%%\n", alpha,
              100.0 * report.passing_rate);
  return 0;
}

int run_plot(const std::string& in_dir,
             const std::vector<std::string>& files,
             const std::string& out_path) {
  std::vector<std::string> paths = files;
  if (!in_dir.empty()) {
    for (const auto& entry : fs::directory_iterator(in_dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("aggregate_", 0) == 0 &&
          entry.path().extension() == ".csv")
        paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
  }
  if (paths.empty())
    throw vesbo::ConfigError("plot: no aggregate CSV files found");
  std::vector<vesbo::PlotSeries> series;
  for (const std::string& path : paths)
    series.push_back(vesbo::read_aggregate_csv(path));
  vesbo::emit_plot(series, out_path);
  std::printf("wrote %s (%zu series)\n", out_path.c_str(), series.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian optimization with variational entropy search"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from an INI file");

  vesbo::ExperimentConfig config;
  std::string acquisition = "log_ei";
  double alpha = 0.05;
  std::string plot_in, plot_out = "regret.svg";
  std::vector<std::string> plot_files;

  CLI::App* run_cmd =
      app.add_subcommand("run", "run a BO experiment suite");
  add_experiment_options(run_cmd, &config, &acquisition);

  CLI::App* ks_cmd = app.add_subcommand(
      "ks-compare",
      "KS equivalence study: closed-form log-EI vs exponential VES");
  add_experiment_options(ks_cmd, &config, &acquisition);
  ks_cmd->add_option("--alpha", alpha, "significance level")
      ->capture_default_str();

  CLI::App* plot_cmd =
      app.add_subcommand("plot", "render aggregate CSVs to SVG");
  plot_cmd->add_option("--in", plot_in,
                       "directory scanned for aggregate_*.csv");
  plot_cmd->add_option("files", plot_files, "explicit aggregate CSV files");
  plot_cmd->add_option("--out", plot_out, "output SVG path")
      ->capture_default_str();

  CLI::App* list_cmd =
      app.add_subcommand("list-benchmarks", "print known benchmark names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    config.acquisition.kind = vesbo::parse_acquisition(acquisition);
    if (run_cmd->parsed()) return run_experiment(config);
    if (ks_cmd->parsed()) return run_ks(config, alpha);
    if (plot_cmd->parsed()) return run_plot(plot_in, plot_files, plot_out);
    if (list_cmd->parsed()) {
      for (const std::string& name : vesbo::benchmark_names())
        std::printf("%s\n", name.c_str());
      std::printf(
          "patterns: ackley<d>, michalewicz<d>, griewank<d>, levy<d>, "
          "gp<d>-l<lengthscale>[-s<seed>]\n");
      return 0;
    }
    return 2;
  } catch (const vesbo::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
