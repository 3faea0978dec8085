#include "vesbo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "vesbo/posterior_paths.hpp"
#include "vesbo/rng.hpp"
#include "vesbo/special_math.hpp"

namespace vesbo {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::uint64_t derive_seed(const ExperimentConfig& config, std::uint64_t repeat,
                          std::uint64_t purpose, std::uint64_t iter = 0) {
  return RngStream::keyed(config.seed_base, config.stream_tag, repeat,
                          (purpose << 32) | iter)
      .next_u64();
}

void validate_config(const ExperimentConfig& config) {
  if (config.n_init < 2)
    throw ConfigError("config: n_init must be at least 2");
  if (config.n_iters < 0) throw ConfigError("config: n_iters must be >= 0");
  if (config.n_repeats < 1)
    throw ConfigError("config: n_repeats must be >= 1");
  if (config.acquisition.mc_samples < 1)
    throw ConfigError("config: mc_samples must be >= 1");
  if (config.acquisition.inner_iters < 1)
    throw ConfigError("config: inner_iters must be >= 1");
  if (!(config.acquisition.clamp_floor > 0.0))
    throw ConfigError("config: clamp_floor must be positive");
  if (config.acquisition.regularization_lambda < 0.0)
    throw ConfigError("config: regularization_lambda must be >= 0");
  if (config.n_features < 1)
    throw ConfigError("config: n_features must be >= 1");
  if (config.threads < 1) throw ConfigError("config: threads must be >= 1");
}

Benchmark load_benchmark(const std::string& name) {
  try {
    return make_benchmark(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

std::string run_stem(const SuiteSummary& summary) {
  return summary.benchmark + "_" + summary.acquisition;
}

void write_error_file(const std::string& path, const RegretTrace& trace) {
  std::ofstream out(path);
  out << "repeat " << trace.repeat << " failed after "
      << trace.records.size() << " records: " << trace.error << "\n";
}

json config_to_json(const ExperimentConfig& config,
                    const std::string& canonical_benchmark) {
  json j;
  j["benchmark"] = canonical_benchmark;
  j["benchmark_requested"] = config.benchmark;
  j["acquisition"] = {
      {"kind", acquisition_name(config.acquisition.kind)},
      {"mc_samples", config.acquisition.mc_samples},
      {"inner_iters", config.acquisition.inner_iters},
      {"regularization_lambda", config.acquisition.regularization_lambda},
      {"clamp_floor", config.acquisition.clamp_floor},
      {"early_stop_scale", config.acquisition.early_stop_scale},
      {"k_min", config.acquisition.k_min},
      {"k_max", config.acquisition.k_max},
      {"use_varpro", config.acquisition.use_varpro}};
  j["n_init"] = config.n_init;
  j["n_iters"] = config.n_iters;
  j["n_repeats"] = config.n_repeats;
  j["seed_base"] = config.seed_base;
  j["stream_tag"] = config.stream_tag;
  j["n_features"] = config.n_features;
  j["gp_fit"] = {{"n_starts", config.gp_fit.n_starts},
                 {"max_iters", config.gp_fit.max_iters},
                 {"grad_tol", config.gp_fit.grad_tol},
                 {"lengthscale_median_factor",
                  config.gp_fit.lengthscale_median_factor},
                 {"lengthscale_log_std", config.gp_fit.lengthscale_log_std},
                 {"signal_median", config.gp_fit.signal_median},
                 {"signal_log_std", config.gp_fit.signal_log_std},
                 {"jitter_factor", config.gp_fit.jitter_factor},
                 {"jitter_max_factor", config.gp_fit.jitter_max_factor}};
  j["optimizer"] = {{"n_raw", config.optimizer.n_raw},
                    {"n_starts", config.optimizer.n_starts},
                    {"max_local_steps", config.optimizer.max_local_steps},
                    {"step_tol", config.optimizer.step_tol},
                    {"fd_step", config.optimizer.fd_step}};
  j["max_search"] = {{"n_candidates", config.max_search.n_candidates},
                     {"refine_steps", config.max_search.refine_steps},
                     {"include_training", config.max_search.include_training},
                     {"extra_candidate_rows",
                      config.max_search.extra_candidates.rows()}};
  j["threads"] = config.threads;
  return j;
}

}  // namespace

RegretTrace run_bo(const ExperimentConfig& config, int repeat) {
  validate_config(config);
  const Benchmark bench = load_benchmark(config.benchmark);
  const int d = bench.dim();
  const std::optional<double> optimum = bench.optimum();

  RegretTrace trace;
  trace.repeat = repeat;
  trace.benchmark = bench.name();
  trace.acquisition = acquisition_name(config.acquisition.kind);

  ObservationSet obs(d);
  double best = -std::numeric_limits<double>::infinity();
  const bool variational =
      config.acquisition.kind == AcquisitionKind::kVesExp ||
      config.acquisition.kind == AcquisitionKind::kVesGamma;

  auto push_record = [&](int iteration, const char* phase,
                         const Eigen::VectorXd& x, double y,
                         const SelectionResult* sel, double wallclock) {
    best = std::max(best, y);
    RegretRecord rec;
    rec.iteration = iteration;
    rec.phase = phase;
    rec.x = x;
    rec.y = y;
    rec.best_y = best;
    rec.regret = optimum.has_value() ? *optimum - best : -best;
    if (sel != nullptr && variational) {
      rec.k_star = sel->params.k;
      rec.beta_star = sel->params.beta;
      rec.jensen_gap = sel->moments.jensen_gap;
    }
    rec.wallclock_s = wallclock;
    trace.records.push_back(std::move(rec));
  };

  try {
    RngStream init_rng = RngStream(
        derive_seed(config, repeat, stream_purpose::kInitDesign));
    for (int i = 0; i < config.n_init; ++i) {
      const auto tic = std::chrono::steady_clock::now();
      Eigen::VectorXd u;
      int attempts = 0;
      do {
        u = init_rng.uniform_vector(d);
        if (++attempts > 1000)
          throw std::runtime_error("run_bo: cannot place initial design");
      } while (obs.contains_near(u));
      const double y = bench.evaluate_unit(u);
      obs.append(u, y);
      push_record(i, "init", u, y, nullptr, elapsed_s(tic));
    }

    for (int t = 1; t <= config.n_iters; ++t) {
      const auto tic = std::chrono::steady_clock::now();
      FitConfig fit = config.gp_fit;
      fit.seed = derive_seed(config, repeat, stream_purpose::kGpFit, t);
      const GpPosterior gp = fit_map(obs, fit);

      OptimizerConfig optimizer = config.optimizer;
      optimizer.seed =
          derive_seed(config, repeat, stream_purpose::kAcqOptimizer, t);
      MaxSearchConfig search = config.max_search;
      search.seed =
          derive_seed(config, repeat, stream_purpose::kMaxSearch, t);

      // Closed-form log-EI needs no posterior paths; everything else does.
      std::optional<PathBundle> bundle;
      if (config.acquisition.kind != AcquisitionKind::kLogEi)
        bundle.emplace(gp, config.acquisition.mc_samples, config.n_features,
                       derive_seed(config, repeat, stream_purpose::kPaths, t));

      const SelectionResult sel =
          select_next(gp, bundle.has_value() ? &*bundle : nullptr,
                      config.acquisition, optimizer, search);

      Eigen::VectorXd x = sel.x;
      if (obs.contains_near(x)) {
        // Re-proposing an already-evaluated point stalls a noiseless BO
        // loop; fall back to a fresh uniform draw.
        RngStream fallback = RngStream(derive_seed(
            config, repeat, stream_purpose::kDuplicateFallback, t));
        int attempts = 0;
        do {
          x = fallback.uniform_vector(d);
          if (++attempts > 1000)
            throw std::runtime_error("run_bo: cannot avoid duplicates");
        } while (obs.contains_near(x));
      }
      const double y = bench.evaluate_unit(x);
      obs.append(x, y);
      push_record(config.n_init + t - 1, "bo", x, y, &sel, elapsed_s(tic));
    }
  } catch (const std::exception& e) {
    trace.failed = true;
    trace.error = e.what();
  }
  return trace;
}

void write_trace_csv(const RegretTrace& trace, int dim,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "repeat,iteration,phase";
  for (int j = 0; j < dim; ++j) out << ",x" << j;
  out << ",y,best_y,regret,k_star,beta_star,jensen_gap,wallclock_s\n";
  for (const RegretRecord& rec : trace.records) {
    out << trace.repeat << ',' << rec.iteration << ',' << rec.phase;
    for (int j = 0; j < dim; ++j) out << ',' << format_double(rec.x[j]);
    out << ',' << format_double(rec.y) << ',' << format_double(rec.best_y)
        << ',' << format_double(rec.regret);
    out << ',' << (rec.k_star ? format_double(*rec.k_star) : "");
    out << ',' << (rec.beta_star ? format_double(*rec.beta_star) : "");
    out << ',' << (rec.jensen_gap ? format_double(*rec.jensen_gap) : "");
    out << ',' << format_double(rec.wallclock_s) << '\n';
  }
}

void write_aggregate_csv(const SuiteSummary& summary,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "iteration,phase,metric,mean,std,count\n";
  for (const AggregateRow& row : summary.aggregate)
    out << row.iteration << ',' << row.phase << ',' << summary.metric << ','
        << format_double(row.mean) << ',' << format_double(row.std) << ','
        << row.count << '\n';
}

PlotSeries read_aggregate_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  PlotSeries series;
  std::string stem = fs::path(path).stem().string();
  if (stem.rfind("aggregate_", 0) == 0) stem = stem.substr(10);
  for (char& c : stem)
    if (c == '_') c = ' ';
  series.label = stem;

  std::string line;
  if (!std::getline(in, line) ||
      line != "iteration,phase,metric,mean,std,count")
    throw std::runtime_error("unexpected aggregate header in " + path);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    AggregateRow row;
    std::getline(ss, field, ',');
    row.iteration = std::stoi(field);
    std::getline(ss, row.phase, ',');
    std::getline(ss, field, ',');
    series.metric = field;
    std::getline(ss, field, ',');
    row.mean = std::stod(field);
    std::getline(ss, field, ',');
    row.std = std::stod(field);
    std::getline(ss, field, ',');
    row.count = std::stoi(field);
    series.rows.push_back(std::move(row));
  }
  if (series.rows.empty())
    throw std::runtime_error("no rows in aggregate " + path);
  return series;
}

SuiteSummary run_suite(const ExperimentConfig& config) {
  validate_config(config);
  const Benchmark bench = load_benchmark(config.benchmark);
  const int d = bench.dim();

  SuiteSummary summary;
  summary.benchmark = bench.name();
  summary.acquisition = acquisition_name(config.acquisition.kind);
  summary.metric = bench.optimum().has_value() ? "log_regret" : "neg_best";
  summary.traces.resize(config.n_repeats);

  if (config.threads > 1) {
    std::atomic<int> next{0};
    const int n_workers = std::min(config.threads, config.n_repeats);
    std::vector<std::thread> workers;
    workers.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w)
      workers.emplace_back([&] {
        for (int r = next.fetch_add(1); r < config.n_repeats;
             r = next.fetch_add(1))
          summary.traces[r] = run_bo(config, r);
      });
    for (auto& worker : workers) worker.join();
  } else {
    for (int r = 0; r < config.n_repeats; ++r)
      summary.traces[r] = run_bo(config, r);
  }

  // Aggregate the per-iteration metric over completed repeats.  Simple
  // regret is plotted on a log scale, so zero regret is floored far below
  // anything observable.
  std::vector<const RegretTrace*> completed;
  for (const RegretTrace& trace : summary.traces)
    if (!trace.failed) completed.push_back(&trace);
  if (completed.empty())
    throw std::runtime_error("run_suite: all repeats failed: " +
                             summary.traces.front().error);

  const int n_records = config.n_init + config.n_iters;
  const bool log_metric = summary.metric == "log_regret";
  for (int i = 0; i < n_records; ++i) {
    AggregateRow row;
    row.iteration = i;
    row.phase = completed.front()->records[i].phase;
    row.count = static_cast<int>(completed.size());
    double sum = 0.0, sum_sq = 0.0;
    for (const RegretTrace* trace : completed) {
      const double raw = trace->records[i].regret;
      const double v = log_metric ? std::log(std::max(raw, 1e-15)) : raw;
      sum += v;
      sum_sq += v * v;
    }
    const double n = static_cast<double>(completed.size());
    row.mean = sum / n;
    row.std = n > 1.0
                  ? std::sqrt(std::max(
                        (sum_sq - sum * sum / n) / (n - 1.0), 0.0))
                  : 0.0;
    summary.aggregate.push_back(std::move(row));
  }

  if (!config.output_dir.empty()) {
    fs::create_directories(config.output_dir);
    const std::string stem = run_stem(summary);
    for (const RegretTrace& trace : summary.traces) {
      const std::string base = config.output_dir + "/run_" + stem + "_rep" +
                               std::to_string(trace.repeat);
      write_trace_csv(trace, d, base + ".csv");
      if (trace.failed) write_error_file(base + ".error.txt", trace);
    }
    write_aggregate_csv(summary,
                        config.output_dir + "/aggregate_" + stem + ".csv");
    std::ofstream meta(config.output_dir + "/meta_" + stem + ".json");
    meta << config_to_json(config, summary.benchmark).dump(2) << "\n";
  }
  return summary;
}

KsReport ks_equivalence_study(const ExperimentConfig& config, double alpha) {
  validate_config(config);
  if (config.n_iters < 1)
    throw ConfigError("ks_equivalence_study: needs n_iters >= 1");

  // Independent randomness per method: same seed base, distinct tags.
  ExperimentConfig ei_config = config;
  ei_config.acquisition.kind = AcquisitionKind::kLogEi;
  ei_config.stream_tag =
      RngStream::keyed(config.stream_tag, 0x1001).next_u64();
  ExperimentConfig ves_config = config;
  ves_config.acquisition.kind = AcquisitionKind::kVesExp;
  ves_config.stream_tag =
      RngStream::keyed(config.stream_tag, 0x1002).next_u64();
  if (!config.output_dir.empty()) {
    ei_config.output_dir = config.output_dir + "/log_ei";
    ves_config.output_dir = config.output_dir + "/ves_exp";
  }

  const SuiteSummary ei = run_suite(ei_config);
  const SuiteSummary ves = run_suite(ves_config);

  std::vector<const RegretTrace*> ei_done, ves_done;
  for (const RegretTrace& t : ei.traces)
    if (!t.failed) ei_done.push_back(&t);
  for (const RegretTrace& t : ves.traces)
    if (!t.failed) ves_done.push_back(&t);
  if (ei_done.size() != ves_done.size()) {
    std::ostringstream msg;
    msg << "ks_equivalence_study: completed-run counts differ ("
        << ei_done.size() << " log_ei vs " << ves_done.size()
        << " ves_exp)";
    for (const RegretTrace& t : ei.traces)
      if (t.failed) msg << "; log_ei rep " << t.repeat << ": " << t.error;
    for (const RegretTrace& t : ves.traces)
      if (t.failed) msg << "; ves_exp rep " << t.repeat << ": " << t.error;
    throw std::runtime_error(msg.str());
  }

  KsReport report;
  int passed = 0;
  for (int t = 1; t <= config.n_iters; ++t) {
    const int idx = config.n_init + t - 1;
    std::vector<double> ys_ei, ys_ves;
    for (const RegretTrace* trace : ei_done)
      ys_ei.push_back(trace->records[idx].y);
    for (const RegretTrace* trace : ves_done)
      ys_ves.push_back(trace->records[idx].y);
    const KsResult ks = ks_two_sample(ys_ei, ys_ves);
    KsRow row;
    row.iteration = t;
    row.statistic_d = ks.statistic_d;
    row.p_value = ks.p_value;
    row.pass = ks.p_value >= alpha;
    if (row.pass) ++passed;
    report.rows.push_back(row);
  }
  report.passing_rate =
      static_cast<double>(passed) / static_cast<double>(config.n_iters);

  if (!config.output_dir.empty()) {
    std::ofstream out(config.output_dir + "/ks_report.csv");
    if (!out)
      throw std::runtime_error("cannot open ks_report.csv for writing");
    out << "iteration,D,p,pass\n";
    for (const KsRow& row : report.rows)
      out << row.iteration << ',' << format_double(row.statistic_d) << ','
          << format_double(row.p_value) << ',' << (row.pass ? 1 : 0) << '\n';
  }
  return report;
}

}  // namespace vesbo
