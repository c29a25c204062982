#include "herd/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/core.h>
#include <json.hpp>

namespace herd {

namespace {

constexpr std::uint64_t kPopulationStream = 0x504f50;  // "POP"

/// Runs fn(i) for i in [0, count) on a small worker pool. The first
/// exception is captured and rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, count == 0 ? 1 : count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::scoped_lock lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  }
  if (failure) std::rethrow_exception(failure);
}

std::string fmt_optional(const std::optional<std::int64_t>& v) { return v ? fmt::format("{}", *v) : std::string{}; }

}  // namespace

RunMetrics compute_metrics(const SimResult& result, const RoadNetwork& net) {
  RunMetrics m;
  const auto edges = static_cast<double>(net.pedestrian_edge_indices().size());
  for (const auto& e : result.events) {
    if (e.kind == EventKind::EnteredIncentivised) {
      m.time_to_first_incentivised = e.step;
      break;
    }
  }
  m.sim_density = edges > 0 ? static_cast<double>(result.n_agents) / edges : 0.0;

  double on_sum = 0.0;
  double ratio_sum = 0.0;
  std::size_t ratio_steps = 0;
  for (const auto& row : result.series) {
    on_sum += static_cast<double>(row.agents_on);
    if (row.active > 0) {
      ratio_sum += 100.0 * static_cast<double>(row.agents_on) / static_cast<double>(row.active);
      ++ratio_steps;
    }
  }
  if (!result.series.empty() && edges > 0) {
    m.incentivised_density = on_sum / static_cast<double>(result.series.size()) / edges;
  }
  if (ratio_steps > 0) m.incentivised_ratio = ratio_sum / static_cast<double>(ratio_steps);
  return m;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw PreconditionError("pearson: series lengths differ");
  if (xs.size() < 2) throw PreconditionError("pearson: need at least two points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateSeries("pearson: constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return s;
}

BenchmarkReport grade_benchmarks(std::vector<CycleResult> runs) {
  BenchmarkReport r;
  r.runs = std::move(runs);
  std::vector<double> a1, a2, a3, a4;
  for (const auto& c : r.runs) {
    if (c.metrics.time_to_first_incentivised) {
      a1.push_back(static_cast<double>(*c.metrics.time_to_first_incentivised));
    } else {
      ++r.a1_missing;
    }
    a2.push_back(c.metrics.sim_density);
    a3.push_back(c.metrics.incentivised_density);
    a4.push_back(c.metrics.incentivised_ratio);
  }
  r.a1 = summarize(a1);
  r.a2 = summarize(a2);
  r.a3_input = summarize(a3);
  r.a4 = summarize(a4);

  for (double v : a1) {
    if (std::abs(v - r.a1.mean) > kA1SigmaBand * r.a1.std) ++r.a1_outliers;
  }
  r.pass_a1 = !a1.empty() && r.a1_outliers == 0;
  r.pass_a2 = r.a2.count > 0 && r.a2.mean > kDensityThreshold;
  if (a3.size() >= 2) {
    try {
      r.correlation_a3 = pearson(a3, a2);
    } catch (const DegenerateSeries&) {
      r.correlation_a3.reset();
    }
  }
  r.pass_a3 = r.correlation_a3 && *r.correlation_a3 > kCorrelationThreshold;
  r.pass_a4 = r.a4.count > 0 && r.a4.mean > kRatioThreshold;
  return r;
}

std::vector<CycleSpec> plan_metrics_cycles(const SimConfig& base, std::size_t cycles) {
  RandomSource population(mix_seed(base.seed, kPopulationStream));
  std::vector<CycleSpec> plan;
  plan.reserve(cycles);
  for (std::size_t c = 0; c < cycles; ++c) {
    const auto n = population.between(static_cast<std::int64_t>(base.experiment.agents_min),
                                      static_cast<std::int64_t>(base.experiment.agents_max));
    plan.push_back({mix_seed(base.seed, c), static_cast<std::size_t>(n)});
  }
  return plan;
}

BenchmarkReport run_metrics_cycles(const SimConfig& base, std::span<const CycleSpec> cycles) {
  const auto net = build_network(base);
  std::vector<std::optional<CycleResult>> slots(cycles.size());
  std::string failure;
  try {
    parallel_for(cycles.size(), [&](std::size_t i) {
      SimConfig cfg = base;
      cfg.seed = cycles[i].seed;
      cfg.n_agents = cycles[i].n_agents;
      cfg.n_steps = base.experiment.steps;
      cfg.run_id = fmt::format("{}-cycle-{}", base.run_id, i);
      Simulation sim(cfg, net);
      while (!sim.finished()) sim.step();
      slots[i] = CycleResult{cycles[i], compute_metrics(sim.result(), *net)};
    });
  } catch (const std::exception& ex) {
    failure = ex.what();
  }
  std::vector<CycleResult> done;
  for (auto& s : slots) {
    if (s) done.push_back(std::move(*s));
  }
  auto report = grade_benchmarks(std::move(done));
  if (!failure.empty()) throw ExperimentAborted(fmt::format("metrics experiment aborted: {}", failure), std::move(report));
  return report;
}

BenchmarkReport run_metrics_experiment(const SimConfig& base, std::size_t cycles) {
  if (cycles < 2) throw PreconditionError("metrics experiment needs at least 2 cycles");
  const auto plan = plan_metrics_cycles(base, cycles);
  return run_metrics_cycles(base, plan);
}

ControllerExperiment run_controller_experiment(const SimConfig& base, std::size_t runs) {
  if (runs == 0) throw PreconditionError("controller experiment needs at least one run");
  const auto net = build_network(base);
  ControllerExperiment exp;
  exp.runs.resize(runs);
  for (std::size_t r = 0; r < runs; ++r) exp.seeds.push_back(mix_seed(base.seed, r));
  parallel_for(runs, [&](std::size_t r) {
    SimConfig cfg = base;
    cfg.seed = exp.seeds[r];
    cfg.run_id = fmt::format("{}-run-{}", base.run_id, r);
    Simulation sim(cfg, net);
    while (!sim.finished()) sim.step();
    exp.runs[r] = sim.state().series;
  });

  const std::size_t steps = exp.runs.front().size();
  exp.series.reserve(steps);
  std::vector<double> pi(runs), e(runs), on(runs);
  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t r = 0; r < runs; ++r) {
      pi[r] = exp.runs[r][k].price;
      e[r] = static_cast<double>(exp.runs[r][k].error);
      on[r] = static_cast<double>(exp.runs[r][k].agents_on);
    }
    const auto sp = summarize(pi), se = summarize(e), so = summarize(on);
    exp.series.push_back({exp.runs.front()[k].step, sp.mean, sp.std, se.mean, se.std, so.mean, so.std});
  }
  return exp;
}

double tail_mean_abs_error(const ControllerExperiment& exp, std::size_t window) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& run : exp.runs) {
    const std::size_t from = run.size() > window ? run.size() - window : 0;
    for (std::size_t k = from; k < run.size(); ++k) {
      sum += std::abs(static_cast<double>(run[k].error));
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

double tail_max_std_on(const ControllerExperiment& exp, std::size_t window) {
  double worst = 0.0;
  const std::size_t from = exp.series.size() > window ? exp.series.size() - window : 0;
  for (std::size_t k = from; k < exp.series.size(); ++k) worst = std::max(worst, exp.series[k].std_on);
  return worst;
}

std::string runs_csv(const BenchmarkReport& report) {
  std::string out = "seed,n_agents,A1,A2,A3_input,A4\n";
  for (const auto& c : report.runs) {
    out += fmt::format("{},{},{},{},{},{}\n", c.spec.seed, c.spec.n_agents, fmt_optional(c.metrics.time_to_first_incentivised),
                       c.metrics.sim_density, c.metrics.incentivised_density, c.metrics.incentivised_ratio);
  }
  return out;
}

std::vector<CycleResult> parse_runs_csv(std::string_view text) {
  std::vector<CycleResult> out;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) return out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != 6) throw ParseError(fmt::format("runs.csv: expected 6 columns in \"{}\"", line));
    try {
      CycleResult c;
      c.spec.seed = std::stoull(cells[0]);
      c.spec.n_agents = std::stoull(cells[1]);
      if (!cells[2].empty()) c.metrics.time_to_first_incentivised = std::stoll(cells[2]);
      c.metrics.sim_density = std::stod(cells[3]);
      c.metrics.incentivised_density = std::stod(cells[4]);
      c.metrics.incentivised_ratio = std::stod(cells[5]);
      out.push_back(c);
    } catch (const std::logic_error&) {
      throw ParseError(fmt::format("runs.csv: bad number in \"{}\"", line));
    }
  }
  return out;
}

std::string controller_series_csv(const ControllerExperiment& exp) {
  std::string out = "step,mean_pi,std_pi,mean_e,std_e,mean_on,std_on\n";
  for (const auto& r : exp.series) {
    out += fmt::format("{},{},{},{},{},{},{}\n", r.step, r.mean_pi, r.std_pi, r.mean_e, r.std_e, r.mean_on, r.std_on);
  }
  return out;
}

std::string report_json(const BenchmarkReport& report) {
  using nlohmann::json;
  auto summary = [](const Summary& s) { return json{{"mean", s.mean}, {"std", s.std}, {"count", s.count}}; };
  json doc;
  doc["cycles"] = report.runs.size();
  doc["A1"] = summary(report.a1);
  doc["A1"]["missing"] = report.a1_missing;
  doc["A1"]["outliers"] = report.a1_outliers;
  doc["A2"] = summary(report.a2);
  doc["A3_input"] = summary(report.a3_input);
  doc["correlation_A3"] = report.correlation_a3 ? json(*report.correlation_a3) : json(nullptr);
  doc["A4"] = summary(report.a4);
  doc["pass"] = {{"A1", report.pass_a1}, {"A2", report.pass_a2}, {"A3", report.pass_a3}, {"A4", report.pass_a4}};
  auto& runs = doc["runs"] = json::array();
  for (const auto& c : report.runs) {
    const auto& m = c.metrics;
    runs.push_back({{"seed", c.spec.seed},
                    {"n_agents", c.spec.n_agents},
                    {"A1", m.time_to_first_incentivised ? json(*m.time_to_first_incentivised) : json(nullptr)},
                    {"A2", m.sim_density},
                    {"A3_input", m.incentivised_density},
                    {"A4", m.incentivised_ratio}});
  }
  return doc.dump(2);
}

}  // namespace herd
