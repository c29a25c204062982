#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "herd/config.hpp"
#include "herd/engine.hpp"
#include "herd/error.hpp"

namespace herd {

/// Table-style run metrics.
struct RunMetrics {
  std::optional<std::int64_t> time_to_first_incentivised;  // A1, steps
  double sim_density = 0.0;                                 // A2, agents per pedestrian edge
  double incentivised_density = 0.0;                        // A3 input, mean agents-on per pedestrian edge
  double incentivised_ratio = 0.0;                          // A4, mean percent of active agents committed
};

[[nodiscard]] RunMetrics compute_metrics(const SimResult& result, const RoadNetwork& net);

/// Sample Pearson correlation. Throws PreconditionError on length mismatch
/// or fewer than 2 points, DegenerateSeries on a constant input.
[[nodiscard]] double pearson(std::span<const double> xs, std::span<const double> ys);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 below two values
  std::size_t count = 0;
};

[[nodiscard]] Summary summarize(std::span<const double> values);

struct CycleSpec {
  std::uint64_t seed = 0;
  std::size_t n_agents = 0;
};

struct CycleResult {
  CycleSpec spec;
  RunMetrics metrics;
};

/// Benchmark thresholds.
inline constexpr double kDensityThreshold = 0.001;    // A2: mean density above
inline constexpr double kCorrelationThreshold = 0.2;  // A3: Pearson r above
inline constexpr double kRatioThreshold = 10.0;       // A4: mean percent above
inline constexpr double kA1SigmaBand = 2.0;           // A1: all values within this many std of the mean

struct BenchmarkReport {
  std::vector<CycleResult> runs;
  Summary a1;  // over runs that reached an incentivised route
  Summary a2;
  Summary a3_input;
  Summary a4;
  std::size_t a1_missing = 0;   // runs where nobody reached an incentivised route
  std::size_t a1_outliers = 0;  // runs with A1 outside the 2-sigma band
  std::optional<double> correlation_a3;
  bool pass_a1 = false;
  bool pass_a2 = false;
  bool pass_a3 = false;
  bool pass_a4 = false;
};

/// Aggregates and grades completed cycles.
[[nodiscard]] BenchmarkReport grade_benchmarks(std::vector<CycleResult> runs);

/// Seeds and population sizes for `cycles` metric runs.
[[nodiscard]] std::vector<CycleSpec> plan_metrics_cycles(const SimConfig& base, std::size_t cycles);

/// Thrown when a cycle fails; carries the report over the cycles that finished.
class ExperimentAborted : public Error {
 public:
  ExperimentAborted(const std::string& what, BenchmarkReport partial) : Error(what), partial_(std::move(partial)) {}
  [[nodiscard]] const BenchmarkReport& partial() const { return partial_; }

 private:
  BenchmarkReport partial_;
};

[[nodiscard]] BenchmarkReport run_metrics_cycles(const SimConfig& base, std::span<const CycleSpec> cycles);
[[nodiscard]] BenchmarkReport run_metrics_experiment(const SimConfig& base, std::size_t cycles = 125);

struct ControllerSeriesRow {
  std::int64_t step = 0;
  double mean_pi = 0.0, std_pi = 0.0;
  double mean_e = 0.0, std_e = 0.0;
  double mean_on = 0.0, std_on = 0.0;
};

struct ControllerExperiment {
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<SeriesRow>> runs;
  std::vector<ControllerSeriesRow> series;
};

[[nodiscard]] ControllerExperiment run_controller_experiment(const SimConfig& base, std::size_t runs = 10);

/// Mean of |error| over all runs and the last `window` steps.
[[nodiscard]] double tail_mean_abs_error(const ControllerExperiment& exp, std::size_t window);
/// Largest cross-run std of agents_on within the last `window` steps.
[[nodiscard]] double tail_max_std_on(const ControllerExperiment& exp, std::size_t window);

[[nodiscard]] std::string runs_csv(const BenchmarkReport& report);
[[nodiscard]] std::vector<CycleResult> parse_runs_csv(std::string_view text);
[[nodiscard]] std::string controller_series_csv(const ControllerExperiment& exp);
[[nodiscard]] std::string report_json(const BenchmarkReport& report);

}  // namespace herd
