#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "herd/config.hpp"
#include "herd/engine.hpp"
#include "herd/error.hpp"
#include "herd/hil_server.hpp"
#include "herd/ledger.hpp"
#include "herd/metrics.hpp"
#include "herd/network.hpp"

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop{false};

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw herd::Error(fmt::format("cannot write {}", path.string()));
  out << text;
}

int cmd_run(const fs::path& config_path, std::optional<std::uint64_t> seed, const std::optional<fs::path>& ledger_out,
            const std::optional<fs::path>& series_out) {
  auto config = herd::load_config(config_path);
  if (seed) config.seed = *seed;
  const auto result = herd::run(config);
  if (series_out) write_file(*series_out, herd::series_csv(result.series));
  if (ledger_out) write_file(*ledger_out, herd::ledger_dump_json(result.ledger));
  const auto& last = result.series.back();
  fmt::print("steps={} agents={} checkpoints={} final_price={} final_error={}\n", result.series.size(), result.n_agents,
             result.ledger.size(), last.price, last.error);
  return 0;
}

int cmd_serve(const fs::path& config_path, const std::string& listen, const std::optional<std::string>& web_listen,
              const std::optional<fs::path>& static_dir, int tick_ms, const std::optional<fs::path>& ledger_out) {
  const auto config = herd::load_config(config_path);
  herd::hil::ServeOptions options;
  options.listen = listen;
  options.web_listen = web_listen;
  options.static_dir = static_dir;
  options.tick = std::chrono::milliseconds(tick_ms);
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  const auto result = herd::hil::serve(
      config, options,
      [](const herd::hil::Server& s) {
        fmt::print("listening tcp={} web={}\n", s.port(), s.web_port());
        std::fflush(stdout);
      },
      &g_stop);
  if (ledger_out) write_file(*ledger_out, herd::ledger_dump_json(result.ledger));
  fmt::print("steps={} checkpoints={}\n", result.series.size(), result.ledger.size());
  return 0;
}

int cmd_netgen(int rows, int cols, double spacing, const fs::path& out, double lat, double lon) {
  const auto net = herd::generate_grid(rows, cols, spacing, {lat, lon});
  herd::save_network(net, out);
  fmt::print("nodes={} edges={}\n", net.nodes().size(), net.edges().size());
  return 0;
}

int cmd_experiment(const std::string& kind, const fs::path& config_path, const fs::path& out_dir) {
  const auto config = herd::load_config(config_path);
  fs::create_directories(out_dir);
  if (kind == "controller") {
    const auto exp = herd::run_controller_experiment(config, config.experiment.runs);
    write_file(out_dir / "controller_series.csv", herd::controller_series_csv(exp));
    const std::size_t window = std::min<std::size_t>(500, exp.series.size());
    fmt::print("runs={} tail_mean_abs_error={:.3f} tail_max_std_on={:.3f}\n", exp.runs.size(),
               herd::tail_mean_abs_error(exp, window), herd::tail_max_std_on(exp, window));
    return 0;
  }
  herd::BenchmarkReport report;
  int code = 0;
  try {
    report = herd::run_metrics_experiment(config, config.experiment.cycles);
  } catch (const herd::ExperimentAborted& e) {
    std::cerr << "experiment aborted: " << e.what() << "\n";
    report = e.partial();
    code = 1;
  }
  write_file(out_dir / "runs.csv", herd::runs_csv(report));
  write_file(out_dir / "report.json", herd::report_json(report));
  fmt::print("cycles={} A1={}({}) A2={} A3_r={} A4={} pass=[{},{},{},{}]\n", report.runs.size(), report.a1.mean,
             report.a1_outliers, report.a2.mean, report.correlation_a3.value_or(0.0), report.a4.mean, report.pass_a1,
             report.pass_a2, report.pass_a3, report.pass_a4);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pedestrian route-incentivisation simulator"};
  app.require_subcommand(1);

  fs::path config_path;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> ledger_out, series_out;
  auto* run = app.add_subcommand("run", "Run a simulation to completion");
  run->add_option("--config", config_path, "Config JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--ledger-out", ledger_out, "Write the ledger dump here");
  run->add_option("--series-out", series_out, "Write the series CSV here");

  std::string listen = "127.0.0.1:7878";
  std::optional<std::string> web_listen;
  std::optional<fs::path> static_dir;
  int tick_ms = 1000;
  auto* serve = app.add_subcommand("serve", "Run with live participants, one step per tick");
  serve->add_option("--config", config_path, "Config JSON")->required()->check(CLI::ExistingFile);
  serve->add_option("--listen", listen, "TCP address for line-delimited JSON clients");
  serve->add_option("--web-listen", web_listen, "HTTP/WebSocket address (default: listen port + 1)");
  serve->add_option("--static", static_dir, "Directory served over HTTP")->check(CLI::ExistingDirectory);
  serve->add_option("--tick-ms", tick_ms, "Wall-clock milliseconds per step")->check(CLI::PositiveNumber);
  serve->add_option("--ledger-out", ledger_out, "Write the ledger dump here on exit");

  int rows = 6, cols = 6;
  double spacing = 50.0, lat = 51.4974, lon = -0.1776;
  fs::path out;
  auto* netgen = app.add_subcommand("netgen", "Write a grid network");
  netgen->add_option("--rows", rows)->required();
  netgen->add_option("--cols", cols)->required();
  netgen->add_option("--spacing", spacing, "Metres between nodes")->required();
  netgen->add_option("--lat", lat, "Geographic origin latitude");
  netgen->add_option("--lon", lon, "Geographic origin longitude");
  netgen->add_option("--out", out)->required();

  std::string kind;
  auto* experiment = app.add_subcommand("experiment", "Run a batch experiment");
  experiment->add_option("kind", kind)->required()->check(CLI::IsMember({"controller", "metrics"}));
  experiment->add_option("--config", config_path, "Config JSON")->required()->check(CLI::ExistingFile);
  experiment->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, seed, ledger_out, series_out);
    if (*serve) return cmd_serve(config_path, listen, web_listen, static_dir, tick_ms, ledger_out);
    if (*netgen) return cmd_netgen(rows, cols, spacing, out, lat, lon);
    if (*experiment) return cmd_experiment(kind, config_path, out);
  } catch (const herd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
