// aim run-scenario --config F --out DIR [--seed N]
// aim sweep-density --config F --rates R1,R2,.. --seeds S1,S2,.. --out DIR
//
// Exit codes: 0 no violations, 1 violations recorded, 2 missing input file,
// 3 invalid scenario or arguments.
#include "aim/config.hpp"
#include "aim/report.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

namespace fs = std::filesystem;
using namespace aim;

namespace {

struct Emitted {
  RunResult run;
  MetricsReport metrics;
  std::vector<fs::path> files;
};

std::string crossing_order(const RunResult& run, int point) {
  std::string out;
  for (const auto& e : run.crossings)
    if (e.point == point) out += fmt::format("{}{}", out.empty() ? "" : " ", e.id.value);
  return out;
}

// Runs one scenario and writes its tables and plots into dir.
Emitted run_into(const ScenarioConfig& config, const fs::path& dir) {
  fs::create_directories(dir);
  Emitted e{run(config), {}, {}};
  e.metrics = compute_metrics(e.run);
  const double ts = config.step.sampling_time;

  write_traces_csv(dir / "traces.csv", e.run, ts);
  write_metrics_csv(dir / "metrics.csv", e.metrics);
  write_events_csv(dir / "events.csv", e.run, ts);
  e.files = {"traces.csv", "metrics.csv", "events.csv"};
  if (config.mode == ScenarioMode::Scripted)
    for (const auto& [name, plot] : time_plots(e.run, ts, focus_point(e.run))) {
      write_text(dir / name, render_svg(plot));
      e.files.emplace_back(name);
    }
  write_text(dir / "speed_ratio.svg", render_svg(speed_ratio_plot(e.metrics)));
  e.files.emplace_back("speed_ratio.svg");
  return e;
}

std::vector<std::pair<std::string, std::string>> summary_of(const Emitted& e) {
  std::vector<std::pair<std::string, std::string>> s{
      {"ticks", std::to_string(e.run.ticks)},
      {"spawned", std::to_string(e.run.spawned)},
      {"despawned", std::to_string(e.run.despawned)},
      {"density", fmt::format("{:.4f}", e.metrics.density)},
      {"violations", std::to_string(e.run.violations.size())},
      {"fallback_events", std::to_string(e.metrics.fallback_events)},
      {"clamp_events", std::to_string(e.metrics.clamp_events)},
      {"min_conflict_distance",
       e.metrics.min_conflict_distance ? fmt::format("{:.4f}", *e.metrics.min_conflict_distance) : "none"},
  };
  for (const auto& c : e.metrics.curves)
    if (const auto a = c.average()) s.emplace_back(fmt::format("mean_speed_ratio_{}", to_string(c.traffic_class)),
                                                   fmt::format("{:.4f}", *a));
  return s;
}

int cmd_run(const fs::path& config_path, const fs::path& out, std::optional<std::uint64_t> seed) {
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioConfig config = load_config(config_path);
  if (seed) config.seed = *seed;
  const auto e = run_into(config, out);

  Manifest m{"run-scenario", config_path, {config.seed}, out, summary_of(e), e.files, 0.0};
  const int point = focus_point(e.run);
  m.summary.emplace_back(fmt::format("crossing_order_point_{}", point), crossing_order(e.run, point));
  m.files.emplace_back("manifest.txt");
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text(out / "manifest.txt", render_manifest(m));

  fmt::print("{} steps, {} vehicles, density {:.3f}, {} violations\n", e.run.ticks, e.run.spawned,
             e.metrics.density, e.run.violations.size());
  fmt::print("crossing order through point {}: {}\n", point, crossing_order(e.run, point));
  return e.run.violations.empty() ? 0 : 1;
}

int cmd_sweep(const fs::path& config_path, const std::vector<double>& rates, const std::vector<std::uint64_t>& seeds,
              const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const ScenarioConfig base = load_config(config_path);
  if (base.mode != ScenarioMode::Generated) throw ConfigError(config_path.string() + ": sweep needs mode: generated");
  fs::create_directories(out);

  std::string table = "rate,seed,density,mean_speed_ratio,mean_speed_ratio_straight,mean_speed_ratio_right,"
                      "spawned,violations,fallback_events\n";
  std::vector<fs::path> files;
  std::map<TrafficClass, std::vector<SpeedRatioCurve>> curves;
  std::vector<std::pair<double, double>> points;
  std::size_t violations = 0;
  for (double rate : rates)
    for (auto seed : seeds) {
      ScenarioConfig c = base;
      c.spawn.rate = rate;
      c.seed = seed;
      c.validate();
      const auto name = fmt::format("rate_{}_seed_{}", rate, seed);
      const auto e = run_into(c, out / name);
      for (const auto& f : e.files) files.push_back(fs::path(name) / f);
      std::map<TrafficClass, std::string> avg;
      for (const auto& cv : e.metrics.curves) {
        curves[cv.traffic_class].push_back(cv);
        if (const auto a = cv.average()) avg[cv.traffic_class] = fmt::format("{:.6f}", *a);
      }
      table += fmt::format("{},{},{:.6f},{},{},{},{},{},{}\n", rate, seed, e.metrics.density, avg[TrafficClass::All],
                           avg[TrafficClass::Straight], avg[TrafficClass::Right], e.run.spawned,
                           e.run.violations.size(), e.metrics.fallback_events);
      if (const auto a = e.metrics.curves.back().average()) points.emplace_back(e.metrics.density, *a);
      violations += e.run.violations.size();
      fmt::print("rate {} seed {}: density {:.3f}, {} violations\n", rate, seed, e.metrics.density,
                 e.run.violations.size());
    }

  write_text(out / "sweep.csv", table);
  MetricsReport pooled;
  for (TrafficClass c : kTrafficClasses) pooled.curves.push_back(pool(curves[c]));
  write_metrics_csv(out / "metrics.csv", pooled);
  write_text(out / "speed_ratio.svg", render_svg(speed_ratio_plot(pooled)));
  std::sort(points.begin(), points.end());
  LinePlot sweep{"Mean speed ratio against density", "density [vehicles]", "mean speed ratio",
                 {Series{"runs", points}}, true};
  write_text(out / "sweep.svg", render_svg(sweep));
  for (const char* f : {"sweep.csv", "metrics.csv", "speed_ratio.svg", "sweep.svg", "manifest.txt"}) files.emplace_back(f);

  Manifest m{"sweep-density", config_path, seeds, out, {{"runs", std::to_string(rates.size() * seeds.size())},
                                                        {"violations", std::to_string(violations)}},
             files, 0.0};
  std::string r;
  for (double x : rates) r += fmt::format("{}{}", r.empty() ? "" : " ", x);
  m.summary.emplace_back("rates", r);
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text(out / "manifest.txt", render_manifest(m));
  return violations == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Auction-based intersection crossing with per-vehicle MPC"};
  app.require_subcommand(1);

  fs::path config, out;
  std::optional<std::uint64_t> seed;
  auto* run_cmd = app.add_subcommand("run-scenario", "Run one scenario and write traces, metrics and plots");
  run_cmd->add_option("--config", config, "scenario file")->required();
  run_cmd->add_option("--out", out, "output directory")->required();
  run_cmd->add_option("--seed", seed, "overrides the scenario seed");

  std::vector<double> rates;
  std::vector<std::uint64_t> seeds;
  auto* sweep_cmd = app.add_subcommand("sweep-density", "Run a generated scenario over spawn rates and seeds");
  sweep_cmd->add_option("--config", config, "scenario file")->required();
  sweep_cmd->add_option("--rates", rates, "spawn probabilities per approach and step")->required()->delimiter(',');
  sweep_cmd->add_option("--seeds", seeds, "random seeds")->required()->delimiter(',');
  sweep_cmd->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    if (*run_cmd) return cmd_run(config, out, seed);
    return cmd_sweep(config, rates, seeds, out);
  } catch (const MissingFile& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
