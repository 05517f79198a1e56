// File outputs: CSV tables, static SVG line plots and the run manifest.
#pragma once

#include "aim/metrics.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace aim {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// A NaN y value breaks the line.
struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  bool markers = false;
};

std::string render_svg(const LinePlot& plot);

/// One row per vehicle per step.
void write_traces_csv(const std::filesystem::path& file, const RunResult& run, double sampling_time);
/// One row per position bin per traffic class.
void write_metrics_csv(const std::filesystem::path& file, const MetricsReport& metrics);
/// One row per point crossing and per monitor violation.
void write_events_csv(const std::filesystem::path& file, const RunResult& run, double sampling_time);
void write_text(const std::filesystem::path& file, const std::string& text);

/// The collision point most scripted vehicles pass, lowest index on ties.
int focus_point(const RunResult& run);

/// Speed, input and distance to `point` against time, one series per vehicle.
std::vector<std::pair<std::string, LinePlot>> time_plots(const RunResult& run, double sampling_time, int point);
LinePlot speed_ratio_plot(const MetricsReport& metrics);

struct Manifest {
  std::string command;
  std::filesystem::path config;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path out_dir;
  std::vector<std::pair<std::string, std::string>> summary;
  std::vector<std::filesystem::path> files; // relative to out_dir
  double wall_seconds = 0.0;
};

/// Key: value lines; written after every listed file exists.
std::string render_manifest(const Manifest& m);

} // namespace aim
