#include "aim/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace aim {

namespace {

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string cell(const std::optional<double>& v) { return v ? fmt::format("{:.9g}", *v) : std::string(); }

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

double nice_step(double range) {
  if (!(range > 0.0)) return 1.0;
  const double raw = range / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  return mag * (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0);
}

struct Axis {
  double lo = 0.0, hi = 1.0, step = 0.2;
};

Axis make_axis(double lo, double hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  Axis a;
  a.step = nice_step(hi - lo);
  a.lo = std::floor(lo / a.step) * a.step;
  a.hi = std::ceil(hi / a.step) * a.step;
  return a;
}

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  return out;
}

} // namespace

std::string render_svg(const LinePlot& plot) {
  constexpr double W = 760, H = 440, L = 70, R = 170, T = 40, B = 55;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : plot.series)
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  const Axis ax = make_axis(x0, x1), ay = make_axis(y0, y1);
  auto px = [&](double x) { return L + (x - ax.lo) / (ax.hi - ax.lo) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ay.lo) / (ay.hi - ay.lo) * (H - T - B); };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      W, H);
  svg += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n", (L + W - R) / 2,
                     escape(plot.title));

  for (double x = ax.lo; x <= ax.hi + 1e-9 * ax.step; x += ax.step) {
    svg += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"#ddd\"/>\n", px(x), T, H - B);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{:g}</text>\n", px(x), H - B + 16,
                       std::abs(x) < 1e-12 ? 0.0 : x);
  }
  for (double y = ay.lo; y <= ay.hi + 1e-9 * ay.step; y += ay.step) {
    svg += fmt::format("<line x1=\"{}\" y1=\"{:.2f}\" x2=\"{}\" y2=\"{:.2f}\" stroke=\"#ddd\"/>\n", L, py(y), W - R, py(y));
    svg += fmt::format("<text x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\">{:g}</text>\n", L - 6, py(y) + 4,
                       std::abs(y) < 1e-12 ? 0.0 : y);
  }
  svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n", L, T,
                     W - L - R, H - T - B);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (L + W - R) / 2, H - 12,
                     escape(plot.x_label));
  svg += fmt::format("<text x=\"16\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0})\">{1}</text>\n",
                     (T + H - B) / 2, escape(plot.y_label));

  for (std::size_t i = 0; i < plot.series.size(); ++i) {
    const auto& s = plot.series[i];
    const char* color = kPalette[i % kPalette.size()];
    std::string pts;
    auto flush = [&] {
      if (!pts.empty())
        svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\" points=\"{}\"/>\n", color, pts);
      pts.clear();
    };
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(y)) {
        flush();
        continue;
      }
      pts += fmt::format("{}{:.2f},{:.2f}", pts.empty() ? "" : " ", px(x), py(y));
      if (plot.markers)
        svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", px(x), py(y), color);
    }
    flush();
    const double ly = T + 14 + 18 * static_cast<double>(i);
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"3\"/>\n",
                       W - R + 12, ly, W - R + 34, color);
    svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", W - R + 40, ly + 4, escape(s.name));
  }
  svg += "</svg>\n";
  return svg;
}

void write_traces_csv(const std::filesystem::path& file, const RunResult& run, double sampling_time) {
  auto out = open_out(file);
  out << "k,t,id,approach,maneuver,p,v,u,v_ref,speed_ratio,bid_h1,bid_h2,bid_h3,bid_h4,"
         "dist_h1,dist_h2,dist_h3,dist_h4,higher,clamped,fallback\n";
  for (const auto& r : run.traces) {
    const Path& path = run.world.path(r.path);
    out << fmt::format("{},{:.9g},{},{},{},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}", r.k,
                       static_cast<double>(r.k) * sampling_time, r.id.value, to_string(path.approach()),
                       to_string(path.maneuver()), r.p, r.v, r.u, r.v_ref, speed_ratio(r.v, r.v_ref));
    for (const auto& b : r.bids) out << ',' << cell(b);
    for (const auto& d : r.distance) out << ',' << cell(d);
    out << fmt::format(",{},{},{}\n", r.higher, int(r.clamped), int(r.fallback));
  }
}

void write_metrics_csv(const std::filesystem::path& file, const MetricsReport& metrics) {
  auto out = open_out(file);
  out << "class,bin_start,bin_end,samples,speed_ratio_mean\n";
  for (const auto& c : metrics.curves)
    for (std::size_t i = 0; i < c.mean.size(); ++i)
      out << fmt::format("{},{:.9g},{:.9g},{},{}\n", to_string(c.traffic_class), static_cast<double>(i) * c.bin_width,
                         static_cast<double>(i + 1) * c.bin_width, c.samples[i], cell(c.mean[i]));
}

void write_events_csv(const std::filesystem::path& file, const RunResult& run, double sampling_time) {
  auto out = open_out(file);
  out << "k,t,event,id,other,point,distance\n";
  for (const auto& e : run.crossings)
    out << fmt::format("{},{:.9g},crossed,{},,{},\n", e.k, static_cast<double>(e.k) * sampling_time, e.id.value,
                       e.point);
  for (const auto& v : run.violations)
    out << fmt::format("{},{:.9g},violation,{},{},,{:.9g}\n", v.k, static_cast<double>(v.k) * sampling_time,
                       v.a.value, v.b.value, v.distance);
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  auto out = open_out(file);
  out << text;
}

int focus_point(const RunResult& run) {
  std::map<int, std::set<std::uint32_t>> users;
  for (const auto& r : run.traces)
    for (std::size_t h = 0; h < r.distance.size(); ++h)
      if (r.distance[h]) users[static_cast<int>(h) + 1].insert(r.id.value);
  int best = 1;
  std::size_t most = 0;
  for (const auto& [h, ids] : users)
    if (ids.size() > most) {
      best = h;
      most = ids.size();
    }
  return best;
}

std::vector<std::pair<std::string, LinePlot>> time_plots(const RunResult& run, double sampling_time, int point) {
  std::map<std::uint32_t, Series> speed, input, distance;
  const auto h = static_cast<std::size_t>(point - 1);
  for (const auto& r : run.traces) {
    const double t = static_cast<double>(r.k) * sampling_time;
    const auto name = fmt::format("vehicle {}", r.id.value);
    speed[r.id.value].name = input[r.id.value].name = distance[r.id.value].name = name;
    speed[r.id.value].points.emplace_back(t, r.v * 3.6);
    input[r.id.value].points.emplace_back(t, r.u);
    distance[r.id.value].points.emplace_back(t, r.distance.at(h) ? *r.distance[h]
                                                                 : std::numeric_limits<double>::quiet_NaN());
  }
  auto collect = [](std::map<std::uint32_t, Series>& m) {
    std::vector<Series> v;
    for (auto& [id, s] : m) v.push_back(std::move(s));
    return v;
  };
  return {
      {"speed.svg", {"Speed", "time [s]", "speed [km/h]", collect(speed)}},
      {"acceleration.svg", {"Acceleration", "time [s]", "input [m/s^2]", collect(input)}},
      {"distance.svg",
       {fmt::format("Distance to collision point {}", point), "time [s]", "distance [m]", collect(distance)}},
  };
}

LinePlot speed_ratio_plot(const MetricsReport& metrics) {
  LinePlot p{"Traffic speed ratio", "position along path [m]", "mean speed ratio", {}};
  for (const auto& c : metrics.curves) {
    Series s{std::string(to_string(c.traffic_class)), {}};
    for (std::size_t i = 0; i < c.mean.size(); ++i)
      s.points.emplace_back(c.bin_center(i), c.mean[i] ? *c.mean[i] : std::numeric_limits<double>::quiet_NaN());
    p.series.push_back(std::move(s));
  }
  return p;
}

std::string render_manifest(const Manifest& m) {
  std::string out = fmt::format("tool: aim {}\ncommand: {}\nconfig: {}\n", kToolVersion, m.command, m.config.string());
  out += "seeds:";
  for (auto s : m.seeds) out += fmt::format(" {}", s);
  out += fmt::format("\nout_dir: {}\nwall_seconds: {:.3f}\n", m.out_dir.string(), m.wall_seconds);
  for (const auto& [k, v] : m.summary) out += fmt::format("{}: {}\n", k, v);
  out += "files:\n";
  for (const auto& f : m.files) out += fmt::format("  {}\n", f.generic_string());
  return out;
}

} // namespace aim
