#include "tap3/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace tap3 {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

double number(const std::string& s, const char* what) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) {
    throw ValidationError({what}, std::string("bad ") + what + " value '" + s + "'");
  }
  return v;
}

std::uint64_t unsigned_number(const std::string& s, const char* what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw ValidationError({what}, std::string("bad ") + what + " value '" + s + "'");
  }
  return std::stoull(s);
}

}  // namespace

std::vector<double> parse_pause_list(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    auto parts = split(text, ':');
    if (parts.size() != 3) throw ValidationError({"pause"}, "expected start:stop:step");
    const double a = number(parts[0], "pause"), b = number(parts[1], "pause"),
                 step = number(parts[2], "pause");
    if (!(step > 0) || b < a) throw ValidationError({"pause"}, "empty or unbounded pause range");
    for (long i = 0;; ++i) {
      const double v = a + static_cast<double>(i) * step;
      if (v > b + 1e-9) break;
      out.push_back(v);
    }
  } else {
    for (const auto& p : split(text, ',')) out.push_back(number(p, "pause"));
  }
  if (out.empty()) throw ValidationError({"pause"}, "no pause times");
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  if (auto dots = text.find(".."); dots != std::string::npos) {
    const auto a = unsigned_number(text.substr(0, dots), "seeds");
    const auto b = unsigned_number(text.substr(dots + 2), "seeds");
    if (b < a) throw ValidationError({"seeds"}, "empty seed range");
    for (auto s = a; s <= b; ++s) out.push_back(s);
  } else {
    for (const auto& p : split(text, ',')) out.push_back(unsigned_number(p, "seeds"));
  }
  if (out.empty()) throw ValidationError({"seeds"}, "no seeds");
  return out;
}

std::vector<ProtocolKind> parse_protocol_list(const std::string& text) {
  std::vector<ProtocolKind> out;
  for (const auto& p : split(text, ',')) {
    auto k = parse_protocol(p);
    if (!k) throw ValidationError({"protocols"}, "unknown protocol '" + p + "'");
    out.push_back(*k);
  }
  if (out.empty()) throw ValidationError({"protocols"}, "no protocols");
  return out;
}

SweepResult run_sweep(const SweepSpec& spec, const SimParams& params, unsigned threads) {
  if (spec.pause_times.empty() || spec.protocols.empty() || spec.seeds.empty()) {
    throw ValidationError({"sweep"}, "sweep lists must be non-empty");
  }
  struct Job {
    std::size_t point;
    std::size_t seed_index;
    ScenarioConfig config;
  };
  SweepResult result;
  std::vector<Job> jobs;
  for (auto protocol : spec.protocols) {
    for (double pause : spec.pause_times) {
      SweepPoint point;
      point.protocol = protocol;
      point.pause_time = pause;
      point.seeds.resize(spec.seeds.size());
      for (std::size_t s = 0; s < spec.seeds.size(); ++s) {
        ScenarioConfig c = spec.base;
        c.protocol = protocol;
        c.pause_time = pause;
        c.rng_seed = spec.seeds[s];
        validate(c);
        jobs.push_back(Job{result.points.size(), s, c});
      }
      result.points.push_back(std::move(point));
    }
  }

  const auto started = std::chrono::steady_clock::now();
  std::vector<RunResult> runs(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        RunOptions opt;
        opt.params = params;
        runs[i] = run_scenario(jobs[i].config, opt);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    SweepPoint& p = result.points[jobs[i].point];
    p.seeds[jobs[i].seed_index] = runs[i].metrics;
    p.privacy_leaks += runs[i].privacy_leaks;
    p.verdicts += runs[i].verdicts;
    const DetectorScore& d = runs[i].detector;
    p.detector.clean += d.clean;
    p.detector.clean_flagged += d.clean_flagged;
    p.detector.forged += d.forged;
    p.detector.forged_flagged += d.forged_flagged;
    p.detector.strong += d.strong;
    p.detector.strong_flagged += d.strong_flagged;
  }
  for (auto& p : result.points) p.average = average_reports(p.seeds);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  std::string out = metrics_csv_header() + "\n";
  for (const auto& p : result.points) {
    for (const auto& r : p.seeds) out += metrics_csv_row(r) + "\n";
    out += metrics_csv_row(p.average) + "\n";
  }
  return out;
}

namespace {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

std::string svg_chart(const std::string& title, const std::string& ylabel,
                      const std::vector<Series>& series) {
  const double w = 640, h = 400, left = 70, right = 150, top = 40, bottom = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    for (auto [x, y] : s.points) {
      xmin = std::min(xmin, x), xmax = std::max(xmax, x);
      ymin = std::min(ymin, y), ymax = std::max(ymax, y);
    }
  }
  if (xmin > xmax) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double pad = (ymax - ymin) * 0.1;
  ymin -= pad, ymax += pad;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (w - left - right); };
  auto py = [&](double y) { return h - bottom - (y - ymin) / (ymax - ymin) * (h - top - bottom); };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ostringstream o;
  char buf[256];
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
    << "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", left,
                h - bottom, w - right, h - bottom);
  o << buf;
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", left,
                top, left, h - bottom);
  o << buf;
  for (int i = 0; i <= 4; ++i) {
    const double y = ymin + (ymax - ymin) * i / 4.0;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.3g</text>\n", left - 6,
                  py(y) + 4, y);
    o << buf;
  }
  if (!series.empty()) {
    for (auto [x, _] : series.front().points) {
      std::snprintf(buf, sizeof buf,
                    "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%g</text>\n", px(x),
                    h - bottom + 18, x);
      o << buf;
    }
  }
  o << "<text x=\"" << (left + w - right) / 2 << "\" y=\"" << h - 10
    << "\" text-anchor=\"middle\">pause time (s)</text>\n";
  o << "<text x=\"16\" y=\"" << h / 2 << "\" transform=\"rotate(-90 16 " << h / 2
    << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = colors[i % 5];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (auto [x, y] : series[i].points) {
      std::snprintf(buf, sizeof buf, "%.1f,%.1f ", px(x), py(y));
      o << buf;
    }
    o << "\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" fill=\"%s\">%s</text>\n", w - right + 10,
                  top + 20.0 * static_cast<double>(i + 1), color, series[i].name.c_str());
    o << buf;
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace

void write_plots(const SweepResult& result, const std::string& dir) {
  std::filesystem::create_directories(dir);
  struct Metric {
    const char* file;
    const char* title;
    const char* ylabel;
    double (*get)(const MetricsReport&, bool&);
  };
  const Metric metrics[] = {
      {"pdr.svg", "Packet delivery ratio", "PDR (%)",
       [](const MetricsReport& r, bool& ok) { ok = r.pdr.has_value(); return r.pdr.value_or(0); }},
      {"delay.svg", "Average end-to-end delay", "delay (s)",
       [](const MetricsReport& r, bool& ok) {
         ok = r.avg_delay.has_value();
         return r.avg_delay.value_or(0);
       }},
      {"overhead.svg", "Routing overhead", "control tx per delivered packet",
       [](const MetricsReport& r, bool& ok) {
         ok = std::isfinite(r.overhead);
         return r.overhead;
       }},
  };
  for (const auto& m : metrics) {
    std::vector<Series> series;
    for (const auto& p : result.points) {
      const std::string name = to_string(p.protocol);
      if (series.empty() || series.back().name != name) series.push_back(Series{name, {}});
      bool ok = false;
      const double v = m.get(p.average, ok);
      if (ok) series.back().points.emplace_back(p.pause_time, v);
    }
    std::ofstream f(std::filesystem::path(dir) / m.file);
    if (!f) throw std::runtime_error(std::string("cannot write plot ") + m.file);
    f << svg_chart(m.title, m.ylabel, series);
  }
}

}  // namespace tap3
