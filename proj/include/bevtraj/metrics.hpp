#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bevtraj/detector.hpp"
#include "bevtraj/error.hpp"
#include "bevtraj/geometry.hpp"
#include "bevtraj/tracker.hpp"

namespace bevtraj {

inline constexpr std::array<const char*, 9> kMetricNames{
    "agent_size_m2", "min_center_dist_m", "traffic_density", "unknown_per_frame", "speed_rel",
    "accel_rel",     "min_edge_dist_m",   "ego_speed_at_green", "ego_speed_at_red"};

inline constexpr double kMpsToKmh = 3.6;

struct Histogram {
  std::vector<double> bin_edges;
  std::vector<double> densities;
  std::size_t n_samples = 0;  // samples inside the binned range
  std::size_t n_dropped = 0;  // samples outside it

  double total_mass() const {
    double m = 0;
    for (std::size_t i = 0; i < densities.size(); ++i) m += densities[i] * (bin_edges[i + 1] - bin_edges[i]);
    return m;
  }
};

/// Bins are [e_i, e_{i+1}); the last bin also takes its right edge.
inline Histogram histogram(const std::vector<double>& samples, const std::vector<double>& edges) {
  if (edges.size() < 2) throw Error(ErrorCode::EmptyBinSpec, "a histogram needs at least two bin edges");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw Error(ErrorCode::EmptyBinSpec, "bin edges must be strictly increasing");
  const std::size_t nb = edges.size() - 1;
  std::vector<std::size_t> counts(nb, 0);
  Histogram h;
  h.bin_edges = edges;
  for (double x : samples) {
    if (!(x >= edges.front() && x <= edges.back())) {
      ++h.n_dropped;
      continue;
    }
    std::size_t k = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin());
    k = std::min(k, nb) - 1;
    ++counts[k];
    ++h.n_samples;
  }
  h.densities.assign(nb, 0.0);
  if (h.n_samples > 0)
    for (std::size_t i = 0; i < nb; ++i)
      h.densities[i] = static_cast<double>(counts[i]) / (static_cast<double>(h.n_samples) * (edges[i + 1] - edges[i]));
  return h;
}

struct BinSpec {
  double lo = 0.0;
  double hi = 1.0;
  double width = 1.0;

  std::vector<double> edges() const {
    if (!(width > 0) || !(hi > lo)) throw Error(ErrorCode::EmptyBinSpec, "bin spec needs hi > lo and width > 0");
    const auto n = static_cast<long>(std::llround((hi - lo) / width));
    if (n < 1) throw Error(ErrorCode::EmptyBinSpec, "bin spec yields no bins");
    std::vector<double> e;
    for (long i = 0; i <= n; ++i) e.push_back(lo + static_cast<double>(i) * width);
    return e;
  }
};

using MetricBins = std::map<std::string, BinSpec>;

inline MetricBins default_metric_bins() {
  const BinSpec counts{-0.5, 20.5, 1.0};
  const BinSpec speed{-60.0, 60.0, 2.0};
  const BinSpec dist{0.0, 20.0, 0.5};
  return {{"agent_size_m2", {0.0, 30.0, 1.0}},
          {"min_center_dist_m", dist},
          {"traffic_density", counts},
          {"unknown_per_frame", counts},
          {"speed_rel", speed},
          {"accel_rel", {-6.0, 6.0, 0.25}},
          {"min_edge_dist_m", dist},
          {"ego_speed_at_green", speed},
          {"ego_speed_at_red", speed}};
}

// ---- sample extraction ----

inline std::vector<double> size_distribution(const std::vector<FrameDetections>& frames) {
  std::vector<double> out;
  for (const auto& f : frames)
    for (const auto& d : f)
      if (d.category != Category::unknown) out.push_back(d.area_m2);
  return out;
}

inline std::vector<double> min_center_distance(const std::vector<FrameDetections>& frames, const Scales& scales) {
  std::vector<double> out;
  for (const auto& f : frames) {
    std::optional<double> best;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (!is_vehicle(f[i].category)) continue;
      for (std::size_t j = i + 1; j < f.size(); ++j) {
        if (!is_vehicle(f[j].category)) continue;
        const double d = pixel_distance_m(f[i].centroid.row - f[j].centroid.row,
                                          f[i].centroid.col - f[j].centroid.col, scales);
        if (!best || d < *best) best = d;
      }
    }
    if (best) out.push_back(*best);
  }
  return out;
}

inline std::vector<double> traffic_density(const std::vector<FrameDetections>& frames) {
  std::vector<double> out;
  for (const auto& f : frames)
    out.push_back(static_cast<double>(
        std::count_if(f.begin(), f.end(), [](const auto& d) { return d.category != Category::unknown; })));
  return out;
}

inline std::vector<double> unknown_count(const std::vector<FrameDetections>& frames) {
  std::vector<double> out;
  for (const auto& f : frames)
    out.push_back(static_cast<double>(
        std::count_if(f.begin(), f.end(), [](const auto& d) { return d.category == Category::unknown; })));
  return out;
}

/// Pixels with at least one 4-neighbour outside the set. The closest pair
/// between two disjoint sets is always found among these.
inline std::vector<Pixel> boundary_pixels(const std::vector<Pixel>& pixels) {
  std::vector<Pixel> sorted = pixels;
  std::sort(sorted.begin(), sorted.end());
  auto has = [&](int r, int c) { return std::binary_search(sorted.begin(), sorted.end(), Pixel{r, c}); };
  std::vector<Pixel> out;
  for (const auto& p : sorted)
    if (!has(p.row - 1, p.col) || !has(p.row + 1, p.col) || !has(p.row, p.col - 1) || !has(p.row, p.col + 1))
      out.push_back(p);
  return out;
}

/// Smallest distance in meters between pixel centers of two sets.
inline double edge_distance_m(const std::vector<Pixel>& a, const std::vector<Pixel>& b, const Scales& scales) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : a)
    for (const auto& q : b) best = std::min(best, pixel_distance_m(p.row - q.row, p.col - q.col, scales));
  return best;
}

struct DynamicsSamples {
  std::vector<double> speed_rel_kmh;
  std::vector<double> accel_rel;
  std::vector<double> min_edge_dist_m;
};

inline DynamicsSamples dynamics_distributions(const std::vector<Track>& tracks, const Scales& scales) {
  DynamicsSamples out;
  std::map<int, std::vector<std::vector<Pixel>>> vehicles_by_frame;
  for (const auto& tr : tracks) {
    const bool kin = tr.speed_rel.size() == tr.detections.size();
    for (std::size_t i = 0; i < tr.detections.size(); ++i) {
      const auto& d = tr.detections[i];
      if (is_vehicle(d.category)) vehicles_by_frame[d.frame_index].push_back(boundary_pixels(d.pixels));
      if (kin && !tr.is_ego && tr.category == Category::agent) {
        out.speed_rel_kmh.push_back(tr.speed_rel[i] * kMpsToKmh);
        out.accel_rel.push_back(tr.accel_rel[i]);
      }
    }
  }
  for (const auto& [frame, sets] : vehicles_by_frame) {
    if (sets.size() < 2) continue;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sets.size(); ++i)
      for (std::size_t j = i + 1; j < sets.size(); ++j) best = std::min(best, edge_distance_m(sets[i], sets[j], scales));
    out.min_edge_dist_m.push_back(best);
  }
  return out;
}

struct LightConditionedSpeeds {
  std::vector<double> green_kmh;
  std::vector<double> red_kmh;
  std::vector<double> yellow_kmh;
};

/// Ego speed at frames where a tracked light of a color sits within
/// `window_m` ahead of the ego center. One sample per color per frame.
inline LightConditionedSpeeds light_conditioned_ego_speed(const EgoSpeedSeries& ego_speed,
                                                          const std::vector<Track>& tracks, const Scales& scales,
                                                          int frame_rows, double window_m = 10.0) {
  std::map<int, std::array<bool, 3>> seen;  // frame -> red, green, yellow
  for (const auto& tr : tracks)
    for (const auto& d : tr.detections) {
      if (!is_light(d.category)) continue;
      const double ahead = (0.5 * frame_rows - d.centroid.row) / scales.row;
      if (ahead < 0.0 || ahead > window_m) continue;
      const int k = d.category == Category::light_red ? 0 : d.category == Category::light_green ? 1 : 2;
      seen[d.frame_index][k] = true;
    }
  LightConditionedSpeeds out;
  for (const auto& [frame, colors] : seen) {
    const auto* s = ego_speed.at(frame);
    if (!s) continue;
    const double v = s->speed * kMpsToKmh;
    if (colors[0]) out.red_kmh.push_back(v);
    if (colors[1]) out.green_kmh.push_back(v);
    if (colors[2]) out.yellow_kmh.push_back(v);
  }
  return out;
}

/// Raw samples per metric, pooled over videos in input order.
struct CorpusSamples {
  std::map<std::string, std::vector<double>> values;

  CorpusSamples() {
    for (const char* name : kMetricNames) values[name];
  }

  void append(const CorpusSamples& other) {
    for (const auto& [k, v] : other.values) values[k].insert(values[k].end(), v.begin(), v.end());
  }
};

inline CorpusSamples collect_samples(const std::vector<FrameDetections>& frames, const TrackingResult& tracking,
                                     const Scales& scales, int frame_rows) {
  CorpusSamples s;
  s.values["agent_size_m2"] = size_distribution(frames);
  s.values["min_center_dist_m"] = min_center_distance(frames, scales);
  s.values["traffic_density"] = traffic_density(frames);
  s.values["unknown_per_frame"] = unknown_count(frames);
  auto dyn = dynamics_distributions(tracking.tracks, scales);
  s.values["speed_rel"] = std::move(dyn.speed_rel_kmh);
  s.values["accel_rel"] = std::move(dyn.accel_rel);
  s.values["min_edge_dist_m"] = std::move(dyn.min_edge_dist_m);
  auto lc = light_conditioned_ego_speed(tracking.ego_speed, tracking.tracks, scales, frame_rows);
  s.values["ego_speed_at_green"] = std::move(lc.green_kmh);
  s.values["ego_speed_at_red"] = std::move(lc.red_kmh);
  return s;
}

// ---- corpus statistics ----

struct CorpusStats {
  std::map<std::string, Histogram> histograms;
  std::map<std::string, std::vector<double>> samples;
};

inline CorpusStats compute_stats(const CorpusSamples& samples, const MetricBins& bins = default_metric_bins()) {
  CorpusStats stats;
  for (const auto& [name, values] : samples.values) {
    auto it = bins.find(name);
    if (it == bins.end()) throw Error(ErrorCode::EmptyBinSpec, "no bin spec for metric " + name);
    stats.histograms[name] = histogram(values, it->second.edges());
    stats.samples[name] = values;
  }
  return stats;
}

inline nlohmann::json to_json(const CorpusStats& s) {
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& [name, h] : s.histograms) {
    nlohmann::json m{{"bin_edges", h.bin_edges},
                     {"densities", h.densities},
                     {"n_samples", h.n_samples},
                     {"n_dropped", h.n_dropped}};
    if (auto it = s.samples.find(name); it != s.samples.end()) m["samples"] = it->second;
    metrics[name] = std::move(m);
  }
  return {{"metrics", metrics}};
}

inline CorpusStats corpus_stats_from_json(const nlohmann::json& j) {
  CorpusStats s;
  try {
    for (const auto& [name, m] : j.at("metrics").items()) {
      Histogram h;
      h.bin_edges = m.at("bin_edges").get<std::vector<double>>();
      h.densities = m.at("densities").get<std::vector<double>>();
      h.n_samples = m.at("n_samples").get<std::size_t>();
      h.n_dropped = m.value("n_dropped", std::size_t{0});
      s.histograms[name] = std::move(h);
      if (m.contains("samples")) s.samples[name] = m["samples"].get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed corpus stats: ") + e.what());
  }
  return s;
}

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string histogram_csv(const Histogram& h) {
  std::string out = "bin_left,bin_right,density\n";
  for (std::size_t i = 0; i < h.densities.size(); ++i)
    out += format_number(h.bin_edges[i]) + "," + format_number(h.bin_edges[i + 1]) + "," +
           format_number(h.densities[i]) + "\n";
  return out;
}

struct SvgSeries {
  std::string label;
  const Histogram* histogram = nullptr;
};

/// Density line plot at bin centers, one polyline per series.
inline std::string histogram_svg(const std::string& title, const std::vector<SvgSeries>& series) {
  const double W = 640, H = 400, ml = 60, mr = 20, mt = 40, mb = 50;
  double xmin = 1e300, xmax = -1e300, ymax = 0;
  for (const auto& s : series) {
    xmin = std::min(xmin, s.histogram->bin_edges.front());
    xmax = std::max(xmax, s.histogram->bin_edges.back());
    for (double d : s.histogram->densities) ymax = std::max(ymax, d);
  }
  if (ymax <= 0) ymax = 1;
  if (!(xmax > xmin)) xmax = xmin + 1;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto py = [&](double y) { return H - mb - y / ymax * (H - mt - mb); };
  static constexpr std::array<const char*, 4> palette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
    << title << "</text>\n";
  o << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double x = xmin + (xmax - xmin) * i / 4.0;
    o << "<text x=\"" << px(x) << "\" y=\"" << H - mb + 18 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"11\">" << format_number(x) << "</text>\n";
    const double y = ymax * i / 4.0;
    o << "<text x=\"" << ml - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
      << "font-size=\"11\">" << format_number(y) << "</text>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& h = *series[k].histogram;
    const char* color = palette[k % palette.size()];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < h.densities.size(); ++i)
      o << px(0.5 * (h.bin_edges[i] + h.bin_edges[i + 1])) << "," << py(h.densities[i]) << " ";
    o << "\"/>\n";
    o << "<text x=\"" << W - mr - 4 << "\" y=\"" << mt + 16 * (k + 1) << "\" text-anchor=\"end\" fill=\"" << color
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << series[k].label << " (n=" << h.n_samples
      << ")</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

// ---- comparison ----

struct Divergence {
  double ks = 0.0;
  double wasserstein = 0.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};

/// Two-sample KS statistic and Wasserstein-1 distance between empirical CDFs.
inline Divergence compare(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySampleSet, "compare needs two non-empty sample sets");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto n = static_cast<std::int64_t>(a.size()), m = static_cast<std::int64_t>(b.size());
  std::int64_t i = 0, j = 0, worst = 0;
  double w1 = 0.0;
  while (i < n || j < m) {
    const double x = (j >= m || (i < n && a[i] <= b[j])) ? a[i] : b[j];
    while (i < n && a[i] == x) ++i;
    while (j < m && b[j] == x) ++j;
    // CDFs are i/n and j/m on [x, next); compared exactly as i*m vs j*n.
    const std::int64_t diff = std::abs(i * m - j * n);
    worst = std::max(worst, diff);
    if (i < n || j < m) {
      const double next = (j >= m || (i < n && a[i] <= b[j])) ? a[i] : b[j];
      w1 += static_cast<double>(diff) / static_cast<double>(n * m) * (next - x);
    }
  }
  return {static_cast<double>(worst) / static_cast<double>(n * m), w1, a.size(), b.size()};
}

struct DivergenceReport {
  std::map<std::string, Divergence> metrics;
  std::vector<std::string> incomparable;
};

/// Compares every metric with samples on both sides; the rest are listed as
/// incomparable.
inline DivergenceReport compare_stats(const CorpusStats& a, const CorpusStats& b) {
  DivergenceReport r;
  std::map<std::string, int> names;
  for (const auto& [k, _] : a.samples) names[k] |= 1;
  for (const auto& [k, _] : b.samples) names[k] |= 2;
  for (const auto& [k, _] : a.histograms) names[k] |= 0;
  for (const auto& [k, _] : b.histograms) names[k] |= 0;
  for (const auto& [name, mask] : names) {
    if (mask != 3 || a.samples.at(name).empty() || b.samples.at(name).empty()) {
      r.incomparable.push_back(name);
      continue;
    }
    r.metrics[name] = compare(a.samples.at(name), b.samples.at(name));
  }
  return r;
}

inline nlohmann::json to_json(const DivergenceReport& r) {
  nlohmann::json m = nlohmann::json::object();
  for (const auto& [name, d] : r.metrics)
    m[name] = {{"ks", d.ks}, {"wasserstein", d.wasserstein}, {"n_a", d.n_a}, {"n_b", d.n_b}};
  return {{"metrics", m}, {"incomparable", r.incomparable}};
}

}  // namespace bevtraj
