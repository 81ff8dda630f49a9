// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "bevtraj/assignment.hpp"
#include "bevtraj/geometry.hpp"
#include "bevtraj/metrics.hpp"
#include "bevtraj/pipeline.hpp"
#include "bevtraj/roundtrip.hpp"
#include "bevtraj/synthetic_gen.hpp"
#include "bevtraj/tracker.hpp"
#include "bevtraj/video_io.hpp"

using namespace bevtraj;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, const std::string& title, bool ok, const std::string& detail) {
  std::printf("%s  %2d  %-34s %s\n", ok ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---- 1 ----

void coordinate_round_trip() {
  const RasterConfig cfg;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> pos(-1000, 1000), off(-15, 15), ang(-M_PI, M_PI);
  const auto t0 = Clock::now();
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const Pose2D ego{pos(rng), pos(rng), ang(rng)};
    const Vec2 p{ego.x + off(rng), ego.y + off(rng)};
    const Vec2 q = image_to_world(ego, world_to_image(ego, p, cfg), cfg);
    worst = std::max(worst, norm(q - p));
  }
  const double dt = seconds_since(t0);
  report(1, "coordinate round trip", worst <= 1e-9 && dt < 1.0, fmt("max error %.3g m, %.3f s", worst, dt));
}

// ---- 2, 3, 5, 6 ----


void detection_fidelity(const RoundTripResult& small, double small_seconds, const RoundTripResult& large) {
  const auto& c = small.counts;
  const bool ok2 = small.scene_errors.empty() && c.recall() >= 0.99 && c.light_accuracy() >= 1.0 &&
                   c.centroid_mae_m() <= 0.5 && c.id_switch_rate() <= 0.01 && small_seconds < 300;
  report(2, "rasterize/extract round trip", ok2,
         fmt("%zu scenes: recall %.4f, light acc %.4f, centroid MAE %.3f m, ID switches %.4f, %.1f s", c.scenes,
             c.recall(), c.light_accuracy(), c.centroid_mae_m(), c.id_switch_rate(), small_seconds));

  const auto& l = large.counts;
  report(3, "occlusion beneath lights", l.occluded_frames > 0 && l.occluded_detection_rate() >= 0.95,
         fmt("%zu occluded frames, %.4f detected within 15%% area", l.occluded_frames, l.occluded_detection_rate()));
}

void motion_fidelity(const RoundTripResult& large) {
  const auto& l = large.counts;
  report(5, "kinematics fidelity", l.kinematics_n > 0 && l.speed_mae() <= 0.5 && l.accel_mae() <= 1.0,
         fmt("%zu samples: speed MAE %.3f m/s, accel MAE %.3f m/s^2", l.kinematics_n, l.speed_mae(), l.accel_mae()));
  report(6, "ego speed from landmarks", l.ego_speed_n > 0 && l.ego_speed_mae() <= 0.5,
         fmt("%zu samples: MAE %.3f m/s", l.ego_speed_n, l.ego_speed_mae()));
}

// ---- 4 ----

double brute_force_best(const CostMatrix& cost) {
  std::vector<int> cols(static_cast<std::size_t>(std::max(cost.rows, cost.cols)));
  for (std::size_t k = 0; k < cols.size(); ++k) cols[k] = static_cast<int>(k);
  int best_pairs = -1;
  double best = 0;
  do {
    int pairs = 0;
    double total = 0;
    for (int r = 0; r < cost.rows; ++r) {
      const int c = cols[static_cast<std::size_t>(r)];
      if (c < cost.cols && cost.feasible(r, c)) {
        ++pairs;
        total += cost(r, c);
      }
    }
    if (pairs > best_pairs || (pairs == best_pairs && total < best)) {
      best_pairs = pairs;
      best = total;
    }
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

void assignment_optimality() {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> size(1, 6), cat(0, 2);
  std::uniform_real_distribution<double> rowd(0, 96), cold(0, 54), step(-10, 10), dim(3, 12);
  std::uniform_int_distribution<int> byte(0, 255);
  const TrackerConfig cfg;
  const Category cats[] = {Category::agent, Category::unknown, Category::light_red};
  auto random_det = [&](double r, double c) {
    DetectedObject d;
    d.category = cats[cat(rng)];
    d.centroid = {r, c};
    d.bbox = {0, 0, static_cast<int>(dim(rng)), static_cast<int>(dim(rng))};
    d.mean_color = ColorRGB{static_cast<std::uint8_t>(byte(rng)), static_cast<std::uint8_t>(byte(rng)),
                            static_cast<std::uint8_t>(byte(rng))};
    return d;
  };
  int mismatches = 0, with_infeasible = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    FrameDetections prev, curr;
    const int n = size(rng), m = size(rng);
    for (int i = 0; i < n; ++i) prev.push_back(random_det(rowd(rng), cold(rng)));
    for (int j = 0; j < m; ++j) {
      const auto& anchor = prev[static_cast<std::size_t>(j % n)];
      curr.push_back(random_det(anchor.centroid.row + step(rng), anchor.centroid.col + step(rng)));
    }
    CostMatrix cost(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j)
        if (auto c = pairwise_cost(prev[i], curr[j], cfg)) cost(i, j) = *c;
        else ++with_infeasible;
    const Assignment a = match_frames(prev, curr, cfg);
    mismatches += assignment_cost(cost, a.pairs) != brute_force_best(cost) || a.total_cost != assignment_cost(cost, a.pairs);
  }
  report(4, "assignment optimality", mismatches == 0,
         fmt("1000 matrices up to 6x6 (%d infeasible entries), %d mismatches", with_infeasible, mismatches));
}

// ---- 7, 8, 9 ----

void metric_closure(const RoundTripResult& r) {
  double worst = 0;
  std::size_t fewest = SIZE_MAX;
  std::string worst_name, lines;
  bool ok = true;
  for (const char* name : kMetricNames) {
    const auto& a = r.extracted.values.at(name);
    const auto& b = r.truth.values.at(name);
    fewest = std::min({fewest, a.size(), b.size()});
    if (a.empty() || b.empty()) {
      ok = false;
      continue;
    }
    const double ks = compare(a, b).ks;
    ok = ok && ks <= 0.05 && a.size() >= 10000 && b.size() >= 10000;
    if (ks >= worst) {
      worst = ks;
      worst_name = name;
    }
    lines += fmt("\n        %-20s n=%zu/%zu KS=%.4f", name, a.size(), b.size(), ks);
  }
  report(7, "metric closure", ok, fmt("max KS %.4f (%s), min samples %zu", worst, worst_name.c_str(), fewest) + lines);
}

void light_conditioned_shape(const RoundTripResult& r) {
  const auto bins = default_metric_bins();
  const auto red = histogram(r.extracted.values.at("ego_speed_at_red"), bins.at("ego_speed_at_red").edges());
  const auto green = histogram(r.extracted.values.at("ego_speed_at_green"), bins.at("ego_speed_at_green").edges());
  auto mode = [](const Histogram& h) {
    return static_cast<std::size_t>(std::max_element(h.densities.begin(), h.densities.end()) - h.densities.begin());
  };
  auto mass_below = [](const Histogram& h, double x) {
    double m = 0;
    for (std::size_t k = 0; k < h.densities.size(); ++k) {
      const double lo = h.bin_edges[k], hi = std::min(h.bin_edges[k + 1], x);
      if (hi > lo && lo >= 0) m += h.densities[k] * (hi - lo);
    }
    return m;
  };
  const std::size_t rm = mode(red), gm = mode(green);
  const double red_low = mass_below(red, 4.0);
  const bool ok = red.n_samples > 0 && green.n_samples > 0 && red.bin_edges[rm] == 0.0 && red_low >= 0.40 &&
                  green.bin_edges[gm] > 10.0;
  report(8, "light-conditioned ego speed", ok,
         fmt("red mode [%g, %g) km/h, mass in [0, 4) %.3f; green mode [%g, %g) km/h", red.bin_edges[rm],
             red.bin_edges[rm + 1], red_low, green.bin_edges[gm], green.bin_edges[gm + 1]));
}

void normalization(const RoundTripResult& r) {
  double worst = 0;
  std::size_t emitted = 0;
  for (const auto* samples : {&r.extracted, &r.truth}) {
    for (const auto& [name, h] : compute_stats(*samples).histograms) {
      if (h.n_samples == 0) continue;
      worst = std::max(worst, std::abs(h.total_mass() - 1.0));
      ++emitted;
    }
  }
  bool self_zero = true;
  for (const auto& [name, v] : r.extracted.values) {
    if (v.empty()) continue;
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const auto d = compare(v, sorted);
    self_zero = self_zero && d.ks == 0.0 && d.wasserstein == 0.0;
  }
  report(9, "histogram normalization", worst <= 1e-9 && self_zero && emitted > 0,
         fmt("%zu histograms, max |mass - 1| %.3g, compare(a, a) zero: %s", emitted, worst, self_zero ? "yes" : "no"));
}

// ---- 10 ----

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes every artifact of the full pipeline for n scenes under dir.
void full_pipeline(const fs::path& dir, std::uint64_t seed, int n) {
  GenParams params;
  params.seed = seed;
  const PipelineConfig cfg;
  CorpusSamples all;
  fs::create_directories(dir / "scenes");
  for (const Scene& scene : generate_corpus(params, n)) {
    std::ofstream(dir / "scenes" / (scene.scene_id + ".json")) << scene_to_string(scene);
    const Scene loaded = load_scene((dir / "scenes" / (scene.scene_id + ".json")).string());
    save_video(rasterize_scene(loaded, cfg.raster, seed, cfg.colors), dir / "videos" / scene.scene_id);
    const LoadedVideo lv = load_video(dir / "videos" / scene.scene_id);
    const auto& m = lv.video.manifest;
    const Extraction ex = extract_video(lv.video.frames, m, cfg.detector, cfg.tracker);
    const fs::path out = dir / "extracted" / scene.scene_id;
    fs::create_directories(out);
    std::ofstream(out / "detections.jsonl") << detections_jsonl(ex.detections);
    std::ofstream(out / "tracks.json")
        << tracks_json(ex.tracking, m.scales, m.frame_rows, m.frame_cols, static_cast<int>(lv.video.frames.size())).dump(1);
    all.append(collect_samples(ex.detections, ex.tracking, m.scales, m.frame_rows));
  }
  std::ofstream(dir / "stats.json") << to_json(compute_stats(all, cfg.bins)).dump();
}

void determinism() {
  const fs::path base = fs::temp_directory_path() / ("bevtraj_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(base);
  full_pipeline(base / "a", 31, 4);
  full_pipeline(base / "b", 31, 4);
  std::size_t files = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(base / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), base / "a");
    std::string a = slurp(e.path()), b = slurp(base / "b" / rel);
    if (rel.filename() == "manifest.json") {
      auto ja = nlohmann::json::parse(a), jb = nlohmann::json::parse(b);
      ja.erase("created_utc");
      jb.erase("created_utc");
      a = ja.dump();
      b = jb.dump();
    }
    ++files;
    differing += a != b;
  }
  std::size_t files_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(base / "b")) files_b += e.is_regular_file();
  fs::remove_all(base);
  report(10, "determinism", files > 0 && differing == 0 && files == files_b,
         fmt("%zu files compared, %zu differ", files, differing));
}

}  // namespace

int main() {
  coordinate_round_trip();

  const PipelineConfig cfg;
  GenParams params;
  params.seed = 20000;
  params.duration_s = 15;
  params.frame_rate = 10;
  auto t0 = Clock::now();
  const RoundTripResult small = run_roundtrip(params, 50, cfg, 1);
  const double small_seconds = seconds_since(t0);

  // Corpus large enough for 10^4 samples in every metric.
  GenParams big = params;
  big.seed = 30000;
  RoundTripResult large;
  int scenes = 0;
  auto fewest = [&] {
    std::size_t n = SIZE_MAX;
    for (const auto* s : {&large.extracted, &large.truth})
      for (const auto& [name, v] : s->values) n = std::min(n, v.size());
    return n;
  };
  while (scenes < 3000 && (scenes == 0 || fewest() < 10000)) {
    GenParams batch = big;
    batch.seed = big.seed + static_cast<std::uint64_t>(scenes);
    const RoundTripResult r = run_roundtrip(batch, 250, cfg, 1);
    large.counts.merge(r.counts);
    large.extracted.append(r.extracted);
    large.truth.append(r.truth);
    large.scene_errors.insert(large.scene_errors.end(), r.scene_errors.begin(), r.scene_errors.end());
    scenes += 250;
  }
  std::printf("(corpus: %d scenes, %zu scene errors)\n", scenes, large.scene_errors.size());

  detection_fidelity(small, small_seconds, large);
  assignment_optimality();
  motion_fidelity(large);
  metric_closure(large);
  light_conditioned_shape(large);
  normalization(large);
  determinism();

  std::printf("%s: %d failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
