// bevtraj: generate, rasterize, extract and measure BEV traffic videos.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bevtraj/metrics.hpp"
#include "bevtraj/pipeline.hpp"
#include "bevtraj/rasterizer.hpp"
#include "bevtraj/roundtrip.hpp"
#include "bevtraj/scene.hpp"
#include "bevtraj/synthetic_gen.hpp"
#include "bevtraj/video_io.hpp"

namespace fs = std::filesystem;
using namespace bevtraj;

namespace {

enum Exit { kOk = 0, kUsage = 1, kValidation = 2, kPartial = 3, kThreshold = 4 };

int exit_code_for(const Error& e) { return e.code() == ErrorCode::Io ? kPartial : kValidation; }

struct Common {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

nlohmann::json load_config_json(const Common& c) {
  std::string path = c.config_path;
  if (path.empty())
    if (const char* env = std::getenv("BEVTRAJ_CONFIG")) path = env;
  if (path.empty()) return nlohmann::json::object();
  return read_json_file(path);
}

PipelineConfig load_config(const Common& c) { return pipeline_config_from_json(load_config_json(c)); }

GenParams load_params(const Common& c, const std::string& params_path) {
  GenParams p;
  const auto cfg = load_config_json(c);
  (void)pipeline_config_from_json(cfg);
  if (cfg.contains("generator")) p = gen_params_from_json(cfg["generator"], p);
  if (!params_path.empty()) p = gen_params_from_json(read_json_file(params_path), p);
  if (c.seed) p.seed = *c.seed;
  p.validate();
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <typename Fn>
void parallel_for(int n, int jobs, Fn&& fn) {
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) fn(i);
  };
  const int threads = std::max(1, std::min(jobs, n));
  if (threads == 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

struct InputStatus {
  std::string name;
  std::string error;
  int code = kOk;
};

/// Prints failures and folds per-input status into one exit code.
int report(const std::vector<InputStatus>& status) {
  std::size_t failed = 0;
  bool all_validation = true;
  for (const auto& s : status) {
    if (s.code == kOk) continue;
    ++failed;
    all_validation = all_validation && s.code == kValidation;
    std::cerr << "error: " << s.name << ": " << s.error << "\n";
  }
  if (failed == 0) return kOk;
  if (failed == status.size() && all_validation) return kValidation;
  return kPartial;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<fs::path> scene_files(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in))
        if (e.is_regular_file() && e.path().extension() == ".json" && e.path().filename() != "corpus.json")
          found.push_back(e.path());
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.emplace_back(in);
    }
  }
  return out;
}

bool looks_like_video(const fs::path& dir) {
  if (fs::exists(dir / "manifest.json")) return true;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename().string().starts_with("frame_")) return true;
  return false;
}

/// Directories holding `marker`, either given directly or one level down.
std::vector<fs::path> collect_dirs(const std::vector<std::string>& inputs, bool (*is_leaf)(const fs::path&)) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (!fs::is_directory(p)) {
      out.push_back(p);  // reported as unreadable later
      continue;
    }
    if (is_leaf(p)) {
      out.push_back(p);
      continue;
    }
    std::vector<fs::path> found;
    for (const auto& e : fs::directory_iterator(p))
      if (e.is_directory() && is_leaf(e.path())) found.push_back(e.path());
    std::sort(found.begin(), found.end());
    out.insert(out.end(), found.begin(), found.end());
  }
  return out;
}

bool looks_like_extraction(const fs::path& dir) {
  return fs::exists(dir / "detections.jsonl") && fs::exists(dir / "tracks.json");
}

// ---- subcommands ----

int cmd_generate(const Common& c, const std::string& params_path, int n) {
  if (n <= 0) {
    std::cerr << "generate: --count must be at least 1\n";
    return kUsage;
  }
  const GenParams params = load_params(c, params_path);
  const fs::path out = c.out.empty() ? fs::path("scenes") : fs::path(c.out);
  make_dir(out);
  std::vector<std::string> names(static_cast<std::size_t>(n));
  std::vector<InputStatus> status(static_cast<std::size_t>(n));
  parallel_for(n, c.jobs, [&](int i) {
    GenParams p = params;
    p.seed = params.seed + static_cast<std::uint64_t>(i);
    status[i].name = "scene " + std::to_string(p.seed);
    try {
      const Scene scene = generate_scene(p);
      names[i] = scene.scene_id + ".json";
      write_text(out / names[i], scene_to_string(scene));
    } catch (const Error& e) {
      status[i].error = e.what();
      status[i].code = exit_code_for(e);
    }
  });
  nlohmann::json manifest{{"params", to_json(params)}, {"count", n}, {"scenes", names}};
  write_text(out / "corpus.json", manifest.dump(1) + "\n");
  return report(status);
}

int cmd_rasterize(const Common& c, const std::vector<std::string>& inputs) {
  const PipelineConfig cfg = load_config(c);
  const auto files = scene_files(inputs);
  if (files.empty()) {
    std::cerr << "rasterize: no scene files given\n";
    return kUsage;
  }
  const fs::path out = c.out.empty() ? fs::path("videos") : fs::path(c.out);
  make_dir(out);
  const std::uint64_t seed = c.seed.value_or(0);
  std::vector<InputStatus> status(files.size());
  parallel_for(static_cast<int>(files.size()), c.jobs, [&](int i) {
    status[i].name = files[i].string();
    try {
      const Scene scene = load_scene(files[i].string());
      RasterConfig raster = cfg.raster;
      raster.frame_rate = scene.frame_rate;
      const Video video = rasterize_scene(scene, raster, seed ^ fnv1a(scene.scene_id), cfg.colors);
      save_video(video, out / scene.scene_id);
    } catch (const Error& e) {
      status[i].error = e.what();
      status[i].code = exit_code_for(e);
    }
  });
  return report(status);
}

int cmd_extract(const Common& c, const std::vector<std::string>& inputs) {
  const PipelineConfig cfg = load_config(c);
  const auto dirs = collect_dirs(inputs, looks_like_video);
  if (dirs.empty()) {
    std::cerr << "extract: no video directories found\n";
    return kUsage;
  }
  const fs::path out = c.out.empty() ? fs::path("extracted") : fs::path(c.out);
  make_dir(out);
  std::mutex log;
  std::vector<InputStatus> status(dirs.size());
  parallel_for(static_cast<int>(dirs.size()), c.jobs, [&](int i) {
    status[i].name = dirs[i].string();
    try {
      const LoadedVideo lv = load_video(dirs[i]);
      if (!lv.manifest_found) {
        std::lock_guard lock(log);
        std::cerr << "warning: " << dirs[i].string() << " has no manifest.json; using default geometry\n";
      }
      const auto& m = lv.video.manifest;
      const Extraction ex = extract_video(lv.video.frames, m, cfg.detector, cfg.tracker);
      const fs::path dst = out / dirs[i].filename();
      make_dir(dst);
      write_text(dst / "detections.jsonl", detections_jsonl(ex.detections));
      write_text(dst / "tracks.json",
                 tracks_json(ex.tracking, m.scales, m.frame_rows, m.frame_cols, static_cast<int>(lv.video.frames.size()))
                         .dump(1) +
                     "\n");
    } catch (const Error& e) {
      status[i].error = e.what();
      status[i].code = kPartial;
    }
  });
  return report(status);
}

int cmd_metrics(const Common& c, const std::vector<std::string>& inputs, bool svg, const std::string& reference) {
  const PipelineConfig cfg = load_config(c);
  const auto dirs = collect_dirs(inputs, looks_like_extraction);
  std::vector<CorpusSamples> per_video(dirs.size());
  std::vector<InputStatus> status(dirs.size());
  parallel_for(static_cast<int>(dirs.size()), c.jobs, [&](int i) {
    status[i].name = dirs[i].string();
    try {
      const auto tj = read_json_file((dirs[i] / "tracks.json").string());
      const int num_frames = tj.at("num_frames").get<int>();
      const int rows = tj.at("frame_px").at(0).get<int>();
      const Scales scales{tj.at("scale_px_per_m").at(0).get<double>(), tj.at("scale_px_per_m").at(1).get<double>()};
      std::ifstream in(dirs[i] / "detections.jsonl");
      if (!in) throw Error(ErrorCode::Io, "cannot open detections.jsonl");
      const auto frames = detections_from_jsonl(in, num_frames);
      const TrackingResult tracking = tracks_from_json(tj, frames);
      per_video[i] = collect_samples(frames, tracking, scales, rows);
    } catch (const nlohmann::json::exception& e) {
      status[i].error = e.what();
      status[i].code = kPartial;
    } catch (const Error& e) {
      status[i].error = e.what();
      status[i].code = kPartial;
    }
  });
  CorpusSamples all;
  std::size_t used = 0;
  for (std::size_t i = 0; i < dirs.size(); ++i)
    if (status[i].code == kOk) {
      all.append(per_video[i]);
      ++used;
    }
  const int rc = report(status);
  if (used == 0) throw Error(ErrorCode::EmptyCorpus, "no extraction outputs found in the given directories");

  const CorpusStats stats = compute_stats(all, cfg.bins);
  const fs::path out = c.out.empty() ? fs::path("stats") : fs::path(c.out);
  make_dir(out);
  write_text(out / "stats.json", to_json(stats).dump() + "\n");
  std::optional<CorpusStats> ref;
  if (!reference.empty()) ref = corpus_stats_from_json(read_json_file(reference));
  for (const auto& [name, h] : stats.histograms) {
    write_text(out / (name + ".csv"), histogram_csv(h));
    if (!svg) continue;
    std::vector<SvgSeries> series{{"corpus", &h}};
    if (ref && ref->histograms.contains(name)) series.push_back({"reference", &ref->histograms.at(name)});
    write_text(out / (name + ".svg"), histogram_svg(name, series));
  }
  return rc;
}

int cmd_compare(const Common& c, const std::string& a, const std::string& b) {
  const CorpusStats sa = corpus_stats_from_json(read_json_file(a));
  const CorpusStats sb = corpus_stats_from_json(read_json_file(b));
  const DivergenceReport r = compare_stats(sa, sb);
  const std::string text = to_json(r).dump(1) + "\n";
  if (c.out.empty()) {
    std::cout << text;
  } else {
    write_text(c.out, text);
  }
  for (const auto& name : r.incomparable) std::cerr << "note: " << name << " is not comparable\n";
  return kOk;
}

int cmd_roundtrip(const Common& c, const std::string& params_path, int n) {
  if (n <= 0) {
    std::cerr << "roundtrip: --count must be at least 1\n";
    return kUsage;
  }
  const PipelineConfig cfg = load_config(c);
  const GenParams params = load_params(c, params_path);
  const RoundTripResult r = run_roundtrip(params, n, cfg, c.jobs);
  const std::string text = to_json(r).dump(1) + "\n";
  if (c.out.empty()) {
    std::cout << text;
  } else {
    write_text(c.out, text);
  }
  for (const auto& e : r.scene_errors) std::cerr << "error: " << e << "\n";
  for (const auto& k : r.checks)
    if (!k.pass())
      std::cerr << "threshold failed: " << k.name << " = " << k.value << " (needs " << (k.at_least ? ">= " : "<= ")
                << k.threshold << ")\n";
  return r.pass() ? kOk : kThreshold;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rasterize traffic scenes into BEV videos and extract trajectories back out"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub, bool with_seed) {
    sub->add_option("--config", common.config_path, "JSON config file (falls back to $BEVTRAJ_CONFIG)");
    sub->add_option("--out", common.out, "Output directory or file");
    sub->add_option("--jobs", common.jobs, "Worker threads")->check(CLI::PositiveNumber);
    if (with_seed) sub->add_option("--seed", common.seed, "Base random seed");
  };

  std::string params_path;
  int count = 0;
  auto* gen = app.add_subcommand("generate", "Write synthetic scene files");
  gen->add_option("params", params_path, "Generator parameters (JSON)");
  gen->add_option("-n,--count", count, "Number of scenes")->required();
  add_common(gen, true);

  std::vector<std::string> inputs;
  auto* ras = app.add_subcommand("rasterize", "Render scene files into video directories");
  ras->add_option("scenes", inputs, "Scene files or directories")->required();
  add_common(ras, true);

  auto* ext = app.add_subcommand("extract", "Detect and track objects in video directories");
  ext->add_option("videos", inputs, "Video directories, or directories containing them")->required();
  add_common(ext, false);

  bool svg = false;
  std::string reference;
  auto* met = app.add_subcommand("metrics", "Compute corpus statistics from extraction outputs");
  met->add_option("inputs", inputs, "Extraction directories, or directories containing them")->required();
  met->add_flag("--svg", svg, "Also write one SVG plot per metric");
  met->add_option("--reference", reference, "Stats file overlaid on the SVG plots");
  add_common(met, false);

  std::string stats_a, stats_b;
  auto* cmp = app.add_subcommand("compare", "KS and Wasserstein distances between two stats files");
  cmp->add_option("stats_a", stats_a)->required();
  cmp->add_option("stats_b", stats_b)->required();
  add_common(cmp, false);

  int rt_count = 50;
  auto* rt = app.add_subcommand("roundtrip", "Generate, rasterize, extract and score against ground truth");
  rt->add_option("params", params_path, "Generator parameters (JSON)");
  rt->add_option("-n,--count", rt_count, "Number of scenes");
  add_common(rt, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate(common, params_path, count);
    if (ras->parsed()) return cmd_rasterize(common, inputs);
    if (ext->parsed()) return cmd_extract(common, inputs);
    if (met->parsed()) return cmd_metrics(common, inputs, svg, reference);
    if (cmp->parsed()) return cmd_compare(common, stats_a, stats_b);
    if (rt->parsed()) return cmd_roundtrip(common, params_path, rt_count);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPartial;
  }
  return kUsage;
}
