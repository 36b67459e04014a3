#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "corridor/config.hpp"
#include "corridor/dataset.hpp"
#include "corridor/energy.hpp"
#include "corridor/evaluation.hpp"
#include "corridor/fusion.hpp"
#include "corridor/parallel.hpp"
#include "corridor/postprocess.hpp"
#include "corridor/segmenter.hpp"

namespace corridor {

/// Wall time per stage of one frame, milliseconds.
struct LatencyRecord {
  double postprocess_ms = 0.0;
  double energy_ms = 0.0;
  double fuse_ms = 0.0;
  double total_ms = 0.0;
};

struct FrameOutput {
  CorridorMask corridor;
  EdgeResult edge;
  FusionReport fusion;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace detail

/// Post-processing, energy and fusion on one frame, as enabled in `cfg`.
/// Fusion takes the energy raster from `energy` when given, otherwise it is
/// computed from `logits`.
inline FrameOutput process_frame(const CorridorMask& mask, const LogitVolume* logits, const PipelineConfig& cfg,
                                 LatencyRecord* latency = nullptr, const EnergyMap* energy = nullptr) {
  if (mask.width() != cfg.camera.width || mask.height() != cfg.camera.height) {
    fail(Errc::format_mismatch, "corridor mask size does not match the camera");
  }
  LatencyRecord lat;
  FrameOutput out;
  auto t0 = detail::Clock::now();
  if (cfg.postprocess_enabled) {
    PostprocessResult pp = postprocess(mask, cfg.postprocess, cfg.camera);
    out.corridor = std::move(pp.corridor);
    out.edge = std::move(pp.edge);
  } else {
    out.corridor = mask;
    const int top = top_row(mask);
    if (top >= 0) {
      out.edge.edge_row = top;
      if (top > horizon_row(cfg.camera)) out.edge.edge_distance = distance_for_ground_row(cfg.camera, top);
    }
  }
  lat.postprocess_ms = detail::elapsed_ms(t0);

  if (cfg.fusion_enabled) {
    t0 = detail::Clock::now();
    EnergyMap computed;
    if (energy == nullptr) {
      if (logits == nullptr) fail(Errc::invalid_argument, "fusion is enabled but neither logits nor energy were given");
      if (logits->width() != mask.width() || logits->height() != mask.height()) {
        fail(Errc::format_mismatch, "logit volume size does not match the corridor mask");
      }
      computed = energy_from_logits(*logits);
      energy = &computed;
    } else if (!energy->same_shape(mask)) {
      fail(Errc::format_mismatch, "energy raster size does not match the corridor mask");
    }
    lat.energy_ms = detail::elapsed_ms(t0);

    t0 = detail::Clock::now();
    const Mask outliers = threshold_outliers(*energy, cfg.fusion.energy_threshold);
    const std::vector<OutlierBlob> blobs = extract_blobs(outliers, cfg.fusion, &cfg.camera);
    FusionResult fused = fuse(out.corridor, blobs, cfg.camera);
    if (fused.report.acted_blob) {
      out.corridor = std::move(fused.corridor);
      const int top = top_row(out.corridor);
      out.edge.edge_row.reset();
      out.edge.edge_distance.reset();
      if (top >= 0) {
        out.edge.edge_row = top;
        if (top > horizon_row(cfg.camera)) out.edge.edge_distance = distance_for_ground_row(cfg.camera, top);
      }
    }
    out.fusion = fused.report;
    lat.fuse_ms = detail::elapsed_ms(t0);
  }
  lat.total_ms = lat.postprocess_ms + lat.energy_ms + lat.fuse_ms;
  if (latency) *latency = lat;
  return out;
}

// ---------------------------------------------------------------------------
// Protocol evaluation

/// One evaluated variant: which oracle corruption feeds the pipeline and
/// which stages run.
struct MethodSpec {
  std::string name;
  std::string corruption = "clean";
  bool postprocess = true;
  bool fusion = false;
};

inline std::vector<MethodSpec> standard_methods() {
  return {
      {"clean_raw", "clean", false, false},
      {"clean", "clean", true, false},
      {"wrap_raw", "wrap", false, false},
      {"wrap", "wrap", true, false},
      {"miss_near", "miss_near:60", true, false},
      {"miss_near_fusion", "miss_near:60", true, true},
  };
}

inline std::vector<MethodSpec> standard_fp_methods() {
  return {
      {"clean", "clean", true, false},
      {"holes", "holes:0.005", true, false},
  };
}

inline MethodSpec find_method(std::string_view name) {
  for (const auto& list : {standard_methods(), standard_fp_methods()}) {
    for (const auto& m : list) {
      if (m.name == name) return m;
    }
  }
  fail(Errc::config_parse_error, "unknown method '" + std::string(name) + "'");
}

/// Seed of the oracle corruption for a scene; independent of the method so
/// every method sees the same noise realisation.
inline std::uint64_t corruption_seed(std::uint64_t scene_seed) {
  return derive_seed(scene_seed, hash_tag("corruption"));
}

inline std::uint64_t corruption_seed(const DatasetEntry& entry) { return corruption_seed(entry.seed); }

inline PipelineConfig method_config(const PipelineConfig& base, const MethodSpec& m) {
  PipelineConfig cfg = base;
  cfg.postprocess_enabled = m.postprocess;
  cfg.fusion_enabled = m.fusion;
  return cfg;
}

/// Oracle prediction for one scene under one method.
inline FrameOutput run_method(const SceneRecord& scene, const DatasetEntry& entry, const MethodSpec& method,
                              const PipelineConfig& base) {
  const CorruptionConfig corr = parse_corruptions(method.corruption, corruption_seed(entry));
  const PipelineConfig cfg = method_config(base, method);
  if (method.fusion) {
    const Segmentation seg = segment(scene, corr, cfg.segmenter);
    return process_frame(seg.mask, &seg.logits, cfg);
  }
  return process_frame(segment_mask(scene, corr, cfg.segmenter), nullptr, cfg);
}

/// Where protocol scenes come from: rendered on demand or loaded from a
/// dataset directory. Both give the same ground truth.
struct SceneSource {
  ProtocolConfig protocol;
  std::optional<fs::path> dataset_root;

  SceneRecord load(const DatasetEntry& e) const {
    if (dataset_root) return load_scene(*dataset_root / e.id);
    return make_scene(e, protocol, RenderOptions{false});
  }
};

struct ProtocolResult {
  std::vector<MethodSpec> methods;
  std::vector<MethodSpec> fp_methods;
  std::vector<std::vector<DetectionVerdict>> verdicts;  // [method][obstacle scene]
  std::vector<std::vector<FpRun>> fp_runs;              // [fp method][run]
  std::vector<std::vector<std::uint8_t>> fp_frames;     // [fp method][clean frame], 1 = false cut
  EvalReport report;                                    // rates of every method, FP runs of the first FP method
};

/// Evaluates every method on every obstacle scene and every FP method on the
/// obstacle-free frames. Scenes are processed on `base.jobs` workers; results
/// are gathered in manifest order.
inline ProtocolResult evaluate_protocol(const SceneSource& source, const std::vector<DatasetEntry>& entries,
                                        const std::vector<MethodSpec>& methods,
                                        const std::vector<MethodSpec>& fp_methods, const PipelineConfig& base) {
  base.validate();
  ProtocolResult res;
  res.methods = methods;
  res.fp_methods = fp_methods;
  std::vector<const DatasetEntry*> obstacle, clean;
  for (const auto& e : entries) (e.kind == EntryKind::obstacle ? obstacle : clean).push_back(&e);

  struct SceneOut {
    std::vector<DetectionVerdict> verdicts;
  };
  if (!methods.empty() && !obstacle.empty()) {
    const auto per_scene = parallel_map(obstacle.size(), base.jobs, [&](std::size_t i) {
      const DatasetEntry& e = *obstacle[i];
      const SceneRecord scene = source.load(e);
      SceneOut out;
      for (const MethodSpec& m : methods) {
        const FrameOutput f = run_method(scene, e, m, base);
        out.verdicts.push_back(judge_detection(f.corridor, scene, scene.camera, base.tolerance, e.id));
        out.verdicts.back().distance_bin = e.bin_m;
      }
      return out;
    });
    res.verdicts.assign(methods.size(), {});
    for (const auto& s : per_scene) {
      for (std::size_t m = 0; m < methods.size(); ++m) res.verdicts[m].push_back(s.verdicts[m]);
    }
    std::vector<double> bins = source.protocol.bins;
    for (std::size_t m = 0; m < methods.size(); ++m) {
      auto cells = detection_rate(methods[m].name, res.verdicts[m], bins);
      res.report.cells.insert(res.report.cells.end(), cells.begin(), cells.end());
    }
  }

  if (!fp_methods.empty() && !clean.empty()) {
    const auto per_frame = parallel_map(clean.size(), base.jobs, [&](std::size_t i) {
      const DatasetEntry& e = *clean[i];
      const SceneRecord scene = source.load(e);
      std::vector<std::uint8_t> cuts;
      for (const MethodSpec& m : fp_methods) {
        const FrameOutput f = run_method(scene, e, m, base);
        cuts.push_back(is_false_cut(f.corridor, source.protocol.expected_min_range, scene.camera) ? 1 : 0);
      }
      return cuts;
    });
    res.fp_frames.assign(fp_methods.size(), {});
    res.fp_runs.assign(fp_methods.size(), {});
    for (std::size_t m = 0; m < fp_methods.size(); ++m) {
      for (std::size_t i = 0; i < clean.size(); ++i) {
        const std::uint8_t cut = per_frame[i][m];
        res.fp_frames[m].push_back(cut);
        auto& runs = res.fp_runs[m];
        if (runs.empty() || runs.back().run_id != clean[i]->run) runs.push_back({clean[i]->run, 0, 0});
        runs.back().frames += 1;
        runs.back().fp_count += cut;
      }
    }
    res.report.fp_runs = res.fp_runs.front();
  }
  return res;
}

/// External predictions: `<root>/<id>/mask.png`, plus `energy.egy` or
/// `logits.lgt` when fusion is enabled. They go through the stages enabled in
/// `cfg` and are judged like an oracle method called `name`.
inline FrameOutput run_prediction(const fs::path& dir, const PipelineConfig& cfg) {
  const CorridorMask mask = read_mask_png(dir / "mask.png");
  const std::pair<int, int> dims{mask.width(), mask.height()};
  if (cfg.fusion_enabled) {
    if (fs::exists(dir / "energy.egy")) {
      const EnergyMap energy = read_energy(dir / "energy.egy", dims);
      return process_frame(mask, nullptr, cfg, nullptr, &energy);
    }
    if (fs::exists(dir / "logits.lgt")) {
      const LogitVolume logits = read_logits(dir / "logits.lgt", dims);
      return process_frame(mask, &logits, cfg);
    }
    fail(Errc::io_failure, "fusion enabled but '" + dir.string() + "' has neither energy.egy nor logits.lgt");
  }
  return process_frame(mask, nullptr, cfg);
}

inline ProtocolResult evaluate_predictions(const Dataset& dataset, const fs::path& predictions, const std::string& name,
                                           const PipelineConfig& cfg) {
  cfg.validate();
  ProtocolResult res;
  const MethodSpec method{name, "external", cfg.postprocess_enabled, cfg.fusion_enabled};
  std::vector<const DatasetEntry*> obstacle, clean;
  for (const auto& e : dataset.entries) (e.kind == EntryKind::obstacle ? obstacle : clean).push_back(&e);
  const SceneSource source{dataset.protocol, dataset.root};
  if (!obstacle.empty()) {
    res.methods = {method};
    res.verdicts.push_back(parallel_map(obstacle.size(), cfg.jobs, [&](std::size_t i) {
      const DatasetEntry& e = *obstacle[i];
      const SceneRecord scene = source.load(e);
      const FrameOutput f = run_prediction(predictions / e.id, cfg);
      DetectionVerdict v = judge_detection(f.corridor, scene, scene.camera, cfg.tolerance, e.id);
      v.distance_bin = e.bin_m;
      return v;
    }));
    std::vector<double> bins = dataset.protocol.bins;
    res.report.cells = detection_rate(name, res.verdicts.front(), bins);
  }
  if (!clean.empty()) {
    res.fp_methods = {method};
    const auto cuts = parallel_map(clean.size(), cfg.jobs, [&](std::size_t i) {
      const FrameOutput f = run_prediction(predictions / clean[i]->id, cfg);
      return static_cast<std::uint8_t>(is_false_cut(f.corridor, dataset.protocol.expected_min_range, cfg.camera));
    });
    res.fp_frames = {cuts};
    res.fp_runs.assign(1, {});
    for (std::size_t i = 0; i < clean.size(); ++i) {
      auto& runs = res.fp_runs.front();
      if (runs.empty() || runs.back().run_id != clean[i]->run) runs.push_back({clean[i]->run, 0, 0});
      runs.back().frames += 1;
      runs.back().fp_count += cuts[i];
    }
    res.report.fp_runs = res.fp_runs.front();
  }
  return res;
}

/// Verdict rows: method, scene, bin, correct, edge distance, error, failure.
inline std::string verdicts_csv(const ProtocolResult& res) {
  std::string out = "method,scene_id,bin_m,correct,estimated_edge_m,error_m,failure_mode\n";
  for (std::size_t m = 0; m < res.verdicts.size(); ++m) {
    for (const DetectionVerdict& v : res.verdicts[m]) {
      out += res.methods[m].name + "," + v.scene_id + "," + format_bin(v.distance_bin) + "," +
             (v.correct ? "1" : "0") + "," +
             (v.estimated_edge_distance ? format_double(*v.estimated_edge_distance) : std::string()) + "," +
             format_double(v.error) + "," + std::string(failure_mode_name(v.failure_mode)) + "\n";
    }
  }
  return out;
}

inline std::string fp_csv(const std::vector<FpRun>& runs) {
  EvalReport r;
  r.fp_runs = runs;
  return render_report(r).fp_csv;
}

/// Writes verdicts.csv, rates.csv, fp_<method>.csv and table.md into `dir`.
inline void write_protocol_outputs(const fs::path& dir, const ProtocolResult& res) {
  fs::create_directories(dir);
  const ReportArtifacts art = render_report(res.report);
  write_text_file(dir / "verdicts.csv", verdicts_csv(res));
  write_text_file(dir / "rates.csv", art.rates_csv);
  for (std::size_t m = 0; m < res.fp_methods.size() && m < res.fp_runs.size(); ++m) {
    write_text_file(dir / ("fp_" + res.fp_methods[m].name + ".csv"), fp_csv(res.fp_runs[m]));
  }
  std::string md = art.markdown;
  for (std::size_t m = 1; m < res.fp_methods.size() && m < res.fp_runs.size(); ++m) {
    int frames = 0, fps = 0;
    for (const FpRun& r : res.fp_runs[m]) {
      frames += r.frames;
      fps += r.fp_count;
    }
    md += "False cuts with " + res.fp_methods[m].name + " input: " + std::to_string(fps) + " of " +
          std::to_string(frames) + " frames.\n";
  }
  write_text_file(dir / "table.md", md);
}

// ---------------------------------------------------------------------------
// Latency statistics

struct LatencyStats {
  double p50 = 0.0;
  double p95 = 0.0;
  double max = 0.0;
};

/// Nearest-rank percentiles.
inline LatencyStats latency_stats(std::vector<double> samples) {
  if (samples.empty()) fail(Errc::invalid_argument, "no latency samples");
  std::sort(samples.begin(), samples.end());
  auto rank = [&](double p) {
    const auto k = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(samples.size())));
    return samples[std::clamp<std::size_t>(k, 1, samples.size()) - 1];
  };
  return {rank(50.0), rank(95.0), samples.back()};
}

struct BenchReport {
  std::vector<LatencyRecord> frames;
  LatencyStats postprocess;
  LatencyStats energy;
  LatencyStats fuse;
  LatencyStats total;
};

inline BenchReport summarize_latency(std::vector<LatencyRecord> frames) {
  BenchReport rep;
  std::vector<double> pp, en, fu, tot;
  for (const auto& f : frames) {
    pp.push_back(f.postprocess_ms);
    en.push_back(f.energy_ms);
    fu.push_back(f.fuse_ms);
    tot.push_back(f.total_ms);
  }
  rep.postprocess = latency_stats(pp);
  rep.energy = latency_stats(en);
  rep.fuse = latency_stats(fu);
  rep.total = latency_stats(tot);
  rep.frames = std::move(frames);
  return rep;
}

/// Replays `frames` oracle frames (cycling through the protocol's obstacle
/// scenes, wrap-corrupted so post-processing has work to do) through
/// post-processing, energy and fusion on the calling thread.
inline BenchReport run_bench(int frames, const ProtocolConfig& protocol, const PipelineConfig& base,
                             const std::string& corruption = "wrap") {
  if (frames < 1) fail(Errc::invalid_argument, "bench needs at least one frame");
  std::vector<DatasetEntry> entries;
  for (auto& e : protocol_entries(protocol)) {
    if (e.kind == EntryKind::obstacle) entries.push_back(std::move(e));
  }
  PipelineConfig cfg = base;
  cfg.postprocess_enabled = true;
  cfg.fusion_enabled = true;
  std::vector<LatencyRecord> records;
  records.reserve(static_cast<std::size_t>(frames));
  // Inputs are prepared one frame at a time but only the pipeline is timed.
  const std::size_t n = entries.size();
  const auto count = static_cast<std::size_t>(frames);
  for (std::size_t i = 0; i < count; ++i) {
    const DatasetEntry& e = entries[count <= n ? (i * n) / count : i % n];
    const SceneRecord scene = make_scene(e, protocol, RenderOptions{false});
    const Segmentation seg = segment(scene, parse_corruptions(corruption, corruption_seed(e)), cfg.segmenter);
    LatencyRecord lat;
    process_frame(seg.mask, &seg.logits, cfg, &lat);
    records.push_back(lat);
  }
  return summarize_latency(std::move(records));
}

inline std::string latency_csv(const BenchReport& rep) {
  std::string out = "frame,postprocess_ms,energy_ms,fuse_ms,total_ms\n";
  for (std::size_t i = 0; i < rep.frames.size(); ++i) {
    const auto& f = rep.frames[i];
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu,%.3f,%.3f,%.3f,%.3f\n", i, f.postprocess_ms, f.energy_ms, f.fuse_ms,
                  f.total_ms);
    out += buf;
  }
  return out;
}

inline std::string latency_summary(const BenchReport& rep) {
  std::string out = "stage,p50_ms,p95_ms,max_ms\n";
  auto line = [&](const char* name, const LatencyStats& s) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s,%.3f,%.3f,%.3f\n", name, s.p50, s.p95, s.max);
    out += buf;
  };
  line("postprocess", rep.postprocess);
  line("energy", rep.energy);
  line("fuse", rep.fuse);
  line("total", rep.total);
  return out;
}

}  // namespace corridor
