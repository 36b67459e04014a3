// corridorpp: file-to-file stages of the ego-corridor obstacle pipeline.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "corridor/config.hpp"
#include "corridor/dataset.hpp"
#include "corridor/energy.hpp"
#include "corridor/evaluation.hpp"
#include "corridor/fusion.hpp"
#include "corridor/io.hpp"
#include "corridor/pipeline.hpp"
#include "corridor/postprocess.hpp"
#include "corridor/scene.hpp"
#include "corridor/segmenter.hpp"

namespace {

using namespace corridor;

struct GlobalOptions {
  std::string config_path;
  int jobs = 0;  // 0: keep the config value
};

PipelineConfig load_config(const GlobalOptions& g) {
  PipelineConfig cfg = load_pipeline_config(g.config_path.empty() ? std::nullopt
                                                                   : std::optional<fs::path>(g.config_path));
  if (g.jobs > 0) cfg.jobs = g.jobs;
  cfg.validate();
  return cfg;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = s.find(',', pos);
    const std::string item = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

void check_camera_size(const CameraModel& cam, int w, int h, const std::string& what) {
  if (w != cam.width || h != cam.height) {
    fail(Errc::format_mismatch, what + " is " + std::to_string(w) + "x" + std::to_string(h) + " but the camera is " +
                                    std::to_string(cam.width) + "x" + std::to_string(cam.height));
  }
}

// --- scenegen ---------------------------------------------------------------

struct ScenegenArgs {
  std::string protocol;
  std::string protocol_file;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> distance;
  std::string sprite = "suitcase";
  std::optional<double> lateral;
  bool manifest_only = false;
};

void run_scenegen(const ScenegenArgs& a, const GlobalOptions& g) {
  const PipelineConfig cfg = load_config(g);
  if (a.protocol.empty() && a.protocol_file.empty()) {
    // Single scene.
    ScenarioSpec spec;
    spec.camera = cfg.camera;
    spec.rng_seed = a.seed.value_or(0);
    if (a.distance) {
      const Sprite& sprite = SpriteLibrary::builtin().get(a.sprite);
      Rng rng(derive_seed(spec.rng_seed, hash_tag("placement")));
      spec.sprite_id = a.sprite;
      spec.obstacle = sample_placement(rng, spec, sprite, *a.distance);
      if (a.lateral) spec.obstacle->lateral_offset = *a.lateral;
    }
    save_scene(a.out, render_scene(spec));
    std::printf("wrote scene to %s\n", a.out.c_str());
    return;
  }
  ProtocolConfig protocol =
      a.protocol_file.empty() ? protocol_preset(a.protocol) : protocol_from(read_key_values(a.protocol_file));
  if (a.seed) protocol.master_seed = *a.seed;
  protocol.camera = cfg.camera;
  if (a.manifest_only) {
    const auto entries = protocol_entries(protocol);
    write_text_file(fs::path(a.out) / "manifest.txt", protocol_manifest(entries));
    write_text_file(fs::path(a.out) / "protocol.txt", to_key_values(protocol).to_text());
    std::printf("wrote manifest with %zu entries to %s\n", entries.size(), a.out.c_str());
    return;
  }
  const Dataset ds = generate_dataset(protocol, a.out, cfg.jobs);
  std::printf("wrote %zu scenes to %s\n", ds.entries.size(), a.out.c_str());
}

// --- segment ----------------------------------------------------------------

struct SegmentArgs {
  std::string scene;
  std::string dataset;
  std::string out;
  std::string corrupt = "clean";
  std::optional<std::uint64_t> seed;
  bool logits = false;
  bool energy = false;
};

void segment_one(const SceneRecord& scene, const CorruptionConfig& corr, const PipelineConfig& cfg,
                 const fs::path& out, bool with_logits, bool with_energy) {
  if (with_logits || with_energy) {
    const Segmentation seg = segment(scene, corr, cfg.segmenter);
    write_mask_png(out / "mask.png", seg.mask);
    if (with_logits) write_logits(out / "logits.lgt", seg.logits);
    if (with_energy) write_energy(out / "energy.egy", energy_from_logits(seg.logits));
  } else {
    write_mask_png(out / "mask.png", segment_mask(scene, corr, cfg.segmenter));
  }
}

void run_segment(const SegmentArgs& a, const GlobalOptions& g) {
  const PipelineConfig cfg = load_config(g);
  if (a.scene.empty() == a.dataset.empty()) fail(Errc::invalid_argument, "give exactly one of --scene or --dataset");
  if (!a.scene.empty()) {
    const SceneRecord scene = load_scene(a.scene);
    const auto corr = parse_corruptions(a.corrupt, a.seed.value_or(corruption_seed(scene.meta.seed)));
    segment_one(scene, corr, cfg, a.out, a.logits, a.energy);
    std::printf("wrote %s/mask.png\n", a.out.c_str());
    return;
  }
  const Dataset ds = open_dataset(a.dataset);
  parallel_for(ds.entries.size(), cfg.jobs, [&](std::size_t i) {
    const DatasetEntry& e = ds.entries[i];
    const SceneRecord scene = load_scene(ds.root / e.id);
    const auto corr = parse_corruptions(a.corrupt, a.seed ? derive_seed(*a.seed, e.index) : corruption_seed(e));
    segment_one(scene, corr, cfg, fs::path(a.out) / e.id, a.logits, a.energy);
  });
  std::printf("wrote %zu predictions to %s\n", ds.entries.size(), a.out.c_str());
}

// --- postprocess / energy / fuse ----------------------------------------------

struct PostprocessArgs {
  std::string mask;
  std::string out;
};

void run_postprocess(const PostprocessArgs& a, const GlobalOptions& g) {
  const PipelineConfig cfg = load_config(g);
  const CorridorMask mask = read_mask_png(a.mask);
  check_camera_size(cfg.camera, mask.width(), mask.height(), a.mask);
  const PostprocessResult res = postprocess(mask, cfg.postprocess, cfg.camera);
  write_mask_png(a.out, res.corridor);
  if (res.edge.edge_distance) {
    std::printf("edge_row=%.0f edge_distance_m=%.3f\n", *res.edge.edge_row, *res.edge.edge_distance);
  } else if (res.edge.edge_row) {
    std::printf("edge_row=%.0f edge_distance_m=inf\n", *res.edge.edge_row);
  } else {
    std::printf("edge_row=none\n");
  }
}

struct EnergyArgs {
  std::string logits;
  std::string out;
  std::string outliers;
  std::optional<float> threshold;
};

void run_energy(const EnergyArgs& a, const GlobalOptions& g) {
  const PipelineConfig cfg = load_config(g);
  const LogitVolume logits = read_logits(a.logits);
  const EnergyMap energy = energy_from_logits(logits);
  write_energy(a.out, energy);
  if (!a.outliers.empty()) {
    write_mask_png(a.outliers, threshold_outliers(energy, a.threshold.value_or(cfg.fusion.energy_threshold)));
  }
  std::printf("wrote %s (%dx%d)\n", a.out.c_str(), energy.width(), energy.height());
}

struct FuseArgs {
  std::string corridor;
  std::string energy;
  std::string out;
};

void run_fuse(const FuseArgs& a, const GlobalOptions& g) {
  const PipelineConfig cfg = load_config(g);
  const CorridorMask corridor = read_mask_png(a.corridor);
  const EnergyMap energy = read_energy(a.energy);
  if (!energy.same_shape(corridor)) {
    fail(Errc::format_mismatch, "energy raster " + std::to_string(energy.width()) + "x" +
                                    std::to_string(energy.height()) + " does not match the corridor mask " +
                                    std::to_string(corridor.width()) + "x" + std::to_string(corridor.height()));
  }
  check_camera_size(cfg.camera, corridor.width(), corridor.height(), a.corridor);
  const auto blobs = extract_blobs(threshold_outliers(energy, cfg.fusion.energy_threshold), cfg.fusion, &cfg.camera);
  const FusionResult res = fuse(corridor, blobs, cfg.camera);
  write_mask_png(a.out, res.corridor);
  std::printf("blobs=%zu acted=%s", blobs.size(), res.report.acted_blob ? "yes" : "no");
  if (res.report.edge_distance) std::printf(" edge_distance_m=%.3f", *res.report.edge_distance);
  std::printf("\n");
}

// --- eval / report ----------------------------------------------------------

struct EvalArgs {
  std::string dataset;
  std::string protocol;
  std::optional<std::uint64_t> seed;
  std::string predictions;
  std::string name = "external";
  std::string methods;
  std::string fp_methods;
  std::string out;
};

void run_eval(const EvalArgs& a, const GlobalOptions& g) {
  const PipelineConfig cfg = load_config(g);
  ProtocolResult res;
  if (!a.predictions.empty()) {
    if (a.dataset.empty()) fail(Errc::invalid_argument, "--predictions needs --dataset");
    res = evaluate_predictions(open_dataset(a.dataset), a.predictions, a.name, cfg);
  } else {
    std::vector<MethodSpec> methods = standard_methods();
    std::vector<MethodSpec> fp_methods = standard_fp_methods();
    if (!a.methods.empty()) {
      methods.clear();
      for (const auto& n : split_list(a.methods)) methods.push_back(find_method(n));
    }
    if (!a.fp_methods.empty()) {
      fp_methods.clear();
      for (const auto& n : split_list(a.fp_methods)) fp_methods.push_back(find_method(n));
    }
    if (!a.dataset.empty()) {
      const Dataset ds = open_dataset(a.dataset);
      res = evaluate_protocol(SceneSource{ds.protocol, ds.root}, ds.entries, methods, fp_methods, cfg);
    } else {
      ProtocolConfig protocol = protocol_preset(a.protocol.empty() ? "full" : a.protocol);
      if (a.seed) protocol.master_seed = *a.seed;
      protocol.camera = cfg.camera;
      res = evaluate_protocol(SceneSource{protocol, std::nullopt}, protocol_entries(protocol), methods, fp_methods,
                              cfg);
    }
  }
  write_protocol_outputs(a.out, res);
  std::fputs(render_report(res.report).markdown.c_str(), stdout);
}

struct ReportArgs {
  std::string in;
  std::string rates;
  std::string fp;
  std::string out;
};

void run_report(const ReportArgs& a, const GlobalOptions&) {
  fs::path rates = a.rates, fp = a.fp;
  if (!a.in.empty()) {
    if (rates.empty()) rates = fs::path(a.in) / "rates.csv";
    if (fp.empty() && fs::exists(fs::path(a.in) / "fp_clean.csv")) fp = fs::path(a.in) / "fp_clean.csv";
  }
  if (rates.empty()) fail(Errc::invalid_argument, "give --in or --rates");
  EvalReport report;
  report.cells = parse_rates_csv(read_text_file(rates), rates.string());
  if (!fp.empty()) report.fp_runs = parse_fp_csv(read_text_file(fp), fp.string());
  const ReportArtifacts art = render_report(report);
  if (a.out.empty()) {
    std::fputs(art.markdown.c_str(), stdout);
  } else {
    write_text_file(a.out, art.markdown);
    std::printf("wrote %s\n", a.out.c_str());
  }
}

// --- bench ------------------------------------------------------------------

struct BenchArgs {
  int frames = 100;
  std::string protocol = "full";
  std::string corrupt = "wrap";
  std::string out;
};

void run_bench_cmd(const BenchArgs& a, const GlobalOptions& g) {
  PipelineConfig cfg = load_config(g);
  ProtocolConfig protocol = protocol_preset(a.protocol);
  protocol.camera = cfg.camera;
  const BenchReport rep = run_bench(a.frames, protocol, cfg, a.corrupt);
  const std::string summary = latency_summary(rep);
  std::fputs(summary.c_str(), stdout);
  if (!a.out.empty()) {
    write_text_file(fs::path(a.out) / "latency.csv", latency_csv(rep));
    write_text_file(fs::path(a.out) / "latency_summary.csv", summary);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ego-corridor obstacle detection: scene generation, post-processing, fusion and evaluation"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config_path, std::string("pipeline config file (default: $") + kConfigEnvVar + ")");
  app.add_option("--jobs,-j", g.jobs, "worker threads for batch subcommands")->check(CLI::PositiveNumber);

  ScenegenArgs sg;
  auto* scenegen = app.add_subcommand("scenegen", "render a protocol dataset or a single scene");
  scenegen->add_option("--protocol", sg.protocol, "protocol preset: full or tiny");
  scenegen->add_option("--protocol-file", sg.protocol_file, "protocol key-value file");
  scenegen->add_option("--seed", sg.seed, "master seed (protocol) or scene seed");
  scenegen->add_option("--out", sg.out, "output directory")->required();
  scenegen->add_option("--distance", sg.distance, "single scene: obstacle distance in metres");
  scenegen->add_option("--sprite", sg.sprite, "single scene: sprite id");
  scenegen->add_option("--lateral", sg.lateral, "single scene: lateral offset in metres");
  scenegen->add_flag("--manifest-only", sg.manifest_only, "write manifest.txt and protocol.txt only");

  SegmentArgs seg;
  auto* segment_cmd = app.add_subcommand("segment", "oracle segmenter: corridor mask and optional logits/energy");
  segment_cmd->add_option("--scene", seg.scene, "scene directory");
  segment_cmd->add_option("--dataset", seg.dataset, "dataset directory (predicts every entry)");
  segment_cmd->add_option("--out", seg.out, "output directory")->required();
  segment_cmd->add_option("--corrupt", seg.corrupt, "corruptions, e.g. wrap,holes:0.005,miss_near:60");
  segment_cmd->add_option("--seed", seg.seed, "corruption seed");
  segment_cmd->add_flag("--logits", seg.logits, "also write logits.lgt");
  segment_cmd->add_flag("--energy", seg.energy, "also write energy.egy");

  PostprocessArgs pp;
  auto* postprocess_cmd = app.add_subcommand("postprocess", "clean a corridor mask and cut it at a width drop");
  postprocess_cmd->add_option("--mask", pp.mask, "input mask PNG")->required();
  postprocess_cmd->add_option("--out", pp.out, "output mask PNG")->required();

  EnergyArgs en;
  auto* energy_cmd = app.add_subcommand("energy", "free-energy raster from a logits file");
  energy_cmd->add_option("--logits", en.logits, "input logits file")->required();
  energy_cmd->add_option("--out", en.out, "output energy file")->required();
  energy_cmd->add_option("--outliers", en.outliers, "also write the thresholded outlier mask PNG");
  energy_cmd->add_option("--threshold", en.threshold, "energy threshold (default from config)");

  FuseArgs fu;
  auto* fuse_cmd = app.add_subcommand("fuse", "cut a corridor at intersecting outlier blobs");
  fuse_cmd->add_option("--corridor", fu.corridor, "corridor mask PNG")->required();
  fuse_cmd->add_option("--energy", fu.energy, "energy file")->required();
  fuse_cmd->add_option("--out", fu.out, "output mask PNG")->required();

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "judge methods over the protocol and write verdicts and rates");
  eval->add_option("--dataset", ev.dataset, "dataset directory (default: render in memory)");
  eval->add_option("--protocol", ev.protocol, "preset when rendering in memory");
  eval->add_option("--seed", ev.seed, "master seed when rendering in memory");
  eval->add_option("--predictions", ev.predictions, "directory of external predictions (<id>/mask.png)");
  eval->add_option("--name", ev.name, "method name for external predictions");
  eval->add_option("--methods", ev.methods, "comma-separated oracle methods");
  eval->add_option("--fp-methods", ev.fp_methods, "comma-separated oracle methods for obstacle-free runs");
  eval->add_option("--out", ev.out, "output directory")->required();

  ReportArgs rp;
  auto* report = app.add_subcommand("report", "render rate CSVs as a Markdown table");
  report->add_option("--in", rp.in, "eval output directory");
  report->add_option("--rates", rp.rates, "rates CSV");
  report->add_option("--fp", rp.fp, "false-positive CSV");
  report->add_option("--out", rp.out, "output Markdown file (default: stdout)");

  BenchArgs bn;
  auto* bench = app.add_subcommand("bench", "single-threaded per-frame latency of post-processing, energy and fusion");
  bench->add_option("--frames", bn.frames, "number of frames")->check(CLI::PositiveNumber);
  bench->add_option("--protocol", bn.protocol, "protocol preset supplying the frames");
  bench->add_option("--corrupt", bn.corrupt, "oracle corruption of the replayed frames");
  bench->add_option("--out", bn.out, "directory for latency.csv and latency_summary.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*scenegen) run_scenegen(sg, g);
    if (*segment_cmd) run_segment(seg, g);
    if (*postprocess_cmd) run_postprocess(pp, g);
    if (*energy_cmd) run_energy(en, g);
    if (*fuse_cmd) run_fuse(fu, g);
    if (*eval) run_eval(ev, g);
    if (*report) run_report(rp, g);
    if (*bench) run_bench_cmd(bn, g);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: code=%s message=%s\n", std::string(errc_name(e.code())).c_str(), e.what());
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: code=IoFailure message=%s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: code=Internal message=%s\n", e.what());
    return 3;
  }
  return 0;
}
