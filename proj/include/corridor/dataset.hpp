#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "corridor/config.hpp"
#include "corridor/evaluation.hpp"
#include "corridor/io.hpp"
#include "corridor/parallel.hpp"
#include "corridor/rng.hpp"
#include "corridor/scene.hpp"
#include "corridor/sprite.hpp"

namespace corridor {

enum class EntryKind { obstacle, clean };

/// One scene of the protocol. `index` is the position in the manifest and
/// also the seed index: seed = derive_seed(master_seed, index).
struct DatasetEntry {
  std::size_t index = 0;
  EntryKind kind = EntryKind::obstacle;
  double bin_m = 0.0;
  std::string sprite_id;
  int variant = 0;
  int run = 0;
  int frame = 0;
  std::uint64_t seed = 0;
  std::string id;   // stable name, also the relative directory
};

inline std::string bin_label(double bin) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%03d", static_cast<int>(std::lround(bin)));
  return buf;
}

/// Obstacle scenes first (bin, sprite, variant), then the obstacle-free runs.
inline std::vector<DatasetEntry> protocol_entries(const ProtocolConfig& protocol,
                                                  const SpriteLibrary& library = SpriteLibrary::builtin()) {
  protocol.validate();
  if (library.size() < static_cast<std::size_t>(protocol.sprites)) {
    fail(Errc::insufficient_sprites, "protocol needs " + std::to_string(protocol.sprites) + " sprites, library has " +
                                         std::to_string(library.size()));
  }
  std::vector<DatasetEntry> entries;
  for (double bin : protocol.bins) {
    for (int s = 0; s < protocol.sprites; ++s) {
      for (int v = 0; v < protocol.variants; ++v) {
        DatasetEntry e;
        e.index = entries.size();
        e.kind = EntryKind::obstacle;
        e.bin_m = bin;
        e.sprite_id = library.at(static_cast<std::size_t>(s)).id;
        e.variant = v;
        e.seed = derive_seed(protocol.master_seed, e.index);
        e.id = "scenes/" + bin_label(bin) + "/" + e.sprite_id + "/" + std::to_string(v);
        entries.push_back(std::move(e));
      }
    }
  }
  for (int run = 0; run < protocol.fp_runs; ++run) {
    for (int f = 0; f < protocol.frames_per_run; ++f) {
      DatasetEntry e;
      e.index = entries.size();
      e.kind = EntryKind::clean;
      e.run = run;
      e.frame = f;
      e.seed = derive_seed(protocol.master_seed, e.index);
      char buf[48];
      std::snprintf(buf, sizeof buf, "clean/run_%02d/frame_%04d", run, f);
      e.id = buf;
      entries.push_back(std::move(e));
    }
  }
  return entries;
}

inline ScenarioSpec scenario_for(const DatasetEntry& entry, const ProtocolConfig& protocol,
                                 const SpriteLibrary& library = SpriteLibrary::builtin()) {
  ScenarioSpec spec;
  spec.camera = protocol.camera;
  spec.lane_width = protocol.lane_width;
  spec.max_corridor_range = protocol.max_corridor_range;
  spec.feather_radius = protocol.feather_radius;
  spec.rng_seed = entry.seed;
  if (entry.kind == EntryKind::obstacle) {
    const Sprite& sprite = library.get(entry.sprite_id);
    Rng rng(derive_seed(entry.seed, hash_tag("placement")));
    spec.sprite_id = entry.sprite_id;
    spec.obstacle = sample_placement(rng, spec, sprite, entry.bin_m, protocol.ranges);
  }
  return spec;
}

inline SceneRecord make_scene(const DatasetEntry& entry, const ProtocolConfig& protocol, const RenderOptions& options = {},
                              const SpriteLibrary& library = SpriteLibrary::builtin()) {
  return render_scene(scenario_for(entry, protocol, library), library, options);
}

inline ManifestRecord manifest_record(const DatasetEntry& e) {
  ManifestRecord rec;
  rec.set("index", static_cast<std::uint64_t>(e.index));
  rec.set("id", e.id);
  rec.set("kind", e.kind == EntryKind::obstacle ? "obstacle" : "clean");
  if (e.kind == EntryKind::obstacle) {
    rec.set("bin_m", format_bin(e.bin_m));
    rec.set("sprite", e.sprite_id);
    rec.set("variant", e.variant);
  } else {
    rec.set("run", e.run);
    rec.set("frame", e.frame);
  }
  rec.set("seed", e.seed);
  return rec;
}

inline DatasetEntry entry_from_record(const ManifestRecord& rec) {
  DatasetEntry e;
  e.index = rec.get_u64("index");
  e.id = rec.get("id");
  const std::string& kind = rec.get("kind");
  if (kind == "obstacle") {
    e.kind = EntryKind::obstacle;
    e.bin_m = rec.get_double("bin_m");
    e.sprite_id = rec.get("sprite");
    e.variant = static_cast<int>(rec.get_int("variant"));
  } else if (kind == "clean") {
    e.kind = EntryKind::clean;
    e.run = static_cast<int>(rec.get_int("run"));
    e.frame = static_cast<int>(rec.get_int("frame"));
  } else {
    fail(Errc::config_parse_error, "manifest entry kind '" + kind + "' is neither obstacle nor clean");
  }
  e.seed = rec.get_u64("seed");
  return e;
}

inline std::string protocol_manifest(const std::vector<DatasetEntry>& entries) {
  std::vector<ManifestRecord> recs;
  recs.reserve(entries.size());
  for (const auto& e : entries) recs.push_back(manifest_record(e));
  return format_manifest(recs);
}

struct Dataset {
  fs::path root;
  ProtocolConfig protocol;
  std::vector<DatasetEntry> entries;
};

/// Renders every protocol scene into `root` (one directory per entry) and
/// writes manifest.txt and protocol.txt. Output bytes depend only on the
/// protocol, never on `jobs`.
inline Dataset generate_dataset(const ProtocolConfig& protocol, const fs::path& root, int jobs = 1,
                                const SpriteLibrary& library = SpriteLibrary::builtin()) {
  Dataset ds{root, protocol, protocol_entries(protocol, library)};
  fs::create_directories(root);
  parallel_for(ds.entries.size(), jobs, [&](std::size_t i) {
    const DatasetEntry& e = ds.entries[i];
    save_scene(root / e.id, make_scene(e, protocol, {}, library));
  });
  write_text_file(root / "protocol.txt", to_key_values(protocol).to_text());
  write_text_file(root / "manifest.txt", protocol_manifest(ds.entries));
  return ds;
}

inline Dataset open_dataset(const fs::path& root) {
  Dataset ds;
  ds.root = root;
  ds.protocol = protocol_from(read_key_values(root / "protocol.txt"));
  for (const auto& rec : read_manifest(root / "manifest.txt")) ds.entries.push_back(entry_from_record(rec));
  return ds;
}

}  // namespace corridor
