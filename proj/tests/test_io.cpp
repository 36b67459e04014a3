#include <cstdlib>
#include <cstring>

#include "corridor/config.hpp"
#include "corridor/dataset.hpp"
#include "corridor/io.hpp"
#include "support.hpp"

using namespace corridor;
using corridor::testing::obstacle_scene;
using corridor::testing::TempDir;

namespace {

EnergyMap sample_energy(int w, int h) {
  EnergyMap e(w, h);
  corridor::Rng rng(17);
  for (float& v : e.pixels()) v = static_cast<float>(rng.uniform(-20.0, 5.0));
  e(0, 0) = -0.0f;
  e(1, 1) = 1e-42f;  // subnormal
  return e;
}

// Reverses every 4-byte word after the magic.
std::string byteswapped(std::string bytes) {
  for (std::size_t i = 4; i + 4 <= bytes.size(); i += 4) {
    std::swap(bytes[i], bytes[i + 3]);
    std::swap(bytes[i + 1], bytes[i + 2]);
  }
  return bytes;
}

bool bit_identical(const EnergyMap& a, const EnergyMap& b) {
  return a.same_shape(b) && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST(EnergyFile, RoundTripIsBitIdentical) {
  TempDir dir("energy_rt");
  const EnergyMap e = sample_energy(33, 21);
  write_energy(dir / "e.egy", e);
  EXPECT_TRUE(bit_identical(read_energy(dir / "e.egy"), e));
  EXPECT_EQ(encode_energy(e).size(), 16u + 33u * 21u * 4u);
  EXPECT_EQ(encode_energy(e).substr(0, 4), "EGY1");
}

TEST(EnergyFile, HeaderErrors) {
  const std::string good = encode_energy(sample_energy(8, 4));
  std::string bad = good;
  bad[0] = 'X';
  EXPECT_ERRC(decode_energy(bad), Errc::bad_magic);
  EXPECT_ERRC(decode_energy(good.substr(0, 10)), Errc::truncated_file);
  EXPECT_ERRC(decode_energy(good.substr(0, good.size() - 4)), Errc::truncated_file);
  EXPECT_ERRC(decode_energy(good + "xxxx"), Errc::dimension_mismatch);
  EXPECT_ERRC(decode_energy(good, std::pair{8, 5}), Errc::dimension_mismatch);
  std::string flag = good;
  flag[12] = 9;
  EXPECT_ERRC(decode_energy(flag), Errc::bad_magic);
}

TEST(EnergyFile, OtherEndiannessIsRead) {
  const EnergyMap e = sample_energy(5, 3);
  EXPECT_TRUE(bit_identical(decode_energy(byteswapped(encode_energy(e))), e));
}

TEST(EnergyFile, MissingFileIsIoFailure) {
  EXPECT_ERRC(read_energy("/nonexistent/dir/e.egy"), Errc::io_failure);
}

TEST(LogitsFile, RoundTrip) {
  LogitVolume v(7, 5, 19);
  corridor::Rng rng(3);
  for (float& z : v.values()) z = static_cast<float>(rng.uniform(-9, 9));
  const std::string bytes = encode_logits(v);
  EXPECT_EQ(bytes.size(), 20u + 7u * 5u * 19u * 4u);
  EXPECT_EQ(decode_logits(bytes), v);
  EXPECT_EQ(decode_logits(byteswapped(bytes)), v);
  EXPECT_ERRC(decode_logits(encode_energy(EnergyMap(2, 2))), Errc::bad_magic);
  EXPECT_ERRC(decode_logits(bytes, std::pair{7, 6}), Errc::dimension_mismatch);
}

TEST(MaskPng, RoundTripAndValueCheck) {
  TempDir dir("mask_png");
  Mask m(40, 30, 0);
  for (int r = 5; r < 25; ++r) m(r, r) = 1;
  write_mask_png(dir / "m.png", m);
  EXPECT_EQ(read_mask_png(dir / "m.png"), m);

  std::vector<std::uint8_t> raw(40 * 30, 0);
  raw[77] = 128;
  detail::write_png(dir / "bad.png", raw.data(), 40, 30, 1);
  EXPECT_ERRC(read_mask_png(dir / "bad.png"), Errc::format_mismatch);

  const RgbImage rgb(4, 4, Rgb8{255, 255, 255});
  write_rgb_png(dir / "rgb.png", rgb);
  EXPECT_ERRC(read_mask_png(dir / "rgb.png"), Errc::format_mismatch);
  EXPECT_EQ(read_rgb_png(dir / "rgb.png"), rgb);

  write_text_file(dir / "junk.png", "not a png");
  EXPECT_ERRC(read_mask_png(dir / "junk.png"), Errc::format_mismatch);
}

TEST(KeyValueFormat, ParseAndErrors) {
  const KeyValues kv = KeyValues::parse("# comment\n\na = 1\n b=two words \nc = 0.25\n", "t");
  EXPECT_EQ(kv.get_int("a"), 1);
  EXPECT_EQ(kv.get("b"), "two words");
  EXPECT_DOUBLE_EQ(kv.get_double("c"), 0.25);
  EXPECT_EQ(KeyValues::parse(kv.to_text(), "again").entries(), kv.entries());
  try {
    KeyValues::parse("a = 1\nb = 2\nbroken line\n", "cfg.txt");
    FAIL() << "no error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::config_parse_error);
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos) << e.what();
  }
  EXPECT_ERRC(KeyValues::parse("a = 1\na = 2\n", "dup"), Errc::config_parse_error);
  EXPECT_ERRC(KeyValues::parse(" = 2\n", "empty"), Errc::config_parse_error);
}

TEST(KeyValueFormat, DoublesRoundTripExactly) {
  KeyValues kv;
  kv.set("x", 0.1 + 0.2);
  kv.set("y", 1e-300);
  const KeyValues back = KeyValues::parse(kv.to_text(), "t");
  EXPECT_EQ(back.get_double("x"), 0.1 + 0.2);
  EXPECT_EQ(back.get_double("y"), 1e-300);
}

TEST(PipelineConfigFile, RoundTripAndUnknownKeys) {
  PipelineConfig cfg;
  cfg.tolerance = 0.2;
  cfg.fusion_enabled = true;
  cfg.postprocess.closing_radius = 3;
  cfg.camera.pitch = 0.01;
  const PipelineConfig back = pipeline_config_from(to_key_values(cfg));
  EXPECT_EQ(back.tolerance, 0.2);
  EXPECT_TRUE(back.fusion_enabled);
  EXPECT_EQ(back.postprocess.closing_radius, 3);
  EXPECT_EQ(back.camera, cfg.camera);
  EXPECT_ERRC(pipeline_config_from(KeyValues::parse("bogus = 1\n", "t")), Errc::config_parse_error);
  EXPECT_ERRC(pipeline_config_from(KeyValues::parse("jobs = 0\n", "t")), Errc::config_parse_error);
  EXPECT_ERRC(pipeline_config_from(KeyValues::parse("jobs = many\n", "t")), Errc::config_parse_error);
}

TEST(PipelineConfigFile, EnvironmentVariableIsHonoured) {
  TempDir dir("env_cfg");
  write_text_file(dir / "c.txt", "eval.tolerance = 0.15\nfusion.enabled = true\n");
  write_text_file(dir / "explicit.txt", "eval.tolerance = 0.05\n");
  ::setenv(kConfigEnvVar, (dir / "c.txt").c_str(), 1);
  const PipelineConfig cfg = load_pipeline_config();
  EXPECT_EQ(cfg.tolerance, 0.15);
  EXPECT_TRUE(cfg.fusion_enabled);
  EXPECT_EQ(load_pipeline_config(dir / "explicit.txt").tolerance, 0.05);
  ::unsetenv(kConfigEnvVar);
  EXPECT_EQ(load_pipeline_config().tolerance, 0.10);
}

TEST(ProtocolFile, RoundTrip) {
  ProtocolConfig p = protocol_preset("tiny");
  p.bins = {30.0, 75.5};
  p.master_seed = 0xFFFFFFFFFFFFull;
  const ProtocolConfig back = protocol_from(to_key_values(p));
  EXPECT_EQ(back.bins, p.bins);
  EXPECT_EQ(back.master_seed, p.master_seed);
  EXPECT_EQ(back.sprites, 4);
  EXPECT_ERRC(protocol_preset("huge"), Errc::config_parse_error);
}

TEST(Manifest, RoundTrip) {
  const auto entries = protocol_entries(protocol_preset("tiny"));
  const std::string text = protocol_manifest(entries);
  const auto records = parse_manifest(text);
  ASSERT_EQ(records.size(), entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const DatasetEntry e = entry_from_record(records[i]);
    EXPECT_EQ(e.id, entries[i].id);
    EXPECT_EQ(e.seed, entries[i].seed);
    EXPECT_EQ(e.kind, entries[i].kind);
    EXPECT_EQ(e.bin_m, entries[i].bin_m);
  }
  EXPECT_EQ(format_manifest(records), text);
}

TEST(SceneFiles, SaveAndLoad) {
  TempDir dir("scene_files");
  ScenarioSpec spec = corridor::testing::obstacle_spec(50.0, "tire", 0.2, 4);
  spec.obstacle->rotation = 7.5;
  const SceneRecord rec = render_scene(spec);
  save_scene(dir.path(), rec);
  const SceneRecord back = load_scene(dir.path(), true);
  EXPECT_EQ(back.gt_corridor, rec.gt_corridor);
  EXPECT_EQ(back.gt_obstacle, rec.gt_obstacle);
  EXPECT_EQ(back.image, rec.image);
  EXPECT_EQ(back.meta, rec.meta);
  EXPECT_EQ(back.camera, rec.camera);
}

TEST(SceneFiles, MaskSizeMustMatchCamera) {
  TempDir dir("scene_dims");
  const SceneRecord rec = obstacle_scene(50.0);
  save_scene(dir.path(), rec);
  write_mask_png(dir / "gt_corridor.png", Mask(100, 100, 0));
  EXPECT_ERRC(load_scene(dir.path()), Errc::format_mismatch);
}
