#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "usrecon/field.hpp"
#include "usrecon/io.hpp"
#include "usrecon/rng.hpp"
#include "usrecon/sequence.hpp"

using namespace usrecon;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("usrecon_io_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string str(const std::string& leaf = {}) const {
    return leaf.empty() ? path.string() : (path / leaf).string();
  }
};

FrameSequence sample_sequence(bool with_truth) {
  FrameSequence seq;
  seq.width = 5;
  seq.height = 4;
  seq.d_pixel = 0.5;
  seq.slice_thickness = 2.5;
  SplitMix sm(3);
  for (int f = 0; f < 3; ++f) {
    Vec3 axis(sm.uniform() - 0.5, sm.uniform() - 0.5, sm.uniform() - 0.5);
    axis.normalize();
    RigidPose p;
    p.R = so3_exp(0.2 * axis);
    p.t = Vec3(sm.uniform(), sm.uniform(), 0.7 * f);
    seq.poses.push_back(p);
  }
  if (with_truth) {
    seq.truth_poses = seq.poses;
    seq.truth_poses[1].t += Vec3(0.05, 0, 0);
  }
  seq.pixels.resize(3 * 5 * 4);
  for (float& v : seq.pixels) v = static_cast<float>(sm.uniform());
  return seq;
}

ImplicitField sample_field(uint64_t seed) {
  HashEncodingConfig enc;
  enc.num_levels = 3;
  enc.features_per_level = 2;
  enc.table_size_log2 = 5;
  enc.base_resolution = 4;
  enc.per_level_scale = 1.4;
  enc.domain.lo = Vec3(-1, -2, -3);
  enc.domain.hi = Vec3(4, 5, 6);
  MlpConfig mlp;
  mlp.hidden_layers = 2;
  mlp.hidden_dim = 12;
  ImplicitField f(enc, mlp);
  f.init_params(seed);
  SplitMix sm(seed);
  for (double& v : f.table()) v = sm.uniform() - 0.5;
  return f;
}

void corrupt_byte(const std::string& path, size_t offset) {
  std::fstream s(path, std::ios::in | std::ios::out | std::ios::binary);
  REQUIRE(s.good());
  s.seekg(0, std::ios::end);
  const size_t size = static_cast<size_t>(s.tellg());
  REQUIRE(offset < size);
  s.seekg(offset);
  char c = 0;
  s.read(&c, 1);
  c = static_cast<char>(c ^ 0x5a);
  s.seekp(offset);
  s.write(&c, 1);
}

}  // namespace

TEST_CASE("fnv1a64: reference vectors") {
  // Published constants for the empty string and "a".
  CHECK(fnv1a64("", 0) == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cull);
  const char abc[] = "abc";
  CHECK(fnv1a64(abc, 3) != fnv1a64(abc, 2));
}

TEST_CASE("atomic_write_file leaves no temporary behind") {
  TempDir tmp;
  const std::string path = tmp.str("out.txt");
  atomic_write_file(path, "hello");
  std::ifstream in(path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  CHECK(content == "hello");
  int entries = 0;
  for (const auto& e : fs::directory_iterator(tmp.path)) {
    (void)e;
    ++entries;
  }
  CHECK(entries == 1);

  // Overwrite goes through the same path.
  atomic_write_file(path, "rewritten");
  std::ifstream in2(path);
  std::string content2((std::istreambuf_iterator<char>(in2)),
                       std::istreambuf_iterator<char>());
  CHECK(content2 == "rewritten");
}

TEST_CASE("poses csv: exact round trip and diagnostics") {
  TempDir tmp;
  const FrameSequence seq = sample_sequence(false);
  const std::string path = tmp.str("poses.csv");
  save_poses_csv(path, seq.poses);
  const std::vector<RigidPose> back = load_poses_csv(path);
  REQUIRE(back.size() == seq.poses.size());
  for (size_t i = 0; i < back.size(); ++i) {
    // Quaternion round trip is exact to unit rounding, not bitwise.
    CHECK((back[i].R - seq.poses[i].R).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(back[i].t == seq.poses[i].t);
  }

  atomic_write_file(tmp.str("bad_header.csv"), "index,qw,qx\n0,1,0\n");
  CHECK_THROWS_AS(load_poses_csv(tmp.str("bad_header.csv")),
                  std::runtime_error);

  atomic_write_file(tmp.str("bad_row.csv"),
                    "index,qw,qx,qy,qz,tx,ty,tz\n0,1,0,0,0,0,0\n");
  CHECK_THROWS_AS(load_poses_csv(tmp.str("bad_row.csv")), std::runtime_error);

  atomic_write_file(tmp.str("bad_index.csv"),
                    "index,qw,qx,qy,qz,tx,ty,tz\n1,1,0,0,0,0,0,0\n");
  CHECK_THROWS_AS(load_poses_csv(tmp.str("bad_index.csv")),
                  std::runtime_error);

  CHECK_THROWS_AS(load_poses_csv(tmp.str("missing.csv")), std::runtime_error);
}

TEST_CASE("bundle: bitwise round trip with and without truth poses") {
  for (bool with_truth : {true, false}) {
    TempDir tmp;
    const FrameSequence seq = sample_sequence(with_truth);
    save_bundle(tmp.str(), seq);
    CHECK(fs::exists(tmp.path / "manifest.json"));
    CHECK(fs::exists(tmp.path / "frames.raw"));
    CHECK(fs::exists(tmp.path / "poses.csv"));
    CHECK(fs::exists(tmp.path / "truth_poses.csv") == with_truth);

    const FrameSequence back = load_bundle(tmp.str());
    CHECK(back.width == seq.width);
    CHECK(back.height == seq.height);
    CHECK(back.d_pixel == seq.d_pixel);
    CHECK(back.slice_thickness == seq.slice_thickness);
    CHECK(back.pixels == seq.pixels);  // float32 payload is bit-exact
    REQUIRE(back.poses.size() == seq.poses.size());
    for (size_t i = 0; i < back.poses.size(); ++i) {
      CHECK((back.poses[i].R - seq.poses[i].R).cwiseAbs().maxCoeff() < 1e-15);
      CHECK(back.poses[i].t == seq.poses[i].t);
    }
    CHECK(back.truth_poses.size() == seq.truth_poses.size());
  }
}

TEST_CASE("bundle: corruption and schema violations are rejected") {
  TempDir tmp;
  save_bundle(tmp.str(), sample_sequence(true));

  SUBCASE("truncated frames fail the checksum") {
    const auto raw = tmp.path / "frames.raw";
    fs::resize_file(raw, fs::file_size(raw) - 4);
    CHECK_THROWS_WITH_AS(load_bundle(tmp.str()),
                         doctest::Contains("checksum"), std::runtime_error);
  }

  SUBCASE("flipped pixel byte fails the checksum") {
    corrupt_byte((tmp.path / "frames.raw").string(), 10);
    CHECK_THROWS_WITH_AS(load_bundle(tmp.str()),
                         doctest::Contains("checksum"), std::runtime_error);
  }

  SUBCASE("unknown manifest key is named in the error") {
    const auto mf = tmp.path / "manifest.json";
    std::ifstream in(mf);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    in.close();
    const size_t brace = text.rfind('}');
    REQUIRE(brace != std::string::npos);
    std::string patched = text.substr(0, brace) +
                          ",\n  \"surprise\": 1\n}" + text.substr(brace + 1);
    atomic_write_file(mf.string(), patched);
    CHECK_THROWS_WITH_AS(load_bundle(tmp.str()),
                         doctest::Contains("surprise"), std::runtime_error);
  }

  SUBCASE("missing directory") {
    CHECK_THROWS_AS(load_bundle(tmp.str("nope")), std::runtime_error);
  }
}

TEST_CASE("bundle: uint8 frames load as scaled float") {
  TempDir tmp;
  const FrameSequence seq = sample_sequence(false);
  save_bundle(tmp.str(), seq);

  // Rewrite the payload as uint8 and patch the manifest dtype.
  std::vector<unsigned char> bytes(seq.pixels.size());
  for (size_t i = 0; i < bytes.size(); ++i)
    bytes[i] = static_cast<unsigned char>(seq.pixels[i] * 255.0f + 0.5f);
  atomic_write_file(
      (tmp.path / "frames.raw").string(),
      std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));

  std::ifstream in(tmp.path / "manifest.json");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  in.close();
  const size_t dtype = text.find("\"float32\"");
  REQUIRE(dtype != std::string::npos);
  text.replace(dtype, 9, "\"uint8\"");
  char sum[32];
  std::snprintf(sum, sizeof sum, "0x%016llx",
                static_cast<unsigned long long>(
                    fnv1a64(bytes.data(), bytes.size())));
  const size_t ck = text.find("\"frames_checksum_fnv1a64\"");
  REQUIRE(ck != std::string::npos);
  const size_t q1 = text.find('"', text.find(':', ck));
  const size_t q2 = text.find('"', q1 + 1);
  text.replace(q1 + 1, q2 - q1 - 1, sum);
  atomic_write_file((tmp.path / "manifest.json").string(), text);

  const FrameSequence back = load_bundle(tmp.str());
  REQUIRE(back.pixels.size() == seq.pixels.size());
  for (size_t i = 0; i < back.pixels.size(); ++i) {
    CHECK(back.pixels[i] == bytes[i] * (1.0f / 255.0f));  // exact dequantize
    CHECK(std::abs(back.pixels[i] - seq.pixels[i]) <= 0.5f / 255.0f + 1e-6f);
  }
}

TEST_CASE("checkpoint: full round trip preserves the field exactly") {
  TempDir tmp;
  const ImplicitField field = sample_field(21);
  const FrameSequence seq = sample_sequence(false);
  const Checkpoint ck = checkpoint_from(field, seq.poses, seq.slice_thickness);
  const std::string path = tmp.str("model.ckpt");
  save_checkpoint(path, ck);

  const Checkpoint back = load_checkpoint(path);
  CHECK(back.encoding.num_levels == ck.encoding.num_levels);
  CHECK(back.encoding.per_level_scale == ck.encoding.per_level_scale);
  CHECK(back.encoding.domain.lo == ck.encoding.domain.lo);
  CHECK(back.mlp.hidden_dim == ck.mlp.hidden_dim);
  CHECK(back.slice_thickness == ck.slice_thickness);
  CHECK(back.table == ck.table);
  REQUIRE(back.params.W.size() == ck.params.W.size());
  for (size_t i = 0; i < back.params.W.size(); ++i) {
    CHECK(back.params.W[i] == ck.params.W[i]);
    CHECK(back.params.b[i] == ck.params.b[i]);
  }
  REQUIRE(back.poses.size() == seq.poses.size());
  for (size_t i = 0; i < back.poses.size(); ++i) {
    CHECK((back.poses[i].R - seq.poses[i].R).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(back.poses[i].t == seq.poses[i].t);
  }

  // The revived field evaluates identically to the original.
  const ImplicitField revived = field_from(back);
  Eigen::Matrix3Xd pts(3, 8);
  SplitMix sm(4);
  for (int i = 0; i < 8; ++i)
    pts.col(i) = Vec3(4 * sm.uniform(), 4 * sm.uniform(), 4 * sm.uniform());
  CHECK(revived.evaluate(pts) == field.evaluate(pts));
}

TEST_CASE("checkpoint: corruption, truncation, and bad magic are rejected") {
  TempDir tmp;
  const ImplicitField field = sample_field(22);
  const std::vector<RigidPose> poses(2);
  const std::string path = tmp.str("model.ckpt");
  save_checkpoint(path, checkpoint_from(field, poses, 3.0));

  SUBCASE("flipped payload byte") {
    corrupt_byte(path, fs::file_size(path) / 2);
    CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("checksum"),
                         std::runtime_error);
  }
  SUBCASE("truncation") {
    fs::resize_file(path, fs::file_size(path) - 9);
    CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
  }
  SUBCASE("wrong magic") {
    corrupt_byte(path, 0);
    CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_checkpoint(tmp.str("absent.ckpt")),
                    std::runtime_error);
  }
}

TEST_CASE("volume: raw + sidecar round trip") {
  TempDir tmp;
  Volume vol;
  vol.grid.origin = Vec3(-1.5, 0.25, 3.0);
  vol.grid.spacing = 0.4;
  vol.grid.nx = 6;
  vol.grid.ny = 5;
  vol.grid.nz = 4;
  vol.data.resize(vol.grid.count());
  SplitMix sm(8);
  for (float& v : vol.data) v = static_cast<float>(sm.uniform());

  const std::string stem = tmp.str("vol");
  save_volume(stem, vol);
  CHECK(fs::exists(tmp.path / "vol.raw"));
  CHECK(fs::exists(tmp.path / "vol.json"));

  const Volume back = load_volume(stem);
  CHECK(back.grid.origin == vol.grid.origin);
  CHECK(back.grid.spacing == vol.grid.spacing);
  CHECK(back.grid.nx == 6);
  CHECK(back.grid.ny == 5);
  CHECK(back.grid.nz == 4);
  CHECK(back.data == vol.data);

  corrupt_byte(tmp.str("vol.raw"), 7);
  CHECK_THROWS_WITH_AS(load_volume(stem), doctest::Contains("checksum"),
                       std::runtime_error);
}

TEST_CASE("trace csv: header and one row per epoch") {
  TempDir tmp;
  std::vector<EpochTrace> trace(2);
  trace[0].epoch = 0;
  trace[0].l_i = 0.5;
  trace[0].chi = 0.75;
  trace[1].epoch = 1;
  trace[1].l_i = 0.25;
  trace[1].mean_dt_mm = 0.125;
  const std::string path = tmp.str("trace.csv");
  save_trace_csv(path, trace);

  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "epoch,l_i,l_dist,l_angle,r_v,chi,mean_dt_mm,mean_dr_deg");
  int rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 2);
}
