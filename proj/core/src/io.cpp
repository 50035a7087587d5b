#include "usrecon/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian; big-endian hosts need swaps");

namespace usrecon {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream os;
  os << f.rdbuf();
  if (!f.good() && !f.eof())
    throw std::runtime_error("failed reading file: " + path);
  return os.str();
}

std::string hex64(uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

uint64_t parse_hex64(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 16);
  if (s.empty() || end != s.c_str() + s.size())
    throw std::runtime_error("cannot parse " + what + ": '" + s + "'");
  return v;
}

void check_keys(const json& j, std::initializer_list<const char*> known,
                const std::string& what) {
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* n : known)
      if (k == n) {
        ok = true;
        break;
      }
    if (!ok) throw std::runtime_error("unknown key '" + k + "' in " + what);
  }
}

template <class T>
void put(std::string& s, T v) {
  s.append(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_doubles(std::string& s, const double* p, size_t n) {
  s.append(reinterpret_cast<const char*>(p), n * sizeof(double));
}

struct Reader {
  const std::string& s;
  size_t at = 0;

  void need(size_t n) const {
    if (at + n > s.size()) throw std::runtime_error("truncated checkpoint");
  }
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, s.data() + at, sizeof v);
    at += sizeof v;
    return v;
  }
  void get_doubles(double* p, size_t n) {
    need(n * sizeof(double));
    std::memcpy(p, s.data() + at, n * sizeof(double));
    at += n * sizeof(double);
  }
};

std::ostringstream precise_stream() {
  std::ostringstream os;
  os.precision(17);
  return os;
}

constexpr char kCheckpointMagic[8] = {'U', 'S', 'R', 'E', 'C', 'K', 'P', 'T'};
constexpr uint32_t kCheckpointVersion = 1;

}  // namespace

uint64_t fnv1a64(const void* data, size_t n) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  uint64_t h = 14695981039346656037ull;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

void atomic_write_file(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write file: " + tmp);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    f.flush();
    if (!f.good()) {
      f.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("failed writing file: " + tmp);
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("cannot move " + tmp + " into place: " + path);
  }
}

void save_poses_csv(const std::string& path,
                    const std::vector<RigidPose>& poses) {
  auto os = precise_stream();
  os << "index,qw,qx,qy,qz,tx,ty,tz\n";
  for (size_t i = 0; i < poses.size(); ++i) {
    const Eigen::Vector4d q = poses[i].quaternion();
    os << i << "," << q(0) << "," << q(1) << "," << q(2) << "," << q(3) << ","
       << poses[i].t.x() << "," << poses[i].t.y() << "," << poses[i].t.z()
       << "\n";
  }
  atomic_write_file(path, os.str());
}

std::vector<RigidPose> load_poses_csv(const std::string& path) {
  std::istringstream is(read_file(path));
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("empty pose file: " + path);
  if (line.size() && line.back() == '\r') line.pop_back();
  if (line != "index,qw,qx,qy,qz,tx,ty,tz")
    throw std::runtime_error("unexpected pose CSV header in " + path);

  std::vector<RigidPose> poses;
  size_t row = 0;
  while (std::getline(is, line)) {
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cellstr;
    double v[8];
    for (int i = 0; i < 8; ++i) {
      if (!std::getline(ls, cellstr, ','))
        throw std::runtime_error("pose row " + std::to_string(row) +
                                 ": expected 8 comma-separated values");
      char* end = nullptr;
      v[i] = std::strtod(cellstr.c_str(), &end);
      if (cellstr.empty() || end != cellstr.c_str() + cellstr.size())
        throw std::runtime_error("pose row " + std::to_string(row) +
                                 ": bad number '" + cellstr + "'");
    }
    if (static_cast<size_t>(v[0]) != row || v[0] != std::floor(v[0]))
      throw std::runtime_error("pose rows must be sequential from 0 in " +
                               path);
    try {
      poses.push_back(RigidPose::from_quaternion(v[1], v[2], v[3], v[4],
                                                 Vec3(v[5], v[6], v[7])));
    } catch (const std::exception& e) {
      throw std::runtime_error("pose row " + std::to_string(row) + ": " +
                               e.what());
    }
    ++row;
  }
  if (poses.empty()) throw std::runtime_error("no pose rows in " + path);
  return poses;
}

void save_bundle(const std::string& dir, const FrameSequence& seq) {
  seq.validate();
  fs::create_directories(dir);

  std::string frames(reinterpret_cast<const char*>(seq.pixels.data()),
                     seq.pixels.size() * sizeof(float));
  const uint64_t checksum = fnv1a64(frames.data(), frames.size());
  atomic_write_file(dir + "/frames.raw", std::move(frames));

  save_poses_csv(dir + "/poses.csv", seq.poses);
  const bool truth = !seq.truth_poses.empty();
  if (truth) save_poses_csv(dir + "/truth_poses.csv", seq.truth_poses);

  json m;
  m["format_version"] = 1;
  m["num_frames"] = seq.num_frames();
  m["width"] = seq.width;
  m["height"] = seq.height;
  m["d_pixel_mm"] = seq.d_pixel;
  m["slice_thickness_mm"] = seq.slice_thickness;
  m["frames_file"] = "frames.raw";
  m["frames_dtype"] = "float32";
  m["byte_order"] = "little";
  m["pixel_order"] = "frame,row,column";
  m["frames_checksum_fnv1a64"] = hex64(checksum);
  m["poses_file"] = "poses.csv";
  m["pose_convention"] =
      "Hamilton unit quaternion, scalar first (qw,qx,qy,qz); translation mm";
  if (truth) m["truth_poses_file"] = "truth_poses.csv";
  atomic_write_file(dir + "/manifest.json", m.dump(2) + "\n");
}

FrameSequence load_bundle(const std::string& dir) {
  json m;
  try {
    m = json::parse(read_file(dir + "/manifest.json"));
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("bad manifest.json: ") + e.what());
  }
  check_keys(m,
             {"format_version", "num_frames", "width", "height", "d_pixel_mm",
              "slice_thickness_mm", "frames_file", "frames_dtype", "byte_order",
              "pixel_order", "frames_checksum_fnv1a64", "poses_file",
              "pose_convention", "truth_poses_file"},
             "manifest.json");
  if (m.at("format_version").get<int>() != 1)
    throw std::runtime_error("unsupported bundle format_version");

  FrameSequence seq;
  const int n = m.at("num_frames").get<int>();
  seq.width = m.at("width").get<int>();
  seq.height = m.at("height").get<int>();
  seq.d_pixel = m.at("d_pixel_mm").get<double>();
  seq.slice_thickness = m.at("slice_thickness_mm").get<double>();
  if (m.value("byte_order", "little") != "little")
    throw std::runtime_error("unsupported frame byte order");

  const std::string frames =
      read_file(dir + "/" + m.at("frames_file").get<std::string>());
  const uint64_t want =
      parse_hex64(m.at("frames_checksum_fnv1a64").get<std::string>(),
                  "frames checksum");
  const uint64_t got = fnv1a64(frames.data(), frames.size());
  if (want != got)
    throw std::runtime_error(
        "frames checksum mismatch (truncated or corrupted frames file)");

  const size_t count =
      static_cast<size_t>(n) * seq.width * seq.height;
  const std::string dtype = m.value("frames_dtype", "float32");
  seq.pixels.resize(count);
  if (dtype == "float32") {
    if (frames.size() != count * sizeof(float))
      throw std::runtime_error("frames file size does not match manifest dims");
    std::memcpy(seq.pixels.data(), frames.data(), frames.size());
  } else if (dtype == "uint8") {
    if (frames.size() != count)
      throw std::runtime_error("frames file size does not match manifest dims");
    for (size_t i = 0; i < count; ++i)
      seq.pixels[i] =
          static_cast<unsigned char>(frames[i]) * (1.0f / 255.0f);
  } else {
    throw std::runtime_error("unsupported frames dtype: " + dtype);
  }

  seq.poses =
      load_poses_csv(dir + "/" + m.at("poses_file").get<std::string>());
  if (static_cast<int>(seq.poses.size()) != n)
    throw std::runtime_error("pose count does not match manifest num_frames");
  if (m.contains("truth_poses_file")) {
    seq.truth_poses = load_poses_csv(
        dir + "/" + m.at("truth_poses_file").get<std::string>());
    if (seq.truth_poses.size() != seq.poses.size())
      throw std::runtime_error("truth pose count does not match num_frames");
  }
  seq.validate();
  return seq;
}

Checkpoint checkpoint_from(const ImplicitField& field,
                           const std::vector<RigidPose>& poses,
                           double slice_thickness) {
  Checkpoint ck;
  ck.encoding = field.encoding();
  ck.mlp = field.mlp_config();
  ck.table = field.table();
  ck.params = field.mlp();
  ck.poses = poses;
  ck.slice_thickness = slice_thickness;
  return ck;
}

ImplicitField field_from(const Checkpoint& ck) {
  ImplicitField f(ck.encoding, ck.mlp);
  if (ck.table.size() != f.table().size())
    throw std::runtime_error("checkpoint table size does not match config");
  f.table() = ck.table;
  MlpParams& p = f.mlp();
  if (ck.params.W.size() != p.W.size() || ck.params.b.size() != p.b.size())
    throw std::runtime_error("checkpoint layer count does not match config");
  for (size_t i = 0; i < p.W.size(); ++i) {
    if (ck.params.W[i].rows() != p.W[i].rows() ||
        ck.params.W[i].cols() != p.W[i].cols() ||
        ck.params.b[i].size() != p.b[i].size())
      throw std::runtime_error("checkpoint layer shape does not match config");
  }
  p = ck.params;
  return f;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  ck.encoding.validate();
  ck.mlp.validate();

  std::string pay;
  put<int32_t>(pay, ck.encoding.num_levels);
  put<int32_t>(pay, ck.encoding.features_per_level);
  put<int32_t>(pay, ck.encoding.table_size_log2);
  put<int32_t>(pay, ck.encoding.base_resolution);
  put<double>(pay, ck.encoding.per_level_scale);
  put_doubles(pay, ck.encoding.domain.lo.data(), 3);
  put_doubles(pay, ck.encoding.domain.hi.data(), 3);
  put<int32_t>(pay, ck.mlp.hidden_layers);
  put<int32_t>(pay, ck.mlp.hidden_dim);
  put<double>(pay, ck.mlp.omega0);
  put<double>(pay, ck.slice_thickness);

  put<uint64_t>(pay, ck.table.size());
  put_doubles(pay, ck.table.data(), ck.table.size());

  put<uint32_t>(pay, static_cast<uint32_t>(ck.params.W.size()));
  for (const auto& W : ck.params.W) {
    put<uint64_t>(pay, static_cast<uint64_t>(W.rows()));
    put<uint64_t>(pay, static_cast<uint64_t>(W.cols()));
    put_doubles(pay, W.data(), static_cast<size_t>(W.size()));
  }
  put<uint32_t>(pay, static_cast<uint32_t>(ck.params.b.size()));
  for (const auto& b : ck.params.b) {
    put<uint64_t>(pay, static_cast<uint64_t>(b.size()));
    put_doubles(pay, b.data(), static_cast<size_t>(b.size()));
  }

  put<uint64_t>(pay, ck.poses.size());
  for (const RigidPose& p : ck.poses) {
    const Eigen::Vector4d q = p.quaternion();
    put_doubles(pay, q.data(), 4);
    put_doubles(pay, p.t.data(), 3);
  }

  std::string file(kCheckpointMagic, sizeof kCheckpointMagic);
  put<uint32_t>(file, kCheckpointVersion);
  file += pay;
  put<uint64_t>(file, fnv1a64(pay.data(), pay.size()));
  atomic_write_file(path, file);
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string file = read_file(path);
  if (file.size() < sizeof(kCheckpointMagic) + sizeof(uint32_t) + sizeof(uint64_t))
    throw std::runtime_error("not a checkpoint file: " + path);
  if (std::memcmp(file.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  uint32_t version;
  std::memcpy(&version, file.data() + sizeof kCheckpointMagic, sizeof version);
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(version));

  const size_t pay_begin = sizeof(kCheckpointMagic) + sizeof(uint32_t);
  const size_t pay_end = file.size() - sizeof(uint64_t);
  uint64_t want;
  std::memcpy(&want, file.data() + pay_end, sizeof want);
  if (fnv1a64(file.data() + pay_begin, pay_end - pay_begin) != want)
    throw std::runtime_error("checkpoint checksum mismatch: " + path);

  const std::string pay = file.substr(pay_begin, pay_end - pay_begin);
  Reader r{pay};
  Checkpoint ck;
  ck.encoding.num_levels = r.get<int32_t>();
  ck.encoding.features_per_level = r.get<int32_t>();
  ck.encoding.table_size_log2 = r.get<int32_t>();
  ck.encoding.base_resolution = r.get<int32_t>();
  ck.encoding.per_level_scale = r.get<double>();
  r.get_doubles(ck.encoding.domain.lo.data(), 3);
  r.get_doubles(ck.encoding.domain.hi.data(), 3);
  ck.mlp.hidden_layers = r.get<int32_t>();
  ck.mlp.hidden_dim = r.get<int32_t>();
  ck.mlp.omega0 = r.get<double>();
  ck.slice_thickness = r.get<double>();
  ck.encoding.validate();
  ck.mlp.validate();

  const uint64_t tn = r.get<uint64_t>();
  if (tn != ck.encoding.table_param_count())
    throw std::runtime_error("checkpoint table size does not match config");
  ck.table.resize(tn);
  r.get_doubles(ck.table.data(), tn);

  const uint32_t nw = r.get<uint32_t>();
  ck.params.W.resize(nw);
  for (uint32_t i = 0; i < nw; ++i) {
    const uint64_t rows = r.get<uint64_t>();
    const uint64_t cols = r.get<uint64_t>();
    if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20))
      throw std::runtime_error("implausible layer shape in checkpoint");
    ck.params.W[i].resize(static_cast<Eigen::Index>(rows),
                          static_cast<Eigen::Index>(cols));
    r.get_doubles(ck.params.W[i].data(), rows * cols);
  }
  const uint32_t nb = r.get<uint32_t>();
  ck.params.b.resize(nb);
  for (uint32_t i = 0; i < nb; ++i) {
    const uint64_t sz = r.get<uint64_t>();
    if (sz == 0 || sz > (1u << 20))
      throw std::runtime_error("implausible bias shape in checkpoint");
    ck.params.b[i].resize(static_cast<Eigen::Index>(sz));
    r.get_doubles(ck.params.b[i].data(), sz);
  }

  const uint64_t np = r.get<uint64_t>();
  ck.poses.resize(np);
  for (uint64_t i = 0; i < np; ++i) {
    Eigen::Vector4d q;
    Vec3 t;
    r.get_doubles(q.data(), 4);
    r.get_doubles(t.data(), 3);
    ck.poses[i] = RigidPose::from_quaternion(q(0), q(1), q(2), q(3), t);
  }
  if (r.at != pay.size())
    throw std::runtime_error("trailing bytes in checkpoint: " + path);
  return ck;
}

void save_volume(const std::string& stem, const Volume& vol) {
  vol.grid.validate();
  if (vol.data.size() != vol.grid.count())
    throw std::runtime_error("volume data size does not match grid");

  std::string raw(reinterpret_cast<const char*>(vol.data.data()),
                  vol.data.size() * sizeof(float));
  const uint64_t checksum = fnv1a64(raw.data(), raw.size());
  atomic_write_file(stem + ".raw", std::move(raw));

  json m;
  m["dims"] = {vol.grid.nx, vol.grid.ny, vol.grid.nz};
  m["spacing_mm"] = vol.grid.spacing;
  m["origin_mm"] = {vol.grid.origin.x(), vol.grid.origin.y(),
                    vol.grid.origin.z()};
  m["axis_order"] = "x-fastest";
  m["voxel_origin"] = "center";
  m["dtype"] = "float32";
  m["byte_order"] = "little";
  m["raw_checksum_fnv1a64"] = hex64(checksum);
  atomic_write_file(stem + ".json", m.dump(2) + "\n");
}

Volume load_volume(const std::string& stem) {
  json m;
  try {
    m = json::parse(read_file(stem + ".json"));
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("bad volume sidecar: ") + e.what());
  }
  check_keys(m,
             {"dims", "spacing_mm", "origin_mm", "axis_order", "voxel_origin",
              "dtype", "byte_order", "raw_checksum_fnv1a64"},
             stem + ".json");
  if (m.value("axis_order", "x-fastest") != "x-fastest" ||
      m.value("dtype", "float32") != "float32" ||
      m.value("byte_order", "little") != "little")
    throw std::runtime_error("unsupported volume layout in " + stem + ".json");

  Volume vol;
  const auto dims = m.at("dims");
  if (!dims.is_array() || dims.size() != 3)
    throw std::runtime_error("volume dims must be a 3-array");
  vol.grid.nx = dims[0].get<int>();
  vol.grid.ny = dims[1].get<int>();
  vol.grid.nz = dims[2].get<int>();
  vol.grid.spacing = m.at("spacing_mm").get<double>();
  const auto org = m.at("origin_mm");
  if (!org.is_array() || org.size() != 3)
    throw std::runtime_error("volume origin must be a 3-array");
  vol.grid.origin = Vec3(org[0].get<double>(), org[1].get<double>(),
                         org[2].get<double>());
  vol.grid.validate();

  const std::string raw = read_file(stem + ".raw");
  if (m.contains("raw_checksum_fnv1a64")) {
    const uint64_t want = parse_hex64(
        m.at("raw_checksum_fnv1a64").get<std::string>(), "volume checksum");
    if (fnv1a64(raw.data(), raw.size()) != want)
      throw std::runtime_error("volume checksum mismatch: " + stem + ".raw");
  }
  if (raw.size() != vol.grid.count() * sizeof(float))
    throw std::runtime_error("volume raw size does not match dims");
  vol.data.resize(vol.grid.count());
  std::memcpy(vol.data.data(), raw.data(), raw.size());
  return vol;
}

void save_trace_csv(const std::string& path,
                    const std::vector<EpochTrace>& trace) {
  auto os = precise_stream();
  os << "epoch,l_i,l_dist,l_angle,r_v,chi,mean_dt_mm,mean_dr_deg\n";
  for (const EpochTrace& t : trace) {
    os << t.epoch << "," << t.l_i << "," << t.l_dist << "," << t.l_angle << ","
       << t.r_v << "," << t.chi << "," << t.mean_dt_mm << "," << t.mean_dr_deg
       << "\n";
  }
  atomic_write_file(path, os.str());
}

}  // namespace usrecon
