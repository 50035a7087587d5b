#include "usrecon/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace usrecon {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

[[noreturn]] void unknown_key(const std::string& sec, const std::string& key) {
  throw std::runtime_error("unknown key '" + key + "' in section [" + sec + "]");
}

}  // namespace

double parse_double(const std::string& v, const std::string& what) {
  const std::string s = trim(v);
  char* end = nullptr;
  const double d = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw std::runtime_error("cannot parse '" + v + "' as a number for " + what);
  return d;
}

long long parse_int(const std::string& v, const std::string& what) {
  const std::string s = trim(v);
  char* end = nullptr;
  const long long i = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size())
    throw std::runtime_error("cannot parse '" + v + "' as an integer for " + what);
  return i;
}

bool parse_bool(const std::string& v, const std::string& what) {
  const std::string s = lower(trim(v));
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::runtime_error("cannot parse '" + v + "' as a boolean for " + what);
}

Vec3 parse_vec3(const std::string& v, const std::string& what) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : v) {
    if (c == ',') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  if (parts.size() != 3)
    throw std::runtime_error("expected 'x,y,z' for " + what + ", got '" + v + "'");
  return Vec3(parse_double(parts[0], what), parse_double(parts[1], what),
              parse_double(parts[2], what));
}

std::string format_vec3(const Vec3& v) {
  return format_double(v.x()) + ", " + format_double(v.y()) + ", " +
         format_double(v.z());
}

IniFile IniFile::parse(const std::string& text) {
  IniFile ini;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  int current = -1;
  while (std::getline(is, line)) {
    ++lineno;
    const size_t cut = line.find_first_of("#;");
    if (cut != std::string::npos) line.resize(cut);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": unterminated section header");
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (name.empty())
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": empty section name");
      ini.sections.push_back({lower(name), {}});
      current = static_cast<int>(ini.sections.size()) - 1;
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected 'key = value'");
    if (current < 0)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": key outside any section");
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": empty key");
    ini.sections[current].entries.emplace_back(key, value);
  }
  return ini;
}

IniFile IniFile::parse_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return parse(os.str());
}

std::string IniFile::serialize() const {
  std::ostringstream os;
  bool first = true;
  for (const IniSection& s : sections) {
    if (!first) os << "\n";
    first = false;
    os << "[" << s.name << "]\n";
    for (const auto& [k, v] : s.entries) os << k << " = " << v << "\n";
  }
  return os.str();
}

RunConfig RunConfig::from_ini(const IniFile& ini) {
  RunConfig c;
  bool domain_given = false;
  bool auto_given = false;
  bool auto_value = true;
  Vec3 orient_axis = Vec3::UnitX();
  double orient_deg = 0.0;

  for (const IniSection& sec : ini.sections) {
    const std::string& name = sec.name;
    if (name == "field") {
      for (const auto& [k, v] : sec.entries) {
        if (k == "levels") c.encoding.num_levels = static_cast<int>(parse_int(v, k));
        else if (k == "features_per_level") c.encoding.features_per_level = static_cast<int>(parse_int(v, k));
        else if (k == "table_size_log2") c.encoding.table_size_log2 = static_cast<int>(parse_int(v, k));
        else if (k == "base_resolution") c.encoding.base_resolution = static_cast<int>(parse_int(v, k));
        else if (k == "per_level_scale") c.encoding.per_level_scale = parse_double(v, k);
        else if (k == "domain_lo") { c.encoding.domain.lo = parse_vec3(v, k); domain_given = true; }
        else if (k == "domain_hi") { c.encoding.domain.hi = parse_vec3(v, k); domain_given = true; }
        else if (k == "domain_auto") { auto_value = parse_bool(v, k); auto_given = true; }
        else if (k == "hidden_layers") c.mlp.hidden_layers = static_cast<int>(parse_int(v, k));
        else if (k == "hidden_dim") c.mlp.hidden_dim = static_cast<int>(parse_int(v, k));
        else if (k == "omega0") c.mlp.omega0 = parse_double(v, k);
        else unknown_key(name, k);
      }
    } else if (name == "cell") {
      for (const auto& [k, v] : sec.entries) {
        if (k == "subcells") c.train.cell.num_subcells = static_cast<int>(parse_int(v, k));
        else if (k == "samples") c.train.cell.num_samples = static_cast<int>(parse_int(v, k));
        else if (k == "sigma") c.train.cell.sigma = parse_double(v, k);
        else unknown_key(name, k);
      }
    } else if (name == "train") {
      for (const auto& [k, v] : sec.entries) {
        if (k == "epochs") c.train.epochs = static_cast<int>(parse_int(v, k));
        else if (k == "batch_size") c.train.batch_size = static_cast<int>(parse_int(v, k));
        else if (k == "chunk_pixels") c.train.chunk_pixels = static_cast<int>(parse_int(v, k));
        else if (k == "k_init") c.train.k_init = static_cast<int>(parse_int(v, k));
        else if (k == "start_levels") c.train.start_levels = static_cast<int>(parse_int(v, k));
        else if (k == "lr_table") c.train.lr_table = parse_double(v, k);
        else if (k == "lr_mlp") c.train.lr_mlp = parse_double(v, k);
        else if (k == "lr_pose") c.train.lr_pose = parse_double(v, k);
        else if (k == "pose_lr_final") c.train.pose_lr_final = parse_double(v, k);
        else if (k == "lr_pose_rot_scale") c.train.lr_pose_rot_scale = parse_double(v, k);
        else if (k == "window") c.train.window = static_cast<int>(parse_int(v, k));
        else if (k == "beta_dist") c.train.weights.beta_dist = parse_double(v, k);
        else if (k == "beta_angle") c.train.weights.beta_angle = parse_double(v, k);
        else if (k == "beta_volume") c.train.weights.beta_volume = parse_double(v, k);
        else if (k == "seed") {
          const long long s = parse_int(v, k);
          if (s < 0) throw std::runtime_error("seed must be nonnegative");
          c.train.seed = static_cast<uint64_t>(s);
        } else unknown_key(name, k);
      }
    } else if (name == "ablation") {
      for (const auto& [k, v] : sec.entries) {
        if (k == "cell_model") c.train.flags.cell_model = parse_bool(v, k);
        else if (k == "pose_refinement") c.train.flags.pose_refinement = parse_bool(v, k);
        else if (k == "pose_regularization") c.train.flags.pose_regularization = parse_bool(v, k);
        else if (k == "volume_regularization") c.train.flags.volume_regularization = parse_bool(v, k);
        else unknown_key(name, k);
      }
    } else if (name == "recon") {
      for (const auto& [k, v] : sec.entries) {
        if (k == "spacing") c.recon_spacing = parse_double(v, k);
        else unknown_key(name, k);
      }
    } else if (name == "scene") {
      for (const auto& [k, v] : sec.entries) {
        if (k == "background") c.scene.background = parse_double(v, k);
        else unknown_key(name, k);
      }
    } else if (name == "speckle") {
      for (const auto& [k, v] : sec.entries) {
        if (k == "amplitude") c.scene.speckle.amplitude = parse_double(v, k);
        else if (k == "correlation_mm") c.scene.speckle.correlation_mm = parse_double(v, k);
        else if (k == "seed") {
          const long long s = parse_int(v, k);
          if (s < 0) throw std::runtime_error("speckle seed must be nonnegative");
          c.scene.speckle.seed = static_cast<uint64_t>(s);
        } else unknown_key(name, k);
      }
    } else if (name == "wire") {
      WireSpec w;
      for (const auto& [k, v] : sec.entries) {
        if (k == "point") w.point = parse_vec3(v, k);
        else if (k == "direction") w.direction = parse_vec3(v, k);
        else if (k == "radius") w.radius = parse_double(v, k);
        else if (k == "intensity") w.intensity = parse_double(v, k);
        else unknown_key(name, k);
      }
      c.scene.wires.push_back(w);
    } else if (name == "brick") {
      BrickSpec b;
      for (const auto& [k, v] : sec.entries) {
        if (k == "lo") b.lo = parse_vec3(v, k);
        else if (k == "hi") b.hi = parse_vec3(v, k);
        else if (k == "intensity") b.intensity = parse_double(v, k);
        else unknown_key(name, k);
      }
      c.scene.bricks.push_back(b);
    } else if (name == "sweep") {
      for (const auto& [k, v] : sec.entries) {
        if (k == "frames") c.sweep.num_frames = static_cast<int>(parse_int(v, k));
        else if (k == "width") c.sweep.width = static_cast<int>(parse_int(v, k));
        else if (k == "height") c.sweep.height = static_cast<int>(parse_int(v, k));
        else if (k == "d_pixel") c.sweep.d_pixel = parse_double(v, k);
        else if (k == "step") c.sweep.step = parse_double(v, k);
        else if (k == "slice_thickness") c.sweep.slice_thickness = parse_double(v, k);
        else if (k == "render_sigma") c.sweep.render_sigma = parse_double(v, k);
        else if (k == "quadrature_points") c.sweep.quadrature_points = static_cast<int>(parse_int(v, k));
        else if (k == "gain_jitter_std") c.sweep.gain_jitter_std = parse_double(v, k);
        else if (k == "gain_seed") c.sweep.gain_seed = static_cast<uint64_t>(parse_int(v, k));
        else if (k == "origin") c.sweep.base_pose.t = parse_vec3(v, k);
        else if (k == "orientation_axis") orient_axis = parse_vec3(v, k);
        else if (k == "orientation_deg") orient_deg = parse_double(v, k);
        else unknown_key(name, k);
      }
    } else if (name == "noise") {
      for (const auto& [k, v] : sec.entries) {
        if (k == "preset") {
          c.noise_preset = lower(trim(v));
          c.noise = usrecon::noise_preset(c.noise_preset);
        }
      }
      for (const auto& [k, v] : sec.entries) {
        if (k == "preset") continue;
        if (k == "trans_std_mm") c.noise.trans_std_mm = parse_double(v, k);
        else if (k == "rot_std_deg") c.noise.rot_std_deg = parse_double(v, k);
        else if (k == "drift_amp_mm") c.noise.drift_amp_mm = parse_double(v, k);
        else if (k == "drift_wavelength_frames") c.noise.drift_wavelength_frames = parse_double(v, k);
        else unknown_key(name, k);
      }
    } else {
      throw std::runtime_error("unknown config section [" + name + "]");
    }
  }

  if (orient_deg != 0.0) {
    const double n = orient_axis.norm();
    if (n <= 0.0)
      throw std::runtime_error("orientation_axis must be nonzero");
    c.sweep.base_pose.R =
        so3_exp(orient_axis / n * (orient_deg * 3.14159265358979323846 / 180.0));
  }
  c.domain_auto = auto_given ? auto_value : !domain_given;
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  return from_ini(IniFile::parse_file(path));
}

IniFile RunConfig::to_ini() const {
  IniFile ini;
  auto& S = ini.sections;

  IniSection field{"field", {}};
  field.entries = {
      {"levels", std::to_string(encoding.num_levels)},
      {"features_per_level", std::to_string(encoding.features_per_level)},
      {"table_size_log2", std::to_string(encoding.table_size_log2)},
      {"base_resolution", std::to_string(encoding.base_resolution)},
      {"per_level_scale", format_double(encoding.per_level_scale)},
      {"domain_auto", domain_auto ? "true" : "false"},
      {"domain_lo", format_vec3(encoding.domain.lo)},
      {"domain_hi", format_vec3(encoding.domain.hi)},
      {"hidden_layers", std::to_string(mlp.hidden_layers)},
      {"hidden_dim", std::to_string(mlp.hidden_dim)},
      {"omega0", format_double(mlp.omega0)},
  };
  S.push_back(std::move(field));

  IniSection cell{"cell", {}};
  cell.entries = {
      {"subcells", std::to_string(train.cell.num_subcells)},
      {"samples", std::to_string(train.cell.num_samples)},
      {"sigma", format_double(train.cell.sigma)},
  };
  S.push_back(std::move(cell));

  IniSection tr{"train", {}};
  tr.entries = {
      {"epochs", std::to_string(train.epochs)},
      {"batch_size", std::to_string(train.batch_size)},
      {"chunk_pixels", std::to_string(train.chunk_pixels)},
      {"k_init", std::to_string(train.k_init)},
      {"start_levels", std::to_string(train.start_levels)},
      {"lr_table", format_double(train.lr_table)},
      {"lr_mlp", format_double(train.lr_mlp)},
      {"lr_pose", format_double(train.lr_pose)},
      {"pose_lr_final", format_double(train.pose_lr_final)},
      {"lr_pose_rot_scale", format_double(train.lr_pose_rot_scale)},
      {"window", std::to_string(train.window)},
      {"beta_dist", format_double(train.weights.beta_dist)},
      {"beta_angle", format_double(train.weights.beta_angle)},
      {"beta_volume", format_double(train.weights.beta_volume)},
      {"seed", std::to_string(train.seed)},
  };
  S.push_back(std::move(tr));

  IniSection ab{"ablation", {}};
  ab.entries = {
      {"cell_model", train.flags.cell_model ? "true" : "false"},
      {"pose_refinement", train.flags.pose_refinement ? "true" : "false"},
      {"pose_regularization", train.flags.pose_regularization ? "true" : "false"},
      {"volume_regularization", train.flags.volume_regularization ? "true" : "false"},
  };
  S.push_back(std::move(ab));

  S.push_back({"recon", {{"spacing", format_double(recon_spacing)}}});

  S.push_back({"scene", {{"background", format_double(scene.background)}}});
  S.push_back({"speckle",
               {{"amplitude", format_double(scene.speckle.amplitude)},
                {"correlation_mm", format_double(scene.speckle.correlation_mm)},
                {"seed", std::to_string(scene.speckle.seed)}}});
  for (const WireSpec& w : scene.wires) {
    S.push_back({"wire",
                 {{"point", format_vec3(w.point)},
                  {"direction", format_vec3(w.direction)},
                  {"radius", format_double(w.radius)},
                  {"intensity", format_double(w.intensity)}}});
  }
  for (const BrickSpec& b : scene.bricks) {
    S.push_back({"brick",
                 {{"lo", format_vec3(b.lo)},
                  {"hi", format_vec3(b.hi)},
                  {"intensity", format_double(b.intensity)}}});
  }

  IniSection sw{"sweep", {}};
  sw.entries = {
      {"frames", std::to_string(sweep.num_frames)},
      {"width", std::to_string(sweep.width)},
      {"height", std::to_string(sweep.height)},
      {"d_pixel", format_double(sweep.d_pixel)},
      {"step", format_double(sweep.step)},
      {"slice_thickness", format_double(sweep.slice_thickness)},
      {"render_sigma", format_double(sweep.render_sigma)},
      {"quadrature_points", std::to_string(sweep.quadrature_points)},
      {"gain_jitter_std", format_double(sweep.gain_jitter_std)},
      {"gain_seed", std::to_string(sweep.gain_seed)},
      {"origin", format_vec3(sweep.base_pose.t)},
  };
  // Orientation round-trips through axis-angle of the base rotation.
  {
    Eigen::AngleAxisd aa(sweep.base_pose.R);
    if (aa.angle() != 0.0) {
      sw.entries.emplace_back("orientation_axis", format_vec3(aa.axis()));
      sw.entries.emplace_back("orientation_deg",
                              format_double(aa.angle() * 180.0 /
                                            3.14159265358979323846));
    }
  }
  S.push_back(std::move(sw));

  IniSection no{"noise", {}};
  no.entries = {
      {"preset", noise_preset},
      {"trans_std_mm", format_double(noise.trans_std_mm)},
      {"rot_std_deg", format_double(noise.rot_std_deg)},
      {"drift_amp_mm", format_double(noise.drift_amp_mm)},
      {"drift_wavelength_frames", format_double(noise.drift_wavelength_frames)},
  };
  S.push_back(std::move(no));
  return ini;
}

void RunConfig::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write config file: " + path);
  f << to_ini().serialize();
  if (!f.good()) throw std::runtime_error("failed writing config file: " + path);
}

void RunConfig::validate() const {
  encoding.validate();
  mlp.validate();
  train.validate();
  scene.validate();
  sweep.validate();
  noise.validate();
  if (!(recon_spacing > 0))
    throw std::invalid_argument("recon spacing must be positive");
}

}  // namespace usrecon
