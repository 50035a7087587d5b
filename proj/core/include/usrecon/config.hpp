#pragma once

#include <string>
#include <utility>
#include <vector>

#include "usrecon/field.hpp"
#include "usrecon/simulator.hpp"
#include "usrecon/training.hpp"

namespace usrecon {

// Minimal INI dialect: [section] headers, key = value lines, # or ; comments
// (full-line or trailing), blank lines ignored. Sections may repeat; order is
// preserved ([wire] and [brick] rely on both).
struct IniSection {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;
};

struct IniFile {
  std::vector<IniSection> sections;

  static IniFile parse(const std::string& text);
  static IniFile parse_file(const std::string& path);
  std::string serialize() const;
};

// Every tunable in one place, serialized alongside outputs so a run can be
// reproduced from the copy in its output directory. Unknown keys or sections
// are rejected on load.
struct RunConfig {
  HashEncodingConfig encoding;
  bool domain_auto = true;  // fit the encoding domain to the data at train time
  MlpConfig mlp;
  TrainConfig train;  // cell config inside; slice thickness comes from the data
  double recon_spacing = 0.2;  // mm, isotropic
  Scene scene;
  SweepSpec sweep;
  std::string noise_preset = "light";
  NoiseSpec noise = usrecon::noise_preset("light");

  static RunConfig from_ini(const IniFile& ini);
  static RunConfig from_file(const std::string& path);
  IniFile to_ini() const;
  void save(const std::string& path) const;
  void validate() const;
};

// Shared scalar parsing with context-tagged errors.
double parse_double(const std::string& v, const std::string& what);
long long parse_int(const std::string& v, const std::string& what);
bool parse_bool(const std::string& v, const std::string& what);
Vec3 parse_vec3(const std::string& v, const std::string& what);
std::string format_vec3(const Vec3& v);

}  // namespace usrecon
