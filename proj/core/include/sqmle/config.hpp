#pragma once

// Key-value configuration with INI sections, overrides and presets.
//
// File format: INI sections [run] [model] [noise] [simulate] [kernel] [fit]
// [mc] [llt] holding `key = value` lines; lines starting with `;` or `#`
// are comments.
// Lists are comma separated. Unknown sections or keys are rejected.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sqmle/levy_samplers.hpp"
#include "sqmle/llt_lab.hpp"
#include "sqmle/model.hpp"
#include "sqmle/sqlik.hpp"
#include "sqmle/stable_core.hpp"

namespace sqmle {

struct KeySpec {
  std::string key;  // "section.name"
  std::string default_value;
  std::string help;
};

/// Every accepted key with its default, in documentation order.
const std::vector<KeySpec>& config_keys();

class Config {
 public:
  /// All keys at their defaults.
  Config();

  /// Merges an INI stream; `source` names it in error messages.
  void merge_ini(std::istream& is, const std::string& source);
  /// Throws UsageError naming the path when the file cannot be read.
  void load_file(const std::string& path);
  /// "section.key=value".
  void apply_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  long get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  /// Empty string gives an empty list.
  std::vector<double> get_list(const std::string& key) const;

  /// Canonical INI dump of every key, sections in documentation order.
  std::string to_ini() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::vector<std::string> preset_names();
/// One-line description for --help.
std::string preset_description(const std::string& name);
/// INI text of a preset. Throws UsageError for unknown names.
std::string preset_text(const std::string& name);
/// Defaults with the preset merged on top.
Config preset_config(const std::string& name);

/// Builders from configuration sections.
ModelSpec model_from_config(const Config& cfg);
NoiseSpec noise_from_config(const Config& cfg);
KernelOptions kernel_options_from_config(const Config& cfg);
OptimizerConfig optimizer_from_config(const Config& cfg, const ModelSpec& model);
CfModel cf_from_config(const Config& cfg);
RateFitOptions rate_options_from_config(const Config& cfg);

struct Design {
  double T = 1.0;
  std::size_t n = 0;
  std::size_t fine_factor = 1;
  std::size_t n_fine() const { return n * fine_factor; }
};

/// "T:n:factor, T:n:factor, ...".
std::vector<Design> parse_designs(const std::string& text);
std::string format_designs(const std::vector<Design>& designs);

/// %.17g formatting shared by every writer.
std::string format_double(double v);

}  // namespace sqmle
