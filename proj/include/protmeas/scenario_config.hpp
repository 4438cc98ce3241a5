#pragma once

// Scenario configuration: flat INI files with typed sections
// [experiment] [system] [protection] [measurement] [postselection] [run].

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace protmeas {

using ConfigValue = std::variant<bool, std::int64_t, double, std::string, std::vector<double>,
                                 std::vector<std::int64_t>>;

enum class FieldType { Bool, Int, Real, Text, RealList, IntList };

struct FieldSpec {
  std::string section;
  std::string key;
  FieldType type;
  std::string default_text;  // empty with required = true means no default
  bool required = false;
  std::string help;
};

/// Every accepted key. Anything else in a config file is rejected.
const std::vector<FieldSpec>& config_schema();

class ScenarioConfig {
 public:
  /// Parses and validates; throws ValidationError carrying one diagnostic per
  /// offending field ("[section] key: message").
  static ScenarioConfig from_file(const std::string& path);
  static ScenarioConfig from_string(const std::string& text, const std::string& origin = "<string>");

  const std::string& experiment() const { return text("experiment.name"); }

  bool flag(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  double real(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  const std::vector<double>& reals(const std::string& key) const;
  const std::vector<std::int64_t>& integers(const std::string& key) const;

  std::uint64_t seed() const { return static_cast<std::uint64_t>(integer("run.seed")); }
  unsigned threads() const { return static_cast<unsigned>(integer("run.threads")); }

  void set_seed(std::uint64_t seed);
  void set_threads(unsigned threads);

  /// "section.key=value" lines in key order, all fields including defaults.
  /// Seed and thread count are excluded (recorded separately).
  std::string canonical() const;
  /// FNV-1a 64 of canonical(), as 16 hex digits.
  std::string hash() const;

 private:
  std::map<std::string, ConfigValue> values_;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& data);

}  // namespace protmeas
