#include "protmeas/scenario_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "protmeas/errors.hpp"
#include "protmeas/hilbert.hpp"
#include "protmeas/result_bundle.hpp"

namespace protmeas {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_int(const std::string& s, std::int64_t& out) {
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

bool parse_real(const std::string& s, double& out) {
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end && std::isfinite(out);
}

// Accepts "a:b" inclusive ranges inside integer lists.
bool parse_int_list(const std::string& s, std::vector<std::int64_t>& out) {
  for (const auto& item : split_list(s)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      std::int64_t v;
      if (!parse_int(item, v)) return false;
      out.push_back(v);
      continue;
    }
    std::int64_t a, b;
    if (!parse_int(trim(item.substr(0, colon)), a) || !parse_int(trim(item.substr(colon + 1)), b) || b < a)
      return false;
    for (std::int64_t v = a; v <= b; ++v) out.push_back(v);
  }
  return true;
}

std::string type_name(FieldType t) {
  switch (t) {
    case FieldType::Bool: return "boolean";
    case FieldType::Int: return "integer";
    case FieldType::Real: return "real number";
    case FieldType::Text: return "text";
    case FieldType::RealList: return "comma-separated reals";
    case FieldType::IntList: return "comma-separated integers or a:b ranges";
  }
  return "?";
}

bool parse_value(const FieldSpec& f, const std::string& raw, ConfigValue& out) {
  const std::string s = trim(raw);
  switch (f.type) {
    case FieldType::Bool:
      if (s == "true" || s == "yes" || s == "1") { out = true; return true; }
      if (s == "false" || s == "no" || s == "0") { out = false; return true; }
      return false;
    case FieldType::Int: {
      std::int64_t v;
      if (!parse_int(s, v)) return false;
      out = v;
      return true;
    }
    case FieldType::Real: {
      double v;
      if (!parse_real(s, v)) return false;
      out = v;
      return true;
    }
    case FieldType::Text:
      out = s;
      return true;
    case FieldType::RealList: {
      std::vector<double> v;
      for (const auto& item : split_list(s)) {
        double d;
        if (!parse_real(item, d)) return false;
        v.push_back(d);
      }
      out = std::move(v);
      return true;
    }
    case FieldType::IntList: {
      std::vector<std::int64_t> v;
      if (!parse_int_list(s, v)) return false;
      out = std::move(v);
      return true;
    }
  }
  return false;
}

std::string value_text(const ConfigValue& v) {
  struct V {
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const { return format_number(d); }
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(const std::vector<double>& l) const {
      std::string out;
      for (std::size_t i = 0; i < l.size(); ++i) out += (i ? "," : "") + format_number(l[i]);
      return out;
    }
    std::string operator()(const std::vector<std::int64_t>& l) const {
      std::string out;
      for (std::size_t i = 0; i < l.size(); ++i) out += (i ? "," : "") + std::to_string(l[i]);
      return out;
    }
  };
  return std::visit(V{}, v);
}

template <typename T>
const T& get_as(const std::map<std::string, ConfigValue>& values, const std::string& key) {
  const auto it = values.find(key);
  if (it == values.end()) throw ConfigurationError("config: unknown field '" + key + "'");
  const T* p = std::get_if<T>(&it->second);
  if (p == nullptr) throw ConfigurationError("config: field '" + key + "' has a different type");
  return *p;
}

}  // namespace

const std::vector<FieldSpec>& config_schema() {
  using T = FieldType;
  static const std::vector<FieldSpec> schema{
      {"experiment", "name", T::Text, "", true, "experiment id, E1..E8"},
      {"experiment", "description", T::Text, "", false, "free text"},

      {"system", "kind", T::Text, "oscillator", false, "oscillator | box | qubits | custom"},
      {"system", "grid_points", T::Int, "64", false, "system grid size"},
      {"system", "x_min", T::Real, "-8", false, "system grid left edge"},
      {"system", "x_max", T::Real, "8", false, "system grid right edge"},
      {"system", "omega", T::Real, "1", false, "oscillator frequency"},
      {"system", "qubits", T::Int, "2", false, "number of qubits (qubits kind)"},
      {"system", "dim", T::Int, "4", false, "matrix dimension (custom kind)"},
      {"system", "packet_width", T::Real, "1.5", false, "Gaussian width for the phase experiment"},
      {"system", "phase_amplitude", T::Real, "0.8", false, "imprinted phase a sin(k x) + c x^2: a"},
      {"system", "phase_wavenumber", T::Real, "0.7", false, "imprinted phase: k"},
      {"system", "phase_curvature", T::Real, "0.1", false, "imprinted phase: c"},
      {"system", "alpha", T::Real, "0.6", false, "weight of |up up> in the unequal superposition"},
      {"system", "eigenvalues_real", T::RealList, "1,2,3,0.5", false, "H_eff eigenvalues, real parts"},
      {"system", "eigenvalues_imag", T::RealList, "0,-0.5,-0.8,-1", false, "H_eff eigenvalues, imaginary parts"},

      {"protection", "kind", T::Text, "zeno", false, "zeno | hamiltonian | effective_complex | none"},
      {"protection", "period", T::Real, "0.01", false, "Zeno measurement period"},
      {"protection", "mode", T::Text, "stochastic", false, "stochastic | nonselective"},
      {"protection", "duration", T::Real, "25", false, "coupling window per target"},
      {"protection", "ramp", T::Real, "5", false, "adiabatic ramp time"},
      {"protection", "dt", T::Real, "0.05", false, "integrator time step"},
      {"protection", "max_retries", T::Int, "3", false, "restarts of a failed Zeno run"},
      {"protection", "stability_threshold", T::Real, "0", false,
       "repeat the run and require relative L2 agreement below this (0 = off)"},
      {"protection", "negative_control", T::Bool, "true", false, "also run without protection"},
      {"protection", "drift", T::Real, "0.5", false, "trap displacement over the run"},
      {"protection", "fast_duration", T::Real, "2", false, "duration of the non-adiabatic control"},
      {"protection", "gap_times", T::Real, "100", false, "run length in units of 1/gap"},
      {"protection", "time_samples", T::Int, "200", false, "recorded times"},

      {"measurement", "epsilon", T::Real, "0.001", false, "coupling strength per pulse"},
      {"measurement", "epsilons", T::RealList, "0.01,0.001,0.0001", false, "survival sweep"},
      {"measurement", "delta", T::Real, "0.1", false, "pointer uncertainty"},
      {"measurement", "strength", T::Real, "1", false, "total coupling strength (continuous)"},
      {"measurement", "pointer_points", T::Int, "128", false, "pointer grid size"},
      {"measurement", "pointer_min", T::Real, "-1.5", false, "pointer grid left edge"},
      {"measurement", "pointer_max", T::Real, "2.5", false, "pointer grid right edge"},
      {"measurement", "targets", T::IntList, "24:39", false, "system grid indices measured"},
      {"measurement", "samples", T::Int, "10", false, "pointer readouts per target"},
      {"measurement", "sample_step", T::Real, "0.02", false, "pointer readout spacing (velocity analysis)"},
      {"measurement", "windows", T::Int, "10", false, "tracking windows"},

      {"postselection", "kind", T::Text, "none", false, "none | preselection | position | both"},
      {"postselection", "min_bin_probability", T::Real, "0.01", false,
       "bins below this probability are reported but not scored"},

      {"run", "trials", T::Int, "1", false, "Monte Carlo trials"},
      {"run", "seed", T::Int, "", true, "64-bit seed (non-negative)"},
      {"run", "threads", T::Int, "1", false, "worker threads"},
      {"run", "outputs", T::Text, "all", false, "comma-separated table names or 'all'"},
  };
  return schema;
}

ScenarioConfig ScenarioConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError({"cannot open config file '" + path + "'"});
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str(), path);
}

ScenarioConfig ScenarioConfig::from_string(const std::string& text, const std::string& origin) {
  boost::property_tree::ptree tree;
  try {
    std::istringstream in(text);
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError({origin + ": line " + std::to_string(e.line()) + ": " + e.message()});
  }

  std::vector<std::string> diag;
  std::map<std::string, const FieldSpec*> by_key;
  std::set<std::string> sections;
  for (const auto& f : config_schema()) {
    by_key[f.section + "." + f.key] = &f;
    sections.insert(f.section);
  }

  ScenarioConfig cfg;
  std::set<std::string> seen;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      diag.push_back("key '" + section + "' appears outside any section");
      continue;
    }
    if (!sections.count(section)) {
      diag.push_back("[" + section + "]: unknown section");
      continue;
    }
    for (const auto& [key, node] : body) {
      const auto it = by_key.find(section + "." + key);
      if (it == by_key.end()) {
        diag.push_back("[" + section + "] " + key + ": unknown key");
        continue;
      }
      ConfigValue v;
      if (!parse_value(*it->second, node.data(), v)) {
        diag.push_back("[" + section + "] " + key + ": expected " + type_name(it->second->type) + ", got '" +
                       node.data() + "'");
        continue;
      }
      cfg.values_[it->first] = std::move(v);
      seen.insert(it->first);
    }
  }
  for (const auto& f : config_schema()) {
    const std::string k = f.section + "." + f.key;
    if (seen.count(k)) continue;
    if (f.required) {
      diag.push_back("[" + f.section + "] " + f.key + ": required");
      continue;
    }
    ConfigValue v;
    parse_value(f, f.default_text, v);
    cfg.values_[k] = std::move(v);
  }
  if (!diag.empty()) throw ValidationError(diag);

  // Range and consistency checks.
  auto bad = [&](const std::string& key, const std::string& msg) {
    const auto dot = key.find('.');
    diag.push_back("[" + key.substr(0, dot) + "] " + key.substr(dot + 1) + ": " + msg);
  };
  auto positive = [&](const std::string& key) {
    if (!(cfg.real(key) > 0.0)) bad(key, "must be > 0 (got " + format_number(cfg.real(key)) + ")");
  };
  auto at_least = [&](const std::string& key, std::int64_t lo) {
    if (cfg.integer(key) < lo)
      bad(key, "must be >= " + std::to_string(lo) + " (got " + std::to_string(cfg.integer(key)) + ")");
  };
  auto one_of = [&](const std::string& key, std::initializer_list<const char*> allowed) {
    const auto& v = cfg.text(key);
    std::string list;
    for (const char* a : allowed) {
      if (v == a) return;
      list += std::string(list.empty() ? "" : ", ") + a;
    }
    bad(key, "must be one of " + list + " (got '" + v + "')");
  };

  one_of("experiment.name", {"E1", "E2", "E3", "E4", "E5", "E6", "E7", "E8"});
  one_of("system.kind", {"oscillator", "box", "qubits", "custom"});
  one_of("protection.kind", {"zeno", "hamiltonian", "effective_complex", "none"});
  one_of("protection.mode", {"stochastic", "nonselective"});
  one_of("postselection.kind", {"none", "preselection", "position", "both"});

  at_least("system.grid_points", 8);
  if (!(cfg.real("system.x_min") < cfg.real("system.x_max"))) bad("system.x_max", "must exceed x_min");
  positive("system.omega");
  at_least("system.qubits", 1);
  at_least("system.dim", 2);
  positive("system.packet_width");
  if (!(cfg.real("system.alpha") >= 0.0 && cfg.real("system.alpha") <= 1.0))
    bad("system.alpha", "must lie in [0, 1]");
  if (cfg.reals("system.eigenvalues_real").size() != cfg.reals("system.eigenvalues_imag").size() ||
      cfg.reals("system.eigenvalues_real").size() < 2)
    bad("system.eigenvalues_imag", "needs as many entries as eigenvalues_real (at least 2)");

  positive("protection.period");
  positive("protection.dt");
  positive("protection.duration");
  if (!(cfg.real("protection.ramp") >= 0.0)) bad("protection.ramp", "must be >= 0");
  if (!(cfg.real("protection.duration") > 2.0 * cfg.real("protection.ramp")))
    bad("protection.duration", "must exceed twice the ramp");
  at_least("protection.max_retries", 0);
  if (!(cfg.real("protection.stability_threshold") >= 0.0)) bad("protection.stability_threshold", "must be >= 0");
  positive("protection.fast_duration");
  positive("protection.gap_times");
  at_least("protection.time_samples", 2);

  positive("measurement.epsilon");
  positive("measurement.delta");
  positive("measurement.strength");
  for (double e : cfg.reals("measurement.epsilons"))
    if (!(e > 0.0 && e < cfg.real("measurement.delta")))
      bad("measurement.epsilons", "every entry must lie in (0, delta) (got " + format_number(e) + ")");
  at_least("measurement.pointer_points", 8);
  if (!(cfg.real("measurement.pointer_min") < 0.0 && cfg.real("measurement.pointer_max") > 0.0))
    bad("measurement.pointer_max", "pointer grid must contain 0 strictly inside");
  at_least("measurement.samples", 1);
  positive("measurement.sample_step");
  at_least("measurement.windows", 1);
  const auto n_sys = cfg.integer("system.grid_points");
  for (auto t : cfg.integers("measurement.targets"))
    if (t < 0 || t >= n_sys)
      bad("measurement.targets", "index " + std::to_string(t) + " outside the system grid [0, " +
                                     std::to_string(n_sys) + ")");
  if (cfg.integers("measurement.targets").empty()) bad("measurement.targets", "must not be empty");
  const auto n_ptr = cfg.integer("measurement.pointer_points");
  if (n_ptr >= 8 && cfg.real("measurement.pointer_max") > cfg.real("measurement.pointer_min")) {
    const double pdx = (cfg.real("measurement.pointer_max") - cfg.real("measurement.pointer_min")) /
                       static_cast<double>(n_ptr - 1);
    if (!(cfg.real("measurement.delta") > 3.0 * pdx))
      bad("measurement.delta", "pointer uncertainty must exceed 3 pointer grid spacings (" +
                                   format_number(3.0 * pdx) + ")");
  }
  const std::string& exp = cfg.text("experiment.name");
  if ((exp == "E1" || exp == "E3" || exp == "E5" || exp == "E8") && n_sys > 0 && n_ptr > 0 &&
      static_cast<std::size_t>(n_sys * n_ptr) > kMaxCompositeDim)
    bad("measurement.pointer_points", "system x pointer dimension exceeds 8192");
  positive("postselection.min_bin_probability");

  at_least("run.trials", 1);
  at_least("run.seed", 0);
  at_least("run.threads", 1);
  if (!diag.empty()) throw ValidationError(diag);
  return cfg;
}

bool ScenarioConfig::flag(const std::string& key) const { return get_as<bool>(values_, key); }
std::int64_t ScenarioConfig::integer(const std::string& key) const { return get_as<std::int64_t>(values_, key); }
double ScenarioConfig::real(const std::string& key) const { return get_as<double>(values_, key); }
const std::string& ScenarioConfig::text(const std::string& key) const { return get_as<std::string>(values_, key); }
const std::vector<double>& ScenarioConfig::reals(const std::string& key) const {
  return get_as<std::vector<double>>(values_, key);
}
const std::vector<std::int64_t>& ScenarioConfig::integers(const std::string& key) const {
  return get_as<std::vector<std::int64_t>>(values_, key);
}

void ScenarioConfig::set_seed(std::uint64_t seed) {
  if (seed > static_cast<std::uint64_t>(INT64_MAX)) throw ValidationError({"[run] seed: out of range"});
  values_["run.seed"] = static_cast<std::int64_t>(seed);
}

void ScenarioConfig::set_threads(unsigned threads) {
  if (threads < 1) throw ValidationError({"[run] threads: must be >= 1"});
  values_["run.threads"] = static_cast<std::int64_t>(threads);
}

std::string ScenarioConfig::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) {
    if (k == "run.seed" || k == "run.threads") continue;
    out += k + "=" + value_text(v) + "\n";
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string ScenarioConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
  return buf;
}

}  // namespace protmeas
