#include "protmeas/result_bundle.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "protmeas/errors.hpp"

namespace protmeas {

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size())
    throw StructuralError("Table '" + name + "': row has " + std::to_string(row.size()) + " cells, expected " +
                          std::to_string(columns.size()));
  rows.push_back(std::move(row));
}

Table& ResultBundle::table(const std::string& name, std::vector<std::string> columns) {
  for (auto& t : tables)
    if (t.name == name) return t;
  tables.push_back(Table{name, std::move(columns), {}});
  return tables.back();
}

const Table* ResultBundle::find(const std::string& name) const {
  for (const auto& t : tables)
    if (t.name == name) return &t;
  return nullptr;
}

double ResultBundle::number(const std::string& key) const {
  const auto it = summary.find(key);
  if (it == summary.end()) throw StructuralError("ResultBundle: no summary entry '" + key + "'");
  if (const auto* d = std::get_if<double>(&it->second)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
  throw StructuralError("ResultBundle: summary entry '" + key + "' is not numeric");
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string cell_csv(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return csv_field(std::get<std::string>(c));
}

std::string json_string(const std::string& s) {
  std::string out = "\"";
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  return out + "\"";
}

std::string cell_json(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return std::isfinite(*d) ? format_number(*d) : "null";
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return json_string(std::get<std::string>(c));
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("emit: cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw Error("emit: write to '" + path.string() + "' failed");
}

}  // namespace

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) out += (i ? "," : "") + csv_field(table.columns[i]);
  out += "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + cell_csv(row[i]);
    out += "\n";
  }
  return out;
}

std::string summary_csv(const ResultBundle& bundle) {
  std::string out = "key,value\n";
  out += "experiment," + csv_field(bundle.experiment) + "\n";
  for (const auto& [k, v] : bundle.metadata) out += csv_field("metadata." + k) + "," + csv_field(v) + "\n";
  for (const auto& [k, v] : bundle.summary) out += csv_field(k) + "," + cell_csv(v) + "\n";
  return out;
}

std::string to_json(const ResultBundle& bundle, bool include_wall_clock) {
  std::map<std::string, const Table*> tables;
  for (const auto& t : bundle.tables) tables[t.name] = &t;

  std::string out = "{\n  \"experiment\": " + json_string(bundle.experiment) + ",\n  \"metadata\": {";
  bool first = true;
  std::map<std::string, std::string> meta = bundle.metadata;
  for (const auto& [k, v] : meta) {
    out += std::string(first ? "\n" : ",\n") + "    " + json_string(k) + ": " + json_string(v);
    first = false;
  }
  if (include_wall_clock) {
    out += std::string(first ? "\n" : ",\n") + "    \"wall_clock_seconds\": " + format_number(bundle.wall_clock_seconds);
    first = false;
  }
  out += first ? "},\n" : "\n  },\n";
  out += "  \"summary\": {";
  first = true;
  for (const auto& [k, v] : bundle.summary) {
    out += std::string(first ? "\n" : ",\n") + "    " + json_string(k) + ": " + cell_json(v);
    first = false;
  }
  out += first ? "},\n" : "\n  },\n";
  out += "  \"tables\": {";
  first = true;
  for (const auto& [name, t] : tables) {
    out += std::string(first ? "\n" : ",\n") + "    " + json_string(name) + ": {\n      \"columns\": [";
    for (std::size_t i = 0; i < t->columns.size(); ++i) out += (i ? ", " : "") + json_string(t->columns[i]);
    out += "],\n      \"rows\": [";
    for (std::size_t r = 0; r < t->rows.size(); ++r) {
      out += r ? ",\n        [" : "\n        [";
      for (std::size_t i = 0; i < t->rows[r].size(); ++i) out += (i ? ", " : "") + cell_json(t->rows[r][i]);
      out += "]";
    }
    out += t->rows.empty() ? "]\n    }" : "\n      ]\n    }";
    first = false;
  }
  out += first ? "}\n}\n" : "\n  }\n}\n";
  return out;
}

std::string payload(const ResultBundle& bundle) { return to_json(bundle, false); }

std::vector<std::string> emit(const ResultBundle& bundle, Format format, const std::string& path) {
  namespace fs = std::filesystem;
  std::vector<std::string> written;
  std::error_code ec;
  if (format == Format::Json) {
    fs::path target(path);
    if (fs::is_directory(target, ec)) target /= bundle.experiment + ".json";
    if (target.has_parent_path() && !fs::exists(target.parent_path(), ec))
      throw Error("emit: directory '" + target.parent_path().string() + "' does not exist");
    write_file(target, to_json(bundle));
    written.push_back(target.string());
    return written;
  }
  const fs::path dir(path);
  if (!fs::exists(dir, ec)) fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir, ec)) throw Error("emit: '" + path + "' is not a usable directory");
  for (const auto& t : bundle.tables) {
    const fs::path file = dir / (bundle.experiment + "_" + t.name + ".csv");
    write_file(file, to_csv(t));
    written.push_back(file.string());
  }
  const fs::path file = dir / (bundle.experiment + "_summary.csv");
  write_file(file, summary_csv(bundle));
  written.push_back(file.string());
  return written;
}

}  // namespace protmeas
