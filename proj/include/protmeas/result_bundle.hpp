#pragma once

// Experiment results: named tables plus metadata, serialized as CSV or JSON.

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace protmeas {

using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

struct ResultBundle {
  std::string experiment;
  std::map<std::string, std::string> metadata;  // config hash, seed, code version, ...
  std::map<std::string, Cell> summary;
  std::deque<Table> tables;  // deque: references from table() stay valid
  double wall_clock_seconds = 0.0;

  Table& table(const std::string& name, std::vector<std::string> columns);
  const Table* find(const std::string& name) const;
  double number(const std::string& summary_key) const;
};

enum class Format { Csv, Json };

/// Shortest text with 17 significant digits, '.' decimal point, no locale.
/// NaN and infinities become "nan", "inf", "-inf".
std::string format_number(double v);

/// One header row, then newline-terminated rows.
std::string to_csv(const Table& table);
/// key,value rows for metadata and summary.
std::string summary_csv(const ResultBundle& bundle);
/// Sorted keys, 17 significant digits; NaN/inf become null.
std::string to_json(const ResultBundle& bundle, bool include_wall_clock = true);
/// Everything except wall-clock time; identical across reruns.
std::string payload(const ResultBundle& bundle);

/// JSON: writes `path` (a file, or <dir>/<experiment>.json when `path` is a
/// directory). CSV: `path` is a directory receiving <experiment>_<table>.csv
/// for every table plus <experiment>_summary.csv. Throws Error with the path
/// on I/O failure.
std::vector<std::string> emit(const ResultBundle& bundle, Format format, const std::string& path);

}  // namespace protmeas
