#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "eivfit/common.hpp"
#include "eivfit/dataset.hpp"
#include "eivfit/optimize.hpp"
#include "eivfit/simulate.hpp"

namespace eivfit {

/// Error standard deviation of one column: a fixed value or 15% of the
/// column's sample standard deviation over the retained rows.
struct ColumnStd {
  bool auto15 = true;
  double value = 0.0;
};

struct TabularSchema {
  std::vector<std::string> input_columns;
  std::string output_column;
  std::optional<std::string> key_column;
  std::optional<std::string> id_column;
  /// Columns without an entry use auto15.
  std::map<std::string, ColumnStd> column_std;

  ColumnStd std_for(const std::string& column) const;
  void validate() const;

  /// {"inputs": [...], "output": "...", "key": "...", "id": "...",
  ///  "std": {"col": 0.5, "other": "auto15"}}
  static TabularSchema from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static TabularSchema load(const std::filesystem::path& path);
};

struct LoadedTable {
  PairedDataset data;
  std::optional<Vector> key;
  std::vector<std::string> ids;
  Vector input_stds;
  double output_std = 0.0;
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
  Diagnostics diagnostics;
};

/// Comma-separated file with a header row. Rows with a missing ("", NA, NaN,
/// "..") or unparseable cell in a selected column are dropped and reported.
LoadedTable read_csv(const std::filesystem::path& path, const TabularSchema& schema);

/// Locale-independent decimal parse of a whole cell; nullopt on any junk.
std::optional<double> parse_number(std::string_view cell);

/// Shortest-form 17-significant-digit decimal; "inf", "-inf", "nan" for non-finite values.
std::string format_number(double v);

struct TrainTestSplit {
  std::vector<std::size_t> train_rows;  // ascending
  std::vector<std::size_t> test_rows;   // ascending
};

TrainTestSplit train_test_split(std::size_t size, std::size_t n_test, std::uint64_t seed);

void write_table_csv(const std::filesystem::path& path, const Table& table);

struct RunManifest {
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, std::uint64_t> seeds;
  std::string library_version = kLibraryVersion;
  std::string timestamp;
  std::map<std::string, double> timings_seconds;
  std::map<std::string, std::string> output_digests;  // file name -> sha256 hex

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

std::string sha256_hex(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

/// UTC time, ISO 8601 to the second.
std::string utc_timestamp();

struct FitReport {
  FitResult fit;
  std::map<std::string, double> metrics;
  RunManifest manifest;
};

/// Writes the sectioned text report to `path` and the flat (name, value)
/// table to `path` + ".tsv". Only the text report carries the timestamp.
void write_fit_report(const std::filesystem::path& path, const FitReport& report);

struct ReadFitReport {
  Vector alpha_hat;
  double objective = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  std::map<std::string, double> metrics;
  std::map<std::string, std::string> fields;
};

/// Reads the flat table written next to a report; accepts either path.
ReadFitReport read_fit_report(const std::filesystem::path& path);

void write_surface(const std::filesystem::path& path, const Surface& surface);
Surface read_surface(const std::filesystem::path& path);

}  // namespace eivfit
