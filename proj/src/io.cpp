#include "eivfit/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace eivfit {

namespace fs = std::filesystem;

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

void close_checked(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw DataError("write to '" + path.string() + "' failed");
}

// Splits one CSV record; double quotes group commas and "" escapes a quote.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cells.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cells.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.emplace_back();
    } else {
      cells.back() += c;
    }
  }
  return cells;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == ".." || cell == "N/A";
}

double sample_std(const Vector& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0));
}

std::string join_numbers(const Vector& v, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += format_number(v[i]);
  }
  return out;
}

}  // namespace

std::optional<double> parse_number(std::string_view cell) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  return v;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

ColumnStd TabularSchema::std_for(const std::string& column) const {
  const auto it = column_std.find(column);
  return it == column_std.end() ? ColumnStd{} : it->second;
}

void TabularSchema::validate() const {
  require(!input_columns.empty(), "schema: at least one input column is required");
  require(!output_column.empty(), "schema: output column is required");
  std::set<std::string> seen(input_columns.begin(), input_columns.end());
  require(seen.size() == input_columns.size(), "schema: duplicate input column");
  require(!seen.count(output_column), "schema: output column is also an input");
  for (const auto& [name, s] : column_std) {
    require(s.auto15 || (std::isfinite(s.value) && s.value >= 0.0),
            "schema: error std for '" + name + "' must be a nonnegative number or \"auto15\"");
  }
}

TabularSchema TabularSchema::from_json(const nlohmann::json& j) {
  TabularSchema s;
  try {
    s.input_columns = j.at("inputs").get<std::vector<std::string>>();
    s.output_column = j.at("output").get<std::string>();
    if (j.contains("key") && !j["key"].is_null()) s.key_column = j["key"].get<std::string>();
    if (j.contains("id") && !j["id"].is_null()) s.id_column = j["id"].get<std::string>();
    if (j.contains("std")) {
      for (const auto& [name, v] : j["std"].items()) {
        if (v.is_string()) {
          require(v.get<std::string>() == "auto15", "schema: unknown std token for '" + name + "'");
          s.column_std[name] = ColumnStd{};
        } else {
          s.column_std[name] = ColumnStd{false, v.get<double>()};
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("schema: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json TabularSchema::to_json() const {
  nlohmann::json j;
  j["inputs"] = input_columns;
  j["output"] = output_column;
  j["key"] = key_column ? nlohmann::json(*key_column) : nlohmann::json();
  j["id"] = id_column ? nlohmann::json(*id_column) : nlohmann::json();
  nlohmann::json stds = nlohmann::json::object();
  for (const auto& [name, s] : column_std) stds[name] = s.auto15 ? nlohmann::json("auto15") : nlohmann::json(s.value);
  j["std"] = stds;
  return j;
}

TabularSchema TabularSchema::load(const fs::path& path) {
  auto in = open_in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("schema '" + path.string() + "': " + e.what());
  }
  return from_json(j);
}

LoadedTable read_csv(const fs::path& path, const TabularSchema& schema) {
  schema.validate();
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path.string() + "' has no header row");
  std::vector<std::string> header = split_csv(line);
  for (auto& h : header) h = trim(h);

  auto column_index = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("column '" + name + "' not found in '" + path.string() + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::size_t> numeric_cols;
  for (const auto& c : schema.input_columns) numeric_cols.push_back(column_index(c));
  numeric_cols.push_back(column_index(schema.output_column));
  if (schema.key_column) numeric_cols.push_back(column_index(*schema.key_column));
  const std::optional<std::size_t> id_col =
      schema.id_column ? std::optional<std::size_t>(column_index(*schema.id_column)) : std::nullopt;
  const std::size_t k = schema.input_columns.size();

  LoadedTable t;
  std::vector<Vector> values;  // retained rows, in numeric_cols order
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++t.rows_read;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      ++t.rows_dropped;
      t.diagnostics.push_back("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                              " fields, found " + std::to_string(cells.size()));
      continue;
    }
    Vector row;
    std::string problem;
    for (std::size_t c : numeric_cols) {
      const std::string cell = trim(cells[c]);
      if (is_missing(cell)) {
        problem = "missing value in column '" + header[c] + "'";
        break;
      }
      const auto v = parse_number(cell);
      if (!v || !std::isfinite(*v)) {
        problem = "unparseable number '" + cell + "' in column '" + header[c] + "'";
        break;
      }
      row.push_back(*v);
    }
    if (!problem.empty()) {
      ++t.rows_dropped;
      t.diagnostics.push_back("line " + std::to_string(line_no) + ": " + problem);
      continue;
    }
    values.push_back(std::move(row));
    t.ids.push_back(id_col ? trim(cells[*id_col]) : std::to_string(t.rows_read));
  }
  if (values.empty()) throw DataError("'" + path.string() + "': no usable rows");

  auto resolve_std = [&](const std::string& name, std::size_t col) {
    const ColumnStd s = schema.std_for(name);
    if (!s.auto15) return s.value;
    if (values.size() < 2) throw DataError("auto15 error std for '" + name + "' needs at least two rows");
    Vector column;
    for (const auto& r : values) column.push_back(r[col]);
    return 0.15 * sample_std(column);
  };
  for (std::size_t c = 0; c < k; ++c) t.input_stds.push_back(resolve_std(schema.input_columns[c], c));
  t.output_std = resolve_std(schema.output_column, k);

  const bool exact_inputs = std::all_of(t.input_stds.begin(), t.input_stds.end(), [](double s) { return s == 0.0; });
  if (!exact_inputs) {
    for (double s : t.input_stds) {
      if (s == 0.0) throw DataError("input error stds must be all zero or all positive");
    }
  }
  if (!(t.output_std > 0.0)) throw DataError("output error std must be positive");
  const ErrorDensity in_density =
      exact_inputs ? ErrorDensity::point_mass(k) : ErrorDensity::gaussian(t.input_stds);
  const ErrorDensity out_density = ErrorDensity::gaussian(Vector{t.output_std});

  Vector key;
  for (const auto& r : values) {
    t.data.inputs.emplace_back(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(k));
    t.data.outputs.push_back(Vector{r[k]});
    t.data.input_densities.push_back(in_density);
    t.data.output_densities.push_back(out_density);
    if (schema.key_column) key.push_back(r[k + 1]);
  }
  if (schema.key_column) t.key = std::move(key);
  t.data.validate();
  return t;
}

TrainTestSplit train_test_split(std::size_t size, std::size_t n_test, std::uint64_t seed) {
  require(n_test > 0 && n_test < size,
          "train_test_split: need 0 < n_test < size, got n_test=" + std::to_string(n_test) +
              " size=" + std::to_string(size));
  std::vector<std::size_t> order(size);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  // Partial Fisher-Yates: the first n_test slots become the test sample.
  for (std::size_t i = 0; i < n_test; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, size - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  TrainTestSplit s;
  s.test_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(s.test_rows.begin(), s.test_rows.end());
  std::sort(s.train_rows.begin(), s.train_rows.end());
  return s;
}

void write_table_csv(const fs::path& path, const Table& table) {
  auto out = open_out(path);
  out << "country";
  for (const auto& c : table.columns) out << ',' << c;
  out << '\n';
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    out << table.ids[i];
    for (double v : table.rows[i]) out << ',' << format_number(v);
    out << '\n';
  }
  close_checked(out, path);
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["config"] = config;
  j["seeds"] = seeds;
  j["library_version"] = library_version;
  j["timestamp"] = timestamp;
  j["timings_seconds"] = timings_seconds;
  j["output_digests"] = output_digests;
  return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.config = j.at("config");
    m.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
    m.library_version = j.at("library_version").get<std::string>();
    m.timestamp = j.at("timestamp").get<std::string>();
    m.timings_seconds = j.at("timings_seconds").get<std::map<std::string, double>>();
    m.output_digests = j.at("output_digests").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("manifest: ") + e.what());
  }
  return m;
}

std::string sha256_hex(const fs::path& path) {
  auto in = open_in(path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256: digest initialisation failed");
  }
  char buf[1 << 14];
  while (in) {
    in.read(buf, sizeof buf);
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

void write_manifest(const fs::path& path, const RunManifest& manifest) {
  auto out = open_out(path);
  out << manifest.to_json().dump(2) << '\n';
  close_checked(out, path);
}

RunManifest read_manifest(const fs::path& path) {
  auto in = open_in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest '" + path.string() + "': " + e.what());
  }
  return RunManifest::from_json(j);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_fit_report(const fs::path& path, const FitReport& report) {
  const FitResult& f = report.fit;
  {
    auto out = open_out(path);
    out << "report:\n";
    out << "  timestamp: " << report.manifest.timestamp << '\n';
    out << "  library_version: " << report.manifest.library_version << '\n';
    out << "fit:\n";
    out << "  alpha_hat: [" << join_numbers(f.alpha_hat, ", ") << "]\n";
    out << "  objective: " << format_number(f.objective_at_min) << '\n';
    out << "  converged: " << (f.converged ? "true" : "false") << '\n';
    out << "  iterations: " << f.iterations << '\n';
    out << "  warm_start: [" << join_numbers(f.warm_start, ", ") << "]\n";
    if (f.density_params_hat) {
      out << "  input_scales: [" << join_numbers(f.density_params_hat->input_scales, ", ") << "]\n";
      out << "  output_scales: [" << join_numbers(f.density_params_hat->output_scales, ", ") << "]\n";
    }
    out << "  diagnostics:\n";
    for (const auto& d : f.diagnostics) out << "    - " << d << '\n';
    out << "metrics:\n";
    for (const auto& [name, v] : report.metrics) out << "  " << name << ": " << format_number(v) << '\n';
    out << "seeds:\n";
    for (const auto& [name, v] : report.manifest.seeds) out << "  " << name << ": " << v << '\n';
    out << "config:\n";
    for (const auto& [name, v] : report.manifest.config.items()) out << "  " << name << ": " << v.dump() << '\n';
    close_checked(out, path);
  }
  fs::path tsv = path;
  tsv += ".tsv";
  auto out = open_out(tsv);
  out << "name\tvalue\n";
  for (std::size_t i = 0; i < f.alpha_hat.size(); ++i) {
    out << "alpha_hat[" << i << "]\t" << format_number(f.alpha_hat[i]) << '\n';
  }
  out << "objective\t" << format_number(f.objective_at_min) << '\n';
  out << "converged\t" << (f.converged ? 1 : 0) << '\n';
  out << "iterations\t" << f.iterations << '\n';
  if (f.density_params_hat) {
    const auto& p = *f.density_params_hat;
    for (std::size_t i = 0; i < p.input_scales.size(); ++i) {
      out << "input_scale[" << i << "]\t" << format_number(p.input_scales[i]) << '\n';
    }
    for (std::size_t i = 0; i < p.output_scales.size(); ++i) {
      out << "output_scale[" << i << "]\t" << format_number(p.output_scales[i]) << '\n';
    }
  }
  for (const auto& [name, v] : report.metrics) out << "metric." << name << '\t' << format_number(v) << '\n';
  for (const auto& [name, v] : report.manifest.seeds) out << "seed." << name << '\t' << v << '\n';
  close_checked(out, tsv);
}

ReadFitReport read_fit_report(const fs::path& path) {
  fs::path tsv = path;
  if (tsv.extension() != ".tsv") tsv += ".tsv";
  auto in = open_in(tsv);
  ReadFitReport r;
  std::string line;
  std::getline(in, line);
  if (trim(line) != "name\tvalue" && line != "name\tvalue") throw DataError("'" + tsv.string() + "' is not a fit report table");
  std::map<std::size_t, double> alpha;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("malformed report row: " + line);
    const std::string name = line.substr(0, tab);
    const std::string value = line.substr(tab + 1);
    r.fields[name] = value;
    const auto number = parse_number(value);
    if (name.rfind("alpha_hat[", 0) == 0) {
      if (!number) throw DataError("malformed alpha_hat entry: " + line);
      alpha[std::stoul(name.substr(10))] = *number;
    } else if (name == "objective" && number) {
      r.objective = *number;
    } else if (name == "converged") {
      r.converged = value == "1";
    } else if (name == "iterations" && number) {
      r.iterations = static_cast<std::size_t>(*number);
    } else if (name.rfind("metric.", 0) == 0 && number) {
      r.metrics[name.substr(7)] = *number;
    }
  }
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (!alpha.count(i)) throw DataError("report is missing alpha_hat[" + std::to_string(i) + "]");
    r.alpha_hat.push_back(alpha[i]);
  }
  if (r.alpha_hat.empty()) throw DataError("report has no alpha_hat");
  return r;
}

void write_surface(const fs::path& path, const Surface& s) {
  require(s.axis1.n >= 1 && s.axis2.n >= 1 && s.values.size() == s.axis1.n * s.axis2.n, "write_surface: empty or inconsistent grid");
  auto out = open_out(path);
  auto axis = [&](const char* name, const SurfaceAxis& a) {
    out << "# " << name << " index=" << a.index << " lo=" << format_number(a.lo) << " hi=" << format_number(a.hi)
        << " n=" << a.n << '\n';
  };
  axis("axis1", s.axis1);
  axis("axis2", s.axis2);
  out << "# fixed " << join_numbers(s.fixed, " ") << '\n';
  out << "# min row=" << s.argmin_row << " col=" << s.argmin_col << " value=" << format_number(s.min_value) << '\n';
  for (std::size_t i = 0; i < s.axis1.n; ++i) {
    for (std::size_t j = 0; j < s.axis2.n; ++j) {
      if (j) out << '\t';
      out << format_number(s.at(i, j));
    }
    out << '\n';
  }
  close_checked(out, path);
}

Surface read_surface(const fs::path& path) {
  auto in = open_in(path);
  Surface s;
  auto fail = [&](const std::string& what) { return DataError("surface '" + path.string() + "': " + what); };
  auto parse_axis = [&](const std::string& line, const std::string& name) {
    std::istringstream ss(line);
    std::string hash, tag;
    ss >> hash >> tag;
    if (hash != "#" || tag != name) throw fail("expected " + name + " header");
    SurfaceAxis a;
    std::string kv;
    while (ss >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw fail("bad axis field " + kv);
      const std::string key = kv.substr(0, eq);
      const auto v = parse_number(kv.substr(eq + 1));
      if (!v) throw fail("bad axis value " + kv);
      if (key == "index") a.index = static_cast<std::size_t>(*v);
      else if (key == "lo") a.lo = *v;
      else if (key == "hi") a.hi = *v;
      else if (key == "n") a.n = static_cast<std::size_t>(*v);
    }
    return a;
  };
  std::string line;
  if (!std::getline(in, line)) throw fail("empty file");
  s.axis1 = parse_axis(line, "axis1");
  if (!std::getline(in, line)) throw fail("missing axis2");
  s.axis2 = parse_axis(line, "axis2");
  if (!std::getline(in, line) || line.rfind("# fixed", 0) != 0) throw fail("missing fixed header");
  {
    std::istringstream ss(line.substr(7));
    std::string tok;
    while (ss >> tok) {
      const auto v = parse_number(tok);
      if (!v) throw fail("bad fixed value " + tok);
      s.fixed.push_back(*v);
    }
  }
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      const auto v = parse_number(std::string_view(line).substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (!v) throw fail("bad value in row: " + line);
      s.values.push_back(*v);
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
  }
  if (s.values.size() != s.axis1.n * s.axis2.n) throw fail("value count does not match the axes");
  s.min_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    if (s.values[i] < s.min_value) {
      s.min_value = s.values[i];
      s.argmin_row = i / s.axis2.n;
      s.argmin_col = i % s.axis2.n;
    }
  }
  return s;
}

}  // namespace eivfit
