#include "dnas/emit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dnas/error.hpp"

namespace dnas {

namespace {

using nlohmann::json;

void check_row(const GridRow& r) {
  auto finite = [&](double v, const char* field) {
    if (!std::isfinite(v)) {
      throw NumericError("non-finite " + std::string(field) + " for config " + r.config_id);
    }
  };
  finite(r.z, "z");
  finite(r.mean, "mean_acc");
  finite(r.ci_half, "ci_half");
  for (double a : r.accuracies) finite(a, "accuracy");
}

void check_rows(const std::vector<GridRow>& rows) {
  for (const auto& r : rows) check_row(r);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string grid_records_jsonl(const std::vector<GridRow>& rows) {
  check_rows(rows);
  std::string out;
  for (const auto& r : rows) {
    const json j = {{"config_id", r.config_id}, {"z", r.z},
                    {"accuracies", r.accuracies}, {"mean", r.mean},
                    {"ci_half", r.ci_half},     {"homogeneous", r.homogeneous},
                    {"failures", r.failures}};
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<GridRow> parse_grid_records(const std::string& text) {
  std::vector<GridRow> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      GridRow r;
      r.config_id = j.at("config_id").get<std::string>();
      r.z = j.at("z").get<double>();
      r.accuracies = j.at("accuracies").get<std::vector<double>>();
      r.mean = j.at("mean").get<double>();
      r.ci_half = j.at("ci_half").get<double>();
      r.homogeneous = j.at("homogeneous").get<bool>();
      r.failures = j.at("failures").get<std::vector<std::string>>();
      rows.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ConfigError("grid records line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

std::string grid_table_csv(const std::vector<GridRow>& rows) {
  check_rows(rows);
  std::string out = "config_id,z,mean_acc,ci_half,homogeneous\n";
  for (const auto& r : rows) {
    out += r.config_id + "," + num(r.z) + "," + num(r.mean) + "," + num(r.ci_half) + "," +
           (r.homogeneous ? "1" : "0") + "\n";
  }
  return out;
}

std::string grid_plot_csv(const std::vector<GridRow>& rows) {
  check_rows(rows);
  std::vector<const GridRow*> baseline;
  for (const auto& r : rows) {
    if (r.homogeneous) baseline.push_back(&r);
  }
  std::stable_sort(baseline.begin(), baseline.end(),
                   [](const GridRow* a, const GridRow* b) { return a->z < b->z; });
  std::string out = "series,config_id,z,mean_acc,ci_half\n";
  auto line = [&](const char* series, const GridRow& r) {
    out += std::string(series) + "," + r.config_id + "," + num(r.z) + "," + num(r.mean) + "," +
           num(r.ci_half) + "\n";
  };
  for (const GridRow* r : baseline) line("baseline", *r);
  for (const auto& r : rows) {
    if (!r.homogeneous) line("scatter", r);
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw FileError("cannot create directory", path.parent_path().string());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write file", path.string());
  out << text;
  out.close();
  if (!out) throw FileError("failed writing file", path.string());
}

GridFiles emit_grid(const std::vector<GridRow>& rows, const std::filesystem::path& dir) {
  const std::string records = grid_records_jsonl(rows);
  const std::string table = grid_table_csv(rows);
  const std::string plot = grid_plot_csv(rows);
  GridFiles files{dir / "grid_records.jsonl", dir / "grid_table.csv", dir / "grid_plot.csv"};
  write_text_file(files.records, records);
  write_text_file(files.table, table);
  write_text_file(files.plot, plot);
  return files;
}

std::filesystem::path emit_trace(const SearchTrace& trace, const std::filesystem::path& dir) {
  const auto path = dir / "trace.jsonl";
  write_text_file(path, trace.to_jsonl());
  return path;
}

}  // namespace dnas
