#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dnas/grid.hpp"
#include "dnas/search.hpp"

namespace dnas {

// Result files. Column contracts are documented in docs/formats.md. Any
// non-finite number aborts with NumericError before anything is written.

/// One JSON object per grid row.
std::string grid_records_jsonl(const std::vector<GridRow>& rows);
std::vector<GridRow> parse_grid_records(const std::string& text);

/// config_id,z,mean_acc,ci_half,homogeneous
std::string grid_table_csv(const std::vector<GridRow>& rows);

/// series,config_id,z,mean_acc,ci_half. "baseline" rows (homogeneous configs,
/// z ascending) form the polyline; "scatter" rows hold everything else in
/// input order.
std::string grid_plot_csv(const std::vector<GridRow>& rows);

struct GridFiles {
  std::filesystem::path records;
  std::filesystem::path table;
  std::filesystem::path plot;
};

/// Writes grid_records.jsonl, grid_table.csv and grid_plot.csv into `dir`,
/// creating it if needed.
GridFiles emit_grid(const std::vector<GridRow>& rows, const std::filesystem::path& dir);

/// Writes trace.jsonl into `dir`.
std::filesystem::path emit_trace(const SearchTrace& trace, const std::filesystem::path& dir);

/// Throws FileError naming the path on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace dnas
