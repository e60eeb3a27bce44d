#pragma once

// CSV export of value tables with a JSON sidecar holding the grid and the
// solve metadata.
//
// CSV layout: a version comment line "# kruzkov <version>", a header row
// x1..xn,W,V,in_domain, then one row per node (last axis fastest). Numbers
// use 9 significant digits; masked V values are written as "+inf".

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "kruzkov/grid.hpp"
#include "kruzkov/solver.hpp"

namespace kruzkov {

const char* version();

/// %.9g, with "+inf" / "-inf" / "nan" literals.
std::string format_number(double v);

void write_table_csv(std::ostream& out, const ValueTable& table);

/// Sidecar JSON text: grid, meta, tol_dom, problem name and optional stats.
std::string table_sidecar_json(const ValueTable& table, const std::string& problem,
                               const SweepStats* stats = nullptr);

/// Writes `path` and `path` + ".json".
void write_table(const std::filesystem::path& path, const ValueTable& table,
                 const std::string& problem, const SweepStats* stats = nullptr);

/// Reads a table written by write_table (needs the sidecar).
ValueTable read_table(const std::filesystem::path& path);

}  // namespace kruzkov
