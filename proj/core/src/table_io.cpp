#include "kruzkov/table_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kruzkov/errors.hpp"

namespace kruzkov {

const char* version() { return "1.0.0"; }

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_table_csv(std::ostream& out, const ValueTable& table) {
  const Grid& g = table.grid();
  out << "# kruzkov " << version() << '\n';
  for (std::size_t a = 0; a < g.dims(); ++a) out << 'x' << (a + 1) << ',';
  out << "W,V,in_domain\n";
  State x(g.dims());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.node(i, x);
    for (double c : x) out << format_number(c) << ',';
    out << format_number(table[i]) << ',' << format_number(table.V(i)) << ','
        << (table.in_domain(i) ? 1 : 0) << '\n';
  }
}

std::string table_sidecar_json(const ValueTable& table, const std::string& problem,
                               const SweepStats* stats) {
  const Grid& g = table.grid();
  const TableMeta& m = table.meta();
  nlohmann::json j;
  j["version"] = version();
  j["problem"] = problem;
  j["grid"] = {{"lo", g.lower()}, {"hi", g.upper()}, {"counts", g.counts()}};
  j["tol_dom"] = table.tol_dom();
  j["meta"] = {{"delta_target", m.delta_target}, {"eps", m.eps},   {"init", to_string(m.init)},
               {"dt", m.dt},                     {"horizon", m.horizon}, {"mode", m.mode},
               {"note", m.note}};
  if (stats) {
    j["stats"] = {{"sweeps", stats->sweeps},
                  {"residual", stats->residual},
                  {"violations", stats->violations},
                  {"converged", stats->converged}};
  }
  return j.dump(2);
}

void write_table(const std::filesystem::path& path, const ValueTable& table,
                 const std::string& problem, const SweepStats* stats) {
  std::ofstream csv(path, std::ios::binary);
  if (!csv) throw ConfigError("cannot open " + path.string() + " for writing");
  write_table_csv(csv, table);
  std::ofstream side(path.string() + ".json", std::ios::binary);
  if (!side) throw ConfigError("cannot open " + path.string() + ".json for writing");
  side << table_sidecar_json(table, problem, stats) << '\n';
}

ValueTable read_table(const std::filesystem::path& path) {
  std::ifstream side(path.string() + ".json");
  if (!side) throw ConfigError("missing sidecar " + path.string() + ".json");
  nlohmann::json j;
  try {
    side >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed sidecar: ") + e.what());
  }
  Grid grid(j.at("grid").at("lo").get<std::vector<double>>(),
            j.at("grid").at("hi").get<std::vector<double>>(),
            j.at("grid").at("counts").get<std::vector<std::size_t>>());
  TableMeta meta;
  const auto& jm = j.at("meta");
  meta.delta_target = jm.at("delta_target").get<double>();
  meta.eps = jm.at("eps").get<double>();
  meta.init = jm.at("init").get<std::string>() == "below" ? InitRegime::FromBelow
                                                           : InitRegime::FromAbove;
  meta.dt = jm.at("dt").get<double>();
  meta.horizon = jm.at("horizon").get<double>();
  meta.mode = jm.at("mode").get<std::string>();
  meta.note = jm.at("note").get<std::string>();

  std::ifstream csv(path);
  if (!csv) throw ConfigError("cannot open " + path.string());
  std::string line;
  std::vector<double> W;
  W.reserve(grid.size());
  const std::size_t col = grid.dims();
  std::size_t row = 0;
  while (std::getline(csv, line)) {
    ++row;
    if (line.empty() || line[0] == '#' || line[0] == 'x') continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    for (; c <= col && std::getline(ss, cell, ','); ++c) {
      if (c < col) continue;
      try {
        W.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("bad W value on line " + std::to_string(row) + " of " + path.string());
      }
    }
    if (c <= col) {
      throw ConfigError("short row on line " + std::to_string(row) + " of " + path.string());
    }
  }
  return ValueTable(std::move(grid), std::move(W), j.at("tol_dom").get<double>(), meta);
}

}  // namespace kruzkov
