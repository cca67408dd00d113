#include "recon/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "recon/errors.hpp"

namespace recon {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class F>
void write_file(const std::string& path, F&& body) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  body(out);
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, int line) {
  if (s.empty()) return kNaN;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("bad number '" + s + "'", line);
  return v;
}

}  // namespace

void emit_field_vtk(const TriMesh& mesh, const Eigen::VectorXd& field, FieldLocation location, std::ostream& out,
                    std::string_view name) {
  const auto expected = location == FieldLocation::cell ? mesh.num_triangles() : mesh.num_nodes();
  if (static_cast<std::size_t>(field.size()) != expected) {
    throw ArgumentError("field has " + std::to_string(field.size()) + " values, expected " +
                        std::to_string(expected));
  }
  out.precision(17);
  out << "# vtk DataFile Version 3.0\n" << name << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_nodes() << " double\n";
  for (const auto& p : mesh.nodes()) out << p.x << ' ' << p.y << " 0\n";
  const auto nt = mesh.num_triangles();
  out << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (const auto& t : mesh.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << nt << '\n';
  for (std::size_t t = 0; t < nt; ++t) out << "5\n";
  out << (location == FieldLocation::cell ? "CELL_DATA " : "POINT_DATA ") << expected << '\n';
  out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  for (Eigen::Index i = 0; i < field.size(); ++i) out << field[i] << '\n';
}

void emit_field_vtk(const TriMesh& mesh, const Eigen::VectorXd& field, FieldLocation location,
                    const std::string& path, std::string_view name) {
  write_file(path, [&](std::ostream& out) { emit_field_vtk(mesh, field, location, out, name); });
}

void write_coefficient_csv(const TriMesh& mesh, const CoefficientField& alpha, std::ostream& out) {
  if (alpha.size() != mesh.num_triangles()) throw ArgumentError("coefficient size does not match the mesh");
  out << "triangle,cx,cy,region,alpha\n";
  for (std::size_t t = 0; t < alpha.size(); ++t) {
    const Point c = mesh.centroid(t);
    out << t << ',' << format_number(c.x) << ',' << format_number(c.y) << ',' << mesh.regions()[t] << ','
        << format_number(alpha[t]) << '\n';
  }
}

void write_coefficient_csv(const TriMesh& mesh, const CoefficientField& alpha, const std::string& path) {
  write_file(path, [&](std::ostream& out) { write_coefficient_csv(mesh, alpha, out); });
}

ComparisonTable build_comparison_table(std::span<const RunOutcome> runs, std::span<const double> exact) {
  if (exact.empty()) throw ArgumentError("comparison table needs at least one region");
  ComparisonTable table;
  table.exact.assign(exact.begin(), exact.end());
  for (const auto& run : runs) {
    if (run.region_values.size() != exact.size()) {
      throw ArgumentError("run " + std::string(to_string(run.method)) + " has " +
                          std::to_string(run.region_values.size()) + " regions, expected " +
                          std::to_string(exact.size()));
    }
    if (std::find(table.methods.begin(), table.methods.end(), run.method) == table.methods.end()) {
      table.methods.push_back(run.method);
    }
  }
  std::sort(table.methods.begin(), table.methods.end());

  using Key = std::tuple<double, std::uint64_t>;
  std::map<Key, std::vector<const RunOutcome*>> groups;
  for (const auto& run : runs) groups[{run.noise, run.seed}].push_back(&run);

  const std::size_t nm = table.methods.size();
  const TableCell missing{kNaN, kNaN, kNaN};
  for (const auto& [key, members] : groups) {
    const auto [noise, seed] = key;
    std::vector<TableRow> region_rows(exact.size());
    for (std::size_t r = 0; r < exact.size(); ++r) {
      region_rows[r] = TableRow{noise, seed, std::to_string(r), exact[r], std::vector<TableCell>(nm, missing)};
    }
    TableRow avg{noise, seed, std::string(kAverageRow), kNaN, std::vector<TableCell>(nm, missing)};
    for (const RunOutcome* run : members) {
      const auto col = static_cast<std::size_t>(
          std::find(table.methods.begin(), table.methods.end(), run->method) - table.methods.begin());
      const ErrorMetrics m = region_errors(run->region_values, exact);
      for (std::size_t r = 0; r < exact.size(); ++r) {
        region_rows[r].cells[col] = {m.region_values[r], m.abs_errors[r], m.rel_errors[r]};
      }
      avg.cells[col] = {kNaN, m.avg_abs_error, m.avg_rel_error};
    }
    for (auto& row : region_rows) table.rows.push_back(std::move(row));
    table.rows.push_back(std::move(avg));
  }
  return table;
}

void ComparisonTable::write_csv(std::ostream& out) const {
  out << "noise,seed,region,exact";
  for (Method m : methods) {
    const std::string_view n = to_string(m);
    out << ',' << n << "_value," << n << "_abs_err," << n << "_rel_err";
  }
  out << '\n';
  for (const auto& row : rows) {
    out << format_number(row.noise) << ',' << row.seed << ',' << row.region << ',' << format_number(row.exact);
    for (const auto& c : row.cells) {
      out << ',' << format_number(c.value) << ',' << format_number(c.abs_err) << ',' << format_number(c.rel_err);
    }
    out << '\n';
  }
}

void ComparisonTable::write_csv(const std::string& path) const {
  write_file(path, [&](std::ostream& out) { write_csv(out); });
}

ComparisonTable ComparisonTable::parse_csv(std::istream& in) {
  ComparisonTable table;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  const auto header = split_csv(line);
  if (header.size() < 4 || (header.size() - 4) % 3 != 0 || header[0] != "noise" || header[1] != "seed" ||
      header[2] != "region" || header[3] != "exact") {
    throw ParseError("unexpected header '" + line + "'", 1);
  }
  for (std::size_t i = 4; i < header.size(); i += 3) {
    const std::string& h = header[i];
    const auto us = h.find('_');
    if (us == std::string::npos || h.substr(us) != "_value") throw ParseError("bad column '" + h + "'", 1);
    try {
      table.methods.push_back(parse_method(h.substr(0, us)));
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), 1);
    }
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != header.size()) throw ParseError("expected " + std::to_string(header.size()) + " fields", lineno);
    TableRow row;
    row.noise = parse_number(f[0], lineno);
    std::uint64_t seed = 0;
    const auto [ptr, ec] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), seed);
    if (ec != std::errc() || ptr != f[1].data() + f[1].size()) throw ParseError("bad seed '" + f[1] + "'", lineno);
    row.seed = seed;
    row.region = f[2];
    row.exact = parse_number(f[3], lineno);
    for (std::size_t i = 4; i < f.size(); i += 3) {
      row.cells.push_back({parse_number(f[i], lineno), parse_number(f[i + 1], lineno), parse_number(f[i + 2], lineno)});
    }
    if (row.region != kAverageRow) {
      int r = -1;
      const auto [rp, rec] = std::from_chars(row.region.data(), row.region.data() + row.region.size(), r);
      if (rec != std::errc() || rp != row.region.data() + row.region.size() || r < 0) {
        throw ParseError("bad region '" + row.region + "'", lineno);
      }
      if (static_cast<std::size_t>(r) >= table.exact.size()) table.exact.resize(static_cast<std::size_t>(r) + 1, kNaN);
      table.exact[static_cast<std::size_t>(r)] = row.exact;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace recon
