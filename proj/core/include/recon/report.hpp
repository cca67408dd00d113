#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recon/objectives.hpp"

namespace recon {

enum class FieldLocation { cell, point };

/// Legacy ASCII VTK (v3.0) unstructured grid with one scalar field, written
/// as CELL_DATA for P0 and POINT_DATA for P1 fields. Throws ArgumentError on
/// a size mismatch and IoError if the file cannot be written.
void emit_field_vtk(const TriMesh& mesh, const Eigen::VectorXd& field, FieldLocation location, std::ostream& out,
                    std::string_view name = "alpha");
void emit_field_vtk(const TriMesh& mesh, const Eigen::VectorXd& field, FieldLocation location,
                    const std::string& path, std::string_view name = "alpha");

/// "triangle,cx,cy,region,alpha", one row per triangle.
void write_coefficient_csv(const TriMesh& mesh, const CoefficientField& alpha, std::ostream& out);
void write_coefficient_csv(const TriMesh& mesh, const CoefficientField& alpha, const std::string& path);

/// Final region values of one (method, noise, seed) run.
struct RunOutcome {
  Method method = Method::ccbm;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> region_values;
  bool failed = false;
};

struct TableCell {
  double value = 0.0;
  double abs_err = 0.0;
  double rel_err = 0.0;
};

inline constexpr std::string_view kAverageRow = "avg";

struct TableRow {
  double noise = 0.0;
  std::uint64_t seed = 0;
  /// Region index as text, or kAverageRow.
  std::string region;
  /// Exact value of the region; NaN on average rows.
  double exact = 0.0;
  /// One entry per table method; NaN entries mark missing runs. On average
  /// rows `value` is NaN and the errors are the per-method means.
  std::vector<TableCell> cells;
};

/// Rows keyed by (noise, seed, region) with one column group per method.
struct ComparisonTable {
  std::vector<Method> methods;
  std::vector<double> exact;
  std::vector<TableRow> rows;

  /// Header "noise,seed,region,exact" then "<m>_value,<m>_abs_err,<m>_rel_err"
  /// per method. Numbers are written in shortest round-trip form.
  void write_csv(std::ostream& out) const;
  void write_csv(const std::string& path) const;
  /// Inverse of write_csv; throws ParseError on malformed input.
  static ComparisonTable parse_csv(std::istream& in);
};

/// Builds the table from run outcomes. Relative errors are |value - exact| / |exact|.
/// Throws ArgumentError if a run's region count differs from `exact`.
ComparisonTable build_comparison_table(std::span<const RunOutcome> runs, std::span<const double> exact);

}  // namespace recon
