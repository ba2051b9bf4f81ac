#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "flatscan/coefficients.hpp"
#include "flatscan/decomposition.hpp"
#include "flatscan/lattice.hpp"
#include "flatscan/measure.hpp"

namespace flatscan {

inline constexpr const char* kVersion = "0.3.0";

// 17 significant digits, enough for an exact round trip of any double.
std::string fmt(double v);

// Point clouds. CSV: optional '#' comment lines, header x1,...,xd,w, one atom per row.
// JSON: {"dim": d, "atoms": [{"p": [...], "w": w}, ...]}. Errors carry the line number.
DiscreteMeasure read_measure_csv(std::istream& in);
DiscreteMeasure read_measure_json(std::istream& in);
// Dispatches on the extension (.json, otherwise CSV).
DiscreteMeasure read_measure(const std::string& path);

// Run description written at the top of every output file.
struct Provenance {
  std::string command;
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;

  std::string hash() const;  // FNV-1a 64 over the canonical key=value listing, hex
  // Comment block, one line per entry, each starting with `prefix`.
  std::string comment(const std::string& prefix = "# ") const;
};

void write_measure_csv(std::ostream& out, const DiscreteMeasure& mu, const Provenance* prov = nullptr);
void write_measure_json(std::ostream& out, const DiscreteMeasure& mu, const Provenance* prov = nullptr);

void write_lattice_json(std::ostream& out, const CubeLattice& L, const Provenance& prov);

// Coefficient matrix over (atom sample x scales): CSV with one row per atom, JSON records
// {kind, x, r, value, witness, residuals}, and an SVG heatmap (atoms on x, scales on y).
struct CoefficientTable {
  CoefKind kind = CoefKind::BetaP;
  int p = 2;
  std::vector<int> atoms;
  std::vector<double> radii;
  std::vector<std::vector<CoefficientResult>> cells;  // [atom][scale]
};
void write_coefficients_csv(std::ostream& out, const CoefficientTable& t, const DiscreteMeasure& mu,
                            const Provenance& prov);
void write_coefficients_json(std::ostream& out, const CoefficientTable& t, const DiscreteMeasure& mu,
                             const Provenance& prov);
// values[row][col]; NaN cells are drawn hatched. Rows are drawn bottom-up.
void write_heatmap_svg(std::ostream& out, const std::vector<std::vector<double>>& values, const std::string& title,
                       const std::string& x_label, const std::string& y_label, const Provenance& prov);

struct PipelineReport {
  const HypothesisReport* hypothesis = nullptr;
  const TreeDecomposition* tree = nullptr;
  const GraphModel* graph = nullptr;
  const ApproximantNu* nu = nullptr;
};
void write_decomposition_json(std::ostream& out, const CubeLattice& L, const PipelineReport& r,
                              const Provenance& prov);
// One row per grid node: L0 coordinates, graph point in R^d, F, D, R_G flag.
void write_graph_csv(std::ostream& out, const GraphModel& G, const Provenance& prov);
// Plain-text table of the mass budgets and measured constants.
std::string summary_table(const PipelineReport& r);

}  // namespace flatscan
