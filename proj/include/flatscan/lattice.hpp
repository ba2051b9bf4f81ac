#pragma once

#include <string>
#include <vector>

#include "flatscan/measure.hpp"

namespace flatscan {

struct ScaleGrid;

struct Cube {
  int id = -1;
  int level = 0;
  std::vector<int> atoms;  // ascending atom indices
  int center = -1;         // atom index of z_Q
  Vec z;
  double r = 0.0;          // r(Q)
  double ell = 0.0;        // l(Q) = 56 C0 A0^-k (data units)
  double mass = 0.0;       // mu(Q)
  int parent = -1;
  std::vector<int> children;
  bool doubling = false;
  bool strongly_doubling = false;

  Ball ball() const { return {z, r}; }          // B(Q)
  Ball big_ball() const { return {z, 28.0 * r}; }  // B_Q
};

struct CubeLattice {
  double A0 = 4.0, C0 = 7.0;
  int depth = 0;
  double unit = 1.0;  // lengths are measured in multiples of this (bounding-box diagonal)
  double separation = 16.0;  // net spacing at level k is separation * A0^-k * unit
  std::vector<Cube> cubes;
  std::vector<std::vector<int>> levels;  // cube ids per level

  double scale(int k) const;  // A0^-k * unit
  const Cube& cube(int id) const { return cubes.at(id); }
  // id of the level-k cube containing an atom
  int cube_of(int atom, int k) const;
  std::vector<std::vector<int>> atom_cube;  // [level][atom] -> cube id
};

// Nested greedy nets (descending weight, then lexicographic order), parent = nearest coarser
// net point, atoms assigned through the finest level. Throws AXIOM_VIOLATION if the result
// fails the axiom check and PARAMETER_INFEASIBLE for invalid constants.
CubeLattice build_lattice(const DiscreteMeasure& mu, double A0 = 4.0, double C0 = 7.0, int depth = 0,
                          double separation = 16.0);
int default_depth(const DiscreteMeasure& mu, double A0);

struct AxiomViolation {
  int cube = -1;
  std::string axiom;
  std::string detail;
};
// Exhaustive pairwise check of the six cube axioms; shares no code with the construction.
std::vector<AxiomViolation> check_axioms(const CubeLattice& L, const DiscreteMeasure& mu);

// mu(100 B(Q)) <= C0 mu(B(Q))
std::vector<char> detect_doubling(CubeLattice& L, const DiscreteMeasure& mu, double C0);
// doubling (constant C_db, default L.C0) and mu(100 B_Q) <= C mu(B(Q)), with B_Q = 28 B(Q)
std::vector<char> detect_strongly_doubling(CubeLattice& L, const DiscreteMeasure& mu, double C, double C_db = 0.0);

// Radii r of the grid with mu(B(x, alpha r)) <= 2 alpha^d mu(B(x, r)).
struct DoublingScan {
  std::vector<double> radii;
  double smallest_scanned = 0.0;
};
DoublingScan doubling_radius_scan(const DiscreteMeasure& mu, const Vec& x, double alpha, const ScaleGrid& grid);

int ancestor_at_gap(const CubeLattice& L, int cube, int gap);

// Ratio mu(100B(Q)) / mu(100B(R)) along chains whose intermediate cubes are all non-doubling,
// against A0^(-2d(J(Q) - J(R) - 1)). Reported only.
struct DensityDrop {
  int q = -1, r = -1, gap = 0;
  double ratio = 0.0, bound = 0.0;
};
std::vector<DensityDrop> density_drop_report(const CubeLattice& L, const DiscreteMeasure& mu);

}  // namespace flatscan
