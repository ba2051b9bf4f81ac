#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "flatscan/coefficients.hpp"
#include "flatscan/lattice.hpp"

namespace flatscan {

struct StoppingParams {
  double A = 10.0;      // high density threshold
  double tau = 0.01;    // low density threshold
  double theta = 0.1;   // angle threshold
  double eps0 = 0.01;   // square-function budget
  double gamma = 0.1;   // balanced-ball constants
  double rho1 = 0.25;
  double rho2 = 0.01;
  double eta = 0.1;     // covering-ball scale for nu

  void validate() const;  // throws INVALID_ARGUMENT
};

// Level of the root cube: smallest k with 84 A0^-k <= 1, so that 3B_R0 stays comparable
// to the bounding box.
int default_root_level(const CubeLattice& L);
// The strongly doubling cube of that level closest to the mass centroid; falls back to the
// closest cube (flag `fallback`) when none is strongly doubling.
struct RootChoice {
  int cube = -1;
  bool fallback = false;
};
// Runs doubling detection with C_db = 2 * 100^n and C_sdb = 2 * 2800^n first.
RootChoice choose_root(CubeLattice& L, const DiscreteMeasure& mu, int level, int n);

// Balls attached to a cube: B_Q = 28 B(Q), B_0 = B_{R0}.
inline Ball cube_ball(const Cube& Q, double lambda = 1.0) { return {Q.z, lambda * 28.0 * Q.r}; }

// Good-set defaults for the pipeline: r_lo = 16 x median nearest-neighbour spacing,
// upper truncation r(B_0).
GoodSetOptions pipeline_good_set_options(const DiscreteMeasure& mu, const CubeLattice& L, int root);

struct HypothesisReport {
  bool holds = false;
  double bad_mass = 0.0;      // mu(R0 \ G)
  double budget = 0.0;        // eps0 mu(3B_R0)
  double theta_3B0 = 0.0;     // Theta_mu(3 B_0) before normalization
  double normalization = 1.0; // factor making Theta(3 B_0) = 1
  bool strongly_doubling = false;
  GoodSet good;
};
HypothesisReport check_main_lemma_hypothesis(const DiscreteMeasure& mu, const CubeLattice& L, int root, int n,
                                             double eps0, const GoodSetOptions& opt);

enum class CubeLabel { None, Tree, HD, LD, BS, BA, F };
const char* label_name(CubeLabel l);

struct CubeRecord {
  int cube = -1;
  CubeLabel label = CubeLabel::None;  // Tree, or the family of a maximal stopping cube
  bool hd0 = false, ld0 = false, bs0 = false, ba0 = false, f0 = false;
  bool tree0 = false;
  double mass3 = 0.0, mass15 = 0.0, ell_n = 0.0;
  double bad_fraction = 0.0;   // mu(Q \ G) / mu(Q)
  double angle = 0.0;          // angle(L_Q, L_0)
  double far_fraction = 0.0;   // mu(3B_Q cap R_Far) / mu(3B_Q)
  AffinePlane plane;           // L_Q
  double c = 0.0;              // c_Q (Tree cubes)
  bool has_c = false;
};

enum class TreeStatus { Ok, EmptyTree };

struct TreeOptions {
  GoodSetOptions good;            // r_lo must be set
  PlaneSearchConfig search;       // used for c_Q
  bool compute_c = true;
  const GoodSet* good_set = nullptr;  // reuse a good set computed over R0 with the same eps0
};

struct TreeDecomposition {
  TreeStatus status = TreeStatus::Ok;
  int root = -1;
  int n = 1;
  StoppingParams params;
  double normalization = 1.0;     // weights of `mu` are multiplied by this
  DiscreteMeasure mu;             // normalized measure
  Ball B0;                        // B_{R0}
  AffinePlane L0;
  double c0 = 0.0;
  std::vector<CubeRecord> records;  // cubes of the subtree of R0 that were examined, top-down
  std::vector<int> record_of;       // cube id -> index into records, -1 if not examined
  std::vector<int> stop;            // maximal stopping cubes
  std::vector<int> tree;            // Tree cubes
  std::vector<int> far_atoms;       // R_Far
  GoodSet good;
  double mass_R0 = 0.0, mass_HD = 0.0, mass_LD = 0.0, mass_BS = 0.0, mass_BA = 0.0, mass_F = 0.0,
         mass_far = 0.0;
  double bs_constant = 0.0;   // sum_BS mu(Q) / (eps0 mu(R0))
  double far_constant = 0.0;  // mu(R_Far) / (sqrt(eps0) mu(R0))
  std::vector<std::string> warnings;

  const CubeRecord* record(int cube) const;
  CubeLabel label(int cube) const;
};

TreeDecomposition build_tree(const DiscreteMeasure& mu, const CubeLattice& L, int root, int n,
                             const StoppingParams& params, const TreeOptions& opt);

// Post-hoc checks: Stop maximal and disjoint, strict ancestors of Stop cubes in Tree, every Tree
// cube satisfying the negations of the stopping conditions. Returns one line per violation.
std::vector<std::string> check_tree_invariants(const TreeDecomposition& T, const CubeLattice& L);

// ---- balanced balls ------------------------------------------------------------------

enum class BalanceOutcome { Balanced, Unbalanced, Inconclusive };
const char* outcome_name(BalanceOutcome o);

struct BalancedBallOptions {
  double lift_constant = -1.0;  // Theta(B_i) >= lift_constant / gamma * Theta(B); < 0 means 4^-n / 2
  double mass_constant = 0.5;   // sum mu(B_i) >= mass_constant * mu(B)
};

struct BalancedBallResult {
  BalanceOutcome outcome = BalanceOutcome::Inconclusive;
  std::vector<int> points;       // x_0..x_n (atom indices), alternative (a)
  std::vector<double> spreads;   // dist(x_k, span(x_0..x_{k-1}))
  std::vector<double> slacks;    // worst-case loss over B(x_k, rho1 r)
  double worst_margin = 0.0;     // min_k (spread_k - slack_k) / r - gamma
  std::vector<Ball> family;      // alternative (b)
  double family_mass_fraction = 0.0;
  double min_lift = 0.0;         // min_i Theta(B_i) / Theta(B)
};

BalancedBallResult balanced_ball_test(const DiscreteMeasure& mu, const Ball& B, double gamma, double rho1,
                                      double rho2, int n, const BalancedBallOptions& opt = {});

// ---- Lipschitz graph ---------------------------------------------------------------------

// Values of a map L0 -> L0^perp on a regular grid of M^n nodes (node centres of a dyadic
// subdivision of the square [lo, lo + M h]^n in L0 coordinates).
struct GraphGrid {
  AffinePlane L0;
  Mat normals;    // d x (d - n), orthonormal complement of L0
  int M = 0;
  double h = 0.0;
  Vec lo;
  Mat F;          // (d - n) x M^n

  int n() const { return L0.n(); }
  int nodes() const { return static_cast<int>(F.cols()); }
  Vec node(int idx) const;              // L0 coordinates
  Vec lift(const Vec& u, const Vec& f) const;  // point of R^d over u with normal offset f
  Vec graph_point(int idx) const { return lift(node(idx), F.col(idx)); }
  int index_of(const Vec& u) const;     // node whose cell contains u, -1 outside
  // Forward/central-difference gradient at a node ((d-n) x n).
  Mat gradient(int idx) const;
};

// Grid over [lo, lo + extent]^n of the plane through the origin spanned by the first n axes.
GraphGrid graph_grid_from_function(int n, int d, double lo, double extent, int M,
                                   const std::function<Vec(const Vec&)>& fn);

struct WhitneyCube {
  int level = 0;
  std::vector<int> index;   // integer position at its level
  Vec center;               // L0 coordinates
  double side = 0.0, diam = 0.0;
  bool in_I0 = false;
  int companion = -1;       // Q_i (cube id) for i in I0
  double companion_ratio = 0.0;  // diam(B_{Q_i}) / diam(J_i)
  Mat G;  Vec g;            // F_i(u) = G u + g (zero for i not in I0)
};

struct GraphOptions {
  double h_grid = 0.0;   // 0: from the atom spacing of R0
  double d_tol = 0.0;    // 0: twice the resolution scale
  int max_level = 0;     // 0: 12 for n = 1, 7 for n = 2, 5 otherwise
};

struct GraphModel {
  GraphGrid grid;
  Vec z0;
  double r0 = 0.0;
  std::vector<double> D;          // per node
  std::vector<char> rg_node;      // node lies in the projected good set (no Whitney cube)
  std::vector<int> node_atom;     // R_G atom assigned to an rg node, -1 otherwise
  int conflicts = 0;              // rg nodes receiving more than one atom
  std::vector<WhitneyCube> whitney;
  std::vector<std::vector<int>> node_cells;  // Whitney cubes whose 3J meets the node cell
  std::vector<int> atoms_3B0;     // atoms of 3B_0
  std::vector<double> d;          // d(x), parallel to atoms_3B0
  std::vector<int> rg_atoms;
  double mass_RG = 0.0, mass_R0 = 0.0;
  double resolution = 0.0, d_tol = 0.0;
  double lipschitz = 0.0;         // measured over node pairs
  bool lipschitz_exhaustive = true;
  double interpolation_error = 0.0;  // max |F(Pi0 x) - Pi0perp x| over R_G atoms
  double eq72_constant = 0.0;
  int whitney_73a_violations = 0;
  int whitney_74a_violations = 0;
  bool support_ok = true;         // F = 0 on nodes outside 1.9 B_0

  // F at an arbitrary point of L0 (L0 coordinates); zero outside the grid.
  Vec eval(const Vec& u) const;
  int n() const { return grid.n(); }
};

GraphModel build_graph(const TreeDecomposition& T, const CubeLattice& L, const GraphOptions& opt = {});

// ---- approximating measure ------------------------------------------------------------------

struct CoveringBall {
  int cell = -1;
  bool in_K0 = false;
  Vec zp;      // z'_k in L0 coordinates
  Vec z;       // f(z'_k)
  double r = 0.0;
  double int_mu = 0.0, int_sigma = 0.0, c = 0.0;
};

struct NuOptions {
  double ad_bound = 100.0;
  int ad_samples = 1000;
  int probes = 1000;
  std::uint64_t seed = 7;
  // c_k is measured over a ball of at least this radius (0: 4 x median atom spacing of mu, so
  // that small cells near R_G still see atoms).
  double min_support_radius = 0.0;
};

struct ApproximantNu {
  DiscreteMeasure nu;
  int rg_atoms = 0;             // the first rg_atoms atoms of nu are mu|R_G
  std::vector<CoveringBall> balls;
  double c0 = 0.0;
  double c_min = 0.0, c_max = 0.0;  // over K0
  double partition_error = 0.0;     // max |sum h_k - 1| at probes in the union of 2B_k
  double ad_min = 0.0, ad_max = 0.0, ad_ratio = 0.0;
  bool ad_ok = false;

  // h_k at a point of R^d (all k with nonzero value).
  // Refers to the graph passed to build_nu, which must outlive this object.
  std::vector<std::pair<int, double>> partition(const Vec& x) const;
  const GraphModel* graph = nullptr;
  std::vector<int> cell_begin;      // balls of Whitney cube i: [cell_begin[i], cell_begin[i+1])
};

ApproximantNu build_nu(const TreeDecomposition& T, const GraphModel& G, const NuOptions& opt = {});

// ---- Dorronsoro comparison ------------------------------------------------------------------

struct DorronsoroResult {
  double lhs = 0.0, rhs = 0.0, ratio = 0.0;
  // same double integral with the r^n-normalized beta, for comparison
  double lhs_homogeneous = 0.0, ratio_homogeneous = 0.0;
  int centers = 0, scales = 0;
};
// lhs: sum over grid nodes (every `stride`-th per axis) of the beta_{sigma,1} square function
// times the quadrature weight; rhs: sum |grad F|^2 h^n.
DorronsoroResult dorronsoro_check(const GraphGrid& g, const ScaleGrid& scales, int stride = 1);
// Surface measure of the graph: node points with weight h^n sqrt(det(I + grad F^T grad F)).
DiscreteMeasure graph_surface_measure(const GraphGrid& g);

}  // namespace flatscan
