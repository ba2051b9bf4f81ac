#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flatscan/fb_distance.hpp"
#include "flatscan/plane.hpp"
#include "flatscan/transport.hpp"

namespace flatscan {

enum class CoefKind { BetaP, BetaHP, Alpha, AlphaH, AlphaP };
const char* kind_name(CoefKind k);
CoefKind parse_kind(const std::string& s);

enum class CoefStatus { Ok, EmptyBall };

struct CoefficientResult {
  CoefKind kind = CoefKind::BetaP;
  int p = 2;
  CoefStatus status = CoefStatus::Ok;
  double value = 0.0;          // meaningless when status == EmptyBall
  Ball ball;
  AffinePlane plane;           // witness plane
  double c = 0.0;              // constant witness c (alpha) or a_{B,L} (alpha_p)
  double mass3 = 0.0;          // mu(3B)
  double residual = 0.0;       // solver residual (duality gap, c-search gap, marginal error)
  double quadrature_spacing = 0.0;
  double quadrature_error = 0.0;  // relative error of the discretized flat mass (alpha_p)
  double aggregation_error = 0.0;  // bound on the value change from merged atoms (alpha_p)
  bool approximate = false;
  std::vector<std::string> flags;
  TransportPlan plan;          // alpha_p only

  bool defined() const { return status == CoefStatus::Ok; }
};

// phi(x) = min(1, (3 - |x|)_+^2) and phi_B(y) = phi((y - z(B)) / r(B)).
double cutoff(double radius);
double cutoff_gradient(double radius);  // |grad phi| at that radius
double cutoff_ball(const Ball& b, const Vec& y);

struct ScaleGrid {
  double r_max = 1.0, r_min = 0.1, q = 0.70710678118654752;

  std::vector<double> radii() const;  // r_max q^j >= r_min
  double step() const;                // ln(1/q)
  // Defaults from the data: r_max = diameter, r_min = 4 x median nearest-neighbour distance.
  static ScaleGrid from_measure(const DiscreteMeasure& mu, double q = 0.70710678118654752);
};

double diameter(const DiscreteMeasure& mu);

struct PlaneSearchConfig {
  int K = 12;                     // plane perturbations beyond the PCA seed
  double spacing_factor = 1.0 / 24.0;  // quadrature spacing delta = factor * r(B)
  std::size_t node_cap = 200;     // F_B node cap before aggregation
  std::size_t transport_cap = 300;  // alpha_p: atoms of phi_B mu merged into cells above this count
  double c_tol = 1e-4;            // relative tolerance of the c line search
  int max_c_iter = 60;
};

// Weighted principal plane of the atoms of mu inside B (exact L^2 minimizer).
// `normals` receives the complementary eigenvectors (d x (d - n)) when given.
struct PcaFit {
  AffinePlane plane;
  Mat normals;
  double residual = 0.0;  // sum w dist(y, plane)^2
  double mass = 0.0;
  int count = 0;
};
std::optional<PcaFit> pca_fit(const DiscreteMeasure& mu, const std::vector<int>& atoms, int n);

CoefficientResult beta_p(const DiscreteMeasure& mu, const Vec& x, double r, int p, int n);
CoefficientResult beta_homogeneous(const DiscreteMeasure& mu, const Vec& x, double r, int p, int n);
// Value of the beta_p integrand at a fixed plane (no minimization), normalized by mu(B(x,3r)).
double beta_at_plane(const DiscreteMeasure& mu, const Vec& x, double r, int p, const AffinePlane& L);

CoefficientResult alpha(const DiscreteMeasure& mu, const Ball& b, int n, const PlaneSearchConfig& cfg = {});
CoefficientResult alpha_homogeneous(const DiscreteMeasure& mu, const Vec& x, double r, int n,
                                    const PlaneSearchConfig& cfg = {});
CoefficientResult alpha_p(const DiscreteMeasure& mu, const Ball& b, int p, int n, const PlaneSearchConfig& cfg = {});

// min over c >= 0 of F_B(mu, c H^n|_L) for a fixed plane.
struct FlatFit {
  double value = 0.0;  // F_B at the best c
  double c = 0.0;
  double lower_bound = 0.0;
  bool approximate = false;
  int evaluations = 0;
};
// `cell_frame` orients aggregation cells (d x d orthonormal); L's own frame is used when empty.
FlatFit fit_flat_constant(const DiscreteMeasure& mu, const Ball& b, const AffinePlane& L,
                          const PlaneSearchConfig& cfg = {}, const Mat& cell_frame = Mat());

// Pieces of alpha_p at a fixed plane: localized marginals and their W_p.
struct LocalizedPair {
  Mat x;  Vec a;   // phi_B mu
  Mat y;  Vec b;   // a_{B,L} phi_B H^n|_L (quadrature, renormalized)
  double a_BL = 0.0;
  double quadrature_error = 0.0;
  double aggregation_error = 0.0;  // (sum a_i |x_i - cell centroid|^p)^{1/p}, bounds the W_p change
};
// With cap > 0 the atoms are merged into cells (oriented by cell_frame) until at most cap remain.
LocalizedPair localized_pair(const DiscreteMeasure& mu, const Ball& b, const AffinePlane& L, double delta,
                             std::size_t cap = 0, const Mat& cell_frame = Mat(), int p = 2);

// Candidate planes: the seed plus K deterministic perturbations.
std::vector<AffinePlane> plane_candidates(const PcaFit& seed, double beta2, double r, int K);

CoefficientResult coefficient(CoefKind kind, const DiscreteMeasure& mu, const Vec& x, double r, int p, int n,
                              const PlaneSearchConfig& cfg = {});

struct SquareFunction {
  double value = 0.0;
  std::vector<double> radii;
  std::vector<double> trace;  // coefficient per scale (NaN if undefined)
  int undefined = 0;
};
SquareFunction square_function(const DiscreteMeasure& mu, const Vec& x, const ScaleGrid& grid, CoefKind kind, int p,
                               int n, const PlaneSearchConfig& cfg = {});

struct GoodSetOptions {
  double r_lo = 0.0;        // lower scale cut-off (required > 0)
  double r_cap = 0.0;       // upper truncation (data diameter); 0 = none
  double q = 0.70710678118654752;
  int net_divisor = 8;      // alpha shared on a net of spacing s/net_divisor; 0 = per atom
  bool early_exit = true;   // stop once the integral reaches eps^2 (value is then a lower bound)
  PlaneSearchConfig search;
  std::vector<int> atoms;   // atoms to classify; empty = all
};

struct GoodSet {
  std::vector<int> atoms;
  std::vector<char> good;          // parallel to atoms
  std::vector<double> integral;    // square-function value (lower bound if exited early)
  std::vector<char> lower_bound;
  std::vector<double> radii;
  double eps = 0.0, r = 0.0;
  bool truncated = false;          // 1000 r exceeded r_cap
  int alpha_evaluations = 0;
  bool shared_alpha = false;
  double good_mass = 0.0, total_mass = 0.0;
};

GoodSet good_set(const DiscreteMeasure& mu, double eps, double r, int n, const GoodSetOptions& opt);

}  // namespace flatscan
