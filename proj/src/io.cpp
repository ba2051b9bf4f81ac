#include "flatscan/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "flatscan/error.hpp"
#include "json.hpp"

namespace flatscan {

using nlohmann::ordered_json;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(trim(cur));
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

Error parse_error(int line, const std::string& what) {
  return Error(ErrorCode::Parse, "line " + std::to_string(line) + ": " + what);
}

ordered_json vec_json(const Vec& v) {
  ordered_json a = ordered_json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

// Columns of m as arrays.
ordered_json cols_json(const Mat& m) {
  ordered_json a = ordered_json::array();
  for (int j = 0; j < m.cols(); ++j) a.push_back(vec_json(m.col(j)));
  return a;
}

ordered_json plane_json(const AffinePlane& L) {
  return {{"base", vec_json(L.base)}, {"frame", cols_json(L.frame)}};
}

ordered_json prov_json(const Provenance& p) {
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : p.config) cfg[k] = v;
  return {{"tool", "flatscan"}, {"version", kVersion}, {"command", p.command},
          {"config_hash", p.hash()}, {"seed", p.seed}, {"config", cfg}};
}

// NaN and infinities are not JSON numbers.
ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

void dump(std::ostream& out, const ordered_json& j) { out << j.dump(1) << '\n'; }

}  // namespace

DiscreteMeasure read_measure_csv(std::istream& in) {
  std::string raw;
  int lineno = 0, d = -1;
  std::vector<double> pts, wts;
  while (std::getline(in, raw)) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> f = split(line, ',');
    if (d < 0) {
      if (f.size() < 2 || f.back() != "w") throw parse_error(lineno, "expected header x1,...,xd,w");
      for (std::size_t i = 0; i + 1 < f.size(); ++i)
        if (f[i] != "x" + std::to_string(i + 1)) throw parse_error(lineno, "expected header x1,...,xd,w");
      d = static_cast<int>(f.size()) - 1;
      continue;
    }
    if (static_cast<int>(f.size()) != d + 1)
      throw parse_error(lineno, "expected " + std::to_string(d + 1) + " fields, got " + std::to_string(f.size()));
    for (std::size_t i = 0; i < f.size(); ++i) {
      double v = 0.0;
      const char* b = f[i].data();
      const char* e = b + f[i].size();
      const auto [ptr, ec] = std::from_chars(b, e, v);
      if (ec != std::errc() || ptr != e || !std::isfinite(v))
        throw parse_error(lineno, "field " + std::to_string(i + 1) + " is not a finite number: '" + f[i] + "'");
      if (static_cast<int>(i) < d) pts.push_back(v);
      else if (!(v > 0)) throw parse_error(lineno, "weight must be positive");
      else wts.push_back(v);
    }
  }
  if (d < 0) throw Error(ErrorCode::InvalidArgument, "empty input: no header");
  if (wts.empty()) throw Error(ErrorCode::InvalidArgument, "empty input: no atoms");
  const int N = static_cast<int>(wts.size());
  Mat P = Eigen::Map<const Mat>(pts.data(), d, N);
  Vec W = Eigen::Map<const Vec>(wts.data(), N);
  return DiscreteMeasure(std::move(P), std::move(W));
}

DiscreteMeasure read_measure_json(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Parse, e.what());
  }
  if (!j.is_object() || !j.contains("dim") || !j["dim"].is_number_integer() || !j.contains("atoms") ||
      !j["atoms"].is_array())
    throw Error(ErrorCode::Parse, "expected {\"dim\": d, \"atoms\": [...]}");
  const int d = j["dim"].get<int>();
  if (d < 1) throw Error(ErrorCode::Parse, "dim must be >= 1");
  const auto& atoms = j["atoms"];
  if (atoms.empty()) throw Error(ErrorCode::InvalidArgument, "empty input: no atoms");
  const int N = static_cast<int>(atoms.size());
  Mat P(d, N);
  Vec W(N);
  for (int k = 0; k < N; ++k) {
    const auto& a = atoms[k];
    const std::string where = "atom " + std::to_string(k) + ": ";
    if (!a.is_object() || !a.contains("p") || !a["p"].is_array() || static_cast<int>(a["p"].size()) != d)
      throw Error(ErrorCode::Parse, where + "expected p with " + std::to_string(d) + " coordinates");
    if (!a.contains("w") || !a["w"].is_number()) throw Error(ErrorCode::Parse, where + "missing weight");
    for (int t = 0; t < d; ++t) {
      if (!a["p"][t].is_number()) throw Error(ErrorCode::Parse, where + "non-numeric coordinate");
      P(t, k) = a["p"][t].get<double>();
    }
    W(k) = a["w"].get<double>();
    if (!(W(k) > 0) || !std::isfinite(W(k))) throw Error(ErrorCode::Parse, where + "weight must be positive");
  }
  return DiscreteMeasure(std::move(P), std::move(W));
}

DiscreteMeasure read_measure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  const bool json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  return json ? read_measure_json(in) : read_measure_csv(in);
}

std::string Provenance::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto feed = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
  };
  feed(command + "\n");
  for (const auto& [k, v] : config) feed(k + "=" + v + "\n");
  feed("seed=" + std::to_string(seed) + "\n");
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string Provenance::comment(const std::string& prefix) const {
  std::string s = prefix + "flatscan " + kVersion + "\n";
  s += prefix + "command: " + command + "\n";
  s += prefix + "config_hash: " + hash() + "\n";
  s += prefix + "seed: " + std::to_string(seed) + "\n";
  for (const auto& [k, v] : config) s += prefix + k + " = " + v + "\n";
  return s;
}

void write_measure_csv(std::ostream& out, const DiscreteMeasure& mu, const Provenance* prov) {
  if (prov) out << prov->comment();
  for (int t = 0; t < mu.dim(); ++t) out << 'x' << t + 1 << ',';
  out << "w\n";
  for (int i = 0; i < mu.size(); ++i) {
    for (int t = 0; t < mu.dim(); ++t) out << fmt(mu.points()(t, i)) << ',';
    out << fmt(mu.weight(i)) << '\n';
  }
}

void write_measure_json(std::ostream& out, const DiscreteMeasure& mu, const Provenance* prov) {
  ordered_json j;
  if (prov) j["provenance"] = prov_json(*prov);
  j["dim"] = mu.dim();
  ordered_json atoms = ordered_json::array();
  for (int i = 0; i < mu.size(); ++i) atoms.push_back({{"p", vec_json(mu.point(i))}, {"w", mu.weight(i)}});
  j["atoms"] = std::move(atoms);
  dump(out, j);
}

void write_lattice_json(std::ostream& out, const CubeLattice& L, const Provenance& prov) {
  ordered_json j;
  j["provenance"] = prov_json(prov);
  j["A0"] = L.A0;
  j["C0"] = L.C0;
  j["depth"] = L.depth;
  j["unit"] = L.unit;
  ordered_json cubes = ordered_json::array();
  for (const Cube& q : L.cubes)
    cubes.push_back({{"id", q.id},
                     {"level", q.level},
                     {"center", vec_json(q.z)},
                     {"center_atom", q.center},
                     {"r", q.r},
                     {"ell", q.ell},
                     {"mass", q.mass},
                     {"parent", q.parent},
                     {"children", q.children},
                     {"atom_ids", q.atoms},
                     {"flags", {{"doubling", q.doubling}, {"strongly_doubling", q.strongly_doubling}}}});
  j["cubes"] = std::move(cubes);
  dump(out, j);
}

void write_coefficients_csv(std::ostream& out, const CoefficientTable& t, const DiscreteMeasure& mu,
                            const Provenance& prov) {
  out << prov.comment();
  out << "atom";
  for (int k = 0; k < mu.dim(); ++k) out << ",x" << k + 1;
  for (double r : t.radii) out << ",r=" << fmt(r);
  out << '\n';
  for (std::size_t i = 0; i < t.atoms.size(); ++i) {
    out << t.atoms[i];
    for (int k = 0; k < mu.dim(); ++k) out << ',' << fmt(mu.points()(k, t.atoms[i]));
    for (const CoefficientResult& c : t.cells[i]) out << ',' << (c.defined() ? fmt(c.value) : "nan");
    out << '\n';
  }
}

void write_coefficients_json(std::ostream& out, const CoefficientTable& t, const DiscreteMeasure& mu,
                             const Provenance& prov) {
  ordered_json j;
  j["provenance"] = prov_json(prov);
  ordered_json recs = ordered_json::array();
  for (std::size_t i = 0; i < t.atoms.size(); ++i)
    for (std::size_t s = 0; s < t.radii.size(); ++s) {
      const CoefficientResult& c = t.cells[i][s];
      ordered_json rec;
      rec["kind"] = kind_name(t.kind);
      rec["p"] = t.p;
      rec["atom"] = t.atoms[i];
      rec["x"] = vec_json(mu.point(t.atoms[i]));
      rec["r"] = t.radii[s];
      rec["value"] = c.defined() ? num(c.value) : ordered_json(nullptr);
      ordered_json w;
      if (c.plane.frame.size() > 0) w["plane"] = plane_json(c.plane);
      w["c"] = c.c;
      w["mass3"] = c.mass3;
      rec["witness"] = w;
      rec["residuals"] = {{"residual", num(c.residual)},
                          {"quadrature_error", num(c.quadrature_error)},
                          {"aggregation_error", num(c.aggregation_error)},
                          {"approximate", c.approximate},
                          {"flags", c.flags}};
      recs.push_back(std::move(rec));
    }
  j["records"] = std::move(recs);
  dump(out, j);
}

void write_heatmap_svg(std::ostream& out, const std::vector<std::vector<double>>& values, const std::string& title,
                       const std::string& x_label, const std::string& y_label, const Provenance& prov) {
  const int rows = static_cast<int>(values.size());
  const int cols = rows ? static_cast<int>(values[0].size()) : 0;
  const int cw = std::clamp(cols ? 720 / cols : 1, 2, 24), ch = std::clamp(rows ? 360 / rows : 1, 6, 24);
  const int left = 60, top = 40, W = left + cols * cw + 20, H = top + rows * ch + 50;
  double vmax = 0.0;
  for (const auto& row : values)
    for (double v : row)
      if (std::isfinite(v)) vmax = std::max(vmax, v);
  char buf[256];
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<!--\n" << prov.comment("  ") << "-->\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << left << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title
      << " (max " << fmt(vmax) << ")</text>\n";
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double v = values[r][c];
      const int x = left + c * cw, y = top + (rows - 1 - r) * ch;
      if (!std::isfinite(v)) {
        std::snprintf(buf, sizeof buf, "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"#f4c7c3\"/>\n", x, y,
                      cw, ch);
      } else {
        const int g = static_cast<int>(std::lround(255.0 * (1.0 - (vmax > 0 ? v / vmax : 0.0))));
        std::snprintf(buf, sizeof buf, "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"rgb(%d,%d,%d)\"/>\n",
                      x, y, cw, ch, g, g, 255);
      }
      out << buf;
    }
  out << "<text x=\"" << left << "\" y=\"" << H - 15 << "\" font-family=\"sans-serif\" font-size=\"12\">" << x_label
      << "</text>\n";
  out << "<text x=\"15\" y=\"" << top + rows * ch / 2 << "\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 15 " << top + rows * ch / 2 << ")\">" << y_label << "</text>\n";
  out << "</svg>\n";
}

void write_decomposition_json(std::ostream& out, const CubeLattice& L, const PipelineReport& r,
                              const Provenance& prov) {
  ordered_json j;
  j["provenance"] = prov_json(prov);
  if (r.hypothesis) {
    const HypothesisReport& h = *r.hypothesis;
    j["hypothesis"] = {{"holds", h.holds},
                       {"bad_mass", h.bad_mass},
                       {"budget", h.budget},
                       {"theta_3B0", h.theta_3B0},
                       {"normalization", h.normalization},
                       {"strongly_doubling", h.strongly_doubling},
                       {"good_mass", h.good.good_mass},
                       {"total_mass", h.good.total_mass}};
  }
  if (r.tree) {
    const TreeDecomposition& T = *r.tree;
    const StoppingParams& P = T.params;
    ordered_json t;
    t["status"] = T.status == TreeStatus::Ok ? "ok" : "empty_tree";
    t["root"] = T.root;
    t["n"] = T.n;
    t["params"] = {{"A", P.A},         {"tau", P.tau},   {"theta", P.theta}, {"eps0", P.eps0},
                   {"gamma", P.gamma}, {"rho1", P.rho1}, {"rho2", P.rho2},   {"eta", P.eta}};
    t["normalization"] = T.normalization;
    t["B0"] = {{"z", vec_json(T.B0.z)}, {"r", T.B0.r}};
    t["L0"] = plane_json(T.L0);
    t["c0"] = T.c0;
    ordered_json cubes = ordered_json::array();
    for (const CubeRecord& c : T.records) {
      ordered_json rec = {{"id", c.cube},
                          {"level", L.cube(c.cube).level},
                          {"label", label_name(c.label)},
                          {"flags", {{"HD0", c.hd0}, {"LD0", c.ld0}, {"BS0", c.bs0}, {"BA0", c.ba0}, {"F0", c.f0},
                                     {"Tree0", c.tree0}}},
                          {"mass_3B", c.mass3},
                          {"mass_1.5B", c.mass15},
                          {"ell_n", c.ell_n},
                          {"bad_fraction", c.bad_fraction},
                          {"angle", c.angle},
                          {"far_fraction", c.far_fraction}};
      if (c.plane.frame.size() > 0) rec["plane"] = plane_json(c.plane);
      if (c.has_c) rec["c"] = c.c;
      cubes.push_back(std::move(rec));
    }
    t["cubes"] = std::move(cubes);
    t["stop"] = T.stop;
    t["tree"] = T.tree;
    t["far_atoms"] = T.far_atoms;
    t["budgets"] = {{"R0", T.mass_R0}, {"HD", T.mass_HD}, {"LD", T.mass_LD},
                    {"BS", T.mass_BS}, {"BA", T.mass_BA}, {"F", T.mass_F},
                    {"far", T.mass_far}, {"bs_constant", T.bs_constant}, {"far_constant", T.far_constant}};
    t["warnings"] = T.warnings;
    j["tree"] = std::move(t);
  }
  if (r.graph) {
    const GraphModel& G = *r.graph;
    ordered_json g;
    g["M"] = G.grid.M;
    g["h"] = G.grid.h;
    g["lo"] = vec_json(G.grid.lo);
    g["z0"] = vec_json(G.z0);
    g["r0"] = G.r0;
    g["resolution"] = G.resolution;
    g["d_tol"] = G.d_tol;
    g["mass_RG"] = G.mass_RG;
    g["mass_R0"] = G.mass_R0;
    g["rg_atoms"] = G.rg_atoms.size();
    g["conflicts"] = G.conflicts;
    g["lipschitz"] = G.lipschitz;
    g["lipschitz_exhaustive"] = G.lipschitz_exhaustive;
    g["interpolation_error"] = G.interpolation_error;
    g["eq72_constant"] = G.eq72_constant;
    g["whitney_size_violations"] = G.whitney_73a_violations;
    g["whitney_I0_violations"] = G.whitney_74a_violations;
    g["support_ok"] = G.support_ok;
    ordered_json w = ordered_json::array();
    for (const WhitneyCube& J : G.whitney) {
      ordered_json rec = {{"level", J.level}, {"index", J.index}, {"center", vec_json(J.center)},
                          {"side", J.side},   {"in_I0", J.in_I0}};
      if (J.in_I0) {
        rec["companion"] = J.companion;
        rec["companion_ratio"] = J.companion_ratio;
        rec["G"] = cols_json(J.G);
        rec["g"] = vec_json(J.g);
      }
      w.push_back(std::move(rec));
    }
    g["whitney"] = std::move(w);
    j["graph"] = std::move(g);
  }
  if (r.nu) {
    const ApproximantNu& A = *r.nu;
    j["nu"] = {{"atoms", A.nu.size()},      {"rg_atoms", A.rg_atoms},     {"balls", A.balls.size()},
               {"c0", A.c0},                {"c_min", num(A.c_min)},      {"c_max", num(A.c_max)},
               {"partition_error", A.partition_error},
               {"ad_min", num(A.ad_min)},   {"ad_max", num(A.ad_max)},    {"ad_ratio", num(A.ad_ratio)},
               {"ad_ok", A.ad_ok}};
  }
  dump(out, j);
}

void write_graph_csv(std::ostream& out, const GraphModel& G, const Provenance& prov) {
  out << prov.comment();
  const int n = G.n(), d = G.grid.L0.d(), c = static_cast<int>(G.grid.F.rows());
  out << "node";
  for (int t = 0; t < n; ++t) out << ",u" << t + 1;
  for (int t = 0; t < d; ++t) out << ",z" << t + 1;
  for (int t = 0; t < c; ++t) out << ",F" << t + 1;
  out << ",D,rg\n";
  for (int i = 0; i < G.grid.nodes(); ++i) {
    out << i;
    const Vec u = G.grid.node(i), z = G.grid.graph_point(i);
    for (int t = 0; t < n; ++t) out << ',' << fmt(u(t));
    for (int t = 0; t < d; ++t) out << ',' << fmt(z(t));
    for (int t = 0; t < c; ++t) out << ',' << fmt(G.grid.F(t, i));
    out << ',' << fmt(G.D[i]) << ',' << int(G.rg_node[i]) << '\n';
  }
}

std::string summary_table(const PipelineReport& r) {
  std::ostringstream s;
  char buf[160];
  auto row = [&](const std::string& k, const std::string& v) {
    std::snprintf(buf, sizeof buf, "%-40s %s\n", k.c_str(), v.c_str());
    s << buf;
  };
  auto g = [](double v) {
    char b[40];
    std::snprintf(b, sizeof b, "%.6g", v);
    return std::string(b);
  };
  if (r.hypothesis) {
    const HypothesisReport& h = *r.hypothesis;
    row("hypothesis mu(R0 \\ G) <= eps0 mu(3B0)", std::string(h.holds ? "holds" : "FAILS") + " (" + g(h.bad_mass) +
                                                     " vs " + g(h.budget) + ")");
    row("Theta(3B0) before normalization", g(h.theta_3B0));
    row("root strongly doubling", h.strongly_doubling ? "yes" : "no");
  }
  if (r.tree) {
    const TreeDecomposition& T = *r.tree;
    const double m = T.mass_R0 > 0 ? T.mass_R0 : 1.0;
    row("tree status", T.status == TreeStatus::Ok ? "ok" : "empty tree (root stops)");
    row("Tree cubes / Stop cubes", std::to_string(T.tree.size()) + " / " + std::to_string(T.stop.size()));
    row("mu(R0)", g(T.mass_R0));
    row("mu(HD) / mu(R0)", g(T.mass_HD / m));
    row("mu(LD) / mu(R0)", g(T.mass_LD / m));
    row("mu(BS) / mu(R0)", g(T.mass_BS / m));
    row("mu(BA) / mu(R0)", g(T.mass_BA / m));
    row("mu(F) / mu(R0)", g(T.mass_F / m));
    row("sum_BS mu(Q) / (eps0 mu(R0))", g(T.bs_constant));
    row("mu(R_Far) / (sqrt(eps0) mu(R0))", g(T.far_constant));
    for (const std::string& w : T.warnings) row("warning", w);
  }
  if (r.graph) {
    const GraphModel& G = *r.graph;
    row("mu(R_G) / mu(R0)", g(G.mass_R0 > 0 ? G.mass_RG / G.mass_R0 : 0.0));
    row(G.lipschitz_exhaustive ? "Lip(F) (all node pairs)" : "Lip(F) (sampled node pairs)", g(G.lipschitz));
    row("max |F - height| over R_G atoms", g(G.interpolation_error));
    row("constant in the graph bound with d(x)", g(G.eq72_constant));
    row("Whitney size / I0 violations", std::to_string(G.whitney_73a_violations) + " / " +
                                            std::to_string(G.whitney_74a_violations));
    row("Whitney cubes", std::to_string(G.whitney.size()));
    row("F vanishes outside 1.9 B0", G.support_ok ? "yes" : "no");
  }
  if (r.nu) {
    const ApproximantNu& A = *r.nu;
    row("c_k range over K0", "[" + g(A.c_min) + ", " + g(A.c_max) + "]");
    row("max |sum h_k - 1| at probes", g(A.partition_error));
    row("nu(B(x,r)) / r^n range", "[" + g(A.ad_min) + ", " + g(A.ad_max) + "]");
    row("AD ratio", g(A.ad_ratio) + (A.ad_ok ? " (ok)" : " (out of bound)"));
  }
  return s.str();
}

}  // namespace flatscan
