#pragma once

// Inverse Kasteleyn matrices and everything downstream of them: local dimer
// probabilities, exact sequential sampling, the whole-plane inverse as a
// lattice Fourier integral, and continuum coupling functions on conformal
// domains for checking bounded inverses against their scaling limits.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dimerlab/exact.hpp"
#include "dimerlab/graph.hpp"
#include "dimerlab/kasteleyn.hpp"
#include "dimerlab/lattice.hpp"
#include "dimerlab/quadrature.hpp"
#include "dimerlab/rng.hpp"

namespace dimerlab {

enum class InverseMode { kAuto, kExact, kFloating };

// Rows indexed by black vertices, columns by white, so inv(col_of[b],
// row_of[w]) pairs with k.a(row_of[w], col_of[b]).  Keeps its matrix by
// value so the pair travels together.
struct InverseKasteleyn {
  KasteleynMatrix k;
  bool exact = false;
  Mat<GaussianRat> inv;  // exact entries (when exact)
  CMatrix invf;          // floating mirror, always present
  double residual = 0;   // max |K*invf - I| entry on the floating path
};

inline InverseKasteleyn invert_kasteleyn(const KasteleynMatrix& k,
                                         InverseMode mode = InverseMode::kAuto) {
  int nw = int(k.whites.size()), nb = int(k.blacks.size());
  if (nw != nb)
    throw std::invalid_argument(
        "invert_kasteleyn: color classes unbalanced; no matchings exist");
  if (mode == InverseMode::kAuto)
    mode = (k.exact && nw + nb <= 200) ? InverseMode::kExact : InverseMode::kFloating;
  InverseKasteleyn r;
  r.k = k;
  if (nw == 0) {
    r.exact = k.exact;
    r.invf = CMatrix::Zero(0, 0);
    return r;
  }
  if (mode == InverseMode::kExact) {
    if (!k.exact)
      throw std::invalid_argument("invert_kasteleyn: exact mode needs rational weights");
    if (k.a.rows() == 0)
      throw std::invalid_argument(
          "invert_kasteleyn: matrix too large for a dense exact inverse");
    std::optional<Mat<GaussianRat>> inv = exact_inverse(k.a);
    if (!inv)
      throw std::invalid_argument(
          "invert_kasteleyn: singular Kasteleyn matrix; no matchings exist");
    r.exact = true;
    r.inv = std::move(*inv);
    r.invf = CMatrix::Zero(nb, nw);
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nw; ++j) r.invf(i, j) = r.inv(i, j).to_complex();
    return r;
  }
  if (k.af.size() == 0)
    throw std::invalid_argument(
        "invert_kasteleyn: matrix too large for a dense inverse; "
        "use kasteleyn_inverse_columns");
  Eigen::FullPivLU<CMatrix> lu(k.af);
  if (!lu.isInvertible())
    throw std::invalid_argument(
        "invert_kasteleyn: singular Kasteleyn matrix; no matchings exist");
  r.invf = lu.inverse();
  r.residual = (k.af * r.invf - CMatrix::Identity(nw, nw)).cwiseAbs().maxCoeff();
  if (r.residual > 1e-10)
    throw std::runtime_error("invert_kasteleyn: inverse residual above 1e-10");
  return r;
}

struct ProbValue {
  bool exact = false;
  BigRat rat = BigRat(0);  // exact probability when exact
  double value = 0;        // always usable
};

// Probability that the dimers t = {(w_i, b_i)} all occur: the product of the
// matched matrix entries times the minor of the inverse on those rows and
// columns.  For a flat matrix the result is a real rational and the exact
// path reads it off the real axis.  Overlapping dimers and non-edges have
// probability zero.
inline ProbValue dimer_probability(const InverseKasteleyn& ik,
                                   const std::vector<std::pair<int, int>>& t) {
  const KasteleynMatrix& k = ik.k;
  ProbValue r;
  if (t.empty()) {
    r.exact = true;
    r.rat = BigRat(1);
    r.value = 1;
    return r;
  }
  std::set<int> ws, bs;
  for (auto [w, b] : t) {
    if (w < 0 || w >= int(k.row_of.size()) || k.row_of[w] < 0)
      throw std::invalid_argument("dimer_probability: first vertex of each pair must be white");
    if (b < 0 || b >= int(k.col_of.size()) || k.col_of[b] < 0)
      throw std::invalid_argument("dimer_probability: second vertex of each pair must be black");
    if (!ws.insert(w).second || !bs.insert(b).second) {
      r.exact = ik.exact;
      return r;  // overlapping dimers
    }
  }
  int n = int(t.size());
  if (ik.exact) {
    GaussianRat prod(BigRat(1), BigRat(0));
    Mat<GaussianRat> m(n, n);
    for (int i = 0; i < n; ++i) {
      prod = prod * k.a(k.row_of[t[i].first], k.col_of[t[i].second]);
      for (int j = 0; j < n; ++j)
        m(i, j) = ik.inv(k.col_of[t[i].second], k.row_of[t[j].first]);
    }
    if (prod.is_zero()) {
      r.exact = true;
      return r;
    }
    GaussianRat z = prod * exact_det(m);
    if (z.im == 0 || z.re == 0) {
      r.exact = true;
      r.rat = (z.im == 0) ? z.re : z.im;
      if (r.rat < 0) r.rat = -r.rat;
      r.value = to_double(r.rat);
      return r;
    }
    r.value = std::abs(z.to_complex());  // non-flat weights; modulus only
    return r;
  }
  cplx prod = 1;
  CMatrix m(n, n);
  for (int i = 0; i < n; ++i) {
    prod *= k.af(k.row_of[t[i].first], k.col_of[t[i].second]);
    for (int j = 0; j < n; ++j)
      m(i, j) = ik.invf(k.col_of[t[i].second], k.row_of[t[j].first]);
  }
  r.value = std::abs(prod) * std::abs(m.determinant());
  return r;
}

// Exact sample from the weighted matching measure.  Whites are matched in
// vertex order; each step draws the partner from its conditional
// probability, an entry product of K and the maintained inverse, then
// eliminates the chosen pair by a rank-one update.  Conditionals of a flat
// matrix are real and in [0, 1]; drift beyond 1e-9 aborts.
inline Matching sample_matching(const PlanarGraph& g, const KasteleynMatrix& k,
                                const InverseKasteleyn& ik, uint64_t seed) {
  int n = int(k.whites.size());
  if (int(k.blacks.size()) != n)
    throw std::invalid_argument("sample_matching: color classes unbalanced");
  std::map<std::pair<int, int>, int> edge_of;
  for (int e = 0; e < g.num_edges(); ++e) edge_of[{g.edges[e].u, g.edges[e].v}] = e;
  CMatrix m = ik.invf;
  Rng rng(seed);
  std::vector<char> used(n, 0);
  std::vector<int> chosen;
  for (int r = 0; r < n; ++r) {
    std::vector<double> w(n, 0.0);
    for (int c = 0; c < n; ++c) {
      if (used[c]) continue;
      cplx p = k.af(r, c) * m(c, r);
      if (std::abs(p.imag()) > 1e-9 || p.real() < -1e-9 || p.real() > 1 + 1e-9)
        throw std::runtime_error("sample_matching: conditional probability drifted to " +
                                 std::to_string(p.real()) + "+" + std::to_string(p.imag()) +
                                 "i at white " + std::to_string(k.whites[r]));
      w[c] = std::clamp(p.real(), 0.0, 1.0);
    }
    int c = rng.pick_weighted(w);
    if (used[c] || w[c] == 0)
      throw std::runtime_error("sample_matching: drew an excluded partner");
    auto it = edge_of.find({k.whites[r], k.blacks[c]});
    if (it == edge_of.end())
      throw std::logic_error("sample_matching: chosen pair is not an edge");
    chosen.push_back(it->second);
    used[c] = 1;
    cplx piv = m(c, r);
    Eigen::VectorXcd colr = m.col(r);
    Eigen::RowVectorXcd rowc = m.row(c);
    m.noalias() -= colr * rowc / piv;
  }
  return make_matching(g, chosen);
}

struct PlaneInverseValue {
  cplx value{0, 0};
  bool opposite_colors = false;  // same color: the entry is exactly zero
};

// Whole-plane inverse entry at displacement (x, y) from a white vertex to a
// black one, from the Fourier integral with symbol 2i*sin(theta) -
// 2*sin(phi).  The phi integral is a contour integral in z = e^{i phi} with
// simple poles at the roots of z^2 + 2 sin(theta) z - 1; one root lies
// inside the unit circle, and its residue leaves a theta integrand smooth on
// each half (-pi, 0) and (0, pi).  Negative y goes through conjugation
// symmetry so z^y stays polynomial.
inline PlaneInverseValue plane_inverse(int x, int y, double abs_tol = 1e-11) {
  PlaneInverseValue r;
  if (((x + y) % 2 + 2) % 2 == 0) return r;
  r.opposite_colors = true;
  bool flip = y < 0;
  int yy = flip ? -y : y;
  auto f = [x, yy](double th) -> cplx {
    double s = std::sin(th);
    double rt = std::hypot(s, 1.0);
    double zin = (s >= 0) ? rt - s : -rt - s;
    double diff = (s >= 0) ? 2 * rt : -2 * rt;  // zin - zout
    return std::exp(cplx(0, x * th)) * std::pow(zin, yy) / diff;
  };
  QuadOptions opt;
  opt.abs_tol = abs_tol;
  const double pi = std::numbers::pi;
  cplx integral = adaptive_quad(f, -pi, 0.0, opt) + adaptive_quad(f, 0.0, pi, opt);
  r.value = cplx(0, -1) / (2 * pi) * integral;
  if (flip) r.value = std::conj(r.value);
  return r;
}

// Inverse columns of a large Kasteleyn matrix by one sparse factorization;
// column j of the result holds the inverse entries (black row, white vertex
// w_vertices[j]), indexed by black column id.
inline CMatrix kasteleyn_inverse_columns(const PlanarGraph& g, const KasteleynMatrix& k,
                                         const std::vector<int>& w_vertices) {
  int nw = int(k.whites.size()), nb = int(k.blacks.size());
  if (nw != nb)
    throw std::invalid_argument("kasteleyn_inverse_columns: color classes unbalanced");
  for (int w : w_vertices)
    if (w < 0 || w >= int(k.row_of.size()) || k.row_of[w] < 0)
      throw std::invalid_argument("kasteleyn_inverse_columns: vertex is not white");
  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(g.num_edges());
  for (int e = 0; e < g.num_edges(); ++e) {
    const GraphEdge& ge = g.edges[e];
    cplx entry = k.edge_entry[e].to_complex() *
                 (k.exact ? 1.0 : ge.weight / to_double(ge.rweight));
    trips.emplace_back(k.row_of[ge.u], k.col_of[ge.v], entry);
  }
  Eigen::SparseMatrix<cplx> a(nw, nb);
  a.setFromTriplets(trips.begin(), trips.end());
  a.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu(a);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("kasteleyn_inverse_columns: factorization failed");
  CMatrix rhs = CMatrix::Zero(nw, int(w_vertices.size()));
  for (int j = 0; j < int(w_vertices.size()); ++j) rhs(k.row_of[w_vertices[j]], j) = 1;
  CMatrix x = lu.solve(rhs);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("kasteleyn_inverse_columns: solve failed");
  return x;
}

inline Eigen::VectorXcd kasteleyn_inverse_column(const PlanarGraph& g,
                                                 const KasteleynMatrix& k, int w_vertex) {
  return kasteleyn_inverse_columns(g, k, {w_vertex}).col(0);
}

// Continuum limits of fine-mesh inverse entries on a simply connected
// domain.  Entries into corner-class black cells follow the gradient of the
// Green's function with Neumann boundary, grounded at a boundary root (the
// mesh's removed corner, where the unit of flux exits); entries into
// face-class cells follow the gradient of the Dirichlet Green's function.
// Both channels are packaged as complex derivative fields in the white
// position u,
//   f1(u,v) = 4 d/du N_root(u,v),   f0(u,v) = 4 d/du G_D(u,v),
// so predictions read eps*Re or eps*Im of the matching channel.  F+ = f0+f1
// and F- = f0-f1 combine them; on the half-plane (root at infinity)
// F+(u,v) = 2/(pi(v-u)).  Under a conformal map phi onto the half-plane both
// channels pull back by phi'(u); the root term regrows from the pole of phi.
struct CouplingFunctions {
  std::string domain;
  cplx root{-1, 0};  // boundary point absorbing the Neumann flux
  std::function<cplx(cplx, cplx)> face;    // f0 channel
  std::function<cplx(cplx, cplx)> vertex;  // f1 channel

  cplx f0(cplx u, cplx v) const { return face(u, v); }
  cplx f1(cplx u, cplx v) const { return vertex(u, v); }
  cplx fp(cplx u, cplx v) const { return face(u, v) + vertex(u, v); }
  cplx fm(cplx u, cplx v) const { return face(u, v) - vertex(u, v); }

  static CouplingFunctions half_plane() {
    const double pi = std::numbers::pi;
    return {"half-plane",
            {std::numeric_limits<double>::infinity(), 0},
            [pi](cplx u, cplx v) {
              return 1.0 / (pi * (v - u)) - 1.0 / (pi * (std::conj(v) - u));
            },
            [pi](cplx u, cplx v) {
              return 1.0 / (pi * (v - u)) + 1.0 / (pi * (std::conj(v) - u));
            }};
  }
  static CouplingFunctions disc(cplx root = cplx(-1, 0)) {
    const double pi = std::numbers::pi;
    root /= std::abs(root);
    return {"disc", root,
            [pi](cplx u, cplx v) {
              return 1.0 / (pi * (v - u)) -
                     std::conj(v) / (pi * (1.0 - u * std::conj(v)));
            },
            [pi, root](cplx u, cplx v) {
              return 1.0 / (pi * (v - u)) +
                     std::conj(v) / (pi * (1.0 - u * std::conj(v))) +
                     2.0 / (pi * (u - root));
            }};
  }
  // map carries the named domain onto the upper half-plane; the root is the
  // boundary preimage of infinity.
  static CouplingFunctions conformal_image(std::string name, std::function<cplx(cplx)> map,
                                           std::function<cplx(cplx)> dmap,
                                           cplx root = cplx(-1, 0)) {
    CouplingFunctions base = half_plane();
    auto pull = [](std::function<cplx(cplx, cplx)> f, std::function<cplx(cplx)> m,
                   std::function<cplx(cplx)> dm) {
      return [f = std::move(f), m = std::move(m), dm = std::move(dm)](cplx u, cplx v) {
        return f(m(u), m(v)) * dm(u);
      };
    };
    return {std::move(name), root, pull(base.face, map, dmap),
            pull(base.vertex, std::move(map), std::move(dmap))};
  }
};

// Leading-order continuum prediction for a fine-mesh inverse entry at white
// u, black v.  Corner-class blacks read the f1 channel, face-class blacks
// the f0 channel; the entry is eps*Re f for horizontal-side whites into
// corners and vertical-side whites into faces, and i*eps*Im f on the two
// crossed pairings.
inline cplx coupling_prediction(const CouplingFunctions& cf, double eps, bool w_horizontal,
                                bool b_corner, cplx u, cplx v) {
  cplx f = b_corner ? cf.f1(u, v) : cf.f0(u, v);
  bool real_part = (w_horizontal == b_corner);
  return real_part ? cplx(eps * f.real(), 0) : cplx(0, eps * f.imag());
}

struct CouplingComparison {
  cplx discrete;   // bounded-domain inverse entry, black against white
  cplx continuum;  // eps-scaled coupling prediction at the snapped positions
  double error;    // |discrete - continuum|
  cplx u, v;       // snapped continuum positions actually used
  cplx root;       // boundary root direction of the mesh actually built
};

// Compares inverse entries of the Temperleyan mesh of the unit disc at mesh
// eps against the coupling-function predictions.  Each pair holds requested
// continuum positions (white, black); they snap to the nearest white and
// black fine cells.  The mesh's removed corner snaps to cf.root, and the
// predictions are evaluated with the root where the mesh actually put it,
// since the f1 channel feels a root offset at first order in eps.  One
// sparse factorization serves the whole batch.
inline std::vector<CouplingComparison> coupling_compare_many(
    const CouplingFunctions& cf, double eps, const std::vector<std::pair<cplx, cplx>>& pairs) {
  if (cf.domain != "disc")
    throw std::invalid_argument(
        "coupling_compare: only the disc carries a built-in Temperleyan mesh");
  int rc = int(std::lround(1.0 / (2 * eps)));
  if (rc < 2 || std::abs(2.0 * eps * rc - 1.0) > 1e-12)
    throw std::invalid_argument("coupling_compare: eps must be 1/(2k) for integer k >= 2");
  Region coarse = disc_region(rc);
  cplx target = cf.root / std::abs(cf.root) * double(rc);
  std::set<Cell> corners;
  for (const Cell& c : coarse.cells)
    for (int du = 0; du <= 1; ++du)
      for (int dv = 0; dv <= 1; ++dv) corners.insert({c[0] + du, c[1] + dv});
  std::vector<Cell> order(corners.begin(), corners.end());
  std::sort(order.begin(), order.end(), [&](const Cell& p, const Cell& q) {
    return std::abs(cplx(p[0], p[1]) - target) < std::abs(cplx(q[0], q[1]) - target);
  });
  std::optional<TemperleyRegion> trr;
  for (int t = 0; t < int(order.size()) && t < 12 && !trr; ++t) {
    try {
      trr = temperley_region(coarse, order[t]);
    } catch (const std::invalid_argument&) {
      // interior corner; the next candidate is farther from the target
    }
  }
  if (!trr) throw std::logic_error("coupling_compare: no removable corner near the root");
  TemperleyRegion& tr = *trr;
  PlanarGraph g = region_graph(tr.fine);
  KasteleynMatrix k = build_kasteleyn(g, Weighting::kDirac);
  cplx root =
      cplx(tr.removed[0], tr.removed[1]) / std::abs(cplx(tr.removed[0], tr.removed[1]));
  CouplingFunctions rooted = CouplingFunctions::disc(root);
  std::vector<CouplingComparison> out(pairs.size());
  std::vector<int> wis(pairs.size()), bis(pairs.size());
  for (size_t p = 0; p < pairs.size(); ++p) {
    int wi = -1, bi = -1;
    double dw = 1e300, db = 1e300;
    for (int i = 0; i < int(tr.fine.cells.size()); ++i) {
      auto [a, bb] = tr.fine.cells[i];
      cplx pos(eps * a, eps * bb);
      if (Region::cell_black(a, bb)) {
        if (std::abs(pos - pairs[p].second) < db) { db = std::abs(pos - pairs[p].second); bi = i; }
      } else {
        if (std::abs(pos - pairs[p].first) < dw) { dw = std::abs(pos - pairs[p].first); wi = i; }
      }
    }
    wis[p] = wi;
    bis[p] = bi;
    auto [wa, wy] = tr.fine.cells[wi];
    auto [ba, by] = tr.fine.cells[bi];
    out[p].u = cplx(eps * wa, eps * wy);
    out[p].v = cplx(eps * ba, eps * by);
    out[p].root = root;
    if (std::abs(out[p].u - out[p].v) < 10 * eps)
      throw std::invalid_argument(
          "coupling_compare: w and b closer than 10 mesh units; the expansion does not apply");
  }
  CMatrix cols = kasteleyn_inverse_columns(g, k, wis);
  for (size_t p = 0; p < pairs.size(); ++p) {
    auto [wa, wy] = tr.fine.cells[wis[p]];
    auto [ba, by] = tr.fine.cells[bis[p]];
    out[p].discrete = cols(k.col_of[bis[p]], int(p));
    bool w_horizontal = ((wa % 2) + 2) % 2 == 1;  // horizontal side cells have odd x
    bool b_corner = ((ba % 2) + 2) % 2 == 0;      // corner cells have even x, centers odd
    out[p].continuum =
        coupling_prediction(rooted, eps, w_horizontal, b_corner, out[p].u, out[p].v);
    out[p].error = std::abs(out[p].discrete - out[p].continuum);
  }
  return out;
}

inline CouplingComparison coupling_compare(const CouplingFunctions& cf, double eps, cplx w,
                                           cplx b) {
  return coupling_compare_many(cf, eps, {{w, b}}).front();
}

}  // namespace dimerlab
