#pragma once

// Kasteleyn matrices and exact matching counts.
//
// Matrices are the white-by-black block A of the full signed adjacency
// matrix; |det A| = sqrt|det K_full| is the matching count.  Two lattice
// weightings are provided:
//   kVerticalI : horizontal edges nu, vertical edges i*nu
//   kDirac     : +nu east, -nu west, +i*nu north, -i*nu south of the white
// Both satisfy the per-face flatness condition on any grid region.
//
// Torus counting uses four seam-twisted determinants combined with a sign
// pattern that is calibrated once per (m mod 4, n mod 4) class against
// exhaustive enumeration, never hard-coded.

#include <Eigen/Dense>
#include <Eigen/LU>
#include <complex>
#include <map>
#include <numbers>
#include <optional>

#include "dimerlab/exact.hpp"
#include "dimerlab/graph.hpp"
#include "dimerlab/lattice.hpp"

namespace dimerlab {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

enum class Weighting { kVerticalI, kDirac };

// Dense mirrors are quadratic in storage, so they are built only up to the
// entry gates below; edge_entry always carries the full matrix in sparse
// form and feeds kasteleyn_inverse_columns at any size.
inline constexpr int64_t kExactDenseEntries = int64_t(1) << 20;
inline constexpr int64_t kFloatDenseEntries = int64_t(1) << 25;

struct KasteleynMatrix {
  Weighting weighting = Weighting::kVerticalI;
  std::vector<int> whites, blacks;     // graph vertex ids, in vertex order
  std::vector<int> row_of, col_of;     // vertex id -> row/col, -1 if other color
  bool exact = false;
  Mat<GaussianRat> a;                  // exact entries (when exact, gated by size)
  CMatrix af;                          // floating mirror (gated by size)
  std::vector<GaussianRat> edge_entry; // per graph edge, exact when exact
};

inline KasteleynMatrix build_kasteleyn(const PlanarGraph& g,
                                       Weighting weighting = Weighting::kVerticalI) {
  if (!g.on_lattice)
    throw std::invalid_argument(
        "build_kasteleyn: lattice coordinates required for this weighting");
  KasteleynMatrix k;
  k.weighting = weighting;
  k.whites = g.white_ids();
  k.blacks = g.black_ids();
  k.row_of.assign(g.num_vertices(), -1);
  k.col_of.assign(g.num_vertices(), -1);
  for (int i = 0; i < int(k.whites.size()); ++i) k.row_of[k.whites[i]] = i;
  for (int j = 0; j < int(k.blacks.size()); ++j) k.col_of[k.blacks[j]] = j;
  k.exact = true;
  for (const GraphEdge& e : g.edges)
    if (!e.weight_exact) k.exact = false;

  int nw = int(k.whites.size()), nb = int(k.blacks.size());
  int64_t entries = int64_t(nw) * nb;
  bool dense_exact = entries <= kExactDenseEntries;
  bool dense_float = entries <= kFloatDenseEntries;
  if (dense_exact) k.a = Mat<GaussianRat>(nw, nb);
  if (dense_float) k.af = CMatrix::Zero(nw, nb);
  k.edge_entry.resize(g.num_edges());
  const GaussianRat one(BigRat(1), BigRat(0)), im(BigRat(0), BigRat(1));
  for (int ei = 0; ei < g.num_edges(); ++ei) {
    const GraphEdge& e = g.edges[ei];
    int64_t dx = g.lattice[e.v][0] - g.lattice[e.u][0];
    int64_t dy = g.lattice[e.v][1] - g.lattice[e.u][1];
    GaussianRat phase;
    if (weighting == Weighting::kVerticalI) {
      phase = (dy == 0) ? one : im;
    } else {
      if (dy == 0) phase = (dx > 0) ? one : -one;
      else phase = (dy > 0) ? im : -im;
    }
    GaussianRat entry = phase * GaussianRat(e.rweight, BigRat(0));
    k.edge_entry[ei] = entry;
    int r = k.row_of[e.u], c = k.col_of[e.v];
    if (r < 0 || c < 0) throw std::logic_error("build_kasteleyn: miscolored edge");
    if (dense_exact) k.a(r, c) = k.a(r, c) + entry;
    if (dense_float)
      k.af(r, c) += entry.to_complex() * (k.exact ? 1.0 : e.weight / to_double(e.rweight));
  }
  return k;
}

// Per-face phase alternation: for an internal 2k-gon face, the product of
// entries over white-tailed darts times the conjugate product over
// black-tailed darts, times (-1)^{k+1}, must be a positive real.
struct FlatnessReport {
  std::vector<int> violating_faces;
  bool ok() const { return violating_faces.empty(); }
};

inline FlatnessReport validate_flatness(const PlanarGraph& g, const KasteleynMatrix& k) {
  FlatnessReport rep;
  for (int f = 1; f < int(g.faces.size()); ++f) {
    GaussianRat pw(BigRat(1), BigRat(0)), pb(BigRat(1), BigRat(0));
    int half = int(g.faces[f].size()) / 2;
    for (int d : g.faces[f]) {
      const GaussianRat& entry = k.edge_entry[dart_edge(d)];
      if (g.vertices[g.dart_tail(d)].color == Color::kWhite) pw = pw * entry;
      else pb = pb * entry;
    }
    GaussianRat z = pw * pb.conj();
    if (half % 2 == 0) z = -z;  // (-1)^{k+1}
    bool good = z.im.get_num() == 0 && z.re > 0;
    if (!good) rep.violating_faces.push_back(f);
  }
  return rep;
}

struct CountResult {
  bool exact = true;
  BigRat value{0};       // weighted matching sum (integer for unit weights)
  double log_value = 0;  // natural log, valid when value > 0 or !exact
  std::string note;
};

inline double log_abs_det(const CMatrix& m) {
  if (m.rows() == 0) return 0;
  Eigen::PartialPivLU<CMatrix> lu(m);
  double s = 0;
  for (int i = 0; i < m.rows(); ++i) s += std::log(std::abs(lu.matrixLU()(i, i)));
  return s;
}

// |det| of the white-by-black block.  Exact for rational weights up to
// `exact_limit` vertices per color, floating (with a note) beyond.
inline CountResult count_matchings(const PlanarGraph& g, const KasteleynMatrix& k,
                                   int exact_limit = 400) {
  if (k.exact && !validate_flatness(g, k).ok())
    throw std::invalid_argument(
        "count_matchings: matrix is not Kasteleyn-flat; |det| would undercount");
  CountResult r;
  if (k.whites.size() != k.blacks.size()) {
    r.value = 0;
    r.log_value = -std::numeric_limits<double>::infinity();
    r.note = "color classes unbalanced; no perfect matching exists";
    return r;
  }
  int n = int(k.whites.size());
  if (n == 0) {
    r.value = 1;
    return r;
  }
  if (k.exact && n <= exact_limit && k.a.rows() > 0) {
    GaussianRat det = exact_det(k.a);
    // Flat weighting makes every matching term share one phase, so the
    // determinant is purely real or purely imaginary.
    if (det.re.get_num() != 0 && det.im.get_num() != 0)
      throw std::logic_error("count_matchings: determinant not on a coordinate axis");
    BigRat v = det.re.get_num() != 0 ? det.re : det.im;
    if (v < 0) v = -v;
    r.value = v;
    r.log_value = v > 0 ? std::log(to_double(v)) : -std::numeric_limits<double>::infinity();
    return r;
  }
  if (k.af.size() == 0)
    throw std::invalid_argument(
        "count_matchings: matrix too large for a dense determinant");
  r.exact = false;
  r.log_value = log_abs_det(k.af);
  r.note = "floating determinant (size above exact limit)";
  return r;
}

inline BigInt count_matchings_int(const PlanarGraph& g, const KasteleynMatrix& k) {
  CountResult r = count_matchings(g, k);
  if (!r.exact) throw std::logic_error("count_matchings_int: graph too large for exact path");
  if (r.value.get_den() != 1) throw std::logic_error("count_matchings_int: non-integer count");
  return r.value.get_num();
}

// ---------------------------------------------------------------------------
// Rectangle spectral formulas.  Eigenvalues of the (vertical-i) lattice
// operator on a w-by-h box are 2cos(pi j/(w+1)) + 2i cos(pi k/(h+1)).

inline double rectangle_spectral_logcount(int m, int n) {
  // m rows, n columns
  if (m < 1 || n < 1) throw std::invalid_argument("rectangle_spectral: need m,n >= 1");
  if (m % 2 && n % 2) return -std::numeric_limits<double>::infinity();
  const double pi = std::numbers::pi;
  double s = 0;
  for (int j = 1; j <= n; ++j)
    for (int k = 1; k <= m; ++k) {
      double x = 2 * std::cos(pi * j / (n + 1));
      double y = 2 * std::cos(pi * k / (m + 1));
      s += 0.5 * std::log(x * x + y * y);
    }
  return s / 2;  // count = sqrt(prod |lambda|)
}

inline double rectangle_spectral_count(int m, int n) {
  return std::exp(rectangle_spectral_logcount(m, n));
}

// Inverse entries at the center of a rectangle via the exact eigenbasis.
// Cells are (x,y), 0 <= x < w, 0 <= y < h.  K is the vertical-i weighting;
// the Dirac variant differs by the diagonal gauge i^{x+y} handled below.
inline cplx rect_vertical_i_inverse(int w, int h, std::array<int, 2> bcell,
                                    std::array<int, 2> wcell) {
  const double pi = std::numbers::pi;
  double norm = (w + 1) * (h + 1) / 4.0;
  cplx sum = 0;
  for (int j = 1; j <= w; ++j) {
    double fbx = std::sin(pi * j * (bcell[0] + 1) / (w + 1));
    double fwx = std::sin(pi * j * (wcell[0] + 1) / (w + 1));
    double cx = 2 * std::cos(pi * j / (w + 1));
    for (int k = 1; k <= h; ++k) {
      double fby = std::sin(pi * k * (bcell[1] + 1) / (h + 1));
      double fwy = std::sin(pi * k * (wcell[1] + 1) / (h + 1));
      cplx lambda(cx, 2 * std::cos(pi * k / (h + 1)));
      sum += fbx * fby * fwx * fwy / lambda;
    }
  }
  return sum / norm;
}

inline cplx ipow(int64_t e) {
  switch (((e % 4) + 4) % 4) {
    case 0: return {1, 0};
    case 1: return {0, 1};
    case 2: return {-1, 0};
    default: return {0, -1};
  }
}

// K_dirac = D_phi K_vi D_psi with phi(w) = i^{-(x+y+1)}, psi(b) = i^{x+y},
// so K_dirac^{-1}(b,w) = i^{(xw+yw)-(xb+yb)+1} K_vi^{-1}(b,w).
inline cplx rect_dirac_inverse(int w, int h, std::array<int, 2> bcell,
                               std::array<int, 2> wcell) {
  cplx base = rect_vertical_i_inverse(w, h, bcell, wcell);
  int64_t e = (wcell[0] + wcell[1]) - (bcell[0] + bcell[1]) + 1;
  return ipow(e) * base;
}

// ---------------------------------------------------------------------------
// Torus sector determinants and calibrated partition function.

// Sector matrix A_{sigma,tau}: edges wrapping the x seam gain (-1)^sigma, the
// y seam (-1)^tau.  Optional multipliers track winding for slope counts:
// E-wraps get zeta_x, W-wraps 1/zeta_x, S-wraps zeta_y, N-wraps 1/zeta_y.
inline Mat<GaussianRat> torus_sector_matrix(const TorusGraph& t, int sigma, int tau) {
  std::vector<int> row_of(t.num_vertices(), -1), col_of(t.num_vertices(), -1);
  int nw = 0, nb = 0;
  for (int v = 0; v < t.num_vertices(); ++v) {
    if (t.is_black(v)) col_of[v] = nb++;
    else row_of[v] = nw++;
  }
  Mat<GaussianRat> a(nw, nb);
  const GaussianRat one(BigRat(1), BigRat(0)), im(BigRat(0), BigRat(1));
  for (const TorusEdge& e : t.edges) {
    bool vertical = e.slot == TorusSlot::kN || e.slot == TorusSlot::kS;
    GaussianRat entry = (vertical ? im : one) * GaussianRat(t.rweight[int(e.slot)], BigRat(0));
    if (e.wraps) {
      bool xseam = e.slot == TorusSlot::kE || e.slot == TorusSlot::kW;
      if ((xseam && sigma) || (!xseam && tau)) entry = -entry;
    }
    int r = row_of[e.w], c = col_of[e.b];
    a(r, c) = a(r, c) + entry;
  }
  return a;
}

inline CMatrix torus_sector_matrix_f(const TorusGraph& t, int sigma, int tau,
                                     cplx zeta_x = 1.0, cplx zeta_y = 1.0) {
  std::vector<int> row_of(t.num_vertices(), -1), col_of(t.num_vertices(), -1);
  int nw = 0, nb = 0;
  for (int v = 0; v < t.num_vertices(); ++v) {
    if (t.is_black(v)) col_of[v] = nb++;
    else row_of[v] = nw++;
  }
  CMatrix a = CMatrix::Zero(nw, nb);
  for (const TorusEdge& e : t.edges) {
    bool vertical = e.slot == TorusSlot::kN || e.slot == TorusSlot::kS;
    cplx entry = (vertical ? cplx(0, 1) : cplx(1, 0)) * t.weight[int(e.slot)];
    if (e.wraps) {
      bool xseam = e.slot == TorusSlot::kE || e.slot == TorusSlot::kW;
      if ((xseam && sigma) || (!xseam && tau)) entry = -entry;
      switch (e.slot) {
        case TorusSlot::kE: entry *= zeta_y; break;
        case TorusSlot::kW: entry /= zeta_y; break;
        case TorusSlot::kS: entry *= zeta_x; break;
        case TorusSlot::kN: entry /= zeta_x; break;
      }
    }
    a(row_of[e.w], col_of[e.b]) += entry;
  }
  return a;
}

// Signed value of an exactly real-or-imaginary Gaussian rational.
inline BigRat axis_value(const GaussianRat& z) {
  if (z.re.get_num() != 0 && z.im.get_num() != 0)
    throw std::logic_error("axis_value: determinant not on a coordinate axis");
  return z.re.get_num() != 0 ? z.re : z.im;
}

// Winding numbers of a torus matching: sx = #S-wraps - #N-wraps equals a
// quarter of the height period along the x cycle (and sy likewise for y);
// see heights tests for the crossing-count proof of that identity.
inline std::pair<int, int> torus_winding(const TorusGraph& t, const std::vector<int>& edge_ids) {
  int sx = 0, sy = 0;
  for (int ei : edge_ids) {
    const TorusEdge& e = t.edges[ei];
    if (!e.wraps) continue;
    switch (e.slot) {
      case TorusSlot::kS: ++sx; break;
      case TorusSlot::kN: --sx; break;
      case TorusSlot::kE: ++sy; break;
      case TorusSlot::kW: --sy; break;
    }
  }
  return {sx, sy};
}

struct TorusCalibration {
  std::array<int, 4> eps;                  // index sigma*2+tau
  std::array<std::array<int, 4>, 4> c;     // [sigma*2+tau][class h]
};

// Solve the sign structure on a small torus of the (m mod 4, n mod 4) class:
// generic prime weights make the class sums Z_h distinct, so the per-sector
// sign vector c and the global combination eps are pinned uniquely.  The
// calibration size grows within the class until every winding parity class
// is populated, since an empty class would leave its sign bit free.
inline const TorusCalibration& torus_calibration(int m, int n) {
  static std::map<std::pair<int, int>, TorusCalibration> cache;
  auto key = std::make_pair(m % 4, n % 4);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  int m0 = (m % 4 == 0) ? 4 : 2, n0 = (n % 4 == 0) ? 4 : 2;
  TorusGraph t;
  std::array<BigRat, 4> zh;
  for (;;) {
    if (m0 * n0 > 40)
      throw std::logic_error("torus_calibration: no enumerable size fills all classes");
    t = build_torus(m0, n0, {BigRat(2), BigRat(3), BigRat(5), BigRat(7)});
    std::vector<std::vector<int>> matchings;
    enumerate_matchings(torus_edge_list(t), &matchings);
    zh = {BigRat(0), BigRat(0), BigRat(0), BigRat(0)};
    for (const auto& mlist : matchings) {
      auto [sx, sy] = torus_winding(t, mlist);
      BigRat w(1);
      for (int ei : mlist) w *= t.rweight[int(t.edges[ei].slot)];
      zh[((sx % 2 + 2) % 2) * 2 + ((sy % 2 + 2) % 2)] += w;
    }
    if (zh[0] > 0 && zh[1] > 0 && zh[2] > 0 && zh[3] > 0) break;
    if (m0 <= n0) m0 += 4; else n0 += 4;
  }

  TorusCalibration cal{};
  for (int s = 0; s < 2; ++s)
    for (int ta = 0; ta < 2; ++ta) {
      BigRat det = axis_value(exact_det(torus_sector_matrix(t, s, ta)));
      bool found = false;
      for (int mask = 0; mask < 16; ++mask) {
        BigRat sum(0);
        std::array<int, 4> cs;
        for (int h = 0; h < 4; ++h) {
          cs[h] = (mask >> h) & 1 ? 1 : -1;
          sum += BigRat(cs[h]) * zh[h];
        }
        if (sum == det) {
          if (found)
            throw std::logic_error("torus_calibration: ambiguous sign vector");
          cal.c[s * 2 + ta] = cs;
          found = true;
        }
      }
      if (!found)
        throw std::logic_error("torus_calibration: no sign vector matches the determinant");
    }
  bool ok = false;
  for (int mask = 0; mask < 16 && !ok; ++mask) {
    std::array<int, 4> eps;
    for (int st = 0; st < 4; ++st) eps[st] = (mask >> st) & 1 ? 1 : -1;
    bool good = true;
    for (int h = 0; h < 4; ++h) {
      int s = 0;
      for (int st = 0; st < 4; ++st) s += eps[st] * cal.c[st][h];
      if (s != 2) { good = false; break; }
    }
    if (good) { cal.eps = eps; ok = true; }
  }
  if (!ok) throw std::logic_error("torus_calibration: no eps pattern reproduces all classes");
  return cache.emplace(key, cal).first->second;
}

struct TorusPartition {
  BigRat z;                      // exact weighted matching sum
  std::array<BigRat, 4> det;    // signed sector determinants, index sigma*2+tau
  std::array<double, 4> product; // spectral products; [0] is fully antiperiodic
};

// Spectral products over momentum pairs: sector (s,t) multiplies
// |a u + b/u + i c v + i d/v| over u^m = -(-1)^s, v^n = -(-1)^t, so index 0
// is the antiperiodic sector.  Reported for inspection; Z never uses them.
inline std::array<double, 4> torus_products(const TorusGraph& t) {
  const double pi = std::numbers::pi;
  std::array<double, 4> out;
  for (int s = 0; s < 2; ++s)
    for (int ta = 0; ta < 2; ++ta) {
      double logp = 0;
      for (int j = 0; j < t.m; ++j)
        for (int k = 0; k < t.n; ++k) {
          double thu = (2 * j + (s == 0 ? 1 : 0)) * pi / t.m;
          double thv = (2 * k + (ta == 0 ? 1 : 0)) * pi / t.n;
          cplx u = std::polar(1.0, thu), v = std::polar(1.0, thv);
          cplx val = t.weight[0] * u + t.weight[1] / u +
                     cplx(0, 1) * (t.weight[2] * v + t.weight[3] / v);
          logp += std::log(std::abs(val) + 1e-300);
        }
      out[s * 2 + ta] = std::exp(logp);
    }
  return out;
}

inline TorusPartition torus_partition(const TorusGraph& t) {
  const TorusCalibration& cal = torus_calibration(t.m, t.n);
  TorusPartition r;
  BigRat acc(0);
  for (int s = 0; s < 2; ++s)
    for (int ta = 0; ta < 2; ++ta) {
      BigRat d = axis_value(exact_det(torus_sector_matrix(t, s, ta)));
      r.det[s * 2 + ta] = d;
      acc += BigRat(cal.eps[s * 2 + ta]) * d;
    }
  acc /= 2;
  if (acc < 0)
    throw std::logic_error("torus_partition: negative result, calibration transfer failed");
  r.z = acc;
  r.product = torus_products(t);
  return r;
}

// Per-site log of Z for large tori.  The biggest sector determinant bounds
// Z within [max/2 - cancellation, 2 max]; the returned estimate
// log(max)/mn - log(2)/mn is within log(4)/mn of the truth, which the tests
// bound against exact values at moderate sizes.
inline double torus_log_partition_per_site(const TorusGraph& t) {
  const double pi = std::numbers::pi;
  double best = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < 2; ++s)
    for (int ta = 0; ta < 2; ++ta) {
      double logdet = 0;  // sum over momentum pair classes = half the full sum
      for (int j = 0; j < t.m; ++j)
        for (int k = 0; k < t.n; ++k) {
          double thu = (2 * j + s) * pi / t.m;  // sigma=0 is the untwisted sector
          double thv = (2 * k + ta) * pi / t.n;
          cplx u = std::polar(1.0, thu), v = std::polar(1.0, thv);
          cplx val = t.weight[0] * u + t.weight[1] / u +
                     cplx(0, 1) * (t.weight[2] * v + t.weight[3] / v);
          logdet += 0.5 * std::log(std::abs(val) + 1e-300);
        }
      best = std::max(best, logdet);
    }
  return (best - std::log(2.0)) / (t.m * t.n);
}

// Matching counts by winding class (sx, sy).  Exhaustive for small tori,
// otherwise a discrete Fourier transform of determinants with root-of-unity
// seam multipliers.
inline std::map<std::pair<int, int>, BigInt> torus_slope_counts(int m, int n) {
  TorusGraph t = build_torus(m, n);
  std::map<std::pair<int, int>, BigInt> counts;
  if (m * n <= 36) {
    std::vector<std::vector<int>> matchings;
    enumerate_matchings(torus_edge_list(t), &matchings);
    for (const auto& ml : matchings) counts[torus_winding(t, ml)] += 1;
    return counts;
  }
  const TorusCalibration& cal = torus_calibration(m, n);
  TorusPartition part = torus_partition(t);

  // Phase of each sector det, fixed by the exact determinant value.  One
  // sector vanishes identically at unit weights (the symbol zero mode lives
  // in it); its phase is read at generic weights instead, which is valid
  // because det = phase * (signed class sum) holds identically in the
  // weights, with one phase per sector.
  std::array<cplx, 4> rho{1.0, 1.0, 1.0, 1.0};
  TorusGraph tgen = build_torus(m, n, {BigRat(2), BigRat(3), BigRat(5), BigRat(7)});
  for (int s = 0; s < 2; ++s)
    for (int ta = 0; ta < 2; ++ta) {
      const TorusGraph& tr = part.det[s * 2 + ta] != 0 ? t : tgen;
      BigRat exact = part.det[s * 2 + ta] != 0
                         ? part.det[s * 2 + ta]
                         : axis_value(exact_det(torus_sector_matrix(tr, s, ta)));
      if (exact == 0)
        throw std::logic_error("torus_slope_counts: sector degenerate at generic weights");
      cplx fdet = torus_sector_matrix_f(tr, s, ta).fullPivLu().determinant();
      cplx q = to_double(exact) / fdet;
      cplx snapped = std::abs(q.real()) > std::abs(q.imag())
                         ? cplx(q.real() > 0 ? 1 : -1, 0)
                         : cplx(0, q.imag() > 0 ? 1 : -1);
      if (std::abs(q - snapped) > 1e-6)
        throw std::logic_error("torus_slope_counts: sector phase drift");
      rho[s * 2 + ta] = snapped;
    }

  int P = m + 1, Q = n + 1;
  const double pi = std::numbers::pi;
  std::vector<std::vector<cplx>> zgrid(P, std::vector<cplx>(Q));
  for (int p = 0; p < P; ++p)
    for (int q = 0; q < Q; ++q) {
      cplx zx = std::polar(1.0, 2 * pi * p / P), zy = std::polar(1.0, 2 * pi * q / Q);
      cplx acc = 0;
      for (int s = 0; s < 2; ++s)
        for (int ta = 0; ta < 2; ++ta) {
          cplx d = torus_sector_matrix_f(t, s, ta, zx, zy).fullPivLu().determinant();
          acc += double(cal.eps[s * 2 + ta]) * (rho[s * 2 + ta] * d);
        }
      zgrid[p][q] = acc / 2.0;
    }
  BigInt total(0);
  for (int sx = -m / 2; sx <= m / 2; ++sx)
    for (int sy = -n / 2; sy <= n / 2; ++sy) {
      cplx acc = 0;
      for (int p = 0; p < P; ++p)
        for (int q = 0; q < Q; ++q)
          acc += zgrid[p][q] * std::polar(1.0, -2 * pi * (double(p) * sx / P + double(q) * sy / Q));
      double val = acc.real() / (P * Q);
      long long rounded = std::llround(val);
      if (std::abs(val - double(rounded)) > 1e-5 * std::max(1.0, std::abs(val)) + 1e-5 ||
          rounded < 0)
        throw std::logic_error("torus_slope_counts: transform is not a nonnegative integer");
      if (rounded != 0) {
        counts[{sx, sy}] += BigInt(long(rounded));
        total += BigInt(long(rounded));
      }
    }
  if (BigRat(total) != part.z)
    throw std::logic_error("torus_slope_counts: class counts do not sum to the partition value");
  return counts;
}

}  // namespace dimerlab
