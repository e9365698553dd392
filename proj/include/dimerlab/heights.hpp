#pragma once
// Height functions of matchings, slope entropy and the limit shape, the
// staggered-weight free-energy integral, and spanning-tree sampling of
// superposition meshes.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dimerlab/graph.hpp"
#include "dimerlab/kasteleyn.hpp"
#include "dimerlab/lattice.hpp"
#include "dimerlab/quadrature.hpp"
#include "dimerlab/rng.hpp"

namespace dimerlab {

inline constexpr double kCatalan = 0.915965594177219015054603514932;

// ---------------------------------------------------------------------------
// Heights on lattice corners.
//
// The unit step from corner v to corner w raises the height by 1 when the
// cell left of vw is black and no dimer crosses the step, lowers it by 1
// when that cell is white, and contributes -3 / +3 instead when a dimer
// crosses.  A dimer crosses exactly one side of each cell it covers, so the
// increments sum to zero around every cell and integrate to a single field
// once a base value is fixed.

struct HeightField {
  std::vector<Cell> corners;  // sorted lex
  std::vector<int> h;
  int base = 0;  // index of the corner pinned to height 0

  int index_of(int x, int y) const {
    Cell c{x, y};
    auto it = std::lower_bound(corners.begin(), corners.end(), c);
    if (it == corners.end() || *it != c) return -1;
    return int(it - corners.begin());
  }
  int at(int x, int y) const {
    int i = index_of(x, y);
    if (i < 0) throw std::out_of_range("HeightField::at: not a corner of the region");
    return h[i];
  }
};

// Step increments of a matching, exposed one step at a time so closedness
// can be checked without integrating anything.
class HeightSteps {
 public:
  explicit HeightSteps(const PlanarGraph& g) : g_(&g) {
    if (!g.on_lattice)
      throw std::invalid_argument("heights: graph carries no lattice coordinates");
    for (int i = 0; i < g.num_vertices(); ++i) cell_vertex_[cell_of(g, i)] = i;
  }

  static Cell cell_of(const PlanarGraph& g, int v) {
    return {int((g.lattice[v][0] - 1) / 2), int((g.lattice[v][1] - 1) / 2)};
  }

  int vertex(Cell c) const {
    auto it = cell_vertex_.find(c);
    return it == cell_vertex_.end() ? -1 : it->second;
  }

  // Increment for the step (x,y) -> (x+dx, y+dy); nullopt when the step does
  // not border the region.  |dx| + |dy| must be 1.
  std::optional<int> step(const Matching& m, int x, int y, int dx, int dy) const {
    Cell left, right;
    if (dx == 1) {
      left = {x, y};
      right = {x, y - 1};
    } else if (dx == -1) {
      left = {x - 1, y - 1};
      right = {x - 1, y};
    } else if (dy == 1) {
      left = {x - 1, y};
      right = {x, y};
    } else {
      left = {x, y - 1};
      right = {x - 1, y - 1};
    }
    int lv = vertex(left), rv = vertex(right);
    if (lv < 0 && rv < 0) return std::nullopt;
    bool crossed = lv >= 0 && rv >= 0 && m.partner[lv] == rv;
    int sign = lv >= 0 ? (Region::cell_black(left[0], left[1]) ? 1 : -1)
                       : (Region::cell_black(right[0], right[1]) ? -1 : 1);
    return crossed ? -3 * sign : sign;
  }

  const std::map<Cell, int>& cells() const { return cell_vertex_; }

 private:
  const PlanarGraph* g_;
  std::map<Cell, int> cell_vertex_;
};

inline HeightField height_function(const PlanarGraph& g, const Matching& m) {
  if (!validate_matching(g, m))
    throw std::invalid_argument("height_function: not a perfect matching");
  HeightSteps hs(g);
  HeightField f;
  for (const auto& [c, v] : hs.cells())
    for (int du = 0; du <= 1; ++du)
      for (int dv = 0; dv <= 1; ++dv) f.corners.push_back({c[0] + du, c[1] + dv});
  std::sort(f.corners.begin(), f.corners.end());
  f.corners.erase(std::unique(f.corners.begin(), f.corners.end()), f.corners.end());
  int n = int(f.corners.size());
  const int unset = std::numeric_limits<int>::min();
  f.h.assign(n, unset);
  f.h[0] = 0;
  f.base = 0;
  std::vector<int> queue{0};
  for (size_t qi = 0; qi < queue.size(); ++qi) {
    int i = queue[qi];
    auto [x, y] = f.corners[i];
    for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
      int j = f.index_of(x + dx, y + dy);
      if (j < 0) continue;
      std::optional<int> d = hs.step(m, x, y, dx, dy);
      if (!d) continue;
      int want = f.h[i] + *d;
      if (f.h[j] == unset) {
        f.h[j] = want;
        queue.push_back(j);
      } else if (f.h[j] != want) {
        throw std::logic_error("height_function: step increments are not closed");
      }
    }
  }
  for (int v : f.h)
    if (v == unset) throw std::logic_error("height_function: corner graph disconnected");
  return f;
}

// Inverse of height_function: a step of size 3 marks the crossing dimer.
inline Matching matching_from_heights(const PlanarGraph& g, const HeightField& f) {
  std::vector<int> ids;
  for (int e = 0; e < g.num_edges(); ++e) {
    Cell cu = HeightSteps::cell_of(g, g.edges[e].u);
    Cell cv = HeightSteps::cell_of(g, g.edges[e].v);
    int x, y, dx, dy;  // shared lattice side, as a corner plus a direction
    if (cu[1] == cv[1]) {
      x = std::max(cu[0], cv[0]);
      y = cu[1];
      dx = 0;
      dy = 1;
    } else {
      x = cu[0];
      y = std::max(cu[1], cv[1]);
      dx = 1;
      dy = 0;
    }
    int d = f.at(x + dx, y + dy) - f.at(x, y);
    if (d == 3 || d == -3) ids.push_back(e);
  }
  Matching m = make_matching(g, ids);
  if (!validate_matching(g, m))
    throw std::invalid_argument("matching_from_heights: field does not encode a matching");
  return m;
}

// Boundary corners in counterclockwise order, region cells on the left.
inline std::vector<Cell> region_boundary_corners(const Region& r) {
  std::map<Cell, Cell> next;
  for (const Cell& c : r.cells) {
    auto [a, b] = c;
    if (r.index_of(a, b - 1) < 0) next[{a, b}] = {a + 1, b};
    if (r.index_of(a + 1, b) < 0) next[{a + 1, b}] = {a + 1, b + 1};
    if (r.index_of(a, b + 1) < 0) next[{a + 1, b + 1}] = {a, b + 1};
    if (r.index_of(a - 1, b) < 0) next[{a, b + 1}] = {a, b};
  }
  std::vector<Cell> walk;
  Cell start = next.begin()->first;
  Cell at = start;
  do {
    walk.push_back(at);
    auto it = next.find(at);
    if (it == next.end()) throw std::logic_error("region_boundary_corners: open boundary");
    at = it->second;
  } while (at != start && walk.size() <= next.size());
  if (at != start) throw std::logic_error("region_boundary_corners: boundary did not close");
  return walk;
}

// ---------------------------------------------------------------------------
// Torus heights: well defined on the fundamental domain up to two integer
// periods, the height change per horizontal / vertical wind.

struct TorusHeightField {
  int m = 0, n = 0;
  std::vector<int> h;  // corner (x, y) -> h[x + m y], x in [0,m), y in [0,n)
  int hx = 0, hy = 0;

  // Height lifted to the universal cover.
  int at(int x, int y) const {
    int qx = x >= 0 ? x / m : -((-x + m - 1) / m);
    int qy = y >= 0 ? y / n : -((-y + n - 1) / n);
    return h[(x - qx * m) + m * (y - qy * n)] + qx * hx + qy * hy;
  }
};

inline TorusHeightField torus_height_function(const TorusGraph& t,
                                              const std::vector<int>& edge_ids) {
  std::vector<int> cover(t.num_vertices(), 0);
  // Crossed segments, keyed like TorusEdge: a vertex pair does not identify
  // an edge on 2-wide tori, the segment always does.
  std::vector<char> crossed_v(t.m * t.n, 0), crossed_h(t.m * t.n, 0);
  for (int ei : edge_ids) {
    const TorusEdge& e = t.edges[ei];
    ++cover[e.w];
    ++cover[e.b];
    (e.seg_vertical ? crossed_v : crossed_h)[e.seg_i + t.m * e.seg_j] = 1;
  }
  for (int c : cover)
    if (c != 1) throw std::invalid_argument("torus_height_function: not a perfect matching");

  // Step increment with periodic flanking cells; colors survive the wrap
  // because m and n are even.
  auto step = [&](int x, int y, int dx, int dy) {
    int la, lb;
    bool crossed;
    auto wrap = [&](int a, int mod) { return ((a % mod) + mod) % mod; };
    if (dx != 0) {
      // horizontal segment: cell column min(x, x+dx), corner row y
      int cx = wrap(std::min(x, x + dx), t.m), cy = wrap(y, t.n);
      crossed = crossed_h[cx + t.m * cy];
      la = dx == 1 ? x : x - 1;
      lb = dx == 1 ? y : y - 1;
    } else {
      // vertical segment: corner column x, cell row min(y, y+dy)
      int cx = wrap(x, t.m), cy = wrap(std::min(y, y + dy), t.n);
      crossed = crossed_v[cx + t.m * cy];
      la = dy == 1 ? x - 1 : x;
      lb = dy == 1 ? y : y - 1;
    }
    int sign = ((la + lb) % 2 + 2) % 2 == 0 ? 1 : -1;
    return crossed ? -3 * sign : sign;
  };

  TorusHeightField f;
  f.m = t.m;
  f.n = t.n;
  const int unset = std::numeric_limits<int>::min();
  f.h.assign(t.m * t.n, unset);
  f.h[0] = 0;
  std::vector<std::pair<int, int>> queue{{0, 0}};
  for (size_t qi = 0; qi < queue.size(); ++qi) {
    auto [x, y] = queue[qi];
    for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
      int x2 = x + dx, y2 = y + dy;
      if (x2 < 0 || x2 >= t.m || y2 < 0 || y2 >= t.n) continue;  // seams later
      int want = f.h[x + t.m * y] + step(x, y, dx, dy);
      int& cell = f.h[x2 + t.m * y2];
      if (cell == unset) {
        cell = want;
        queue.push_back({x2, y2});
      } else if (cell != want) {
        throw std::logic_error("torus_height_function: increments not closed");
      }
    }
  }

  bool have_x = false, have_y = false;
  for (int y = 0; y < t.n; ++y) {
    int p = f.h[(t.m - 1) + t.m * y] + step(t.m - 1, y, 1, 0) - f.h[0 + t.m * y];
    if (!have_x) {
      f.hx = p;
      have_x = true;
    } else if (p != f.hx) {
      throw std::logic_error("torus_height_function: horizontal period inconsistent");
    }
  }
  for (int x = 0; x < t.m; ++x) {
    int p = f.h[x + t.m * (t.n - 1)] + step(x, t.n - 1, 0, 1) - f.h[x + 0];
    if (!have_y) {
      f.hy = p;
      have_y = true;
    } else if (p != f.hy) {
      throw std::logic_error("torus_height_function: vertical period inconsistent");
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Lobachevsky function L(x) = -integral_0^x log(2 sin t) dt on [0, pi].
//
// Termwise integration of log(sin t / t) = -sum_k zeta(2k) (t/pi)^{2k} / k
// gives L(x) = x - x log(2x) + x sum_k zeta(2k) (x/pi)^{2k} / (k(2k+1)),
// geometric with ratio (x/pi)^2; the reflection L(pi-x) = -L(x) keeps the
// argument at or below pi/2 where 30 terms reach full precision.

namespace detail {
inline double zeta_even(int k) {  // zeta(2k), k >= 1
  static std::vector<double> cache;
  while (int(cache.size()) < k) {
    int kk = int(cache.size()) + 1;
    double s = 2 * kk;
    double z;
    if (kk == 1) z = std::numbers::pi * std::numbers::pi / 6;
    else if (kk == 2) z = std::pow(std::numbers::pi, 4) / 90;
    else if (kk == 3) z = std::pow(std::numbers::pi, 6) / 945;
    else {
      z = 0;
      for (int n = 64; n >= 1; --n) z += std::pow(double(n), -s);
    }
    cache.push_back(z);
  }
  return cache[k - 1];
}
}  // namespace detail

inline double lobachevsky(double x) {
  const double pi = std::numbers::pi;
  if (x < -1e-12 || x > pi + 1e-12)
    throw std::domain_error("lobachevsky: argument outside [0, pi]");
  x = std::clamp(x, 0.0, pi);
  double sign = 1;
  if (x > pi / 2) {
    x = pi - x;
    sign = -1;
  }
  if (x == 0) return 0;
  double sum = 0, r = x / pi, r2 = r * r, pw = 1;
  for (int k = 1; k <= 40; ++k) {
    pw *= r2;
    double term = detail::zeta_even(k) * pw / (k * (2 * k + 1));
    sum += term;
    if (term < 1e-17 * (1 + sum)) break;
  }
  return sign * x * (1 - std::log(2 * x) + sum);
}

// ---------------------------------------------------------------------------
// Slope probabilities and the entropy density.
//
// The four dimer-type probabilities at mean slope (s,t) solve
//   2(pa - pb) = s,  2(pd - pc) = t,  pa+pb+pc+pd = 1,
//   sin(pi pa) sin(pi pb) = sin(pi pc) sin(pi pd).
// Writing pa,pb = alpha +- s/4 and pd,pc = (1/2 - alpha) +- t/4 reduces the
// sine identity to cos(2 pi alpha) = (cos(pi s/2) - cos(pi t/2)) / 2, solved
// in closed form and polished by Newton steps on the full system.  Slopes
// are admissible exactly when |s| + |t| <= 2.

struct SlopeState {
  double s = 0, t = 0;
  double pa = 0, pb = 0, pc = 0, pd = 0;
  bool frozen = false;  // on the boundary of the admissible square
};

inline bool slope_admissible(double s, double t, double tol = 1e-12) {
  return std::abs(s) + std::abs(t) <= 2 + tol;
}

namespace detail {
// Closed-form solve; accurate to roundoff, no residual polish.
inline SlopeState slope_closed_form(double s, double t) {
  const double pi = std::numbers::pi;
  double rhs = std::clamp((std::cos(pi * s / 2) - std::cos(pi * t / 2)) / 2, -1.0, 1.0);
  double alpha = std::acos(rhs) / (2 * pi);
  SlopeState r;
  r.s = s;
  r.t = t;
  r.pa = alpha + s / 4;
  r.pb = alpha - s / 4;
  r.pd = (0.5 - alpha) + t / 4;
  r.pc = (0.5 - alpha) - t / 4;
  r.frozen = std::abs(s) + std::abs(t) >= 2 - 1e-9;
  double* ps[4] = {&r.pa, &r.pb, &r.pc, &r.pd};
  for (double* p : ps) *p = std::clamp(*p, 0.0, 1.0);
  return r;
}
}  // namespace detail

inline SlopeState slope_probabilities(double s, double t) {
  if (!slope_admissible(s, t))
    throw std::domain_error("slope_probabilities: frozen boundary, |s|+|t| > 2");
  const double pi = std::numbers::pi;
  SlopeState r = detail::slope_closed_form(s, t);
  if (!r.frozen) {
    // Newton on the full system scrubs the trigonometric roundoff.
    for (int it = 0; it < 8; ++it) {
      double f1 = 2 * (r.pa - r.pb) - s;
      double f2 = 2 * (r.pd - r.pc) - t;
      double f3 = r.pa + r.pb + r.pc + r.pd - 1;
      double f4 = std::sin(pi * r.pa) * std::sin(pi * r.pb) -
                  std::sin(pi * r.pc) * std::sin(pi * r.pd);
      double res = std::abs(f1) + std::abs(f2) + std::abs(f3) + std::abs(f4);
      if (res < 1e-14) break;
      double ga = pi * std::cos(pi * r.pa) * std::sin(pi * r.pb);
      double gb = pi * std::sin(pi * r.pa) * std::cos(pi * r.pb);
      double gc = -pi * std::cos(pi * r.pc) * std::sin(pi * r.pd);
      double gd = -pi * std::sin(pi * r.pc) * std::cos(pi * r.pd);
      // Solve J dp = -F for the 4x4 system by elimination on the explicit
      // rows (2,-2,0,0), (0,0,-2,2), (1,1,1,1), (ga,gb,gc,gd).
      // Parameterize dp by du = d(pa+pb)/2: dpa = du + 0, dpb = du, with the
      // two linear rows exact already after the closed form; only f3, f4
      // need correcting along the (1,1,-1,-1)/(slopes fixed) direction.
      double denom = ga + gb - gc - gd;
      if (std::abs(denom) < 1e-14) break;
      double da = -f4 / denom;  // move alpha, keep s and t rows exact
      r.pa += da;
      r.pb += da;
      r.pc -= da;
      r.pd -= da;
      (void)f1;
      (void)f2;
      (void)f3;
    }
  }
  return r;
}

inline double ent(double s, double t) {
  if (!slope_admissible(s, t))
    throw std::domain_error("ent: frozen boundary, |s|+|t| > 2");
  SlopeState ss = detail::slope_closed_form(s, t);
  const double pi = std::numbers::pi;
  return (lobachevsky(pi * ss.pa) + lobachevsky(pi * ss.pb) + lobachevsky(pi * ss.pc) +
          lobachevsky(pi * ss.pd)) /
         pi;
}

// Gradient of ent.  The alpha-direction derivative cancels through the sine
// identity, leaving quarter-log ratios; diverges at the frozen boundary.
// Within ~1e-8 of the corners (+-2,0), (0,+-2) double rounding collapses the
// probability ratios and the result degrades to 0; stay a margin inside.
inline std::array<double, 2> ent_gradient(double s, double t) {
  if (!slope_admissible(s, t))
    throw std::domain_error("ent_gradient: frozen boundary, |s|+|t| > 2");
  SlopeState ss = detail::slope_closed_form(s, t);
  const double pi = std::numbers::pi;
  auto sn = [&](double p) { return std::max(std::sin(pi * p), 1e-300); };
  return {0.25 * std::log(sn(ss.pb) / sn(ss.pa)), 0.25 * std::log(sn(ss.pc) / sn(ss.pd))};
}

// ent and logZ count per dimer; one dimer covers two sites, so per-site
// quantities (torus free energy, criterion comparisons) carry this factor.
inline constexpr double kPerSiteScale = 0.5;

// ---------------------------------------------------------------------------
// Free energy of staggered weights.
//
// The asymptotic free energy per fundamental pair of sites is
//   (1/(2 pi i)^2) oint oint log P(z,w) dz/z dw/w,
// where P is the spectral polynomial of the weighted Kasteleyn operator.
// The Kasteleyn phases put one sign flip into P: P = a + b z + c w - d z w
// (its absence would factor P at equal weights and zero out the integral).
// The z-integral is exact by Jensen's mean-value formula,
//   avg_theta log|A + B e^{i theta}| = log max(|A|, |B|),
// leaving one circle integral split at branch crossings and modulus zeros.

inline double logZ_quad(double a, double b, double c, double d,
                        bool* degenerate = nullptr) {
  if (!(a >= 0) || !(b >= 0) || !(c >= 0) || !(d >= 0) || a + b + c + d <= 0)
    throw std::invalid_argument("logZ_quad: weights must be nonnegative, not all zero");
  const double pi = std::numbers::pi;
  if (degenerate) *degenerate = false;
  auto f = [&](double phi) {
    std::complex<double> w = std::polar(1.0, phi);
    return std::log(std::max(std::abs(a + c * w), std::abs(b - d * w)));
  };
  std::vector<double> cuts{0, pi, 2 * pi};
  if (a * c + b * d > 0) {
    double cr = (b * b + d * d - a * a - c * c) / (2 * (a * c + b * d));
    if (std::abs(cr) <= 1) {
      double phis = std::acos(std::clamp(cr, -1.0, 1.0));
      cuts.push_back(phis);
      cuts.push_back(2 * pi - phis);
    }
  }
  if (degenerate &&
      (std::abs(a - c) <= 1e-12 * (a + c) || std::abs(b - d) <= 1e-12 * (b + d)))
    *degenerate = true;  // modulus zero on the contour, integrable log
  std::sort(cuts.begin(), cuts.end());
  QuadOptions opt;
  opt.abs_tol = 1e-10;
  double total = 0;
  for (size_t i = 0; i + 1 < cuts.size(); ++i)
    if (cuts[i + 1] > cuts[i] + 1e-15) total += adaptive_quad(f, cuts[i], cuts[i + 1], opt);
  return total / (2 * pi);
}

// ---------------------------------------------------------------------------
// Limit shapes: concave maximization of the integrated slope entropy over
// piecewise linear surfaces with a fixed boundary trace.

struct TriMesh {
  std::vector<std::array<double, 2>> pts;
  std::vector<std::array<int, 3>> tris;  // ccw
  std::vector<int> boundary;             // point ids with fixed values
};

// Structured triangulation of the diamond |x|+|y| <= 1, n points per unit.
inline TriMesh diamond_mesh(int n) {
  if (n < 2) throw std::invalid_argument("diamond_mesh: need n >= 2");
  TriMesh m;
  std::map<std::pair<int, int>, int> id;
  auto pt = [&](int i, int j) {
    auto key = std::make_pair(i, j);
    auto it = id.find(key);
    if (it != id.end()) return it->second;
    int v = int(m.pts.size());
    m.pts.push_back({double(i) / n, double(j) / n});
    if (std::abs(i) + std::abs(j) == n) m.boundary.push_back(v);
    id[key] = v;
    return v;
  };
  for (int i = -n; i < n; ++i)
    for (int j = -n; j < n; ++j) {
      // unit squares fully inside the diamond, split along alternating
      // diagonals to keep the mesh unbiased
      int corners[4][2] = {{i, j}, {i + 1, j}, {i + 1, j + 1}, {i, j + 1}};
      bool in = true;
      for (auto& c : corners) in = in && std::abs(c[0]) + std::abs(c[1]) <= n;
      if (!in) continue;
      int v00 = pt(i, j), v10 = pt(i + 1, j), v11 = pt(i + 1, j + 1), v01 = pt(i, j + 1);
      if ((i + j) % 2 == 0) {
        m.tris.push_back({v00, v10, v11});
        m.tris.push_back({v00, v11, v01});
      } else {
        m.tris.push_back({v00, v10, v01});
        m.tris.push_back({v10, v11, v01});
      }
    }
  // boundary squares leave stair gaps; stitch them with single triangles
  for (int i = -n; i < n; ++i)
    for (int j = -n; j < n; ++j) {
      int corners[4][2] = {{i, j}, {i + 1, j}, {i + 1, j + 1}, {i, j + 1}};
      int outside = 0, out_k = -1;
      for (int k = 0; k < 4; ++k)
        if (std::abs(corners[k][0]) + std::abs(corners[k][1]) > n) {
          ++outside;
          out_k = k;
        }
      if (outside != 1) continue;
      int a = (out_k + 1) % 4, bq = (out_k + 2) % 4, cq = (out_k + 3) % 4;
      m.tris.push_back({pt(corners[a][0], corners[a][1]), pt(corners[bq][0], corners[bq][1]),
                        pt(corners[cq][0], corners[cq][1])});
    }
  // enforce ccw orientation
  for (auto& t : m.tris) {
    auto &p0 = m.pts[t[0]], &p1 = m.pts[t[1]], &p2 = m.pts[t[2]];
    double cr = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]);
    if (cr < 0) std::swap(t[1], t[2]);
  }
  return m;
}

// Structured triangulation of the square [-1,1]^2.
inline TriMesh square_mesh(int n) {
  if (n < 2) throw std::invalid_argument("square_mesh: need n >= 2");
  TriMesh m;
  auto pt = [&](int i, int j) { return (i + n) * (2 * n + 1) + (j + n); };
  for (int i = -n; i <= n; ++i)
    for (int j = -n; j <= n; ++j) {
      m.pts.push_back({double(i) / n, double(j) / n});
      if (std::abs(i) == n || std::abs(j) == n) m.boundary.push_back(pt(i, j));
    }
  for (int i = -n; i < n; ++i)
    for (int j = -n; j < n; ++j) {
      int v00 = pt(i, j), v10 = pt(i + 1, j), v11 = pt(i + 1, j + 1), v01 = pt(i, j + 1);
      if ((i + j) % 2 == 0) {
        m.tris.push_back({v00, v10, v11});
        m.tris.push_back({v00, v11, v01});
      } else {
        m.tris.push_back({v00, v10, v01});
        m.tris.push_back({v10, v11, v01});
      }
    }
  return m;
}

struct ContinuumSurface {
  TriMesh mesh;
  std::vector<double> f;
  double objective = 0;
  int sweeps = 0;
  std::vector<double> slope_l1;  // |s|+|t| per triangle
};

struct SurfaceOptions {
  int max_sweeps = 2000;
  double gain_tol = 1e-9;
  const ContinuumSurface* warm = nullptr;  // interpolated initial surface
};

namespace detail {

struct TriGeom {
  double area;
  double ax[3], ay[3];  // d(s)/df_i and d(t)/df_i
};

inline std::vector<TriGeom> tri_geometry(const TriMesh& m) {
  std::vector<TriGeom> g(m.tris.size());
  for (size_t t = 0; t < m.tris.size(); ++t) {
    auto [i0, i1, i2] = m.tris[t];
    double x1 = m.pts[i1][0] - m.pts[i0][0], y1 = m.pts[i1][1] - m.pts[i0][1];
    double x2 = m.pts[i2][0] - m.pts[i0][0], y2 = m.pts[i2][1] - m.pts[i0][1];
    double det = x1 * y2 - x2 * y1;
    if (det <= 0) throw std::invalid_argument("maximize_surface: degenerate triangle");
    g[t].area = det / 2;
    // gradient of linear interpolant: inverse transpose of the edge matrix
    g[t].ax[1] = y2 / det;
    g[t].ax[2] = -y1 / det;
    g[t].ax[0] = -g[t].ax[1] - g[t].ax[2];
    g[t].ay[1] = -x2 / det;
    g[t].ay[2] = x1 / det;
    g[t].ay[0] = -g[t].ay[1] - g[t].ay[2];
  }
  return g;
}

// Extremal Lipschitz extensions of the boundary data; their midpoint is the
// feasible starting surface.
inline std::vector<double> midpoint_extension(const TriMesh& m,
                                              const std::vector<double>& bval) {
  std::vector<double> f(m.pts.size());
  for (size_t v = 0; v < m.pts.size(); ++v) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < m.boundary.size(); ++k) {
      auto& b = m.pts[m.boundary[k]];
      double rho = 2 * std::max(std::abs(m.pts[v][0] - b[0]), std::abs(m.pts[v][1] - b[1]));
      lo = std::max(lo, bval[k] - rho);
      hi = std::min(hi, bval[k] + rho);
    }
    f[v] = (lo + hi) / 2;
  }
  return f;
}

}  // namespace detail

inline ContinuumSurface maximize_surface(const TriMesh& mesh,
                                         const std::vector<double>& boundary_values,
                                         SurfaceOptions opt = {}) {
  if (boundary_values.size() != mesh.boundary.size())
    throw std::invalid_argument("maximize_surface: boundary value count mismatch");
  for (size_t i = 0; i < mesh.boundary.size(); ++i)
    for (size_t j = i + 1; j < mesh.boundary.size(); ++j) {
      auto &p = mesh.pts[mesh.boundary[i]], &q = mesh.pts[mesh.boundary[j]];
      double rho = 2 * std::max(std::abs(p[0] - q[0]), std::abs(p[1] - q[1]));
      if (std::abs(boundary_values[i] - boundary_values[j]) > rho + 1e-9)
        throw std::invalid_argument(
            "maximize_surface: boundary trace admits no admissible extension");
    }

  auto geom = detail::tri_geometry(mesh);
  int nv = int(mesh.pts.size());
  std::vector<char> fixed(nv, 0);
  for (int b : mesh.boundary) fixed[b] = 1;

  std::vector<double> f = detail::midpoint_extension(mesh, boundary_values);
  for (size_t k = 0; k < mesh.boundary.size(); ++k) f[mesh.boundary[k]] = boundary_values[k];

  if (opt.warm) {
    // barycentric interpolation of the warm surface, kept only if feasible
    std::vector<double> w(nv);
    bool ok = true;
    for (int v = 0; v < nv && ok; ++v) {
      if (fixed[v]) {
        w[v] = f[v];
        continue;
      }
      double x = mesh.pts[v][0], y = mesh.pts[v][1];
      bool found = false;
      const TriMesh& cm = opt.warm->mesh;
      for (size_t t = 0; t < cm.tris.size() && !found; ++t) {
        auto [i0, i1, i2] = cm.tris[t];
        double x0 = cm.pts[i0][0], y0 = cm.pts[i0][1];
        double d = (cm.pts[i1][0] - x0) * (cm.pts[i2][1] - y0) -
                   (cm.pts[i2][0] - x0) * (cm.pts[i1][1] - y0);
        double l1 = ((x - x0) * (cm.pts[i2][1] - y0) - (y - y0) * (cm.pts[i2][0] - x0)) / d;
        double l2 = ((y - y0) * (cm.pts[i1][0] - x0) - (x - x0) * (cm.pts[i1][1] - y0)) / d;
        if (l1 < -1e-9 || l2 < -1e-9 || l1 + l2 > 1 + 1e-9) continue;
        w[v] = opt.warm->f[i0] * (1 - l1 - l2) + opt.warm->f[i1] * l1 + opt.warm->f[i2] * l2;
        found = true;
      }
      ok = found;
    }
    if (ok) {
      // blend toward the midpoint extension until every slope is admissible
      for (double lam = 0; lam <= 1.0001; lam += 0.25) {
        std::vector<double> cand(nv);
        for (int v = 0; v < nv; ++v) cand[v] = (1 - lam) * w[v] + lam * f[v];
        bool feas = true;
        for (size_t t = 0; t < mesh.tris.size() && feas; ++t) {
          auto [i0, i1, i2] = mesh.tris[t];
          double s = geom[t].ax[0] * cand[i0] + geom[t].ax[1] * cand[i1] + geom[t].ax[2] * cand[i2];
          double tt = geom[t].ay[0] * cand[i0] + geom[t].ay[1] * cand[i1] + geom[t].ay[2] * cand[i2];
          feas = std::abs(s) + std::abs(tt) <= 2 + 1e-12;
        }
        if (feas) {
          f = cand;
          break;
        }
      }
    }
  }

  auto slopes = [&](const std::vector<double>& ff, size_t t) {
    auto [i0, i1, i2] = mesh.tris[t];
    double s = geom[t].ax[0] * ff[i0] + geom[t].ax[1] * ff[i1] + geom[t].ax[2] * ff[i2];
    double tt = geom[t].ay[0] * ff[i0] + geom[t].ay[1] * ff[i1] + geom[t].ay[2] * ff[i2];
    return std::pair<double, double>(s, tt);
  };
  auto objective = [&](const std::vector<double>& ff, bool* feasible) {
    double total = 0;
    *feasible = true;
    for (size_t t = 0; t < mesh.tris.size(); ++t) {
      auto [s, tt] = slopes(ff, t);
      if (!slope_admissible(s, tt)) {
        *feasible = false;
        return -std::numeric_limits<double>::infinity();
      }
      total += geom[t].area * ent(s, tt);
    }
    return total;
  };

  bool feasible = false;
  double obj = objective(f, &feasible);
  if (!feasible) throw std::logic_error("maximize_surface: infeasible start");

  std::vector<std::vector<std::pair<int, int>>> star(nv);  // (triangle, local corner)
  for (size_t t = 0; t < mesh.tris.size(); ++t)
    for (int k = 0; k < 3; ++k) star[mesh.tris[t][k]].push_back({int(t), k});

  // Coordinate ascent: each free vertex moves to the exact maximizer of the
  // objective restricted to its own value, inside the interval allowed by
  // its star's slope constraints.  Rigid vertices (zero-width interval, the
  // frozen facets of the limit shape) simply never move; the restricted
  // derivative is strictly decreasing, with log blowup at interval ends
  // where a star triangle freezes, so bisection on the sign is exact.
  // Differentiating closer than ~1e-8 to the frozen boundary is unreliable:
  // near the corners of the admissible square the deviation of the
  // probability system from its degenerate solution is encoded quadratically
  // and underflows double rounding, collapsing the gradient to 0.  Slopes
  // are pulled to this margin before differentiating; the ascent root is
  // strictly interior, so the pull shifts nothing that matters.
  constexpr double kGradMargin = 1e-6;
  auto restricted_deriv = [&](int v, double delta) {
    double d = 0;
    for (auto [t, k] : star[v]) {
      auto [s, tt] = slopes(f, t);
      s += geom[t].ax[k] * delta;
      tt += geom[t].ay[k] * delta;
      double l1 = std::abs(s) + std::abs(tt);
      if (l1 >= 2 - kGradMargin) {
        double sc = (2 - kGradMargin) / std::max(l1, 1e-300);
        s *= sc;
        tt *= sc;
      }
      auto g = ent_gradient(s, tt);
      d += geom[t].area * (g[0] * geom[t].ax[k] + g[1] * geom[t].ay[k]);
    }
    return d;
  };

  // Move one vertex to the 1D maximizer, return the displacement.
  auto relax_vertex = [&](int v) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (auto [t, k] : star[v]) {
      auto [s0, t0] = slopes(f, t);
      for (int sgs = -1; sgs <= 1; sgs += 2)
        for (int sgt = -1; sgt <= 1; sgt += 2) {
          double A = sgs * geom[t].ax[k] + sgt * geom[t].ay[k];
          double B = 2 - sgs * s0 - sgt * t0;
          if (A > 1e-15) hi = std::min(hi, B / A);
          else if (A < -1e-15) lo = std::max(lo, B / A);
        }
    }
    lo = std::min(lo, 0.0);  // roundoff drift never shrinks past the current point
    hi = std::max(hi, 0.0);
    double width = hi - lo;
    if (width < 1e-14) return 0.0;
    double eps = 1e-12 * (width + 1);
    double a = lo + eps, b = hi - eps;
    if (a >= b) return 0.0;
    double move;
    if (restricted_deriv(v, a) <= 0) move = a;
    else if (restricted_deriv(v, b) >= 0) move = b;
    else {
      // ~1e-8 relative root localization; the objective is locally quadratic
      // around the root, so the residual loss is far below gain_tol
      for (int it = 0; it < 27 && b - a > 1e-8 * width; ++it) {
        double mid = (a + b) / 2;
        (restricted_deriv(v, mid) > 0 ? a : b) = mid;
      }
      move = (a + b) / 2;
    }
    f[v] += move;
    return move;
  };

  // Active-set relaxation: a vertex re-enters the worklist when a star
  // neighbor moves, so quiescent regions cost nothing.
  std::vector<std::vector<int>> vert_nbrs(nv);
  for (auto& tri : mesh.tris)
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 3; ++j)
        if (j != k && !fixed[tri[j]]) vert_nbrs[tri[k]].push_back(tri[j]);
  for (auto& nb : vert_nbrs) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  std::vector<char> active(nv, 0);
  for (int v = 0; v < nv; ++v) active[v] = !fixed[v];
  int sweep = 0;
  for (; sweep < opt.max_sweeps; ++sweep) {
    std::vector<char> next(nv, 0);
    bool any = false;
    for (int v = 0; v < nv; ++v) {
      if (!active[v]) continue;
      double moved = relax_vertex(v);
      if (std::abs(moved) > 1e-12) {
        any = true;
        next[v] = 1;
        for (int u : vert_nbrs[v]) next[u] = 1;
      }
    }
    double prev = obj;
    obj = objective(f, &feasible);
    if (!feasible) throw std::logic_error("maximize_surface: sweep left the admissible set");
    active.swap(next);
    if (!any || obj - prev < opt.gain_tol) {
      ++sweep;
      break;
    }
  }

  ContinuumSurface out;
  out.mesh = mesh;
  out.f = std::move(f);
  out.objective = obj;
  out.sweeps = sweep;
  out.slope_l1.resize(mesh.tris.size());
  for (size_t t = 0; t < mesh.tris.size(); ++t) {
    auto [s, tt] = slopes(out.f, t);
    out.slope_l1[t] = std::abs(s) + std::abs(tt);
  }
  return out;
}

// Boundary trace of the diamond limit shape and its nested-mesh solver.
// Sign convention matches sampled heights: east and west corners high.
inline double aztec_boundary_trace(double x, double y) { return std::abs(x) - std::abs(y); }

inline ContinuumSurface limit_shape_aztec(int n) {
  std::vector<int> sizes;
  for (int k = std::max(8, n / 8); k < n; k *= 2) sizes.push_back(k);
  sizes.push_back(n);
  ContinuumSurface cur;
  bool have = false;
  for (int k : sizes) {
    TriMesh mesh = diamond_mesh(k);
    std::vector<double> bv(mesh.boundary.size());
    for (size_t i = 0; i < bv.size(); ++i)
      bv[i] = aztec_boundary_trace(mesh.pts[mesh.boundary[i]][0], mesh.pts[mesh.boundary[i]][1]);
    SurfaceOptions opt;
    opt.warm = have ? &cur : nullptr;
    cur = maximize_surface(mesh, bv, opt);
    have = true;
  }
  return cur;
}

// ---------------------------------------------------------------------------
// Gaussian limit of height fluctuations in the upper half plane.

inline double halfplane_height_covariance(cplx p, cplx q) {
  if (!(p.imag() > 0) || !(q.imag() > 0))
    throw std::invalid_argument("halfplane_height_covariance: points must have Im > 0");
  if (p == q) return std::numeric_limits<double>::infinity();
  const double pi = std::numbers::pi;
  return 8 / (pi * pi) * std::log(std::abs((std::conj(p) - q) / (p - q)));
}

// ---------------------------------------------------------------------------
// Uniform matchings of superposition meshes through the tree bijection:
// a loop-erased-walk spanning tree oriented to the removed corner pairs each
// corner cell with its parent edge cell, and the complementary dual tree
// oriented to the outer face pairs each center cell with its parent's edge
// cell.

class TemperleySampler {
 public:
  explicit TemperleySampler(Region coarse, std::optional<Cell> removed = std::nullopt)
      : region_(temperley_region(std::move(coarse), removed)),
        mesh_(region_graph(region_.fine)) {
    const Region& fine = region_.fine;
    auto corner_id = [&](Cell c) {
      auto it = corner_ids_.find(c);
      if (it != corner_ids_.end()) return it->second;
      int v = int(corners_.size());
      corners_.push_back(c);
      corner_ids_[c] = v;
      return v;
    };
    root_ = corner_id(region_.removed);
    for (int i = 0; i < int(fine.cells.size()); ++i) {
      auto [a, b] = fine.cells[i];
      if (((a % 2) + 2) % 2 == 0 && ((b % 2) + 2) % 2 == 0) corner_id({a, b});
    }
    adj_.resize(corners_.size());
    adj_mid_.resize(corners_.size());
    for (int ci = 0; ci < int(corners_.size()); ++ci) {
      auto [a, b] = corners_[ci];
      for (auto [da, db] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
        int mid = fine.index_of(a + da, b + db);
        if (mid < 0) continue;
        auto other = corner_ids_.find(Cell{a + 2 * da, b + 2 * db});
        if (other == corner_ids_.end()) continue;
        adj_[ci].push_back(other->second);
        adj_mid_[ci].push_back(mid);
      }
    }
    // centers and the faces flanking each edge cell
    int nf = 0;
    center_of_.assign(fine.cells.size(), -1);
    for (int i = 0; i < int(fine.cells.size()); ++i) {
      auto [a, b] = fine.cells[i];
      if (((a % 2) + 2) % 2 == 1 && ((b % 2) + 2) % 2 == 1) center_of_[i] = nf++;
    }
    ncenters_ = nf;
    for (int i = 0; i < int(fine.cells.size()); ++i) {
      auto [a, b] = fine.cells[i];
      bool horiz = ((a % 2) + 2) % 2 == 1;
      if (horiz == (((b % 2) + 2) % 2 == 1)) continue;  // not an edge cell
      int f1, f2;
      if (horiz) {
        f1 = fine.index_of(a, b - 1);
        f2 = fine.index_of(a, b + 1);
      } else {
        f1 = fine.index_of(a - 1, b);
        f2 = fine.index_of(a + 1, b);
      }
      mid_faces_[i] = {f1 >= 0 ? center_of_[f1] : ncenters_,
                       f2 >= 0 ? center_of_[f2] : ncenters_};
    }
    for (int e = 0; e < mesh_.num_edges(); ++e)
      edge_ids_[{mesh_.edges[e].u, mesh_.edges[e].v}] = e;
  }

  const TemperleyRegion& region() const { return region_; }
  const PlanarGraph& mesh() const { return mesh_; }

  Matching sample(Rng& rng) const {
    int nc = int(corners_.size());
    std::vector<int> parent_mid(nc, -1), parent(nc, -1);
    std::vector<char> intree(nc, 0);
    intree[root_] = 1;
    for (int v0 = 0; v0 < nc; ++v0) {
      int u = v0;
      while (!intree[u]) {
        int k = int(rng.below(adj_[u].size()));
        parent[u] = adj_[u][k];
        parent_mid[u] = adj_mid_[u][k];
        u = parent[u];
      }
      u = v0;
      while (!intree[u]) {
        intree[u] = 1;
        u = parent[u];
      }
    }

    std::vector<int> ids;
    ids.reserve(mesh_.num_vertices() / 2);
    std::vector<char> mid_used(region_.fine.cells.size(), 0);
    for (int v = 0; v < nc; ++v) {
      if (v == root_) continue;
      mid_used[parent_mid[v]] = 1;
      auto [a, b] = corners_[v];
      int cv = region_.fine.index_of(a, b);
      ids.push_back(edge_of(parent_mid[v], cv));
    }

    // complementary dual tree over centers plus the outer face
    std::vector<std::vector<std::pair<int, int>>> dadj(ncenters_ + 1);
    for (const auto& [mid, fs] : mid_faces_) {
      if (mid_used[mid]) continue;
      dadj[fs.first].push_back({fs.second, mid});
      dadj[fs.second].push_back({fs.first, mid});
    }
    std::vector<int> dparent_mid(ncenters_, -1);
    std::vector<char> seen(ncenters_ + 1, 0);
    std::vector<int> queue{ncenters_};
    seen[ncenters_] = 1;
    for (size_t qi = 0; qi < queue.size(); ++qi)
      for (auto [to, mid] : dadj[queue[qi]]) {
        if (seen[to]) continue;
        seen[to] = 1;
        dparent_mid[to] = mid;
        queue.push_back(to);
      }
    for (int i = 0; i < int(region_.fine.cells.size()); ++i) {
      int f = center_of_[i];
      if (f < 0) continue;
      if (dparent_mid[f] < 0)
        throw std::logic_error("TemperleySampler: dual complement not spanning");
      ids.push_back(edge_of(dparent_mid[f], i));
    }
    return make_matching(mesh_, ids);
  }

 private:
  int edge_of(int white_cell, int black_cell) const {
    auto it = edge_ids_.find({white_cell, black_cell});
    if (it == edge_ids_.end())
      throw std::logic_error("TemperleySampler: tree step is not a mesh edge");
    return it->second;
  }

  TemperleyRegion region_;
  PlanarGraph mesh_;
  std::vector<Cell> corners_;
  std::map<Cell, int> corner_ids_;
  int root_ = -1;
  int ncenters_ = 0;
  std::vector<std::vector<int>> adj_, adj_mid_;
  std::vector<int> center_of_;
  std::map<int, std::pair<int, int>> mid_faces_;
  std::map<std::pair<int, int>, int> edge_ids_;
};

}  // namespace dimerlab
