#pragma once

// Grid regions and the lattice graph builders.
//
// A Region is a finite set of unit cells (a, b) of Z^2; the dimer graph of a
// region has one vertex per cell at center (2a+1, 2b+1) in doubled
// coordinates and an edge between 4-adjacent cells.  Cell (a, b) is black
// when a + b is even.  Corners of cells live at doubled coordinates
// (2i, 2j), so vertex/corner parity never collides.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "dimerlab/graph.hpp"

namespace dimerlab {

using Cell = std::array<int, 2>;

struct Region {
  std::vector<Cell> cells;  // sorted lexicographically, no duplicates

  void normalize() {
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  }
  bool contains(int a, int b) const {
    return std::binary_search(cells.begin(), cells.end(), Cell{a, b});
  }
  int index_of(int a, int b) const {
    auto it = std::lower_bound(cells.begin(), cells.end(), Cell{a, b});
    if (it == cells.end() || (*it)[0] != a || (*it)[1] != b) return -1;
    return int(it - cells.begin());
  }
  static bool cell_black(int a, int b) { return ((a + b) % 2 + 2) % 2 == 0; }
};

// Connected through cell edges, and the complement (within a one-cell margin
// around the bounding box, plus the outside) is connected too, i.e. no holes.
inline bool region_simply_connected(const Region& r, std::string* why = nullptr) {
  if (r.cells.empty()) {
    if (why) *why = "empty region";
    return false;
  }
  auto fail = [&](const char* msg) {
    if (why) *why = msg;
    return false;
  };
  // Connectivity of the cells.
  std::set<Cell> cs(r.cells.begin(), r.cells.end());
  std::queue<Cell> q;
  std::set<Cell> seen;
  q.push(r.cells[0]);
  seen.insert(r.cells[0]);
  const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
  while (!q.empty()) {
    Cell c = q.front();
    q.pop();
    for (int k = 0; k < 4; ++k) {
      Cell nb{c[0] + dx[k], c[1] + dy[k]};
      if (cs.count(nb) && !seen.count(nb)) {
        seen.insert(nb);
        q.push(nb);
      }
    }
  }
  if (seen.size() != cs.size()) return fail("region not connected");
  // Flood the complement from the margin; a hole is complement not reached.
  int amin = r.cells[0][0], amax = amin, bmin = r.cells[0][1], bmax = bmin;
  for (const Cell& c : r.cells) {
    amin = std::min(amin, c[0]); amax = std::max(amax, c[0]);
    bmin = std::min(bmin, c[1]); bmax = std::max(bmax, c[1]);
  }
  --amin; ++amax; --bmin; ++bmax;
  std::set<Cell> outside;
  std::queue<Cell> oq;
  oq.push({amin, bmin});
  outside.insert({amin, bmin});
  while (!oq.empty()) {
    Cell c = oq.front();
    oq.pop();
    for (int k = 0; k < 4; ++k) {
      Cell nb{c[0] + dx[k], c[1] + dy[k]};
      if (nb[0] < amin || nb[0] > amax || nb[1] < bmin || nb[1] > bmax) continue;
      if (cs.count(nb) || outside.count(nb)) continue;
      outside.insert(nb);
      oq.push(nb);
    }
  }
  size_t box = size_t(amax - amin + 1) * size_t(bmax - bmin + 1);
  if (outside.size() + cs.size() != box) return fail("region has a hole");
  return true;
}

// Dimer graph of a region: vertex per cell, edge per adjacent cell pair,
// unit weights.  Vertex order is lexicographic in the cell coordinates.
inline PlanarGraph region_graph(const Region& r0) {
  Region r = r0;
  r.normalize();
  std::string why;
  if (!region_simply_connected(r, &why))
    throw std::invalid_argument("region_graph: " + why);
  PlanarGraph g;
  g.on_lattice = true;
  int n = int(r.cells.size());
  g.vertices.resize(n);
  g.lattice.resize(n);
  for (int i = 0; i < n; ++i) {
    auto [a, b] = r.cells[i];
    g.vertices[i].x = 2 * a + 1;
    g.vertices[i].y = 2 * b + 1;
    g.vertices[i].color = Region::cell_black(a, b) ? Color::kBlack : Color::kWhite;
    g.lattice[i] = {int64_t(2 * a + 1), int64_t(2 * b + 1)};
  }
  for (int i = 0; i < n; ++i) {
    auto [a, b] = r.cells[i];
    // Edges toward +a and +b once each.
    for (auto [da, db] : {std::pair{1, 0}, std::pair{0, 1}}) {
      int j = r.index_of(a + da, b + db);
      if (j < 0) continue;
      GraphEdge e;
      if (g.vertices[i].color == Color::kWhite) { e.u = i; e.v = j; }
      else { e.u = j; e.v = i; }
      g.edges.push_back(e);
    }
  }
  g.build_rotation_from_positions();
  g.trace_faces();
  validate_bipartite(g);
  return g;
}

inline Region rect_region(int m, int n) {
  if (m < 1 || n < 1) throw std::invalid_argument("rect_region: need m, n >= 1");
  Region r;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < n; ++b) r.cells.push_back({a, b});
  r.normalize();
  return r;
}

// m rows by n columns of unit cells; rows extend in y, columns in x.
inline PlanarGraph build_rectangle(int m, int n) {
  return region_graph(rect_region(n, m));
}

// Order-n Aztec diamond: cells whose centers (2a+1, 2b+1) satisfy
// |2a+1| + |2b+1| <= 2n.
inline Region aztec_region(int n) {
  if (n < 1) throw std::invalid_argument("aztec_region: need n >= 1");
  Region r;
  for (int a = -n; a < n; ++a)
    for (int b = -n; b < n; ++b)
      if (std::abs(2 * a + 1) + std::abs(2 * b + 1) <= 2 * n) r.cells.push_back({a, b});
  r.normalize();
  return r;
}

inline PlanarGraph build_aztec(int n) { return region_graph(aztec_region(n)); }

// ---------------------------------------------------------------------------
// Torus graphs.
//
// Vertices (x, y) in Z/m x Z/n with m, n even so both colors balance; cell
// (x, y) is black when x + y is even.  Every white vertex carries four edge
// slots E, W, N, S with their own weights a, b, c, d.  When m = 2 (or n = 2)
// the E and W slots reach the same black vertex through different lattice
// segments, so the slots stay distinct parallel edges.

enum class TorusSlot : int8_t { kE = 0, kW = 1, kN = 2, kS = 3 };

struct TorusEdge {
  int w = -1, b = -1;
  TorusSlot slot = TorusSlot::kE;
  bool wraps = false;   // crosses the seam of its axis
  // Lattice segment the dimer crosses: vertical segments keyed by the corner
  // column i and cell row y, horizontal by cell column x and corner row j.
  bool seg_vertical = true;
  int seg_i = 0, seg_j = 0;
};

struct TorusGraph {
  int m = 0, n = 0;
  std::array<double, 4> weight{1, 1, 1, 1};   // a, b, c, d for E, W, N, S
  std::array<BigRat, 4> rweight{BigRat(1), BigRat(1), BigRat(1), BigRat(1)};
  std::vector<TorusEdge> edges;

  int vid(int x, int y) const {
    x = ((x % m) + m) % m;
    y = ((y % n) + n) % n;
    return x + m * y;
  }
  bool is_black(int v) const {
    int x = v % m, y = v / m;
    return (x + y) % 2 == 0;
  }
  int num_vertices() const { return m * n; }
};

inline TorusGraph build_torus(int m, int n, std::array<BigRat, 4> w = {BigRat(1), BigRat(1), BigRat(1), BigRat(1)}) {
  if (m < 2 || n < 2 || m % 2 || n % 2)
    throw std::invalid_argument("build_torus: need even m, n >= 2");
  TorusGraph t;
  t.m = m;
  t.n = n;
  t.rweight = w;
  for (int k = 0; k < 4; ++k) t.weight[k] = to_double(w[k]);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < m; ++x) {
      if ((x + y) % 2 == 0) continue;  // whites only
      int wv = t.vid(x, y);
      auto add = [&](TorusSlot s, int bx, int by, bool wraps, bool segv, int si, int sj) {
        TorusEdge e;
        e.w = wv;
        e.b = t.vid(bx, by);
        e.slot = s;
        e.wraps = wraps;
        e.seg_vertical = segv;
        e.seg_i = ((si % m) + m) % m;
        e.seg_j = ((sj % n) + n) % n;
        t.edges.push_back(e);
      };
      add(TorusSlot::kE, x + 1, y, x == m - 1, true, x + 1, y);
      add(TorusSlot::kW, x - 1, y, x == 0, true, x, y);
      add(TorusSlot::kN, x, y + 1, y == n - 1, false, x, y + 1);
      add(TorusSlot::kS, x, y - 1, y == 0, false, x, y);
    }
  return t;
}

inline EdgeListGraph torus_edge_list(const TorusGraph& t) {
  EdgeListGraph el;
  el.n = t.num_vertices();
  for (const TorusEdge& e : t.edges) {
    el.edges.emplace_back(e.w, e.b);
    el.weights.push_back(t.rweight[int(e.slot)]);
  }
  return el;
}

// ---------------------------------------------------------------------------
// Temperley regions.
//
// For the (m+1) x (n+1) grid graph G drawn on even lattice points (2u, 2v),
// the superposition of G with its dual has black cells at G-vertices and
// G-faces and white cells at G-edge midpoints.  Removing one boundary
// G-vertex cell leaves a region whose perfect matchings biject with the
// spanning trees of G.

struct TemperleyInfo {
  int gm = 0, gn = 0;                       // grid graph is (gm+1) x (gn+1) vertices
  std::vector<std::array<int, 2>> gverts;   // coarse coordinates (u, v)
  std::vector<std::array<int, 2>> gedges;   // pairs of gvert indices
  std::vector<std::array<int, 2>> gfaces;   // coarse cell (a, b) per internal face
  int removed_gvert = 0;
  Region region;                            // fine cells, removed vertex cell absent
  // Fine cell of each coarse object, as region_graph vertex ids (-1 removed).
  std::vector<int> vertex_cell, edge_cell, face_cell;
};

// Superposition region of an arbitrary simply connected set of coarse cells:
// a black fine cell for every cell corner and every cell center, a white one
// for every cell side, minus one boundary corner (the root of the tree
// bijection).  The rectangle builder below keeps its own index bookkeeping;
// this form serves irregular domains (discs, half-discs).
struct TemperleyRegion {
  Region coarse;
  Region fine;
  Cell removed;  // fine coordinates of the removed corner cell
};

inline TemperleyRegion temperley_region(Region coarse,
                                        std::optional<Cell> removed_corner = std::nullopt) {
  coarse.normalize();
  std::string why;
  if (!region_simply_connected(coarse, &why))
    throw std::invalid_argument("temperley_region: " + why);
  Region fine;
  for (const Cell& c : coarse.cells) {
    auto [a, b] = c;
    for (int du = 0; du <= 1; ++du)
      for (int dv = 0; dv <= 1; ++dv) fine.cells.push_back({2 * (a + du), 2 * (b + dv)});
    fine.cells.push_back({2 * a + 1, 2 * b});
    fine.cells.push_back({2 * a + 1, 2 * b + 2});
    fine.cells.push_back({2 * a, 2 * b + 1});
    fine.cells.push_back({2 * a + 2, 2 * b + 1});
    fine.cells.push_back({2 * a + 1, 2 * b + 1});
  }
  fine.normalize();
  Cell rm;
  if (removed_corner) {
    rm = {2 * (*removed_corner)[0], 2 * (*removed_corner)[1]};
    if (fine.index_of(rm[0], rm[1]) < 0)
      throw std::invalid_argument("temperley_region: removed corner not in the region");
  } else {
    rm = fine.cells.front();  // lex-min fine cell is an extreme corner
  }
  TemperleyRegion out;
  out.coarse = std::move(coarse);
  out.removed = rm;
  fine.cells.erase(fine.cells.begin() + fine.index_of(rm[0], rm[1]));
  out.fine = std::move(fine);
  // An interior removal punches a hole; region_graph would reject it later,
  // but the misuse is cheap to name here.
  if (!region_simply_connected(out.fine, &why))
    throw std::invalid_argument("temperley_region: removed corner must lie on the boundary");
  return out;
}

// Coarse cells covering a disc: every corner of a kept cell is within the
// given corner radius of the origin.
inline Region disc_region(int r) {
  if (r < 2) throw std::invalid_argument("disc_region: need r >= 2");
  Region out;
  for (int a = -r; a < r; ++a)
    for (int b = -r; b < r; ++b) {
      bool ok = true;
      for (int du = 0; du <= 1 && ok; ++du)
        for (int dv = 0; dv <= 1; ++dv)
          if ((a + du) * (a + du) + (b + dv) * (b + dv) > r * r) {
            ok = false;
            break;
          }
      if (ok) out.cells.push_back({a, b});
    }
  out.normalize();
  return out;
}

// Upper half of disc_region: kept cells lie in b >= 0, diameter along y = 0.
inline Region halfdisc_region(int r) {
  if (r < 2) throw std::invalid_argument("halfdisc_region: need r >= 2");
  Region out;
  for (int a = -r; a < r; ++a)
    for (int b = 0; b < r; ++b) {
      bool ok = true;
      for (int du = 0; du <= 1 && ok; ++du)
        for (int dv = 0; dv <= 1; ++dv)
          if ((a + du) * (a + du) + (b + dv) * (b + dv) > r * r) {
            ok = false;
            break;
          }
      if (ok) out.cells.push_back({a, b});
    }
  out.normalize();
  return out;
}

inline TemperleyInfo build_temperley(int m, int n, int removed_gvert = 0) {
  if (m < 1 || n < 1) throw std::invalid_argument("build_temperley: need m, n >= 1");
  TemperleyInfo info;
  info.gm = m;
  info.gn = n;
  auto gv_index = [&](int u, int v) { return u + (m + 1) * v; };
  for (int v = 0; v <= n; ++v)
    for (int u = 0; u <= m; ++u) info.gverts.push_back({u, v});
  for (int v = 0; v <= n; ++v)
    for (int u = 0; u <= m; ++u) {
      if (u < m) info.gedges.push_back({gv_index(u, v), gv_index(u + 1, v)});
      if (v < n) info.gedges.push_back({gv_index(u, v), gv_index(u, v + 1)});
    }
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < m; ++a) info.gfaces.push_back({a, b});

  int rg = removed_gvert;
  if (rg < 0 || rg >= int(info.gverts.size()))
    throw std::invalid_argument("build_temperley: removed vertex out of range");
  auto [ru, rv] = info.gverts[rg];
  if (ru != 0 && ru != m && rv != 0 && rv != n)
    throw std::invalid_argument("build_temperley: removed vertex must lie on the boundary");
  info.removed_gvert = rg;

  Region r;
  for (int i = 0; i < int(info.gverts.size()); ++i) {
    if (i == rg) continue;
    auto [u, v] = info.gverts[i];
    r.cells.push_back({2 * u, 2 * v});
  }
  for (auto [i, j] : info.gedges) {
    auto [u1, v1] = info.gverts[i];
    auto [u2, v2] = info.gverts[j];
    r.cells.push_back({u1 + u2, v1 + v2});
  }
  for (auto [a, b] : info.gfaces) r.cells.push_back({2 * a + 1, 2 * b + 1});
  r.normalize();
  info.region = r;

  auto cell_id = [&](int a, int b) { return r.index_of(a, b); };
  for (int i = 0; i < int(info.gverts.size()); ++i) {
    auto [u, v] = info.gverts[i];
    info.vertex_cell.push_back(i == rg ? -1 : cell_id(2 * u, 2 * v));
  }
  for (auto [i, j] : info.gedges) {
    auto [u1, v1] = info.gverts[i];
    auto [u2, v2] = info.gverts[j];
    info.edge_cell.push_back(cell_id(u1 + u2, v1 + v2));
  }
  for (auto [a, b] : info.gfaces) info.face_cell.push_back(cell_id(2 * a + 1, 2 * b + 1));
  return info;
}

}  // namespace dimerlab
