#pragma once

// Embedded planar graphs as combinatorial maps.
//
// A graph stores, per vertex, the counterclockwise cyclic order of incident
// darts (directed edge ends).  Faces are traced from the rotation system, so
// duals of duals and graphs with parallel edges need no geometric crutches.
// Positions are kept for rendering and for deriving rotations of graphs that
// come with an actual drawing.

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "dimerlab/exact.hpp"

namespace dimerlab {

enum class Color : int8_t { kNone = -1, kWhite = 0, kBlack = 1 };

struct Vertex {
  double x = 0, y = 0;
  Color color = Color::kNone;
};

struct GraphEdge {
  int u = -1, v = -1;      // for bipartite graphs u is white, v is black
  double weight = 1.0;
  BigRat rweight{1};       // exact weight; numeric weight mirrors it when rational
  bool weight_exact = true;
};

// A dart 2*e encodes edge e directed u to v, 2*e+1 the reverse.
inline int dart_edge(int d) { return d >> 1; }
inline int dart_twin(int d) { return d ^ 1; }

class PlanarGraph {
 public:
  std::vector<Vertex> vertices;
  std::vector<GraphEdge> edges;
  std::vector<std::vector<int>> rotation;  // ccw darts around each vertex
  std::vector<std::vector<int>> faces;     // dart cycles; faces[0] is the outer face

  // Doubled lattice coordinates, present for graphs built from grid regions.
  bool on_lattice = false;
  std::vector<std::array<int64_t, 2>> lattice;

  int num_vertices() const { return int(vertices.size()); }
  int num_edges() const { return int(edges.size()); }
  int num_darts() const { return 2 * int(edges.size()); }

  int dart_tail(int d) const {
    const GraphEdge& e = edges[dart_edge(d)];
    return (d & 1) ? e.v : e.u;
  }
  int dart_head(int d) const { return dart_tail(dart_twin(d)); }

  int degree(int v) const { return int(rotation[v].size()); }

  bool is_bipartite_colored() const {
    for (const GraphEdge& e : edges) {
      if (vertices[e.u].color != Color::kWhite) return false;
      if (vertices[e.v].color != Color::kBlack) return false;
    }
    return true;
  }

  std::vector<int> white_ids() const {
    std::vector<int> w;
    for (int i = 0; i < num_vertices(); ++i)
      if (vertices[i].color == Color::kWhite) w.push_back(i);
    return w;
  }
  std::vector<int> black_ids() const {
    std::vector<int> b;
    for (int i = 0; i < num_vertices(); ++i)
      if (vertices[i].color == Color::kBlack) b.push_back(i);
    return b;
  }

  // Rotation from vertex positions: darts sorted ccw by direction angle.
  // Requires distinct directions per vertex (no parallel edges).
  void build_rotation_from_positions() {
    rotation.assign(vertices.size(), {});
    for (int e = 0; e < num_edges(); ++e) {
      rotation[edges[e].u].push_back(2 * e);
      rotation[edges[e].v].push_back(2 * e + 1);
    }
    for (int v = 0; v < num_vertices(); ++v) {
      std::sort(rotation[v].begin(), rotation[v].end(), [&](int a, int b) {
        int ha = dart_head(a), hb = dart_head(b);
        double aa = std::atan2(vertices[ha].y - vertices[v].y, vertices[ha].x - vertices[v].x);
        double ab = std::atan2(vertices[hb].y - vertices[v].y, vertices[hb].x - vertices[v].x);
        return aa < ab;
      });
    }
  }

  // Traces all faces from the rotation system.  The successor rule keeps the
  // face on the right of each dart, so with ccw rotations bounded faces wind
  // clockwise and the outer face is the unique counterclockwise one (most
  // positive signed area) unless a hint names it.
  void trace_faces(int outer_face_hint = -1) {
    int nd = num_darts();
    if (nd == 0) {  // edgeless graph: the plane is one face
      faces.assign(1, {});
      return;
    }
    std::vector<int> face_of(nd, -1);
    std::vector<int> rot_index(nd, -1);
    std::vector<std::vector<int>> out;
    for (int v = 0; v < num_vertices(); ++v)
      for (int i = 0; i < int(rotation[v].size()); ++i) rot_index[rotation[v][i]] = i;
    for (int d0 = 0; d0 < nd; ++d0) {
      if (face_of[d0] >= 0) continue;
      std::vector<int> cycle;
      int d = d0;
      while (face_of[d] < 0) {
        face_of[d] = int(out.size());
        cycle.push_back(d);
        int t = dart_twin(d);
        int v = dart_tail(t);
        const std::vector<int>& rot = rotation[v];
        d = rot[(rot_index[t] + 1) % rot.size()];
      }
      if (d != d0) throw std::logic_error("trace_faces: corrupt rotation system");
      out.push_back(std::move(cycle));
    }
    int outer = outer_face_hint;
    if (outer < 0) {
      double best = 0;
      outer = 0;
      for (int f = 0; f < int(out.size()); ++f) {
        double area2 = 0;
        for (int d : out[f]) {
          const Vertex& a = vertices[dart_tail(d)];
          const Vertex& b = vertices[dart_head(d)];
          area2 += a.x * b.y - b.x * a.y;
        }
        if (area2 > best) { best = area2; outer = f; }
      }
    }
    if (outer != 0) std::swap(out[0], out[outer]);
    faces = std::move(out);
  }

  int face_of_dart(int d) const {
    for (int f = 0; f < int(faces.size()); ++f)
      for (int x : faces[f])
        if (x == d) return f;
    return -1;
  }

  std::vector<int> face_vertices(int f) const {
    std::vector<int> vs;
    for (int d : faces[f]) vs.push_back(dart_tail(d));
    return vs;
  }
};

// Euler count and basic wiring checks for every constructor output.
inline void validate_graph(const PlanarGraph& g) {
  int V = g.num_vertices(), E = g.num_edges(), F = int(g.faces.size());
  if (V - E + F != 2) throw std::logic_error("validate_graph: Euler formula violated");
  std::vector<int> deg(V, 0);
  for (const GraphEdge& e : g.edges) {
    if (e.u < 0 || e.u >= V || e.v < 0 || e.v >= V)
      throw std::logic_error("validate_graph: edge endpoint out of range");
    ++deg[e.u];
    ++deg[e.v];
  }
  for (int v = 0; v < V; ++v)
    if (deg[v] != g.degree(v))
      throw std::logic_error("validate_graph: rotation/degree mismatch");
  size_t dart_count = 0;
  for (const auto& f : g.faces) dart_count += f.size();
  if (dart_count != size_t(2 * E))
    throw std::logic_error("validate_graph: faces do not partition darts");
  for (const GraphEdge& e : g.edges) {
    if (e.weight <= 0 && e.weight_exact && e.rweight <= 0)
      throw std::logic_error("validate_graph: nonpositive edge weight");
  }
}

inline void validate_bipartite(const PlanarGraph& g) {
  validate_graph(g);
  for (const GraphEdge& e : g.edges) {
    if (g.vertices[e.u].color == g.vertices[e.v].color)
      throw std::logic_error("validate_bipartite: monochromatic edge");
    if (g.vertices[e.u].color != Color::kWhite)
      throw std::logic_error("validate_bipartite: edge not stored white-to-black");
  }
}

// ---------------------------------------------------------------------------
// Planar dual.
//
// Dual vertex f sits on primal face f; dual edge i crosses primal edge i.
// The dual rotation around f is the dart order along the face walk, which
// makes dualization an involution on the underlying map.  Dual faces then
// correspond one-to-one to primal vertices; the dual's outer face is the one
// around the lexicographically smallest primal vertex on the primal outer
// face (an arbitrary but fixed choice, ignored by the involution check).

struct DualResult {
  PlanarGraph dual;
  std::vector<int> dual_face_to_primal_vertex;
};

inline DualResult planar_dual(const PlanarGraph& g) {
  DualResult r;
  PlanarGraph& d = r.dual;
  int nf = int(g.faces.size());
  d.vertices.resize(nf);
  std::vector<int> face_of(g.num_darts(), -1);
  for (int f = 0; f < nf; ++f)
    for (int x : g.faces[f]) face_of[x] = f;

  d.edges.resize(g.num_edges());
  for (int e = 0; e < g.num_edges(); ++e) {
    d.edges[e].u = face_of[2 * e];
    d.edges[e].v = face_of[2 * e + 1];
    d.edges[e].weight = g.edges[e].weight;
    d.edges[e].rweight = g.edges[e].rweight;
    d.edges[e].weight_exact = g.edges[e].weight_exact;
  }

  // Positions: face centroids; outer dual vertex pushed outside the drawing.
  double xmin = 0, ymin = 0;
  for (const Vertex& v : g.vertices) { xmin = std::min(xmin, v.x); ymin = std::min(ymin, v.y); }
  for (int f = 0; f < nf; ++f) {
    double cx = 0, cy = 0;
    int cnt = 0;
    for (int x : g.faces[f]) { cx += g.vertices[g.dart_tail(x)].x; cy += g.vertices[g.dart_tail(x)].y; ++cnt; }
    d.vertices[f].x = cx / cnt;
    d.vertices[f].y = cy / cnt;
  }
  if (nf > 0) { d.vertices[0].x = xmin - 2; d.vertices[0].y = ymin - 2; }

  // Dual rotation at f: darts in face-walk order.  The dual dart for primal
  // dart x leaves face_of[x]; we reuse primal dart ids, so dual dart 2e
  // leaves face_of[2e].
  d.rotation.assign(nf, {});
  for (int f = 0; f < nf; ++f)
    for (int x : g.faces[f]) d.rotation[f].push_back(x);

  // Dual faces correspond to primal vertices; trace and identify.
  d.trace_faces(0);  // placeholder outer; fixed below
  r.dual_face_to_primal_vertex.assign(d.faces.size(), -1);
  for (int f = 0; f < int(d.faces.size()); ++f) {
    // The dual face permutation works out to the primal rotation, so a dual
    // face is exactly the dart cycle around one primal tail vertex.
    int x = d.faces[f][0];
    r.dual_face_to_primal_vertex[f] = g.dart_tail(x);
  }
  // Outer: dual face of the lex-min primal vertex on the primal outer face.
  int best_v = -1, best_f = -1;
  for (int f = 0; f < int(d.faces.size()); ++f) {
    int pv = r.dual_face_to_primal_vertex[f];
    bool on_outer = false;
    for (int x : g.faces[0])
      if (g.dart_tail(x) == pv) { on_outer = true; break; }
    if (!on_outer) continue;
    if (best_v < 0 || std::make_pair(g.vertices[pv].x, g.vertices[pv].y) <
                          std::make_pair(g.vertices[best_v].x, g.vertices[best_v].y)) {
      best_v = pv;
      best_f = f;
    }
  }
  if (best_f > 0) {
    std::swap(d.faces[0], d.faces[best_f]);
    std::swap(r.dual_face_to_primal_vertex[0], r.dual_face_to_primal_vertex[best_f]);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Matchings.

struct Matching {
  std::vector<int> edge_ids;               // chosen edges
  std::vector<int> partner;                // partner vertex per vertex, -1 if uncovered
  std::vector<int> matched_edge;           // covering edge per vertex, -1 if uncovered
};

inline Matching make_matching(const PlanarGraph& g, const std::vector<int>& edge_ids) {
  Matching m;
  m.edge_ids = edge_ids;
  m.partner.assign(g.num_vertices(), -1);
  m.matched_edge.assign(g.num_vertices(), -1);
  for (int e : edge_ids) {
    const GraphEdge& ge = g.edges[e];
    m.partner[ge.u] = ge.v;
    m.partner[ge.v] = ge.u;
    m.matched_edge[ge.u] = e;
    m.matched_edge[ge.v] = e;
  }
  return m;
}

inline bool validate_matching(const PlanarGraph& g, const Matching& m) {
  std::vector<int> cover(g.num_vertices(), 0);
  for (int e : m.edge_ids) {
    if (e < 0 || e >= g.num_edges()) return false;
    ++cover[g.edges[e].u];
    ++cover[g.edges[e].v];
  }
  for (int c : cover)
    if (c != 1) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration over an explicit edge list.  This is the reference
// oracle for every determinant identity and the sign source for the torus
// calibration; it deliberately shares no code with the matrix paths.

struct EdgeListGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<BigRat> weights;
};

inline EdgeListGraph to_edge_list(const PlanarGraph& g) {
  EdgeListGraph el;
  el.n = g.num_vertices();
  for (const GraphEdge& e : g.edges) {
    el.edges.emplace_back(e.u, e.v);
    el.weights.push_back(e.rweight);
  }
  return el;
}

// Weighted sum over perfect matchings; optionally records the matchings.
inline BigRat enumerate_matchings(const EdgeListGraph& g,
                                  std::vector<std::vector<int>>* out = nullptr) {
  std::vector<std::vector<std::pair<int, int>>> inc(g.n);  // (edge, other end)
  for (int e = 0; e < int(g.edges.size()); ++e) {
    auto [u, v] = g.edges[e];
    inc[u].emplace_back(e, v);
    inc[v].emplace_back(e, u);
  }
  std::vector<char> covered(g.n, 0);
  std::vector<int> chosen;
  BigRat total(0);
  auto rec = [&](auto&& self, int scan, BigRat w) -> void {
    while (scan < g.n && covered[scan]) ++scan;
    if (scan == g.n) {
      total += w;
      if (out) out->push_back(chosen);
      return;
    }
    covered[scan] = 1;
    for (auto [e, other] : inc[scan]) {
      if (covered[other]) continue;
      covered[other] = 1;
      chosen.push_back(e);
      self(self, scan + 1, w * g.weights[e]);
      chosen.pop_back();
      covered[other] = 0;
    }
    covered[scan] = 0;
  };
  if (g.n % 2 == 0) rec(rec, 0, BigRat(1));
  return total;
}

inline BigInt count_matchings_brute(const PlanarGraph& g) {
  EdgeListGraph el = to_edge_list(g);
  for (auto& w : el.weights) w = 1;
  BigRat c = enumerate_matchings(el);
  assert(c.get_den() == 1);
  return c.get_num();
}

}  // namespace dimerlab
