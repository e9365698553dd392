#include "doctest.h"

#include "dimerlab/graph.hpp"
#include "dimerlab/lattice.hpp"

using namespace dimerlab;

namespace {

PlanarGraph triangle() {
  PlanarGraph g;
  g.vertices.resize(3);
  g.vertices[0] = {0, 0, Color::kNone};
  g.vertices[1] = {1, 0, Color::kNone};
  g.vertices[2] = {0.5, 1, Color::kNone};
  g.edges.resize(3);
  g.edges[0].u = 0; g.edges[0].v = 1;
  g.edges[1].u = 1; g.edges[1].v = 2;
  g.edges[2].u = 2; g.edges[2].v = 0;
  g.build_rotation_from_positions();
  g.trace_faces();
  return g;
}

}  // namespace

TEST_CASE("triangle map traces two faces and validates") {
  PlanarGraph g = triangle();
  REQUIRE(g.faces.size() == 2);
  CHECK(g.faces[0].size() == 3);
  CHECK(g.faces[1].size() == 3);
  CHECK_NOTHROW(validate_graph(g));
}

TEST_CASE("dart incidence helpers") {
  PlanarGraph g = triangle();
  CHECK(g.dart_tail(0) == 0);
  CHECK(g.dart_head(0) == 1);
  CHECK(g.dart_tail(1) == 1);
  CHECK(dart_twin(4) == 5);
  CHECK(dart_edge(5) == 2);
  CHECK(g.degree(0) == 2);
}

TEST_CASE("dual of the triangle is a two-vertex bundle of three edges") {
  PlanarGraph g = triangle();
  DualResult d = planar_dual(g);
  CHECK(d.dual.num_vertices() == 2);
  CHECK(d.dual.num_edges() == 3);
  REQUIRE(d.dual.faces.size() == 3);  // one dual face per primal vertex
  CHECK_NOTHROW(validate_graph(d.dual));
  // dual faces hit each primal vertex exactly once
  std::vector<int> seen(3, 0);
  for (int pv : d.dual_face_to_primal_vertex) ++seen[pv];
  for (int s : seen) CHECK(s == 1);
}

TEST_CASE("dualizing twice returns the original incidence structure") {
  for (const PlanarGraph& g : {triangle(), build_rectangle(2, 3), build_rectangle(3, 3)}) {
    DualResult d1 = planar_dual(g);
    CHECK_NOTHROW(validate_graph(d1.dual));
    DualResult d2 = planar_dual(d1.dual);
    REQUIRE(d2.dual.num_vertices() == g.num_vertices());
    CHECK(d2.dual.num_edges() == g.num_edges());
    CHECK(d2.dual.faces.size() == g.faces.size());
    // Edge ids are preserved by dualization, so edge e of the double dual
    // must connect the images of the primal endpoints of edge e.
    for (int e = 0; e < g.num_edges(); ++e) {
      int a = d1.dual_face_to_primal_vertex[d2.dual.edges[e].u];
      int b = d1.dual_face_to_primal_vertex[d2.dual.edges[e].v];
      int u = g.edges[e].u, v = g.edges[e].v;
      bool same = (a == u && b == v) || (a == v && b == u);
      CHECK(same);
    }
  }
}

TEST_CASE("validator rejects a rotation that breaks planarity") {
  PlanarGraph g = build_rectangle(2, 3);
  // Swapping two darts at a degree-3 vertex merges faces; Euler then fails.
  bool swapped = false;
  for (auto& rot : g.rotation) {
    if (rot.size() >= 3) {
      std::swap(rot[0], rot[1]);
      swapped = true;
      break;
    }
  }
  REQUIRE(swapped);
  g.trace_faces();
  CHECK_THROWS_AS(validate_graph(g), std::logic_error);
}

TEST_CASE("matching enumeration on hand-checked graphs") {
  EdgeListGraph p4;
  p4.n = 4;
  p4.edges = {{0, 1}, {1, 2}, {2, 3}};
  p4.weights = {BigRat(1), BigRat(1), BigRat(1)};
  CHECK(enumerate_matchings(p4) == 1);

  EdgeListGraph c4;
  c4.n = 4;
  c4.edges = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
  c4.weights = {BigRat(2), BigRat(3), BigRat(5), BigRat(7)};
  // matchings {01,23} and {12,30}
  CHECK(enumerate_matchings(c4) == BigRat(2 * 5 + 3 * 7));

  EdgeListGraph k4;
  k4.n = 4;
  k4.edges = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  k4.weights.assign(6, BigRat(1));
  CHECK(enumerate_matchings(k4) == 3);

  EdgeListGraph odd;
  odd.n = 3;
  odd.edges = {{0, 1}, {1, 2}};
  odd.weights = {BigRat(1), BigRat(1)};
  CHECK(enumerate_matchings(odd) == 0);
}

TEST_CASE("enumeration records matchings that pass the validator") {
  PlanarGraph g = build_rectangle(2, 3);
  std::vector<std::vector<int>> ms;
  BigRat z = enumerate_matchings(to_edge_list(g), &ms);
  CHECK(z == 3);
  REQUIRE(ms.size() == 3);
  for (const auto& ids : ms) {
    Matching m = make_matching(g, ids);
    CHECK(validate_matching(g, m));
    for (int e : ids) {
      CHECK(m.partner[g.edges[e].u] == g.edges[e].v);
      CHECK(m.matched_edge[g.edges[e].v] == e);
    }
  }
  // Dropping an edge leaves vertices uncovered; duplicating covers twice.
  Matching broken = make_matching(g, {ms[0][0]});
  CHECK(!validate_matching(g, broken));
  std::vector<int> dup = ms[0];
  dup.push_back(ms[0][0]);
  Matching dbl = make_matching(g, dup);
  CHECK(!validate_matching(g, dbl));
}

TEST_CASE("weighted enumeration multiplies edge weights per matching") {
  PlanarGraph g = build_rectangle(2, 2);
  // Find the two horizontal edges and weight them 3 and 5.
  int nmarked = 0;
  for (auto& e : g.edges) {
    if (g.lattice[e.u][1] == g.lattice[e.v][1]) {
      e.rweight = nmarked == 0 ? 3 : 5;
      e.weight = to_double(e.rweight);
      ++nmarked;
    }
  }
  REQUIRE(nmarked == 2);
  // Z = (3*5) + (1*1): both horizontals or both verticals.
  CHECK(enumerate_matchings(to_edge_list(g)) == 16);
}
