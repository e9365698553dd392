#include "doctest.h"

#include <complex>
#include <map>
#include <set>
#include <vector>

#include "dimerlab/local_stats.hpp"

using namespace dimerlab;

namespace {

// Enumeration oracle: all matchings with their weights, queried for the
// probability that a vertex-pair set is simultaneously matched.  Shares no
// code with the determinant path.
struct EnumOracle {
  EdgeListGraph el;
  std::vector<std::vector<int>> ms;
  BigRat z;

  explicit EnumOracle(const PlanarGraph& g) : el(to_edge_list(g)) {
    z = enumerate_matchings(el, &ms);
  }

  BigRat prob(const std::vector<std::pair<int, int>>& t) const {
    BigRat num(0);
    std::vector<int> partner(el.n, -1);
    for (const auto& m : ms) {
      std::fill(partner.begin(), partner.end(), -1);
      BigRat w(1);
      for (int e : m) {
        partner[el.edges[e].first] = el.edges[e].second;
        partner[el.edges[e].second] = el.edges[e].first;
        w *= el.weights[e];
      }
      bool all = true;
      for (auto [u, v] : t)
        if (partner[u] != v) {
          all = false;
          break;
        }
      if (all) num += w;
    }
    return num / z;
  }
};

Mat<GaussianRat> exact_product(const Mat<GaussianRat>& a, const Mat<GaussianRat>& b) {
  Mat<GaussianRat> c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      GaussianRat s;
      for (int k = 0; k < a.cols(); ++k) s = s + a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

// The region-graph vertex of the cell at (a, b); positions store cell centers.
int cell_vertex(const PlanarGraph& g, int a, int b) {
  for (int i = 0; i < g.num_vertices(); ++i)
    if (g.vertices[i].x == 2 * a + 1 && g.vertices[i].y == 2 * b + 1) return i;
  REQUIRE(false);
  return -1;
}

std::array<int, 2> vertex_cell(const PlanarGraph& g, int v) {
  return {int((g.vertices[v].x - 1) / 2), int((g.vertices[v].y - 1) / 2)};
}

}  // namespace

TEST_CASE("exact inverses multiply back to the identity") {
  for (auto [m, n] : {std::pair{2, 1}, {2, 3}, {4, 4}}) {
    PlanarGraph g = build_rectangle(m, n);
    for (Weighting wt : {Weighting::kVerticalI, Weighting::kDirac}) {
      KasteleynMatrix k = build_kasteleyn(g, wt);
      InverseKasteleyn ik = invert_kasteleyn(k);
      REQUIRE(ik.exact);
      Mat<GaussianRat> prod = exact_product(k.a, ik.inv);
      for (int i = 0; i < prod.rows(); ++i)
        for (int j = 0; j < prod.cols(); ++j) {
          GaussianRat want(BigRat(i == j ? 1 : 0), BigRat(0));
          CHECK(prod(i, j).re == want.re);
          CHECK(prod(i, j).im == want.im);
        }
    }
  }
}

TEST_CASE("mode selection: small exact, large floating, forcing honored") {
  PlanarGraph small = build_rectangle(2, 3);
  KasteleynMatrix ks = build_kasteleyn(small);
  CHECK(invert_kasteleyn(ks).exact);

  InverseKasteleyn forced = invert_kasteleyn(ks, InverseMode::kFloating);
  CHECK(!forced.exact);
  CHECK(forced.residual <= 1e-12);
  InverseKasteleyn ex = invert_kasteleyn(ks, InverseMode::kExact);
  CHECK((forced.invf - ex.invf).cwiseAbs().maxCoeff() <= 1e-12);

  PlanarGraph big = build_rectangle(12, 20);
  KasteleynMatrix kb = build_kasteleyn(big);
  InverseKasteleyn ib = invert_kasteleyn(kb);
  CHECK(!ib.exact);
  CHECK(ib.residual <= 1e-10);

  // inexact weights refuse the exact path and auto-route to floating
  PlanarGraph g = build_rectangle(2, 2);
  g.edges[0].weight = 0.77;
  g.edges[0].weight_exact = false;
  KasteleynMatrix kf = build_kasteleyn(g);
  CHECK(!kf.exact);
  CHECK_THROWS_AS(invert_kasteleyn(kf, InverseMode::kExact), std::invalid_argument);
  CHECK(!invert_kasteleyn(kf).exact);
}

TEST_CASE("unbalanced and singular matrices are refused in both modes") {
  PlanarGraph odd = build_rectangle(3, 3);
  KasteleynMatrix ko = build_kasteleyn(odd);
  CHECK_THROWS_AS(invert_kasteleyn(ko), std::invalid_argument);

  // balanced but unmatchable: two pendant whites share their only black
  Region r;
  r.cells = {{1, 0}, {0, 1}, {1, 1}, {2, 1}, {1, 2}, {2, 2}, {3, 1}, {1, 3}};
  r.normalize();
  PlanarGraph g = region_graph(r);
  KasteleynMatrix k = build_kasteleyn(g);
  CHECK_THROWS_AS(invert_kasteleyn(k, InverseMode::kExact), std::invalid_argument);
  CHECK_THROWS_AS(invert_kasteleyn(k, InverseMode::kFloating), std::invalid_argument);
}

TEST_CASE("2x3 rectangle: pinned dimer probabilities") {
  PlanarGraph g = build_rectangle(2, 3);
  KasteleynMatrix k = build_kasteleyn(g);
  InverseKasteleyn ik = invert_kasteleyn(k);
  // vertex ids in cell lex order: (0,0)=0 B, (0,1)=1 W, (1,0)=2 W,
  // (1,1)=3 B, (2,0)=4 B, (2,1)=5 W
  ProbValue center = dimer_probability(ik, {{2, 3}});
  REQUIRE(center.exact);
  CHECK(center.rat == BigRat(1) / 3);
  ProbValue corner = dimer_probability(ik, {{1, 0}});
  CHECK(corner.rat == BigRat(2) / 3);
  ProbValue both_sides = dimer_probability(ik, {{1, 0}, {5, 4}});
  CHECK(both_sides.rat == BigRat(1) / 3);
  ProbValue repeated = dimer_probability(ik, {{1, 0}, {1, 4}});
  CHECK(repeated.rat == BigRat(0));
  CHECK(repeated.exact);
  ProbValue empty = dimer_probability(ik, {});
  CHECK(empty.rat == BigRat(1));
  ProbValue nonedge = dimer_probability(ik, {{1, 4}});  // opposite corners
  CHECK(nonedge.rat == BigRat(0));
  CHECK_THROWS_AS(dimer_probability(ik, {{0, 1}}), std::invalid_argument);  // colors swapped
}

TEST_CASE("probabilities equal enumeration ratios for every dimer set up to size 3") {
  std::vector<PlanarGraph> graphs;
  graphs.push_back(build_rectangle(2, 3));
  graphs.push_back(build_rectangle(2, 4));
  graphs.push_back(build_rectangle(3, 4));
  graphs.push_back(build_aztec(2));
  graphs.push_back(build_rectangle(2, 7));
  {
    Region l = rect_region(4, 2);
    l.cells.push_back({0, 2});
    l.cells.push_back({1, 2});
    l.normalize();
    graphs.push_back(region_graph(l));
  }
  {
    PlanarGraph w = build_rectangle(2, 3);
    w.edges[1].rweight = BigRat(3) / 2;
    w.edges[1].weight = 1.5;
    w.edges[4].rweight = BigRat(2) / 5;
    w.edges[4].weight = 0.4;
    graphs.push_back(std::move(w));
  }
  for (const PlanarGraph& g : graphs) {
    EnumOracle oracle(g);
    for (Weighting wt : {Weighting::kVerticalI, Weighting::kDirac}) {
      KasteleynMatrix k = build_kasteleyn(g, wt);
      InverseKasteleyn ik = invert_kasteleyn(k);
      REQUIRE(ik.exact);
      int ne = g.num_edges();
      auto pair_of = [&](int e) {
        return std::pair<int, int>(g.edges[e].u, g.edges[e].v);
      };
      auto check = [&](const std::vector<std::pair<int, int>>& t) {
        ProbValue pv = dimer_probability(ik, t);
        REQUIRE(pv.exact);
        CHECK(pv.rat == oracle.prob(t));
      };
      for (int a = 0; a < ne; ++a) {
        check({pair_of(a)});
        for (int b = a + 1; b < ne; ++b) {
          check({pair_of(a), pair_of(b)});
          for (int c = b + 1; c < ne; ++c) check({pair_of(a), pair_of(b), pair_of(c)});
        }
      }
    }
  }
}

TEST_CASE("edge probabilities around each white vertex sum to one") {
  PlanarGraph g = build_rectangle(3, 4);
  KasteleynMatrix k = build_kasteleyn(g);
  InverseKasteleyn ik = invert_kasteleyn(k);
  std::map<int, BigRat> sums;
  for (int e = 0; e < g.num_edges(); ++e) {
    ProbValue pv = dimer_probability(ik, {{g.edges[e].u, g.edges[e].v}});
    REQUIRE(pv.exact);
    sums[g.edges[e].u] += pv.rat;
  }
  for (auto& [w, s] : sums) CHECK(s == BigRat(1));

  PlanarGraph big = build_rectangle(12, 20);
  KasteleynMatrix kb = build_kasteleyn(big);
  InverseKasteleyn ib = invert_kasteleyn(kb);
  std::map<int, double> fsums;
  for (int e = 0; e < big.num_edges(); ++e) {
    ProbValue pv = dimer_probability(ib, {{big.edges[e].u, big.edges[e].v}});
    fsums[big.edges[e].u] += pv.value;
  }
  for (auto& [w, s] : fsums) CHECK(std::abs(s - 1.0) <= 1e-9);
}

TEST_CASE("sampling: unique matching, determinism, exactness of frequencies") {
  PlanarGraph one = build_rectangle(2, 1);
  KasteleynMatrix k1 = build_kasteleyn(one);
  InverseKasteleyn i1 = invert_kasteleyn(k1);
  for (uint64_t seed : {1u, 2u, 99u}) {
    Matching m = sample_matching(one, k1, i1, seed);
    CHECK(validate_matching(one, m));
    CHECK(m.edge_ids.size() == 1);
  }

  PlanarGraph sq = build_rectangle(4, 4);
  KasteleynMatrix ks = build_kasteleyn(sq);
  InverseKasteleyn is = invert_kasteleyn(ks);
  Matching a = sample_matching(sq, ks, is, 7);
  Matching b = sample_matching(sq, ks, is, 7);
  CHECK(a.edge_ids == b.edge_ids);
  CHECK(validate_matching(sq, a));

  // 2x2: both tilings within 3 sigma of 1/2 over 10^4 draws
  PlanarGraph g22 = build_rectangle(2, 2);
  KasteleynMatrix k22 = build_kasteleyn(g22);
  InverseKasteleyn i22 = invert_kasteleyn(k22);
  int v0 = cell_vertex(g22, 0, 0), v1 = cell_vertex(g22, 0, 1);
  int n = 10000, vert = 0;
  for (int s = 0; s < n; ++s) {
    Matching m = sample_matching(g22, k22, i22, 1000 + s);
    if (m.partner[v0] == v1) ++vert;
  }
  CHECK(std::abs(vert / double(n) - 0.5) <= 3 * 0.5 / std::sqrt(double(n)));

  // 2x3: chi-squared against the uniform 3-way split, alpha = 0.01
  PlanarGraph g23 = build_rectangle(2, 3);
  KasteleynMatrix k23 = build_kasteleyn(g23);
  InverseKasteleyn i23 = invert_kasteleyn(k23);
  int mid = cell_vertex(g23, 1, 1);
  std::map<int, int> counts;
  for (int s = 0; s < n; ++s) {
    Matching m = sample_matching(g23, k23, i23, 55000 + s);
    ++counts[m.partner[mid]];
  }
  REQUIRE(counts.size() == 3);
  double chi2 = 0, expect = n / 3.0;
  for (auto& [part, c] : counts) chi2 += (c - expect) * (c - expect) / expect;
  CHECK(chi2 < 9.21);
}

TEST_CASE("sampled marginals match computed probabilities on the 2x4 rectangle") {
  PlanarGraph g = build_rectangle(2, 4);
  KasteleynMatrix k = build_kasteleyn(g);
  InverseKasteleyn ik = invert_kasteleyn(k);
  int n = 100000;
  std::vector<int> freq(g.num_edges(), 0);
  for (int s = 0; s < n; ++s) {
    Matching m = sample_matching(g, k, ik, 900000 + s);
    for (int e : m.edge_ids) ++freq[e];
  }
  for (int e = 0; e < g.num_edges(); ++e) {
    double p = dimer_probability(ik, {{g.edges[e].u, g.edges[e].v}}).value;
    double sigma = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(freq[e] / double(n) - p) <= 4 * sigma);
  }
}

TEST_CASE("sampling runs clean on a floating inverse") {
  PlanarGraph g = build_rectangle(12, 20);
  KasteleynMatrix k = build_kasteleyn(g);
  InverseKasteleyn ik = invert_kasteleyn(k);
  for (uint64_t seed : {3u, 17u}) {
    Matching m = sample_matching(g, k, ik, seed);
    CHECK(validate_matching(g, m));
  }
}

TEST_CASE("whole-plane inverse: parity, adjacency, symmetry, decay") {
  const double pi = std::numbers::pi;
  CHECK(!plane_inverse(0, 0).opposite_colors);
  CHECK(plane_inverse(2, 0).value == cplx(0, 0));
  CHECK(plane_inverse(1, 1).value == cplx(0, 0));
  CHECK(plane_inverse(1, 0).opposite_colors);

  CHECK(std::abs(plane_inverse(1, 0).value - cplx(0.25, 0)) <= 1e-10);
  CHECK(std::abs(plane_inverse(-1, 0).value - cplx(-0.25, 0)) <= 1e-10);
  CHECK(std::abs(plane_inverse(0, 1).value - cplx(0, -0.25)) <= 1e-10);
  CHECK(std::abs(plane_inverse(0, -1).value - cplx(0, 0.25)) <= 1e-10);

  // odd x, even y entries are real; even x, odd y are imaginary
  CHECK(std::abs(plane_inverse(3, 2).value.imag()) <= 1e-12);
  CHECK(std::abs(plane_inverse(5, 0).value.imag()) <= 1e-12);
  CHECK(std::abs(plane_inverse(2, 3).value.real()) <= 1e-12);
  CHECK(std::abs(plane_inverse(0, 7).value.real()) <= 1e-12);

  for (auto [x, y] : {std::pair{3, 2}, {4, 1}, {2, 5}}) {
    cplx p = plane_inverse(x, y).value;
    CHECK(std::abs(plane_inverse(x, -y).value - std::conj(p)) <= 1e-12);
    CHECK(std::abs(plane_inverse(-x, -y).value + p) <= 1e-12);
  }

  // 1/(pi |z|) decay along both axes, fitted constant within 10%
  double fit = 0;
  int npts = 0;
  for (int d : {5, 9, 15, 21, 27, 33, 39}) {
    fit += std::abs(plane_inverse(d, 0).value) * d * pi;
    fit += std::abs(plane_inverse(0, d).value) * d * pi;
    npts += 2;
  }
  fit /= npts;
  CHECK(std::abs(fit - 1.0) <= 0.1);

  // off-axis the modulus stays under the same envelope
  for (auto [x, y] : {std::pair{4, 3}, {7, 2}, {5, 6}, {9, 4}}) {
    double z = std::hypot(double(x), double(y));
    CHECK(std::abs(plane_inverse(x, y).value) * z * pi <= 1.35);
  }
}

TEST_CASE("rectangle spectral inverse equals the dense inverse entrywise") {
  PlanarGraph g = build_rectangle(6, 8);
  KasteleynMatrix k = build_kasteleyn(g, Weighting::kDirac);
  InverseKasteleyn ik = invert_kasteleyn(k, InverseMode::kFloating);
  for (int w : k.whites)
    for (int b : k.blacks) {
      cplx spectral = rect_dirac_inverse(8, 6, vertex_cell(g, b), vertex_cell(g, w));
      CHECK(std::abs(ik.invf(k.col_of[b], k.row_of[w]) - spectral) <= 1e-10);
    }
}

TEST_CASE("plane inverse vs large-rectangle centers: constant boundary field, odd part converges") {
  // Center entries of an L x L rectangle sit a nearly uniform ~0.41/L away
  // from the plane kernel; antisymmetrizing in the displacement cancels the
  // field and converges at the square of that rate.
  std::vector<std::array<int, 2>> zs = {{1, 0}, {0, 1},  {1, 2},  {3, 0},  {3, 2},
                                        {4, 1}, {5, 2},  {3, 4},  {7, 0},  {5, 4},
                                        {9, 0}, {6, 3},  {-5, 2}, {0, 7},  {2, -7},
                                        {10, 1}, {1, -10}};
  double worst100 = 0, worst200 = 0, sym100 = 0;
  for (auto [x, y] : zs) {
    cplx p = plane_inverse(x, y).value;
    auto entry = [&](int L, int dx, int dy) {
      int wx = L / 2 - 1, wy = L / 2;
      return rect_dirac_inverse(L, L, {wx + dx, wy + dy}, {wx, wy});
    };
    worst100 = std::max(worst100, std::abs(entry(100, x, y) - p));
    worst200 = std::max(worst200, std::abs(entry(200, x, y) - p));
    sym100 = std::max(sym100, std::abs((entry(100, x, y) - entry(100, -x, -y)) / 2.0 - p));
  }
  CHECK(worst100 <= 6e-3);
  CHECK(worst200 <= 0.6 * worst100);  // field decays with the size
  CHECK(sym100 <= 1e-3);
}

TEST_CASE("sparse inverse columns match the dense inverse") {
  TemperleyRegion tr = temperley_region(disc_region(3));
  PlanarGraph g = region_graph(tr.fine);
  KasteleynMatrix k = build_kasteleyn(g, Weighting::kDirac);
  InverseKasteleyn ik = invert_kasteleyn(k, InverseMode::kFloating);
  std::vector<int> ws;
  for (int w : k.whites)
    if (int(ws.size()) < 5) ws.push_back(w);
  CMatrix cols = kasteleyn_inverse_columns(g, k, ws);
  for (int j = 0; j < int(ws.size()); ++j)
    for (int b : k.blacks)
      CHECK(std::abs(cols(k.col_of[b], j) - ik.invf(k.col_of[b], k.row_of[ws[j]])) <= 1e-12);
}

TEST_CASE("superposition meshes: rectangle agreement and tree counts") {
  TemperleyRegion tr = temperley_region(rect_region(2, 3));
  TemperleyInfo ti = build_temperley(2, 3);
  CHECK(tr.fine.cells == ti.region.cells);
  CHECK(tr.removed == Cell{0, 0});

  CHECK_THROWS_AS(temperley_region(rect_region(3, 3), Cell{1, 1}), std::invalid_argument);

  // matchings of the mesh count spanning trees of the coarse grid
  for (int rc : {3, 4}) {
    Region coarse = disc_region(rc);
    TemperleyRegion d = temperley_region(coarse);
    PlanarGraph g = region_graph(d.fine);
    BigInt matchings = count_matchings_int(g, build_kasteleyn(g, Weighting::kDirac));

    std::map<Cell, int> vid;
    std::vector<Cell> verts;
    for (const Cell& c : coarse.cells)
      for (int du = 0; du <= 1; ++du)
        for (int dv = 0; dv <= 1; ++dv) {
          Cell k2{c[0] + du, c[1] + dv};
          if (!vid.count(k2)) {
            vid[k2] = int(verts.size());
            verts.push_back(k2);
          }
        }
    int nv = int(verts.size());
    Mat<GaussianRat> lap(nv - 1, nv - 1);  // grounded at vertex 0
    for (int i = 0; i < nv - 1; ++i)
      for (int j = 0; j < nv - 1; ++j) lap(i, j) = GaussianRat(BigRat(0), BigRat(0));
    std::set<std::pair<int, int>> seen;
    for (const Cell& c : coarse.cells)
      for (auto [dx, dy] : {std::pair{1, 0}, {0, 1}}) {
        for (auto [sx, sy] : {std::pair{0, 0}, {dy, dx}}) {
          Cell a{c[0] + sx, c[1] + sy}, b{c[0] + sx + dx, c[1] + sy + dy};
          int i = vid.at(a), j = vid.at(b);
          if (!seen.insert({std::min(i, j), std::max(i, j)}).second) continue;
          if (i > 0) lap(i - 1, i - 1) = lap(i - 1, i - 1) + GaussianRat(BigRat(1), BigRat(0));
          if (j > 0) lap(j - 1, j - 1) = lap(j - 1, j - 1) + GaussianRat(BigRat(1), BigRat(0));
          if (i > 0 && j > 0) {
            lap(i - 1, j - 1) = lap(i - 1, j - 1) - GaussianRat(BigRat(1), BigRat(0));
            lap(j - 1, i - 1) = lap(j - 1, i - 1) - GaussianRat(BigRat(1), BigRat(0));
          }
        }
      }
    GaussianRat trees = exact_det(lap);
    CHECK(trees.im == 0);
    CHECK(BigRat(matchings) == trees.re);
  }
}

TEST_CASE("mesh inverse columns are grounded Green gradients, exactly") {
  // Corner-class entries: gradient of the coarse Green's function grounded
  // at the removed corner, ratio +1 (horizontal whites) or -i (vertical).
  // Face-class entries: gradient of the dual Green's function grounded at
  // the outer face, ratio -i (horizontal) or +1 (vertical).
  for (const Region& coarse : {rect_region(4, 3), disc_region(4)}) {
    TemperleyRegion tr = temperley_region(coarse);
    PlanarGraph g = region_graph(tr.fine);
    KasteleynMatrix k = build_kasteleyn(g, Weighting::kDirac);
    InverseKasteleyn ik = invert_kasteleyn(k, InverseMode::kFloating);

    std::map<Cell, int> vid;
    std::vector<Cell> verts;
    for (const Cell& c : coarse.cells)
      for (int du = 0; du <= 1; ++du)
        for (int dv = 0; dv <= 1; ++dv) {
          Cell vc{2 * (c[0] + du), 2 * (c[1] + dv)};
          if (!vid.count(vc)) {
            vid[vc] = int(verts.size());
            verts.push_back(vc);
          }
        }
    int nv = int(verts.size());
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(nv, nv);
    for (auto& [c, i] : vid)
      for (auto d : {Cell{2, 0}, Cell{0, 2}}) {
        Cell c2{c[0] + d[0], c[1] + d[1]};
        auto it = vid.find(c2);
        if (it == vid.end()) continue;
        if (tr.fine.index_of(c[0] + d[0] / 2, c[1] + d[1] / 2) < 0) continue;
        int j = it->second;
        lap(i, i) += 1;
        lap(j, j) += 1;
        lap(i, j) -= 1;
        lap(j, i) -= 1;
      }
    int root = vid.at(tr.removed);
    std::vector<int> keep;
    for (int i = 0; i < nv; ++i)
      if (i != root) keep.push_back(i);
    Eigen::MatrixXd lg(nv - 1, nv - 1);
    for (int i = 0; i < nv - 1; ++i)
      for (int j = 0; j < nv - 1; ++j) lg(i, j) = lap(keep[i], keep[j]);
    Eigen::MatrixXd ginv = lg.inverse();
    auto green = [&](Cell x, Cell y) -> double {
      int i = vid.at(x), j = vid.at(y);
      if (i == root || j == root) return 0;
      int ii = int(std::lower_bound(keep.begin(), keep.end(), i) - keep.begin());
      int jj = int(std::lower_bound(keep.begin(), keep.end(), j) - keep.begin());
      return ginv(ii, jj);
    };

    std::map<Cell, int> fid;
    std::vector<Cell> faces;
    for (const Cell& c : coarse.cells) {
      Cell ctr{2 * c[0] + 1, 2 * c[1] + 1};
      fid[ctr] = int(faces.size());
      faces.push_back(ctr);
    }
    int outer = int(faces.size());
    Eigen::MatrixXd ld = Eigen::MatrixXd::Zero(outer + 1, outer + 1);
    for (int i = 0; i < int(tr.fine.cells.size()); ++i) {
      auto [a, b] = tr.fine.cells[i];
      if (Region::cell_black(a, b)) continue;
      bool horiz = ((a % 2) + 2) % 2 == 1;
      Cell f1 = horiz ? Cell{a, b - 1} : Cell{a - 1, b};
      Cell f2 = horiz ? Cell{a, b + 1} : Cell{a + 1, b};
      int i1 = fid.count(f1) ? fid[f1] : outer;
      int i2 = fid.count(f2) ? fid[f2] : outer;
      ld(i1, i1) += 1;
      ld(i2, i2) += 1;
      ld(i1, i2) -= 1;
      ld(i2, i1) -= 1;
    }
    Eigen::MatrixXd gdinv = ld.topLeftCorner(outer, outer).inverse();
    auto dgreen = [&](Cell x, Cell y) -> double {
      auto ix = fid.find(x), iy = fid.find(y);
      if (ix == fid.end() || iy == fid.end()) return 0;
      return gdinv(ix->second, iy->second);
    };

    for (int wv = 0; wv < int(tr.fine.cells.size()); ++wv) {
      auto [a, b] = tr.fine.cells[wv];
      if (Region::cell_black(a, b)) continue;
      bool horiz = ((a % 2) + 2) % 2 == 1;
      for (int bv = 0; bv < int(tr.fine.cells.size()); ++bv) {
        auto [c, d] = tr.fine.cells[bv];
        if (!Region::cell_black(c, d)) continue;
        bool corner = ((c % 2) + 2) % 2 == 0;
        cplx entry = ik.invf(k.col_of[bv], k.row_of[wv]);
        double diff;
        cplx ratio;
        if (corner) {
          diff = horiz ? green({a + 1, b}, {c, d}) - green({a - 1, b}, {c, d})
                       : green({a, b + 1}, {c, d}) - green({a, b - 1}, {c, d});
          ratio = horiz ? cplx(1, 0) : cplx(0, -1);
        } else {
          diff = horiz ? dgreen({a, b + 1}, {c, d}) - dgreen({a, b - 1}, {c, d})
                       : dgreen({a + 1, b}, {c, d}) - dgreen({a - 1, b}, {c, d});
          ratio = horiz ? cplx(0, -1) : cplx(1, 0);
        }
        CHECK(std::abs(entry - ratio * diff) <= 1e-9);
      }
    }
  }
}

TEST_CASE("coupling functions: closed forms, covariance, boundary behavior") {
  const double pi = std::numbers::pi;
  auto hp = CouplingFunctions::half_plane();
  CHECK(std::abs(hp.fp(cplx(0, 1), cplx(0, 2)) - cplx(0, -2 / pi)) <= 1e-12);

  auto d = CouplingFunctions::disc();
  auto img = CouplingFunctions::conformal_image(
      "disc-via-cayley", [](cplx z) { return cplx(0, 1) * (1.0 - z) / (1.0 + z); },
      [](cplx z) { return cplx(0, -2) / ((1.0 + z) * (1.0 + z)); }, cplx(-1, 0));
  for (cplx u : {cplx(0.3, 0.1), cplx(-0.2, -0.5), cplx(0.05, 0.6)})
    for (cplx v : {cplx(-0.4, 0.2), cplx(0.1, -0.3), cplx(0.55, 0.35)}) {
      CHECK(std::abs(d.f0(u, v) - img.f0(u, v)) <= 1e-10);
      CHECK(std::abs(d.f1(u, v) - img.f1(u, v)) <= 1e-10);
      CHECK(std::abs(d.fp(u, v) - img.fp(u, v)) <= 1e-10);
    }

  // the f0 channel vanishes identically as v reaches the boundary circle
  for (double ang : {0.3, 1.7, 2.9, 4.4})
    CHECK(std::abs(d.f0(cplx(0.2, -0.1), std::polar(1.0, ang))) <= 1e-12);

  // both channels share the pole 1/(pi(v-u)), so fp has residue 2/pi
  cplx u0(0.15, -0.2), h(1e-6, 0);
  CHECK(std::abs(h * d.fp(u0, u0 + h) - cplx(2 / pi, 0)) <= 1e-5);
}

TEST_CASE("mesh inverse entries approach the coupling predictions as the mesh refines") {
  auto d = CouplingFunctions::disc();
  std::vector<std::pair<cplx, cplx>> pairs = {
      {{-0.30, 0.10}, {0.45, 0.15}},  {{-0.30, 0.10}, {0.15, -0.52}},
      {{0.05, -0.35}, {-0.10, 0.45}}, {{0.40, 0.30}, {-0.25, -0.35}},
      {{0.00, 0.45}, {0.30, -0.25}},  {{-0.45, -0.15}, {0.25, 0.40}},
  };
  double prev = 1e300;
  for (double eps : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
    auto res = coupling_compare_many(d, eps, pairs);
    double sum = 0;
    for (const CouplingComparison& c : res) {
      sum += c.error / eps;
      // entries are exactly real or exactly imaginary per class; the
      // prediction picks the same axis
      if (std::abs(c.continuum.real()) > 0)
        CHECK(std::abs(c.discrete.imag()) <= 1e-9);
      else
        CHECK(std::abs(c.discrete.real()) <= 1e-9);
      CHECK(c.error <= 0.15 * eps);
    }
    CHECK(sum < prev);
    prev = sum;
  }
}

TEST_CASE("coupling comparisons refuse bad domains and short distances") {
  auto hp = CouplingFunctions::half_plane();
  CHECK_THROWS_AS(coupling_compare(hp, 1.0 / 16, cplx(0, 1), cplx(0, 2)),
                  std::invalid_argument);
  auto d = CouplingFunctions::disc();
  CHECK_THROWS_AS(coupling_compare(d, 1.0 / 16, cplx(0.0, 0.0), cplx(0.3, 0.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(coupling_compare(d, 0.03, cplx(-0.3, 0), cplx(0.4, 0)),
                  std::invalid_argument);  // eps not 1/(2k)
}
