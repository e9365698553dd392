#pragma once

// Adaptive Gauss-Kronrod quadrature (G7/K15), scalar and tensor-product.
// Subdivision is dyadic, so integrable endpoint singularities (log, 1/sqrt)
// converge geometrically; a depth cap guards against non-integrable input.

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>

namespace dimerlab {

namespace gk {
// 15-point Kronrod nodes/weights on [-1,1] and the embedded 7-point Gauss
// weights (nodes 1,3,...,13 of the Kronrod set).
inline constexpr std::array<double, 15> nodes = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,                0.207784955007898,
    0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};
inline constexpr std::array<double, 15> kw = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
inline constexpr std::array<double, 7> gw = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870};
}  // namespace gk

template <typename F, typename R = std::invoke_result_t<F, double>>
std::pair<R, double> gk15_panel(F&& f, double a, double b) {
  double h = (b - a) / 2, c = (a + b) / 2;
  R rk{}, rg{};
  for (int i = 0; i < 15; ++i) {
    R v = f(c + h * gk::nodes[i]);
    rk += gk::kw[i] * v;
    if (i % 2 == 1) rg += gk::gw[i / 2] * v;
  }
  rk *= h;
  rg *= h;
  return {rk, std::abs(rk - rg)};
}

struct QuadOptions {
  double abs_tol = 1e-10;
  int max_depth = 48;
};

template <typename F, typename R = std::invoke_result_t<F, double>>
R adaptive_quad(F&& f, double a, double b, QuadOptions opt = {}) {
  struct Rec {
    F& f;
    int max_depth;
    R run(double a, double b, double tol, int depth) {
      auto [v, err] = gk15_panel(f, a, b);
      if (err <= tol || depth >= max_depth) return v;
      double c = (a + b) / 2;
      return run(a, c, tol / 2, depth + 1) + run(c, b, tol / 2, depth + 1);
    }
  } rec{f, opt.max_depth};
  return rec.run(a, b, opt.abs_tol, 0);
}

// Tensor-product rule: outer adaptive in x of an inner adaptive integral in y.
// The inner tolerance is tightened so inner error does not poison the outer
// error estimate.
template <typename F2>
auto adaptive_quad_2d(F2&& f, double ax, double bx, double ay, double by,
                      QuadOptions opt = {}) {
  QuadOptions inner = opt;
  inner.abs_tol = opt.abs_tol / (bx - ax) / 8;
  auto outer = [&](double x) {
    return adaptive_quad([&](double y) { return f(x, y); }, ay, by, inner);
  };
  return adaptive_quad(outer, ax, bx, opt);
}

}  // namespace dimerlab
