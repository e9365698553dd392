#pragma once

// Exact scalar types and dense exact linear algebra.
//
// Matching counts and inclusion probabilities are certified by exact
// determinants: entries live in Z[i] (unit or integer edge weights, with the
// vertical factor i) or in Q(i) (rational weights).  Floating point enters
// only through explicit conversion.

#include <cassert>
#include <complex>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>

namespace dimerlab {

using BigInt = mpz_class;
using BigRat = mpq_class;

inline double to_double(const BigInt& x) { return x.get_d(); }
inline double to_double(const BigRat& x) { return x.get_d(); }

// Quotient asserting zero remainder; elimination steps below rely on it.
inline BigInt divide_exact(const BigInt& a, const BigInt& b) {
  BigInt q, r;
  mpz_tdiv_qr(q.get_mpz_t(), r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  if (r != 0) throw std::logic_error("divide_exact: inexact division");
  return q;
}

// ---------------------------------------------------------------------------
// Gaussian integers a + b*i.

struct GaussianInt {
  BigInt re, im;

  GaussianInt() : re(0), im(0) {}
  GaussianInt(long r) : re(r), im(0) {}
  GaussianInt(BigInt r) : re(std::move(r)), im(0) {}
  GaussianInt(BigInt r, BigInt i) : re(std::move(r)), im(std::move(i)) {}

  static GaussianInt unit_i() { return GaussianInt(BigInt(0), BigInt(1)); }

  bool is_zero() const { return re == 0 && im == 0; }
  GaussianInt conj() const { return {re, -im}; }
  BigInt norm() const { return re * re + im * im; }

  GaussianInt operator-() const { return {-re, -im}; }
  GaussianInt operator+(const GaussianInt& o) const { return {re + o.re, im + o.im}; }
  GaussianInt operator-(const GaussianInt& o) const { return {re - o.re, im - o.im}; }
  GaussianInt operator*(const GaussianInt& o) const {
    return {re * o.re - im * o.im, re * o.im + im * o.re};
  }
  bool operator==(const GaussianInt& o) const { return re == o.re && im == o.im; }
  bool operator!=(const GaussianInt& o) const { return !(*this == o); }

  std::complex<double> to_complex() const { return {to_double(re), to_double(im)}; }
};

// Exact quotient in Z[i]; throws if b does not divide a.
inline GaussianInt divide_exact(const GaussianInt& a, const GaussianInt& b) {
  BigInt n = b.norm();
  if (n == 0) throw std::logic_error("divide_exact: zero divisor");
  GaussianInt p = a * b.conj();
  return {divide_exact(p.re, n), divide_exact(p.im, n)};
}

inline std::ostream& operator<<(std::ostream& os, const GaussianInt& g) {
  return os << g.re.get_str() << (g.im >= 0 ? "+" : "") << g.im.get_str() << "i";
}

// ---------------------------------------------------------------------------
// Gaussian rationals a + b*i with a, b in Q.

struct GaussianRat {
  BigRat re, im;

  GaussianRat() : re(0), im(0) {}
  GaussianRat(long r) : re(r), im(0) {}
  GaussianRat(BigRat r) : re(std::move(r)), im(0) {}
  GaussianRat(BigRat r, BigRat i) : re(std::move(r)), im(std::move(i)) {}
  GaussianRat(const GaussianInt& g) : re(g.re), im(g.im) {}

  static GaussianRat unit_i() { return GaussianRat(BigRat(0), BigRat(1)); }

  bool is_zero() const { return re == 0 && im == 0; }
  bool is_real() const { return im == 0; }
  GaussianRat conj() const { return {re, -im}; }
  BigRat norm() const { return re * re + im * im; }

  GaussianRat operator-() const { return {-re, -im}; }
  GaussianRat operator+(const GaussianRat& o) const { return {re + o.re, im + o.im}; }
  GaussianRat operator-(const GaussianRat& o) const { return {re - o.re, im - o.im}; }
  GaussianRat operator*(const GaussianRat& o) const {
    return {re * o.re - im * o.im, re * o.im + im * o.re};
  }
  GaussianRat operator/(const GaussianRat& o) const {
    BigRat n = o.norm();
    if (n == 0) throw std::logic_error("GaussianRat: division by zero");
    GaussianRat p = *this * o.conj();
    return {p.re / n, p.im / n};
  }
  GaussianRat& operator+=(const GaussianRat& o) { return *this = *this + o; }
  GaussianRat& operator-=(const GaussianRat& o) { return *this = *this - o; }
  GaussianRat& operator*=(const GaussianRat& o) { return *this = *this * o; }
  bool operator==(const GaussianRat& o) const { return re == o.re && im == o.im; }
  bool operator!=(const GaussianRat& o) const { return !(*this == o); }

  std::complex<double> to_complex() const { return {to_double(re), to_double(im)}; }
};

inline std::ostream& operator<<(std::ostream& os, const GaussianRat& g) {
  return os << g.re.get_str() << (g.im >= 0 ? "+" : "") << g.im.get_str() << "i";
}

// ---------------------------------------------------------------------------
// Q(sqrt(D)): a + b*sqrt(D).  Small field used where algebraic identities are
// checked exactly at quadratic-irrational points.

template <long D>
struct QuadExt {
  BigRat a, b;

  QuadExt() : a(0), b(0) {}
  QuadExt(long x) : a(x), b(0) {}
  QuadExt(BigRat x) : a(std::move(x)), b(0) {}
  QuadExt(BigRat x, BigRat y) : a(std::move(x)), b(std::move(y)) {}

  static QuadExt sqrt_d() { return QuadExt(BigRat(0), BigRat(1)); }

  bool is_zero() const { return a == 0 && b == 0; }
  QuadExt operator-() const { return {-a, -b}; }
  QuadExt operator+(const QuadExt& o) const { return {a + o.a, b + o.b}; }
  QuadExt operator-(const QuadExt& o) const { return {a - o.a, b - o.b}; }
  QuadExt operator*(const QuadExt& o) const {
    return {a * o.a + BigRat(D) * b * o.b, a * o.b + b * o.a};
  }
  QuadExt operator/(const QuadExt& o) const {
    BigRat n = o.a * o.a - BigRat(D) * o.b * o.b;
    if (n == 0) throw std::logic_error("QuadExt: division by zero");
    QuadExt p = *this * QuadExt{o.a, -o.b};
    return {p.a / n, p.b / n};
  }
  bool operator==(const QuadExt& o) const { return a == o.a && b == o.b; }
  bool operator!=(const QuadExt& o) const { return !(*this == o); }

  double to_double_val(double sqrt_d) const { return to_double(a) + to_double(b) * sqrt_d; }
};

// ---------------------------------------------------------------------------
// Dense matrix over an exact scalar.  Row-major, no expression templates;
// the heavy lifting is in the elimination routines below.

template <typename T>
class Mat {
 public:
  Mat() : rows_(0), cols_(0) {}
  Mat(int rows, int cols) : rows_(rows), cols_(cols), d_(size_t(rows) * cols) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  T& operator()(int i, int j) { return d_[size_t(i) * cols_ + j]; }
  const T& operator()(int i, int j) const { return d_[size_t(i) * cols_ + j]; }

  bool operator==(const Mat& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && d_ == o.d_;
  }

 private:
  int rows_, cols_;
  std::vector<T> d_;
};

/*
 * Fraction-free (Bareiss) determinant over Z[i].
 *
 * Classical Gaussian elimination over an integral domain forces fractions;
 * Bareiss' one-step scheme keeps every intermediate entry in the domain by
 * dividing each 2x2 cross-multiplication by the previous pivot, a division
 * that is exact by Sylvester's identity.  Entry growth is bounded by minor
 * size rather than doubling per step, which keeps GMP limb counts small for
 * the matrix sizes met here (a few hundred rows).
 */
inline GaussianInt bareiss_det(Mat<GaussianInt> m) {
  int n = m.rows();
  if (n != m.cols()) throw std::logic_error("bareiss_det: matrix not square");
  if (n == 0) return GaussianInt(1);
  GaussianInt prev(1);
  int sign = 1;
  for (int k = 0; k + 1 < n; ++k) {
    if (m(k, k).is_zero()) {
      int p = -1;
      for (int i = k + 1; i < n; ++i)
        if (!m(i, k).is_zero()) { p = i; break; }
      if (p < 0) return GaussianInt(0);
      for (int j = k; j < n; ++j) std::swap(m(k, j), m(p, j));
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i) {
      for (int j = k + 1; j < n; ++j) {
        GaussianInt num = m(i, j) * m(k, k) - m(i, k) * m(k, j);
        m(i, j) = divide_exact(num, prev);
      }
      m(i, k) = GaussianInt(0);
    }
    prev = m(k, k);
  }
  GaussianInt det = m(n - 1, n - 1);
  return sign < 0 ? -det : det;
}

// Determinant over Q(i): clear row denominators, run Bareiss over Z[i],
// divide the scale back out.
inline GaussianRat exact_det(const Mat<GaussianRat>& m) {
  int n = m.rows();
  if (n != m.cols()) throw std::logic_error("exact_det: matrix not square");
  if (n == 0) return GaussianRat(1);
  Mat<GaussianInt> zi(n, n);
  BigRat scale(1);
  for (int i = 0; i < n; ++i) {
    BigInt l(1);
    for (int j = 0; j < n; ++j) {
      mpz_class dr = m(i, j).re.get_den(), di = m(i, j).im.get_den();
      mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), dr.get_mpz_t());
      mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), di.get_mpz_t());
    }
    scale *= BigRat(l);
    for (int j = 0; j < n; ++j) {
      BigRat r = m(i, j).re * BigRat(l), im = m(i, j).im * BigRat(l);
      r.canonicalize();
      im.canonicalize();
      assert(r.get_den() == 1 && im.get_den() == 1);
      zi(i, j) = GaussianInt(r.get_num(), im.get_num());
    }
  }
  GaussianInt d = bareiss_det(zi);
  BigRat inv_scale = BigRat(1) / scale;
  return GaussianRat(BigRat(d.re) * inv_scale, BigRat(d.im) * inv_scale);
}

// Gauss-Jordan inverse over Q(i); nullopt on singular input.
inline std::optional<Mat<GaussianRat>> exact_inverse(Mat<GaussianRat> m) {
  int n = m.rows();
  if (n != m.cols()) throw std::logic_error("exact_inverse: matrix not square");
  Mat<GaussianRat> inv(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) inv(i, j) = GaussianRat(i == j ? 1 : 0);
  for (int k = 0; k < n; ++k) {
    int p = -1;
    for (int i = k; i < n; ++i)
      if (!m(i, k).is_zero()) { p = i; break; }
    if (p < 0) return std::nullopt;
    if (p != k)
      for (int j = 0; j < n; ++j) {
        std::swap(m(k, j), m(p, j));
        std::swap(inv(k, j), inv(p, j));
      }
    GaussianRat piv = m(k, k);
    for (int j = 0; j < n; ++j) {
      m(k, j) = m(k, j) / piv;
      inv(k, j) = inv(k, j) / piv;
    }
    for (int i = 0; i < n; ++i) {
      if (i == k || m(i, k).is_zero()) continue;
      GaussianRat f = m(i, k);
      for (int j = 0; j < n; ++j) {
        m(i, j) -= f * m(k, j);
        inv(i, j) -= f * inv(k, j);
      }
    }
  }
  return inv;
}

// Determinant of an integer matrix (spanning-tree minors and friends).
inline BigInt bareiss_det_int(Mat<BigInt> m) {
  int n = m.rows();
  if (n != m.cols()) throw std::logic_error("bareiss_det_int: matrix not square");
  if (n == 0) return BigInt(1);
  Mat<GaussianInt> g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = GaussianInt(m(i, j));
  GaussianInt d = bareiss_det(g);
  assert(d.im == 0);
  return d.re;
}

}  // namespace dimerlab
