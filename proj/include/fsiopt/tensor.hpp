#pragma once

#include <array>
#include <cmath>

namespace fsiopt {

/// 2-vector in the reference plane.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  double operator[](int i) const { return i == 0 ? x : y; }
  double &operator[](int i) { return i == 0 ? x : y; }

  Vec2 &operator+=(const Vec2 &o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2 &operator-=(const Vec2 &o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  Vec2 &operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }
};

inline Vec2 operator+(Vec2 a, const Vec2 &b) { return a += b; }
inline Vec2 operator-(Vec2 a, const Vec2 &b) { return a -= b; }
inline Vec2 operator*(double s, Vec2 a) { return a *= s; }
inline Vec2 operator*(Vec2 a, double s) { return a *= s; }
inline double dot(const Vec2 &a, const Vec2 &b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2 &a) { return std::sqrt(dot(a, a)); }

/// Dense 2x2 matrix, row-major: m(i, j) is row i, column j.
/// Gradients of vector fields use (grad v)(i, j) = d v_i / d x_j.
struct Mat2 {
  std::array<double, 4> a{0.0, 0.0, 0.0, 0.0};

  static Mat2 identity() { return Mat2{{1.0, 0.0, 0.0, 1.0}}; }
  static Mat2 diag(double d0, double d1) { return Mat2{{d0, 0.0, 0.0, d1}}; }

  double operator()(int i, int j) const { return a[2 * i + j]; }
  double &operator()(int i, int j) { return a[2 * i + j]; }

  Mat2 &operator+=(const Mat2 &o) {
    for (int k = 0; k < 4; ++k)
      a[k] += o.a[k];
    return *this;
  }
  Mat2 &operator-=(const Mat2 &o) {
    for (int k = 0; k < 4; ++k)
      a[k] -= o.a[k];
    return *this;
  }
  Mat2 &operator*=(double s) {
    for (auto &v : a)
      v *= s;
    return *this;
  }
};

inline Mat2 operator+(Mat2 a, const Mat2 &b) { return a += b; }
inline Mat2 operator-(Mat2 a, const Mat2 &b) { return a -= b; }
inline Mat2 operator*(double s, Mat2 a) { return a *= s; }
inline Mat2 operator*(Mat2 a, double s) { return a *= s; }

inline Mat2 operator*(const Mat2 &l, const Mat2 &r) {
  Mat2 m;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      m(i, j) = l(i, 0) * r(0, j) + l(i, 1) * r(1, j);
  return m;
}

inline Vec2 operator*(const Mat2 &m, const Vec2 &v) {
  return {m(0, 0) * v.x + m(0, 1) * v.y, m(1, 0) * v.x + m(1, 1) * v.y};
}

inline Mat2 transpose(const Mat2 &m) { return Mat2{{m.a[0], m.a[2], m.a[1], m.a[3]}}; }
inline double trace(const Mat2 &m) { return m.a[0] + m.a[3]; }
inline double det(const Mat2 &m) { return m.a[0] * m.a[3] - m.a[1] * m.a[2]; }

/// Inverse; caller guarantees det(m) != 0.
inline Mat2 inverse(const Mat2 &m) {
  const double d = det(m);
  return Mat2{{m.a[3] / d, -m.a[1] / d, -m.a[2] / d, m.a[0] / d}};
}

/// Frobenius product A : B.
inline double contract(const Mat2 &l, const Mat2 &r) {
  return l.a[0] * r.a[0] + l.a[1] * r.a[1] + l.a[2] * r.a[2] + l.a[3] * r.a[3];
}

/// Outer product a b^T.
inline Mat2 outer(const Vec2 &l, const Vec2 &r) {
  return Mat2{{l.x * r.x, l.x * r.y, l.y * r.x, l.y * r.y}};
}

} // namespace fsiopt
