#pragma once

// Small fixed-capacity vectors and matrices. Every object in the catalog
// lives in one or two dimensions, so storage is inline and steps never
// allocate.

#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <ostream>

namespace gdchaos {

inline constexpr std::size_t kMaxDim = 2;

class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t dim) : dim_(dim) { assert(dim >= 1 && dim <= kMaxDim); }
  Vec(std::initializer_list<double> xs) : dim_(xs.size()) {
    assert(dim_ >= 1 && dim_ <= kMaxDim);
    std::size_t i = 0;
    for (double x : xs) c_[i++] = x;
  }
  static Vec scalar(double x) { return Vec{x}; }
  static Vec zeros(std::size_t dim) { return Vec(dim); }

  std::size_t dim() const { return dim_; }
  double& operator[](std::size_t i) { return c_[i]; }
  double operator[](std::size_t i) const { return c_[i]; }
  const double* data() const { return c_.data(); }

  Vec& operator+=(const Vec& o) {
    for (std::size_t i = 0; i < dim_; ++i) c_[i] += o.c_[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (std::size_t i = 0; i < dim_; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (std::size_t i = 0; i < dim_; ++i) c_[i] *= s;
    return *this;
  }
  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(double s, Vec a) { return a *= s; }
  friend Vec operator*(Vec a, double s) { return a *= s; }
  friend Vec operator-(Vec a) { return a *= -1.0; }

  friend bool operator==(const Vec& a, const Vec& b) {
    if (a.dim_ != b.dim_) return false;
    for (std::size_t i = 0; i < a.dim_; ++i)
      if (a.c_[i] != b.c_[i]) return false;
    return true;
  }

  double dot(const Vec& o) const {
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) s += c_[i] * o.c_[i];
    return s;
  }
  double norm() const { return std::sqrt(dot(*this)); }
  double max_abs() const {
    double m = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) m = std::fmax(m, std::fabs(c_[i]));
    return m;
  }
  bool all_finite() const {
    for (std::size_t i = 0; i < dim_; ++i)
      if (!std::isfinite(c_[i])) return false;
    return true;
  }

  friend std::ostream& operator<<(std::ostream& os, const Vec& v) {
    os << '(';
    for (std::size_t i = 0; i < v.dim_; ++i) os << (i ? ", " : "") << v.c_[i];
    return os << ')';
  }

 private:
  std::array<double, kMaxDim> c_{};
  std::size_t dim_ = 1;
};

/// Square matrix of order 1 or 2, row-major.
class Mat {
 public:
  Mat() = default;
  explicit Mat(std::size_t dim) : dim_(dim) { assert(dim >= 1 && dim <= kMaxDim); }
  static Mat scalar(double a) {
    Mat m(1);
    m(0, 0) = a;
    return m;
  }
  static Mat identity(std::size_t dim) {
    Mat m(dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }
  static Mat diag(const Vec& d) {
    Mat m(d.dim());
    for (std::size_t i = 0; i < d.dim(); ++i) m(i, i) = d[i];
    return m;
  }
  static Mat from_rows(double a, double b, double c, double d) {
    Mat m(2);
    m(0, 0) = a;
    m(0, 1) = b;
    m(1, 0) = c;
    m(1, 1) = d;
    return m;
  }

  std::size_t dim() const { return dim_; }
  double& operator()(std::size_t r, std::size_t c) { return a_[r * kMaxDim + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a_[r * kMaxDim + c]; }

  Mat& operator+=(const Mat& o) {
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
  }
  Mat& operator*=(double s) {
    for (double& x : a_) x *= s;
    return *this;
  }
  friend Mat operator+(Mat a, const Mat& b) { return a += b; }
  friend Mat operator-(Mat a, const Mat& b) { return a += (-1.0) * b; }
  friend Mat operator*(double s, Mat a) { return a *= s; }

  friend Vec operator*(const Mat& m, const Vec& v) {
    Vec out(m.dim_);
    for (std::size_t r = 0; r < m.dim_; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < m.dim_; ++c) s += m(r, c) * v[c];
      out[r] = s;
    }
    return out;
  }
  friend Mat operator*(const Mat& a, const Mat& b) {
    Mat out(a.dim_);
    for (std::size_t r = 0; r < a.dim_; ++r)
      for (std::size_t c = 0; c < a.dim_; ++c) {
        double s = 0.0;
        for (std::size_t k = 0; k < a.dim_; ++k) s += a(r, k) * b(k, c);
        out(r, c) = s;
      }
    return out;
  }

  double det() const {
    if (dim_ == 1) return a_[0];
    return (*this)(0, 0) * (*this)(1, 1) - (*this)(0, 1) * (*this)(1, 0);
  }

  Mat inverse() const {
    if (dim_ == 1) return scalar(1.0 / a_[0]);
    const double d = det();
    return from_rows((*this)(1, 1) / d, -(*this)(0, 1) / d, -(*this)(1, 0) / d,
                     (*this)(0, 0) / d);
  }

  /// Largest singular value, closed form in 2D:
  /// (hypot(a+d, b-c) + hypot(a-d, b+c)) / 2.
  double spectral_norm() const {
    if (dim_ == 1) return std::fabs(a_[0]);
    const double a = (*this)(0, 0), b = (*this)(0, 1), c = (*this)(1, 0), d = (*this)(1, 1);
    return 0.5 * (std::hypot(a + d, b - c) + std::hypot(a - d, b + c));
  }

  /// Eigenvalues of a symmetric matrix, ascending.
  std::array<double, kMaxDim> symmetric_eigenvalues() const {
    if (dim_ == 1) return {a_[0], a_[0]};
    const double a = (*this)(0, 0), b = (*this)(0, 1), d = (*this)(1, 1);
    const double mid = 0.5 * (a + d);
    const double rad = std::hypot(0.5 * (a - d), b);
    return {mid - rad, mid + rad};
  }

 private:
  std::array<double, kMaxDim * kMaxDim> a_{};
  std::size_t dim_ = 1;
};

}  // namespace gdchaos
