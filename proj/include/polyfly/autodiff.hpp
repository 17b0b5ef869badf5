#pragma once

// Forward-mode automatic differentiation.
//
// Dual<T, N> carries a value and N directional derivatives. Nesting
// (Dual<Dual<double, N>, N>) yields exact second derivatives, which is how the
// collision constraints obtain Hessians of the flatness-dependent pose maps.

#include <array>
#include <cmath>
#include <type_traits>

#include <Eigen/Core>

namespace polyfly::ad {

template <typename T, int N>
struct Dual {
  T a{};
  std::array<T, N> d{};

  Dual() = default;
  Dual(double value) : a(value) {}  // NOLINT(google-explicit-constructor)
  template <typename U = T>
    requires(!std::is_same_v<U, double>)
  Dual(const T& value) : a(value) {}  // NOLINT(google-explicit-constructor)

  /// Independent variable number `index`.
  static Dual variable(const T& value, int index) {
    Dual x(value);
    x.d[index] = T(1.0);
    return x;
  }

  Dual& operator+=(const Dual& o) { return *this = *this + o; }
  Dual& operator-=(const Dual& o) { return *this = *this - o; }
  Dual& operator*=(const Dual& o) { return *this = *this * o; }
  Dual& operator/=(const Dual& o) { return *this = *this / o; }
};

template <typename T>
struct is_dual : std::false_type {};
template <typename T, int N>
struct is_dual<Dual<T, N>> : std::true_type {};

template <typename T, int N>
Dual<T, N> operator+(const Dual<T, N>& x, const Dual<T, N>& y) {
  Dual<T, N> r(x.a + y.a);
  for (int i = 0; i < N; ++i) r.d[i] = x.d[i] + y.d[i];
  return r;
}
template <typename T, int N>
Dual<T, N> operator-(const Dual<T, N>& x, const Dual<T, N>& y) {
  Dual<T, N> r(x.a - y.a);
  for (int i = 0; i < N; ++i) r.d[i] = x.d[i] - y.d[i];
  return r;
}
template <typename T, int N>
Dual<T, N> operator-(const Dual<T, N>& x) {
  Dual<T, N> r(-x.a);
  for (int i = 0; i < N; ++i) r.d[i] = -x.d[i];
  return r;
}
template <typename T, int N>
Dual<T, N> operator+(const Dual<T, N>& x) {
  return x;
}
template <typename T, int N>
Dual<T, N> operator*(const Dual<T, N>& x, const Dual<T, N>& y) {
  Dual<T, N> r(x.a * y.a);
  for (int i = 0; i < N; ++i) r.d[i] = x.d[i] * y.a + x.a * y.d[i];
  return r;
}
template <typename T, int N>
Dual<T, N> operator/(const Dual<T, N>& x, const Dual<T, N>& y) {
  const T inv = T(1.0) / y.a;
  const T q = x.a * inv;
  Dual<T, N> r(q);
  for (int i = 0; i < N; ++i) r.d[i] = (x.d[i] - q * y.d[i]) * inv;
  return r;
}

// Mixed arithmetic with plain doubles.
template <typename T, int N>
Dual<T, N> operator+(const Dual<T, N>& x, double s) {
  Dual<T, N> r = x;
  r.a = r.a + s;
  return r;
}
template <typename T, int N>
Dual<T, N> operator+(double s, const Dual<T, N>& x) {
  return x + s;
}
template <typename T, int N>
Dual<T, N> operator-(const Dual<T, N>& x, double s) {
  return x + (-s);
}
template <typename T, int N>
Dual<T, N> operator-(double s, const Dual<T, N>& x) {
  return (-x) + s;
}
template <typename T, int N>
Dual<T, N> operator*(const Dual<T, N>& x, double s) {
  Dual<T, N> r(x.a * s);
  for (int i = 0; i < N; ++i) r.d[i] = x.d[i] * s;
  return r;
}
template <typename T, int N>
Dual<T, N> operator*(double s, const Dual<T, N>& x) {
  return x * s;
}
template <typename T, int N>
Dual<T, N> operator/(const Dual<T, N>& x, double s) {
  return x * (1.0 / s);
}
template <typename T, int N>
Dual<T, N> operator/(double s, const Dual<T, N>& x) {
  return Dual<T, N>(s) / x;
}

template <typename T, int N>
bool operator<(const Dual<T, N>& x, const Dual<T, N>& y) {
  return x.a < y.a;
}
template <typename T, int N>
bool operator>(const Dual<T, N>& x, const Dual<T, N>& y) {
  return x.a > y.a;
}
template <typename T, int N>
bool operator<=(const Dual<T, N>& x, const Dual<T, N>& y) {
  return x.a <= y.a;
}
template <typename T, int N>
bool operator>=(const Dual<T, N>& x, const Dual<T, N>& y) {
  return x.a >= y.a;
}
template <typename T, int N>
bool operator==(const Dual<T, N>& x, const Dual<T, N>& y) {
  return x.a == y.a;
}
template <typename T, int N>
bool operator!=(const Dual<T, N>& x, const Dual<T, N>& y) {
  return x.a != y.a;
}

template <typename T, int N>
Dual<T, N> sqrt(const Dual<T, N>& x) {
  using std::sqrt;
  const T s = sqrt(x.a);
  const T half_inv = T(0.5) / s;
  Dual<T, N> r(s);
  for (int i = 0; i < N; ++i) r.d[i] = x.d[i] * half_inv;
  return r;
}
template <typename T, int N>
Dual<T, N> sin(const Dual<T, N>& x) {
  using std::cos;
  using std::sin;
  Dual<T, N> r(sin(x.a));
  const T c = cos(x.a);
  for (int i = 0; i < N; ++i) r.d[i] = x.d[i] * c;
  return r;
}
template <typename T, int N>
Dual<T, N> cos(const Dual<T, N>& x) {
  using std::cos;
  using std::sin;
  Dual<T, N> r(cos(x.a));
  const T s = -sin(x.a);
  for (int i = 0; i < N; ++i) r.d[i] = x.d[i] * s;
  return r;
}
template <typename T, int N>
Dual<T, N> abs(const Dual<T, N>& x) {
  return x.a < T(0.0) ? -x : x;
}

/// Innermost double value of a (possibly nested) dual number.
inline double value_of(double x) { return x; }
template <typename T, int N>
double value_of(const Dual<T, N>& x) {
  return value_of(x.a);
}

/// Second-order jet over N variables: first derivatives and the Hessian.
template <int N>
using Jet2 = Dual<Dual<double, N>, N>;

template <int N>
Jet2<N> jet2_variable(double value, int index) {
  Jet2<N> x;
  x.a = Dual<double, N>::variable(value, index);
  x.d[index] = Dual<double, N>(1.0);
  return x;
}

template <int N>
double jet2_grad(const Jet2<N>& x, int i) {
  return x.a.d[i];
}
template <int N>
double jet2_hess(const Jet2<N>& x, int i, int j) {
  return x.d[i].d[j];
}

}  // namespace polyfly::ad

namespace Eigen {

template <typename T, int N>
struct NumTraits<polyfly::ad::Dual<T, N>> : GenericNumTraits<polyfly::ad::Dual<T, N>> {
  using Real = polyfly::ad::Dual<T, N>;
  using NonInteger = polyfly::ad::Dual<T, N>;
  using Nested = polyfly::ad::Dual<T, N>;
  using Literal = polyfly::ad::Dual<T, N>;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 2,
    MulCost = 3,
  };
  static Real epsilon() { return Real(std::numeric_limits<double>::epsilon()); }
  static Real dummy_precision() { return Real(1e-12); }
  static Real highest() { return Real(std::numeric_limits<double>::max()); }
  static Real lowest() { return Real(std::numeric_limits<double>::lowest()); }
  static int digits10() { return std::numeric_limits<double>::digits10; }
};

template <typename T, int N, typename BinaryOp>
struct ScalarBinaryOpTraits<polyfly::ad::Dual<T, N>, double, BinaryOp> {
  using ReturnType = polyfly::ad::Dual<T, N>;
};
template <typename T, int N, typename BinaryOp>
struct ScalarBinaryOpTraits<double, polyfly::ad::Dual<T, N>, BinaryOp> {
  using ReturnType = polyfly::ad::Dual<T, N>;
};

}  // namespace Eigen
