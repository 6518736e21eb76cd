#pragma once

// Forward-mode dual numbers with a fixed number of directional derivatives.
//
// Dual<T, W> carries a value and W partials of type T. Nesting
// Dual<Dual<double, W>, W> yields second derivatives (Hessians) without a
// separate type. All elementary functions follow the chain rule exactly; any
// evaluation outside the function's domain throws DomainError rather than
// producing NaN.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace fishsim::ad {

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

template <class T, int W>
struct Dual;

template <class T>
struct is_dual : std::false_type {};
template <class T, int W>
struct is_dual<Dual<T, W>> : std::true_type {};
template <class T>
inline constexpr bool is_dual_v = is_dual<std::remove_cvref_t<T>>::value;

template <class U>
concept Arithmetic = std::is_arithmetic_v<U>;

template <class T, int W>
struct Dual {
  static_assert(W >= 1, "a dual number needs at least one direction");
  using value_type = T;
  static constexpr int width = W;

  T value{};
  std::array<T, W> partials{};

  constexpr Dual() = default;
  // Constants promote implicitly so that generic code can mix literals in.
  constexpr Dual(double v) : value(v) {}  // NOLINT(google-explicit-constructor)
  constexpr Dual(const T& v, const std::array<T, W>& d) : value(v), partials(d) {}

  /// Independent variable seeded along direction `index`.
  static constexpr Dual variable(const T& v, int index) {
    Dual out;
    out.value = v;
    out.partials[index] = T(1.0);
    return out;
  }

  constexpr Dual& operator+=(const Dual& o) {
    value += o.value;
    for (int i = 0; i < W; ++i) partials[i] += o.partials[i];
    return *this;
  }
  constexpr Dual& operator-=(const Dual& o) {
    value -= o.value;
    for (int i = 0; i < W; ++i) partials[i] -= o.partials[i];
    return *this;
  }
  constexpr Dual& operator*=(const Dual& o) { return *this = *this * o; }
  constexpr Dual& operator/=(const Dual& o) { return *this = *this / o; }

  template <Arithmetic U>
  constexpr Dual& operator+=(U c) {
    value += static_cast<double>(c);
    return *this;
  }
  template <Arithmetic U>
  constexpr Dual& operator-=(U c) {
    value -= static_cast<double>(c);
    return *this;
  }
  template <Arithmetic U>
  constexpr Dual& operator*=(U c) {
    value *= static_cast<double>(c);
    for (auto& p : partials) p *= static_cast<double>(c);
    return *this;
  }
};

// ---------------------------------------------------------------------------
// value extraction through any nesting depth

inline constexpr double value_of(double x) { return x; }

template <class T, int W>
constexpr double value_of(const Dual<T, W>& x) {
  return value_of(x.value);
}

// ---------------------------------------------------------------------------
// arithmetic

template <class T, int W>
constexpr Dual<T, W> operator-(const Dual<T, W>& a) {
  Dual<T, W> out;
  out.value = -a.value;
  for (int i = 0; i < W; ++i) out.partials[i] = -a.partials[i];
  return out;
}

template <class T, int W>
constexpr Dual<T, W> operator+(Dual<T, W> a, const Dual<T, W>& b) {
  return a += b;
}
template <class T, int W>
constexpr Dual<T, W> operator-(Dual<T, W> a, const Dual<T, W>& b) {
  return a -= b;
}
template <class T, int W, Arithmetic U>
constexpr Dual<T, W> operator+(Dual<T, W> a, U c) {
  return a += c;
}
template <class T, int W, Arithmetic U>
constexpr Dual<T, W> operator+(U c, Dual<T, W> a) {
  return a += c;
}
template <class T, int W, Arithmetic U>
constexpr Dual<T, W> operator-(Dual<T, W> a, U c) {
  return a -= c;
}
template <class T, int W, Arithmetic U>
constexpr Dual<T, W> operator-(U c, const Dual<T, W>& a) {
  Dual<T, W> out = -a;
  out.value += static_cast<double>(c);
  return out;
}

template <class T, int W>
constexpr Dual<T, W> operator*(const Dual<T, W>& a, const Dual<T, W>& b) {
  Dual<T, W> out;
  out.value = a.value * b.value;
  for (int i = 0; i < W; ++i) out.partials[i] = a.partials[i] * b.value + a.value * b.partials[i];
  return out;
}
template <class T, int W, Arithmetic U>
constexpr Dual<T, W> operator*(Dual<T, W> a, U c) {
  return a *= c;
}
template <class T, int W, Arithmetic U>
constexpr Dual<T, W> operator*(U c, Dual<T, W> a) {
  return a *= c;
}

template <class T, int W>
Dual<T, W> operator/(const Dual<T, W>& a, const Dual<T, W>& b) {
  if (value_of(b) == 0.0) throw DomainError("dual division by zero");
  const T inv = T(1.0) / b.value;
  Dual<T, W> out;
  out.value = a.value * inv;
  for (int i = 0; i < W; ++i) out.partials[i] = (a.partials[i] - out.value * b.partials[i]) * inv;
  return out;
}
template <class T, int W, Arithmetic U>
Dual<T, W> operator/(Dual<T, W> a, U c) {
  if (c == 0) throw DomainError("dual division by zero");
  return a *= (1.0 / static_cast<double>(c));
}
template <class T, int W, Arithmetic U>
Dual<T, W> operator/(U c, const Dual<T, W>& b) {
  return Dual<T, W>(static_cast<double>(c)) / b;
}

// Comparisons look at values only; they steer control flow, never derivatives.
template <class T, int W>
constexpr bool operator<(const Dual<T, W>& a, const Dual<T, W>& b) {
  return value_of(a) < value_of(b);
}
template <class T, int W>
constexpr bool operator>(const Dual<T, W>& a, const Dual<T, W>& b) {
  return value_of(a) > value_of(b);
}

// ---------------------------------------------------------------------------
// elementary functions: f(a) with f'(a) supplied by the caller

namespace detail {
template <class T, int W>
constexpr Dual<T, W> chain(const Dual<T, W>& a, const T& f, const T& df) {
  Dual<T, W> out;
  out.value = f;
  for (int i = 0; i < W; ++i) out.partials[i] = df * a.partials[i];
  return out;
}
}  // namespace detail

using std::cos;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sqrt;

template <class T, int W>
Dual<T, W> sin(const Dual<T, W>& a) {
  return detail::chain(a, T(sin(a.value)), T(cos(a.value)));
}

template <class T, int W>
Dual<T, W> cos(const Dual<T, W>& a) {
  return detail::chain(a, T(cos(a.value)), T(-sin(a.value)));
}

template <class T, int W>
Dual<T, W> exp(const Dual<T, W>& a) {
  const T e = exp(a.value);
  return detail::chain(a, e, e);
}

template <class T, int W>
Dual<T, W> log(const Dual<T, W>& a) {
  if (!(value_of(a) > 0.0)) throw DomainError("log of non-positive value");
  return detail::chain(a, T(log(a.value)), T(1.0) / a.value);
}

template <class T, int W>
Dual<T, W> sqrt(const Dual<T, W>& a) {
  const double v = value_of(a);
  if (v < 0.0) throw DomainError("sqrt of negative value");
  if (v == 0.0) throw DomainError("sqrt is not differentiable at zero");
  const T r = sqrt(a.value);
  return detail::chain(a, r, T(0.5) / r);
}

template <class T, int W>
Dual<T, W> pow(const Dual<T, W>& a, double p) {
  const double v = value_of(a);
  if (v < 0.0 && p != std::floor(p)) throw DomainError("non-integer power of negative value");
  if (v == 0.0 && p < 1.0 && p != 0.0) throw DomainError("power not differentiable at zero");
  if (p == 0.0) return Dual<T, W>(1.0);
  return detail::chain(a, T(pow(a.value, p)), T(p * pow(a.value, p - 1.0)));
}

}  // namespace fishsim::ad
