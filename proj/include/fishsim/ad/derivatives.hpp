#pragma once

// Gradients, Hessians and Jacobians of generic callables via vector-forward
// dual numbers, plus extraction of affine maps from black-box functions.
//
// Callables are generic: they receive `const std::vector<S>&` for whatever
// scalar S the driver chooses and return S (or a std::vector<S>).

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fishsim/ad/dual.hpp"

namespace fishsim::ad {

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct AffinityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <int W>
using Dual1 = Dual<double, W>;
template <int W>
using Dual2 = Dual<Dual<double, W>, W>;

namespace detail {
inline void require_width(Eigen::Index n, int w, const char* what) {
  if (n != w) {
    throw DimensionError(std::string(what) + ": input has " + std::to_string(n) +
                         " entries but the derivative width is " + std::to_string(w));
  }
}
}  // namespace detail

/// Calls `fn.template operator()<W>()` for the compile-time W equal to `n`,
/// searching [Lo, Hi].
template <int Lo, int Hi, class Fn>
decltype(auto) with_width(int n, Fn&& fn) {
  if constexpr (Lo > Hi) {
    throw DimensionError("derivative width " + std::to_string(n) + " is not supported");
    return fn.template operator()<Hi>();
  } else {
    if (n == Lo) return fn.template operator()<Lo>();
    return with_width<Lo + 1, Hi>(n, std::forward<Fn>(fn));
  }
}

template <int W>
std::vector<Dual1<W>> seed(const Eigen::VectorXd& x) {
  std::vector<Dual1<W>> out(W);
  for (int i = 0; i < W; ++i) out[i] = Dual1<W>::variable(x[i], i);
  return out;
}

template <int W>
std::vector<Dual2<W>> seed2(const Eigen::VectorXd& x) {
  std::vector<Dual2<W>> out(W);
  for (int i = 0; i < W; ++i) {
    Dual2<W> v;
    v.value = Dual1<W>::variable(x[i], i);
    v.partials[i] = Dual1<W>(1.0);
    out[i] = v;
  }
  return out;
}

template <int W, class F>
Eigen::VectorXd gradient(F&& f, const Eigen::VectorXd& x) {
  detail::require_width(x.size(), W, "gradient");
  const Dual1<W> y = f(seed<W>(x));
  Eigen::VectorXd g(W);
  for (int i = 0; i < W; ++i) g[i] = y.partials[i];
  return g;
}

struct ValueGradientHessian {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/// Nested-dual Hessian. The result is symmetrized; asymmetry above 1e-10
/// (absolute) indicates a broken composition and throws.
template <int W, class F>
ValueGradientHessian hessian_full(F&& f, const Eigen::VectorXd& x) {
  detail::require_width(x.size(), W, "hessian");
  const Dual2<W> y = f(seed2<W>(x));
  ValueGradientHessian out;
  out.value = y.value.value;
  out.gradient.resize(W);
  out.hessian.resize(W, W);
  for (int i = 0; i < W; ++i) {
    out.gradient[i] = y.value.partials[i];
    for (int j = 0; j < W; ++j) out.hessian(i, j) = y.partials[i].partials[j];
  }
  const double asym = (out.hessian - out.hessian.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10) throw std::logic_error("hessian: mixed partials disagree by " + std::to_string(asym));
  out.hessian = 0.5 * (out.hessian + out.hessian.transpose());
  return out;
}

template <int W, class F>
Eigen::MatrixXd hessian(F&& f, const Eigen::VectorXd& x) {
  return hessian_full<W>(std::forward<F>(f), x).hessian;
}

/// Jacobian of a vector function; F returns a std::vector of duals.
template <int W, class F>
Eigen::MatrixXd jacobian(F&& f, const Eigen::VectorXd& x) {
  detail::require_width(x.size(), W, "jacobian");
  const auto y = f(seed<W>(x));
  Eigen::MatrixXd J(static_cast<Eigen::Index>(y.size()), W);
  for (std::size_t r = 0; r < y.size(); ++r)
    for (int c = 0; c < W; ++c) J(static_cast<Eigen::Index>(r), c) = y[r].partials[c];
  return J;
}

struct AffineMap {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

/// Recovers (A, b) with f(u) = A u + b: b = f(0) and column j from the
/// symmetric probes (f(e_j) - f(-e_j)) / 2, which keeps the extraction
/// exactly equivariant under sign flips of u. The fit is then checked on
/// one pseudo-random u. `f` maps a p-vector to an m-vector.
template <class F>
AffineMap affine_extract(F&& f, Eigen::Index p, double tolerance = 1e-9) {
  AffineMap out;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(p);
  out.b = f(u);
  out.A.resize(out.b.size(), p);
  for (Eigen::Index j = 0; j < p; ++j) {
    u.setZero();
    u[j] = 1.0;
    const Eigen::VectorXd plus = f(u);
    u[j] = -1.0;
    const Eigen::VectorXd minus = f(u);
    if (plus.size() != out.b.size() || minus.size() != out.b.size())
      throw DimensionError("affine_extract: output size changed");
    out.A.col(j) = 0.5 * (plus - minus);
  }
  std::mt19937_64 rng(0x5eed'a11eULL);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (Eigen::Index j = 0; j < p; ++j) u[j] = dist(rng);
  const Eigen::VectorXd fu = f(u);
  const double residual = (fu - (out.A * u + out.b)).norm();
  if (!(residual <= tolerance * (1.0 + fu.norm()))) {
    throw AffinityError("affine_extract: function is not affine in its argument (residual " +
                        std::to_string(residual) + ")");
  }
  return out;
}

}  // namespace fishsim::ad
