#pragma once

// Potential-flow added mass of a rigid ellipsoid for planar motion
// (surge, sway, yaw), from the classical shape integrals
//
//   alpha0 = abc * int_0^inf dl / ((a^2 + l) D(l)),  D = sqrt((a^2+l)(b^2+l)(c^2+l))
//
// and likewise beta0 with b^2. Axis a is along the body x-axis (surge),
// b along y (sway), c along z (the yaw axis).

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fishsim {

namespace detail {

inline double ellipsoid_shape_integral(double a, double b, double c, double axis_sq) {
  auto integrand = [&](double l) {
    const double d = std::sqrt((a * a + l) * (b * b + l) * (c * c + l));
    return 1.0 / ((axis_sq + l) * d);
  };
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-13, &error);
  return a * b * c * value;
}

}  // namespace detail

/// diag(m_x, m_y, I_z) in the ellipsoid's own frame.
inline Eigen::Matrix3d ellipsoid_added_mass(const std::array<double, 3>& semi_axes, double rho_water) {
  const auto [a, b, c] = semi_axes;
  if (!(a > 0.0 && b > 0.0 && c > 0.0)) throw std::invalid_argument("ellipsoid_added_mass: semi-axes must be positive");
  if (rho_water < 0.0) throw std::invalid_argument("ellipsoid_added_mass: negative fluid density");
  if (rho_water == 0.0) return Eigen::Matrix3d::Zero();

  const double alpha0 = detail::ellipsoid_shape_integral(a, b, c, a * a);
  const double beta0 = detail::ellipsoid_shape_integral(a, b, c, b * b);
  const double displaced = rho_water * 4.0 / 3.0 * M_PI * a * b * c;

  const double m_x = alpha0 / (2.0 - alpha0) * displaced;
  const double m_y = beta0 / (2.0 - beta0) * displaced;

  // Yaw about c: vanishes for a body of revolution about the yaw axis (a = b).
  double i_z = 0.0;
  const double diff = a * a - b * b;
  if (std::abs(diff) > 1e-12 * (a * a + b * b)) {
    const double denom = 2.0 * diff + (a * a + b * b) * (alpha0 - beta0);
    i_z = displaced / 5.0 * diff * diff * (beta0 - alpha0) / denom;
  }
  return Eigen::Vector3d(m_x, m_y, i_z).asDiagonal();
}

}  // namespace fishsim
