#pragma once

#include "narrowcap/geometry.hpp"
#include "narrowcap/vec2.hpp"

namespace narrowcap {

/// Shape constants of an elliptical trap entering the small-eps expansion.
///
/// The dipole vector of an ellipse vanishes (two symmetry axes), so it is not
/// stored.
struct TrapMoments {
    double d_c = 0.0;  ///< logarithmic capacitance
    double nu = 0.0;   ///< -1/log(eps d_c)
    Mat2 Q;            ///< quadrupole matrix, symmetric and traceless
    Mat2 M;            ///< moment polarization matrix, -alpha^2 I + Q
};

/// Traceless symmetric matrix solving the second-order inner problem.
struct BMatrix {
    double B11 = 0.0;
    double B12 = 0.0;

    Mat2 matrix() const { return Mat2::symmetric(B11, B12, -B11); }
};

/// (a + b)/2.
double log_capacitance(double a, double b);

/// -1/log(eps d_c); throws PreconditionError unless 0 < eps d_c < 1.
double gauge_nu(double epsilon, double d_c);

/// -(a^2 - b^2)/4 [cos 2phi, sin 2phi; sin 2phi, -cos 2phi].
Mat2 quadrupole(double a, double b, double phi);

/// -((a + b)/2)^2 I + quadrupole(a, b, phi).
Mat2 moment_matrix(double a, double b, double phi);

BMatrix b_matrix(const Mat2& hess_R_self, double phi);

/// Far-field constant of the second-order inner solution,
/// (alpha^2 + beta^2)/4 + 4 pi S_nu alpha beta B11.
double d2c_constant(double a, double b, double S_nu, double B11);

/// Same constant written through the trace, (alpha^2 + beta^2)/4 - pi S_nu Tr(Q H).
double d2c_constant_trace_form(double a, double b, double S_nu, const Mat2& Q, const Mat2& hess_R_self);

/// chi_2 = -|Omega| (Tr(Q H) + 2 pi alpha^2 |a|^2 - 2 pi a.Q a) + (a^2 + b^2)/8.
double chi2_constant(double area, const Mat2& Q, const Mat2& hess_R_self, const Vec2& grad_R_self, double a,
                     double b);

TrapMoments trap_moments(const Trap& trap);

}  // namespace narrowcap
