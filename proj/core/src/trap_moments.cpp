#include "narrowcap/trap_moments.hpp"

#include <cmath>

#include "narrowcap/error.hpp"

namespace narrowcap {

using detail::require;

namespace {

void check_axes(double a, double b) {
    require(std::isfinite(a) && std::isfinite(b) && a >= b && b >= 0.0 && a > 0.0,
            "trap axes require a >= b >= 0 and a > 0");
}

}  // namespace

double log_capacitance(double a, double b) {
    check_axes(a, b);
    return 0.5 * (a + b);
}

double gauge_nu(double epsilon, double d_c) {
    const double s = epsilon * d_c;
    require(std::isfinite(s) && s > 0.0, "gauge requires eps * d_c > 0");
    require(s < 1.0, "gauge requires eps * d_c < 1 (trap is not small)");
    return -1.0 / std::log(s);
}

Mat2 quadrupole(double a, double b, double phi) {
    check_axes(a, b);
    const double k = -0.25 * (a - b) * (a + b);
    const double c = std::cos(2.0 * phi), s = std::sin(2.0 * phi);
    return Mat2::symmetric(k * c, k * s, -k * c);
}

Mat2 moment_matrix(double a, double b, double phi) {
    const double alpha = 0.5 * (a + b);
    return -(alpha * alpha) * Mat2::identity() + quadrupole(a, b, phi);
}

BMatrix b_matrix(const Mat2& hess, double phi) {
    const double diff = hess.m11 - hess.m22;
    const double r12 = 0.5 * (hess.m12 + hess.m21);
    const double c = std::cos(2.0 * phi), s = std::sin(2.0 * phi);
    return {0.25 * (diff * c + 2.0 * r12 * s), 0.25 * (2.0 * r12 * c - diff * s)};
}

double d2c_constant(double a, double b, double S_nu, double B11) {
    const EllipseFrame f = EllipseFrame::from_axes(a, b);
    return 0.25 * (f.alpha * f.alpha + f.beta * f.beta) + 4.0 * kPi * S_nu * f.alpha * f.beta * B11;
}

double d2c_constant_trace_form(double a, double b, double S_nu, const Mat2& Q, const Mat2& hess) {
    const EllipseFrame f = EllipseFrame::from_axes(a, b);
    return 0.25 * (f.alpha * f.alpha + f.beta * f.beta) - kPi * S_nu * trace_product(Q, hess);
}

double chi2_constant(double area, const Mat2& Q, const Mat2& hess, const Vec2& grad, double a, double b) {
    check_axes(a, b);
    const double alpha = 0.5 * (a + b);
    return -area * (trace_product(Q, hess) + 2.0 * kPi * alpha * alpha * norm2(grad) - 2.0 * kPi * dot(grad, Q * grad)) +
           0.125 * (a * a + b * b);
}

TrapMoments trap_moments(const Trap& trap) {
    TrapMoments m;
    m.d_c = log_capacitance(trap.a(), trap.b());
    m.nu = gauge_nu(trap.epsilon(), m.d_c);
    m.Q = quadrupole(trap.a(), trap.b(), trap.phi());
    m.M = moment_matrix(trap.a(), trap.b(), trap.phi());
    return m;
}

}  // namespace narrowcap
