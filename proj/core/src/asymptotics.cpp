#include "narrowcap/asymptotics.hpp"

#include <algorithm>
#include <cmath>

#include "narrowcap/error.hpp"
#include "narrowcap/parallel.hpp"
#include "narrowcap/trap_moments.hpp"

namespace narrowcap {

using detail::require;

namespace {

void check_D(double D) { require(std::isfinite(D) && D > 0.0, "diffusivity must be positive"); }

void check_eps(double eps) { require(std::isfinite(eps) && eps > 0.0, "epsilon must be positive"); }

bool outside_validity(const Domain& domain, const Point2& xi, double a, double b, double eps) {
    return !(eps * std::max(a, b) < 0.25 * domain.distance_to_boundary(xi));
}

Vec2 double_angle(double phi) { return {std::cos(2.0 * phi), std::sin(2.0 * phi)}; }

}  // namespace

double exact_radial_u(double r, double eps, double D) {
    check_D(D);
    require(eps > 0.0 && eps < 1.0, "exact radial solution requires 0 < eps < 1");
    require(r >= eps && r <= 1.0, "exact radial solution requires eps <= r <= 1");
    return (0.5 / D) * (-0.5 * r * r + std::log(r / eps) + 0.5 * eps * eps);
}

double exact_radial_gmfpt(double eps, double D) {
    check_D(D);
    require(eps > 0.0 && eps < 1.0, "exact radial GMFPT requires 0 < eps < 1");
    const double e2 = eps * eps;
    return (-3.0 + 4.0 * e2 - e2 * e2 - 4.0 * std::log(eps)) / (8.0 * D * (1.0 - e2));
}

double centered_ellipse_u(double r, double theta, double a, double b, double eps, double D) {
    check_D(D);
    check_eps(eps);
    require(r > 0.0, "centered ellipse MFPT requires r > 0");
    const double nu = gauge_nu(eps, log_capacitance(a, b));
    const double r2 = r * r;
    const double second = 0.25 * eps * eps * ((a * a + b * b) - (a * a - b * b) * (r2 + 1.0 / r2) * std::cos(2.0 * theta));
    return (0.5 / D) * (std::log(r) - 0.5 * r2 + 1.0 / nu + second);
}

double centered_ellipse_gmfpt(double a, double b, double eps, double D) {
    check_D(D);
    check_eps(eps);
    const double nu = gauge_nu(eps, log_capacitance(a, b));
    const double e2 = eps * eps;
    return (-3.0 + 4.0 / nu + e2 * (2.0 * (a * a + b * b) - 3.0 * a * b + 4.0 * a * b / nu)) / (8.0 * D);
}

double g_of_r(double r) {
    require(r >= 0.0 && r < 1.0, "g(r) requires 0 <= r < 1");
    const double r2 = r * r;
    const double t = 2.0 - r2;
    const double w = 1.0 - r2;
    return (2.0 - t * t) / (2.0 * w * w) * r2;
}

double critical_radius() { return std::sqrt(2.0 - std::sqrt(2.0)); }

ExpansionResult disk_tau(const Point2& xi, double a, double b, double phi, double eps, double D) {
    check_D(D);
    check_eps(eps);
    const double s = norm2(xi);
    require(std::sqrt(s) + eps * a < 1.0, "disk_tau requires |xi| + eps a < 1");

    ExpansionResult res;
    res.nu = gauge_nu(eps, log_capacitance(a, b));
    res.S = 1.0 / (2.0 * res.nu);
    res.tau0 = 0.5 * (1.0 / res.nu - std::log1p(-s) + s - 0.75);

    const double w = 1.0 - s;
    const double k = (2.0 - s) / w;
    const double g = (2.0 - (2.0 - s) * (2.0 - s)) / (2.0 * w * w);
    const Vec2 xq{xi.x1 * xi.x1 - xi.x2 * xi.x2, 2.0 * xi.x1 * xi.x2};
    res.tau2 = a * b * res.tau0 + 0.25 * (a * a + b * b) - 0.125 * (a + b) * (a + b) * k * k * s +
               0.25 * (a * a - b * b) * g * dot(xq, double_angle(phi));
    res.tau = (res.tau0 + eps * eps * res.tau2) / D;
    res.extrapolation = outside_validity(Domain::unit_disk(), xi, a, b, eps);
    return res;
}

double u2_origin_disk(double r, double theta, double phi, double a, double b) {
    require(r > 0.0 && r < 1.0, "u2 at the origin requires 0 < r < 1");
    require(a >= b && b >= 0.0 && a > 0.0, "trap axes require a >= b >= 0 and a > 0");
    const double r2 = r * r;
    const double w = 1.0 - r2;
    return 0.125 * (a * a + b * b) - 0.125 * (a + b) * (a + b) * (2.0 - r2) / (w * w) +
           0.125 * (a * a - b * b) * (2.0 * r2 * r2 - 1.0) / (r2 * w * w) * std::cos(2.0 * (phi - theta));
}

ExpansionResult tau_general(const Domain& domain, const Trap& trap, double D, const SourceTerms& src) {
    check_D(D);
    const Point2& xi = trap.center();
    require(domain.contains(xi), "trap center must lie inside the domain");

    const double area = domain.area();
    const double a = trap.a(), b = trap.b(), eps = trap.epsilon();
    const TrapMoments m = trap_moments(trap);
    const Vec2& g = src.grad_R_self;

    ExpansionResult res;
    res.nu = m.nu;
    res.S = area / (2.0 * kPi * m.nu);
    res.tau0 = area / (2.0 * kPi) * (1.0 / m.nu + 2.0 * kPi * src.R_self);
    res.tau2 = kPi * a * b / area * res.tau0 + 0.25 * (a * a + b * b) -
               area * (trace_product(m.Q, src.hess_R_self) + kPi * 0.5 * (a + b) * (a + b) * norm2(g) -
                       2.0 * kPi * dot(g, m.Q * g));
    res.tau = (res.tau0 + eps * eps * res.tau2) / D;
    res.extrapolation = outside_validity(domain, xi, a, b, eps);
    return res;
}

ExpansionResult tau_general(const GreensFunction& greens, const Trap& trap, double D) {
    return tau_general(greens.domain(), trap, D, greens.source_terms(trap.center()));
}

double tau2_via_chi2(const Domain& domain, const Trap& trap, const SourceTerms& src, double tau0) {
    const double area = domain.area();
    const double a = trap.a(), b = trap.b();
    const Mat2 Q = quadrupole(a, b, trap.phi());
    return kPi * a * b / area * tau0 + 0.125 * (a * a + b * b) +
           chi2_constant(area, Q, src.hess_R_self, src.grad_R_self, a, b);
}

PointMFPT u_point_general(const Point2& x, const Domain& domain, const Trap& trap, double D,
                          const GreensBundle& gb) {
    check_D(D);
    require(domain.contains_closed(x), "evaluation point must lie in the closed domain");
    require(norm(x - trap.center()) >= 2.0 * trap.epsilon() * trap.a(),
            "evaluation point is within 2 eps a of the trap center");

    const double area = domain.area();
    const TrapMoments m = trap_moments(trap);
    const double eps = trap.epsilon();

    PointMFPT res;
    res.u0 = -area * (gb.G - gb.R_self) + area / (2.0 * kPi * m.nu);
    const double chi2 = chi2_constant(area, m.Q, gb.hess_R_self, gb.grad_R_self, trap.a(), trap.b());
    res.u2 = area * (0.5 * trace_product(m.Q, gb.hess_G) - 2.0 * kPi * dot(gb.grad_R_self, m.M * gb.grad_G)) + chi2;
    res.u = (res.u0 + eps * eps * res.u2) / D;
    res.extrapolation = outside_validity(domain, trap.center(), trap.a(), trap.b(), eps);
    return res;
}

PointMFPT u_point_general(const GreensFunction& greens, const Point2& x, const Trap& trap, double D) {
    require(norm(x - trap.center()) >= 2.0 * trap.epsilon() * trap.a(),
            "evaluation point is within 2 eps a of the trap center");
    return u_point_general(x, greens.domain(), trap, D, greens.bundle(x, trap.center()));
}

Vec2 p_vector(const Vec2& g, const Mat2& h) {
    const double h12 = 0.5 * (h.m12 + h.m21);
    return {h.m11 - h.m22 - 2.0 * kPi * (g.x1 * g.x1 - g.x2 * g.x2), 2.0 * h12 - 4.0 * kPi * g.x1 * g.x2};
}

OptimalAngle optimal_phi(const Vec2& p, double scale) {
    if (norm(p) < 1e-12 * std::abs(scale)) return {0.0, true};
    return {normalize_half_turn(0.5 * std::atan2(-p.x2, -p.x1)), false};
}

std::vector<OrientationSample> orientation_field(const GreensFunction& greens, const std::vector<Point2>& grid,
                                                 double a, double b, double eps, double D, unsigned threads) {
    check_D(D);
    const double area = greens.domain().area();
    std::vector<OrientationSample> out(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        OrientationSample& s = out[i];
        s.xi = grid[i];
        try {
            require(greens.domain().contains(s.xi), "point outside the domain");
            const SourceTerms src = greens.source_terms(s.xi);
            s.p = p_vector(src.grad_R_self, src.hess_R_self);
            const OptimalAngle opt = optimal_phi(s.p, 1.0 / area);
            s.phi_star = opt.phi_star;
            s.degenerate = opt.degenerate;
            const ExpansionResult res = tau_general(greens.domain(), Trap(s.xi, a, b, eps, s.phi_star), D, src);
            s.tau2_at_phi_star = res.tau2;
            s.flag = s.degenerate ? "degenerate" : (res.extrapolation ? "extrapolation" : "ok");
        } catch (const Error& e) {
            s.ok = false;
            s.flag = e.what();
        }
    });
    return out;
}

ExpansionResult slit_tau(const Domain& domain, const Point2& xi, double a, double phi, double eps, double D,
                         const SourceTerms& src) {
    check_D(D);
    check_eps(eps);
    require(domain.contains(xi), "slit center must lie inside the domain");
    const double area = domain.area();
    const Vec2 p = p_vector(src.grad_R_self, src.hess_R_self);

    ExpansionResult res;
    res.nu = gauge_nu(eps, log_capacitance(a, 0.0));
    res.S = area / (2.0 * kPi * res.nu);
    res.tau0 = area / (2.0 * kPi) * (1.0 / res.nu + 2.0 * kPi * src.R_self);
    res.tau2 = 0.25 * a * a - 0.5 * kPi * a * a * area * norm2(src.grad_R_self) +
               0.25 * a * a * area * dot(p, double_angle(phi));
    res.tau = (res.tau0 + eps * eps * res.tau2) / D;
    res.extrapolation = outside_validity(domain, xi, a, 0.0, eps);
    return res;
}

}  // namespace narrowcap
