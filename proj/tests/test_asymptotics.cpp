#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "narrowcap/asymptotics.hpp"
#include "narrowcap/error.hpp"
#include "narrowcap/greens.hpp"
#include "oracles.hpp"

using namespace narrowcap;
using doctest::Approx;

namespace {

// Distance between two angles modulo pi.
double half_turn_gap(double a, double b) {
    double d = std::fmod(std::abs(a - b), kPi);
    return std::min(d, kPi - d);
}

double tau2_at(const GreensFunction& g, const Point2& xi, double phi) {
    return tau_general(g, Trap(xi, 3, 1, 0.01, phi), 1.0).tau2;
}

}  // namespace

TEST_SUITE("asymptotics") {

TEST_CASE("exact radial MFPT") {
    CHECK(exact_radial_u(0.1, 0.1, 1.0) == Approx(0.0));
    CHECK(exact_radial_u(1.0, 0.1, 1.0) == Approx(0.9037927).epsilon(1e-7));
    CHECK(exact_radial_u(0.7, 0.1, 2.0) == 0.5 * exact_radial_u(0.7, 0.1, 1.0));
    CHECK_THROWS_AS(exact_radial_u(0.05, 0.1, 1.0), PreconditionError);
    CHECK_THROWS_AS(exact_radial_u(1.1, 0.1, 1.0), PreconditionError);
}

TEST_CASE("exact radial GMFPT") {
    CHECK(exact_radial_gmfpt(0.1, 1.0) == Approx(0.7891718).epsilon(1e-7));
    const double e = 0.01;
    const double two_term = (-3 - 4 * std::log(e) + e * e * (1 - 4 * std::log(e))) / 8;
    CHECK(std::abs(exact_radial_gmfpt(e, 1.0) - two_term) < 1e-7);
    for (double x : {0.9, 0.99, 0.999999}) {
        const double v = exact_radial_gmfpt(x, 1.0);
        CHECK(std::isfinite(v));
        CHECK(v > -1e-10);
    }
}

TEST_CASE("centered ellipse MFPT") {
    CHECK(std::abs(centered_ellipse_u(0.5, 0.3, 1, 1, 0.01, 1.0) - exact_radial_u(0.5, 0.01, 1.0)) < 1e-7);

    const double r = 0.6, a = 2, b = 1, e = 0.05;
    double mean = 0.0;
    for (double th : {0.0, kPi / 4, kPi / 2, 3 * kPi / 4}) mean += centered_ellipse_u(r, th, a, b, e, 1.0) / 4;
    const double nu = -1.0 / std::log(e * 1.5);
    const double free = 0.5 * (std::log(r) - r * r / 2 + 1 / nu + e * e / 4 * (a * a + b * b));
    CHECK(std::abs(mean - free) < 1e-14);

    const double gap = centered_ellipse_u(r, kPi / 2, a, b, e, 1.0) - centered_ellipse_u(r, 0, a, b, e, 1.0);
    CHECK(gap > 0.0);
    CHECK(gap == Approx(e * e / 4 * (a * a - b * b) * (r * r + 1 / (r * r))).epsilon(1e-12));
    CHECK_THROWS_AS(centered_ellipse_u(0.0, 0, a, b, e, 1.0), PreconditionError);
}

TEST_CASE("centered ellipse GMFPT") {
    const double e = 0.01;
    const double two_term = (-3 - 4 * std::log(e) + e * e * (1 - 4 * std::log(e))) / 8;
    CHECK(centered_ellipse_gmfpt(1, 1, e, 1.0) == Approx(two_term).epsilon(1e-14));

    const GreensFunction disk(Domain::unit_disk());
    const double c = centered_ellipse_gmfpt(2, 1, 0.05, 1.0);
    for (double phi : {0.0, 0.7, 2.0})
        CHECK(std::abs(tau_general(disk, Trap({0, 0}, 2, 1, 0.05, phi), 1.0).tau - c) < 1e-12);
}

TEST_CASE("general GMFPT on the disk") {
    const GreensFunction disk(Domain::unit_disk());
    const auto r = tau_general(disk, Trap({0, 0}, 1, 1, 0.01, 0), 1.0);
    CHECK(r.tau == Approx(1.9278279).epsilon(1e-7));
    CHECK(r.tau0 == Approx(1.9275851).epsilon(1e-7));
    CHECK(r.nu == Approx(0.2171472).epsilon(1e-6));
    CHECK_FALSE(r.extrapolation);

    CHECK(std::abs(tau_general(disk, Trap({0, 0}, 3, 1, 0.02, 0.4), 1.0).tau - centered_ellipse_gmfpt(3, 1, 0.02, 1.0)) <
          1e-12);

    const Trap t({0.3, 0.4}, 3, 1, 0.03, kPi / 6);
    const auto g = tau_general(disk, t, 1.0);
    const auto d = disk_tau({0.3, 0.4}, 3, 1, kPi / 6, 0.03, 1.0);
    CHECK(std::abs(g.tau - d.tau) < 1e-12);
    CHECK(std::abs(g.tau2 - d.tau2) < 1e-12);
    CHECK(std::abs(g.tau2 - tau2_via_chi2(disk.domain(), t, disk.source_terms({0.3, 0.4}), g.tau0)) < 1e-12);
}

TEST_CASE("both tau2 assemblies agree on series domains") {
    for (const Domain& dom : {Domain::rectangle(1.0, 0.8), Domain::ellipse(1.5, 1.0)}) {
        const GreensFunction g(dom);
        const Point2 xi{0.3, 0.35};
        const Trap t(xi, 3, 1, 0.02, 1.1);
        const auto r = tau_general(g, t, 1.0);
        CHECK(std::abs(r.tau2 - tau2_via_chi2(dom, t, g.source_terms(xi), r.tau0)) < 1e-12 * std::abs(r.tau2));
    }
}

TEST_CASE("extrapolation flag") {
    const GreensFunction disk(Domain::unit_disk());
    CHECK_FALSE(tau_general(disk, Trap({0.5, 0}, 3, 1, 0.01, 0), 1.0).extrapolation);
    CHECK(tau_general(disk, Trap({0.85, 0}, 3, 1, 0.04, 0), 1.0).extrapolation);
    CHECK(disk_tau({0.85, 0}, 3, 1, 0, 0.04, 1.0).extrapolation);
    CHECK_THROWS_AS(disk_tau({0.9, 0}, 3, 1, 0, 0.04, 1.0), PreconditionError);
}

TEST_CASE("disk closed form") {
    const auto c = disk_tau({0, 0}, 2, 1, 0.9, 0.05, 1.0);
    CHECK(c.tau == Approx(centered_ellipse_gmfpt(2, 1, 0.05, 1.0)).epsilon(1e-13));

    for (double r : {0.3, 0.5, 0.8, 0.9}) {
        const double d = disk_tau({r, 0}, 3, 1, 0, 0.01, 1.0).tau2 - disk_tau({r, 0}, 3, 1, kPi / 2, 0.01, 1.0).tau2;
        CHECK(d == Approx((9.0 - 1.0) / 2 * g_of_r(r)).epsilon(1e-11));
    }

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 2 * kPi);
    for (int i = 0; i < 20; ++i) {
        const double th = u(rng), delta = u(rng), phi = u(rng), r = 0.6;
        const auto a = disk_tau({r * std::cos(th), r * std::sin(th)}, 3, 1, phi, 0.02, 1.0);
        const auto b = disk_tau({r * std::cos(th + delta), r * std::sin(th + delta)}, 3, 1, phi + delta, 0.02, 1.0);
        CHECK(std::abs(a.tau - b.tau) < 1e-12);
    }
}

TEST_CASE("g(r) and the critical radius") {
    CHECK(g_of_r(0.0) == 0.0);
    CHECK(g_of_r(0.1) < 0.0);
    CHECK(critical_radius() == Approx(0.7653668647).epsilon(1e-10));
    CHECK(std::abs(g_of_r(critical_radius())) < 1e-14);
    CHECK(g_of_r(0.5) == Approx(-0.2361111).epsilon(1e-6));
    CHECK(g_of_r(0.85) > 0.0);
    CHECK_THROWS_AS(g_of_r(1.0), PreconditionError);
}

TEST_CASE("u2 at the disk center") {
    const double rs = std::pow(2.0, -0.25);
    const double lo = u2_origin_disk(rs - 1e-3, 0, 0, 3, 1) - u2_origin_disk(rs - 1e-3, 0, kPi / 2, 3, 1);
    const double hi = u2_origin_disk(rs + 1e-3, 0, 0, 3, 1) - u2_origin_disk(rs + 1e-3, 0, kPi / 2, 3, 1);
    CHECK(lo * hi < 0.0);
    CHECK(u2_origin_disk(0.5, 0.2, 0.0, 2, 2) == u2_origin_disk(0.5, 0.2, 1.3, 2, 2));
    CHECK(u2_origin_disk(0.5, 0.2, 0.7, 3, 1) == Approx(u2_origin_disk(0.5, 1.1, 1.6, 3, 1)).epsilon(1e-14));
    CHECK_THROWS_AS(u2_origin_disk(0.0, 0, 0, 3, 1), PreconditionError);

    const GreensFunction disk(Domain::unit_disk());
    for (double r : {0.3, 0.6, 0.8}) {
        for (double phi : {0.0, 0.5, kPi / 2}) {
            const double th = 0.4;
            const Trap t({r * std::cos(th), r * std::sin(th)}, 3, 1, 0.01, phi);
            CHECK(std::abs(u_point_general(disk, {0, 0}, t, 1.0).u2 - u2_origin_disk(r, th, phi, 3, 1)) < 1e-10);
        }
    }
}

TEST_CASE("point MFPT: analytic and finite-difference derivatives agree") {
    const Point2 x{-0.2, -0.4}, xi{0.3, 0.4};
    const Domain dom = Domain::unit_disk();
    const GreensFunction disk(dom);

    GreensBundle fd;
    fd.G = disk_G(x, xi);
    const auto self = fd_self_derivatives(disk_R, xi, dom);
    fd.R_self = disk_R_self(xi);
    fd.grad_R_self = self.grad;
    fd.hess_R_self = self.hess;
    auto G = [&](const Point2& s) { return disk_G(x, s); };
    fd.grad_G = oracle::fd_grad(G, xi, 1e-5);
    fd.hess_G = oracle::fd_hess(G, xi, 1e-4);

    std::array<double, 3> fit{};
    for (int i = 0; i < 3; ++i) fit[i] = u_point_general(disk, x, Trap(xi, 3, 1, 0.03, i * kPi / 4), 1.0).u2;
    const double mean = 0.5 * (fit[0] + fit[2]);
    const double c = fit[0] - mean, s = fit[1] - mean;

    for (int i = 0; i < 16; ++i) {
        const double phi = 0.1 + i * kPi / 16;
        const Trap t(xi, 3, 1, 0.03, phi);
        const auto analytic = u_point_general(disk, x, t, 1.0);
        const auto numeric = u_point_general(x, dom, t, 1.0, fd);
        CHECK(std::abs(analytic.u2 - numeric.u2) < 1e-6);
        CHECK(std::abs(analytic.u0 - numeric.u0) < 1e-12);
        CHECK(std::abs(analytic.u2 - (mean + c * std::cos(2 * phi) + s * std::sin(2 * phi))) < 1e-12);
    }
}

TEST_CASE("point MFPT preconditions and circular traps") {
    const GreensFunction disk(Domain::unit_disk());
    const Trap t({0.3, 0.4}, 3, 1, 0.03, 0.2);
    CHECK_THROWS_AS(u_point_general(disk, {0.32, 0.4}, t, 1.0), PreconditionError);
    CHECK_THROWS_AS(u_point_general(disk, {1.2, 0.0}, t, 1.0), PreconditionError);

    const double ref = u_point_general(disk, {-0.2, -0.4}, Trap({0.3, 0.4}, 2, 2, 0.03, 0.0), 1.0).u2;
    for (double phi : {0.3, 1.0, 2.5})
        CHECK(std::abs(u_point_general(disk, {-0.2, -0.4}, Trap({0.3, 0.4}, 2, 2, 0.03, phi), 1.0).u2 - ref) < 1e-14);
}

TEST_CASE("tau2 lives in the second harmonic of phi") {
    for (const Domain& dom : {Domain::unit_disk(), Domain::rectangle(1.0, 0.8), Domain::ellipse(1.5, 1.0)}) {
        const GreensFunction g(dom);
        const Point2 xi{0.3, 0.3};
        const double t0 = tau2_at(g, xi, 0), t1 = tau2_at(g, xi, kPi / 4), t2 = tau2_at(g, xi, kPi / 2);
        const double mean = 0.5 * (t0 + t2), c = t0 - mean, s = t1 - mean;
        for (int i = 0; i < 16; ++i) {
            const double phi = 0.05 + i * kPi / 16;
            CHECK(std::abs(tau2_at(g, xi, phi) - (mean + c * std::cos(2 * phi) + s * std::sin(2 * phi))) < 1e-12);
        }
    }
}

TEST_CASE("orientation vector") {
    const auto d = disk_self_derivatives({0, 0});
    const Vec2 p0 = p_vector(d.grad, d.hessian());
    CHECK(p0.x1 == 0.0);
    CHECK(p0.x2 == 0.0);

    const Mat2 H = Mat2::symmetric(0.4, 0.1, 0.2);
    const Vec2 pc = p_vector({0, 0}, H);
    CHECK(pc.x1 == Approx(0.2));
    CHECK(pc.x2 == Approx(0.2));

    const auto a = disk_self_derivatives({0.5, 0});
    const Vec2 p = p_vector(a.grad, a.hessian());
    CHECK(std::abs(p.x2) < 1e-15);
    CHECK(p.x1 < 0.0);
    CHECK(g_of_r(0.5) < 0.0);
    const auto best = optimal_phi(p);
    const double by_g = disk_tau({0.5, 0}, 3, 1, 0, 0.01, 1.0).tau < disk_tau({0.5, 0}, 3, 1, kPi / 2, 0.01, 1.0).tau
                            ? 0.0
                            : kPi / 2;
    CHECK(half_turn_gap(best.phi_star, by_g) < 1e-12);
}

TEST_CASE("optimal angle") {
    CHECK(optimal_phi({1, 0}).phi_star == Approx(kPi / 2));
    CHECK(optimal_phi({0, -1}).phi_star == Approx(kPi / 4));
    const auto z = optimal_phi({0, 0});
    CHECK(z.degenerate);
    CHECK(z.phi_star == 0.0);
    CHECK(optimal_phi({1e-14, 0}, 1.0).degenerate);
    CHECK_FALSE(optimal_phi({1e-14, 0}, 1e-6).degenerate);
}

TEST_CASE("optimal angle minimizes the disk GMFPT") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> ur(0.05, 0.9), ut(0, 2 * kPi), ua(1.2, 4);
    for (int i = 0; i < 100; ++i) {
        const double r = ur(rng), th = ut(rng), a = ua(rng);
        const Point2 xi{r * std::cos(th), r * std::sin(th)};
        const auto d = disk_self_derivatives(xi);
        const double phi = optimal_phi(p_vector(d.grad, d.hessian()), 1 / kPi).phi_star;
        const double eps = 0.05 * (1 - r) / a;
        const double best = disk_tau(xi, a, 1, phi, eps, 1.0).tau;
        for (int k = 0; k < 64; ++k) CHECK(best <= disk_tau(xi, a, 1, k * kPi / 64, eps, 1.0).tau + 1e-15);
    }
}

TEST_CASE("larger traps are found sooner") {
    for (const Domain& dom : {Domain::unit_disk(), Domain::rectangle(1.0, 0.8), Domain::ellipse(1.5, 1.0)}) {
        const GreensFunction g(dom);
        double prev = INFINITY;
        for (double a : {0.5, 1.0, 1.5, 2.0}) {
            const double t = tau_general(g, Trap({0.4, 0.3}, a, a, 0.01, 0), 1.0).tau;
            CHECK(t < prev);
            prev = t;
        }
    }
}

TEST_CASE("times scale as 1/D") {
    const GreensFunction rect(Domain::rectangle(1.0, 0.8));
    const Trap t({0.3, 0.4}, 3, 1, 0.02, 0.5);
    CHECK(tau_general(rect, t, 2.5).tau == Approx(tau_general(rect, t, 1.0).tau / 2.5).epsilon(1e-15));
    CHECK(u_point_general(rect, {0.8, 0.1}, t, 4.0).u == Approx(u_point_general(rect, {0.8, 0.1}, t, 1.0).u / 4).epsilon(1e-15));
    CHECK(disk_tau({0.3, 0.4}, 3, 1, 0.1, 0.02, 3.0).tau == Approx(disk_tau({0.3, 0.4}, 3, 1, 0.1, 0.02, 1.0).tau / 3).epsilon(1e-15));
    CHECK(exact_radial_gmfpt(0.1, 4.0) == Approx(exact_radial_gmfpt(0.1, 1.0) / 4).epsilon(1e-15));
}

TEST_CASE("slit limit") {
    const Domain rect = Domain::rectangle(1.0, 0.8);
    const GreensFunction g(rect);
    const Point2 xi{0.3, 0.4};
    const auto src = g.source_terms(xi);
    const auto s = slit_tau(rect, xi, 1.0, kPi / 6, 0.2, 1.0, src);
    const auto b0 = tau_general(rect, Trap(xi, 1.0, 0.0, 0.2, kPi / 6), 1.0, src);
    CHECK(std::abs(s.tau - b0.tau) < 1e-14);
    CHECK(std::abs(s.tau2 - b0.tau2) < 1e-14);

    for (double phi : {kPi / 2, kPi / 6}) {
        const double t0 = tau_general(rect, Trap(xi, 1.0, 0.0, 0.2, phi), 1.0, src).tau;
        const double t8 = tau_general(rect, Trap(xi, 1.0, 1e-8, 0.2, phi), 1.0, src).tau;
        CHECK(std::abs(t8 - t0) < 1e-7);
    }
    for (int i = 0; i <= 100; ++i) CHECK(std::isfinite(tau_general(rect, Trap(xi, 1.0, i / 100.0, 0.2, 0.3), 1.0, src).tau));

    const double c1 = tau_general(rect, Trap(xi, 1.0, 1.0, 0.2, kPi / 2), 1.0, src).tau2;
    const double c2 = tau_general(rect, Trap(xi, 1.0, 1.0, 0.2, kPi / 6), 1.0, src).tau2;
    CHECK(std::abs(c1 - c2) < 1e-12);
}

TEST_CASE("orientation field on the disk flips across the critical radius") {
    const GreensFunction disk(Domain::unit_disk());
    const std::vector<Point2> grid{{0.5, 0.0}, {0.9, 0.0}, {0.0, 0.0}, {0.0, 0.5}};
    const auto f = orientation_field(disk, grid, 3, 1, 0.01, 1.0, 2);
    REQUIRE(f.size() == 4);
    CHECK(half_turn_gap(f[0].phi_star, 0.0) < 1e-12);
    CHECK(half_turn_gap(f[1].phi_star, kPi / 2) < 1e-12);
    CHECK(f[2].degenerate);
    CHECK(f[2].flag == "degenerate");
    CHECK(half_turn_gap(f[3].phi_star, kPi / 2) < 1e-12);
    for (const auto& s : f) CHECK(s.ok);
}

TEST_CASE("orientation field flags points it cannot evaluate") {
    const GreensFunction rect(Domain::rectangle(1.0, 0.8));
    const auto f = orientation_field(rect, {{0.5, 0.4}, {1.5, 0.4}, {0.99999, 0.4}}, 3, 1, 0.01, 1.0, 1);
    REQUIRE(f.size() == 3);
    CHECK(f[0].ok);
    CHECK_FALSE(f[1].ok);
    CHECK_FALSE(f[2].ok);
    CHECK_FALSE(f[1].flag.empty());
}

TEST_CASE("orientation field has the symmetry of the square") {
    // A wider difference step keeps series round-off out of the Hessian.
    const GreensFunction sq(Domain::rectangle(1.0, 1.0), SeriesControl{1e-14, 256, 1e-3});
    const Point2 p{0.27, 0.16};
    const std::vector<Point2> grid{p,
                                   {1 - p.x1, p.x2},
                                   {p.x1, 1 - p.x2},
                                   {1 - p.x1, 1 - p.x2},
                                   {p.x2, p.x1},
                                   {1 - p.x2, p.x1},
                                   {p.x2, 1 - p.x1},
                                   {1 - p.x2, 1 - p.x1}};
    const auto f = orientation_field(sq, grid, 3, 1, 0.01, 1.0, 4);
    for (const auto& s : f) {
        CHECK(std::abs(s.tau2_at_phi_star - f[0].tau2_at_phi_star) < 1e-8);
        CHECK(std::abs(norm(s.p) - norm(f[0].p)) < 1e-8);
    }
    // Mirror x1 -> 1 - x1 flips p2; swapping the axes flips p1.
    CHECK(std::abs(f[1].p.x1 - f[0].p.x1) < 1e-8);
    CHECK(std::abs(f[1].p.x2 + f[0].p.x2) < 1e-8);
    CHECK(std::abs(f[4].p.x1 + f[0].p.x1) < 1e-8);
    CHECK(std::abs(f[4].p.x2 - f[0].p.x2) < 1e-8);
}

TEST_CASE("near a smooth wall the trap lies along the wall") {
    const Domain ell = Domain::ellipse(1.5, 1.0);
    const GreensFunction g(ell);
    auto gap = [&](double t, double inset) {
        const Point2 b = ell.boundary_point(t);
        const Vec2 n = ell.outward_normal(b);
        const auto f = orientation_field(g, {b - inset * n}, 3, 1, 0.001, 1.0, 1);
        REQUIRE(f[0].ok);
        return half_turn_gap(f[0].phi_star, std::atan2(n.x2, n.x1) + kPi / 2);
    };
    for (double t : {0.0, 0.25, 0.5, 0.75}) CHECK(gap(t, 0.05) < 5 * kPi / 180);
    // Away from the axes the misalignment shrinks with the distance to the wall.
    for (double t : {0.05, 0.1, 0.2, 0.4}) {
        CAPTURE(t);
        const double far = gap(t, 0.05), mid = gap(t, 0.02), close = gap(t, 0.01);
        CHECK(mid < 5 * kPi / 180);
        CHECK(mid < far);
        CHECK(close < mid);
    }
}

}
