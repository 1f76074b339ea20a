#include "narrowcap/greens.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string>

#include "narrowcap/error.hpp"

namespace narrowcap {

using detail::require;

namespace {

constexpr double kInv2Pi = 1.0 / (2.0 * kPi);

// log|1 - e^u| for Re(u) <= 0, accurate both for |e^u| << 1 and e^u -> 1.
double log_abs_one_minus_exp(std::complex<double> u) {
    const double x = u.real(), y = u.imag();
    const double s = std::sin(0.5 * y);
    const double re = std::expm1(x) * std::cos(y) - 2.0 * s * s;  // Re(e^u - 1)
    const double im = std::exp(x) * std::sin(y);
    return std::log(std::hypot(re, im));
}

// Sums sum_{n >= n0} log|1 - e^{u_j - n*decay}| over a family of exponents,
// stopping once every term of an order falls below tol.
template <std::size_t N>
double image_sum(const std::array<std::complex<double>, N>& u, double decay, int n0, const SeriesControl& ctl,
                 const char* what) {
    if (std::exp(-decay) > 0.999) {
        throw ConvergenceError(std::string(what) + ": series ratio too close to one");
    }
    double total = 0.0;
    for (int n = n0; n < ctl.n_max; ++n) {
        double order = 0.0;
        double largest = 0.0;
        const double shift = n * decay;
        for (const auto& uj : u) {
            const std::complex<double> un{uj.real() - shift, uj.imag()};
            const double term = log_abs_one_minus_exp(un);
            order += term;
            largest = std::max(largest, std::abs(term));
        }
        if (!std::isfinite(order)) {
            throw ConvergenceError(std::string(what) + ": point coincides with a source image");
        }
        total += order;
        if (n > n0 && largest < ctl.tol) return total;
        if (n == n0 && largest == 0.0) return total;
    }
    throw ConvergenceError(std::string(what) + ": series did not converge within n_max terms");
}

void check_rect_point(const Point2& p, const Rectangle& r, const char* what) {
    require(p.x1 >= 0.0 && p.x1 <= r.L && p.x2 >= 0.0 && p.x2 <= r.d,
            std::string(what) + ": point outside the rectangle");
}

void check_ellipse_point(const Point2& p, const Ellipse& e, const char* what) {
    const double u = p.x1 / e.A, v = p.x2 / e.B;
    require(u * u + v * v <= 1.0 + 1e-12, std::string(what) + ": point outside the ellipse");
}

}  // namespace

void SeriesControl::validate() const {
    require(tol > 0.0 && std::isfinite(tol), "series tolerance must be positive");
    require(n_max >= 8, "series term cap must be at least 8");
    require(fd_step > 0.0 && fd_step < 1e-2, "finite-difference step must lie in (0, 1e-2)");
}

// ---------------------------------------------------------------------------
// Disk
// ---------------------------------------------------------------------------

double disk_R(const Point2& x, const Point2& xi) {
    const double phi = 1.0 + norm2(x) * norm2(xi) - 2.0 * dot(x, xi);
    return -kInv2Pi * (0.5 * std::log(phi) - 0.5 * (norm2(xi) + norm2(x)) + 0.75);
}

double disk_G(const Point2& x, const Point2& xi) {
    require(!(x == xi), "disk_G: x and xi coincide");
    return -kInv2Pi * std::log(norm(x - xi)) + disk_R(x, xi);
}

double disk_R_self(const Point2& xi) {
    require(norm2(xi) < 1.0, "disk_R_self: |xi| must be below 1");
    const double s = norm2(xi);
    return -kInv2Pi * (std::log1p(-s) - s + 0.75);
}

Mat2 DiskSelfDerivatives::hessian() const {
    const double tr = 1.0 / kPi;
    return Mat2::symmetric(0.5 * (tr + r11_minus_r22), r12, 0.5 * (tr - r11_minus_r22));
}

DiskSelfDerivatives disk_self_derivatives(const Point2& xi) {
    const double s = norm2(xi);
    require(s < 1.0, "disk_self_derivatives: |xi| must be below 1");
    const double w = 1.0 - s;
    DiskSelfDerivatives out;
    out.grad = (kInv2Pi * (2.0 - s) / w) * xi;
    out.r11_minus_r22 = (xi.x1 * xi.x1 - xi.x2 * xi.x2) / (kPi * w * w);
    out.r12 = xi.x1 * xi.x2 / (kPi * w * w);
    return out;
}

Derivatives disk_R_derivatives(const Point2& x, const Point2& xi) {
    const double xx = norm2(x);
    const double phi = 1.0 + xx * norm2(xi) - 2.0 * dot(x, xi);
    const Vec2 v = xx * xi - x;  // half the xi-gradient of phi
    Derivatives d;
    d.grad = -kInv2Pi * ((1.0 / phi) * v - xi);
    const double p2 = phi * phi;
    d.hess.m11 = -kInv2Pi * ((xx * phi - 2.0 * v.x1 * v.x1) / p2 - 1.0);
    d.hess.m22 = -kInv2Pi * ((xx * phi - 2.0 * v.x2 * v.x2) / p2 - 1.0);
    d.hess.m12 = d.hess.m21 = v.x1 * v.x2 / (kPi * p2);
    return d;
}

Derivatives disk_G_derivatives(const Point2& x, const Point2& xi) {
    require(!(x == xi), "disk_G_derivatives: x and xi coincide");
    const Vec2 r = x - xi;
    const double r2 = norm2(r);
    Derivatives d = disk_R_derivatives(x, xi);
    d.grad += (kInv2Pi / r2) * r;
    const double r4 = r2 * r2;
    d.hess.m11 += kInv2Pi * (-1.0 / r2 + 2.0 * r.x1 * r.x1 / r4);
    d.hess.m22 += kInv2Pi * (-1.0 / r2 + 2.0 * r.x2 * r.x2 / r4);
    const double off = kInv2Pi * 2.0 * r.x1 * r.x2 / r4;
    d.hess.m12 += off;
    d.hess.m21 += off;
    return d;
}

// ---------------------------------------------------------------------------
// Rectangle
// ---------------------------------------------------------------------------

namespace {

// Shared body of rect_R and rect_G. With `regular` set, log|x - xi| is
// removed from the singular image.
double rect_kernel(const Point2& x, const Point2& xi, const Rectangle& rc, const SeriesControl& ctl,
                   bool regular) {
    const double L = rc.L, d = rc.d;
    const double h = kPi / d;  // mu / 2
    const double mu = 2.0 * kPi / d;
    const double sp = std::abs(x.x1 + xi.x1), sm = std::abs(x.x1 - xi.x1);
    const double tp = x.x2 + xi.x2, tm = x.x2 - xi.x2;
    using C = std::complex<double>;
    // exponents of z_{+,+}, z_{+,-}, z_{-,+}, zeta_{+,+}, zeta_{+,-}, zeta_{-,+}, zeta_{-,-}
    const std::array<C, 7> u = {C{-h * sp, h * tp},         C{-h * sp, h * tm},         C{-h * sm, h * tp},
                                C{h * (sp - 2 * L), h * tp}, C{h * (sp - 2 * L), h * tm}, C{h * (sm - 2 * L), h * tp},
                                C{h * (sm - 2 * L), h * tm}};
    const std::array<C, 1> umm = {C{-h * sm, h * tm}};
    const double decay = mu * L;

    double value = -kInv2Pi * image_sum(u, decay, 0, ctl, "rect series");
    value += -kInv2Pi * image_sum(umm, decay, 1, ctl, "rect series");
    double singular = log_abs_one_minus_exp(umm[0]);
    if (regular) singular -= std::log(std::hypot(sm, tm));
    value += -kInv2Pi * singular;
    value += (L / d) * (1.0 / 3.0 - std::max(x.x1, xi.x1) / L + (x.x1 * x.x1 + xi.x1 * xi.x1) / (2.0 * L * L));
    return value;
}

}  // namespace

double rect_R(const Point2& x, const Point2& xi, const Rectangle& rect, const SeriesControl& ctl) {
    check_rect_point(x, rect, "rect_R");
    check_rect_point(xi, rect, "rect_R");
    require(!(x == xi), "rect_R: x == xi; use rect_R_self");
    return rect_kernel(x, xi, rect, ctl, true);
}

double rect_G(const Point2& x, const Point2& xi, const Rectangle& rect, const SeriesControl& ctl) {
    check_rect_point(x, rect, "rect_G");
    check_rect_point(xi, rect, "rect_G");
    require(!(x == xi), "rect_G: x and xi coincide");
    return rect_kernel(x, xi, rect, ctl, false);
}

double rect_R_self(const Point2& xi, const Rectangle& rect, const SeriesControl& ctl) {
    require(xi.x1 > 0.0 && xi.x1 < rect.L && xi.x2 > 0.0 && xi.x2 < rect.d,
            "rect_R_self: point must be strictly interior");
    const double L = rect.L, d = rect.d;
    const double mu = 2.0 * kPi / d;
    const double x1 = xi.x1, x2 = xi.x2;
    using C = std::complex<double>;
    const std::array<C, 7> u = {C{-mu * x1, mu * x2}, C{-mu * x1, 0.0},       C{0.0, mu * x2},
                                C{mu * (x1 - L), mu * x2}, C{mu * (x1 - L), 0.0}, C{-mu * L, mu * x2},
                                C{-mu * L, 0.0}};
    const std::array<C, 1> one = {C{0.0, 0.0}};
    const double decay = mu * L;
    double value = -kInv2Pi * image_sum(u, decay, 0, ctl, "rect self series");
    value += (L / d) * (1.0 / 3.0 - x1 / L + x1 * x1 / (L * L));
    value += -kInv2Pi * std::log(kPi / d);
    value += -kInv2Pi * image_sum(one, decay, 1, ctl, "rect self series");
    return value;
}

// ---------------------------------------------------------------------------
// Ellipse
// ---------------------------------------------------------------------------

EllipticCoords to_elliptic(const Point2& x, double focal) {
    require(focal > 0.0, "elliptic coordinates need a positive focal distance");
    const std::complex<double> w = std::acosh(std::complex<double>(x.x1, x.x2) / focal);
    double xi = w.real(), eta = w.imag();
    // acosh returns Re >= 0; on xi = 0 both signs of eta describe the same point.
    if (xi < 0.0) {
        xi = -xi;
        eta = -eta;
    }
    if (eta < 0.0) eta += 2.0 * kPi;
    if (eta >= 2.0 * kPi) eta -= 2.0 * kPi;
    return {xi, eta};
}

Point2 from_elliptic(const EllipticCoords& c, double focal) {
    return {focal * std::cosh(c.xi) * std::cos(c.eta), focal * std::sinh(c.xi) * std::sin(c.eta)};
}

namespace {

struct EllipseParams {
    double focal;
    double xi_b;   // boundary coordinate, tanh(xi_b) = B/A
    double gamma;  // (A - B)/(A + B) = e^{-2 xi_b}
    double area;
};

EllipseParams ellipse_params(const Ellipse& e) {
    require(e.A > e.B, "ellipse series requires A > B; circular domains use the disk closed form");
    EllipseParams p;
    p.focal = std::sqrt((e.A - e.B) * (e.A + e.B));
    p.gamma = (e.A - e.B) / (e.A + e.B);
    p.xi_b = -0.5 * std::log(p.gamma);
    p.area = kPi * e.A * e.B;
    return p;
}

// Exponent of the nearest image, -|w - w0| style, recomputed from
// sinh((w - w0)/2) = (z - z0) / (2 f sinh((w + w0)/2)) so that it keeps full
// relative precision when x and y are close. Falls back to the coordinate
// difference when the two disagree (points straddling the focal segment).
std::complex<double> nearest_image_exponent(const Point2& x, const Point2& y, double focal,
                                            std::complex<double> from_coords) {
    using C = std::complex<double>;
    if (std::abs(from_coords) > 0.1) return from_coords;
    const C z{x.x1, x.x2}, z0{y.x1, y.x2};
    const C w = std::acosh(z / focal), w0 = std::acosh(z0 / focal);
    const C half = std::sinh(0.5 * (w + w0));
    if (std::abs(half) < 1e-3) return from_coords;
    const C dw = 2.0 * std::asinh((z - z0) / (2.0 * focal * half));
    const double re = -std::abs(dw.real());
    if (std::abs(re - from_coords.real()) > 1e-6 || std::abs(std::cos(dw.imag()) - std::cos(from_coords.imag())) > 1e-6) {
        return from_coords;
    }
    return {re, dw.imag()};
}

// Image sum of G plus the -max(xi, xi0)/(2 pi) term. With `regular` set the
// nearest image log|1 - z_1| is replaced by its ratio to |x - y|.
double ellipse_kernel(const Point2& x, const Point2& y, const Ellipse& ell, const SeriesControl& ctl,
                      bool regular) {
    const EllipseParams p = ellipse_params(ell);
    const EllipticCoords cx = to_elliptic(x, p.focal);
    const EllipticCoords cy = to_elliptic(y, p.focal);
    const double dm = std::abs(cx.xi - cy.xi), sp = cx.xi + cy.xi;
    const double em = cx.eta - cy.eta, ep = cx.eta + cy.eta;
    const double b2 = 2.0 * p.xi_b, b4 = 4.0 * p.xi_b;
    using C = std::complex<double>;
    const std::array<C, 7> u = {C{dm - b4, em},  C{sp - b2, em}, C{-sp - b2, em}, C{sp - b4, ep},
                                C{-sp, ep},      C{dm - b2, ep}, C{-dm - b2, ep}};
    const std::array<C, 1> u1 = {C{-dm, em}};
    const double decay = b4;  // gamma^2

    double value = (norm2(x) + norm2(y)) / (4.0 * p.area) -
                   3.0 * (ell.A * ell.A + ell.B * ell.B) / (16.0 * p.area) - std::log(p.gamma) / (4.0 * kPi) -
                   kInv2Pi * std::max(cx.xi, cy.xi);
    value += -kInv2Pi * image_sum(u, decay, 0, ctl, "ellipse series");
    value += -kInv2Pi * image_sum(u1, decay, 1, ctl, "ellipse series");
    double near = 0.0;
    if (regular) {
        near = log_abs_one_minus_exp(nearest_image_exponent(x, y, p.focal, u1[0])) - std::log(norm(x - y));
    } else {
        near = log_abs_one_minus_exp(u1[0]);
    }
    if (!std::isfinite(near)) throw ConvergenceError("ellipse series: point coincides with a source image");
    value += -kInv2Pi * near;
    return value;
}

}  // namespace

double ellipse_G(const Point2& x, const Point2& y, const Ellipse& ell, const SeriesControl& ctl) {
    check_ellipse_point(x, ell, "ellipse_G");
    check_ellipse_point(y, ell, "ellipse_G");
    require(!(x == y), "ellipse_G: x and y coincide");
    return ellipse_kernel(x, y, ell, ctl, false);
}

double ellipse_R(const Point2& x, const Point2& y, const Ellipse& ell, const SeriesControl& ctl) {
    check_ellipse_point(x, ell, "ellipse_R");
    check_ellipse_point(y, ell, "ellipse_R");
    require(!(x == y), "ellipse_R: x == y; use ellipse_R_self");
    return ellipse_kernel(x, y, ell, ctl, true);
}

double ellipse_R_self(const Point2& y, const Ellipse& ell, const SeriesControl& ctl) {
    const double uu = y.x1 / ell.A, vv = y.x2 / ell.B;
    require(uu * uu + vv * vv < 1.0, "ellipse_R_self: point must be strictly interior");
    const EllipseParams p = ellipse_params(ell);
    const EllipticCoords c = to_elliptic(y, p.focal);
    const double b2 = 2.0 * p.xi_b, b4 = 4.0 * p.xi_b;
    using C = std::complex<double>;
    // z_j^0 for j = 2..8 except z_6^0, whose n = 0 factor cancels the
    // log(cosh^2 xi0 - cos^2 eta0) term exactly (leaving -log 2 / 2 pi).
    const std::array<C, 6> u = {C{-b4, 0.0},
                                C{2.0 * c.xi - b2, 0.0},
                                C{-2.0 * c.xi - b2, 0.0},
                                C{2.0 * c.xi - b4, 2.0 * c.eta},
                                C{-b2, 2.0 * c.eta},
                                C{-b2, 2.0 * c.eta}};
    const std::array<C, 2> tail = {C{0.0, 0.0}, C{-2.0 * c.xi, 2.0 * c.eta}};
    const double decay = b4;

    double value = norm2(y) / (2.0 * p.area) - 3.0 * (ell.A * ell.A + ell.B * ell.B) / (16.0 * p.area) +
                   kInv2Pi * std::log(ell.A + ell.B) - kInv2Pi * std::log(2.0);
    value += -kInv2Pi * image_sum(u, decay, 0, ctl, "ellipse self series");
    value += -kInv2Pi * image_sum(tail, decay, 1, ctl, "ellipse self series");
    return value;
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

Derivatives fd_self_derivatives(const RegularPartFn& R, const Point2& xi, const Domain& domain,
                                const SeriesControl& ctl) {
    ctl.validate();
    const double h = ctl.fd_step * domain.diameter();
    require(domain.contains(xi) && domain.distance_to_boundary(xi) >= 4.0 * h,
            "fd_self_derivatives: source point too close to the boundary for the stencil");
    const Vec2 e1{h, 0.0}, e2{0.0, h};
    const double c = R(xi, xi);
    const double p1 = R(xi, xi + e1), m1 = R(xi, xi - e1);
    const double p2 = R(xi, xi + e2), m2 = R(xi, xi - e2);
    const double pp = R(xi, xi + e1 + e2), pm = R(xi, xi + e1 - e2);
    const double mp = R(xi, xi - e1 + e2), mm = R(xi, xi - e1 - e2);
    Derivatives d;
    d.grad = {(p1 - m1) / (2.0 * h), (p2 - m2) / (2.0 * h)};
    d.hess.m11 = (p1 - 2.0 * c + m1) / (h * h);
    d.hess.m22 = (p2 - 2.0 * c + m2) / (h * h);
    d.hess.m12 = d.hess.m21 = (pp - pm - mp + mm) / (4.0 * h * h);
    return d;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

GreensFunction::GreensFunction(Domain domain, SeriesControl ctl) : domain_(std::move(domain)), ctl_(ctl) {
    ctl_.validate();
    if (domain_.is_disk()) {
        disk_radius_ = 1.0;
    } else if (const auto* e = std::get_if<Ellipse>(&domain_.shape()); e && e->A == e->B) {
        disk_radius_ = e->A;
    }
}

bool GreensFunction::closed_form() const { return disk_radius_ > 0.0; }

double GreensFunction::G(const Point2& x, const Point2& xi) const {
    require(!(x == xi), "G: x and xi coincide");
    if (closed_form()) {
        const double s = 1.0 / disk_radius_;
        return disk_G(s * x, s * xi);
    }
    if (const auto* r = std::get_if<Rectangle>(&domain_.shape())) return rect_G(x, xi, *r, ctl_);
    return ellipse_G(x, xi, std::get<Ellipse>(domain_.shape()), ctl_);
}

double GreensFunction::R(const Point2& x, const Point2& xi) const {
    if (x == xi) return R_self(xi);
    if (closed_form()) {
        const double s = 1.0 / disk_radius_;
        return disk_R(s * x, s * xi) + kInv2Pi * std::log(disk_radius_);
    }
    if (const auto* r = std::get_if<Rectangle>(&domain_.shape())) return rect_R(x, xi, *r, ctl_);
    return ellipse_R(x, xi, std::get<Ellipse>(domain_.shape()), ctl_);
}

double GreensFunction::R_self(const Point2& xi) const {
    if (closed_form()) {
        const double s = 1.0 / disk_radius_;
        return disk_R_self(s * xi) + kInv2Pi * std::log(disk_radius_);
    }
    if (const auto* r = std::get_if<Rectangle>(&domain_.shape())) return rect_R_self(xi, *r, ctl_);
    return ellipse_R_self(xi, std::get<Ellipse>(domain_.shape()), ctl_);
}

SourceTerms GreensFunction::source_terms(const Point2& xi) const {
    require(domain_.contains(xi), "source point must lie inside the domain");
    SourceTerms out;
    out.R_self = R_self(xi);
    if (closed_form()) {
        const double s = 1.0 / disk_radius_;
        const DiskSelfDerivatives d = disk_self_derivatives(s * xi);
        out.grad_R_self = s * d.grad;
        out.hess_R_self = (s * s) * d.hessian();
        return out;
    }
    const Derivatives d = fd_self_derivatives([this](const Point2& x, const Point2& p) { return R(x, p); }, xi,
                                              domain_, ctl_);
    out.grad_R_self = d.grad;
    out.hess_R_self = d.hess;
    return out;
}

Derivatives GreensFunction::G_derivatives(const Point2& x, const Point2& xi) const {
    require(!(x == xi), "G_derivatives: x and xi coincide");
    if (closed_form()) {
        const double s = 1.0 / disk_radius_;
        Derivatives d = disk_G_derivatives(s * x, s * xi);
        d.grad = s * d.grad;
        d.hess = (s * s) * d.hess;
        return d;
    }
    const double h = ctl_.fd_step * domain_.diameter();
    require(domain_.distance_to_boundary(xi) >= 4.0 * h,
            "G_derivatives: source point too close to the boundary for the stencil");
    require(norm(x - xi) >= 8.0 * h, "G_derivatives: x too close to xi for the stencil");
    const Vec2 e1{h, 0.0}, e2{0.0, h};
    const double c = G(x, xi);
    const double p1 = G(x, xi + e1), m1 = G(x, xi - e1);
    const double p2 = G(x, xi + e2), m2 = G(x, xi - e2);
    const double pp = G(x, xi + e1 + e2), pm = G(x, xi + e1 - e2);
    const double mp = G(x, xi - e1 + e2), mm = G(x, xi - e1 - e2);
    Derivatives d;
    d.grad = {(p1 - m1) / (2.0 * h), (p2 - m2) / (2.0 * h)};
    d.hess.m11 = (p1 - 2.0 * c + m1) / (h * h);
    d.hess.m22 = (p2 - 2.0 * c + m2) / (h * h);
    d.hess.m12 = d.hess.m21 = (pp - pm - mp + mm) / (4.0 * h * h);
    return d;
}

GreensBundle GreensFunction::bundle(const Point2& x, const Point2& xi) const {
    const SourceTerms s = source_terms(xi);
    const Derivatives g = G_derivatives(x, xi);
    GreensBundle b;
    b.G = G(x, xi);
    b.R_self = s.R_self;
    b.grad_R_self = s.grad_R_self;
    b.hess_R_self = s.hess_R_self;
    b.grad_G = g.grad;
    b.hess_G = g.hess;
    return b;
}

}  // namespace narrowcap
