#include "narrowcap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "narrowcap/error.hpp"

namespace narrowcap {

using detail::require;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool finite(const Vec2& v) { return std::isfinite(v.x1) && std::isfinite(v.x2); }

// Root of sum_i (r_i z_i / (s + r_i))^2 = 1 on the bracket of Eberly's
// point-to-ellipse distance algorithm, by bisection.
double ellipse_root(double r0, double z0, double z1, double g) {
    const double n0 = r0 * z0;
    double s0 = z1 - 1.0;
    double s1 = g < 0.0 ? 0.0 : std::hypot(n0, z1) - 1.0;
    double s = 0.0;
    for (int i = 0; i < 1100; ++i) {
        s = 0.5 * (s0 + s1);
        if (s == s0 || s == s1) break;
        const double ratio0 = n0 / (s + r0);
        const double ratio1 = z1 / (s + 1.0);
        g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if (g > 0.0) {
            s0 = s;
        } else if (g < 0.0) {
            s1 = s;
        } else {
            break;
        }
    }
    return s;
}

// First quadrant, e0 >= e1 > 0, y0, y1 >= 0.
double distance_first_quadrant(double e0, double e1, double y0, double y1) {
    if (y1 > 0.0) {
        if (y0 > 0.0) {
            const double z0 = y0 / e0, z1 = y1 / e1;
            const double g = z0 * z0 + z1 * z1 - 1.0;
            if (g == 0.0) return 0.0;
            const double r0 = (e0 / e1) * (e0 / e1);
            const double sbar = ellipse_root(r0, z0, z1, g);
            const double x0 = r0 * y0 / (sbar + r0);
            const double x1 = y1 / (sbar + 1.0);
            return std::hypot(x0 - y0, x1 - y1);
        }
        return std::abs(y1 - e1);
    }
    const double numer0 = e0 * y0;
    const double denom0 = e0 * e0 - e1 * e1;
    if (numer0 < denom0) {
        const double xde0 = numer0 / denom0;
        const double x0 = e0 * xde0;
        const double x1 = e1 * std::sqrt(std::max(0.0, 1.0 - xde0 * xde0));
        return std::hypot(x0 - y0, x1);
    }
    return std::abs(y0 - e0);
}

}  // namespace

// ---------------------------------------------------------------------------

Domain Domain::unit_disk() { return Domain(UnitDisk{}); }

Domain Domain::rectangle(double L, double d) {
    require(std::isfinite(L) && std::isfinite(d) && L > 0.0 && d > 0.0,
            "rectangle requires L > 0 and d > 0");
    return Domain(Rectangle{L, d});
}

Domain Domain::ellipse(double A, double B) {
    require(std::isfinite(A) && std::isfinite(B) && A >= B && B > 0.0, "ellipse requires A >= B > 0");
    return Domain(Ellipse{A, B});
}

double Domain::area() const {
    return std::visit(overloaded{[](const UnitDisk&) { return kPi; },
                                 [](const Rectangle& r) { return r.L * r.d; },
                                 [](const Ellipse& e) { return kPi * e.A * e.B; }},
                      shape_);
}

double Domain::diameter() const {
    return std::visit(overloaded{[](const UnitDisk&) { return 2.0; },
                                 [](const Rectangle& r) { return std::hypot(r.L, r.d); },
                                 [](const Ellipse& e) { return 2.0 * e.A; }},
                      shape_);
}

bool Domain::contains(const Point2& x) const {
    return std::visit(
        overloaded{[&](const UnitDisk&) { return norm2(x) < 1.0; },
                   [&](const Rectangle& r) { return x.x1 > 0.0 && x.x1 < r.L && x.x2 > 0.0 && x.x2 < r.d; },
                   [&](const Ellipse& e) {
                       const double u = x.x1 / e.A, v = x.x2 / e.B;
                       return u * u + v * v < 1.0;
                   }},
        shape_);
}

bool Domain::contains_closed(const Point2& x) const {
    return std::visit(
        overloaded{[&](const UnitDisk&) { return norm2(x) <= 1.0; },
                   [&](const Rectangle& r) {
                       return x.x1 >= 0.0 && x.x1 <= r.L && x.x2 >= 0.0 && x.x2 <= r.d;
                   },
                   [&](const Ellipse& e) {
                       const double u = x.x1 / e.A, v = x.x2 / e.B;
                       return u * u + v * v <= 1.0;
                   }},
        shape_);
}

double Domain::distance_to_boundary(const Point2& x) const {
    return std::visit(
        overloaded{[&](const UnitDisk&) { return std::abs(1.0 - norm(x)); },
                   [&](const Rectangle& r) {
                       return std::min({std::abs(x.x1), std::abs(r.L - x.x1), std::abs(x.x2),
                                        std::abs(r.d - x.x2)});
                   },
                   [&](const Ellipse& e) {
                       if (e.A == e.B) return std::abs(e.A - norm(x));
                       return distance_to_ellipse(x, e.A, e.B);
                   }},
        shape_);
}

Vec2 Domain::outward_normal(const Point2& x) const {
    return std::visit(
        overloaded{[&](const UnitDisk&) {
                       const double r = norm(x);
                       return r > 0.0 ? (1.0 / r) * x : Vec2{1.0, 0.0};
                   },
                   [&](const Rectangle& r) {
                       const double d[4] = {std::abs(x.x1), std::abs(r.L - x.x1), std::abs(x.x2),
                                            std::abs(r.d - x.x2)};
                       const Vec2 n[4] = {{-1.0, 0.0}, {1.0, 0.0}, {0.0, -1.0}, {0.0, 1.0}};
                       return n[std::min_element(d, d + 4) - d];
                   },
                   [&](const Ellipse& e) {
                       const Vec2 g{x.x1 / (e.A * e.A), x.x2 / (e.B * e.B)};
                       return (1.0 / norm(g)) * g;
                   }},
        shape_);
}

Point2 Domain::boundary_point(double t) const {
    const double th = 2.0 * kPi * t;
    return std::visit(overloaded{[&](const UnitDisk&) { return Point2{std::cos(th), std::sin(th)}; },
                                 [&](const Rectangle& r) {
                                     const double per = 2.0 * (r.L + r.d);
                                     double s = std::fmod(t, 1.0) * per;
                                     if (s < r.L) return Point2{s, 0.0};
                                     s -= r.L;
                                     if (s < r.d) return Point2{r.L, s};
                                     s -= r.d;
                                     if (s < r.L) return Point2{r.L - s, r.d};
                                     s -= r.L;
                                     return Point2{0.0, r.d - s};
                                 },
                                 [&](const Ellipse& e) {
                                     return Point2{e.A * std::cos(th), e.B * std::sin(th)};
                                 }},
                      shape_);
}

std::pair<Point2, Point2> Domain::bounding_box() const {
    return std::visit(overloaded{[](const UnitDisk&) {
                                     return std::pair{Point2{-1.0, -1.0}, Point2{1.0, 1.0}};
                                 },
                                 [](const Rectangle& r) {
                                     return std::pair{Point2{0.0, 0.0}, Point2{r.L, r.d}};
                                 },
                                 [](const Ellipse& e) {
                                     return std::pair{Point2{-e.A, -e.B}, Point2{e.A, e.B}};
                                 }},
                      shape_);
}

std::string Domain::describe() const {
    std::ostringstream os;
    os.precision(17);
    std::visit(overloaded{[&](const UnitDisk&) { os << "disk"; },
                          [&](const Rectangle& r) { os << "rect:" << r.L << ',' << r.d; },
                          [&](const Ellipse& e) { os << "ellipse:" << e.A << ',' << e.B; }},
               shape_);
    return os.str();
}

Domain parse_domain(const std::string& text) {
    if (text == "disk") return Domain::unit_disk();
    const auto colon = text.find(':');
    require(colon != std::string::npos, "unknown domain '" + text + "' (expected disk, rect:L,d or ellipse:A,B)");
    const std::string kind = text.substr(0, colon);
    const std::string args = text.substr(colon + 1);
    const auto comma = args.find(',');
    require(comma != std::string::npos, "domain '" + text + "' needs two comma-separated numbers");
    double p = 0.0, q = 0.0;
    try {
        std::size_t used = 0;
        p = std::stod(args.substr(0, comma), &used);
        require(used == comma, "bad number in domain '" + text + "'");
        const std::string rest = args.substr(comma + 1);
        q = std::stod(rest, &used);
        require(used == rest.size(), "bad number in domain '" + text + "'");
    } catch (const std::logic_error&) {
        throw PreconditionError("bad number in domain '" + text + "'");
    }
    if (kind == "rect") return Domain::rectangle(p, q);
    if (kind == "ellipse") return Domain::ellipse(p, q);
    throw PreconditionError("unknown domain kind '" + kind + "'");
}

// ---------------------------------------------------------------------------

double normalize_half_turn(double phi) {
    double r = std::fmod(phi, kPi);
    if (r < 0.0) r += kPi;
    if (r >= kPi || r == 0.0) r = 0.0;  // also clears -0
    return r;
}

Trap::Trap(Point2 center, double a, double b, double epsilon, double phi)
    : center_(center), a_(a), b_(b), epsilon_(epsilon), phi_(normalize_half_turn(phi)) {
    require(finite(center), "trap center must be finite");
    require(std::isfinite(a) && std::isfinite(b) && a >= b && b >= 0.0 && a > 0.0,
            "trap axes require a >= b >= 0 and a > 0");
    require(std::isfinite(epsilon) && epsilon > 0.0, "trap scale epsilon must be positive");
    require(std::isfinite(phi), "trap angle must be finite");
}

Vec2 Trap::to_local(const Point2& x) const { return (1.0 / epsilon_) * rotate(x - center_, -phi_); }

bool Trap::contains(const Point2& x) const {
    if (is_slit()) return false;
    const Vec2 y = to_local(x);
    const double u = y.x1 / a_, v = y.x2 / b_;
    return u * u + v * v <= 1.0;
}

double Trap::distance_to_boundary(const Point2& x) const {
    const Vec2 y = to_local(x);
    if (a_ == b_) return epsilon_ * std::abs(norm(y) - a_);
    if (is_slit()) {
        const double t = std::clamp(y.x1, -a_, a_);
        return epsilon_ * std::hypot(y.x1 - t, y.x2);
    }
    return epsilon_ * distance_to_ellipse(y, a_, b_);
}

void check_trap_fits(const Domain& domain, const Trap& trap) {
    require(domain.contains(trap.center()), "trap center lies outside the domain");
    const double clearance = domain.distance_to_boundary(trap.center());
    require(trap.epsilon() * trap.a() < clearance,
            "trap extends to the domain boundary (eps*a must be below the distance from xi to the boundary)");
}

double distance_to_ellipse(const Vec2& y, double e0, double e1) {
    const double y0 = std::abs(y.x1), y1 = std::abs(y.x2);
    if (e0 >= e1) return distance_first_quadrant(e0, e1, y0, y1);
    return distance_first_quadrant(e1, e0, y1, y0);
}

// ---------------------------------------------------------------------------

EllipseFrame EllipseFrame::from_axes(double a, double b) {
    require(std::isfinite(a) && std::isfinite(b) && a >= b && b >= 0.0 && a > 0.0,
            "ellipse frame requires a >= b >= 0 and a > 0");
    return {0.5 * (a + b), 0.5 * (a - b)};
}

std::complex<double> joukowski(std::complex<double> z, const EllipseFrame& frame) {
    require(std::abs(z) >= 1.0 - 1e-15, "joukowski map is defined on |z| >= 1 only");
    return frame.alpha * z + frame.beta / z;
}

std::complex<double> inverse_joukowski(std::complex<double> y, const EllipseFrame& frame) {
    const double a = frame.a(), b = frame.b();
    if (b > 0.0) {
        const double u = y.real() / a, v = y.imag() / b;
        require(u * u + v * v >= 1.0 - 1e-14, "point lies inside the ellipse; no exterior preimage");
    }
    // Roots of alpha z^2 - y z + beta = 0; the product of the roots is
    // beta/alpha <= 1, so the larger one is the exterior preimage. Aligning
    // the square root with y avoids cancellation.
    std::complex<double> s = std::sqrt(y * y - 4.0 * frame.alpha * frame.beta);
    if (std::real(std::conj(y) * s) < 0.0) s = -s;
    return (y + s) / (2.0 * frame.alpha);
}

}  // namespace narrowcap
