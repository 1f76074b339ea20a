#pragma once

#include <complex>
#include <string>
#include <variant>

#include "narrowcap/vec2.hpp"

namespace narrowcap {

inline constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Domains
// ---------------------------------------------------------------------------

struct UnitDisk {};

/// The rectangle [0,L] x [0,d].
struct Rectangle {
    double L;
    double d;
};

/// The ellipse x1^2/A^2 + x2^2/B^2 < 1 with A >= B > 0.
struct Ellipse {
    double A;
    double B;
};

/// The enclosing region. Immutable once constructed.
class Domain {
public:
    using Shape = std::variant<UnitDisk, Rectangle, Ellipse>;

    static Domain unit_disk();
    static Domain rectangle(double L, double d);
    static Domain ellipse(double A, double B);

    const Shape& shape() const { return shape_; }
    bool is_disk() const { return std::holds_alternative<UnitDisk>(shape_); }
    bool is_rectangle() const { return std::holds_alternative<Rectangle>(shape_); }
    bool is_ellipse() const { return std::holds_alternative<Ellipse>(shape_); }

    double area() const;
    double diameter() const;

    /// Strict interior test.
    bool contains(const Point2& x) const;
    /// Interior or boundary.
    bool contains_closed(const Point2& x) const;

    /// Euclidean distance from an interior point to the boundary.
    double distance_to_boundary(const Point2& x) const;

    /// Outward unit normal at the boundary point nearest to `x`; `x` is
    /// expected to lie on (or very near) the boundary.
    Vec2 outward_normal(const Point2& x) const;

    /// Point on the boundary at parameter t in [0,1), used for boundary
    /// sampling in tests and diagnostics.
    Point2 boundary_point(double t) const;

    /// Axis-aligned bounding box: lower-left and upper-right corners.
    std::pair<Point2, Point2> bounding_box() const;

    /// Flag syntax understood by the CLI, e.g. "disk", "rect:1,0.8", "ellipse:1.5,1".
    std::string describe() const;

private:
    explicit Domain(Shape s) : shape_(s) {}
    Shape shape_;
};

/// Parse "disk", "rect:L,d" or "ellipse:A,B". Throws PreconditionError.
Domain parse_domain(const std::string& text);

// ---------------------------------------------------------------------------
// Trap
// ---------------------------------------------------------------------------

/// Elliptical trap xi + eps * Rot(phi) * {y1^2/a^2 + y2^2/b^2 <= 1}.
///
/// b = 0 is a slit: a zero-measure set, never "contains" anything. The angle
/// is reduced to [0, pi) on construction since the ellipse is invariant under
/// a half turn.
class Trap {
public:
    Trap(Point2 center, double a, double b, double epsilon, double phi);

    const Point2& center() const { return center_; }
    double a() const { return a_; }
    double b() const { return b_; }
    double epsilon() const { return epsilon_; }
    double phi() const { return phi_; }
    bool is_slit() const { return b_ == 0.0; }

    /// Inner coordinate y = Rot(-phi)(x - xi) / eps.
    Vec2 to_local(const Point2& x) const;

    bool contains(const Point2& x) const;

    /// Unsigned Euclidean distance from `x` to the trap boundary (physical units).
    double distance_to_boundary(const Point2& x) const;

private:
    Point2 center_;
    double a_, b_, epsilon_, phi_;
};

/// Throws PreconditionError unless eps*a is smaller than the distance from the
/// trap center to the domain boundary.
void check_trap_fits(const Domain& domain, const Trap& trap);

/// Reduce an angle into [0, pi).
double normalize_half_turn(double phi);

/// Distance from `y` to the boundary of the axis-aligned ellipse with
/// semi-axes (e0, e1), e0, e1 > 0, for points inside or outside.
double distance_to_ellipse(const Vec2& y, double e0, double e1);

// ---------------------------------------------------------------------------
// Exterior conformal map
// ---------------------------------------------------------------------------

/// Parameters of y = alpha z + beta / z mapping |z| > 1 onto the exterior of
/// the ellipse with semi-axes (a, b).
struct EllipseFrame {
    double alpha;
    double beta;

    static EllipseFrame from_axes(double a, double b);
    double a() const { return alpha + beta; }
    double b() const { return alpha - beta; }
};

std::complex<double> joukowski(std::complex<double> z, const EllipseFrame& frame);

/// Exterior preimage (|z| >= 1) of a point on or outside the ellipse.
std::complex<double> inverse_joukowski(std::complex<double> y, const EllipseFrame& frame);

}  // namespace narrowcap
