#pragma once

#include <functional>

#include "narrowcap/geometry.hpp"
#include "narrowcap/vec2.hpp"

namespace narrowcap {

/// Truncation policy for the image series and the finite-difference step.
struct SeriesControl {
    double tol = 1e-14;     ///< stop once a term drops below this (absolute)
    int n_max = 256;        ///< hard cap on the number of series terms
    double fd_step = 1e-4;  ///< finite-difference step, relative to the domain diameter

    /// Throws PreconditionError unless tol > 0, n_max >= 8 and 0 < fd_step < 1e-2.
    void validate() const;
};

/// First and second derivatives with respect to the source point xi.
struct Derivatives {
    Vec2 grad;
    Mat2 hess;
};

/// Source-point quantities that drive the GMFPT: R(xi;xi), the gradient
/// a = grad_xi R(x;xi)|_{x=xi} and the Hessian grad^2_xi R(x;xi)|_{x=xi}.
/// The derivatives act on the source argument only, so the Hessian trace is
/// 1/|Omega|.
struct SourceTerms {
    double R_self = 0.0;
    Vec2 grad_R_self;
    Mat2 hess_R_self;
};

/// Everything the expansion needs at a point pair (x, xi).
struct GreensBundle {
    double G = 0.0;  ///< G(x;xi), x != xi
    double R_self = 0.0;
    Vec2 grad_R_self;
    Mat2 hess_R_self;
    Vec2 grad_G;  ///< grad_xi G(x;xi)
    Mat2 hess_G;  ///< grad^2_xi G(x;xi)

    SourceTerms source() const { return {R_self, grad_R_self, hess_R_self}; }
};

// ---------------------------------------------------------------------------
// Unit disk, closed form
// ---------------------------------------------------------------------------

double disk_R(const Point2& x, const Point2& xi);
double disk_G(const Point2& x, const Point2& xi);
double disk_R_self(const Point2& xi);

struct DiskSelfDerivatives {
    Vec2 grad;
    double r11_minus_r22 = 0.0;
    double r12 = 0.0;

    /// Full Hessian, using R11 + R22 = 1/pi.
    Mat2 hessian() const;
};

/// Closed-form a and traceless Hessian parts; requires |xi| < 1.
DiskSelfDerivatives disk_self_derivatives(const Point2& xi);

/// Source derivatives of the regular part R(x;xi).
Derivatives disk_R_derivatives(const Point2& x, const Point2& xi);

/// Source derivatives of G(x;xi); rejects x == xi.
Derivatives disk_G_derivatives(const Point2& x, const Point2& xi);

// ---------------------------------------------------------------------------
// Rectangle [0,L] x [0,d], image series
// ---------------------------------------------------------------------------

double rect_R(const Point2& x, const Point2& xi, const Rectangle& rect, const SeriesControl& ctl = {});
double rect_G(const Point2& x, const Point2& xi, const Rectangle& rect, const SeriesControl& ctl = {});
double rect_R_self(const Point2& xi, const Rectangle& rect, const SeriesControl& ctl = {});

// ---------------------------------------------------------------------------
// Ellipse x1^2/A^2 + x2^2/B^2 < 1, A > B, image series in elliptic coordinates
// ---------------------------------------------------------------------------

/// Elliptic coordinates (xi, eta) with x1 = f cosh(xi) cos(eta),
/// x2 = f sinh(xi) sin(eta), f = sqrt(A^2 - B^2); eta in [0, 2 pi).
struct EllipticCoords {
    double xi;
    double eta;
};

EllipticCoords to_elliptic(const Point2& x, double focal);
Point2 from_elliptic(const EllipticCoords& c, double focal);

double ellipse_G(const Point2& x, const Point2& y, const Ellipse& ell, const SeriesControl& ctl = {});
double ellipse_R(const Point2& x, const Point2& y, const Ellipse& ell, const SeriesControl& ctl = {});
double ellipse_R_self(const Point2& y, const Ellipse& ell, const SeriesControl& ctl = {});

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

/// Regular part R(x;xi); must accept x == xi (self-interaction).
using RegularPartFn = std::function<double(const Point2& x, const Point2& xi)>;

/// Central differences of xi -> R(x0;xi) at xi = x0, step fd_step * diam.
/// Both the gradient and the Hessian are O(h^2). Throws PreconditionError
/// when x0 is closer than 4 steps to the boundary.
Derivatives fd_self_derivatives(const RegularPartFn& R, const Point2& xi, const Domain& domain,
                                const SeriesControl& ctl = {});

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

/// Neumann Green's function of a domain. Disks (and circular ellipses) use the
/// closed form and analytic derivatives; rectangles and ellipses use the image
/// series with finite-difference derivatives.
class GreensFunction {
public:
    explicit GreensFunction(Domain domain, SeriesControl ctl = {});

    const Domain& domain() const { return domain_; }
    const SeriesControl& control() const { return ctl_; }
    bool closed_form() const;

    double G(const Point2& x, const Point2& xi) const;
    /// Regular part; x == xi gives the self-interaction.
    double R(const Point2& x, const Point2& xi) const;
    double R_self(const Point2& xi) const;

    SourceTerms source_terms(const Point2& xi) const;
    Derivatives G_derivatives(const Point2& x, const Point2& xi) const;
    GreensBundle bundle(const Point2& x, const Point2& xi) const;

private:
    Domain domain_;
    SeriesControl ctl_;
    double disk_radius_ = 0.0;  // > 0 when the closed form applies
};

}  // namespace narrowcap
