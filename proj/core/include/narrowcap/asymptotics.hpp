#pragma once

#include <string>
#include <vector>

#include "narrowcap/geometry.hpp"
#include "narrowcap/greens.hpp"
#include "narrowcap/vec2.hpp"

namespace narrowcap {

/// Two-term GMFPT. tau0 and tau2 are stored multiplied by D.
struct ExpansionResult {
    double tau0 = 0.0;
    double tau2 = 0.0;
    double tau = 0.0;  ///< (tau0 + eps^2 tau2) / D
    double nu = 0.0;
    double S = 0.0;  ///< |Omega| / (2 pi nu)
    /// eps * max(a, b) is not below a quarter of the distance to the boundary.
    bool extrapolation = false;
};

/// Two-term MFPT from a point. u0 and u2 are stored multiplied by D.
///
/// The outer expansion does not vanish on the trap boundary; only a matched
/// composite would.
struct PointMFPT {
    double u0 = 0.0;
    double u2 = 0.0;
    double u = 0.0;  ///< (u0 + eps^2 u2) / D
    bool extrapolation = false;
};

struct OptimalAngle {
    double phi_star = 0.0;  ///< in [0, pi)
    bool degenerate = false;
};

struct OrientationSample {
    Point2 xi;
    Vec2 p;
    double phi_star = 0.0;
    double tau2_at_phi_star = 0.0;
    bool degenerate = false;
    bool ok = true;    ///< false when the point could not be evaluated
    std::string flag;  ///< "ok", "degenerate", "extrapolation" or the failure reason
};

// ---------------------------------------------------------------------------
// Exact and closed-form references on the unit disk
// ---------------------------------------------------------------------------

/// Exact MFPT for a centered circular trap of radius eps; eps <= r <= 1.
double exact_radial_u(double r, double epsilon, double D);

/// Exact GMFPT for a centered circular trap of radius eps, 0 < eps < 1.
double exact_radial_gmfpt(double epsilon, double D);

/// Two-term MFPT for a centered elliptical trap with phi = 0; rotate theta
/// for other orientations.
double centered_ellipse_u(double r, double theta, double a, double b, double epsilon, double D);

/// Two-term GMFPT for a centered elliptical trap; independent of phi.
double centered_ellipse_gmfpt(double a, double b, double epsilon, double D);

/// Closed-form two-term GMFPT for a trap at xi in the unit disk.
ExpansionResult disk_tau(const Point2& xi, double a, double b, double phi, double epsilon, double D);

/// (2 - (2 - r^2)^2) / (2 (1 - r^2)^2) r^2 for 0 <= r < 1.
double g_of_r(double r);

/// sqrt(2 - sqrt(2)), the root of g.
double critical_radius();

/// O(eps^2) MFPT correction at the disk center for a trap at r e^{i theta}.
double u2_origin_disk(double r, double theta, double phi, double a, double b);

// ---------------------------------------------------------------------------
// General domains
// ---------------------------------------------------------------------------

/// Two-term GMFPT from the source terms at the trap center.
ExpansionResult tau_general(const Domain& domain, const Trap& trap, double D, const SourceTerms& src);
ExpansionResult tau_general(const GreensFunction& greens, const Trap& trap, double D);

/// tau2 assembled as (pi a b/|Omega|) tau0 + (a^2 + b^2)/8 + chi2. Should
/// agree with tau_general; kept separate for cross-checking.
double tau2_via_chi2(const Domain& domain, const Trap& trap, const SourceTerms& src, double tau0);

/// Two-term MFPT at x. Rejects x within 2 eps a of the trap center.
PointMFPT u_point_general(const Point2& x, const Domain& domain, const Trap& trap, double D,
                          const GreensBundle& greens);
PointMFPT u_point_general(const GreensFunction& greens, const Point2& x, const Trap& trap, double D);

/// Orientation vector from the source gradient a and Hessian H.
Vec2 p_vector(const Vec2& grad_R_self, const Mat2& hess_R_self);

/// Minimizer of p . [cos 2phi, sin 2phi]; degenerate when |p| < 1e-12 scale.
OptimalAngle optimal_phi(const Vec2& p, double scale = 1.0);

/// p, phi* and tau2(phi*) at each grid point. Failures are flagged per point.
/// threads = 0 picks the hardware count (capped by NARROWCAP_THREADS).
std::vector<OrientationSample> orientation_field(const GreensFunction& greens, const std::vector<Point2>& grid,
                                                 double a, double b, double epsilon, double D,
                                                 unsigned threads = 0);

/// Limit b -> 0 of the two-term GMFPT, written out for a slit of half-length a.
ExpansionResult slit_tau(const Domain& domain, const Point2& xi, double a, double phi, double epsilon, double D,
                         const SourceTerms& src);

}  // namespace narrowcap
