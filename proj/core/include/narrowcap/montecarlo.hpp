#pragma once

#include <cstdint>
#include <vector>

#include "narrowcap/geometry.hpp"

namespace narrowcap {

/// Brownian-dynamics settings.
///
/// Near the trap the walker steps with `dt`. Far from it the step grows so
/// that the standard deviation of one step stays below 1/`safety` of the
/// distance to the trap, up to `max_dt`. Walkers still running when the clock
/// reaches max_steps * dt are censored.
struct WalkerConfig {
    double dt = 1e-5;
    std::int64_t max_steps = 20'000'000;
    std::uint64_t seed = 1;
    std::int64_t n_walkers = 100'000;

    bool adaptive = true;
    double max_dt = 1e-2;
    double safety = 6.0;
    /// Lower bound for the wall distance when sizing a step, as a fraction of
    /// the smallest radius of curvature of the boundary. Reflection is exact
    /// for flat walls, so the step only has to resolve the curvature; on a
    /// rectangle the walls do not limit the step at all.
    double wall_floor = 0.3;
    /// Absorb with the Brownian-bridge crossing probability between steps.
    bool bridge = true;
    unsigned threads = 0;  ///< 0: all cores, capped by NARROWCAP_THREADS

    /// Throws PreconditionError on non-positive or non-finite settings.
    void validate() const;
};

struct FptEstimate {
    double mean = 0.0;
    double std_error = 0.0;  ///< sample std / sqrt(n_absorbed)
    std::int64_t n_absorbed = 0;
    std::int64_t n_censored = 0;
    std::int64_t n_walkers = 0;
    std::int64_t n_projected = 0;  ///< reflections that hit the bounce cap
    std::int64_t total_steps = 0;

    bool censoring_flag = false;  ///< more than 1% of walkers censored
    bool step_flag = false;       ///< sqrt(2 D dt) is not below eps b / 4
    bool cap_flag = false;        ///< max_steps * dt is below 50 * mean
};

/// Mirror `to` back into the domain across the boundary, bouncing up to 8
/// times. `from` must be in the closed domain. Rectangles fold exactly; disks
/// and ellipses reflect across the tangent at the crossing point. If the cap
/// is hit the point is pulled inside and *projected is set.
Point2 reflect(const Domain& domain, const Point2& from, const Point2& to, bool* projected = nullptr);

/// MFPT from `start`. Deterministic for a given seed, independent of the
/// thread count.
FptEstimate simulate_mfpt(const Point2& start, const Domain& domain, const Trap& trap, double D,
                          const WalkerConfig& cfg);

/// GMFPT with starts drawn uniformly on the domain minus the trap.
FptEstimate simulate_gmfpt(const Domain& domain, const Trap& trap, double D, const WalkerConfig& cfg);

/// First-passage times of individual walkers (negative when censored); the
/// building block for paired comparisons.
std::vector<double> walker_times(const Domain& domain, const Trap& trap, double D, const WalkerConfig& cfg,
                                 const Point2* start);

/// Estimate from per-walker times, censored entries negative.
FptEstimate summarize(const std::vector<double>& times);

struct BiasProbeRow {
    double dt = 0.0;
    FptEstimate estimate;
    double error = 0.0;  ///< estimate minus exact
};

struct BiasProbeReport {
    double exact = 0.0;
    std::vector<BiasProbeRow> rows;
    double extrapolated = 0.0;  ///< sqrt(dt) extrapolation from the two finest steps
    double extrapolated_std_error = 0.0;
    bool monotone = false;  ///< |error| shrinks with dt
};

/// GMFPT of the centered circular trap eps = 0.1 on the unit disk at each dt
/// in `dts` (coarse to fine, same seed), compared with the exact value.
BiasProbeReport timestep_bias_probe(const std::vector<double>& dts, WalkerConfig cfg);

}  // namespace narrowcap
