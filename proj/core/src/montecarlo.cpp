#include "narrowcap/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#include "narrowcap/asymptotics.hpp"
#include "narrowcap/error.hpp"
#include "narrowcap/parallel.hpp"

namespace narrowcap {

using detail::require;

namespace {

constexpr int kMaxBounces = 8;

// ---------------------------------------------------------------------------
// Random numbers: xoshiro256++ with one stream per walker. The stream state is
// four splitmix64 outputs starting from a key that mixes the seed with the
// walker index, so a walker's path does not depend on scheduling.
// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class Xoshiro256pp {
public:
    Xoshiro256pp(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t a = seed;
        std::uint64_t b = stream ^ 0xD1B54A32D192ED03ULL;
        std::uint64_t key = splitmix64(a) ^ (splitmix64(b) * 0x9E3779B97F4A7C15ULL);
        for (auto& w : s_) w = splitmix64(key);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on (0, 1].
    double uniform() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

    /// Two independent standard normals (Box-Muller).
    Vec2 normal_pair() {
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double th = 2.0 * kPi * uniform();
        return {r * std::cos(th), r * std::sin(th)};
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

// ---------------------------------------------------------------------------
// Reflection
// ---------------------------------------------------------------------------

double fold(double v, double len, int& bounces) {
    while ((v < 0.0 || v > len) && bounces <= kMaxBounces) {
        v = v < 0.0 ? -v : 2.0 * len - v;
        ++bounces;
    }
    return v;
}

Point2 reflect_rect(const Rectangle& r, const Point2& to, bool* projected) {
    int bounces = 0;
    Point2 y{fold(to.x1, r.L, bounces), fold(to.x2, r.d, bounces)};
    if (bounces > kMaxBounces) {
        y.x1 = std::clamp(y.x1, 0.0, r.L);
        y.x2 = std::clamp(y.x2, 0.0, r.d);
        if (projected) *projected = true;
    }
    // Landing exactly on an edge is possible in floating point; keep the
    // strict-interior contract.
    const double tiny = 1e-15;
    if (y.x1 <= 0.0) y.x1 = tiny * r.L;
    if (y.x1 >= r.L) y.x1 = r.L * (1.0 - tiny);
    if (y.x2 <= 0.0) y.x2 = tiny * r.d;
    if (y.x2 >= r.d) y.x2 = r.d * (1.0 - tiny);
    return y;
}

// Disk and ellipse share the quadric (p1/A)^2 + (p2/B)^2 = 1.
Point2 reflect_quadric(double A, double B, Point2 from, Point2 to, bool* projected) {
    const double iA2 = 1.0 / (A * A), iB2 = 1.0 / (B * B);
    auto level = [&](const Point2& p) { return p.x1 * p.x1 * iA2 + p.x2 * p.x2 * iB2 - 1.0; };

    for (int bounce = 0; bounce < kMaxBounces && level(to) > 0.0; ++bounce) {
        const Vec2 d = to - from;
        const double qa = d.x1 * d.x1 * iA2 + d.x2 * d.x2 * iB2;
        const double qb = from.x1 * d.x1 * iA2 + from.x2 * d.x2 * iB2;
        const double qc = std::min(level(from), 0.0);
        const double root = std::sqrt(std::max(0.0, qb * qb - qa * qc));
        const double s = qb > 0.0 ? -qc / (qb + root) : (root - qb) / qa;
        const Point2 c = from + std::clamp(s, 0.0, 1.0) * d;
        Vec2 n{c.x1 * iA2, c.x2 * iB2};
        n = (1.0 / norm(n)) * n;
        const Vec2 rest = to - c;
        from = c;
        to = c + rest - (2.0 * dot(rest, n)) * n;
    }
    const double lv = level(to);
    if (lv >= 0.0) {
        if (lv > 0.0 && projected) *projected = true;
        to = ((1.0 - 1e-12) / std::sqrt(lv + 1.0)) * to;
    }
    return to;
}

// ---------------------------------------------------------------------------
// Walker engine
// ---------------------------------------------------------------------------

enum class Kind { disk, rect, ellipse };

struct Engine {
    Domain domain;
    Kind kind;
    double A = 1.0, B = 1.0;  // quadric semi-axes, or rectangle sides
    Point2 c;
    double cs, sn, ea, eb;
    bool circle;
    double D;
    double wall_floor;
    WalkerConfig cfg;

    Engine(const Domain& dom, const Trap& trap, double diff, const WalkerConfig& w)
        : domain(dom), c(trap.center()), D(diff), cfg(w) {
        if (const auto* r = std::get_if<Rectangle>(&dom.shape())) {
            kind = Kind::rect;
            A = r->L;
            B = r->d;
        } else if (const auto* e = std::get_if<Ellipse>(&dom.shape())) {
            kind = Kind::ellipse;
            A = e->A;
            B = e->B;
        } else {
            kind = Kind::disk;
        }
        switch (kind) {
            case Kind::rect:
                wall_floor = std::numeric_limits<double>::infinity();
                break;
            case Kind::ellipse:
                wall_floor = w.wall_floor * B * B / A;
                break;
            case Kind::disk:
                wall_floor = w.wall_floor;
                break;
        }
        cs = std::cos(trap.phi());
        sn = std::sin(trap.phi());
        ea = trap.epsilon() * trap.a();
        eb = trap.epsilon() * trap.b();
        circle = trap.a() == trap.b();
    }

    Vec2 local(const Point2& x) const {
        const double d1 = x.x1 - c.x1, d2 = x.x2 - c.x2;
        return {cs * d1 + sn * d2, -sn * d1 + cs * d2};
    }

    bool in_trap(const Vec2& y) const {
        const double u = y.x1 / ea, v = y.x2 / eb;
        return u * u + v * v <= 1.0;
    }

    // Distance to the trap from outside, bounded below cheaply: the trap
    // grown by a factor s contains the trap plus a band of width (s - 1) eb.
    double trap_lower(const Vec2& y) const {
        const double u = y.x1 / ea, v = y.x2 / eb;
        const double s = std::sqrt(u * u + v * v);
        return std::max(eb * (s - 1.0), std::sqrt(y.x1 * y.x1 + y.x2 * y.x2) - ea);
    }

    double trap_exact(const Vec2& y) const {
        if (circle) return std::max(0.0, std::sqrt(y.x1 * y.x1 + y.x2 * y.x2) - ea);
        return distance_to_ellipse(y, ea, eb);
    }

    double wall_lower(const Point2& x) const {
        switch (kind) {
            case Kind::rect:
                return std::min({x.x1, A - x.x1, x.x2, B - x.x2});
            case Kind::ellipse: {
                const double u = x.x1 / A, v = x.x2 / B;
                return (1.0 - std::sqrt(u * u + v * v)) * B;
            }
            case Kind::disk:
            default:
                return 1.0 - std::sqrt(x.x1 * x.x1 + x.x2 * x.x2);
        }
    }

    bool inside(const Point2& x) const {
        switch (kind) {
            case Kind::rect:
                return x.x1 > 0.0 && x.x1 < A && x.x2 > 0.0 && x.x2 < B;
            case Kind::ellipse: {
                const double u = x.x1 / A, v = x.x2 / B;
                return u * u + v * v < 1.0;
            }
            case Kind::disk:
            default:
                return x.x1 * x.x1 + x.x2 * x.x2 < 1.0;
        }
    }

    Point2 bounce(const Point2& from, const Point2& to, bool* projected) const {
        if (kind == Kind::rect) return reflect_rect(Rectangle{A, B}, to, projected);
        return reflect_quadric(A, B, from, to, projected);
    }

    Point2 uniform_start(Xoshiro256pp& rng) const {
        const auto [lo, hi] = domain.bounding_box();
        for (;;) {
            const Point2 p{lo.x1 + (hi.x1 - lo.x1) * rng.uniform(), lo.x2 + (hi.x2 - lo.x2) * rng.uniform()};
            if (inside(p) && !in_trap(local(p))) return p;
        }
    }

    struct Outcome {
        double time;  // negative when censored
        std::int64_t steps;
        bool projected;
    };

    Outcome run(std::uint64_t index, const Point2* start) const {
        Xoshiro256pp rng(cfg.seed, index);
        Point2 x = start ? *start : uniform_start(rng);
        const double horizon = static_cast<double>(cfg.max_steps) * cfg.dt;
        const double two_d = 2.0 * D;
        const double k2 = cfg.safety * cfg.safety;

        double t = 0.0;
        std::int64_t steps = 0;
        bool projected = false;
        Vec2 y = local(x);
        double lb = trap_lower(y);

        while (t < horizon) {
            double h = cfg.dt;
            if (cfg.adaptive) {
                const double reach = std::min(lb, std::max(wall_lower(x), wall_floor));
                h = std::clamp(reach * reach / (k2 * two_d), cfg.dt, cfg.max_dt);
            }
            const double sigma = std::sqrt(two_d * h);
            Point2 xn = x + sigma * rng.normal_pair();
            if (!inside(xn)) xn = bounce(x, xn, &projected);
            t += h;
            ++steps;

            const Vec2 yn = local(xn);
            if (in_trap(yn)) return {t, steps, projected};
            const double lbn = trap_lower(yn);
            if (cfg.bridge && lb < 4.0 * sigma && lbn < 4.0 * sigma) {
                const double d0 = trap_exact(y), d1 = trap_exact(yn);
                if (rng.uniform() < std::exp(-d0 * d1 / (D * h))) return {t, steps, projected};
            }
            x = xn;
            y = yn;
            lb = lbn;
        }
        return {-1.0, steps, projected};
    }
};

struct RunTotals {
    std::vector<double> times;
    std::int64_t steps = 0;
    std::int64_t projected = 0;
};

void check_inputs(const Domain& domain, const Trap& trap, double D, const WalkerConfig& cfg) {
    cfg.validate();
    require(std::isfinite(D) && D > 0.0, "diffusivity must be positive");
    require(!trap.is_slit(), "Monte Carlo cannot capture on a slit trap (b = 0)");
    check_trap_fits(domain, trap);
}

RunTotals run_walkers(const Domain& domain, const Trap& trap, double D, const WalkerConfig& cfg,
                      const Point2* start) {
    check_inputs(domain, trap, D, cfg);
    if (start) {
        require(domain.contains_closed(*start), "start point lies outside the domain");
        require(!trap.contains(*start), "start point lies inside the trap");
    }
    const Engine engine(domain, trap, D, cfg);
    RunTotals out;
    out.times.resize(static_cast<std::size_t>(cfg.n_walkers));
    std::atomic<std::int64_t> steps{0}, projected{0};
    parallel_for(out.times.size(), cfg.threads, [&](std::size_t i) {
        const Engine::Outcome o = engine.run(i, start);
        out.times[i] = o.time;
        steps.fetch_add(o.steps, std::memory_order_relaxed);
        if (o.projected) projected.fetch_add(1, std::memory_order_relaxed);
    });
    out.steps = steps.load();
    out.projected = projected.load();
    return out;
}

class Neumaier {
public:
    void add(double v) {
        const double t = sum_ + v;
        comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0, comp_ = 0.0;
};

FptEstimate finish(const RunTotals& run, const Trap& trap, double D, const WalkerConfig& cfg) {
    FptEstimate est = summarize(run.times);
    est.total_steps = run.steps;
    est.n_projected = run.projected;
    est.step_flag = !(std::sqrt(2.0 * D * cfg.dt) < 0.25 * trap.epsilon() * trap.b());
    est.cap_flag = static_cast<double>(cfg.max_steps) * cfg.dt < 50.0 * est.mean;
    return est;
}

}  // namespace

void WalkerConfig::validate() const {
    require(std::isfinite(dt) && dt > 0.0, "dt must be positive");
    require(max_steps > 0, "max_steps must be positive");
    require(n_walkers > 0, "n_walkers must be positive");
    require(std::isfinite(max_dt) && max_dt >= dt, "max_dt must be at least dt");
    require(std::isfinite(safety) && safety >= 1.0, "safety factor must be at least 1");
    require(std::isfinite(wall_floor) && wall_floor >= 0.0, "wall_floor must be non-negative");
}

Point2 reflect(const Domain& domain, const Point2& from, const Point2& to, bool* projected) {
    if (projected) *projected = false;
    if (domain.contains(to)) return to;
    if (const auto* r = std::get_if<Rectangle>(&domain.shape())) return reflect_rect(*r, to, projected);
    if (const auto* e = std::get_if<Ellipse>(&domain.shape())) return reflect_quadric(e->A, e->B, from, to, projected);
    return reflect_quadric(1.0, 1.0, from, to, projected);
}

FptEstimate summarize(const std::vector<double>& times) {
    FptEstimate est;
    est.n_walkers = static_cast<std::int64_t>(times.size());
    Neumaier sum;
    for (double t : times) {
        if (t < 0.0) {
            ++est.n_censored;
        } else {
            ++est.n_absorbed;
            sum.add(t);
        }
    }
    est.censoring_flag = est.n_censored * 100 > est.n_walkers;
    if (est.n_absorbed == 0) {
        est.mean = std::numeric_limits<double>::quiet_NaN();
        est.std_error = std::numeric_limits<double>::quiet_NaN();
        return est;
    }
    const double n = static_cast<double>(est.n_absorbed);
    est.mean = sum.value() / n;
    if (est.n_absorbed < 2) {
        est.std_error = std::numeric_limits<double>::infinity();
        return est;
    }
    Neumaier sq;
    for (double t : times)
        if (t >= 0.0) sq.add((t - est.mean) * (t - est.mean));
    est.std_error = std::sqrt(sq.value() / (n - 1.0) / n);
    return est;
}

std::vector<double> walker_times(const Domain& domain, const Trap& trap, double D, const WalkerConfig& cfg,
                                 const Point2* start) {
    return run_walkers(domain, trap, D, cfg, start).times;
}

FptEstimate simulate_mfpt(const Point2& start, const Domain& domain, const Trap& trap, double D,
                          const WalkerConfig& cfg) {
    return finish(run_walkers(domain, trap, D, cfg, &start), trap, D, cfg);
}

FptEstimate simulate_gmfpt(const Domain& domain, const Trap& trap, double D, const WalkerConfig& cfg) {
    return finish(run_walkers(domain, trap, D, cfg, nullptr), trap, D, cfg);
}

BiasProbeReport timestep_bias_probe(const std::vector<double>& dts, WalkerConfig cfg) {
    require(dts.size() >= 2, "bias probe needs at least two time steps");
    const double eps = 0.1;
    const Domain disk = Domain::unit_disk();
    const Trap trap({0.0, 0.0}, 1.0, 1.0, eps, 0.0);

    BiasProbeReport rep;
    rep.exact = exact_radial_gmfpt(eps, 1.0);
    for (double dt : dts) {
        cfg.dt = dt;
        cfg.max_dt = std::max(cfg.max_dt, dt);
        BiasProbeRow row;
        row.dt = dt;
        row.estimate = simulate_gmfpt(disk, trap, 1.0, cfg);
        row.error = row.estimate.mean - rep.exact;
        rep.rows.push_back(row);
    }

    rep.monotone = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i) {
        require(rep.rows[i].dt < rep.rows[i - 1].dt, "bias probe time steps must decrease");
        if (std::abs(rep.rows[i].error) > std::abs(rep.rows[i - 1].error)) rep.monotone = false;
    }

    const BiasProbeRow& c = rep.rows[rep.rows.size() - 2];
    const BiasProbeRow& f = rep.rows.back();
    const double sc = std::sqrt(c.dt), sf = std::sqrt(f.dt);
    rep.extrapolated = (f.estimate.mean * sc - c.estimate.mean * sf) / (sc - sf);
    rep.extrapolated_std_error =
        std::hypot(sc * f.estimate.std_error, sf * c.estimate.std_error) / (sc - sf);
    return rep;
}

}  // namespace narrowcap
