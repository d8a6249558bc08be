#pragma once

// Weighted integration over balls, half-balls, cylinders and mesh polygons.
//
// Every centered (axis-symmetric) region reduces to two dimensions in
// cylindrical coordinates (s = |x'|, x_n) with the angular part integrated
// analytically through the (n-2)-sphere area; the reduced integrand is
//   s^{n-2+t1} (s^2 + x_n^2)^{t2/2} |x_n|^{t3}.
// Off-center balls in the plane are integrated as iterated planar integrals;
// in n = 3, 4 they keep the (s, x_n) reduction with the exact spherical-cap
// angular measure as an extra factor.  The chord variable of a ball is
// parameterized as x = c - R cos(psi) so the sqrt-vanishing chord width
// becomes a plain algebraic zero.  All paths share the graded 1-D engine, so
// grading toward {s = 0}, {x_n = 0} and the origin is uniform ratio-1/2
// geometric subdivision with per-cell Gauss panels.
//
// For non-Radon exponents the integral is refused before sampling whenever
// the region touches the responsible singular set.

#include <functional>
#include <random>

#include "anisolab/quad1d.hpp"
#include "anisolab/weights.hpp"

namespace anisolab {

enum class QuadMethod { graded_product, monte_carlo_importance };

struct QuadConfig {
    double rel_tol = 1e-6;
    double abs_tol = 1e-14;
    long max_evals = 80'000'000;
    std::uint64_t seed = 0;
    QuadMethod method = QuadMethod::graded_product;
    int gauss_order = 8;

    void validate() const {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
            throw std::invalid_argument("QuadConfig: tolerances must be positive");
        if (max_evals < 1000) throw std::invalid_argument("QuadConfig: max_evals must be >= 1e3");
    }
};

struct QuadResult {
    double value = 0.0;
    double err_est = 0.0;
    long evals = 0;
    bool converged = false;
};

/// Scalar field on R^n; points arrive as spans of length n.
using ScalarField = std::function<double(std::span<const double>)>;

/// Closed form for the prime-ball integral: int_{B'_rho(0')} |x'|^{t1} dx'
/// = (n-1) omega_{n-1} / (n-1+t1) * rho^{n-1+t1}.
inline double exact_prime_ball(double theta1, int n, double rho) {
    if (n < 2) throw std::invalid_argument("exact_prime_ball: n must be >= 2");
    if (!(rho > 0.0)) throw std::invalid_argument("exact_prime_ball: rho must be > 0");
    if (!(theta1 > -(n - 1.0)))
        throw DivergentMeasureError("exact_prime_ball: theta1 <= -(n-1)", "axis {x'=0}");
    const double c = n - 1.0 + theta1;
    return (n - 1.0) * unit_ball_volume(n - 1) / c * std::pow(rho, c);
}

namespace quaddetail {

using quad1d::PointSpec;

struct Spec1D {
    double a = 0.0, b = 0.0;
    std::vector<PointSpec> pts;
};

/// Refuse integrals that the region classification proves infinite.
inline void precheck_divergence(const WeightParams& t, bool touches_axis, bool touches_plane,
                                bool touches_origin) {
    t.validate();
    if (!(t.theta1 > -(t.n - 1.0)) && touches_axis)
        throw DivergentMeasureError("divergent-measure: theta1 <= -(n-1) on the axis {x'=0}",
                                    "axis {x'=0}");
    if (!(t.theta3 > -1.0) && touches_plane)
        throw DivergentMeasureError("divergent-measure: theta3 <= -1 on the plane {x_n=0}",
                                    "plane {x_n=0}");
    if (t.theta2 < 0.0 && !(t.sum() > -t.n) && touches_origin)
        throw DivergentMeasureError("divergent-measure: theta1+theta2+theta3 <= -n at the origin",
                                    "origin");
}

/// Local power of the reduced integrand in x_n at x_n = 0; when the region
/// reaches the origin the inner s-integral can add theta2 (and the s-profile)
/// to the visible power.
inline double xn_zero_strength(const WeightParams& t, bool near_origin) {
    if (!near_origin) return t.theta3;
    return std::min(t.theta3, t.n - 1.0 + t.sum());
}

/// s^{n-2} for n <= 4.
inline double s_jacobian(int n, double s) {
    if (n == 2) return 1.0;
    if (n == 3) return s;
    return s * s;
}

/// Chord chart x = c - R cos(psi): psi in [0, pi] sweeps [c-R, c+R] with a
/// smooth polynomial zero of the chord width at both ends.
struct ChordChart {
    double c, R;
    double x_of(double psi) const { return c - R * std::cos(psi); }
    double psi_of(double x) const { return std::acos(std::clamp((c - x) / R, -1.0, 1.0)); }
    double jac(double psi) const { return R * std::sin(psi); }
};

template <class InnerOf, class F2>
quad1d::Result one_pass(const Spec1D& outer, const InnerOf& inner_of, const F2& f2,
                        const quad1d::Options& oopt, const quad1d::Options& iopt,
                        quad1d::Budget& budget, double* max_inner_err) {
    double worst = 0.0;
    auto fo = [&](double xo) {
        Spec1D is = inner_of(xo);
        if (!(is.b > is.a)) return 0.0;
        auto fi = [&](double xi) { return f2(xo, xi); };
        quad1d::Result r = quad1d::integrate(fi, is.a, is.b, std::move(is.pts), iopt, budget);
        worst = std::max(worst, r.err);
        return r.value;
    };
    quad1d::Result out = quad1d::integrate(fo, outer.a, outer.b, outer.pts, oopt, budget);
    if (max_inner_err) *max_inner_err = worst;
    return out;
}

/// Two-phase driver: a coarse structural pass fixes the scale, then the full
/// pass runs at abs target max(abs_tol, rel_tol * |coarse| / 2).
/// forced_depth >= 0 switches to single-pass probe semantics.
template <class InnerOf, class F2>
QuadResult run_iterated(const Spec1D& outer, const InnerOf& inner_of, const F2& f2,
                        const QuadConfig& cfg, int forced_depth = -1) {
    quad1d::Budget budget;
    budget.max_evals = cfg.max_evals;
    QuadResult q;
    if (!(outer.b > outer.a)) return q;

    if (forced_depth >= 0) {
        quad1d::Options opt;
        opt.abs_tol = 1e300;  // panels accept on first refinement; cells stay cheap
        opt.gauss_order = cfg.gauss_order;
        opt.forced_depth = forced_depth;
        opt.divergence_guard = false;
        quad1d::Result r = one_pass(outer, inner_of, f2, opt, opt, budget, nullptr);
        q.value = r.value;
        q.err_est = r.err;
        q.evals = budget.evals;
        q.converged = r.converged && !budget.exhausted;
        return q;
    }

    quad1d::Options coarse;
    coarse.abs_tol = 1e300;
    coarse.rel_tol = 0.02;
    coarse.gauss_order = 6;
    coarse.max_depth = 6;
    coarse.max_graded_cells = 14;
    const quad1d::Result first = one_pass(outer, inner_of, f2, coarse, coarse, budget, nullptr);

    const double target = std::max(cfg.abs_tol, 0.5 * cfg.rel_tol * std::abs(first.value));
    quad1d::Options oopt;
    oopt.abs_tol = 0.6 * target;
    oopt.rel_tol = 0.15 * cfg.rel_tol;
    oopt.gauss_order = cfg.gauss_order;
    // bounds the exponential refinement an outer pass can waste chasing the
    // localization noise of discontinuous inner integrands
    oopt.max_panels = 2000;
    quad1d::Options iopt = oopt;
    iopt.abs_tol = 0.3 * target / (outer.b - outer.a);
    iopt.rel_tol = 0.25 * cfg.rel_tol;
    iopt.max_panels = std::numeric_limits<long>::max();
    oopt.noise_per_len = iopt.abs_tol;

    double inner_err = 0.0;
    quad1d::Result r = one_pass(outer, inner_of, f2, oopt, iopt, budget, &inner_err);
    q.value = r.value;
    // inner contribution bounded by the realized per-call error over the
    // outer extent
    q.err_est = r.err + 0.5 * std::max(iopt.abs_tol, inner_err) * (outer.b - outer.a) +
                iopt.rel_tol * std::abs(q.value);
    q.evals = budget.evals;
    q.converged = !budget.exhausted &&
                  q.err_est <= std::max(cfg.rel_tol * std::abs(q.value), cfg.abs_tol);
    return q;
}

// ---------------------------------------------------------------------------
// Ball and cylinder paths.  Extra(s_or_x1, xn) multiplies the weight; it is
// the hook for |f|^power factors.
// ---------------------------------------------------------------------------

/// Ball centered on the x_n-axis (incl. the origin), reduced coordinates;
/// outer variable is the chord angle psi with x_n = z - R cos(psi).  Probe
/// mode (forced_depth >= 0) keeps the raw x_n variable: dyadic cells toward
/// the chart image of {x_n = 0} bottom out at machine precision, while raw
/// cells toward 0 do not.
template <class Extra>
QuadResult ball_axis_path(const WeightParams& t, double z, double R, bool half, const Extra& extra,
                          const QuadConfig& cfg, int forced_depth = -1) {
    if (half && z + R <= 0.0) return {};
    const bool raw = forced_depth >= 0;
    const ChordChart chart{z, R};
    const bool clip = half && (z - R < 0.0);
    const bool origin_inside = std::abs(z) <= R;
    const double xlo = clip ? 0.0 : z - R, xhi = z + R;

    Spec1D outer;
    if (raw) {
        outer = {xlo, xhi, {}};
        if (!clip) outer.pts.push_back({z - R, true, 0.5 * (t.n - 1.0 + t.theta1)});
        outer.pts.push_back({z + R, true, 0.5 * (t.n - 1.0 + t.theta1)});
        if (xlo <= 0.0 && 0.0 <= xhi)
            outer.pts.push_back({0.0, true, xn_zero_strength(t, origin_inside)});
    } else {
        outer = {clip ? chart.psi_of(0.0) : 0.0, kPi, {}};
        const double end_strength = t.n + t.theta1;  // chord width ^ (n-1+t1), jacobian included
        if (!clip) outer.pts.push_back({0.0, true, end_strength});
        outer.pts.push_back({kPi, true, end_strength});
        if (z - R <= 0.0 && 0.0 <= z + R)
            outer.pts.push_back({chart.psi_of(0.0), true, xn_zero_strength(t, origin_inside)});
    }

    const double area = unit_sphere_area(t.n - 2);
    auto inner_of = [=](double u) {
        const double xn = raw ? u : chart.x_of(u);
        const double d = xn - z;
        const double g2 = R * R - d * d;
        Spec1D is;
        if (g2 <= 0.0) return is;
        is.a = 0.0;
        is.b = std::sqrt(g2);
        is.pts.push_back({0.0, true, t.n - 2.0 + t.theta1});
        const double ax = std::abs(xn);
        if (ax > 0.0 && ax < is.b) is.pts.push_back({ax, false, 0.0});
        return is;
    };
    auto f2 = [&t, area, chart, raw, &extra](double u, double s) {
        const double xn = raw ? u : chart.x_of(u);
        return area * weight_reduced(t, s, xn) * s_jacobian(t.n, s) * extra(s, xn) *
               (raw ? 1.0 : chart.jac(u));
    };
    return run_iterated(outer, inner_of, f2, cfg, forced_depth);
}

/// Generic planar ball, n = 2; outer variable is the chord angle of x_1
/// (raw x_1 in probe mode).
template <class Extra>
QuadResult ball_planar_path(const WeightParams& t, double c1, double c2, double R, bool half,
                            const Extra& extra, const QuadConfig& cfg, int forced_depth = -1) {
    if (half && c2 + R <= 0.0) return {};
    const bool raw = forced_depth >= 0;
    const ChordChart chart{c1, R};
    const bool origin_inside = std::hypot(c1, c2) <= R;
    const double s0 = origin_inside ? std::min(t.theta1, t.theta1 + t.theta2 + t.theta3 + 1.0)
                                    : t.theta1;

    Spec1D outer;
    if (raw) {
        outer = {c1 - R, c1 + R, {}};
        outer.pts.push_back({c1 - R, true, 0.5});
        outer.pts.push_back({c1 + R, true, 0.5});
        if (c1 - R <= 0.0 && 0.0 <= c1 + R) outer.pts.push_back({0.0, true, s0});
    } else {
        outer = {0.0, kPi, {}};
        const double end_strength = 2.0 + (std::abs(c2) < 1e-14 ? std::min(0.0, t.theta3) : 0.0);
        outer.pts.push_back({0.0, true, end_strength});
        outer.pts.push_back({kPi, true, end_strength});
        if (c1 - R <= 0.0 && 0.0 <= c1 + R)
            outer.pts.push_back({chart.psi_of(0.0), true, s0});
    }
    auto inner_of = [=](double u) {
        const double x1 = raw ? u : chart.x_of(u);
        const double d = x1 - c1;
        const double g2 = R * R - d * d;
        Spec1D is;
        if (g2 <= 0.0) return is;
        const double g = std::sqrt(g2);
        is.a = c2 - g;
        is.b = c2 + g;
        if (half) is.a = std::max(is.a, 0.0);
        if (!(is.b > is.a)) return Spec1D{};
        if (is.a <= 0.0 && 0.0 <= is.b) is.pts.push_back({0.0, true, t.theta3});
        const double ax = std::abs(x1);
        if (ax > is.a && ax < is.b) is.pts.push_back({ax, false, 0.0});
        if (-ax > is.a && -ax < is.b) is.pts.push_back({-ax, false, 0.0});
        return is;
    };
    auto f2 = [&t, chart, raw, &extra](double u, double x2) {
        const double x1 = raw ? u : chart.x_of(u);
        return weight_reduced(t, std::abs(x1), x2) * extra(x1, x2) * (raw ? 1.0 : chart.jac(u));
    };
    return run_iterated(outer, inner_of, f2, cfg, forced_depth);
}

/// Spherical-cap measure of {omega in S^{n-2} : omega . e >= tau}.
inline double cap_measure(int n, double tau) {
    if (tau <= -1.0) return unit_sphere_area(n - 2);
    if (tau >= 1.0) return 0.0;
    if (n == 3) return 2.0 * std::acos(tau);
    if (n == 4) return 2.0 * kPi * (1.0 - tau);
    throw std::invalid_argument("cap_measure: off-axis balls supported for n <= 4 only");
}

/// Off-axis ball, n = 3 or 4: reduced (s, x_n) with the angular cap factor.
template <class Extra>
QuadResult ball_cap_path(const WeightParams& t, double a, double z, double R, bool half,
                         const Extra& extra, const QuadConfig& cfg, int forced_depth = -1) {
    if (half && z + R <= 0.0) return {};
    const bool raw = forced_depth >= 0;
    const ChordChart chart{z, R};
    const bool clip = half && (z - R < 0.0);
    const bool origin_inside = std::hypot(a, z) <= R;

    Spec1D outer;
    if (raw) {
        outer = {clip ? 0.0 : z - R, z + R, {}};
        if (!clip) outer.pts.push_back({z - R, true, 1.0});
        outer.pts.push_back({z + R, true, 1.0});
        if (z - R <= 0.0 && 0.0 <= z + R)
            outer.pts.push_back({0.0, true, xn_zero_strength(t, origin_inside)});
        if (a < R) {
            const double h = std::sqrt(R * R - a * a);
            outer.pts.push_back({z - h, false, 0.0});
            outer.pts.push_back({z + h, false, 0.0});
        }
    } else {
        outer = {clip ? chart.psi_of(0.0) : 0.0, kPi, {}};
        const double end_strength = 2.0 + ((std::abs(z) == R) ? std::min(0.0, t.theta3) : 0.0);
        if (!clip) outer.pts.push_back({0.0, true, end_strength});
        outer.pts.push_back({kPi, true, end_strength});
        if (z - R <= 0.0 && 0.0 <= z + R)
            outer.pts.push_back({chart.psi_of(0.0), true, xn_zero_strength(t, origin_inside)});
        if (a < R) {
            // the s-range gains/loses its axis end where q crosses a
            const double h = std::sqrt(R * R - a * a);
            outer.pts.push_back({chart.psi_of(z - h), false, 0.0});
            outer.pts.push_back({chart.psi_of(z + h), false, 0.0});
        }
    }

    auto inner_of = [=](double u) {
        const double xn = raw ? u : chart.x_of(u);
        const double d = xn - z;
        const double q2 = R * R - d * d;
        Spec1D is;
        if (q2 <= 0.0) return is;
        const double q = std::sqrt(q2);
        is.a = std::max(0.0, a - q);
        is.b = a + q;
        if (is.a == 0.0) is.pts.push_back({0.0, true, t.n - 2.0 + t.theta1});
        const double kink = std::abs(q - a);
        if (kink > is.a && kink < is.b) is.pts.push_back({kink, true, 0.5});
        is.pts.push_back({is.b, true, 0.5});  // cap measure vanishes like sqrt
        const double ax = std::abs(xn);
        if (ax > is.a && ax < is.b) is.pts.push_back({ax, false, 0.0});
        return is;
    };
    auto f2 = [&t, a, z, R, chart, raw, &extra](double u, double s) {
        const double xn = raw ? u : chart.x_of(u);
        const double d = xn - z;
        const double q2 = R * R - d * d;
        const double tau = (s * s + a * a - q2) / (2.0 * s * a);
        const double cm = cap_measure(t.n, tau);
        if (cm == 0.0) return 0.0;
        return weight_reduced(t, s, xn) * s_jacobian(t.n, s) * cm * extra(s, xn) *
               (raw ? 1.0 : chart.jac(u));
    };
    return run_iterated(outer, inner_of, f2, cfg, forced_depth);
}

template <class Extra>
QuadResult cylinder_path(const WeightParams& t, double rho, double z0, double z1,
                         const Extra& extra, const QuadConfig& cfg, int forced_depth = -1) {
    Spec1D outer{z0, z1, {}};
    if (z0 <= 0.0 && 0.0 <= z1) outer.pts.push_back({0.0, true, xn_zero_strength(t, true)});
    auto inner_of = [=](double xn) {
        Spec1D is{0.0, rho, {}};
        is.pts.push_back({0.0, true, t.n - 2.0 + t.theta1});
        const double ax = std::abs(xn);
        if (ax > 0.0 && ax < rho) is.pts.push_back({ax, false, 0.0});
        return is;
    };
    const double area = unit_sphere_area(t.n - 2);
    auto f2 = [&t, area, &extra](double xn, double s) {
        return area * weight_reduced(t, s, xn) * s_jacobian(t.n, s) * extra(s, xn);
    };
    return run_iterated(outer, inner_of, f2, cfg, forced_depth);
}

/// Importance-sampled Monte Carlo over a ball: s and x_n drawn from the exact
/// 1-D power densities on the bounding box, the angle uniformly on S^{n-2}.
template <class Extra>
QuadResult mc_ball(const WeightParams& t, const Ball& ball, const Extra& extra,
                   const QuadConfig& cfg) {
    const int n = t.n;
    const double R = ball.radius;
    const double a = ball.center_prime_norm();
    const double z = ball.center_xn();

    const double s_lo = std::max(0.0, a - R), s_hi = a + R;
    double x_lo = z - R, x_hi = z + R;
    if (ball.half) x_lo = std::max(x_lo, 0.0);
    if (!(x_hi > x_lo)) return {};

    const double cs = n - 2.0 + t.theta1;  // s-density exponent, > -1 on the Radon range
    const double c3 = t.theta3;

    auto pow_mass = [](double lo, double hi, double c) {
        return (std::pow(hi, c + 1.0) - std::pow(lo, c + 1.0)) / (c + 1.0);
    };
    const double s_mass = pow_mass(s_lo, s_hi, cs);
    const double xm_neg = x_lo < 0.0 ? pow_mass(0.0, -x_lo, c3) : 0.0;
    const double xm_pos = x_hi > 0.0 ? pow_mass(0.0, std::max(0.0, x_hi), c3) : 0.0;
    const double xm_sub = (x_lo > 0.0) ? pow_mass(0.0, x_lo, c3)
                                       : (x_hi < 0.0 ? pow_mass(0.0, -x_hi, c3) : 0.0);
    const double x_mass = xm_neg + xm_pos - xm_sub;

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    auto draw_pow = [&](double lo, double hi, double c) {
        const double u = uni(rng);
        const double lp = std::pow(lo, c + 1.0), hp = std::pow(hi, c + 1.0);
        return std::pow(lp + u * (hp - lp), 1.0 / (c + 1.0));
    };
    auto draw_xn = [&]() {
        if (x_lo >= 0.0) return draw_pow(x_lo, x_hi, c3);
        if (x_hi <= 0.0) return -draw_pow(-x_hi, -x_lo, c3);
        const double w_neg = xm_neg / (xm_neg + xm_pos);
        if (uni(rng) < w_neg) return -draw_pow(0.0, -x_lo, c3);
        return draw_pow(0.0, x_hi, c3);
    };

    const double area = unit_sphere_area(n - 2);
    const long N = std::max<long>(1000, std::min<long>(cfg.max_evals, 400'000));
    double sum = 0.0, sum2 = 0.0;
    for (long i = 0; i < N; ++i) {
        const double s = draw_pow(s_lo, s_hi, cs);
        const double xn = draw_xn();
        double cosang = 1.0;
        if (a > 0.0) {
            if (n == 2)
                cosang = (uni(rng) < 0.5) ? 1.0 : -1.0;
            else if (n == 3)
                cosang = std::cos(2.0 * kPi * uni(rng));
            else
                cosang = 2.0 * uni(rng) - 1.0;
        }
        const double dist2 = s * s - 2.0 * s * a * cosang + a * a + (xn - z) * (xn - z);
        double val = 0.0;
        if (dist2 < R * R) {
            const double pdf_s = std::pow(s, cs) / s_mass;
            const double pdf_x = std::pow(std::abs(xn), c3) / x_mass;
            val = weight_reduced(t, s, xn) * s_jacobian(n, s) * area * extra(s, xn) /
                  (pdf_s * pdf_x);
        }
        sum += val;
        sum2 += val * val;
    }
    QuadResult q;
    q.value = sum / N;
    const double var = std::max(0.0, sum2 / N - q.value * q.value);
    q.err_est = std::sqrt(var / N);
    q.evals = N;
    q.converged = q.err_est <= std::max(cfg.rel_tol * std::abs(q.value), cfg.abs_tol);
    return q;
}

struct UnitExtra {
    double operator()(double, double) const { return 1.0; }
};

template <class Extra>
QuadResult dispatch_ball(const WeightParams& t, const Ball& ball, const Extra& extra,
                         const QuadConfig& cfg, int forced_depth, bool planar_force) {
    ball.validate();
    if (ball.dim() != t.n) throw DimensionError("ball dimension does not match weight dimension");
    if (forced_depth < 0)  // probes deliberately sample non-integrable data
        precheck_divergence(t, ball.touches_axis(), ball.touches_plane(), ball.touches_origin());
    if (cfg.method == QuadMethod::monte_carlo_importance && forced_depth < 0 && !planar_force)
        return mc_ball(t, ball, extra, cfg);

    const double a = ball.center_prime_norm();
    const double z = ball.center_xn();
    if (t.n == 2) {
        if (a == 0.0 && !planar_force)
            return ball_axis_path(t, z, ball.radius, ball.half, extra, cfg, forced_depth);
        const double c1 = ball.center[0];
        return ball_planar_path(t, c1, z, ball.radius, ball.half, extra, cfg, forced_depth);
    }
    if (a == 0.0) return ball_axis_path(t, z, ball.radius, ball.half, extra, cfg, forced_depth);
    return ball_cap_path(t, a, z, ball.radius, ball.half, extra, cfg, forced_depth);
}

}  // namespace quaddetail

/// mu(region) = int w dx, graded product rule (or seeded Monte Carlo).
inline QuadResult integrate_weight(const WeightParams& t, const Ball& ball, const QuadConfig& cfg) {
    cfg.validate();
    return quaddetail::dispatch_ball(t, ball, quaddetail::UnitExtra{}, cfg, -1, false);
}

inline QuadResult integrate_weight(const WeightParams& t, const Cylinder& cyl,
                                   const QuadConfig& cfg) {
    cfg.validate();
    cyl.validate();
    quaddetail::precheck_divergence(t, true, cyl.xn_min <= 0.0 && cyl.xn_max >= 0.0,
                                    cyl.xn_min <= 0.0 && cyl.xn_max >= 0.0);
    return quaddetail::cylinder_path(t, cyl.radius, cyl.xn_min, cyl.xn_max,
                                     quaddetail::UnitExtra{}, cfg);
}

/// Graded partial sum capped at `depth` levels toward every singular point
/// with the pinhole cells excluded; monotone in depth for divergent data.
inline QuadResult integrate_weight_probe(const WeightParams& t, const Ball& ball,
                                         const QuadConfig& cfg, int depth) {
    cfg.validate();
    if (depth < 1) throw std::invalid_argument("integrate_weight_probe: depth must be >= 1");
    return quaddetail::dispatch_ball(t, ball, quaddetail::UnitExtra{}, cfg, depth, false);
}

namespace quaddetail {

/// Adapter evaluating an n-dimensional field at reduced or planar coordinates.
/// In `both_signs` mode (n = 2 reduced path) the value is the mean over
/// x_1 = +-s, which makes the axis-reduced integral exact for any field.
struct FieldExtra {
    const ScalarField* f;
    int n;
    bool planar;    // first coordinate is signed x_1 (n = 2) rather than s = |x'|
    double power;   // |f|^power; signed_value keeps the sign (power is 1 then)
    bool signed_value = false;
    bool both_signs = false;

    double eval_one(double u, double xn) const {
        std::array<double, 4> buf{};
        if (planar || both_signs) {
            buf[0] = u;
            buf[1] = xn;
        } else {
            buf[0] = u;
            buf[n - 1] = xn;
        }
        const double v = (*f)(std::span<const double>(buf.data(), static_cast<std::size_t>(n)));
        if (signed_value) return v;
        return power == 1.0 ? std::abs(v) : pow_fast(std::abs(v), power);
    }

    double operator()(double u, double xn) const {
        if (!both_signs) return eval_one(u, xn);
        return 0.5 * (eval_one(u, xn) + eval_one(-u, xn));
    }
};

}  // namespace quaddetail

/// int_region |f|^power w dx.  For n >= 3 the field must be axisymmetric
/// (it is sampled at x = (s, 0, ..., 0, x_n)); n = 2 takes any field.  Balls
/// centered on the axis in n = 2 use the reduced path with both x_1 signs
/// averaged, which keeps level-set integrands cheap.
inline QuadResult integrate_weighted_function(const WeightParams& t, const ScalarField& f,
                                              double power, const Ball& ball,
                                              const QuadConfig& cfg) {
    cfg.validate();
    const bool axis_centered = t.n == 2 && ball.center_prime_norm() == 0.0;
    quaddetail::FieldExtra extra{&f, t.n, t.n == 2 && !axis_centered, power, false, axis_centered};
    return quaddetail::dispatch_ball(t, ball, extra, cfg, -1,
                                     /*planar_force=*/t.n == 2 && !axis_centered);
}

/// Signed int_region f w dx (for mu-averages).
inline QuadResult integrate_weighted_signed(const WeightParams& t, const ScalarField& f,
                                            const Ball& ball, const QuadConfig& cfg) {
    cfg.validate();
    const bool axis_centered = t.n == 2 && ball.center_prime_norm() == 0.0;
    quaddetail::FieldExtra extra{&f, t.n, t.n == 2 && !axis_centered, 1.0, true, axis_centered};
    return quaddetail::dispatch_ball(t, ball, extra, cfg, -1, t.n == 2 && !axis_centered);
}

/// Least-squares fit of log mu(B_r(0)) against log r over log-spaced radii.
struct ScalingFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // RMS of log-space residuals
    std::vector<double> radii;
    std::vector<double> values;
};

/// Fit helper shared with the solver diagnostics.
inline void loglog_fit(std::span<const double> x, std::span<const double> y, double& slope,
                       double& intercept, double& residual) {
    const std::size_t m = x.size();
    if (m < 2 || y.size() != m) throw std::invalid_argument("loglog_fit: need >= 2 samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<double> lx(m), ly(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw std::invalid_argument("loglog_fit: samples must be positive");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double d = m * sxx - sx * sx;
    slope = (m * sxy - sx * sy) / d;
    intercept = (sy - slope * sx) / m;
    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double r = ly[i] - (slope * lx[i] + intercept);
        rss += r * r;
    }
    residual = std::sqrt(rss / m);
}

inline ScalingFit mu_scaling_exponent(const WeightParams& t, double r_min, double r_max,
                                      int num_radii, const QuadConfig& cfg) {
    cfg.validate();
    if (!(0.0 < r_min && r_min < r_max))
        throw std::invalid_argument("mu_scaling_exponent: need 0 < r_min < r_max");
    if (num_radii < 3) throw std::invalid_argument("mu_scaling_exponent: need num_radii >= 3");
    if (auto r = in_radon_region(t); !r)
        throw DivergentMeasureError("mu_scaling_exponent: not a Radon measure: " + r.witness);

    ScalingFit fit;
    for (int i = 0; i < num_radii; ++i) {
        const double u = num_radii == 1 ? 0.0 : double(i) / (num_radii - 1);
        const double r = r_min * std::pow(r_max / r_min, u);
        const QuadResult q = integrate_weight(t, Ball::centered(t.n, r), cfg);
        fit.radii.push_back(r);
        fit.values.push_back(q.value);
    }
    loglog_fit(fit.radii, fit.values, fit.slope, fit.intercept, fit.residual);
    return fit;
}

// ---------------------------------------------------------------------------
// Planar-region quadrature for the mesh: triangles (optionally with a linear
// factor) and circular-arc caps (optionally clipped by a linear level set).
// Coordinates are (x, y) = (x_1, x_2) planar or (s, x_n) axisymmetric; the
// axisymmetric Jacobian x^{n-2} is included, the angular area factor is not.
// ---------------------------------------------------------------------------

using Vec2 = std::array<double, 2>;

namespace quaddetail {

/// w-like factor in mesh coordinates with optional axisymmetric Jacobian.
inline double mesh_weight(const WeightParams& t, bool axisym, double x, double y) {
    double v = weight_reduced(t, std::abs(x), y);
    if (axisym && t.n > 2) v *= s_jacobian(t.n, std::abs(x));
    return v;
}

template <class Extra>
QuadResult strip_integral(const WeightParams& t, bool axisym, double xa, double xb, double lo0,
                          double lo1, double hi0, double hi1, const Extra& extra,
                          const QuadConfig& cfg) {
    Spec1D outer{xa, xb, {}};
    const double sx = (axisym && t.n > 2 ? t.n - 2.0 : 0.0) + t.theta1;
    if (xa <= 0.0 && 0.0 <= xb)
        outer.pts.push_back(
            {0.0, true, std::min(sx, sx + std::min(t.theta2, 0.0) + std::min(t.theta3, 0.0) + 1.0)});
    auto inner_of = [=](double x) {
        Spec1D is;
        is.a = lo0 + lo1 * x;
        is.b = hi0 + hi1 * x;
        if (!(is.b > is.a)) return Spec1D{};
        if (is.a <= 0.0 && 0.0 <= is.b) is.pts.push_back({0.0, true, t.theta3});
        const double ax = std::abs(x);
        if (ax > is.a && ax < is.b) is.pts.push_back({ax, false, 0.0});
        if (-ax > is.a && -ax < is.b) is.pts.push_back({-ax, false, 0.0});
        return is;
    };
    auto f2 = [&](double x, double y) { return mesh_weight(t, axisym, x, y) * extra(x, y); };
    return run_iterated(outer, inner_of, f2, cfg);
}

}  // namespace quaddetail

/// Integral of w (times an optional linear factor a*x + b*y + c) over a
/// triangle; exact grading toward the singular coordinate lines.
inline QuadResult integrate_weight_triangle(const WeightParams& t, bool axisym,
                                            const std::array<Vec2, 3>& tri,
                                            const std::array<double, 3>* linear,
                                            const QuadConfig& cfg) {
    std::array<Vec2, 3> v = tri;
    std::sort(v.begin(), v.end(), [](const Vec2& p, const Vec2& q) { return p[0] < q[0]; });
    const double x0 = v[0][0], x1 = v[1][0], x2 = v[2][0];
    QuadResult total;
    if (!(x2 > x0)) return total;

    auto lerp_y = [](const Vec2& p, const Vec2& q, double x) {
        return p[1] + (q[1] - p[1]) * (x - p[0]) / (q[0] - p[0]);
    };
    auto extra = [linear](double x, double y) {
        return linear ? (*linear)[0] * x + (*linear)[1] * y + (*linear)[2] : 1.0;
    };

    // long edge v0-v2 versus the two short edges; each strip has linear bounds
    auto add_strip = [&](double xa, double xb, const Vec2& e1a, const Vec2& e1b, const Vec2& e2a,
                         const Vec2& e2b) {
        if (!(xb > xa)) return;
        const double xm = 0.5 * (xa + xb);
        double ya = lerp_y(e1a, e1b, xm), yb = lerp_y(e2a, e2b, xm);
        const bool first_low = ya <= yb;
        const Vec2 &la = first_low ? e1a : e2a, &lb = first_low ? e1b : e2b;
        const Vec2 &ha = first_low ? e2a : e1a, &hb = first_low ? e2b : e1b;
        const double lo1 = (lb[1] - la[1]) / (lb[0] - la[0]);
        const double lo0 = la[1] - lo1 * la[0];
        const double hi1 = (hb[1] - ha[1]) / (hb[0] - ha[0]);
        const double hi0 = ha[1] - hi1 * ha[0];
        const QuadResult q =
            quaddetail::strip_integral(t, axisym, xa, xb, lo0, lo1, hi0, hi1, extra, cfg);
        total.value += q.value;
        total.err_est += q.err_est;
        total.evals += q.evals;
    };

    if (x1 > x0) add_strip(x0, x1, v[0], v[1], v[0], v[2]);
    if (x2 > x1) add_strip(x1, x2, v[1], v[2], v[0], v[2]);
    total.converged = total.err_est <= std::max(cfg.rel_tol * std::abs(total.value), cfg.abs_tol);
    return total;
}

/// Linear level-set clip: keep the part of a region where
/// g[0]*x + g[1]*y + g[2] > k (or < k when keep_above is false).
struct LevelClip {
    std::array<double, 3> g{0.0, 0.0, 0.0};
    double k = 0.0;
    bool keep_above = true;
};

/// Integral of w over the circular cap between the chord through angles
/// (phi_a, phi_b) on the circle r = R and the arc itself, optionally clipped
/// by a linear level set and multiplied by a linear factor.
inline QuadResult integrate_weight_cap_region(const WeightParams& t, bool axisym, double phi_a,
                                              double phi_b, double R, const LevelClip* clip,
                                              const std::array<double, 3>* linear,
                                              const QuadConfig& cfg) {
    QuadResult total;
    if (!(phi_b > phi_a)) return total;
    const double phim = 0.5 * (phi_a + phi_b);
    const double d = R * std::cos(0.5 * (phi_b - phi_a));  // chord distance from origin

    quaddetail::Spec1D outer{phi_a, phi_b, {}};
    for (double sphi : {0.0, 0.5 * kPi, kPi}) {
        if (sphi >= phi_a && sphi <= phi_b) {
            const double strength = (sphi == 0.5 * kPi)
                                        ? (axisym && t.n > 2 ? t.n - 2.0 : 0.0) + t.theta1
                                        : t.theta3;
            outer.pts.push_back({sphi, true, strength});
        }
    }
    auto inner_of = [=](double phi) {
        quaddetail::Spec1D is;
        is.a = d / std::cos(phi - phim);
        is.b = R;
        if (!(is.b > is.a)) return quaddetail::Spec1D{};
        if (clip) {
            const double dir = clip->g[0] * std::cos(phi) + clip->g[1] * std::sin(phi);
            const double num = clip->k - clip->g[2];
            if (std::abs(dir) < 1e-300) {
                const bool keep = clip->keep_above ? (clip->g[2] > clip->k) : (clip->g[2] < clip->k);
                if (!keep) return quaddetail::Spec1D{};
            } else {
                const double rstar = num / dir;
                const bool above_for_large_r = dir > 0.0;
                if (clip->keep_above == above_for_large_r)
                    is.a = std::max(is.a, rstar);
                else
                    is.b = std::min(is.b, rstar);
                if (!(is.b > is.a)) return quaddetail::Spec1D{};
            }
        }
        return is;
    };
    auto f2 = [&](double phi, double r) {
        const double x = r * std::cos(phi), y = r * std::sin(phi);
        double v = quaddetail::mesh_weight(t, axisym, x, y) * r;
        if (linear) v *= (*linear)[0] * x + (*linear)[1] * y + (*linear)[2];
        return v;
    };
    return quaddetail::run_iterated(outer, inner_of, f2, cfg);
}

}  // namespace anisolab
