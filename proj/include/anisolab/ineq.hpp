#pragma once

// Numerical checks of the weighted Sobolev embedding, the two Poincare
// inequalities, and the level-set isoperimetric inequality, evaluated on
// analytic test functions.  Constants are never estimated: each check reports
// the two sides and their ratio, with the stated R-power factored into the
// right-hand side so admissible configurations are scale-invariant.

#include <json.hpp>

#include "anisolab/quad.hpp"
#include "anisolab/test_functions.hpp"

namespace anisolab {

struct IneqReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
    bool degenerate = false;  // 0/0 marker
    std::string normalization;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["lhs"] = lhs;
        j["rhs"] = rhs;
        j["ratio"] = degenerate ? nlohmann::json("0/0") : nlohmann::json(ratio);
        j["normalization"] = normalization;
        return j;
    }
};

namespace ineqdetail {

inline ScalarField value_field(const TestFunction& u) {
    return [&u](std::span<const double> x) { return u.value(x); };
}
inline ScalarField grad_field(const TestFunction& u) {
    return [&u](std::span<const double> x) { return u.grad_norm(x); };
}

inline void require_axisym(const WeightParams& t, const TestFunction& u) {
    if (t.n >= 3 && !u.axisymmetric())
        throw std::invalid_argument("n >= 3 requires an axisymmetric test function");
}

}  // namespace ineqdetail

/// ||u||_{L^{p chi}(B, w)} / ||grad u||_{L^p(B, w)} for compactly supported u.
inline IneqReport sobolev_ratio(const WeightParams& t, double p, const TestFunction& u,
                                const Ball& ball, const QuadConfig& cfg,
                                std::optional<double> chi_override = {}) {
    ineqdetail::require_axisym(t, u);
    if (!u.supported_in(ball))
        throw std::invalid_argument("sobolev_ratio: u is not compactly supported in the ball");
    const double chi = chi_override ? *chi_override : chi_exponent(t, p);

    const ScalarField uf = ineqdetail::value_field(u);
    const ScalarField gf = ineqdetail::grad_field(u);
    const QuadResult num = integrate_weighted_function(t, uf, p * chi, ball, cfg);
    const QuadResult den = integrate_weighted_function(t, gf, p, ball, cfg);

    IneqReport rep;
    rep.lhs = std::pow(num.value, 1.0 / (p * chi));
    rep.rhs = std::pow(den.value, 1.0 / p);
    if (num.value <= 0.0 && den.value <= 0.0) {
        rep.degenerate = true;
        rep.ratio = std::numeric_limits<double>::quiet_NaN();
    } else {
        rep.ratio = rep.lhs / rep.rhs;
    }
    rep.normalization = "none (both sides over the same ball)";
    return rep;
}

/// Max over scales of |ratio(u_lambda) / ratio(u) - 1|; u_lambda(x) = u(lambda x)
/// lives on the ball of radius support/lambda.  Exactly zero (up to quadrature)
/// iff chi matches the scale-invariant exponent.
inline double dilation_invariance_check(const WeightParams& t, double p, const TestFunction& u,
                                        std::span<const double> scales, const QuadConfig& cfg,
                                        std::optional<double> chi_override = {}) {
    ineqdetail::require_axisym(t, u);
    const double r0 = u.support_radius();
    if (!std::isfinite(r0))
        throw std::invalid_argument("dilation_invariance_check: u must be compactly supported");
    for (const double c : u.support_center())
        if (c != 0.0)
            throw std::invalid_argument("dilation_invariance_check: support must be centered");

    const IneqReport base = sobolev_ratio(t, p, u, Ball::centered(t.n, r0), cfg, chi_override);
    double worst = 0.0;
    for (double lam : scales) {
        if (!(lam > 0.0)) throw std::invalid_argument("dilation scales must be positive");
        if (lam == 1.0) continue;
        const TestFunction ul = TestFunction::dilated(u, lam);
        const IneqReport r =
            sobolev_ratio(t, p, ul, Ball::centered(t.n, r0 / lam), cfg, chi_override);
        worst = std::max(worst, std::abs(r.ratio / base.ratio - 1.0));
    }
    return worst;
}

/// int_B |u - u_B|^pt dmu against R^pt int_B |grad u|^pt dmu, with u_B the
/// mu-average.
inline IneqReport poincare_weighted_ratio(const WeightParams& t, double p_tilde,
                                          const TestFunction& u, const Ball& ball,
                                          const QuadConfig& cfg) {
    if (!(p_tilde > 1.0)) throw std::invalid_argument("poincare_weighted_ratio: p_tilde must be > 1");
    ineqdetail::require_axisym(t, u);

    const double mu = integrate_weight(t, ball, cfg).value;
    const double su = integrate_weighted_signed(t, ineqdetail::value_field(u), ball, cfg).value;
    const double u_bar = su / mu;

    ScalarField dev = [&u, u_bar](std::span<const double> x) { return u.value(x) - u_bar; };
    const double lhs = integrate_weighted_function(t, dev, p_tilde, ball, cfg).value;
    const double grad =
        integrate_weighted_function(t, ineqdetail::grad_field(u), p_tilde, ball, cfg).value;
    const double rhs = std::pow(ball.radius, p_tilde) * grad;

    IneqReport rep;
    rep.lhs = lhs;
    rep.rhs = rhs;
    rep.ratio = rhs > 0.0 ? lhs / rhs : (lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    rep.normalization = "rhs carries R^p_tilde";
    return rep;
}

/// int_B |u - u_B| dmu against R^{1+sum theta} int_B |grad u| dx (unweighted
/// gradient), B centered at the origin; refuses exponents outside F u G.
inline IneqReport poincare_mixed_ratio(const WeightParams& t, double p0, const TestFunction& u,
                                       double R, const QuadConfig& cfg) {
    if (auto rc = in_mixed_poincare_region(t, p0); !rc)
        throw std::domain_error("poincare_mixed_ratio: inadmissible exponents: " + rc.witness);
    ineqdetail::require_axisym(t, u);
    const Ball ball = Ball::centered(t.n, R);

    const double mu = integrate_weight(t, ball, cfg).value;
    const double su = integrate_weighted_signed(t, ineqdetail::value_field(u), ball, cfg).value;
    const double u_bar = su / mu;

    ScalarField dev = [&u, u_bar](std::span<const double> x) { return u.value(x) - u_bar; };
    const double lhs = integrate_weighted_function(t, dev, 1.0, ball, cfg).value;
    const WeightParams lebesgue{0.0, 0.0, 0.0, t.n};
    const double grad =
        integrate_weighted_function(lebesgue, ineqdetail::grad_field(u), 1.0, ball, cfg).value;
    const double rhs = std::pow(R, 1.0 + t.sum()) * grad;

    IneqReport rep;
    rep.lhs = lhs;
    rep.rhs = rhs;
    rep.ratio = rhs > 0.0 ? lhs / rhs : (lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    rep.normalization = "rhs carries R^{1+theta1+theta2+theta3}";
    return rep;
}

/// Both displayed level-set inequalities: (l-k)^pt mu{u>=l}^pt mu{u<=k} and
/// its mirror, against R^{pt(n+sum+1)} int_{k<u<l} |grad u|^pt w dx.
struct IsoperimetricReport {
    double measure_upper = 0.0;  // mu({u >= l} cap B)
    double measure_lower = 0.0;  // mu({u <= k} cap B)
    double band_energy = 0.0;    // int_{k<u<l} |grad u|^pt w
    double lhs_upper = 0.0;
    double lhs_lower = 0.0;
    double rhs = 0.0;
    double ratio_upper = 0.0;
    double ratio_lower = 0.0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["measure_upper"] = measure_upper;
        j["measure_lower"] = measure_lower;
        j["band_energy"] = band_energy;
        j["lhs_upper"] = lhs_upper;
        j["lhs_lower"] = lhs_lower;
        j["rhs"] = rhs;
        j["ratio_upper"] = ratio_upper;
        j["ratio_lower"] = ratio_lower;
        return j;
    }
};

inline IsoperimetricReport isoperimetric_check(const WeightParams& t, double p, double p_tilde,
                                               const TestFunction& u, const Ball& ball, double k,
                                               double l, const QuadConfig& cfg) {
    if (!(l > k)) throw std::invalid_argument("isoperimetric_check: need l > k");
    if (!(1.0 < p_tilde && p_tilde < p))
        throw std::invalid_argument("isoperimetric_check: need 1 < p_tilde < p");
    ineqdetail::require_axisym(t, u);

    ScalarField above = [&u, l](std::span<const double> x) { return u.value(x) >= l ? 1.0 : 0.0; };
    ScalarField below = [&u, k](std::span<const double> x) { return u.value(x) <= k ? 1.0 : 0.0; };
    ScalarField band = [&u, k, l](std::span<const double> x) {
        const double v = u.value(x);
        return (k < v && v < l) ? u.grad_norm(x) : 0.0;
    };

    IsoperimetricReport rep;
    rep.measure_upper = integrate_weighted_function(t, above, 1.0, ball, cfg).value;
    rep.measure_lower = integrate_weighted_function(t, below, 1.0, ball, cfg).value;
    rep.band_energy = integrate_weighted_function(t, band, p_tilde, ball, cfg).value;

    const double dk = std::pow(l - k, p_tilde);
    rep.lhs_upper = dk * std::pow(rep.measure_upper, p_tilde) * rep.measure_lower;
    rep.lhs_lower = dk * std::pow(rep.measure_lower, p_tilde) * rep.measure_upper;
    rep.rhs = std::pow(ball.radius, p_tilde * (t.n + t.sum() + 1.0)) * rep.band_energy;
    rep.ratio_upper = rep.rhs > 0.0 ? rep.lhs_upper / rep.rhs : 0.0;
    rep.ratio_lower = rep.rhs > 0.0 ? rep.lhs_lower / rep.rhs : 0.0;
    return rep;
}

}  // namespace anisolab
