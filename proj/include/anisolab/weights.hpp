#pragma once

// Pointwise evaluation of the anisotropic weight |x'|^t1 |x|^t2 |x_n|^t3 and
// exact classification of exponent triples against the admissibility regions:
//
//   A    = { t1 > -(n-1), t2 >= 0, t3 > -1 }
//   B    = { t1 > -(n-1), t2 <  0, t3 > -1, t1+t2+t3 > -n }
//   C_p  = { t1 < (n-1)(p-1), t2 <= 0, t3 < p-1 }
//   D_p  = { t1 < (n-1)(p-1), t2 >  0, t3 < p-1, t1+t2+t3 < n(p-1) }
//   F_p0 = { t1 > -(n-1)(p0-1)/p0, t2 >= 0, t3 > -(p0-1)/p0 }
//   G_p0 = { t1 > -(n-1)(p0-1)/p0, t2 <  0, t1+t2+t3 > -n(p0-1)/p0 }
//
// w dx is a Radon measure iff the triple lies in A u B; it is doubling on the
// same range; it is an A_p weight on (A u B) n (C_p u D_p).  Every inequality
// is evaluated with the strict/weak distinction written above.

#include <map>
#include <optional>
#include <sstream>

#include "anisolab/core.hpp"

namespace anisolab {

/// Outcome of a single region-membership test with the first violated
/// defining inequality when it fails.
struct RegionCheck {
    bool ok = true;
    std::string witness;  // empty when ok

    explicit operator bool() const { return ok; }
};

namespace detail {

inline std::string describe(const char* text, double lhs, double rhs) {
    std::ostringstream os;
    os << text << " violated (" << lhs << " vs " << rhs << ")";
    return os.str();
}

}  // namespace detail

/// Membership in A u B (the Radon-measure range).  The two sets are
/// distinguished by the sign of theta2.
inline RegionCheck in_radon_region(const WeightParams& t) {
    t.validate();
    const double bound1 = -(t.n - 1.0);
    if (!(t.theta1 > bound1))
        return {false, detail::describe("theta1 > -(n-1)", t.theta1, bound1)};
    if (!(t.theta3 > -1.0))
        return {false, detail::describe("theta3 > -1", t.theta3, -1.0)};
    if (t.theta2 >= 0.0) return {true, {}};  // set A
    // set B
    if (!(t.sum() > -t.n))
        return {false, detail::describe("theta1+theta2+theta3 > -n (set B)", t.sum(), -double(t.n))};
    return {true, {}};
}

/// Membership in C_p u D_p (the dual-integrability range).
inline RegionCheck in_cd_region(const WeightParams& t, double p) {
    t.validate();
    if (!(p > 1.0)) throw std::invalid_argument("in_cd_region: p must be > 1");
    const double b1 = (t.n - 1.0) * (p - 1.0);
    if (!(t.theta1 < b1))
        return {false, detail::describe("theta1 < (n-1)(p-1)", t.theta1, b1)};
    if (!(t.theta3 < p - 1.0))
        return {false, detail::describe("theta3 < p-1", t.theta3, p - 1.0)};
    if (t.theta2 <= 0.0) return {true, {}};  // set C_p
    // set D_p
    const double bs = t.n * (p - 1.0);
    if (!(t.sum() < bs))
        return {false, detail::describe("theta1+theta2+theta3 < n(p-1) (set D_p)", t.sum(), bs)};
    return {true, {}};
}

/// Membership in (A u B) n (C_p u D_p), the A_p admissibility range.
inline RegionCheck in_ap_region(const WeightParams& t, double p) {
    if (auto r = in_radon_region(t); !r) return r;
    return in_cd_region(t, p);
}

/// Membership in F_p0 u G_p0 (the mixed Poincare range), 1 < p0 < n/(n-1).
inline RegionCheck in_mixed_poincare_region(const WeightParams& t, double p0) {
    t.validate();
    if (!(p0 > 1.0 && p0 < double(t.n) / (t.n - 1.0)))
        throw std::invalid_argument("in_mixed_poincare_region: need 1 < p0 < n/(n-1)");
    const double c = (p0 - 1.0) / p0;
    const double b1 = -(t.n - 1.0) * c;
    if (!(t.theta1 > b1))
        return {false, detail::describe("theta1 > -(n-1)(p0-1)/p0", t.theta1, b1)};
    if (t.theta2 >= 0.0) {  // set F_p0
        if (!(t.theta3 > -c))
            return {false, detail::describe("theta3 > -(p0-1)/p0 (set F)", t.theta3, -c)};
        return {true, {}};
    }
    // set G_p0
    if (!(t.sum() > -t.n * c))
        return {false, detail::describe("theta1+theta2+theta3 > -n(p0-1)/p0 (set G)", t.sum(), -t.n * c)};
    return {true, {}};
}

/// The quasiconformal special case of the Sobolev embedding:
/// theta1 = theta3 = 0 and theta2 >= n(p-1).
inline bool sobolev_special_case(const WeightParams& t, double p) {
    return t.theta1 == 0.0 && t.theta3 == 0.0 && t.theta2 >= t.n * (p - 1.0);
}

/// Sobolev gain exponent chi = (n + sum theta) / (n + sum theta - p).
inline double chi_exponent(const WeightParams& t, double p) {
    t.validate();
    if (!(p > 0.0)) throw std::invalid_argument("chi_exponent: p must be positive");
    const double ns = t.n + t.sum();
    if (!(ns > p))
        throw SupercriticalError("chi_exponent: supercritical, n + sum(theta) <= p");
    return ns / (ns - p);
}

/// Decay exponent alpha = (-n + sqrt(n^2 + 4 lambda1)) / 2 of the
/// separated solution r^alpha for the |x|^2-weighted Laplacian.
inline double reference_alpha(int n, double lambda1) {
    if (n < 2) throw std::invalid_argument("reference_alpha: n must be >= 2");
    if (!(lambda1 > 0.0)) throw std::invalid_argument("reference_alpha: lambda1 must be > 0");
    return 0.5 * (-n + std::sqrt(double(n) * n + 4.0 * lambda1));
}

/// Probe exponents accompanying a classification request.
struct ProbeExponents {
    double p = 2.0;    // A_p / p-Laplace exponent, > 1
    double q = 1.5;    // Sobolev auxiliary exponent, in (1, p)
    double p0 = 1.25;  // mixed Poincare exponent, in (1, n/(n-1))
    double m = 4.0;    // source integrability, > (n + sum theta)/p

    void validate(const WeightParams& t) const {
        if (!(p > 1.0)) throw std::invalid_argument("ProbeExponents: p must be > 1");
        if (!(q > 1.0 && q < p)) throw std::invalid_argument("ProbeExponents: need 1 < q < p");
        if (!(p0 > 1.0 && p0 < double(t.n) / (t.n - 1.0)))
            throw std::invalid_argument("ProbeExponents: need 1 < p0 < n/(n-1)");
        if (!(m > (t.n + t.sum()) / p))
            throw std::invalid_argument("ProbeExponents: need m > (n + sum theta)/p");
    }

    /// chi for these probes, when subcritical.
    double chi(const WeightParams& t) const { return chi_exponent(t, p); }
};

/// Full region classification of one exponent triple.
struct RegionReport {
    bool is_radon = false;
    bool is_doubling = false;  // == is_radon (Radon range is exactly the doubling range)
    std::map<double, bool> ap;
    bool sobolev_admissible = false;
    bool poincare_mixed_admissible = false;
    std::string witness;  // first violated inequality among the failed flags

    bool ap_at(double p) const {
        auto it = ap.find(p);
        if (it == ap.end()) throw std::out_of_range("RegionReport: no A_p record for this p");
        return it->second;
    }
};

/// Evaluate every region flag for `t` at the probe exponents; extra_ap lists
/// additional p values to classify against C_p u D_p.
inline RegionReport classify(const WeightParams& t, const ProbeExponents& probes,
                             std::span<const double> extra_ap = {}) {
    probes.validate(t);
    RegionReport rep;

    const RegionCheck radon = in_radon_region(t);
    rep.is_radon = radon.ok;
    rep.is_doubling = radon.ok;  // Radon iff doubling for this family
    if (!radon.ok) rep.witness = radon.witness;

    auto ap_check = [&](double p) {
        const RegionCheck cd = in_cd_region(t, p);
        const bool member = radon.ok && cd.ok;
        rep.ap[p] = member;
        if (!member && rep.witness.empty()) rep.witness = radon.ok ? cd.witness : radon.witness;
        return member;
    };
    const bool ap_p = ap_check(probes.p);
    for (double p : extra_ap) ap_check(p);

    // Sobolev embedding hypothesis at (p, q): 1 < q < p < nq, sum theta >= n(q-1),
    // and membership in the A_p range or the quasiconformal special case.
    const bool q_window = probes.q > 1.0 && probes.q < probes.p && probes.p < t.n * probes.q;
    const bool moment = t.sum() >= t.n * (probes.q - 1.0);
    rep.sobolev_admissible = q_window && moment && (ap_p || sobolev_special_case(t, probes.p));
    if (!rep.sobolev_admissible && rep.witness.empty()) {
        if (!q_window)
            rep.witness = "1 < q < p < nq violated";
        else if (!moment)
            rep.witness = detail::describe("theta1+theta2+theta3 >= n(q-1)", t.sum(), t.n * (probes.q - 1.0));
    }

    const RegionCheck mixed = in_mixed_poincare_region(t, probes.p0);
    rep.poincare_mixed_admissible = mixed.ok;
    if (!mixed.ok && rep.witness.empty()) rep.witness = mixed.witness;

    return rep;
}

/// Does some q in (1, p) satisfy the Sobolev hypotheses p < nq and
/// sum theta >= n(q-1)?  Used as the admissibility gate for problem data.
inline bool sobolev_admissible_exists(const WeightParams& t, double p) {
    if (!(p > 1.0)) return false;
    const double q_lo = std::max(1.0, p / t.n);
    const double q_hi = std::min(p, 1.0 + t.sum() / t.n);
    const bool window = q_hi > q_lo;
    return window && (in_ap_region(t, p).ok || sobolev_special_case(t, p));
}

namespace detail {

/// One factor base^exponent on the extended half line.
/// base == 0 with negative exponent -> +inf; with positive exponent -> 0.
struct FactorValue {
    bool zero = false;
    bool inf = false;
    double log_value = 0.0;  // log of the finite positive value, else unused
};

inline FactorValue eval_factor(double base, double exponent) {
    FactorValue f;
    if (exponent == 0.0) return f;  // identically 1, even on the zero set
    if (base == 0.0) {
        if (exponent > 0.0)
            f.zero = true;
        else
            f.inf = true;
        return f;
    }
    f.log_value = exponent * std::log(base);
    return f;
}

}  // namespace detail

/// w(x) = |x'|^t1 |x|^t2 |x_n|^t3 with extended-value semantics on the
/// singular sets (0 and +inf collapse to a "singular" marker when both occur).
inline ExtendedValue eval_weight(const WeightParams& t, std::span<const double> x) {
    t.validate();
    detail::check_dimension(t, x);
    const detail::FactorValue f1 = detail::eval_factor(detail::prime_norm(x), t.theta1);
    const detail::FactorValue f2 = detail::eval_factor(detail::full_norm(x), t.theta2);
    const detail::FactorValue f3 = detail::eval_factor(std::abs(x.back()), t.theta3);

    const bool any_zero = f1.zero || f2.zero || f3.zero;
    const bool any_inf = f1.inf || f2.inf || f3.inf;
    if (any_zero && any_inf) return ExtendedValue::singular();
    if (any_inf) return ExtendedValue::infinite();
    if (any_zero) return ExtendedValue::finite(0.0);
    return ExtendedValue::finite(std::exp(f1.log_value + f2.log_value + f3.log_value));
}

/// Dual weight w^{-1/(p-1)} evaluated pointwise.
inline ExtendedValue eval_dual_weight(const WeightParams& t, double p, std::span<const double> x) {
    return eval_weight(t.dual(p), x);
}

/// pow with fast paths for the handful of exponents the scans hammer on.
inline double pow_fast(double b, double e) {
    if (e == 0.0) return 1.0;
    if (e == 1.0) return b;
    if (e == 2.0) return b * b;
    if (e == -1.0) return 1.0 / b;
    if (e == 0.5) return std::sqrt(b);
    if (e == -0.5) return 1.0 / std::sqrt(b);
    if (e == 1.5) return b * std::sqrt(b);
    if (e == -2.0) return 1.0 / (b * b);
    if (e == 0.25) return std::sqrt(std::sqrt(b));
    if (e == -0.25) return 1.0 / std::sqrt(std::sqrt(b));
    if (e == 3.0) return b * b * b;
    return std::pow(b, e);
}

/// Fast positive-point evaluation in reduced coordinates (s = |x'|, x_n),
/// assuming s > 0 and x_n != 0 (or the matching exponent vanishes).  This is
/// the quadrature hot path; callers guarantee nonsingular arguments.
inline double weight_reduced(const WeightParams& t, double s, double xn) {
    double v = 1.0;
    if (t.theta1 != 0.0) v *= pow_fast(s, t.theta1);
    if (t.theta2 != 0.0) v *= pow_fast(s * s + xn * xn, 0.5 * t.theta2);
    if (t.theta3 != 0.0) v *= pow_fast(std::abs(xn), t.theta3);
    return v;
}

}  // namespace anisolab
