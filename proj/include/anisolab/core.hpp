#pragma once

// Core value types shared by every module: the weight-exponent triple,
// extended nonnegative values (finite / +inf / 0*inf), geometric regions,
// and the exception hierarchy for analysis-level failures.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace anisolab {

inline constexpr double kPi = std::numbers::pi;

/// Volume of the unit ball in R^d (d >= 0).
inline double unit_ball_volume(int d) {
    if (d < 0) throw std::invalid_argument("unit_ball_volume: d < 0");
    // omega_d = pi^{d/2} / Gamma(d/2 + 1)
    return std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

/// Surface measure of the unit sphere S^d embedded in R^{d+1}.
/// S^0 = {-1, +1} carries counting measure 2.
inline double unit_sphere_area(int d) {
    if (d < 0) throw std::invalid_argument("unit_sphere_area: d < 0");
    if (d == 0) return 2.0;
    return (d + 1) * unit_ball_volume(d + 1);
}

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Thrown when an integral is known (or detected) to be infinite.
struct DivergentMeasureError : std::runtime_error {
    explicit DivergentMeasureError(const std::string& what_, std::string responsible_ = {})
        : std::runtime_error(what_), responsible(std::move(responsible_)) {}
    std::string responsible;  // which singular set / inequality is to blame
};

/// Thrown by chi_exponent when n + theta1 + theta2 + theta3 <= p.
struct SupercriticalError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Exponent triple (theta1, theta2, theta3) on |x'|, |x|, |x_n| in ambient
/// dimension n >= 2.  For n = 2 the prime part is one-dimensional: |x'| = |x_1|.
struct WeightParams {
    double theta1 = 0.0;
    double theta2 = 0.0;
    double theta3 = 0.0;
    int n = 2;

    double sum() const { return theta1 + theta2 + theta3; }

    /// Exponents of w^{-1/(p-1)}, again a three-factor power weight.
    WeightParams dual(double p) const {
        if (!(p > 1.0)) throw std::invalid_argument("dual weight requires p > 1");
        const double s = -1.0 / (p - 1.0);
        return WeightParams{s * theta1, s * theta2, s * theta3, n};
    }

    /// Exponents of w^c.
    WeightParams power(double c) const { return WeightParams{c * theta1, c * theta2, c * theta3, n}; }

    void validate() const {
        if (n < 2) throw std::invalid_argument("WeightParams: n must be >= 2");
        if (!std::isfinite(theta1) || !std::isfinite(theta2) || !std::isfinite(theta3))
            throw std::invalid_argument("WeightParams: exponents must be finite");
    }

    bool operator==(const WeightParams&) const = default;
};

/// Result of a pointwise weight evaluation on the extended half-line
/// [0, +inf], with a distinguished marker for indeterminate 0 * inf products
/// on the singular sets.
class ExtendedValue {
public:
    enum class Kind { finite, infinite, singular };

    static ExtendedValue finite(double v) { return ExtendedValue(Kind::finite, v); }
    static ExtendedValue infinite() { return ExtendedValue(Kind::infinite, std::numeric_limits<double>::infinity()); }
    static ExtendedValue singular() { return ExtendedValue(Kind::singular, std::numeric_limits<double>::quiet_NaN()); }

    Kind kind() const { return kind_; }
    bool is_finite() const { return kind_ == Kind::finite; }
    bool is_infinite() const { return kind_ == Kind::infinite; }
    bool is_singular() const { return kind_ == Kind::singular; }

    /// Finite value; throws on inf/singular markers.
    double value() const {
        if (kind_ != Kind::finite) throw std::logic_error("ExtendedValue: no finite value");
        return value_;
    }
    /// Value with +inf passed through (singular still throws).
    double value_or_inf() const {
        if (kind_ == Kind::singular) throw std::logic_error("ExtendedValue: singular marker");
        return value_;
    }

private:
    ExtendedValue(Kind k, double v) : kind_(k), value_(v) {}
    Kind kind_;
    double value_;
};

/// Euclidean ball; `half` restricts to the open upper half space {x_n > 0},
/// the upper half ball B_R^+.
struct Ball {
    std::vector<double> center;
    double radius = 1.0;
    bool half = false;

    int dim() const { return static_cast<int>(center.size()); }

    static Ball centered(int n, double radius, bool half = false) {
        return Ball{std::vector<double>(static_cast<std::size_t>(n), 0.0), radius, half};
    }

    void validate() const {
        if (!(radius > 0.0)) throw std::invalid_argument("Ball: radius must be > 0");
        if (center.size() < 2) throw std::invalid_argument("Ball: dimension must be >= 2");
    }

    double center_norm() const {
        double s = 0.0;
        for (double c : center) s += c * c;
        return std::sqrt(s);
    }
    /// |center'| = distance from the x_n-axis.
    double center_prime_norm() const {
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < center.size(); ++i) s += center[i] * center[i];
        return std::sqrt(s);
    }
    double center_xn() const { return center.back(); }

    bool touches_axis() const { return center_prime_norm() <= radius; }
    bool touches_plane() const { return std::abs(center_xn()) <= radius; }
    bool touches_origin() const { return center_norm() <= radius; }
};

/// Axis-aligned cylinder {|x'| < radius} x (xn_min, xn_max); the "box" region
/// used to compare against the prime-ball closed form.
struct Cylinder {
    double radius = 1.0;
    double xn_min = 0.0;
    double xn_max = 1.0;

    void validate() const {
        if (!(radius > 0.0)) throw std::invalid_argument("Cylinder: radius must be > 0");
        if (!(xn_max > xn_min)) throw std::invalid_argument("Cylinder: empty height interval");
    }
};

namespace detail {

inline void check_dimension(const WeightParams& params, std::span<const double> x) {
    if (static_cast<int>(x.size()) != params.n)
        throw DimensionError("point dimension " + std::to_string(x.size()) +
                             " does not match n = " + std::to_string(params.n));
}

inline double prime_norm(std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) s += x[i] * x[i];
    return std::sqrt(s);
}

inline double full_norm(std::span<const double> x) {
    double s = 0.0;
    for (double c : x) s += c * c;
    return std::sqrt(s);
}

}  // namespace detail

}  // namespace anisolab
