#pragma once

// Empirical Muckenhoupt machinery: A_p quotients and doubling ratios over
// adversarial ball families, with refinement-stability reporting inside the
// admissible regions and forced-depth divergence probes outside them.
//
// The family generator covers the case split of the A_p/doubling proofs by
// construction: centers exactly on each singular set, at the origin, and at
// distances {R/2, 3R, 10R} from each set, so every |center| <> 3R regime is
// exercised at every radius.

#include <json.hpp>

#include "anisolab/parallel.hpp"
#include "anisolab/quad.hpp"

namespace anisolab {

struct BallFamily {
    std::vector<Ball> balls;
    std::string description;
};

/// Deterministic adversarial family; `count` balls total, radii log-spaced in
/// [r_min, r_max], twelve center archetypes per radius.
inline BallFamily adversarial_family(const WeightParams& t, int count, double r_min, double r_max,
                                     std::uint64_t seed) {
    t.validate();
    if (count < 12) throw std::invalid_argument("adversarial_family: count must be >= 12");
    if (!(0.0 < r_min && r_min <= r_max))
        throw std::invalid_argument("adversarial_family: need 0 < r_min <= r_max");

    constexpr int kArchetypes = 12;
    const int n_radii = (count + kArchetypes - 1) / kArchetypes;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    auto unit_dir = [&](bool prime_only) {
        std::vector<double> v(static_cast<std::size_t>(t.n), 0.0);
        double norm = 0.0;
        const std::size_t lim = prime_only ? v.size() - 1 : v.size();
        do {
            norm = 0.0;
            for (std::size_t i = 0; i < lim; ++i) {
                v[i] = gauss(rng);
                norm += v[i] * v[i];
            }
        } while (norm < 1e-12);
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < lim; ++i) v[i] /= norm;
        return v;
    };

    BallFamily fam;
    fam.balls.reserve(static_cast<std::size_t>(count));
    for (int ir = 0; ir < n_radii && static_cast<int>(fam.balls.size()) < count; ++ir) {
        const double u = n_radii == 1 ? 0.0 : double(ir) / (n_radii - 1);
        const double R = r_min * std::pow(r_max / r_min, u);
        // distances from the responsible singular set, straddling the proofs'
        // |center| <> 3R boundaries
        const double dist[3] = {0.5 * R, 3.0 * R, 10.0 * R};

        auto push = [&](std::vector<double> c) {
            if (static_cast<int>(fam.balls.size()) < count)
                fam.balls.push_back(Ball{std::move(c), R, false});
        };

        push(std::vector<double>(static_cast<std::size_t>(t.n), 0.0));  // origin
        for (double d : dist) {  // on the axis {x' = 0}, |center_n| = d
            std::vector<double> c(static_cast<std::size_t>(t.n), 0.0);
            c.back() = d;
            push(std::move(c));
        }
        for (double d : dist) {  // on the plane {x_n = 0}, |center'| = d
            auto dir = unit_dir(true);
            for (auto& x : dir) x *= d;
            push(std::move(dir));
        }
        for (double d : dist) {  // generic direction, |center| = d
            auto dir = unit_dir(false);
            for (auto& x : dir) x *= d;
            push(std::move(dir));
        }
        for (double d : {2.0 * R, 30.0 * R}) {  // generic fillers
            auto dir = unit_dir(false);
            for (auto& x : dir) x *= d;
            push(std::move(dir));
        }
    }

    fam.description = "adversarial: 12 archetypes x " + std::to_string(n_radii) +
                      " log-spaced radii in [" + std::to_string(r_min) + ", " +
                      std::to_string(r_max) + "], seed " + std::to_string(seed) + ", count " +
                      std::to_string(fam.balls.size());
    return fam;
}

/// A_p quotient (avg_B w) (avg_B w^{-1/(p-1)})^{p-1}; +inf when either factor
/// diverges on this ball.
inline double ap_quotient(const WeightParams& t, double p, const Ball& ball,
                          const QuadConfig& cfg) {
    if (!(p > 1.0)) throw std::invalid_argument("ap_quotient: p must be > 1");
    if (ball.half) throw std::invalid_argument("ap_quotient: A_p averages use full balls");
    const double vol = unit_ball_volume(t.n) * std::pow(ball.radius, t.n);
    try {
        const QuadResult qw = integrate_weight(t, ball, cfg);
        const QuadResult qd = integrate_weight(t.dual(p), ball, cfg);
        return (qw.value / vol) * std::pow(qd.value / vol, p - 1.0);
    } catch (const DivergentMeasureError&) {
        return std::numeric_limits<double>::infinity();
    }
}

/// mu(B_2R(c)) / mu(B_R(c)) at matched tolerance.
inline double doubling_ratio(const WeightParams& t, const Ball& ball, const QuadConfig& cfg) {
    if (auto r = in_radon_region(t); !r)
        throw DivergentMeasureError("doubling_ratio: not a Radon measure: " + r.witness);
    Ball doubled = ball;
    doubled.radius *= 2.0;
    const QuadResult q1 = integrate_weight(t, ball, cfg);
    const QuadResult q2 = integrate_weight(t, doubled, cfg);
    return q2.value / q1.value;
}

struct BallStat {
    double value = 0.0;     // quotient or ratio; +inf marks divergence
    bool finite = true;
    bool converged = false;
    bool jensen_fault = false;
};

struct ScanReport {
    std::vector<Ball> balls;
    std::vector<BallStat> items;           // finest level
    std::vector<double> sup_per_level;     // sup over finite values at each level
    double sup = 0.0;
    int argmax_index = -1;
    double min_value = std::numeric_limits<double>::infinity();
    double refinement_stability = 0.0;     // |sup_L - sup_{L-1}| / sup_L
    bool diverged = false;
    int jensen_faults = 0;
    std::string kind;                      // "ap" or "doubling"
    double p = 0.0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["kind"] = kind;
        if (kind == "ap") j["p"] = p;
        j["sup"] = sup;
        j["argmax_index"] = argmax_index;
        j["min_value"] = min_value;
        j["refinement_stability"] = refinement_stability;
        j["diverged"] = diverged;
        j["jensen_faults"] = jensen_faults;
        j["sup_per_level"] = sup_per_level;
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t i = 0; i < items.size(); ++i) {
            nlohmann::json row;
            row["index"] = i;
            row["center"] = balls[i].center;
            row["radius"] = balls[i].radius;
            row["value"] = items[i].finite ? nlohmann::json(items[i].value) : nlohmann::json("inf");
            row["converged"] = items[i].converged;
            rows.push_back(std::move(row));
        }
        j["balls"] = std::move(rows);
        return j;
    }

    /// Fixed schema: index,center_1..center_4,radius,value,converged
    std::string to_csv() const {
        std::ostringstream os;
        os.precision(17);
        os << "index,center_1,center_2,center_3,center_4,radius,value,converged\n";
        for (std::size_t i = 0; i < items.size(); ++i) {
            os << i;
            for (int k = 0; k < 4; ++k) {
                os << ',';
                if (k < static_cast<int>(balls[i].center.size())) os << balls[i].center[k];
            }
            os << ',' << balls[i].radius << ',';
            if (items[i].finite)
                os << items[i].value;
            else
                os << "inf";
            os << ',' << (items[i].converged ? 1 : 0) << '\n';
        }
        return os.str();
    }
};

namespace muckdetail {

template <class Kernel>
ScanReport run_scan(const BallFamily& family, const QuadConfig& cfg, int levels,
                    const Kernel& kernel, const char* kind, double p) {
    if (family.balls.empty()) throw std::invalid_argument("scan: empty family");
    if (levels < 2) levels = 2;
    ScanReport rep;
    rep.kind = kind;
    rep.p = p;
    rep.balls = family.balls;
    const std::size_t nb = family.balls.size();

    std::vector<BallStat> finest;
    for (int lev = 0; lev < levels; ++lev) {
        QuadConfig level_cfg = cfg;
        level_cfg.rel_tol = cfg.rel_tol * std::pow(5.0, levels - 1 - lev);
        std::vector<BallStat> stats(nb);
        parallel_for_indexed(nb, [&](std::size_t i) {
            BallStat s;
            const double v = kernel(family.balls[i], level_cfg);
            s.value = v;
            s.finite = std::isfinite(v);
            s.converged = s.finite;
            s.jensen_fault = s.finite && v < 1.0 - 4.0 * level_cfg.rel_tol;
            stats[i] = s;
        });
        double sup = -std::numeric_limits<double>::infinity();
        for (const auto& s : stats)
            if (s.finite && s.value > sup) sup = s.value;
        rep.sup_per_level.push_back(sup);
        if (lev == levels - 1) finest = std::move(stats);
    }

    rep.items = std::move(finest);
    rep.sup = rep.sup_per_level.back();
    for (std::size_t i = 0; i < nb; ++i) {
        const auto& s = rep.items[i];
        if (!s.finite) rep.diverged = true;
        if (s.finite) {
            if (s.value == rep.sup && rep.argmax_index < 0) rep.argmax_index = static_cast<int>(i);
            rep.min_value = std::min(rep.min_value, s.value);
        }
        if (s.jensen_fault) ++rep.jensen_faults;
    }
    const double s1 = rep.sup_per_level[rep.sup_per_level.size() - 2];
    const double s2 = rep.sup_per_level.back();
    rep.refinement_stability = (std::isfinite(s1) && std::isfinite(s2) && s2 != 0.0)
                                   ? std::abs(s2 - s1) / std::abs(s2)
                                   : std::numeric_limits<double>::quiet_NaN();
    return rep;
}

}  // namespace muckdetail

/// Per-ball A_p quotients at `levels` successively tighter quadrature levels;
/// the report keeps the finest level and the sup trajectory.
inline ScanReport ap_scan(const WeightParams& t, double p, const BallFamily& family,
                          const QuadConfig& cfg, int levels = 2) {
    return muckdetail::run_scan(
        family, cfg, levels,
        [&](const Ball& b, const QuadConfig& c) { return ap_quotient(t, p, b, c); }, "ap", p);
}

/// Doubling ratios over the family; min_value in the report must exceed 1.
inline ScanReport doubling_scan(const WeightParams& t, const BallFamily& family,
                                const QuadConfig& cfg, int levels = 2) {
    return muckdetail::run_scan(
        family, cfg, levels,
        [&](const Ball& b, const QuadConfig& c) { return doubling_ratio(t, b, c); }, "doubling",
        0.0);
}

struct ProbeReport {
    std::vector<int> depths;
    std::vector<double> quotients;
    std::vector<double> growth;  // quotients[k] / quotients[k-1]
    double threshold = 2.0;
    bool divergent = false;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["depths"] = depths;
        j["quotients"] = quotients;
        j["growth"] = growth;
        j["threshold"] = threshold;
        j["divergent"] = divergent;
        return j;
    }
};

/// A_p quotient at geometrically increasing grading depths (x4 per level, the
/// pinhole cells excluded).  Divergent data makes the capped quotients grow
/// without bound; the verdict fires when the growth across the last two steps
/// stays above the threshold.  Depths are capped at 128: beyond that the
/// partial sums of admissible power divergences overflow double precision.
inline ProbeReport divergence_probe(const WeightParams& t, double p, const Ball& ball,
                                    const QuadConfig& cfg, int levels = 4,
                                    double threshold = 2.0) {
    if (levels < 3) throw std::invalid_argument("divergence_probe: levels must be >= 3");
    if (!(p > 1.0)) throw std::invalid_argument("divergence_probe: p must be > 1");
    ProbeReport rep;
    rep.threshold = threshold;
    const double vol = unit_ball_volume(t.n) * std::pow(ball.radius, t.n);
    int depth = 2;
    for (int k = 0; k < levels && depth <= 128; ++k, depth *= 4) {
        const QuadResult qw = integrate_weight_probe(t, ball, cfg, depth);
        const QuadResult qd = integrate_weight_probe(t.dual(p), ball, cfg, depth);
        rep.depths.push_back(depth);
        rep.quotients.push_back((qw.value / vol) * std::pow(qd.value / vol, p - 1.0));
        const std::size_t m = rep.quotients.size();
        if (m > 1) rep.growth.push_back(rep.quotients[m - 1] / rep.quotients[m - 2]);
    }
    const std::size_t g = rep.growth.size();
    rep.divergent = g >= 2 && rep.growth[g - 1] >= threshold && rep.growth[g - 2] >= threshold;
    return rep;
}

}  // namespace anisolab
