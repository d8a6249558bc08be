#pragma once

// Weighted p-Laplace Dirichlet solver on the half-ball and the regularity
// diagnostics built on it: sup bounds, oscillation and decay fits, Holder
// moduli, and De Giorgi level-set profiles.
//
// The solver minimizes the regularized energy
//   E_eps(u) = (1/p) int w (|grad u|^2 + eps^2)^{p/2} - int (f0 + w f1) u
// over continuous P1 fields with the Dirichlet data interpolated on the flat
// part (u = 0) and the arc (u = phi0).  Since grad u is constant per cell,
// the weighted energy term is exactly w_K (|grad u_K|^2 + eps^2)^{p/2} / p:
// the singular weight only ever enters through the cell masses.  eps is
// driven down geometrically with a damped Newton iteration per stage and a
// Picard fallback whenever the Newton step fails to descend.

#include <Eigen/Sparse>
#include <json.hpp>

#include "anisolab/mesh.hpp"
#include "anisolab/test_functions.hpp"

namespace anisolab {

/// Boundary datum on the spherical part, given as a function of the polar
/// angle (phi in (0, pi) planar, (0, pi/2) axisymmetric).
struct BoundaryData {
    std::function<double(double)> fn;
    std::string name = "zero";

    static BoundaryData zero() {
        return {[](double) { return 0.0; }, "zero"};
    }
    static BoundaryData sine(int k = 1) {
        return {[k](double phi) { return std::sin(k * phi); }, "sin" + std::to_string(k)};
    }

    double sup_norm(double range) const {
        double s = 0.0;
        for (int i = 0; i <= 512; ++i) s = std::max(s, std::abs(fn(range * i / 512.0)));
        return s;
    }
};

struct ProblemSpec {
    WeightParams params;
    double p = 2.0;
    double m = 4.0;
    std::optional<TestFunction> f0;
    std::optional<TestFunction> f1;
    BoundaryData phi0 = BoundaryData::zero();
    double domain_radius = 1.0;

    bool has_source() const { return f0.has_value() || f1.has_value(); }

    void validate() const {
        params.validate();
        if (!(p > 1.0)) throw std::invalid_argument("ProblemSpec: p must be > 1");
        if (domain_radius != 1.0)
            throw std::invalid_argument(
                "ProblemSpec: solves run on the unit half-ball; rescale data instead");
        if (auto rc = in_radon_region(params); !rc)
            throw std::invalid_argument("ProblemSpec: weight is not a Radon measure: " + rc.witness);
        if (has_source()) {
            if (!(m > (params.n + params.sum()) / p))
                throw std::invalid_argument("ProblemSpec: need m > (n + sum theta)/p");
            for (const auto& f : {std::cref(f0), std::cref(f1)})
                if (f.get() && params.n >= 3 && !f.get()->axisymmetric())
                    throw std::invalid_argument("ProblemSpec: n >= 3 sources must be axisymmetric");
        }
    }
};

struct DiscreteField {
    std::shared_ptr<const Mesh> mesh;
    std::vector<double> value;

    double eval(double x, double y) const { return mesh->interpolate(value, x, y); }

    double max_abs() const {
        double s = 0.0;
        for (double v : value) s = std::max(s, std::abs(v));
        return s;
    }

    static DiscreteField from_function(std::shared_ptr<const Mesh> mesh,
                                       const std::function<double(double, double)>& f) {
        DiscreteField u;
        u.mesh = std::move(mesh);
        u.value.reserve(u.mesh->vertex.size());
        for (const auto& v : u.mesh->vertex) u.value.push_back(f(v[0], v[1]));
        return u;
    }

    nlohmann::json to_json() const {
        nlohmann::json j = mesh->to_json();
        j["values"] = value;
        return j;
    }
};

struct SolverConfig {
    double eps_start = 1.0;
    double eps_final = 1e-6;
    double eps_factor = 0.25;
    double tol = 1e-9;  // residual 2-norm relative to the data scale
    int max_newton_per_stage = 60;
    int max_line_search = 40;
};

struct SolveReport {
    double energy = 0.0;
    std::vector<double> energy_trajectory;
    double residual = 0.0;
    double residual_scale = 1.0;
    int iterations = 0;
    double eps_final = 0.0;
    double linf = 0.0;
    double H = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["energy"] = energy;
        j["energy_trajectory"] = energy_trajectory;
        j["residual"] = residual;
        j["residual_scale"] = residual_scale;
        j["iterations"] = iterations;
        j["eps_final"] = eps_final;
        j["linf"] = linf;
        if (std::isfinite(H)) j["H"] = H;
        j["converged"] = converged;
        return j;
    }
};

/// Combined source strength H = ||f0||^{1/(p-1)} + ||f1||^{1/(p-1)} in the
/// Lebesgue exponents of the natural data space.
inline double source_norm_H(const ProblemSpec& spec, const QuadConfig& cfg) {
    spec.validate();
    if (!spec.has_source()) return 0.0;
    const WeightParams& t = spec.params;
    const double chi = chi_exponent(t, spec.p);  // throws Supercritical when undefined
    const double p = spec.p, m = spec.m;
    const double denom = m * (chi - 1.0) + chi * (p - 1.0);
    const double lebesgue_exp = m * p * chi / denom;
    const double dual_power = (chi * (m - 1.0) * (p - 1.0) + m) / denom;
    const Ball half = Ball::centered(t.n, 1.0, /*half=*/true);

    double total = 0.0;
    if (spec.f0) {
        ScalarField f = [&](std::span<const double> x) { return spec.f0->value(x); };
        try {
            const double nrm =
                std::pow(integrate_weighted_function(t.power(-dual_power), f, lebesgue_exp, half,
                                                     cfg)
                             .value,
                         1.0 / lebesgue_exp);
            total += std::pow(nrm, 1.0 / (p - 1.0));
        } catch (const DivergentMeasureError& e) {
            throw DivergentMeasureError(std::string("source_norm_H: f0 norm divergent: ") +
                                            e.what(),
                                        e.responsible);
        }
    }
    if (spec.f1) {
        ScalarField f = [&](std::span<const double> x) { return spec.f1->value(x); };
        try {
            const double nrm = std::pow(
                integrate_weighted_function(t, f, lebesgue_exp, half, cfg).value,
                1.0 / lebesgue_exp);
            total += std::pow(nrm, 1.0 / (p - 1.0));
        } catch (const DivergentMeasureError& e) {
            throw DivergentMeasureError(std::string("source_norm_H: f1 norm divergent: ") +
                                            e.what(),
                                        e.responsible);
        }
    }
    return total;
}

namespace plapdetail {

/// Degree-4 triangle rule (6 points) for the unweighted load integrals.
struct TriRule {
    static constexpr int n = 6;
    // barycentric coordinates and weights (sum 1) of the Dunavant degree-4 rule
    static constexpr double a1 = 0.108103018168070, b1 = 0.445948490915965;
    static constexpr double a2 = 0.816847572980459, b2 = 0.091576213509771;
    static constexpr double w1 = 0.223381589678011, w2 = 0.109951743655322;
    static const std::array<std::array<double, 3>, 6>& bary() {
        static const std::array<std::array<double, 3>, 6> pts = {{{a1, b1, b1},
                                                                  {b1, a1, b1},
                                                                  {b1, b1, a1},
                                                                  {a2, b2, b2},
                                                                  {b2, a2, b2},
                                                                  {b2, b2, a2}}};
        return pts;
    }
    static const std::array<double, 6>& weights() {
        static const std::array<double, 6> w = {w1, w1, w1, w2, w2, w2};
        return w;
    }
};

struct Assembly {
    std::vector<int> free_index;     // vertex -> free dof (or -1)
    std::vector<int> free_vertex;    // free dof -> vertex
    std::vector<double> dirichlet;   // vertex -> fixed value (NaN if free)
    Eigen::VectorXd load;            // free dofs
    double load_norm = 0.0;
};

inline double sigma(double g2, double eps, double p) {
    return std::pow(g2 + eps * eps, 0.5 * (p - 2.0));
}

inline Assembly prepare(const Mesh& mesh, const ProblemSpec& spec) {
    Assembly as;
    const std::size_t nv = mesh.vertex.size();
    as.free_index.assign(nv, -1);
    as.dirichlet.assign(nv, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < nv; ++i) {
        switch (mesh.tag[i]) {
            case VertexTag::flat:
                as.dirichlet[i] = 0.0;
                break;
            case VertexTag::arc:
                as.dirichlet[i] = spec.phi0.fn(mesh.vertex_angle[i]);
                break;
            default:
                as.free_index[i] = static_cast<int>(as.free_vertex.size());
                as.free_vertex.push_back(static_cast<int>(i));
        }
    }

    as.load = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(as.free_vertex.size()));
    const bool ax = mesh.axisym();
    const int n = mesh.params.n;
    // lift mesh coordinates to the n-dimensional axisymmetric point (s,0,..,x_n)
    auto lift = [n](double x, double y) {
        std::array<double, 4> buf{};
        buf[0] = x;
        buf[static_cast<std::size_t>(n - 1)] = y;
        return buf;
    };

    if (spec.f0) {
        // int_K f0 phi_i J dx with the degree-4 rule; J is the axisymmetric
        // Jacobian s^{n-2}
        for (const auto& c : mesh.cell) {
            const auto& v0 = mesh.vertex[static_cast<std::size_t>(c.v[0])];
            const auto& v1 = mesh.vertex[static_cast<std::size_t>(c.v[1])];
            const auto& v2 = mesh.vertex[static_cast<std::size_t>(c.v[2])];
            for (int q = 0; q < TriRule::n; ++q) {
                const auto& l = TriRule::bary()[static_cast<std::size_t>(q)];
                const double x = l[0] * v0[0] + l[1] * v1[0] + l[2] * v2[0];
                const double y = l[0] * v0[1] + l[1] * v1[1] + l[2] * v2[1];
                const auto pt = lift(x, y);
                double fv = spec.f0->value(
                    std::span<const double>(pt.data(), static_cast<std::size_t>(n)));
                if (ax && n > 2) fv *= quaddetail::s_jacobian(n, std::abs(x));
                const double wq = TriRule::weights()[static_cast<std::size_t>(q)] * c.area * fv;
                for (int i = 0; i < 3; ++i) {
                    const int fi = as.free_index[static_cast<std::size_t>(c.v[i])];
                    if (fi >= 0) as.load[fi] += wq * l[static_cast<std::size_t>(i)];
                }
            }
        }
    }
    if (spec.f1) {
        // int_K w f1 phi_i: weighted first moments times f1 at the centroid
        QuadConfig mcfg;
        mcfg.rel_tol = 1e-8;
        for (const auto& c : mesh.cell) {
            const auto& v0 = mesh.vertex[static_cast<std::size_t>(c.v[0])];
            const auto& v1 = mesh.vertex[static_cast<std::size_t>(c.v[1])];
            const auto& v2 = mesh.vertex[static_cast<std::size_t>(c.v[2])];
            const auto cen = lift((v0[0] + v1[0] + v2[0]) / 3.0, (v0[1] + v1[1] + v2[1]) / 3.0);
            const double fc =
                spec.f1->value(std::span<const double>(cen.data(), static_cast<std::size_t>(n)));
            if (fc == 0.0) continue;
            const std::array<Vec2, 3> tri{v0, v1, v2};
            for (int i = 0; i < 3; ++i) {
                const int fi = as.free_index[static_cast<std::size_t>(c.v[i])];
                if (fi < 0) continue;
                // phi_i as a linear function a*x + b*y + c on this cell
                const auto& g = c.grad[i];
                const auto& vi = mesh.vertex[static_cast<std::size_t>(c.v[i])];
                const std::array<double, 3> lin{g[0], g[1],
                                                1.0 - g[0] * vi[0] - g[1] * vi[1]};
                const double mom =
                    integrate_weight_triangle(mesh.params, ax, tri, &lin, mcfg).value;
                as.load[fi] += fc * mom;
            }
        }
    }
    as.load_norm = as.load.norm();
    return as;
}

}  // namespace plapdetail

/// Solve the Dirichlet problem on the prebuilt mesh.
inline std::pair<DiscreteField, SolveReport> solve(const ProblemSpec& spec,
                                                   std::shared_ptr<const Mesh> mesh,
                                                   const SolverConfig& scfg = {}) {
    spec.validate();
    if (mesh->params.n != spec.params.n || !(mesh->params == spec.params))
        throw std::invalid_argument("solve: mesh was built for different weight parameters");
    const Mesh& msh = *mesh;
    const double p = spec.p;

    plapdetail::Assembly as = plapdetail::prepare(msh, spec);
    const std::size_t nfree = as.free_vertex.size();

    DiscreteField u;
    u.mesh = mesh;
    u.value.assign(msh.vertex.size(), 0.0);
    for (std::size_t i = 0; i < msh.vertex.size(); ++i)
        if (!std::isnan(as.dirichlet[i])) u.value[i] = as.dirichlet[i];

    auto cell_grad = [&](const MeshCell& c, const std::vector<double>& vals, double& gx,
                         double& gy) {
        gx = gy = 0.0;
        for (int i = 0; i < 3; ++i) {
            const double vv = vals[static_cast<std::size_t>(c.v[i])];
            gx += vv * c.grad[i][0];
            gy += vv * c.grad[i][1];
        }
    };

    auto energy = [&](const std::vector<double>& vals, double eps) {
        double e = 0.0;
        for (const auto& c : msh.cell) {
            double gx, gy;
            cell_grad(c, vals, gx, gy);
            e += c.mass * std::pow(gx * gx + gy * gy + eps * eps, 0.5 * p) / p;
        }
        for (std::size_t i = 0; i < nfree; ++i)
            e -= as.load[static_cast<Eigen::Index>(i)] *
                 vals[static_cast<std::size_t>(as.free_vertex[i])];
        return e;
    };

    auto residual = [&](const std::vector<double>& vals, double eps, Eigen::VectorXd& r) {
        r.setZero(static_cast<Eigen::Index>(nfree));
        for (const auto& c : msh.cell) {
            double gx, gy;
            cell_grad(c, vals, gx, gy);
            const double sg = plapdetail::sigma(gx * gx + gy * gy, eps, p) * c.mass;
            for (int i = 0; i < 3; ++i) {
                const int fi = as.free_index[static_cast<std::size_t>(c.v[i])];
                if (fi >= 0) r[fi] += sg * (gx * c.grad[i][0] + gy * c.grad[i][1]);
            }
        }
        for (std::size_t i = 0; i < nfree; ++i) r[static_cast<Eigen::Index>(i)] -= as.load[static_cast<Eigen::Index>(i)];
    };

    auto hessian = [&](const std::vector<double>& vals, double eps, bool picard,
                       Eigen::SparseMatrix<double>& H) {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(msh.cell.size() * 9);
        for (const auto& c : msh.cell) {
            double gx, gy;
            cell_grad(c, vals, gx, gy);
            const double g2 = gx * gx + gy * gy;
            const double sg = plapdetail::sigma(g2, eps, p);
            const double dsg = picard ? 0.0
                                      : (p - 2.0) * std::pow(g2 + eps * eps, 0.5 * p - 2.0);
            for (int i = 0; i < 3; ++i) {
                const int fi = as.free_index[static_cast<std::size_t>(c.v[i])];
                if (fi < 0) continue;
                for (int j = 0; j < 3; ++j) {
                    const int fj = as.free_index[static_cast<std::size_t>(c.v[j])];
                    if (fj < 0) continue;
                    const double bi_bj = c.grad[i][0] * c.grad[j][0] + c.grad[i][1] * c.grad[j][1];
                    const double gi = gx * c.grad[i][0] + gy * c.grad[i][1];
                    const double gj = gx * c.grad[j][0] + gy * c.grad[j][1];
                    trip.emplace_back(fi, fj, c.mass * (sg * bi_bj + dsg * gi * gj));
                }
            }
        }
        H.resize(static_cast<Eigen::Index>(nfree), static_cast<Eigen::Index>(nfree));
        H.setFromTriplets(trip.begin(), trip.end());
    };

    SolveReport rep;
    Eigen::VectorXd r;
    residual(u.value, scfg.eps_start, r);
    rep.residual_scale = std::max({1e-300, as.load_norm, r.norm()});
    const double tol_abs = scfg.tol * rep.residual_scale;
    rep.energy_trajectory.push_back(energy(u.value, scfg.eps_start));

    const bool linear = p == 2.0;  // sigma is independent of eps and u
    double eps = linear ? scfg.eps_final : scfg.eps_start;
    Eigen::SparseMatrix<double> H;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol;
    bool ok = true;

    for (;;) {
        for (int it = 0; it < scfg.max_newton_per_stage; ++it) {
            residual(u.value, eps, r);
            rep.residual = r.norm();
            if (rep.residual <= tol_abs) break;

            bool stepped = false;
            for (int mode = 0; mode < 2 && !stepped; ++mode) {
                hessian(u.value, eps, /*picard=*/mode == 1, H);
                chol.compute(H);
                if (chol.info() != Eigen::Success) continue;
                const Eigen::VectorXd d = chol.solve(-r);
                const double slope = r.dot(d);  // negative along a descent direction
                const double e0 = energy(u.value, eps);
                double alpha = 1.0;
                for (int ls = 0; ls < scfg.max_line_search; ++ls, alpha *= 0.5) {
                    std::vector<double> trial = u.value;
                    for (std::size_t k = 0; k < nfree; ++k)
                        trial[static_cast<std::size_t>(as.free_vertex[k])] +=
                            alpha * d[static_cast<Eigen::Index>(k)];
                    const double e1 = energy(trial, eps);
                    if (e1 <= e0 + 1e-4 * alpha * slope + 1e-14 * std::abs(e0)) {
                        u.value = std::move(trial);
                        rep.energy_trajectory.push_back(e1);
                        ++rep.iterations;
                        stepped = true;
                        break;
                    }
                }
            }
            if (!stepped) {
                ok = false;
                break;
            }
        }
        residual(u.value, eps, r);
        rep.residual = r.norm();
        if (!ok || eps <= scfg.eps_final || linear) break;
        eps = std::max(scfg.eps_final, eps * scfg.eps_factor);
        rep.energy_trajectory.push_back(energy(u.value, eps));
    }

    rep.eps_final = eps;
    rep.energy = energy(u.value, eps);
    rep.linf = u.max_abs();
    rep.converged = ok && rep.residual <= tol_abs;
    if (spec.has_source()) {
        try {
            QuadConfig hcfg;
            hcfg.rel_tol = 1e-6;
            rep.H = source_norm_H(spec, hcfg);
        } catch (const SupercriticalError&) {
            rep.H = std::numeric_limits<double>::quiet_NaN();
        }
    } else {
        rep.H = 0.0;
    }
    return {std::move(u), rep};
}

/// ||u||_inf / (||phi0||_inf + H); the H = 0 case is the discrete maximum
/// principle check.
struct LinfCheck {
    double linf = 0.0;
    double phi0_sup = 0.0;
    double H = 0.0;
    double ratio = std::numeric_limits<double>::quiet_NaN();
    bool degenerate = false;
};

inline LinfCheck linf_check(const DiscreteField& field, const ProblemSpec& spec,
                            const SolveReport& report) {
    LinfCheck out;
    out.linf = const_cast<DiscreteField&>(field).max_abs();
    out.phi0_sup = spec.phi0.sup_norm(field.mesh->angular_range());
    out.H = std::isfinite(report.H) ? report.H : 0.0;
    const double denom = out.phi0_sup + out.H;
    if (denom > 0.0)
        out.ratio = out.linf / denom;
    else
        out.degenerate = out.linf == 0.0;
    return out;
}

/// Oscillation omega(R) = max - min of vertex values on B_R^+ with a
/// geometric-decay fit.
struct OscillationProfile {
    std::vector<double> radii;
    std::vector<double> omega;
    double decay_exponent = 0.0;
    double fit_residual = 0.0;
};

inline OscillationProfile oscillation_profile(const DiscreteField& field,
                                              std::span<const double> radii) {
    OscillationProfile prof;
    const Mesh& m = *field.mesh;
    for (double R : radii) {
        if (!(R > 0.0) || R < 1.5 * m.fan_radius)
            throw std::invalid_argument("oscillation_profile: radius below mesh resolution");
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t i = 0; i < m.vertex.size(); ++i) {
            if (std::hypot(m.vertex[i][0], m.vertex[i][1]) <= R * (1.0 + 1e-12)) {
                lo = std::min(lo, field.value[i]);
                hi = std::max(hi, field.value[i]);
            }
        }
        prof.radii.push_back(R);
        prof.omega.push_back(hi - lo);
    }
    std::vector<double> rr, ww;
    for (std::size_t i = 0; i < prof.radii.size(); ++i)
        if (prof.omega[i] > 0.0) {
            rr.push_back(prof.radii[i]);
            ww.push_back(prof.omega[i]);
        }
    if (rr.size() >= 2) {
        double slope, intercept, resid;
        loglog_fit(rr, ww, slope, intercept, resid);
        prof.decay_exponent = slope;
        prof.fit_residual = resid;
    }
    return prof;
}

/// Least-squares decay exponent of sup_{B_R^+} |u| against R over the mesh
/// rings inside [r_min, r_max].
struct DecayFit {
    double alpha = 0.0;
    double prefactor = 0.0;
    double residual = 0.0;
    std::vector<double> radii;
    std::vector<double> sup_values;
    bool sane = false;  // alpha in the (0, 1.5) window
    std::string mode = "origin-decay";
};

inline DecayFit decay_fit(const DiscreteField& field, double r_min, double r_max) {
    const Mesh& m = *field.mesh;
    DecayFit fit;
    std::vector<double> radii;
    for (double R : m.ring_radius)
        if (R >= r_min && R <= r_max) radii.push_back(R);
    if (radii.size() < 4)
        throw std::invalid_argument("decay_fit: fewer than 4 mesh rings in [r_min, r_max]");
    std::sort(radii.begin(), radii.end());

    // vertex radii once, then running sup per radius
    std::vector<std::pair<double, double>> rv;  // (radius, |value|)
    rv.reserve(m.vertex.size());
    for (std::size_t i = 0; i < m.vertex.size(); ++i)
        rv.push_back({std::hypot(m.vertex[i][0], m.vertex[i][1]), std::abs(field.value[i])});
    std::sort(rv.begin(), rv.end());

    std::size_t k = 0;
    double running = 0.0;
    for (double R : radii) {
        while (k < rv.size() && rv[k].first <= R * (1.0 + 1e-12)) running = std::max(running, rv[k++].second);
        fit.radii.push_back(R);
        fit.sup_values.push_back(running);
    }
    bool all_zero = true;
    for (double v : fit.sup_values) all_zero = all_zero && v == 0.0;
    if (all_zero) throw std::invalid_argument("decay_fit: field vanishes on every fit radius");

    double slope, intercept, resid;
    loglog_fit(fit.radii, fit.sup_values, slope, intercept, resid);
    fit.alpha = slope;
    fit.prefactor = std::exp(intercept);
    fit.residual = resid;
    fit.sane = fit.alpha > 0.0 && fit.alpha < 1.5;
    return fit;
}

/// sup over seeded point pairs in B^+_{1/8} of |u(x) - u(y)| / |x - y|^a,
/// including pairs straddling the weight's singular line.
inline double holder_modulus(const DiscreteField& field, double exponent, int pair_count,
                             std::uint64_t seed) {
    if (!(exponent > 0.0 && exponent < 1.0))
        throw std::invalid_argument("holder_modulus: exponent must be in (0, 1)");
    if (pair_count < 1) throw std::invalid_argument("holder_modulus: need pairs");
    const Mesh& m = *field.mesh;
    const bool planar = !m.axisym();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(planar ? -0.125 : 0.0, 0.125);
    std::uniform_real_distribution<double> uy(0.0, 0.125);

    auto draw = [&]() {
        for (;;) {
            const double x = ux(rng), y = uy(rng);
            if (y > 1e-6 && std::hypot(x, y) < 0.125 && (planar || x > 1e-9)) return Vec2{x, y};
        }
    };
    double sup = 0.0;
    auto consider = [&](const Vec2& a, const Vec2& b) {
        const double d = std::hypot(a[0] - b[0], a[1] - b[1]);
        if (d < 1e-9) return;
        const double du = std::abs(field.eval(a[0], a[1]) - field.eval(b[0], b[1]));
        sup = std::max(sup, du / std::pow(d, exponent));
    };
    for (int i = 0; i < pair_count; ++i) {
        Vec2 a = draw();
        if (planar && i % 4 == 0) {
            if (std::abs(a[0]) < 1e-9) continue;
            consider(a, {-a[0], a[1]});  // straddle {x' = 0}
        } else {
            consider(a, draw());
        }
    }
    // deterministic dyadic pairs marching toward the origin along the middle
    // ray, down to the mesh resolution: the scale where a genuine sup blows up
    const double mid = 0.5 * m.angular_range();
    const double cm = std::cos(mid), sm = std::sin(mid);
    for (double r = 0.1; r >= 2.0 * m.fan_radius; r *= 0.5)
        consider({r * cm, r * sm}, {0.5 * r * cm, 0.5 * r * sm});
    return sup;
}

/// De Giorgi level profile on B_R^+: normalized mu-measures of the level sets
/// {u > M - M 2^{-j}}, with R snapped to the nearest mesh ring.
struct DeGiorgiProfile {
    double R = 0.0;
    double M = 0.0;
    double total_mass = 0.0;
    std::vector<double> levels;
    std::vector<double> fraction;  // F_j
    double fitted_power = 0.0;     // slope of log F_j against log j (recorded only)

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["R"] = R;
        j["M"] = M;
        j["levels"] = levels;
        j["fraction"] = fraction;
        j["fitted_power"] = fitted_power;
        return j;
    }
};

namespace plapdetail {

/// Clip a triangle against {lin > k} (Sutherland-Hodgman, one half-plane).
inline std::vector<Vec2> clip_above(const std::array<Vec2, 3>& tri,
                                    const std::array<double, 3>& lin, double k) {
    std::vector<Vec2> out;
    auto val = [&](const Vec2& q) { return lin[0] * q[0] + lin[1] * q[1] + lin[2] - k; };
    for (int i = 0; i < 3; ++i) {
        const Vec2& a = tri[static_cast<std::size_t>(i)];
        const Vec2& b = tri[static_cast<std::size_t>((i + 1) % 3)];
        const double va = val(a), vb = val(b);
        if (va >= 0.0) out.push_back(a);
        if ((va > 0.0 && vb < 0.0) || (va < 0.0 && vb > 0.0)) {
            const double s = va / (va - vb);
            out.push_back({a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])});
        }
    }
    return out;
}

}  // namespace plapdetail

inline DeGiorgiProfile degiorgi_profile(const DiscreteField& field, double R, int j_max,
                                        const QuadConfig& cfg) {
    if (j_max < 1) throw std::invalid_argument("degiorgi_profile: j_max must be >= 1");
    const Mesh& m = *field.mesh;
    // snap to the nearest mesh ring so no cell straddles the radius
    double snapped = m.ring_radius.front();
    for (double r : m.ring_radius)
        if (std::abs(r - R) < std::abs(snapped - R)) snapped = r;

    DeGiorgiProfile prof;
    prof.R = snapped;

    std::vector<char> inside(m.cell.size(), 0);
    for (std::size_t ci = 0; ci < m.cell.size(); ++ci) {
        bool in = true;
        for (int i = 0; i < 3; ++i) {
            const auto& v = m.vertex[static_cast<std::size_t>(m.cell[ci].v[i])];
            in = in && std::hypot(v[0], v[1]) <= snapped * (1.0 + 1e-10);
        }
        inside[ci] = in ? 1 : 0;
        if (in) prof.total_mass += m.cell[ci].mass;
    }

    double M = 0.0;
    for (std::size_t i = 0; i < m.vertex.size(); ++i)
        if (std::hypot(m.vertex[i][0], m.vertex[i][1]) <= snapped * (1.0 + 1e-10))
            M = std::max(M, field.value[i]);
    if (!(M > 0.0))
        throw std::invalid_argument("degiorgi_profile: sup of the field must be positive");
    prof.M = M;

    const bool ax = m.axisym();
    for (int j = 0; j <= j_max; ++j) {
        const double k = M - M * std::pow(2.0, -j);
        double mass = 0.0;
        for (std::size_t ci = 0; ci < m.cell.size(); ++ci) {
            if (!inside[ci]) continue;
            const MeshCell& c = m.cell[ci];
            double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
            for (int i = 0; i < 3; ++i) {
                const double vv = field.value[static_cast<std::size_t>(c.v[i])];
                vmin = std::min(vmin, vv);
                vmax = std::max(vmax, vv);
            }
            // linear representation of u_h on this cell
            double gx = 0.0, gy = 0.0;
            for (int i = 0; i < 3; ++i) {
                const double vv = field.value[static_cast<std::size_t>(c.v[i])];
                gx += vv * c.grad[i][0];
                gy += vv * c.grad[i][1];
            }
            const auto& v0 = m.vertex[static_cast<std::size_t>(c.v[0])];
            const std::array<double, 3> lin{
                gx, gy, field.value[static_cast<std::size_t>(c.v[0])] - gx * v0[0] - gy * v0[1]};

            if (vmin > k) {
                mass += c.mass;
            } else if (vmax > k) {
                const std::array<Vec2, 3> tri{m.vertex[static_cast<std::size_t>(c.v[0])],
                                              m.vertex[static_cast<std::size_t>(c.v[1])],
                                              m.vertex[static_cast<std::size_t>(c.v[2])]};
                const auto poly = plapdetail::clip_above(tri, lin, k);
                for (std::size_t t = 1; t + 1 < poly.size(); ++t) {
                    const std::array<Vec2, 3> sub{poly[0], poly[t], poly[t + 1]};
                    mass += integrate_weight_triangle(m.params, ax, sub, nullptr, cfg).value;
                }
                if (c.has_cap) {
                    LevelClip clip;
                    clip.g = lin;
                    clip.k = k;
                    clip.keep_above = true;
                    mass += integrate_weight_cap_region(m.params, ax, c.cap_phi_a, c.cap_phi_b,
                                                        1.0, &clip, nullptr, cfg)
                                .value;
                }
                continue;
            }
            // full-mass cells with caps: the cap shares the cell's linear rep
            if (vmin > k && c.has_cap) {
                // cap mass is already inside c.mass
            }
        }
        prof.levels.push_back(k);
        prof.fraction.push_back(mass / prof.total_mass);
    }

    // fitted power of j against log F_j (recorded, never asserted)
    std::vector<double> js, fs;
    for (int j = 1; j < static_cast<int>(prof.fraction.size()); ++j)
        if (prof.fraction[static_cast<std::size_t>(j)] > 0.0) {
            js.push_back(j);
            fs.push_back(prof.fraction[static_cast<std::size_t>(j)]);
        }
    if (js.size() >= 2) {
        double slope, intercept, resid;
        loglog_fit(js, fs, slope, intercept, resid);
        prof.fitted_power = slope;
    }
    return prof;
}

}  // namespace anisolab
