// anisolab command line: region classification, measure integration and
// scaling fits, A_p / doubling scans, inequality checks, p-Laplace solves and
// decay diagnostics.  Every run is deterministic for a fixed config and seed,
// and every output file embeds the resolved configuration.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "anisolab/ineq.hpp"
#include "anisolab/muckenhoupt.hpp"
#include "anisolab/plap.hpp"
#include "anisolab/version.hpp"

using namespace anisolab;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::vector<double> theta{0.0, 0.0, 0.0};
    int n = 2;
    double p = 2.0;
    double q = 1.5;
    double p0 = 1.25;
    double m = 6.0;
    std::uint64_t seed = 0;
    double tol = 1e-6;
    std::string out;
    std::string format = "json";

    WeightParams params() const {
        if (theta.size() != 3) throw CLI::ValidationError("--theta needs exactly three values");
        return WeightParams{theta[0], theta[1], theta[2], n};
    }
    QuadConfig quad() const {
        QuadConfig cfg;
        cfg.rel_tol = tol;
        cfg.seed = seed;
        return cfg;
    }
    json config_json(const std::string& cmd) const {
        json j;
        j["command"] = cmd;
        j["version"] = kVersion;
        j["theta"] = theta;
        j["n"] = n;
        j["p"] = p;
        j["q"] = q;
        j["p0"] = p0;
        j["m"] = m;
        j["seed"] = seed;
        j["tol"] = tol;
        j["format"] = format;
        return j;
    }
};

void add_common(CLI::App* sub, CommonOpts& o, bool require_params = false) {
    sub->fallthrough(true);  // lets --config appear after the subcommand too
    auto* th = sub->add_option("--theta", o.theta, "weight exponents theta1,theta2,theta3");
    th->delimiter(',');
    auto* nn = sub->add_option("--n", o.n, "ambient dimension (>= 2)");
    if (require_params) {
        th->required();
        nn->required();
    }
    sub->add_option("--p", o.p, "A_p / p-Laplace exponent");
    sub->add_option("--q", o.q, "Sobolev auxiliary exponent in (1, p)");
    sub->add_option("--p0", o.p0, "mixed Poincare exponent in (1, n/(n-1))");
    sub->add_option("--m", o.m, "source integrability exponent");
    sub->add_option("--seed", o.seed, "seed for stochastic pieces");
    sub->add_option("--tol", o.tol, "quadrature relative tolerance");
    sub->add_option("--out", o.out, "output file path");
    sub->add_option("--format", o.format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
}

void write_output(const CommonOpts& o, const json& payload, const std::string& csv_body) {
    if (o.out.empty()) return;
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file " + o.out);
    if (o.format == "json") {
        f << payload.dump(2) << "\n";
    } else {
        f << "# anisolab " << kVersion << "\n";
        for (auto it = payload["config"].begin(); it != payload["config"].end(); ++it)
            f << "# " << it.key() << "=" << it.value().dump() << "\n";
        f << csv_body;
    }
}

/// One row per scalar entry: key,value
std::string kv_csv(const json& data) {
    std::ostringstream os;
    os.precision(17);
    os << "key,value\n";
    for (auto it = data.begin(); it != data.end(); ++it)
        if (!it.value().is_structured()) os << it.key() << "," << it.value().dump() << "\n";
    return os.str();
}

TestFunction parse_test_function(const std::string& kind, int n) {
    if (kind == "radial-bump") return TestFunction::radial_bump(n, std::vector<double>(n, 0.0), 1.0);
    if (kind == "coordinate-xn") return TestFunction::coordinate(n, n - 1);
    if (kind == "cone") return TestFunction::cone(n, std::vector<double>(n, 0.0), 1.0);
    throw CLI::ValidationError("unknown test function: " + kind);
}

BoundaryData parse_phi0(const std::string& name) {
    if (name == "zero") return BoundaryData::zero();
    if (name.rfind("sin", 0) == 0) {
        const int k = name.size() > 3 ? std::stoi(name.substr(3)) : 1;
        return BoundaryData::sine(k);
    }
    throw CLI::ValidationError("unknown phi0: " + name + " (use zero | sin | sinK)");
}

Mesh load_mesh_geometry(const json& j) {
    Mesh m;
    m.mode = j.at("mode") == "axisymmetric" ? MeshMode::axisymmetric : MeshMode::planar;
    const auto th = j.at("theta");
    m.params = WeightParams{th[0], th[1], th[2], j.at("n")};
    m.target_h = j.value("target_h", 0.1);
    m.grading = j.value("grading", 1.0);
    m.singular_depth = j.value("singular_depth", 8);
    for (const auto& v : j.at("vertices")) {
        m.vertex.push_back({v[0], v[1]});
        m.tag.push_back(static_cast<VertexTag>(static_cast<int>(v[2])));
        m.vertex_angle.push_back(std::atan2(double(v[1]), double(v[0])));
    }
    for (const auto& c : j.at("cells")) {
        MeshCell mc;
        mc.v = {c[0], c[1], c[2]};
        meshdetail::cell_geometry(m, mc);
        m.cell.push_back(mc);
    }
    // ring radii from the vertex set (the builder places vertices on rings)
    std::vector<double> radii;
    for (const auto& v : m.vertex) {
        const double r = std::hypot(v[0], v[1]);
        if (r > 1e-14) radii.push_back(r);
    }
    std::sort(radii.begin(), radii.end(), std::greater<>());
    for (double r : radii)
        if (m.ring_radius.empty() || r < m.ring_radius.back() * (1.0 - 1e-9))
            m.ring_radius.push_back(r);
    m.fan_radius = m.ring_radius.empty() ? 0.0 : m.ring_radius.back();
    return m;
}

int run_classify(const CommonOpts& o) {
    ProbeExponents probes{o.p, o.q, o.p0, o.m};
    const RegionReport rep = classify(o.params(), probes);
    json data;
    data["is_radon"] = rep.is_radon;
    data["is_doubling"] = rep.is_doubling;
    for (const auto& [pp, member] : rep.ap) data["ap"][std::to_string(pp)] = member;
    data["sobolev_admissible"] = rep.sobolev_admissible;
    data["poincare_mixed_admissible"] = rep.poincare_mixed_admissible;
    data["witness"] = rep.witness;

    std::cout << "radon: " << (rep.is_radon ? "yes" : "no")
              << "\ndoubling: " << (rep.is_doubling ? "yes" : "no") << "\nA_p (p=" << o.p
              << "): " << (rep.ap_at(o.p) ? "yes" : "no")
              << "\nsobolev (p,q): " << (rep.sobolev_admissible ? "yes" : "no")
              << "\nmixed poincare (p0): " << (rep.poincare_mixed_admissible ? "yes" : "no")
              << "\n";
    if (!rep.witness.empty()) std::cout << "witness: " << rep.witness << "\n";

    json payload;
    payload["config"] = o.config_json("classify");
    payload["report"] = data;
    write_output(o, payload, kv_csv(data));
    return 0;
}

int run_measure(const CommonOpts& o, double radius, const std::vector<double>& center, bool half,
                bool fit_scaling, double r_min, double r_max, int num_radii) {
    const WeightParams t = o.params();
    json data;
    std::string csv;
    if (fit_scaling) {
        const ScalingFit fit = mu_scaling_exponent(t, r_min, r_max, num_radii, o.quad());
        data["slope"] = fit.slope;
        data["expected_slope"] = t.n + t.sum();
        data["residual"] = fit.residual;
        data["radii"] = fit.radii;
        data["values"] = fit.values;
        std::cout << "fitted slope: " << fit.slope << " (exact " << t.n + t.sum()
                  << "), residual " << fit.residual << "\n";
        std::ostringstream os;
        os.precision(17);
        os << "radius,mu\n";
        for (std::size_t i = 0; i < fit.radii.size(); ++i)
            os << fit.radii[i] << "," << fit.values[i] << "\n";
        csv = os.str();
    } else {
        Ball ball{center.empty() ? std::vector<double>(static_cast<std::size_t>(t.n), 0.0) : center,
                  radius, half};
        const QuadResult q = integrate_weight(t, ball, o.quad());
        data["value"] = q.value;
        data["err_est"] = q.err_est;
        data["evals"] = q.evals;
        data["converged"] = q.converged;
        std::cout << "mu(ball) = " << q.value << " (err est " << q.err_est << ", evals "
                  << q.evals << ")\n";
        csv = kv_csv(data);
    }
    json payload;
    payload["config"] = o.config_json("measure");
    payload["config"]["radius"] = radius;
    payload["config"]["half"] = half;
    payload["config"]["fit_scaling"] = fit_scaling;
    payload["report"] = data;
    write_output(o, payload, csv);
    return 0;
}

int run_scan(const CommonOpts& o, bool doubling, int count, double r_min, double r_max,
             int levels) {
    const WeightParams t = o.params();
    const BallFamily fam = adversarial_family(t, count, r_min, r_max, o.seed);
    const ScanReport rep = doubling ? doubling_scan(t, fam, o.quad(), levels)
                                    : ap_scan(t, o.p, fam, o.quad(), levels);
    std::cout << (doubling ? "doubling" : "A_p") << " scan over " << fam.balls.size()
              << " balls: sup = " << rep.sup << ", stability = " << rep.refinement_stability
              << (rep.diverged ? ", divergent quotients present" : "") << "\n";
    json payload;
    payload["config"] = o.config_json(doubling ? "doubling-scan" : "ap-scan");
    payload["config"]["count"] = count;
    payload["config"]["r_min"] = r_min;
    payload["config"]["r_max"] = r_max;
    payload["config"]["levels"] = levels;
    payload["family"] = fam.description;
    payload["report"] = rep.to_json();
    write_output(o, payload, rep.to_csv());
    return 0;
}

int run_ineq(const CommonOpts& o, const std::string& check, const std::string& tf,
             double ball_radius, double p_tilde, double level_k, double level_l) {
    const WeightParams t = o.params();
    const TestFunction u = parse_test_function(tf, t.n);
    json data;
    if (check == "sobolev") {
        const IneqReport rep =
            sobolev_ratio(t, o.p, u, Ball::centered(t.n, ball_radius), o.quad());
        data = rep.to_json();
        std::cout << "sobolev ratio: " << rep.ratio << "\n";
    } else if (check == "dilation") {
        const double scales[] = {0.25, 0.5, 1.0, 2.0};
        const double dev = dilation_invariance_check(t, o.p, u, scales, o.quad());
        data["max_relative_deviation"] = dev;
        data["chi"] = chi_exponent(t, o.p);
        std::cout << "dilation invariance deviation: " << dev << "\n";
    } else if (check == "poincare") {
        const IneqReport rep =
            poincare_weighted_ratio(t, p_tilde, u, Ball::centered(t.n, ball_radius), o.quad());
        data = rep.to_json();
        std::cout << "weighted poincare ratio: " << rep.ratio << "\n";
    } else if (check == "poincare-mixed") {
        const IneqReport rep = poincare_mixed_ratio(t, o.p0, u, ball_radius, o.quad());
        data = rep.to_json();
        std::cout << "mixed poincare ratio: " << rep.ratio << "\n";
    } else if (check == "isoperimetric") {
        const IsoperimetricReport rep = isoperimetric_check(
            t, o.p, p_tilde, u, Ball::centered(t.n, ball_radius), level_k, level_l, o.quad());
        data = rep.to_json();
        std::cout << "isoperimetric ratios: " << rep.ratio_upper << " / " << rep.ratio_lower
                  << "\n";
    } else {
        throw CLI::ValidationError("unknown check: " + check);
    }
    json payload;
    payload["config"] = o.config_json("ineq");
    payload["config"]["check"] = check;
    payload["config"]["test_function"] = tf;
    payload["config"]["ball_radius"] = ball_radius;
    payload["config"]["p_tilde"] = p_tilde;
    payload["report"] = data;
    write_output(o, payload, kv_csv(data));
    return 0;
}

int run_solve(const CommonOpts& o, const std::string& preset, const std::string& phi0_name,
              double f0_xn, double mesh_h, double mesh_grading, int mesh_depth, int refinements,
              const std::string& field_out) {
    json payload;
    payload["config"] = o.config_json("solve");
    payload["config"]["preset"] = preset;
    payload["config"]["phi0"] = phi0_name;
    payload["config"]["f0_xn"] = f0_xn;
    payload["config"]["mesh_h"] = mesh_h;
    payload["config"]["mesh_grading"] = mesh_grading;
    payload["config"]["mesh_depth"] = mesh_depth;
    payload["config"]["refinements"] = refinements;

    ProblemSpec spec;
    std::string csv;
    if (preset == "manufactured-p2") {
        spec.params = {0, 0, 0, 2};
        spec.p = 2.0;
        spec.f0 = TestFunction::scaled(TestFunction::coordinate(2, 1), 8.0);
        spec.phi0 = BoundaryData::zero();

        json table = json::array();
        std::ostringstream os;
        os.precision(17);
        os << "h,linf_error,peak\n";
        double h = mesh_h;
        std::vector<double> hs, errs;
        DiscreteField last;
        for (int lr = 0; lr < std::max(1, refinements); ++lr, h *= 0.5) {
            auto mesh = std::make_shared<Mesh>(
                build_mesh(MeshMode::planar, spec.params, h, 1.0, mesh_depth));
            auto [u, rep] = solve(spec, mesh);
            double err = 0.0, peak = 0.0;
            for (std::size_t i = 0; i < mesh->vertex.size(); ++i) {
                const double x = mesh->vertex[i][0], y = mesh->vertex[i][1];
                err = std::max(err, std::abs(u.value[i] - y * (1.0 - x * x - y * y)));
                peak = std::max(peak, u.value[i]);
            }
            table.push_back({{"h", h}, {"linf_error", err}, {"peak", peak}});
            os << h << "," << err << "," << peak << "\n";
            hs.push_back(h);
            errs.push_back(err);
            last = std::move(u);
        }
        payload["report"]["table"] = table;
        if (hs.size() >= 2) {
            double slope, ic, res;
            loglog_fit(hs, errs, slope, ic, res);
            payload["report"]["observed_order"] = slope;
            std::cout << "observed L-infinity order: " << slope << "\n";
        }
        csv = os.str();
        if (!field_out.empty()) {
            std::ofstream f(field_out, std::ios::binary);
            f << last.to_json().dump(2) << "\n";
        }
    } else if (preset == "decay-p2" || preset == "none") {
        if (preset == "decay-p2") {
            spec.params = {0, 2, 0, 2};
            spec.p = 2.0;
            spec.phi0 = BoundaryData::sine(1);
        } else {
            spec.params = o.params();
            spec.p = o.p;
            spec.m = o.m;
            spec.phi0 = parse_phi0(phi0_name);
            if (f0_xn != 0.0)
                spec.f0 = TestFunction::scaled(TestFunction::coordinate(spec.params.n,
                                                                        spec.params.n - 1),
                                               f0_xn);
        }
        auto mesh = std::make_shared<Mesh>(build_mesh(
            spec.params.n == 2 ? MeshMode::planar : MeshMode::axisymmetric, spec.params, mesh_h,
            mesh_grading, mesh_depth));
        auto [u, rep] = solve(spec, mesh);
        payload["report"]["solve"] = rep.to_json();
        std::cout << "solved: residual " << rep.residual << ", |u|_inf = " << rep.linf << "\n";
        if (!rep.converged) {
            std::cerr << "solver did not reach its tolerance\n";
            return 1;
        }
        csv = kv_csv(payload["report"]["solve"]);
        if (!field_out.empty()) {
            std::ofstream f(field_out, std::ios::binary);
            f << u.to_json().dump(2) << "\n";
        }
    } else {
        throw CLI::ValidationError("unknown preset: " + preset);
    }
    write_output(o, payload, csv);
    return 0;
}

int run_decay(const CommonOpts& o, const std::string& in, double r_min, double r_max) {
    std::ifstream f(in);
    if (!f) throw std::runtime_error("cannot open field file " + in);
    json j = json::parse(f);
    auto mesh = std::make_shared<Mesh>(load_mesh_geometry(j));
    DiscreteField u;
    u.mesh = mesh;
    u.value = j.at("values").get<std::vector<double>>();

    const DecayFit fit = decay_fit(u, r_min, r_max);
    std::vector<double> radii;
    for (double R : fit.radii) radii.push_back(R);
    const OscillationProfile prof = oscillation_profile(u, radii);

    json data;
    data["alpha"] = fit.alpha;
    data["prefactor"] = fit.prefactor;
    data["residual"] = fit.residual;
    data["sane_window"] = fit.sane;
    data["radii"] = fit.radii;
    data["sup_values"] = fit.sup_values;
    data["oscillation"] = prof.omega;
    data["oscillation_exponent"] = prof.decay_exponent;
    std::cout << "decay exponent: " << fit.alpha << " (residual " << fit.residual << ")\n";

    json payload;
    payload["config"] = o.config_json("decay");
    payload["config"]["in"] = in;
    payload["config"]["r_min"] = r_min;
    payload["config"]["r_max"] = r_max;
    payload["report"] = data;
    std::ostringstream os;
    os.precision(17);
    os << "radius,sup,oscillation\n";
    for (std::size_t i = 0; i < fit.radii.size(); ++i)
        os << fit.radii[i] << "," << fit.sup_values[i] << "," << prof.omega[i] << "\n";
    write_output(o, payload, os.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"anisolab: numerical laboratory for anisotropic power weights"};
    // flat key=value config: keys are dotted (classify.theta=...) or grouped
    // under a [subcommand] section; command line flags win
    app.set_config("--config", "", "flat key=value config file; flags win");
    app.require_subcommand(1);

    CommonOpts o;

    auto* classify_cmd = app.add_subcommand("classify", "region classification of a triple");
    add_common(classify_cmd, o, /*require_params=*/true);

    auto* measure_cmd = app.add_subcommand("measure", "integrate the weighted measure");
    add_common(measure_cmd, o, /*require_params=*/true);
    double radius = 1.0, r_min = 0.05, r_max = 1.0;
    int num_radii = 7;
    bool half = false, fit_scaling = false;
    std::vector<double> center;
    measure_cmd->add_option("--radius", radius, "ball radius");
    measure_cmd->add_option("--center", center, "ball center coordinates")->delimiter(',');
    measure_cmd->add_flag("--half", half, "restrict to the upper half space");
    measure_cmd->add_flag("--fit-scaling", fit_scaling, "fit log mu(B_r) against log r");
    measure_cmd->add_option("--rmin", r_min, "smallest radius");
    measure_cmd->add_option("--rmax", r_max, "largest radius");
    measure_cmd->add_option("--num-radii", num_radii, "number of log-spaced radii");

    auto* ap_cmd = app.add_subcommand("ap-scan", "A_p quotients over an adversarial family");
    auto* dbl_cmd = app.add_subcommand("doubling-scan", "doubling ratios over a family");
    int count = 36, levels = 2;
    for (auto* cmd : {ap_cmd, dbl_cmd}) {
        add_common(cmd, o, /*require_params=*/true);
        cmd->add_option("--count", count, "number of balls (>= 12)");
        cmd->add_option("--rmin", r_min, "smallest radius");
        cmd->add_option("--rmax", r_max, "largest radius");
        cmd->add_option("--levels", levels, "quadrature refinement levels");
    }

    auto* ineq_cmd = app.add_subcommand("ineq", "functional inequality checks");
    add_common(ineq_cmd, o, /*require_params=*/true);
    std::string check = "sobolev", tf = "radial-bump";
    double ball_radius = 1.0, p_tilde = 1.5, level_k = 0.2, level_l = 0.6;
    ineq_cmd->add_option("--check", check,
                         "sobolev | dilation | poincare | poincare-mixed | isoperimetric");
    ineq_cmd->add_option("--test-function", tf, "radial-bump | coordinate-xn | cone");
    ineq_cmd->add_option("--ball-radius", ball_radius, "domain ball radius");
    ineq_cmd->add_option("--ptilde", p_tilde, "reduced exponent p-tilde");
    ineq_cmd->add_option("--k", level_k, "lower level");
    ineq_cmd->add_option("--l", level_l, "upper level");

    auto* solve_cmd = app.add_subcommand("solve", "weighted p-Laplace Dirichlet solve");
    add_common(solve_cmd, o);
    std::string preset = "none", phi0_name = "sin", field_out;
    double f0_xn = 0.0, mesh_h = 0.06, mesh_grading = 2.0;
    int mesh_depth = 12, refinements = 1;
    solve_cmd->add_option("--preset", preset, "manufactured-p2 | decay-p2 | none");
    solve_cmd->add_option("--phi0", phi0_name, "boundary datum: zero | sin | sinK");
    solve_cmd->add_option("--f0-xn", f0_xn, "coefficient c of f0 = c * x_n");
    solve_cmd->add_option("--mesh-h", mesh_h, "target cell size");
    solve_cmd->add_option("--mesh-grading", mesh_grading, "radial grading exponent (>= 1)");
    solve_cmd->add_option("--mesh-depth", mesh_depth, "geometric depth toward the origin");
    solve_cmd->add_option("--refinements", refinements, "meshes in the convergence study");
    solve_cmd->add_option("--field-out", field_out, "write the solved field (JSON)");

    auto* decay_cmd = app.add_subcommand("decay", "decay / oscillation fit of a solved field");
    add_common(decay_cmd, o);
    std::string in_field;
    double d_rmin = 1e-3, d_rmax = 0.25;
    decay_cmd->add_option("--in", in_field, "field JSON produced by solve")->required();
    decay_cmd->add_option("--rmin", d_rmin, "smallest fit radius");
    decay_cmd->add_option("--rmax", d_rmax, "largest fit radius");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (classify_cmd->parsed()) return run_classify(o);
        if (measure_cmd->parsed())
            return run_measure(o, radius, center, half, fit_scaling, r_min, r_max, num_radii);
        if (ap_cmd->parsed()) return run_scan(o, false, count, r_min, r_max, levels);
        if (dbl_cmd->parsed()) return run_scan(o, true, count, r_min, r_max, levels);
        if (ineq_cmd->parsed())
            return run_ineq(o, check, tf, ball_radius, p_tilde, level_k, level_l);
        if (solve_cmd->parsed())
            return run_solve(o, preset, phi0_name, f0_xn, mesh_h, mesh_grading, mesh_depth,
                             refinements, field_out);
        if (decay_cmd->parsed()) return run_decay(o, in_field, d_rmin, d_rmax);
    } catch (const DivergentMeasureError& e) {
        std::cerr << "analysis failure: " << e.what() << "\n";
        return 1;
    } catch (const SupercriticalError& e) {
        std::cerr << "analysis failure: " << e.what() << "\n";
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "analysis failure: " << e.what() << "\n";
        return 1;
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
