// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails.  Tolerances are fixed here, not tuned at runtime.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "anisolab/ineq.hpp"
#include "anisolab/muckenhoupt.hpp"
#include "anisolab/plap.hpp"

#ifndef ANISOLAB_CLI_PATH
#define ANISOLAB_CLI_PATH "anisolab"
#endif
#ifndef ANISOLAB_TMP_DIR
#define ANISOLAB_TMP_DIR "/tmp"
#endif

using namespace anisolab;

namespace {

int failures = 0;

void report(int idx, const char* name, bool pass, const std::string& detail,
            double seconds) {
    std::printf("%s criterion %2d (%s): %s  [%.1fs]\n", pass ? "PASS" : "FAIL", idx, name,
                detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++failures;
}

template <class F>
void run(int idx, const char* name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
        pass = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(idx, name, pass, detail, secs);
}

double max_of(const std::vector<double>& v) {
    double m = -1e300;
    for (double x : v) m = std::max(m, x);
    return m;
}
double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// 1. integrate_weight against the prime-ball closed form
bool c1(std::string& detail) {
    QuadConfig cfg;
    cfg.rel_tol = 1e-7;
    double worst = 0.0;
    for (int n : {2, 3})
        for (double t1 : {-0.5, 0.0, 1.0, 2.5})
            for (double rho : {0.25, 1.0, 4.0}) {
                const WeightParams t{t1, 0, 0, n};
                const Cylinder cyl{rho, 0.25, 1.75};
                const double got = integrate_weight(t, cyl, cfg).value;
                const double expect = 1.5 * exact_prime_ball(t1, n, rho);
                worst = std::max(worst, std::abs(got / expect - 1.0));
            }
    std::ostringstream os;
    os << "max relative error " << worst << " (<= 1e-6)";
    detail = os.str();
    return worst <= 1e-6;
}

// 2. log-log slope of mu(B_r) equals n + sum(theta)
bool c2(std::string& detail) {
    QuadConfig cfg;
    cfg.rel_tol = 1e-6;
    const WeightParams cases[] = {
        {0, 0, 0, 2},        // Lebesgue (A)
        {0, 2, 0, 2},        // A, theta2 > 0
        {1, -0.5, 0.25, 3},  // B, theta2 < 0
        {-0.5, 0, -0.5, 2},  // A, theta3 < 0
        {2, -1, -0.5, 3},    // B, theta2 < 0 and theta3 < 0
        {0, -1.5, 0, 2},     // B
    };
    double worst = 0.0;
    for (const auto& t : cases) {
        const ScalingFit fit = mu_scaling_exponent(t, 0.05, 1.0, 7, cfg);
        worst = std::max(worst, std::abs(fit.slope - (t.n + t.sum())));
    }
    std::ostringstream os;
    os << "max slope deviation " << worst << " (<= 1e-2) over 6 triples";
    detail = os.str();
    return worst <= 1e-2;
}

// 3. A_p boundedness inside the region over a 2000-ball adversarial family
bool c3(std::string& detail) {
    QuadConfig cfg;
    cfg.rel_tol = 1e-6;
    struct Combo {
        WeightParams t;
        double p;
    };
    const Combo combos[] = {
        {{0.5, 0, 0, 2}, 2.0},      {{0, 0, 0.5, 2}, 2.0},       {{0.3, 0, 0.3, 2}, 2.0},
        {{-0.5, 0, 0, 2}, 2.0},     {{0, 0, -0.5, 2}, 2.0},      {{0, 1, 0, 2}, 2.0},
        {{0, -0.5, 0, 2}, 2.0},     {{1, 0, 0.5, 3}, 3.0},       {{-1, 0.5, 0, 3}, 2.0},
        {{0.5, -0.5, 0.25, 3}, 2.0}};
    double worst_stab = 0.0, worst_quot = 2.0;
    int divergent = 0, jensen = 0;
    for (const auto& c : combos) {
        const BallFamily fam = adversarial_family(c.t, 2000, 1.0 / 64.0, 1.0, 11);
        const ScanReport rep = ap_scan(c.t, c.p, fam, cfg, 2);
        worst_stab = std::max(worst_stab, rep.refinement_stability);
        if (rep.diverged) ++divergent;
        jensen += rep.jensen_faults;
        for (const auto& s : rep.items)
            if (s.finite) worst_quot = std::min(worst_quot, s.value);
    }
    std::ostringstream os;
    os << "10 combos x 2000 balls: max stability " << worst_stab << " (<= 0.05), min quotient "
       << worst_quot << " (>= 1 - 4e-6), divergent scans " << divergent << ", jensen faults "
       << jensen;
    detail = os.str();
    return worst_stab <= 0.05 && worst_quot >= 1.0 - 4e-6 && divergent == 0 && jensen == 0;
}

// 4. doubling-but-not-A_p witness theta = (0, 5, 0)
bool c4(std::string& detail) {
    QuadConfig cfg;
    cfg.rel_tol = 1e-5;
    const WeightParams t{0, 5, 0, 2};
    // radii spanning three decades
    const BallFamily fam = adversarial_family(t, 360, 1e-3, 1.0, 5);
    const ScanReport rep = doubling_scan(t, fam, cfg, 2);
    if (rep.diverged) {
        detail = "doubling scan unexpectedly diverged";
        return false;
    }
    // cross-scale variation per center archetype (the family cycles 12
    // archetypes per radius block)
    double worst_ratio = 0.0;
    for (int arch = 0; arch < 12; ++arch) {
        std::vector<double> vals;
        for (std::size_t i = arch; i < rep.items.size(); i += 12)
            if (rep.items[i].finite) vals.push_back(rep.items[i].value);
        if (vals.size() < 3) continue;
        worst_ratio = std::max(worst_ratio, max_of(vals) / median_of(vals));
    }
    const ProbeReport probe = divergence_probe(t, 2.0, Ball::centered(2, 1.0), cfg, 4);
    double min_growth = 1e300;
    for (double g : probe.growth) min_growth = std::min(min_growth, g);
    std::ostringstream os;
    os << "max/median across radii " << worst_ratio << " (<= 10), probe growth >= " << min_growth
       << " per level (>= 10), divergent verdict " << (probe.divergent ? "yes" : "no");
    detail = os.str();
    return worst_ratio <= 10.0 && min_growth >= 10.0 && probe.divergent;
}

// 5. Sobolev dilation invariance pins chi
bool c5(std::string& detail) {
    QuadConfig cfg;
    cfg.rel_tol = 1e-6;
    struct Combo {
        WeightParams t;
        double p;
    };
    const Combo combos[] = {{{0, 2, 0, 2}, 2.0},
                            {{0, 3, 0, 2}, 2.0},
                            {{1, 1, 0.5, 3}, 2.0},
                            {{0.5, 1, 0.25, 2}, 2.0},
                            {{0, 1.2, 0.5, 2}, 2.0}};
    const double scales[] = {0.25, 0.5, 1.0, 2.0};
    double worst_good = 0.0, worst_factor = 1e300;
    for (const auto& c : combos) {
        const TestFunction u =
            TestFunction::radial_bump(c.t.n, std::vector<double>(c.t.n, 0.0), 1.0);
        const double dev = dilation_invariance_check(c.t, c.p, u, scales, cfg);
        const double chi_bad = chi_exponent(c.t, c.p) * 1.1;
        const double dev_bad = dilation_invariance_check(c.t, c.p, u, scales, cfg, chi_bad);
        worst_good = std::max(worst_good, dev);
        worst_factor = std::min(worst_factor, dev_bad / std::max(dev, 1e-4));
    }
    std::ostringstream os;
    os << "max deviation at correct chi " << worst_good << " (<= 1e-3), perturbed/correct >= "
       << worst_factor << " (>= 10)";
    detail = os.str();
    return worst_good <= 1e-3 && worst_factor >= 10.0;
}

// 6. mixed Poincare ratio is R-independent with the stated R power
bool c6(std::string& detail) {
    QuadConfig cfg;
    cfg.rel_tol = 1e-6;
    const WeightParams cases[] = {{0, 0, 0, 2}, {0.5, 1, 0.25, 2}, {0.5, -0.5, 0.25, 2}};
    const double p0 = 1.25;
    double worst = 0.0;
    for (const auto& t : cases) {
        const TestFunction u =
            TestFunction::translated(TestFunction::radial_bump(2, {0, 0}, 0.5), {0.2, 0.1});
        double base = 0.0;
        for (int k = 0; k <= 4; ++k) {
            const double R = std::pow(2.0, -k);
            const TestFunction uR = TestFunction::dilated(u, 1.0 / R);
            const IneqReport rep = poincare_mixed_ratio(t, p0, uR, R, cfg);
            if (k == 0)
                base = rep.ratio;
            else
                worst = std::max(worst, std::abs(rep.ratio / base - 1.0));
        }
    }
    std::ostringstream os;
    os << "max R-variation " << worst << " (<= 0.02) over 3 admissible triples";
    detail = os.str();
    return worst <= 0.02;
}

// 7. manufactured p = 2 solution: order and peak value
bool c7(std::string& detail) {
    ProblemSpec spec;
    spec.params = {0, 0, 0, 2};
    spec.p = 2.0;
    spec.f0 = TestFunction::scaled(TestFunction::coordinate(2, 1), 8.0);
    std::vector<double> hs{0.12, 0.06, 0.03}, errs;
    double peak_fine = 0.0;
    for (double h : hs) {
        auto mesh = std::make_shared<Mesh>(build_mesh(MeshMode::planar, spec.params, h, 1.0, 8));
        auto [u, rep] = solve(spec, mesh);
        if (!rep.converged) {
            detail = "solver failed to converge";
            return false;
        }
        double err = 0.0, peak = 0.0;
        for (std::size_t i = 0; i < mesh->vertex.size(); ++i) {
            const double x = mesh->vertex[i][0], y = mesh->vertex[i][1];
            err = std::max(err, std::abs(u.value[i] - y * (1.0 - x * x - y * y)));
            peak = std::max(peak, u.value[i]);
        }
        errs.push_back(err);
        peak_fine = peak;
    }
    double order, ic, res;
    loglog_fit(hs, errs, order, ic, res);
    const double exact_peak = 2.0 / (3.0 * std::sqrt(3.0));
    const double peak_dev = std::abs(peak_fine / exact_peak - 1.0);
    std::ostringstream os;
    os << "observed order " << order << " (>= 1.8), peak deviation " << peak_dev << " (<= 0.01)";
    detail = os.str();
    return order >= 1.8 && peak_dev <= 0.01;
}

// 8. quantitative decay exponent for w = |x|^2, phi0 = sin
bool c8(std::string& detail) {
    ProblemSpec spec;
    spec.params = {0, 2, 0, 2};
    spec.p = 2.0;
    spec.phi0 = BoundaryData::sine(1);
    auto mesh = std::make_shared<Mesh>(build_mesh(MeshMode::planar, spec.params, 0.04, 4.0, 18));
    auto [u, rep] = solve(spec, mesh);
    if (!rep.converged) {
        detail = "solver failed to converge";
        return false;
    }
    const DecayFit fit = decay_fit(u, std::max(1e-3, 2.0 * mesh->fan_radius), 0.25);
    const double alpha = std::sqrt(2.0) - 1.0;
    const double dev = std::abs(fit.alpha / alpha - 1.0);
    std::ostringstream os;
    os << "fitted alpha " << fit.alpha << " vs sqrt(2)-1, deviation " << dev << " (<= 0.02)";
    detail = os.str();
    return dev <= 0.02;
}

// 9. sup bound / discrete maximum principle for five boundary data
bool c9(std::string& detail) {
    struct Case {
        WeightParams t;
        int k;  // phi0 = sin(k phi)
    };
    const Case cases[] = {
        {{0, 0, 0, 2}, 1}, {{0, 0, 0, 2}, 2}, {{0, 0, 0, 2}, 3}, {{0, 2, 0, 2}, 1},
        {{0, 0, 1, 2}, 1}};
    double worst = 0.0;
    for (const auto& c : cases) {
        ProblemSpec spec;
        spec.params = c.t;
        spec.p = 2.0;
        spec.phi0 = BoundaryData::sine(c.k);
        auto mesh = std::make_shared<Mesh>(build_mesh(MeshMode::planar, c.t, 0.08, 2.0, 10));
        auto [u, rep] = solve(spec, mesh);
        if (!rep.converged) {
            detail = "solver failed to converge";
            return false;
        }
        const LinfCheck chk = linf_check(u, spec, rep);
        worst = std::max(worst, chk.ratio);
    }
    std::ostringstream os;
    os << "max |u|_inf / |phi0|_inf over 5 data " << worst << " (<= 1.02)";
    detail = os.str();
    return worst <= 1.02;
}

// 10. De Giorgi profiles: monotone for solved fields, exact for M x_n
bool c10(std::string& detail) {
    QuadConfig cfg;
    cfg.rel_tol = 1e-6;
    auto mesh = std::make_shared<Mesh>(build_mesh(MeshMode::planar, {0, 0, 0, 2}, 0.06, 1.5, 8));
    const auto linear = DiscreteField::from_function(
        mesh, [](double, double y) { return 2.0 * y; });
    const DeGiorgiProfile prof = degiorgi_profile(linear, 1.0, 12, cfg);
    double worst = 0.0;
    for (std::size_t j = 0; j < prof.fraction.size(); ++j) {
        const double c = 1.0 - std::pow(2.0, -double(j));
        const double seg = std::acos(c) - c * std::sqrt(1.0 - c * c);
        worst = std::max(worst, std::abs(prof.fraction[j] - seg / (kPi / 2.0)));
    }

    ProblemSpec spec;
    spec.params = {0, 0, 0, 2};
    spec.p = 2.0;
    spec.phi0 = BoundaryData::sine(1);
    auto [u, rep] = solve(spec, mesh);
    const DeGiorgiProfile solved = degiorgi_profile(u, 0.5, 10, cfg);
    bool monotone = true;
    for (std::size_t j = 1; j < solved.fraction.size(); ++j)
        monotone = monotone && solved.fraction[j] <= solved.fraction[j - 1] + 1e-12;
    for (std::size_t j = 1; j < prof.fraction.size(); ++j)
        monotone = monotone && prof.fraction[j] <= prof.fraction[j - 1] + 1e-12;

    std::ostringstream os;
    os << "segment-oracle max deviation " << worst << " (<= 1e-4), profiles monotone "
       << (monotone ? "yes" : "no");
    detail = os.str();
    return worst <= 1e-4 && monotone;
}

// 11. CLI determinism: identical config + seed => byte-identical files
bool c11(std::string& detail) {
    auto slurp = [](const std::string& p) {
        std::ifstream f(p, std::ios::binary);
        std::ostringstream os;
        os << f.rdbuf();
        return os.str();
    };
    auto cli = [](const std::string& args) {
        const std::string cmd = std::string(ANISOLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
        return WEXITSTATUS(std::system(cmd.c_str()));
    };
    const std::string dir = ANISOLAB_TMP_DIR;
    const std::vector<std::pair<std::string, std::string>> runs = {
        {"classify --theta 0,5,0 --n 2 --p 2", "acc_classify"},
        {"measure --theta 1,-0.5,0.25 --n 3 --fit-scaling --rmin 0.1 --rmax 1 --num-radii 5 "
         "--tol 1e-5",
         "acc_measure"},
        {"ap-scan --theta 0.5,0,0.25 --n 2 --p 2 --count 12 --rmin 0.25 --rmax 1 --seed 3 "
         "--tol 1e-4 --format csv",
         "acc_apscan"},
        {"doubling-scan --theta 0,5,0 --n 2 --count 12 --rmin 0.25 --rmax 1 --seed 3 --tol 1e-4",
         "acc_dscan"},
        {"ineq --check poincare-mixed --theta 0,0,0 --n 2 --test-function coordinate-xn "
         "--ball-radius 1 --tol 1e-5",
         "acc_ineq"},
        {"solve --preset decay-p2 --mesh-h 0.12 --mesh-grading 2.5 --mesh-depth 10", "acc_solve"},
    };
    for (const auto& [args, name] : runs) {
        const std::string f1 = dir + "/" + name + "_1.out";
        const std::string f2 = dir + "/" + name + "_2.out";
        if (cli(args + " --out " + f1) != 0 || cli(args + " --out " + f2) != 0) {
            detail = "subcommand failed: " + args;
            return false;
        }
        if (slurp(f1) != slurp(f2) || slurp(f1).empty()) {
            detail = "outputs differ for: " + args;
            return false;
        }
    }
    detail = "6 subcommands rerun byte-identically";
    return true;
}

}  // namespace

int main() {
    std::printf("anisolab acceptance suite\n");
    run(1, "prime-ball closed-form oracle", c1);
    run(2, "measure scaling exponent", c2);
    run(3, "A_p boundedness inside the region", c3);
    run(4, "doubling-but-not-A_p witness", c4);
    run(5, "Sobolev dilation invariance", c5);
    run(6, "mixed Poincare R-power", c6);
    run(7, "manufactured solution convergence", c7);
    run(8, "quantitative decay exponent", c8);
    run(9, "sup bound / maximum principle", c9);
    run(10, "De Giorgi level profiles", c10);
    run(11, "CLI determinism", c11);
    if (failures == 0)
        std::printf("all criteria passed\n");
    else
        std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
