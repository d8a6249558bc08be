// Walk a small grid of exponent triples and print their region flags next to
// an empirical doubling ratio at the origin, where it equals 2^{n + sum}.

#include <cstdio>

#include "anisolab/muckenhoupt.hpp"

using namespace anisolab;

int main() {
    QuadConfig cfg;
    cfg.rel_tol = 1e-6;
    ProbeExponents probes;  // p = 2

    std::printf("%-22s %-6s %-9s %-5s %-14s\n", "theta", "radon", "doubling", "A_2",
                "ratio at origin");
    for (const WeightParams t : {WeightParams{0, 0, 0, 2},
                                 {0.5, 0, 0.25, 2},
                                 {0, 5, 0, 2},
                                 {-0.5, 0, -0.5, 2},
                                 {0, -5, 0, 2}}) {
        const RegionReport rep = classify(t, probes);
        std::string ratio = "divergent";
        if (rep.is_radon) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6f",
                          doubling_ratio(t, Ball::centered(t.n, 1.0), cfg));
            ratio = buf;
        }
        std::printf("(%5.1f,%5.1f,%5.1f)   %-6s %-9s %-5s %-14s\n", t.theta1, t.theta2, t.theta3,
                    rep.is_radon ? "yes" : "no", rep.is_doubling ? "yes" : "no",
                    rep.ap_at(2.0) ? "yes" : "no", ratio.c_str());
    }
    return 0;
}
