#pragma once

// Graded conforming triangulation of the half-disk (planar, n = 2) or of the
// quarter-disk meridian domain (axisymmetric, n >= 3).  The mesh is a ladder
// of concentric rings whose radial spacing follows target_h * r^{1-1/grading}
// down to the scale 2^{-singular_depth}; the angular count halves on
// transition strips so cells stay near-isotropic all the way to the origin
// fan.  Ring circles are exact mesh lines, so the radii used by decay and
// De Giorgi diagnostics never cut through cells, and the singular coordinate
// lines {x_n = 0} and {s = 0} (and {x_1 = 0} in planar mode) are unions of
// edges.
//
// Weighted cell masses int_K w (times s^{n-2} in axisymmetric mode) are
// computed by the graded quadrature; boundary cells additionally carry the
// mass of the circular cap between their chord edge and the unit arc, so the
// mesh measures the exact curved domain.

#include <json.hpp>

#include "anisolab/quad.hpp"

namespace anisolab {

enum class MeshMode { planar, axisymmetric };

enum class VertexTag : std::uint8_t { interior = 0, flat = 1, arc = 2, axis = 3 };

struct MeshCell {
    std::array<int, 3> v{};
    double area = 0.0;
    std::array<double, 2> grad[3];  // P1 basis gradients
    double mass = 0.0;              // int_K w (j), cap included for arc cells
    double cap_phi_a = 0.0, cap_phi_b = 0.0;  // angular window of the cap, if any
    bool has_cap = false;
};

struct Mesh {
    MeshMode mode = MeshMode::planar;
    WeightParams params;
    double target_h = 0.1;
    double grading = 1.0;
    int singular_depth = 8;

    std::vector<std::array<double, 2>> vertex;  // (x1, x2) or (s, x_n)
    std::vector<VertexTag> tag;
    std::vector<MeshCell> cell;
    std::vector<double> ring_radius;             // descending, first is 1
    std::vector<double> vertex_angle;            // polar angle of each vertex
    double fan_radius = 0.0;

    bool axisym() const { return mode == MeshMode::axisymmetric; }
    double angular_range() const { return axisym() ? 0.5 * kPi : kPi; }

    double total_mass() const {
        double s = 0.0;
        for (const auto& c : cell) s += c.mass;
        return s;
    }

    double min_angle_deg() const {
        double worst = 180.0;
        for (const auto& c : cell) {
            for (int i = 0; i < 3; ++i) {
                const auto& a = vertex[static_cast<std::size_t>(c.v[i])];
                const auto& b = vertex[static_cast<std::size_t>(c.v[(i + 1) % 3])];
                const auto& d = vertex[static_cast<std::size_t>(c.v[(i + 2) % 3])];
                const double ux = b[0] - a[0], uy = b[1] - a[1];
                const double vx = d[0] - a[0], vy = d[1] - a[1];
                const double dot = ux * vx + uy * vy;
                const double cr = std::abs(ux * vy - uy * vx);
                worst = std::min(worst, std::atan2(cr, dot) * 180.0 / kPi);
            }
        }
        return worst;
    }

    /// Linear interpolation of a vertex field at (x, y); locates the cell by
    /// the ring/sector structure with a local point-in-triangle check.
    int locate(double x, double y) const;
    double interpolate(std::span<const double> values, double x, double y) const;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["mode"] = axisym() ? "axisymmetric" : "planar";
        j["n"] = params.n;
        j["theta"] = {params.theta1, params.theta2, params.theta3};
        j["target_h"] = target_h;
        j["grading"] = grading;
        j["singular_depth"] = singular_depth;
        nlohmann::json vs = nlohmann::json::array();
        for (std::size_t i = 0; i < vertex.size(); ++i)
            vs.push_back({vertex[i][0], vertex[i][1], static_cast<int>(tag[i])});
        j["vertices"] = std::move(vs);
        nlohmann::json cs = nlohmann::json::array();
        for (const auto& c : cell) cs.push_back({c.v[0], c.v[1], c.v[2]});
        j["cells"] = std::move(cs);
        return j;
    }
};

namespace meshdetail {

struct Ring {
    double r;
    int nphi;
    int first_vertex;
};

inline void cell_geometry(Mesh& m, MeshCell& c) {
    const auto& a = m.vertex[static_cast<std::size_t>(c.v[0])];
    const auto& b = m.vertex[static_cast<std::size_t>(c.v[1])];
    const auto& d = m.vertex[static_cast<std::size_t>(c.v[2])];
    const double det = (b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]);
    c.area = 0.5 * std::abs(det);
    // gradients of the barycentric basis
    c.grad[0] = {(b[1] - d[1]) / det, (d[0] - b[0]) / det};
    c.grad[1] = {(d[1] - a[1]) / det, (a[0] - d[0]) / det};
    c.grad[2] = {(a[1] - b[1]) / det, (b[0] - a[0]) / det};
}

}  // namespace meshdetail

inline int Mesh::locate(double x, double y) const {
    auto inside = [&](int ci) {
        const auto& c = cell[static_cast<std::size_t>(ci)];
        const auto& a = vertex[static_cast<std::size_t>(c.v[0])];
        const auto& b = vertex[static_cast<std::size_t>(c.v[1])];
        const auto& d = vertex[static_cast<std::size_t>(c.v[2])];
        const double eps = -1e-12;
        auto side = [&](const std::array<double, 2>& p, const std::array<double, 2>& q) {
            return (q[0] - p[0]) * (y - p[1]) - (q[1] - p[1]) * (x - p[0]);
        };
        const double s1 = side(a, b), s2 = side(b, d), s3 = side(d, a);
        const bool pos = s1 >= eps && s2 >= eps && s3 >= eps;
        const bool neg = s1 <= -eps && s2 <= -eps && s3 <= -eps;
        return pos || neg;
    };
    // cheap path: scan cells of the two rings bracketing |x| (structured
    // meshes are small enough that the fallback scan stays rare)
    for (std::size_t ci = 0; ci < cell.size(); ++ci)
        if (inside(static_cast<int>(ci))) return static_cast<int>(ci);
    return -1;
}

inline double Mesh::interpolate(std::span<const double> values, double x, double y) const {
    const int ci = locate(x, y);
    if (ci < 0) throw std::invalid_argument("Mesh::interpolate: point outside the mesh");
    const auto& c = cell[static_cast<std::size_t>(ci)];
    const auto& a = vertex[static_cast<std::size_t>(c.v[0])];
    const auto& b = vertex[static_cast<std::size_t>(c.v[1])];
    const auto& d = vertex[static_cast<std::size_t>(c.v[2])];
    const double det = (b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]);
    const double l1 = ((b[0] - x) * (d[1] - y) - (d[0] - x) * (b[1] - y)) / det;
    const double l2 = ((d[0] - x) * (a[1] - y) - (a[0] - x) * (d[1] - y)) / det;
    const double l3 = 1.0 - l1 - l2;
    return l1 * values[static_cast<std::size_t>(c.v[0])] +
           l2 * values[static_cast<std::size_t>(c.v[1])] +
           l3 * values[static_cast<std::size_t>(c.v[2])];
}

/// Build the graded mesh and its weighted cell masses (quad rel tol
/// mass_rel_tol, default 1e-8).
inline Mesh build_mesh(MeshMode mode, const WeightParams& params, double target_h, double grading,
                       int singular_depth, double mass_rel_tol = 1e-8) {
    params.validate();
    if (!(target_h > 0.0 && target_h < 0.5))
        throw std::invalid_argument("build_mesh: target_h must be in (0, 0.5)");
    if (!(grading >= 1.0)) throw std::invalid_argument("build_mesh: grading must be >= 1");
    if (singular_depth < 1) throw std::invalid_argument("build_mesh: singular_depth must be >= 1");
    if (mode == MeshMode::planar && params.n != 2)
        throw std::invalid_argument("build_mesh: planar mode requires n = 2");
    if (mode == MeshMode::axisymmetric && params.n < 3)
        throw std::invalid_argument("build_mesh: axisymmetric mode requires n >= 3");

    Mesh m;
    m.mode = mode;
    m.params = params;
    m.target_h = target_h;
    m.grading = grading;
    m.singular_depth = singular_depth;

    const double range = m.angular_range();
    const int n_min = mode == MeshMode::planar ? 8 : 4;
    const double r_floor = std::pow(2.0, -singular_depth);
    const double delta = 1.0 - 1.0 / grading;  // radial size exponent

    auto h_of = [&](double r) { return target_h * std::pow(std::max(r, r_floor), delta); };

    // ring ladder; the angular count is n_min * 2^k so halvings stay
    // conforming all the way down to the fan
    std::vector<meshdetail::Ring> rings;
    int nphi = n_min;
    while (nphi < range / target_h) nphi *= 2;
    double r = 1.0;
    for (;;) {
        rings.push_back({r, nphi, 0});
        const double h = h_of(r);
        double r_next = r - h;
        if (r_next < 1.6 * h_of(std::max(r_next, 0.0)) || r_next <= 0.0) break;
        // keep angular size near the radial size
        if (nphi >= 2 * n_min && r_next * range / nphi < 0.62 * h_of(r_next)) nphi /= 2;
        r = r_next;
    }
    m.fan_radius = rings.back().r;

    // vertices ring by ring, then the origin; coordinates on the singular
    // lines are snapped exactly so cell edges lie on {x_n = 0} / {s = 0}
    for (auto& ring : rings) {
        ring.first_vertex = static_cast<int>(m.vertex.size());
        for (int j = 0; j <= ring.nphi; ++j) {
            const double phi = range * j / ring.nphi;
            double x = ring.r * std::cos(phi), y = ring.r * std::sin(phi);
            if (std::abs(x) < 1e-13 * ring.r) x = 0.0;
            if (std::abs(y) < 1e-13 * ring.r) y = 0.0;
            m.vertex.push_back({x, y});
            m.vertex_angle.push_back(phi);
        }
    }
    const int origin_index = static_cast<int>(m.vertex.size());
    m.vertex.push_back({0.0, 0.0});
    m.vertex_angle.push_back(0.0);

    // tags: flat = {x_n = 0}, arc = outer circle, axis = {s = 0} (axisym)
    m.tag.assign(m.vertex.size(), VertexTag::interior);
    for (std::size_t i = 0; i < m.vertex.size(); ++i) {
        const double xx = m.vertex[i][0], yy = m.vertex[i][1];
        const double rr = std::hypot(xx, yy);
        if (std::abs(yy) < 1e-14) m.tag[i] = VertexTag::flat;
        else if (mode == MeshMode::axisymmetric && std::abs(xx) < 1e-14) m.tag[i] = VertexTag::axis;
        if (std::abs(rr - 1.0) < 1e-12 && std::abs(yy) >= 1e-14) m.tag[i] = VertexTag::arc;
    }
    m.tag[static_cast<std::size_t>(origin_index)] = VertexTag::flat;
    if (mode == MeshMode::planar) {
        // planar flat boundary is both phi = 0 and phi = pi
        // (already captured by |y| < eps)
    }

    auto add_cell = [&](int a, int b, int c) {
        MeshCell mc;
        mc.v = {a, b, c};
        meshdetail::cell_geometry(m, mc);
        if (mc.area <= 0.0) throw std::logic_error("build_mesh: degenerate cell");
        m.cell.push_back(mc);
    };

    // strips between consecutive rings
    for (std::size_t k = 0; k + 1 < rings.size(); ++k) {
        const auto& outer = rings[k];
        const auto& inner = rings[k + 1];
        if (outer.nphi == inner.nphi) {
            for (int j = 0; j < outer.nphi; ++j) {
                const int o0 = outer.first_vertex + j, o1 = o0 + 1;
                const int i0 = inner.first_vertex + j, i1 = i0 + 1;
                add_cell(o0, o1, i0);
                add_cell(o1, i1, i0);
            }
        } else {
            // transition strip: outer.nphi == 2 * inner.nphi
            for (int j = 0; j < inner.nphi; ++j) {
                const int a = outer.first_vertex + 2 * j;
                const int b = a + 1;
                const int c = a + 2;
                const int pp = inner.first_vertex + j;
                const int qq = pp + 1;
                add_cell(a, b, pp);
                add_cell(b, qq, pp);
                add_cell(b, c, qq);
            }
        }
    }
    // origin fan
    {
        const auto& last = rings.back();
        for (int j = 0; j < last.nphi; ++j)
            add_cell(last.first_vertex + j, last.first_vertex + j + 1, origin_index);
    }

    m.ring_radius.reserve(rings.size());
    for (const auto& ring : rings) m.ring_radius.push_back(ring.r);

    // weighted masses; arc cells gain the cap between chord and circle
    QuadConfig mass_cfg;
    mass_cfg.rel_tol = mass_rel_tol;
    mass_cfg.abs_tol = 1e-15;
    const bool ax = m.axisym();
    for (auto& c : m.cell) {
        const std::array<Vec2, 3> tri{m.vertex[static_cast<std::size_t>(c.v[0])],
                                      m.vertex[static_cast<std::size_t>(c.v[1])],
                                      m.vertex[static_cast<std::size_t>(c.v[2])]};
        c.mass = integrate_weight_triangle(params, ax, tri, nullptr, mass_cfg).value;
        int on_arc = 0;
        double pa = 2.0 * kPi, pb = -2.0 * kPi;
        for (int i = 0; i < 3; ++i) {
            const std::size_t vi = static_cast<std::size_t>(c.v[i]);
            const double rr = std::hypot(m.vertex[vi][0], m.vertex[vi][1]);
            if (std::abs(rr - 1.0) < 1e-12) {
                ++on_arc;
                pa = std::min(pa, m.vertex_angle[vi]);
                pb = std::max(pb, m.vertex_angle[vi]);
            }
        }
        if (on_arc == 2) {
            c.has_cap = true;
            c.cap_phi_a = pa;
            c.cap_phi_b = pb;
            c.mass +=
                integrate_weight_cap_region(params, ax, pa, pb, 1.0, nullptr, nullptr, mass_cfg)
                    .value;
        }
    }
    return m;
}

}  // namespace anisolab
