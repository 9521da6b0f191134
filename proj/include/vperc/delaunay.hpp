#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "vperc/errors.hpp"
#include "vperc/geom.hpp"
#include "vperc/point_process.hpp"
#include "vperc/rng.hpp"

namespace vperc {

/// Incremental (Bowyer-Watson) Delaunay triangulation of the configuration's
/// points, d = 2 only. Input is perturbed by a deterministic seeded jitter
/// < 1e-9 so cocircular or collinear inputs are handled; predicates run in
/// long double. Vertex indices coincide with configuration point ids.
class Delaunay2D {
  public:
    struct Tri {
        std::array<int, 3> v;    // CCW
        std::array<int, 3> adj;  // adj[i] faces the edge opposite v[i]; -1 outside
    };

    std::vector<Pt<2>> pts;  // jittered; the last 3 are the enclosing super-triangle
    int n_real = 0;
    std::vector<Tri> tri;
    std::vector<std::uint8_t> alive;

    template <class Cfg>
    static Delaunay2D build(const Cfg& cfg, std::uint64_t jitter_seed) {
        std::vector<Pt<2>> raw;
        const EpsilonGrid<2>& grid = grid_of(cfg);
        for (std::int64_t b = 0; b < grid.box_count(); ++b) {
            auto seg = cfg.points_in_box(b);
            for (const auto& rec : seg) raw.push_back(rec.pos);
        }
        return build_from_points(raw, grid.origin + grid.pitch * grid.cells, jitter_seed);
    }

    static Delaunay2D build_from_points(const std::vector<Pt<2>>& raw, double span,
                                        std::uint64_t jitter_seed) {
        Delaunay2D dt;
        dt.n_real = static_cast<int>(raw.size());
        dt.pts.reserve(raw.size() + 3);
        for (int i = 0; i < dt.n_real; ++i) {
            Pt<2> p = raw[i];
            for (int a = 0; a < 2; ++a) {
                Stream s(substream(jitter_seed, static_cast<std::uint64_t>(i), a));
                p[a] += 1e-9 * s.next_unit();
            }
            dt.pts.push_back(p);
        }
        const double R = 8.0 * std::max(std::abs(span), 1.0) + 8.0;
        dt.pts.push_back({0.0, 3.0 * R});
        dt.pts.push_back({-3.0 * R, -2.0 * R});
        dt.pts.push_back({3.0 * R, -2.0 * R});
        const int s0 = dt.n_real, s1 = dt.n_real + 1, s2 = dt.n_real + 2;
        dt.tri.push_back({{s0, s1, s2}, {-1, -1, -1}});
        dt.alive.push_back(1);
        int hint = 0;
        for (int i = 0; i < dt.n_real; ++i) hint = dt.insert(i, hint);
        return dt;
    }

    bool is_super(int v) const { return v >= n_real; }

    static long double orient(const Pt<2>& a, const Pt<2>& b, const Pt<2>& c) {
        const long double abx = (long double)b[0] - a[0], aby = (long double)b[1] - a[1];
        const long double acx = (long double)c[0] - a[0], acy = (long double)c[1] - a[1];
        return abx * acy - aby * acx;
    }

    /// d strictly inside the circumcircle of CCW triangle (a, b, c).
    static bool in_circle(const Pt<2>& a, const Pt<2>& b, const Pt<2>& c, const Pt<2>& d) {
        const long double adx = (long double)a[0] - d[0], ady = (long double)a[1] - d[1];
        const long double bdx = (long double)b[0] - d[0], bdy = (long double)b[1] - d[1];
        const long double cdx = (long double)c[0] - d[0], cdy = (long double)c[1] - d[1];
        const long double ad = adx * adx + ady * ady;
        const long double bd = bdx * bdx + bdy * bdy;
        const long double cd = cdx * cdx + cdy * cdy;
        const long double det = adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) +
                                ad * (bdx * cdy - bdy * cdx);
        return det > 0.0L;
    }

    Pt<2> circumcenter(int t) const {
        const Pt<2>&a = pts[tri[t].v[0]], &b = pts[tri[t].v[1]], &c = pts[tri[t].v[2]];
        const long double abx = (long double)b[0] - a[0], aby = (long double)b[1] - a[1];
        const long double acx = (long double)c[0] - a[0], acy = (long double)c[1] - a[1];
        const long double d = 2.0L * (abx * acy - aby * acx);
        const long double ab2 = abx * abx + aby * aby;
        const long double ac2 = acx * acx + acy * acy;
        const long double ux = (acy * ab2 - aby * ac2) / d;
        const long double uy = (abx * ac2 - acx * ab2) / d;
        return {a[0] + (double)ux, a[1] + (double)uy};
    }

    /// Triangle containing p, walking from `hint`.
    int locate(const Pt<2>& p, int hint) const {
        int t = (hint >= 0 && hint < (int)tri.size() && alive[hint]) ? hint : first_alive();
        std::size_t steps = 0;
        const std::size_t cap = 4 * tri.size() + 64;
        while (true) {
            if (++steps > cap) throw state_error("delaunay: point location walk failed");
            bool moved = false;
            for (int i = 0; i < 3; ++i) {
                const int a = tri[t].v[(i + 1) % 3], b = tri[t].v[(i + 2) % 3];
                if (orient(pts[a], pts[b], p) < 0.0L) {
                    const int next = tri[t].adj[i];
                    if (next < 0) throw state_error("delaunay: walked out of the super-triangle");
                    t = next;
                    moved = true;
                    break;
                }
            }
            if (!moved) return t;
        }
    }

    /// Greedy nearest-vertex walk; in a Delaunay triangulation this reaches
    /// the exact nearest vertex. Super vertices are skipped.
    int nearest_vertex(const Pt<2>& q, int hint = 0) const {
        require(n_real > 0, "delaunay: empty triangulation");
        int v = (hint >= 0 && hint < n_real) ? hint : 0;
        double best = dist2<2>(q, pts[v]);
        bool improved = true;
        while (improved) {
            improved = false;
            for (const int w : vertex_neighbors(v)) {
                if (w >= n_real) continue;
                const double d2w = dist2<2>(q, pts[w]);
                if (d2w < best) {
                    best = d2w;
                    v = w;
                    improved = true;
                }
            }
        }
        return v;
    }

    const std::vector<std::vector<int>>& neighbor_lists() const {
        if (nbr_.empty()) build_neighbors();
        return nbr_;
    }

    const std::vector<int>& vertex_neighbors(int v) const { return neighbor_lists()[v]; }

  private:
    mutable std::vector<std::vector<int>> nbr_;

    int first_alive() const {
        for (int t = 0; t < (int)tri.size(); ++t)
            if (alive[t]) return t;
        throw state_error("delaunay: no triangles");
    }

    void build_neighbors() const {
        nbr_.assign(pts.size(), {});
        auto add = [&](int a, int b) {
            for (int x : nbr_[a])
                if (x == b) return;
            nbr_[a].push_back(b);
        };
        for (std::size_t t = 0; t < tri.size(); ++t) {
            if (!alive[t]) continue;
            for (int i = 0; i < 3; ++i) {
                add(tri[t].v[i], tri[t].v[(i + 1) % 3]);
                add(tri[t].v[(i + 1) % 3], tri[t].v[i]);
            }
        }
    }

    int insert(int pi, int hint) {
        const Pt<2>& p = pts[pi];
        const int t0 = locate(p, hint);
        // Cavity: connected set of triangles whose circumcircle contains p.
        std::vector<int> cavity{t0};
        std::vector<std::uint8_t> in_cavity(tri.size(), 0);
        in_cavity[t0] = 1;
        for (std::size_t head = 0; head < cavity.size(); ++head) {
            const int t = cavity[head];
            for (int i = 0; i < 3; ++i) {
                const int q = tri[t].adj[i];
                if (q < 0 || in_cavity[q]) continue;
                if (in_circle(pts[tri[q].v[0]], pts[tri[q].v[1]], pts[tri[q].v[2]], p)) {
                    in_cavity[q] = 1;
                    cavity.push_back(q);
                }
            }
        }
        struct BEdge {
            int a, b, outer, outer_slot;
        };
        std::vector<BEdge> boundary;
        for (const int t : cavity) {
            for (int i = 0; i < 3; ++i) {
                const int q = tri[t].adj[i];
                if (q >= 0 && in_cavity[q]) continue;
                int slot = -1;
                if (q >= 0)
                    for (int j = 0; j < 3; ++j)
                        if (tri[q].adj[j] == t) slot = j;
                boundary.push_back({tri[t].v[(i + 1) % 3], tri[t].v[(i + 2) % 3], q, slot});
            }
        }
        for (const int t : cavity) alive[t] = 0;
        std::unordered_map<int, std::pair<int, int>> pending;  // side vertex -> (tri, slot)
        int last = -1;
        for (const BEdge& e : boundary) {
            const int nt = (int)tri.size();
            tri.push_back({{pi, e.a, e.b}, {e.outer, -1, -1}});
            alive.push_back(1);
            if (e.outer >= 0 && e.outer_slot >= 0) tri[e.outer].adj[e.outer_slot] = nt;
            // Edge (p, b) is opposite vertex a (slot 1); edge (p, a) opposite b (slot 2).
            for (const auto& [key, slot] : {std::pair{e.b, 1}, std::pair{e.a, 2}}) {
                auto it = pending.find(key);
                if (it == pending.end()) {
                    pending.emplace(key, std::pair{nt, slot});
                } else {
                    tri[nt].adj[slot] = it->second.first;
                    tri[it->second.first].adj[it->second.second] = nt;
                    pending.erase(it);
                }
            }
            last = nt;
        }
        nbr_.clear();
        return last;
    }
};

/// Voronoi-dual edge of a Delaunay edge: the segment between the two
/// circumcenters of the flanking triangles.
struct VoronoiEdge {
    int a, b;          // real point ids, a < b
    Pt<2> c1, c2;      // flanking circumcenters
    bool hull;         // one flank touches the super-triangle
};

inline bool segment_intersects_box(const Pt<2>& p, const Pt<2>& q, double lo0, double hi0,
                                   double lo1, double hi1) {
    double t0 = 0.0, t1 = 1.0;
    const double d[2] = {q[0] - p[0], q[1] - p[1]};
    const double lo[2] = {lo0, lo1}, hi[2] = {hi0, hi1};
    for (int a = 0; a < 2; ++a) {
        if (std::abs(d[a]) < 1e-300) {
            if (p[a] < lo[a] || p[a] > hi[a]) return false;
        } else {
            double u0 = (lo[a] - p[a]) / d[a];
            double u1 = (hi[a] - p[a]) / d[a];
            if (u0 > u1) std::swap(u0, u1);
            t0 = std::max(t0, u0);
            t1 = std::min(t1, u1);
            if (t0 > t1) return false;
        }
    }
    return true;
}

/// All real-real Voronoi edges of the triangulation.
inline std::vector<VoronoiEdge> voronoi_edges(const Delaunay2D& dt) {
    std::vector<VoronoiEdge> out;
    std::vector<Pt<2>> cc(dt.tri.size());
    for (std::size_t t = 0; t < dt.tri.size(); ++t)
        if (dt.alive[t]) cc[t] = dt.circumcenter((int)t);
    for (std::size_t t = 0; t < dt.tri.size(); ++t) {
        if (!dt.alive[t]) continue;
        for (int i = 0; i < 3; ++i) {
            const int q = dt.tri[t].adj[i];
            if (q >= 0 && (int)t > q) continue;  // visit each edge once
            const int a = dt.tri[t].v[(i + 1) % 3], b = dt.tri[t].v[(i + 2) % 3];
            if (dt.is_super(a) || dt.is_super(b)) continue;
            VoronoiEdge e;
            e.a = std::min(a, b);
            e.b = std::max(a, b);
            e.c1 = cc[t];
            bool hull = dt.is_super(dt.tri[t].v[i]);
            if (q >= 0) {
                e.c2 = cc[q];
                for (int j = 0; j < 3; ++j)
                    if (dt.is_super(dt.tri[q].v[j])) hull = true;
            } else {
                e.c2 = cc[t];
                hull = true;
            }
            e.hull = hull;
            out.push_back(e);
        }
    }
    return out;
}

/// Cell adjacency restricted to pairs whose shared Voronoi edge meets the
/// padded window; this is the spec'd AdjacencyGraph for d = 2.
struct AdjacencyGraph {
    std::int64_t n = 0;
    std::vector<std::pair<int, int>> edges;  // a < b

    bool has_edge(int a, int b) const {
        if (a > b) std::swap(a, b);
        for (const auto& e : edges)
            if (e.first == a && e.second == b) return true;
        return false;
    }
};

template <class Cfg>
AdjacencyGraph delaunay_adjacency_2d(const Cfg& cfg, std::uint64_t jitter_seed = 0x9e3779b9ull) {
    const Delaunay2D dt = Delaunay2D::build(cfg, jitter_seed);
    AdjacencyGraph g;
    g.n = dt.n_real;
    const double W = std::abs(grid_of(cfg).origin);
    for (const VoronoiEdge& e : voronoi_edges(dt)) {
        if (segment_intersects_box(e.c1, e.c2, -W, W, -W, W))
            g.edges.emplace_back(e.a, e.b);
    }
    return g;
}

/// Cells (point ids) meeting the origin-centered circle of given radius,
/// found by walking bisector crossings along the circle. Exact up to floating
/// point; a circle inside a single cell yields just that owner.
inline std::vector<int> cells_on_circle(const Delaunay2D& dt, double radius) {
    std::vector<int> cells;
    int v = dt.nearest_vertex({radius, 0.0});
    cells.push_back(v);
    if (radius <= 0.0) return cells;
    double theta = 0.0;
    std::size_t guard = 0;
    while (true) {
        if (++guard > dt.pts.size() * 16 + 64)
            throw state_error("cells_on_circle: walk failed to terminate");
        // f(t) = |s(t)-v|^2 - |s(t)-w|^2 = A cos t + B sin t + C; w takes over
        // where f crosses zero upward.
        double best_t = theta + 2 * std::numbers::pi + 1.0;
        int best_w = -1;
        for (const int w : dt.vertex_neighbors(v)) {
            const double A = -2.0 * radius * (dt.pts[v][0] - dt.pts[w][0]);
            const double B = -2.0 * radius * (dt.pts[v][1] - dt.pts[w][1]);
            const double C = norm2<2>(dt.pts[v]) - norm2<2>(dt.pts[w]);
            const double R = std::hypot(A, B);
            if (R < std::abs(C)) continue;  // bisector misses the circle
            const double phi = std::atan2(B, A);
            const double delta = std::acos(std::clamp(-C / R, -1.0, 1.0));
            for (const double root : {phi + delta, phi - delta}) {
                const double fprime = -A * std::sin(root) + B * std::cos(root);
                if (fprime <= 0.0) continue;  // exiting, not entering, crossing
                double t = root;
                while (t <= theta + 1e-13) t += 2 * std::numbers::pi;
                if (t < best_t) {
                    best_t = t;
                    best_w = w;
                }
            }
        }
        if (best_w < 0 || best_t >= 2 * std::numbers::pi) break;
        theta = best_t;
        v = best_w;
        if (v < dt.n_real &&
            std::find(cells.begin(), cells.end(), v) == cells.end())
            cells.push_back(v);
    }
    return cells;
}

/// Ordered list of Voronoi cells (point ids) whose cell meets the segment
/// q0 -> q1, found by walking bisector crossings between Delaunay neighbors.
/// Exact up to floating point: a cell is exited only through a face it
/// shares with a Delaunay neighbor.
inline std::vector<int> cells_on_segment(const Delaunay2D& dt, const Pt<2>& q0, const Pt<2>& q1,
                                         int hint = 0) {
    std::vector<int> cells;
    int v = dt.nearest_vertex(q0, hint);
    cells.push_back(v);
    const double dv[2] = {q1[0] - q0[0], q1[1] - q0[1]};
    double t = 0.0;
    std::size_t guard = 0;
    while (true) {
        if (++guard > dt.pts.size() * 8 + 64)
            throw state_error("cells_on_segment: walk failed to terminate");
        double best_t = 1.0 + 1e-12;
        int best_w = -1;
        for (const int w : dt.vertex_neighbors(v)) {
            // |s(t)-v|^2 - |s(t)-w|^2 = A + B t; w becomes closer where it turns positive.
            const double A = dist2<2>(q0, dt.pts[v]) - dist2<2>(q0, dt.pts[w]);
            const double B = 2.0 * (dv[0] * (dt.pts[w][0] - dt.pts[v][0]) +
                                    dv[1] * (dt.pts[w][1] - dt.pts[v][1]));
            if (B <= 0.0) continue;
            const double tw = -A / B;
            if (tw > t && tw < best_t) {
                best_t = tw;
                best_w = w;
            }
        }
        if (best_w < 0 || best_t > 1.0) break;
        t = best_t;
        v = best_w;
        if (v < dt.n_real) cells.push_back(v);
    }
    return cells;
}

}  // namespace vperc
