#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vperc/delaunay.hpp"
#include "vperc/errors.hpp"
#include "vperc/geom.hpp"
#include "vperc/raster.hpp"
#include "vperc/union_find.hpp"

namespace vperc {

inline constexpr double kDefaultRasterPitch = 0.1;

enum class Engine { raster, delaunay2d };

enum class EventKind { origin_to_sphere, point_to_sphere, box_crossing, box_to_sphere };

/// A connection event. All kinds are increasing in the black process.
///   origin_to_sphere(n):   {0 <-> S_n}
///   point_to_sphere(x, k): {x <-> S_k}            (inner = k)
///   box_crossing(n):       A_n, axis-0 crossing of [-n, n]^d
///   box_to_sphere(r, n):   {B_r <-> S_n}          (inner = r)
struct EventSpec {
    EventKind kind = EventKind::origin_to_sphere;
    double outer = 0.0;
    double inner = 0.0;
    std::array<double, 3> x{};
    Engine engine = Engine::raster;

    static EventSpec origin_to_sphere(double n, Engine e = Engine::raster) {
        return {EventKind::origin_to_sphere, n, 0.0, {}, e};
    }
    static EventSpec point_to_sphere(std::array<double, 3> x, double k, Engine e = Engine::raster) {
        return {EventKind::point_to_sphere, 0.0, k, x, e};
    }
    static EventSpec box_crossing(double n, Engine e = Engine::raster) {
        return {EventKind::box_crossing, n, 0.0, {}, e};
    }
    static EventSpec box_to_sphere(double r, double n, Engine e = Engine::raster) {
        return {EventKind::box_to_sphere, n, r, {}, e};
    }

    double max_radius() const {
        double m = std::max(outer, inner);
        double x2 = 0.0;
        for (double c : x) x2 += c * c;
        return std::max(m, std::sqrt(x2));
    }

    std::string name() const {
        switch (kind) {
            case EventKind::origin_to_sphere: return "origin_to_sphere";
            case EventKind::point_to_sphere: return "point_to_sphere";
            case EventKind::box_crossing: return "box_crossing";
            case EventKind::box_to_sphere: return "box_to_sphere";
        }
        return "?";
    }
};

template <int D>
void validate_event(const Window<D>& window, const EventSpec& spec) {
    require(spec.max_radius() <= window.half_width + 1e-12,
            "event: radii must fit inside [-L, L]^d");
    require(spec.engine == Engine::raster || D == 2,
            "event: delaunay2d engine requires d = 2");
}

// ---------------------------------------------------------------------------
// Raster engine: union-find over same-color orthogonally adjacent sites.
// The sphere S_r is represented as the sites within h*sqrt(d) of it; the
// ball B_r as the sites inside it. Restricting the labeling to the event's
// box [-n, n]^d is exact for origin/sphere events (a site path first exits
// radius n through the S_n band) and is the definition for crossings.
// ---------------------------------------------------------------------------
template <int D>
class RasterEvaluator {
  public:
    RasterEvaluator(const NeighborCache<D>& cache, double region_R, double h,
                    std::int64_t site_budget = kDefaultSiteBudget)
        : g_(rasterize<D>(cache, region_R, h, site_budget)), p_(cache.config().p) {}

    RasterEvaluator(const PointConfiguration<D>& cfg, double region_R, double h)
        : RasterEvaluator(NeighborCache<D>(cfg), region_R, h) {}

    ColorGrid<D>& grid() { return g_; }
    const ColorGrid<D>& grid() const { return g_; }
    double parameter() const { return p_; }

    void recolor(double p) {
        if (p == p_ && pure_) return;
        g_.recolor(p);
        p_ = p;
        pure_ = true;
        invalidate();
    }

    /// Recolor at p but force the sites owned by `point_id` to `forced_black`.
    void recolor_with_override(double p, std::int64_t point_id, bool forced_black) {
        const auto pid = static_cast<std::uint32_t>(point_id);
        const std::int64_t n = g_.site_count();
        for (std::int64_t i = 0; i < n; ++i)
            g_.color[i] = (g_.owner[i] == pid) ? (forced_black ? 1 : 0) : (g_.owner_u[i] < p ? 1 : 0);
        p_ = p;
        pure_ = false;
        invalidate();
    }

    /// Note an external mutation of the grid (e.g. a box patch).
    void invalidate() { prepared_R_ = -1.0; }

    bool origin_to_sphere(double n) {
        prepare(n, /*white=*/false);
        const std::int64_t o = g_.origin_site();
        if (!g_.color[o]) return false;
        return connected_to_ring(o, n);
    }

    /// Evaluate {0 <-> S_r} for every radius in one labeling pass at region n.
    std::vector<bool> origin_to_spheres(const std::vector<double>& radii, double region) {
        prepare(region, false);
        std::vector<bool> out(radii.size(), false);
        const std::int64_t o = g_.origin_site();
        if (!g_.color[o]) return out;
        for (std::size_t i = 0; i < radii.size(); ++i)
            out[i] = radii[i] == 0.0 ? true : connected_to_ring(o, radii[i]);
        return out;
    }

    bool point_to_sphere(const Pt<D>& x, double k, double region) {
        prepare(region, false);
        const std::int64_t s = site_at(x);
        if (!g_.color[s]) return false;
        return connected_to_ring(s, k);
    }

    bool box_crossing(double n, bool white = false) {
        prepare(n, white);
        return face_to_face(n, 0, white);
    }

    /// Crossing of [-n,n]^d along a chosen axis (the duality diagnostic pairs
    /// axis-0 black with axis-1 white).
    bool crossing_along(double n, int axis, bool white) {
        prepare(n, white);
        return face_to_face(n, axis, white);
    }

    bool box_to_sphere(double r, double n) {
        prepare(n, false);
        collect_ring_roots(n, false);
        for (const std::int64_t s : region_sites(r, true))
            if (g_.color[s] && root_marked(uf_.find(s))) return true;
        return false;
    }

    bool box_to_side(double k, double n, int axis, bool positive) {
        prepare(n, false);
        // roots of black face sites
        mark_.assign(g_.site_count(), 0);
        for (const std::int64_t s : face_sites(n, axis, positive))
            if (g_.color[s]) mark_[uf_.find(s)] = 1;
        for (const std::int64_t s : region_sites(k, true))
            if (g_.color[s] && mark_[uf_.find(s)]) return true;
        return false;
    }

    /// Compact component labels of same-color regions within [-R, R]^d.
    /// Black components get labels 0..count-1; other sites -1.
    std::pair<std::vector<std::int32_t>, std::int64_t> black_components(double R, bool white = false) {
        prepare(R, white);
        std::vector<std::int32_t> lab(g_.site_count(), -1);
        std::map<std::int64_t, std::int32_t> seen;
        for (const std::int64_t s : box_sites(R)) {
            if (g_.color[s] != (white ? 0 : 1)) continue;
            const std::int64_t r = uf_.find(s);
            auto [it, fresh] = seen.emplace(r, static_cast<std::int32_t>(seen.size()));
            lab[s] = it->second;
        }
        return {std::move(lab), static_cast<std::int64_t>(seen.size())};
    }

    /// Sites within h*sqrt(d) of the sphere of given radius.
    const std::vector<std::int64_t>& ring_sites(double radius) {
        auto it = rings_.find(radius);
        if (it != rings_.end()) return it->second;
        std::vector<std::int64_t> v;
        const double tol = g_.h * std::sqrt(double(D));
        const std::int64_t n = g_.site_count();
        for (std::int64_t s = 0; s < n; ++s) {
            const double nm = std::sqrt(norm2<D>(g_.site_pos(s)));
            if (std::abs(nm - radius) <= tol) v.push_back(s);
        }
        return rings_.emplace(radius, std::move(v)).first->second;
    }

    std::int64_t site_at(const Pt<D>& x) const {
        std::array<std::int64_t, D> c{};
        for (int a = 0; a < D; ++a) {
            c[a] = static_cast<std::int64_t>(std::llround((x[a] - g_.lo) / g_.h));
            require(c[a] >= 0 && c[a] < g_.sites, "event: point outside the raster region");
        }
        return g_.encode(c);
    }

    UnionFind& labels(double R, bool white = false) {
        prepare(R, white);
        return uf_;
    }

  private:
    ColorGrid<D> g_;
    double p_;
    bool pure_ = true;
    UnionFind uf_;
    double prepared_R_ = -1.0;
    bool prepared_white_ = false;
    std::vector<std::uint8_t> mark_;
    std::map<double, std::vector<std::int64_t>> rings_;

    /// Union same-color orthogonal neighbors within [-R, R]^d.
    void prepare(double R, bool white) {
        require(R <= -g_.lo + 1e-9, "event: radius exceeds raster region");
        if (prepared_R_ == R && prepared_white_ == white) return;
        uf_.reset(static_cast<std::size_t>(g_.site_count()));
        const std::uint8_t want = white ? 0 : 1;
        const std::int64_t jr = radius_index(R);
        const std::int64_t o = (g_.sites - 1) / 2;  // origin index on each axis
        std::array<std::int64_t, D> c{};
        for (int a = 0; a < D; ++a) c[a] = o - jr;
        std::array<std::int64_t, D> strides{};
        std::int64_t st = 1;
        for (int a = D - 1; a >= 0; --a) {
            strides[a] = st;
            st *= g_.sites;
        }
        while (true) {
            const std::int64_t idx = g_.encode(c);
            if (g_.color[idx] == want) {
                for (int a = 0; a < D; ++a) {
                    if (c[a] + 1 <= o + jr) {
                        const std::int64_t nb = idx + strides[a];
                        if (g_.color[nb] == want) uf_.unite(idx, nb);
                    }
                }
            }
            int a = D - 1;
            while (a >= 0 && ++c[a] > o + jr) c[a--] = o - jr;
            if (a < 0) break;
        }
        prepared_R_ = R;
        prepared_white_ = white;
    }

    std::int64_t radius_index(double R) const {
        const auto jr = static_cast<std::int64_t>(std::llround(R / g_.h));
        require(std::abs(R / g_.h - static_cast<double>(jr)) < 1e-9,
                "event: radius must be a multiple of the raster pitch");
        return jr;
    }

    /// All sites of the sub-box [-R, R]^d (row-major).
    std::vector<std::int64_t> box_sites(double R) const {
        const std::int64_t jr = radius_index(R);
        const std::int64_t o = (g_.sites - 1) / 2;
        std::vector<std::int64_t> v;
        std::array<std::int64_t, D> c{};
        for (int a = 0; a < D; ++a) c[a] = o - jr;
        while (true) {
            v.push_back(g_.encode(c));
            int a = D - 1;
            while (a >= 0 && ++c[a] > o + jr) c[a--] = o - jr;
            if (a < 0) break;
        }
        return v;
    }

    /// Sites of the Euclidean ball of given radius (ball=true) or its ring.
    std::vector<std::int64_t> region_sites(double radius, bool ball) const {
        std::vector<std::int64_t> v;
        const std::int64_t n = g_.site_count();
        for (std::int64_t s = 0; s < n; ++s)
            if (std::sqrt(norm2<D>(g_.site_pos(s))) <= radius + (ball ? 1e-12 : 0.0))
                v.push_back(s);
        return v;
    }

    std::vector<std::int64_t> face_sites(double n, int axis, bool positive) const {
        const std::int64_t jr = radius_index(n);
        const std::int64_t o = (g_.sites - 1) / 2;
        std::vector<std::int64_t> v;
        std::array<std::int64_t, D> c{};
        for (int a = 0; a < D; ++a) c[a] = o - jr;
        c[axis] = positive ? o + jr : o - jr;
        while (true) {
            v.push_back(g_.encode(c));
            int a = D - 1;
            while (a >= 0) {
                if (a == axis) { --a; continue; }
                if (++c[a] <= o + jr) break;
                c[a--] = o - jr;
            }
            if (a < 0) break;
        }
        return v;
    }

    void collect_ring_roots(double radius, bool white) {
        mark_.assign(g_.site_count(), 0);
        for (const std::int64_t s : ring_sites(radius))
            if (g_.color[s] == (white ? 0 : 1)) mark_[uf_.find(s)] = 1;
    }

    bool root_marked(std::int64_t root) const { return mark_[root] != 0; }

    bool connected_to_ring(std::int64_t from, double radius) {
        const std::int64_t r0 = uf_.find(from);
        for (const std::int64_t s : ring_sites(radius))
            if (g_.color[s] && uf_.find(s) == r0) return true;
        return false;
    }

    bool face_to_face(double n, int axis, bool white) {
        mark_.assign(g_.site_count(), 0);
        const std::uint8_t want = white ? 0 : 1;
        for (const std::int64_t s : face_sites(n, axis, false))
            if (g_.color[s] == want) mark_[uf_.find(s)] = 1;
        for (const std::int64_t s : face_sites(n, axis, true))
            if (g_.color[s] == want && mark_[uf_.find(s)]) return true;
        return false;
    }
};

// ---------------------------------------------------------------------------
// Exact planar engine: union-find over black Delaunay neighbors whose shared
// Voronoi edge meets the relevant region. Sphere and ball membership come
// from an exact circle walk in the dual, so cells touching S_r are
// enumerated without discretization.
// ---------------------------------------------------------------------------
class DelaunayEvaluator {
  public:
    DelaunayEvaluator(const PointConfiguration<2>& cfg, std::uint64_t jitter_seed = 0x5eedull)
        : cfg_(&cfg), dt_(Delaunay2D::build(cfg, substream(cfg.root_seed, jitter_seed))) {
        edges_ = voronoi_edges(dt_);
        const double W = cfg.window.padded_half();
        std::vector<VoronoiEdge> kept;
        kept.reserve(edges_.size());
        for (const auto& e : edges_)
            if (segment_intersects_box(e.c1, e.c2, -W, W, -W, W)) kept.push_back(e);
        edges_ = std::move(kept);
        u_.reserve(static_cast<std::size_t>(cfg.size()));
        for (const auto& rec : cfg.pts) u_.push_back(rec.color_u);
    }

    int point_count() const { return dt_.n_real; }
    const Delaunay2D& triangulation() const { return dt_; }

    bool black(int v, double p) const { return u_[v] < p; }

    bool origin_to_sphere(double n, double p) {
        const int o = dt_.nearest_vertex({0.0, 0.0});
        if (!black(o, p)) return false;
        UnionFind& uf = components(p, cfg_->window.padded_half());
        const std::int64_t r0 = uf.find(o);
        for (const int v : sphere_cells(n))
            if (black(v, p) && uf.find(v) == r0) return true;
        return false;
    }

    bool point_to_sphere(const Pt<2>& x, double k, double p) {
        const int o = dt_.nearest_vertex(x);
        if (!black(o, p)) return false;
        UnionFind& uf = components(p, cfg_->window.padded_half());
        const std::int64_t r0 = uf.find(o);
        for (const int v : sphere_cells(k))
            if (black(v, p) && uf.find(v) == r0) return true;
        return false;
    }

    bool box_to_sphere(double r, double n, double p) {
        UnionFind& uf = components(p, cfg_->window.padded_half());
        std::vector<std::int64_t> roots;
        for (const int v : sphere_cells(n))
            if (black(v, p)) roots.push_back(uf.find(v));
        for (const int v : ball_cells(r))
            if (black(v, p)) {
                const std::int64_t rv = uf.find(v);
                for (const std::int64_t r2 : roots)
                    if (r2 == rv) return true;
            }
        return false;
    }

    /// Axis-0 crossing of Lambda_n = [-n, n]^2, with paths restricted to it.
    bool box_crossing(double n, double p, bool white = false) {
        return crossing_along(n, 0, white, p);
    }

    bool crossing_along(double n, int axis, bool white, double p) {
        const auto side = [&](bool positive) {
            Pt<2> a{}, b{};
            a[axis] = b[axis] = positive ? n : -n;
            a[1 - axis] = -n;
            b[1 - axis] = n;
            return cells_on_segment(dt_, a, b);
        };
        UnionFind& uf = components_in_box(p, n, white);
        std::vector<std::int64_t> roots;
        for (const int v : side(false))
            if (black(v, p) != white) roots.push_back(uf.find(v));
        for (const int v : side(true)) {
            if (black(v, p) == white) continue;
            const std::int64_t rv = uf.find(v);
            for (const std::int64_t r2 : roots)
                if (r2 == rv) return true;
        }
        return false;
    }

    bool box_to_side(double k, double n, int axis, bool positive, double p) {
        Pt<2> a{}, b{};
        a[axis] = b[axis] = positive ? n : -n;
        a[1 - axis] = -n;
        b[1 - axis] = n;
        UnionFind& uf = components_in_box(p, n, false);
        std::vector<std::int64_t> roots;
        for (const int v : cells_on_segment(dt_, a, b))
            if (black(v, p)) roots.push_back(uf.find(v));
        for (const int v : ball_cells(k))
            if (black(v, p)) {
                const std::int64_t rv = uf.find(v);
                for (const std::int64_t r2 : roots)
                    if (r2 == rv) return true;
            }
        return false;
    }

    /// Per-point component labels of black cells (padded-window adjacency).
    std::pair<std::vector<std::int32_t>, std::int64_t> black_components(double p) {
        UnionFind& uf = components(p, cfg_->window.padded_half());
        std::vector<std::int32_t> lab(static_cast<std::size_t>(dt_.n_real), -1);
        std::map<std::int64_t, std::int32_t> seen;
        for (int v = 0; v < dt_.n_real; ++v) {
            if (!black(v, p)) continue;
            auto [it, fresh] = seen.emplace(uf.find(v), static_cast<std::int32_t>(seen.size()));
            lab[v] = it->second;
        }
        return {std::move(lab), static_cast<std::int64_t>(seen.size())};
    }

    /// Cells whose Voronoi region meets S_n (exact dual walk, cached).
    const std::vector<int>& sphere_cells(double n) {
        auto it = circles_.find(n);
        if (it != circles_.end()) return it->second;
        return circles_.emplace(n, cells_on_circle(dt_, n)).first->second;
    }

    /// Cells meeting the closed ball B_r: sites inside plus cells crossing S_r.
    const std::vector<int>& ball_cells(double r) {
        auto it = balls_.find(r);
        if (it != balls_.end()) return it->second;
        std::vector<int> v = cells_on_circle(dt_, r);
        for (int i = 0; i < dt_.n_real; ++i)
            if (norm2<2>(cfg_->pts[i].pos) <= r * r &&
                std::find(v.begin(), v.end(), i) == v.end())
                v.push_back(i);
        return balls_.emplace(r, std::move(v)).first->second;
    }

  private:
    const PointConfiguration<2>* cfg_;
    Delaunay2D dt_;
    std::vector<VoronoiEdge> edges_;
    std::vector<double> u_;
    UnionFind uf_;
    double uf_p_ = -1.0, uf_box_ = -1.0;
    bool uf_white_ = false;
    std::map<double, std::vector<int>> circles_, balls_;

    UnionFind& components(double p, double box) { return components_impl(p, box, false); }
    UnionFind& components_in_box(double p, double n, bool white) {
        return components_impl(p, n, white);
    }

    UnionFind& components_impl(double p, double box, bool white) {
        if (uf_p_ == p && uf_box_ == box && uf_white_ == white) return uf_;
        uf_.reset(static_cast<std::size_t>(dt_.n_real));
        for (const VoronoiEdge& e : edges_) {
            if ((u_[e.a] < p) == white || (u_[e.b] < p) == white) continue;
            if (segment_intersects_box(e.c1, e.c2, -box, box, -box, box)) uf_.unite(e.a, e.b);
        }
        uf_p_ = p;
        uf_box_ = box;
        uf_white_ = white;
        return uf_;
    }
};

// ---------------------------------------------------------------------------

/// One-off evaluation of an event on a configuration. Estimator loops build
/// the evaluators directly so rasters and triangulations are reused.
template <int D>
bool evaluate(const PointConfiguration<D>& cfg, const EventSpec& spec,
              double h = kDefaultRasterPitch) {
    validate_event(cfg.window, spec);
    if (cfg.empty()) throw state_error("evaluate: empty configuration");
    if (spec.engine == Engine::delaunay2d) {
        if constexpr (D == 2) {
            DelaunayEvaluator ev(cfg);
            switch (spec.kind) {
                case EventKind::origin_to_sphere: return ev.origin_to_sphere(spec.outer, cfg.p);
                case EventKind::point_to_sphere:
                    return ev.point_to_sphere({spec.x[0], spec.x[1]}, spec.inner, cfg.p);
                case EventKind::box_crossing: return ev.box_crossing(spec.outer, cfg.p);
                case EventKind::box_to_sphere:
                    return ev.box_to_sphere(spec.inner, spec.outer, cfg.p);
            }
        }
        throw parameter_error("evaluate: delaunay2d engine requires d = 2");
    }
    const double region = (spec.kind == EventKind::point_to_sphere)
                              ? cfg.window.half_width
                              : spec.outer;
    RasterEvaluator<D> ev(cfg, std::max(region, spec.inner), h);
    switch (spec.kind) {
        case EventKind::origin_to_sphere: return ev.origin_to_sphere(spec.outer);
        case EventKind::point_to_sphere: {
            Pt<D> x{};
            for (int a = 0; a < D; ++a) x[a] = spec.x[a];
            return ev.point_to_sphere(x, spec.inner, cfg.window.half_width);
        }
        case EventKind::box_crossing: return ev.box_crossing(spec.outer);
        case EventKind::box_to_sphere: return ev.box_to_sphere(spec.inner, spec.outer);
    }
    return false;
}

}  // namespace vperc
