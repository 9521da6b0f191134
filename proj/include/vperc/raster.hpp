#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "vperc/errors.hpp"
#include "vperc/geom.hpp"
#include "vperc/nearest.hpp"
#include "vperc/point_process.hpp"

namespace vperc {

/// Default cap on raster sites; exceeding it raises resource_error.
inline constexpr std::int64_t kDefaultSiteBudget = std::int64_t(1) << 27;

/// Rasterized coloring of [-R, R]^D: sites on the lattice lo + h*Z^D, each
/// carrying the id and color uniform of its owning (nearest) process point.
/// Site colors at any parameter p follow from owner_u < p, so one owner map
/// serves a whole p-sweep.
template <int D>
struct ColorGrid {
    double h = 0.0;
    double lo = 0.0;           // low corner, same on every axis
    std::int64_t sites = 0;    // per axis
    std::vector<std::uint32_t> owner;
    std::vector<double> owner_u;
    std::vector<std::uint8_t> color;
    double max_owner_dist = 0.0;  // over sites, for patch scan radius

    std::int64_t site_count() const {
        std::int64_t n = 1;
        for (int i = 0; i < D; ++i) n *= sites;
        return n;
    }

    std::array<std::int64_t, D> decode(std::int64_t idx) const {
        std::array<std::int64_t, D> c{};
        for (int i = D - 1; i >= 0; --i) {
            c[i] = idx % sites;
            idx /= sites;
        }
        return c;
    }

    std::int64_t encode(const std::array<std::int64_t, D>& c) const {
        std::int64_t idx = 0;
        for (int i = 0; i < D; ++i) idx = idx * sites + c[i];
        return idx;
    }

    Pt<D> site_pos(const std::array<std::int64_t, D>& c) const {
        Pt<D> p{};
        for (int i = 0; i < D; ++i) p[i] = lo + h * static_cast<double>(c[i]);
        return p;
    }

    Pt<D> site_pos(std::int64_t idx) const { return site_pos(decode(idx)); }

    /// Site index of the lattice point nearest to the origin (exact when
    /// lo is an integer multiple of h, which rasterize() enforces).
    std::int64_t origin_site() const {
        std::array<std::int64_t, D> c{};
        for (int i = 0; i < D; ++i) c[i] = static_cast<std::int64_t>(std::llround(-lo / h));
        return encode(c);
    }

    void recolor(double p) {
        for (std::int64_t i = 0; i < site_count(); ++i)
            color[i] = owner_u[i] < p ? 1 : 0;
    }
};

/// Build the color grid over [-R, R]^D at pitch h by nearest-point queries
/// accelerated with the configuration's cell lists. Near-linear in the site
/// count for unit-intensity configurations.
template <int D>
ColorGrid<D> rasterize(const NeighborCache<D>& cache, double R, double h,
                       std::int64_t site_budget = kDefaultSiteBudget) {
    require(h > 0.0, "rasterize: pitch must be positive");
    require(R > 0.0 && R <= cache.config().window.half_width + 1e-12,
            "rasterize: region must fit inside [-L, L]^d");
    const double m_real = 2.0 * R / h;
    const auto m = static_cast<std::int64_t>(std::llround(m_real));
    require(std::abs(m_real - static_cast<double>(m)) < 1e-9,
            "rasterize: pitch must divide the region extent");
    ColorGrid<D> g;
    g.h = h;
    g.lo = -R;
    g.sites = m + 1;
    const std::int64_t n = g.site_count();
    if (n > site_budget)
        throw resource_error("rasterize: grid of " + std::to_string(n) +
                             " sites exceeds the site budget");
    g.owner.resize(n);
    g.owner_u.resize(n);
    g.color.resize(n);
    const double p = cache.config().p;
    double maxd2 = 0.0;
    std::array<std::int64_t, D> c{};
    for (std::int64_t idx = 0; idx < n; ++idx) {
        const NearestHit<D> hit = cache.query(g.site_pos(c));
        g.owner[idx] = static_cast<std::uint32_t>(hit.id);
        g.owner_u[idx] = hit.color_u;
        g.color[idx] = hit.color_u < p ? 1 : 0;
        maxd2 = std::max(maxd2, hit.d2);
        int a = D - 1;
        while (a >= 0 && ++c[a] == g.sites) c[a--] = 0;
    }
    g.max_owner_dist = std::sqrt(maxd2);
    return g;
}

template <int D>
ColorGrid<D> rasterize(const PointConfiguration<D>& cfg, double R, double h,
                       std::int64_t site_budget = kDefaultSiteBudget) {
    return rasterize<D>(NeighborCache<D>(cfg), R, h, site_budget);
}

/// Undo record for a local owner update after one box resample.
template <int D>
struct RasterPatch {
    std::vector<std::int64_t> site;
    std::vector<std::uint32_t> old_owner;
    std::vector<double> old_u;
    std::vector<std::uint8_t> old_color;
    bool any_color_change = false;
};

/// Update grid sites affected by replacing one epsilon-box's points.
/// A site can change owner only if its distance to the box region is at most
/// its current owner distance (removed-owner sites satisfy this too), so the
/// scan is confined to a cube of radius max_owner_dist around the box.
/// Colors are written at parameter p. Revert with revert_patch.
template <int D>
RasterPatch<D> apply_box_patch(ColorGrid<D>& g, const PatchedConfig<D>& view, std::int64_t box,
                               double p) {
    const EpsilonGrid<D>& grid = view.grid_ref();
    const Pt<D> blo = grid.low_corner(box);
    const double r = g.max_owner_dist + 1e-9;
    std::array<std::int64_t, D> jlo{}, jhi{};
    for (int a = 0; a < D; ++a) {
        jlo[a] = std::max<std::int64_t>(
            0, static_cast<std::int64_t>(std::floor((blo[a] - r - g.lo) / g.h)));
        jhi[a] = std::min<std::int64_t>(
            g.sites - 1,
            static_cast<std::int64_t>(std::ceil((blo[a] + grid.pitch + r - g.lo) / g.h)));
        if (jlo[a] > jhi[a]) return {};
    }
    RasterPatch<D> patch;
    std::array<std::int64_t, D> c = jlo;
    while (true) {
        const std::int64_t idx = g.encode(c);
        const Pt<D> z = g.site_pos(c);
        double box_d2 = 0.0;
        for (int a = 0; a < D; ++a) {
            double d = 0.0;
            if (z[a] < blo[a]) d = blo[a] - z[a];
            else if (z[a] > blo[a] + grid.pitch) d = z[a] - (blo[a] + grid.pitch);
            box_d2 += d * d;
        }
        const Pt<D>& own = view.point(g.owner[idx]).pos;
        if (box_d2 <= dist2<D>(z, own) + 1e-12) {
            NearestHit<D> seed;
            const NearestHit<D> hit = nearest_in_config<D>(view, z, &seed);
            if (hit.id != static_cast<std::int64_t>(g.owner[idx]) || hit.color_u != g.owner_u[idx]) {
                const std::uint8_t new_color = hit.color_u < p ? 1 : 0;
                patch.site.push_back(idx);
                patch.old_owner.push_back(g.owner[idx]);
                patch.old_u.push_back(g.owner_u[idx]);
                patch.old_color.push_back(g.color[idx]);
                if (new_color != g.color[idx]) patch.any_color_change = true;
                g.owner[idx] = static_cast<std::uint32_t>(hit.id);
                g.owner_u[idx] = hit.color_u;
                g.color[idx] = new_color;
            }
        }
        int a = D - 1;
        while (a >= 0 && ++c[a] > jhi[a]) c[a--] = jlo[a];
        if (a < 0) break;
    }
    return patch;
}

template <int D>
void revert_patch(ColorGrid<D>& g, const RasterPatch<D>& patch) {
    for (std::size_t i = 0; i < patch.site.size(); ++i) {
        g.owner[patch.site[i]] = patch.old_owner[i];
        g.owner_u[patch.site[i]] = patch.old_u[i];
        g.color[patch.site[i]] = patch.old_color[i];
    }
}

// --- debug exports ----------------------------------------------------------

/// PGM raster (d=2): black sites dark, white sites light.
inline void write_pgm(std::ostream& os, const ColorGrid<2>& g) {
    os << "P2\n" << g.sites << ' ' << g.sites << "\n255\n";
    for (std::int64_t row = g.sites - 1; row >= 0; --row) {
        for (std::int64_t colu = 0; colu < g.sites; ++colu) {
            os << (g.color[g.encode({colu, row})] ? 40 : 220);
            os << (colu + 1 == g.sites ? '\n' : ' ');
        }
    }
}

template <int D>
void write_owner_csv(std::ostream& os, const ColorGrid<D>& g) {
    for (int a = 1; a <= D; ++a) os << 'x' << a << ',';
    os << "owner,color\n";
    for (std::int64_t idx = 0; idx < g.site_count(); ++idx) {
        const Pt<D> z = g.site_pos(idx);
        for (int a = 0; a < D; ++a) os << detail::fmt_double(z[a]) << ',';
        os << g.owner[idx] << ',' << int(g.color[idx]) << '\n';
    }
}

}  // namespace vperc
