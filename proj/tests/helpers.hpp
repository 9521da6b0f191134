#pragma once

#include <queue>
#include <vector>

#include "vperc/geom.hpp"
#include "vperc/point_process.hpp"
#include "vperc/raster.hpp"

namespace vperc::testing {

/// Hand-built configuration from explicit points and colors.
template <int D>
PointConfiguration<D> config_from_points(const Window<D>& window,
                                         const std::vector<std::pair<Pt<D>, bool>>& points,
                                         double p = 0.5, double pitch = 1.0) {
    PointConfiguration<D> cfg{window, box_partition(window, pitch), p, 0, {}, {}, {}};
    const std::int64_t nb = cfg.grid.box_count();
    std::vector<std::vector<PointRec<D>>> by_box(static_cast<std::size_t>(nb));
    for (const auto& [pos, black] : points) {
        PointRec<D> rec{pos, black ? 0.5 * p : 0.5 * (1.0 + p)};
        by_box[static_cast<std::size_t>(cfg.grid.box_of(pos))].push_back(rec);
    }
    cfg.resample_counter.assign(static_cast<std::size_t>(nb), 0);
    cfg.box_begin.resize(static_cast<std::size_t>(nb) + 1);
    for (std::int64_t b = 0; b < nb; ++b) {
        cfg.box_begin[b] = static_cast<std::int64_t>(cfg.pts.size());
        cfg.pts.insert(cfg.pts.end(), by_box[b].begin(), by_box[b].end());
    }
    cfg.box_begin[nb] = static_cast<std::int64_t>(cfg.pts.size());
    return cfg;
}

/// O(n) linear-scan nearest point with the lexicographic tie rule.
template <int D, class Cfg>
std::int64_t brute_nearest(const Cfg& cfg, const Pt<D>& y) {
    const EpsilonGrid<D>& grid = grid_of(cfg);
    std::int64_t best = -1;
    double best_d2 = 0;
    Pt<D> best_pos{};
    for (std::int64_t b = 0; b < grid.box_count(); ++b) {
        auto seg = cfg.points_in_box(b);
        for (std::size_t j = 0; j < seg.size(); ++j) {
            const double d2v = dist2<D>(y, seg[j].pos);
            const std::int64_t id = cfg.id_in_box(b, static_cast<std::int64_t>(j));
            if (best < 0 || d2v < best_d2 || (d2v == best_d2 && lex_less<D>(seg[j].pos, best_pos))) {
                best = id;
                best_d2 = d2v;
                best_pos = seg[j].pos;
            }
        }
    }
    return best;
}

/// Flood-fill count of black components over the whole grid (oracle for the
/// union-find labeling).
template <int D>
std::int64_t flood_fill_black_components(const ColorGrid<D>& g) {
    const std::int64_t n = g.site_count();
    std::vector<std::uint8_t> seen(n, 0);
    std::array<std::int64_t, D> strides{};
    std::int64_t st = 1;
    for (int a = D - 1; a >= 0; --a) {
        strides[a] = st;
        st *= g.sites;
    }
    std::int64_t comps = 0;
    std::queue<std::int64_t> q;
    for (std::int64_t s0 = 0; s0 < n; ++s0) {
        if (!g.color[s0] || seen[s0]) continue;
        ++comps;
        seen[s0] = 1;
        q.push(s0);
        while (!q.empty()) {
            const std::int64_t s = q.front();
            q.pop();
            const auto c = g.decode(s);
            for (int a = 0; a < D; ++a) {
                for (const std::int64_t d : {std::int64_t(-1), std::int64_t(1)}) {
                    if (c[a] + d < 0 || c[a] + d >= g.sites) continue;
                    const std::int64_t s2 = s + d * strides[a];
                    if (!seen[s2] && g.color[s2]) {
                        seen[s2] = 1;
                        q.push(s2);
                    }
                }
            }
        }
    }
    return comps;
}

}  // namespace vperc::testing
