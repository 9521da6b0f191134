#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "vperc/errors.hpp"
#include "vperc/geom.hpp"
#include "vperc/point_process.hpp"

namespace vperc {

template <int D>
struct NearestHit {
    std::int64_t id = -1;
    double d2 = std::numeric_limits<double>::infinity();
    Pt<D> pos{};
    double color_u = 0.0;

    bool valid() const { return id >= 0; }
};

namespace detail {

/// Challenge the current best with candidate (pos, id). Ties on squared
/// distance are broken toward the lexicographically smallest coordinates.
template <int D>
inline void challenge(NearestHit<D>& best, const Pt<D>& y, const PointRec<D>& rec,
                      std::int64_t id) {
    const double d2v = dist2<D>(y, rec.pos);
    if (d2v < best.d2 || (d2v == best.d2 && best.valid() && lex_less<D>(rec.pos, best.pos))) {
        best = NearestHit<D>{id, d2v, rec.pos, rec.color_u};
    }
}

}  // namespace detail

/// Exact nearest point by expanding box rings around y. Works on both
/// PointConfiguration and PatchedConfig. `init` may carry any valid point id
/// as a warm-start upper bound; correctness does not depend on it.
template <int D, class Cfg>
NearestHit<D> nearest_in_config(const Cfg& cfg, const Pt<D>& y, const NearestHit<D>* init = nullptr) {
    const EpsilonGrid<D>& grid = grid_of(cfg);
    NearestHit<D> best;
    if (init && init->valid()) best = *init;

    auto c0 = grid.coords_of(y);
    for (int a = 0; a < D; ++a) c0[a] = std::clamp<std::int64_t>(c0[a], 0, grid.cells - 1);

    const double eps = grid.pitch;
    for (std::int64_t r = 0;; ++r) {
        if (r > 0 && best.valid()) {
            const double lb = (static_cast<double>(r) - 1.0) * eps;
            if (lb > 0.0 && lb * lb > best.d2) break;
        }
        if (r > 2 * grid.cells) break;
        // Boxes at Chebyshev ring r around c0.
        std::array<std::int64_t, D> off{};
        for (int a = 0; a < D; ++a) off[a] = -r;
        while (true) {
            std::int64_t cheb = 0;
            for (int a = 0; a < D; ++a) cheb = std::max(cheb, std::abs(off[a]));
            if (cheb == r) {
                std::array<std::int64_t, D> c{};
                bool ok = true;
                for (int a = 0; a < D; ++a) {
                    c[a] = c0[a] + off[a];
                    if (c[a] < 0 || c[a] >= grid.cells) ok = false;
                }
                if (ok) {
                    const std::int64_t b = grid.encode(c);
                    if (!best.valid() || grid.dist2_to_box(y, b) <= best.d2) {
                        auto seg = cfg.points_in_box(b);
                        for (std::size_t j = 0; j < seg.size(); ++j)
                            detail::challenge<D>(best, y, seg[j],
                                                 cfg.id_in_box(b, static_cast<std::int64_t>(j)));
                    }
                }
            }
            int a = D - 1;
            while (a >= 0 && ++off[a] > r) off[a--] = -r;
            if (a < 0) break;
        }
    }
    if (!best.valid()) throw state_error("nearest_point: empty configuration");
    return best;
}

/// Id of the process point owning y's location (its Voronoi cell).
template <int D, class Cfg>
std::int64_t nearest_point(const Cfg& cfg, const Pt<D>& y) {
    return nearest_in_config<D>(cfg, y).id;
}

/// Color bit of y: the color of its nearest process point.
template <int D, class Cfg>
bool color_at(const Cfg& cfg, const Pt<D>& y) {
    return nearest_in_config<D>(cfg, y).color_u < param_of(cfg);
}

template <int D, class Cfg>
bool color_at(const Cfg& cfg, const Pt<D>& y, double at_p) {
    return nearest_in_config<D>(cfg, y).color_u < at_p;
}

/// Flattened per-box candidate lists (the box plus its Chebyshev-1 ring)
/// for fast repeated nearest queries against one fixed configuration.
/// A query whose best hit is certified closer than the 3^D block boundary
/// is answered from the flat list alone; otherwise it falls back to the
/// exact ring search.
template <int D>
class NeighborCache {
  public:
    explicit NeighborCache(const PointConfiguration<D>& cfg) : cfg_(&cfg) {
        const EpsilonGrid<D>& grid = cfg.grid;
        const std::int64_t nb = grid.box_count();
        begin_.assign(static_cast<std::size_t>(nb) + 1, 0);
        std::vector<std::int64_t> neigh;
        std::vector<std::pair<Pt<D>, std::int64_t>> flat;
        flat.reserve(cfg.pts.size() * (D == 2 ? 9 : 27) / 2);
        for (std::int64_t b = 0; b < nb; ++b) {
            begin_[b] = static_cast<std::int64_t>(flat.size());
            const auto c = grid.decode(b);
            std::array<std::int64_t, D> off{};
            for (int a = 0; a < D; ++a) off[a] = -1;
            while (true) {
                std::array<std::int64_t, D> cc{};
                bool ok = true;
                for (int a = 0; a < D; ++a) {
                    cc[a] = c[a] + off[a];
                    if (cc[a] < 0 || cc[a] >= grid.cells) ok = false;
                }
                if (ok) {
                    const std::int64_t nb2 = grid.encode(cc);
                    auto seg = cfg.points_in_box(nb2);
                    for (std::size_t j = 0; j < seg.size(); ++j)
                        flat.emplace_back(seg[j].pos, cfg.id_in_box(nb2, static_cast<std::int64_t>(j)));
                }
                int a = D - 1;
                while (a >= 0 && ++off[a] > 1) off[a--] = -1;
                if (a < 0) break;
            }
        }
        begin_[nb] = static_cast<std::int64_t>(flat.size());
        flat_ = std::move(flat);
    }

    NearestHit<D> query(const Pt<D>& y) const {
        const EpsilonGrid<D>& grid = cfg_->grid;
        auto c0 = grid.coords_of(y);
        bool interior = true;
        for (int a = 0; a < D; ++a) {
            if (c0[a] < 0 || c0[a] >= grid.cells) interior = false;
            c0[a] = std::clamp<std::int64_t>(c0[a], 0, grid.cells - 1);
        }
        const std::int64_t b = grid.encode(c0);
        NearestHit<D> best;
        for (std::int64_t i = begin_[b]; i < begin_[b + 1]; ++i) {
            const double d2v = dist2<D>(y, flat_[i].first);
            if (d2v < best.d2 ||
                (d2v == best.d2 && best.valid() && lex_less<D>(flat_[i].first, best.pos))) {
                best.id = flat_[i].second;
                best.d2 = d2v;
                best.pos = flat_[i].first;
            }
        }
        if (best.valid() && interior) {
            // Distance from y to the boundary of the 3^D block of boxes.
            const Pt<D> lo = grid.low_corner(b);
            double margin = std::numeric_limits<double>::infinity();
            for (int a = 0; a < D; ++a) {
                const double lo_edge = (c0[a] == 0) ? std::numeric_limits<double>::infinity()
                                                    : y[a] - (lo[a] - grid.pitch);
                const double hi_edge = (c0[a] == grid.cells - 1)
                                           ? std::numeric_limits<double>::infinity()
                                           : (lo[a] + 2.0 * grid.pitch) - y[a];
                margin = std::min({margin, lo_edge, hi_edge});
            }
            if (margin == std::numeric_limits<double>::infinity() || best.d2 < margin * margin) {
                best.color_u = cfg_->point(best.id).color_u;
                return best;
            }
        }
        NearestHit<D> seed = best;
        if (seed.valid()) seed.color_u = cfg_->point(seed.id).color_u;
        return nearest_in_config<D>(*cfg_, y, seed.valid() ? &seed : nullptr);
    }

    const PointConfiguration<D>& config() const { return *cfg_; }

  private:
    const PointConfiguration<D>* cfg_;
    std::vector<std::int64_t> begin_;
    std::vector<std::pair<Pt<D>, std::int64_t>> flat_;
};

}  // namespace vperc
