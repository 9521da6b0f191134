#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "vperc/errors.hpp"
#include "vperc/geom.hpp"
#include "vperc/rng.hpp"

namespace vperc {

/// A process point. Color is derived, not stored: the point is black at
/// parameter p iff color_u < p. Sharing color_u across parameters gives the
/// monotone common-random-numbers coupling used for derivatives.
template <int D>
struct PointRec {
    Pt<D> pos;
    double color_u;

    bool operator==(const PointRec&) const = default;
};

/// The two-type Poisson sample (black intensity p, white 1-p, total 1) on a
/// padded window, stored grouped by epsilon-box in CSR form. Box contents are
/// generated from independent counter-based streams keyed by
/// (root_seed, box index, resample counter), so one box can be resampled
/// without touching any other box's randomness. Immutable after construction.
template <int D>
class PointConfiguration {
  public:
    Window<D> window;
    EpsilonGrid<D> grid;
    double p;
    std::uint64_t root_seed;
    std::vector<std::uint32_t> resample_counter;  // per box
    std::vector<std::int64_t> box_begin;          // CSR offsets, size box_count()+1
    std::vector<PointRec<D>> pts;                 // grouped by box

    std::int64_t size() const { return static_cast<std::int64_t>(pts.size()); }
    bool empty() const { return pts.empty(); }

    std::span<const PointRec<D>> points_in_box(std::int64_t b) const {
        return {pts.data() + box_begin[b], pts.data() + box_begin[b + 1]};
    }

    /// Global id of the j-th point of box b.
    std::int64_t id_in_box(std::int64_t b, std::int64_t j) const { return box_begin[b] + j; }

    const PointRec<D>& point(std::int64_t id) const { return pts[id]; }

    bool black(std::int64_t id) const { return pts[id].color_u < p; }
    bool black(std::int64_t id, double at_p) const { return pts[id].color_u < at_p; }

    bool same_points(const PointConfiguration& o) const {
        return box_begin == o.box_begin && pts == o.pts;
    }
};

namespace detail {

/// Content of one box from a raw stream key. Draw order is fixed: count,
/// then per point the D coordinates followed by the color uniform.
template <int D>
inline void sample_box_content(std::uint64_t key, const Pt<D>& lo, double pitch,
                               std::vector<PointRec<D>>& out) {
    Stream s(key);
    const long n = s.next_poisson(std::pow(pitch, D));
    for (long i = 0; i < n; ++i) {
        PointRec<D> rec;
        for (int a = 0; a < D; ++a) rec.pos[a] = lo[a] + pitch * s.next_unit();
        rec.color_u = s.next_unit();
        out.push_back(rec);
    }
}

inline std::uint64_t box_stream_key(std::uint64_t root_seed, std::int64_t box,
                                    std::uint32_t counter) {
    return substream(root_seed, static_cast<std::uint64_t>(box), counter);
}

}  // namespace detail

/// Fresh content for one box under an explicit seed (used by resampling).
template <int D>
inline std::vector<PointRec<D>> resample_content(const PointConfiguration<D>& cfg,
                                                 std::int64_t box, std::uint64_t fresh_seed) {
    require(box >= 0 && box < cfg.grid.box_count(), "resample: box index outside grid");
    std::vector<PointRec<D>> out;
    detail::sample_box_content<D>(detail::box_stream_key(fresh_seed, box, 1),
                                  cfg.grid.low_corner(box), cfg.grid.pitch, out);
    return out;
}

/// Sample the full two-type process. Identical (window, p, root_seed, pitch)
/// always yields bit-identical output.
template <int D>
PointConfiguration<D> sample_configuration(const Window<D>& window, double p,
                                           std::uint64_t root_seed, double pitch = 1.0) {
    require(p >= 0.0 && p <= 1.0, "sample_configuration: p must lie in [0, 1]");
    PointConfiguration<D> cfg{window, box_partition(window, pitch), p, root_seed, {}, {}, {}};
    const std::int64_t nb = cfg.grid.box_count();
    cfg.resample_counter.assign(static_cast<std::size_t>(nb), 0);
    cfg.box_begin.resize(static_cast<std::size_t>(nb) + 1);
    cfg.pts.reserve(static_cast<std::size_t>(window.volume()) + 64);
    for (std::int64_t b = 0; b < nb; ++b) {
        cfg.box_begin[b] = static_cast<std::int64_t>(cfg.pts.size());
        detail::sample_box_content<D>(detail::box_stream_key(root_seed, b, 0),
                                      cfg.grid.low_corner(b), pitch, cfg.pts);
    }
    cfg.box_begin[nb] = static_cast<std::int64_t>(cfg.pts.size());
    return cfg;
}

/// New configuration equal to `cfg` outside box `box`; inside it carries an
/// independent fresh sample. `cfg` itself is not modified.
template <int D>
PointConfiguration<D> resample_box(const PointConfiguration<D>& cfg, std::int64_t box,
                                   std::uint64_t fresh_seed) {
    const std::vector<PointRec<D>> fresh = resample_content(cfg, box, fresh_seed);
    PointConfiguration<D> out{cfg.window, cfg.grid, cfg.p, cfg.root_seed,
                              cfg.resample_counter, {}, {}};
    out.resample_counter[box] += 1;
    const std::int64_t nb = cfg.grid.box_count();
    out.box_begin.resize(static_cast<std::size_t>(nb) + 1);
    out.pts.reserve(cfg.pts.size() + fresh.size());
    for (std::int64_t b = 0; b < nb; ++b) {
        out.box_begin[b] = static_cast<std::int64_t>(out.pts.size());
        if (b == box) {
            out.pts.insert(out.pts.end(), fresh.begin(), fresh.end());
        } else {
            auto seg = cfg.points_in_box(b);
            out.pts.insert(out.pts.end(), seg.begin(), seg.end());
        }
    }
    out.box_begin[nb] = static_cast<std::int64_t>(out.pts.size());
    return out;
}

/// Zero-copy view of a configuration with one box's content replaced.
/// Patched points get ids past the end of the base configuration.
template <int D>
class PatchedConfig {
  public:
    PatchedConfig(const PointConfiguration<D>& base, std::int64_t box,
                  std::vector<PointRec<D>> replacement)
        : base_(&base), box_(box), repl_(std::move(replacement)) {}

    const Window<D>& window_ref() const { return base_->window; }
    const EpsilonGrid<D>& grid_ref() const { return base_->grid; }
    double parameter() const { return base_->p; }

    std::span<const PointRec<D>> points_in_box(std::int64_t b) const {
        if (b == box_) return {repl_.data(), repl_.size()};
        return base_->points_in_box(b);
    }

    std::int64_t id_in_box(std::int64_t b, std::int64_t j) const {
        if (b == box_) return base_->size() + j;
        return base_->id_in_box(b, j);
    }

    const PointRec<D>& point(std::int64_t id) const {
        if (id >= base_->size()) return repl_[static_cast<std::size_t>(id - base_->size())];
        return base_->point(id);
    }

    bool empty() const { return base_->pts.empty() && repl_.empty(); }
    std::int64_t patched_box() const { return box_; }

  private:
    const PointConfiguration<D>* base_;
    std::int64_t box_;
    std::vector<PointRec<D>> repl_;
};

// Uniform accessors so geometry queries template over both config types.
template <int D>
inline const EpsilonGrid<D>& grid_of(const PointConfiguration<D>& c) { return c.grid; }
template <int D>
inline const EpsilonGrid<D>& grid_of(const PatchedConfig<D>& c) { return c.grid_ref(); }
template <int D>
inline double param_of(const PointConfiguration<D>& c) { return c.p; }
template <int D>
inline double param_of(const PatchedConfig<D>& c) { return c.parameter(); }

// --- point dump (CSV), for cross-engine replay -----------------------------

namespace detail {
/// Shortest decimal form that round-trips to the same double.
inline std::string fmt_double(double v) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}
}  // namespace detail

template <int D>
void write_point_dump(std::ostream& os, const PointConfiguration<D>& cfg) {
    os << "d,L,pad,p,seed\n"
       << D << ',' << detail::fmt_double(cfg.window.half_width) << ','
       << detail::fmt_double(cfg.window.padding) << ',' << detail::fmt_double(cfg.p) << ','
       << cfg.root_seed << '\n';
    for (int a = 1; a <= D; ++a) os << 'x' << a << (a == D ? "" : ",");
    os << ",color\n";
    for (const auto& rec : cfg.pts) {
        for (int a = 0; a < D; ++a) os << detail::fmt_double(rec.pos[a]) << ',';
        os << (rec.color_u < cfg.p ? 1 : 0) << '\n';
    }
}

/// Rebuild a configuration from a dump. Colors are reproduced exactly at the
/// dumped parameter; the synthetic color uniforms are not the original ones,
/// so replayed configurations are for geometry queries, not for resampling.
template <int D>
PointConfiguration<D> read_point_dump(std::istream& is) {
    std::string line;
    std::getline(is, line);  // header names
    int d = 0;
    double L = 0, pad = 0, p = 0;
    unsigned long long seed = 0;
    std::getline(is, line);
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%llu", &d, &L, &pad, &p, &seed) != 5)
        throw parameter_error("point dump: bad header line");
    require(d == D, "point dump: dimension mismatch");
    std::getline(is, line);  // column names
    PointConfiguration<D> cfg{Window<D>(L, pad), box_partition(Window<D>(L, pad), 1.0), p, seed,
                              {}, {}, {}};
    std::vector<std::vector<PointRec<D>>> by_box(static_cast<std::size_t>(cfg.grid.box_count()));
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        PointRec<D> rec;
        int color = 0;
        const char* s = line.c_str();
        char* end = nullptr;
        for (int a = 0; a < D; ++a) {
            rec.pos[a] = std::strtod(s, &end);
            require(end != s && *end == ',', "point dump: bad row");
            s = end + 1;
        }
        color = static_cast<int>(std::strtol(s, &end, 10));
        rec.color_u = color ? 0.5 * p : 0.5 * (1.0 + p);
        by_box[static_cast<std::size_t>(cfg.grid.box_of(rec.pos))].push_back(rec);
    }
    const std::int64_t nb = cfg.grid.box_count();
    cfg.resample_counter.assign(static_cast<std::size_t>(nb), 0);
    cfg.box_begin.resize(static_cast<std::size_t>(nb) + 1);
    for (std::int64_t b = 0; b < nb; ++b) {
        cfg.box_begin[b] = static_cast<std::int64_t>(cfg.pts.size());
        cfg.pts.insert(cfg.pts.end(), by_box[b].begin(), by_box[b].end());
    }
    cfg.box_begin[nb] = static_cast<std::int64_t>(cfg.pts.size());
    return cfg;
}

}  // namespace vperc
