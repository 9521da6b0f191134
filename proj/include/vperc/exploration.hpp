#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "vperc/errors.hpp"
#include "vperc/estimate.hpp"
#include "vperc/estimators.hpp"
#include "vperc/events.hpp"
#include "vperc/geom.hpp"
#include "vperc/parallel.hpp"
#include "vperc/point_process.hpp"

namespace vperc {

/// Record of one run of the exploration algorithm T_k deciding {0 <-> S_n}.
template <int D>
struct ExplorationTrace {
    double k = 0, n = 0, eps = 0, h = 0;
    bool decision = false;
    std::int64_t steps = 0;
    std::vector<std::int64_t> visit_order;    // X_t, boxes in visit order
    std::vector<std::int64_t> revealed;       // boxes in reveal order (union of D(y))
    std::vector<std::int64_t> z_sizes;        // |Z_t| after each step
    std::vector<std::uint8_t> revealed_flag;  // per grid box
};

/// The algorithm: starting from Z_0 = S_k, repeatedly Discover the least
/// unvisited box touching Z_t and grow Z with the certified black region.
/// Everything is realized on the same site lattice as the direct raster
/// evaluation (pitch h, ring tolerance h*sqrt(d)), which makes the decision
/// bit provably equal to RasterEvaluator::origin_to_sphere on every sample.
template <int D>
class ExplorationRun {
  public:
    ExplorationRun(const PointConfiguration<D>& cfg, double k, double n, double h)
        : cfg_(&cfg), grid_(&cfg.grid), k_(k), n_(n), h_(h) {
        require(k >= 1.0 && k <= n, "run_Tk: need 1 <= k <= n");
        require(n <= cfg.window.half_width + 1e-12, "run_Tk: n exceeds window");
        const double spb_real = grid_->pitch / h;
        spb_ = static_cast<std::int64_t>(std::llround(spb_real));
        require(spb_ >= 1 && std::abs(spb_real - double(spb_)) < 1e-9,
                "run_Tk: raster pitch must divide the box pitch");
        const double off_real = (-n - grid_->origin) / h;
        site_off_ = static_cast<std::int64_t>(std::llround(off_real));
        require(std::abs(off_real - double(site_off_)) < 1e-9,
                "run_Tk: site lattice must align with the box lattice");
        sites_ = static_cast<std::int64_t>(std::llround(2.0 * n / h)) + 1;
        site_state_.assign(site_count(), kUnknown);
        revealed_.assign(grid_->box_count(), 0);
        visited_.assign(grid_->box_count(), 0);
        best_d2_.assign(site_count(), -1.0);
        best_u_.assign(site_count(), 0.0);
        best_pos_.assign(site_count(), Pt<D>{});
    }

    ExplorationTrace<D> run() {
        ExplorationTrace<D> tr;
        tr.k = k_;
        tr.n = n_;
        tr.eps = grid_->pitch;
        tr.h = h_;
        seed_pending();
        while (!pending_.empty()) {
            const std::int64_t y = *pending_.begin();
            pending_.erase(pending_.begin());
            if (visited_[y]) continue;
            discover(y, tr.revealed);
            visited_[y] = 1;
            tr.visit_order.push_back(y);
            absorb_new_black(y);
            tr.z_sizes.push_back(static_cast<std::int64_t>(z_.size()));
        }
        tr.steps = static_cast<std::int64_t>(tr.visit_order.size());
        tr.decision = decide();
        tr.revealed_flag = revealed_;
        return tr;
    }

    /// Reveal the boxes around y in expanding rounds until the color of every
    /// site of R_y (within the event region) is certified: its nearest
    /// revealed point must be strictly closer than any unrevealed box region.
    void discover(std::int64_t y, std::vector<std::int64_t>& reveal_log) {
        std::vector<std::int64_t> sites = sites_of_box(y);
        std::erase_if(sites, [&](std::int64_t s) { return site_state_[s] != kUnknown; });
        const Pt<D> ybase = grid_->low_corner(y);
        const double slack = std::sqrt(double(D)) * grid_->pitch;
        double t = 0.0;
        while (true) {
            std::erase_if(sites, [&](std::int64_t s) { return try_certify(s); });
            if (sites.empty()) return;
            if (t > cfg_->window.padded_extent() + 4.0)
                throw window_too_small_error("discover: ran out of padded window");
            reveal_ball(ybase, t + slack, reveal_log);
            t += 1.0;
        }
    }

    bool decide() {
        UnionFind uf(site_count());
        std::array<std::int64_t, D> strides{};
        std::int64_t st = 1;
        for (int a = D - 1; a >= 0; --a) {
            strides[a] = st;
            st *= sites_;
        }
        for (const std::int64_t s : z_) {
            const auto c = site_decode(s);
            for (int a = 0; a < D; ++a)
                if (c[a] + 1 < sites_ && site_state_[s + strides[a]] == kBlack)
                    uf.unite(s, s + strides[a]);
        }
        const std::int64_t o = origin_site();
        if (site_state_[o] != kBlack) return false;
        const std::int64_t root = uf.find(o);
        const double tol = h_ * std::sqrt(double(D));
        for (const std::int64_t s : z_) {
            if (uf.find(s) != root) continue;
            const double nm = std::sqrt(norm2<D>(site_pos(s)));
            if (std::abs(nm - n_) <= tol) return true;
        }
        return false;
    }

    const std::vector<std::uint8_t>& revealed_flags() const { return revealed_; }

    /// Certified color of a site: -1 unknown, 0 white, 1 black.
    int site_color(std::int64_t s) const { return site_state_[s]; }

    Pt<D> site_position(std::int64_t s) const { return site_pos(s); }

    std::vector<std::int64_t> box_sites(std::int64_t y) const { return sites_of_box(y); }

  private:
    static constexpr std::int8_t kUnknown = -1, kWhite = 0, kBlack = 1;

    const PointConfiguration<D>* cfg_;
    const EpsilonGrid<D>* grid_;
    double k_, n_, h_;
    std::int64_t spb_ = 1;       // sites per box per axis
    std::int64_t site_off_ = 0;  // site 0 in grid h-lattice units
    std::int64_t sites_ = 0;     // per axis, covering [-n, n]
    std::vector<std::int8_t> site_state_;
    std::vector<std::uint8_t> revealed_, visited_;
    std::set<std::int64_t> pending_;
    std::vector<std::int64_t> z_;  // discovered black sites
    // per-site nearest revealed point so far
    std::vector<double> best_d2_, best_u_;
    std::vector<Pt<D>> best_pos_;

    std::int64_t site_count() const {
        std::int64_t n = 1;
        for (int a = 0; a < D; ++a) n *= sites_;
        return n;
    }

    std::array<std::int64_t, D> site_decode(std::int64_t idx) const {
        std::array<std::int64_t, D> c{};
        for (int a = D - 1; a >= 0; --a) {
            c[a] = idx % sites_;
            idx /= sites_;
        }
        return c;
    }

    std::int64_t site_encode(const std::array<std::int64_t, D>& c) const {
        std::int64_t idx = 0;
        for (int a = 0; a < D; ++a) idx = idx * sites_ + c[a];
        return idx;
    }

    Pt<D> site_pos(std::int64_t idx) const {
        const auto c = site_decode(idx);
        Pt<D> p{};
        for (int a = 0; a < D; ++a) p[a] = -n_ + h_ * static_cast<double>(c[a]);
        return p;
    }

    std::int64_t origin_site() const {
        std::array<std::int64_t, D> c{};
        for (int a = 0; a < D; ++a) c[a] = (sites_ - 1) / 2;
        return site_encode(c);
    }

    /// Box of a site, in exact integer arithmetic on the shared h-lattice.
    std::int64_t box_of_site(const std::array<std::int64_t, D>& c) const {
        std::array<std::int64_t, D> bc{};
        for (int a = 0; a < D; ++a) bc[a] = (site_off_ + c[a]) / spb_;
        return grid_->encode(bc);
    }

    /// Sites of R_y within the event region, by integer ranges.
    std::vector<std::int64_t> sites_of_box(std::int64_t y) const {
        const auto bc = grid_->decode(y);
        std::array<std::int64_t, D> lo{}, hi{};
        for (int a = 0; a < D; ++a) {
            lo[a] = std::max<std::int64_t>(0, bc[a] * spb_ - site_off_);
            hi[a] = std::min<std::int64_t>(sites_ - 1, (bc[a] + 1) * spb_ - 1 - site_off_);
            if (lo[a] > hi[a]) return {};
        }
        std::vector<std::int64_t> out;
        std::array<std::int64_t, D> c = lo;
        while (true) {
            out.push_back(site_encode(c));
            int a = D - 1;
            while (a >= 0 && ++c[a] > hi[a]) c[a--] = lo[a];
            if (a < 0) break;
        }
        return out;
    }

    void seed_pending() {
        // Boxes holding a site of the S_k ring are the initial frontier.
        const double tol = h_ * std::sqrt(double(D));
        const std::int64_t n = site_count();
        for (std::int64_t s = 0; s < n; ++s) {
            const double nm = std::sqrt(norm2<D>(site_pos(s)));
            if (std::abs(nm - k_) <= tol) pending_.insert(box_of_site(site_decode(s)));
        }
    }

    void absorb_new_black(std::int64_t y) {
        std::array<std::int64_t, D> strides{};
        std::int64_t st = 1;
        for (int a = D - 1; a >= 0; --a) {
            strides[a] = st;
            st *= sites_;
        }
        for (const std::int64_t s : sites_of_box(y)) {
            if (site_state_[s] != kBlack) continue;
            z_.push_back(s);
            const auto c = site_decode(s);
            enqueue_box(box_of_site(c));
            for (int a = 0; a < D; ++a) {
                for (const std::int64_t d : {std::int64_t(-1), std::int64_t(1)}) {
                    auto cc = c;
                    cc[a] += d;
                    if (cc[a] < 0 || cc[a] >= sites_) continue;
                    enqueue_box(box_of_site(cc));
                }
            }
        }
    }

    void enqueue_box(std::int64_t b) {
        if (!visited_[b]) pending_.insert(b);
    }

    void challenge_site(std::int64_t s, const Pt<D>& z, std::int64_t b) {
        for (const auto& rec : cfg_->points_in_box(b)) {
            const double d2v = dist2<D>(z, rec.pos);
            if (best_d2_[s] < 0.0 || d2v < best_d2_[s] ||
                (d2v == best_d2_[s] && lex_less<D>(rec.pos, best_pos_[s]))) {
                best_d2_[s] = d2v;
                best_u_[s] = rec.color_u;
                best_pos_[s] = rec.pos;
            }
        }
    }

    double nearest_unrevealed_d2(const Pt<D>& z) const {
        auto c0 = grid_->coords_of(z);
        for (int a = 0; a < D; ++a) c0[a] = std::clamp<std::int64_t>(c0[a], 0, grid_->cells - 1);
        double best = std::numeric_limits<double>::infinity();
        for (std::int64_t r = 0;; ++r) {
            const double lb = (static_cast<double>(r) - 1.0) * grid_->pitch;
            if (r > 0 && lb > 0.0 && lb * lb > best) break;
            if (r > 2 * grid_->cells) break;
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
                        if (c[a] < 0 || c[a] >= grid_->cells) ok = false;
                    }
                    if (ok) {
                        const std::int64_t b = grid_->encode(c);
                        if (!revealed_[b]) best = std::min(best, grid_->dist2_to_box(z, b));
                    }
                }
                int a = D - 1;
                while (a >= 0 && ++off[a] > r) off[a--] = -r;
                if (a < 0) break;
            }
        }
        return best;
    }

    /// Certify the site if its nearest revealed point beats every unrevealed
    /// box region; on success store the color. The ring search over revealed
    /// boxes prunes at min(best, unrev): any revealed point closer than that
    /// cap is found, so a passing comparison uses the true global nearest.
    bool try_certify(std::int64_t s) {
        const Pt<D> z = site_pos(s);
        const double unrev = nearest_unrevealed_d2(z);
        auto c0 = grid_->coords_of(z);
        for (int a = 0; a < D; ++a) c0[a] = std::clamp<std::int64_t>(c0[a], 0, grid_->cells - 1);
        for (std::int64_t r = 0;; ++r) {
            const double lb = (static_cast<double>(r) - 1.0) * grid_->pitch;
            double cap = unrev;
            if (best_d2_[s] >= 0.0) cap = std::min(cap, best_d2_[s]);
            if (r > 0 && lb > 0.0 && lb * lb > cap) break;
            if (r > 2 * grid_->cells) break;
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
                        if (c[a] < 0 || c[a] >= grid_->cells) ok = false;
                    }
                    if (ok) {
                        const std::int64_t b = grid_->encode(c);
                        if (revealed_[b] && grid_->dist2_to_box(z, b) <= cap)
                            challenge_site(s, z, b);
                    }
                }
                int a = D - 1;
                while (a >= 0 && ++off[a] > r) off[a--] = -r;
                if (a < 0) break;
            }
        }
        if (best_d2_[s] >= 0.0 && best_d2_[s] < unrev) {
            site_state_[s] = best_u_[s] < cfg_->p ? kBlack : kWhite;
            return true;
        }
        return false;
    }

    void reveal_ball(const Pt<D>& ybase, double radius, std::vector<std::int64_t>& reveal_log) {
        const auto yc = grid_->coords_of(ybase);
        const auto rr = static_cast<std::int64_t>(std::ceil(radius / grid_->pitch)) + 1;
        std::array<std::int64_t, D> off{};
        for (int a = 0; a < D; ++a) off[a] = -rr;
        while (true) {
            std::array<std::int64_t, D> c{};
            bool ok = true;
            for (int a = 0; a < D; ++a) {
                c[a] = yc[a] + off[a];
                if (c[a] < 0 || c[a] >= grid_->cells) ok = false;
            }
            if (ok) {
                const std::int64_t b = grid_->encode(c);
                if (!revealed_[b]) {
                    const Pt<D> base = grid_->low_corner(b);
                    double d2v = 0.0;
                    for (int a = 0; a < D; ++a) {
                        const double d = base[a] - ybase[a];
                        d2v += d * d;
                    }
                    if (d2v <= radius * radius) {
                        revealed_[b] = 1;
                        reveal_log.push_back(b);
                    }
                }
            }
            int a = D - 1;
            while (a >= 0 && ++off[a] > rr) off[a--] = -rr;
            if (a < 0) break;
        }
    }
};

/// Run T_k on one configuration.
template <int D>
ExplorationTrace<D> run_Tk(const PointConfiguration<D>& cfg, double k, double n,
                           double h = kDefaultRasterPitch) {
    ExplorationRun<D> run(cfg, k, n, h);
    return run.run();
}

/// Per-box revealment frequencies delta_x(T_k) and, on the same trials, the
/// connection frequencies P[x <-> S_k] used by the Lemma-4 ratio diagnostics.
template <int D>
struct RevealmentProfile {
    double k = 0, n = 0, eps = 0, h = 0, p = 0;
    std::int64_t trials = 0;
    std::uint64_t seed = 0;
    std::vector<std::int64_t> reveal_count;   // per grid box
    std::vector<std::int64_t> connect_count;  // per grid box, -1 rows lack a lattice site
    std::vector<std::int8_t> has_site;        // box base point inside [-L, L]

    Estimate revealment(std::int64_t box) const {
        BernoulliAcc b{trials, reveal_count[box]};
        Estimate e = b.estimate();
        e.p = p;
        e.n = k;
        e.eps = eps;
        e.h = h;
        e.seed = seed;
        e.event = "revealment";
        e.engine = "raster";
        return e;
    }

    Estimate connection(std::int64_t box) const {
        BernoulliAcc b{trials, connect_count[box]};
        Estimate e = b.estimate();
        e.p = p;
        e.n = k;
        e.eps = eps;
        e.h = h;
        e.seed = seed;
        e.event = "point_to_sphere";
        e.engine = "raster";
        return e;
    }
};

template <int D>
RevealmentProfile<D> revealment_profile(const ExperimentGeom<D>& geom, double p, double k,
                                        double n, std::int64_t trials, std::uint64_t seed,
                                        int threads = 0) {
    const auto grid = box_partition(geom.window, geom.sample_pitch);
    const std::int64_t nb = grid.box_count();
    const double L = geom.window.half_width;

    struct Acc {
        std::vector<std::int64_t> reveal, connect;
        void merge(const Acc& o) {
            for (std::size_t i = 0; i < reveal.size(); ++i) {
                reveal[i] += o.reveal[i];
                connect[i] += o.connect[i];
            }
        }
    };
    Acc proto;
    proto.reveal.assign(nb, 0);
    proto.connect.assign(nb, 0);

    std::vector<std::int8_t> has_site(nb, 0);
    for (std::int64_t b = 0; b < nb; ++b) {
        const Pt<D> base = grid.low_corner(b);
        bool ok = true;
        for (int a = 0; a < D; ++a)
            if (base[a] < -L - 1e-12 || base[a] > L + 1e-12) ok = false;
        has_site[b] = ok ? 1 : 0;
    }

    auto acc = run_trials<Acc>(trials, threads, proto, [&](std::int64_t t, Acc& a) {
        const auto cfg =
            sample_configuration<D>(geom.window, p, substream(seed, t), geom.sample_pitch);
        ExplorationRun<D> run(cfg, k, n, geom.h);
        const auto tr = run.run();
        for (std::int64_t b = 0; b < nb; ++b) a.reveal[b] += tr.revealed_flag[b] ? 1 : 0;
        // {x <-> S_k} for every box base point x, one labeling pass.
        RasterEvaluator<D> ev(cfg, L, geom.h);
        UnionFind& uf = ev.labels(L);
        std::vector<std::uint8_t> mark(ev.grid().site_count(), 0);
        for (const std::int64_t s : ev.ring_sites(k))
            if (ev.grid().color[s]) mark[uf.find(s)] = 1;
        for (std::int64_t b = 0; b < nb; ++b) {
            if (!has_site[b]) continue;
            const std::int64_t s = ev.site_at(grid.low_corner(b));
            if (ev.grid().color[s] && mark[uf.find(s)]) a.connect[b] += 1;
        }
    });
    RevealmentProfile<D> prof;
    prof.k = k;
    prof.n = n;
    prof.eps = geom.sample_pitch;
    prof.h = geom.h;
    prof.p = p;
    prof.trials = trials;
    prof.seed = seed;
    prof.reveal_count = std::move(acc.reveal);
    prof.connect_count = std::move(acc.connect);
    prof.has_site = std::move(has_site);
    return prof;
}

}  // namespace vperc
