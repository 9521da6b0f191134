#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "vperc/estimate.hpp"
#include "vperc/estimators.hpp"
#include "vperc/events.hpp"
#include "vperc/parallel.hpp"
#include "vperc/point_process.hpp"

namespace vperc {

/// Per-box influences Inf_x^eps[A] = P_p[1_A(eta) != 1_A(eta~)] where eta~
/// resamples box x. Estimated with a paired design: each trial draws one base
/// configuration and challenges every box against it once, which keeps the
/// per-box estimator unbiased while sharing the expensive base evaluation.
template <int D>
struct InfluenceProfile {
    double eps = 0.0, p = 0.0, h = 0.0;
    EventSpec spec;
    std::int64_t trials = 0;
    std::uint64_t seed = 0;
    std::vector<std::int64_t> flips;        // per grid box
    std::vector<std::int64_t> trial_total;  // distribution of per-trial total flips

    Estimate entry(std::int64_t box) const {
        BernoulliAcc b{trials, flips[box]};
        Estimate e = b.estimate();
        e.p = p;
        e.eps = eps;
        e.h = h;
        e.seed = seed;
        e.event = "influence:" + spec.name();
        e.engine = "raster";
        return e;
    }

    /// Sum of influence estimates over a box set, with a rigorous standard
    /// error from the per-trial totals (boxes within one trial are dependent).
    double sum_over(const std::vector<std::int64_t>& boxes) const {
        std::int64_t s = 0;
        for (const std::int64_t b : boxes) s += flips[b];
        return static_cast<double>(s) / static_cast<double>(trials);
    }
};

namespace detail {

template <int D>
bool patch_touches_region(const ColorGrid<D>& g, const RasterPatch<D>& patch, double region) {
    for (std::size_t i = 0; i < patch.site.size(); ++i) {
        if (patch.old_color[i] == g.color[patch.site[i]]) continue;
        const Pt<D> z = g.site_pos(patch.site[i]);
        bool inside = true;
        for (int a = 0; a < D; ++a)
            if (std::abs(z[a]) > region + 1e-12) inside = false;
        if (inside) return true;
    }
    return false;
}

}  // namespace detail

/// Influence profile over every box of the sampling grid. Raster engine.
template <int D>
InfluenceProfile<D> influence_profile(const ExperimentGeom<D>& geom, double p,
                                      const EventSpec& spec, std::int64_t trials,
                                      std::uint64_t seed, int threads = 0) {
    require(spec.engine == Engine::raster, "influence: raster engine only");
    validate_event(geom.window, spec);
    const double region = detail::raster_region<D>(spec, geom.window);
    const std::int64_t nb = box_partition(geom.window, geom.sample_pitch).box_count();

    struct Acc {
        std::vector<std::int64_t> flips;
        std::vector<std::int64_t> totals;
        void merge(const Acc& o) {
            for (std::size_t i = 0; i < flips.size(); ++i) flips[i] += o.flips[i];
            totals.insert(totals.end(), o.totals.begin(), o.totals.end());
        }
    };
    Acc proto;
    proto.flips.assign(static_cast<std::size_t>(nb), 0);
    auto acc = run_trials<Acc>(trials, threads, proto, [&](std::int64_t t, Acc& a) {
        const std::uint64_t trial_seed = substream(seed, t);
        const auto cfg = sample_configuration<D>(geom.window, p, trial_seed, geom.sample_pitch);
        RasterEvaluator<D> ev(cfg, std::max(region, spec.inner), geom.h);
        const bool base = detail::eval_raster<D>(ev, spec, region);
        std::int64_t total = 0;
        for (std::int64_t b = 0; b < nb; ++b) {
            auto fresh = resample_content<D>(cfg, b, substream(trial_seed, b, 0xf1));
            const auto base_seg = cfg.points_in_box(b);
            if (fresh.size() == base_seg.size() &&
                std::equal(fresh.begin(), fresh.end(), base_seg.begin()))
                continue;  // identical content, the indicator is exactly 0
            PatchedConfig<D> view(cfg, b, std::move(fresh));
            RasterPatch<D> patch = apply_box_patch<D>(ev.grid(), view, b, p);
            if (patch.any_color_change &&
                detail::patch_touches_region<D>(ev.grid(), patch, region)) {
                ev.invalidate();
                const bool flipped = detail::eval_raster<D>(ev, spec, region) != base;
                a.flips[b] += flipped ? 1 : 0;
                total += flipped ? 1 : 0;
            }
            revert_patch<D>(ev.grid(), patch);
            ev.invalidate();
        }
        a.totals.push_back(total);
    });
    InfluenceProfile<D> prof;
    prof.eps = geom.sample_pitch;
    prof.p = p;
    prof.h = geom.h;
    prof.spec = spec;
    prof.trials = trials;
    prof.seed = seed;
    prof.flips = std::move(acc.flips);
    prof.trial_total = std::move(acc.totals);
    return prof;
}

/// Monte Carlo influence of a single box (fresh configurations per trial).
template <int D>
Estimate estimate_influence(const ExperimentGeom<D>& geom, double p, const EventSpec& spec,
                            std::int64_t box, std::int64_t trials, std::uint64_t seed,
                            int threads = 0) {
    require(spec.engine == Engine::raster, "influence: raster engine only");
    validate_event(geom.window, spec);
    const double region = detail::raster_region<D>(spec, geom.window);
    const std::int64_t nb = box_partition(geom.window, geom.sample_pitch).box_count();
    require(box >= 0 && box < nb, "estimate_influence: box outside grid");
    auto acc = run_trials<BernoulliAcc>(trials, threads, {}, [&](std::int64_t t, BernoulliAcc& a) {
        const std::uint64_t trial_seed = substream(seed, t);
        const auto cfg = sample_configuration<D>(geom.window, p, trial_seed, geom.sample_pitch);
        RasterEvaluator<D> ev(cfg, std::max(region, spec.inner), geom.h);
        const bool base = detail::eval_raster<D>(ev, spec, region);
        auto fresh = resample_content<D>(cfg, box, substream(trial_seed, box, 0xf1));
        const auto base_seg = cfg.points_in_box(box);
        if (fresh.size() == base_seg.size() &&
            std::equal(fresh.begin(), fresh.end(), base_seg.begin())) {
            a.add(false);
            return;
        }
        PatchedConfig<D> view(cfg, box, std::move(fresh));
        RasterPatch<D> patch = apply_box_patch<D>(ev.grid(), view, box, p);
        bool flipped = false;
        if (patch.any_color_change && detail::patch_touches_region<D>(ev.grid(), patch, region)) {
            ev.invalidate();
            flipped = detail::eval_raster<D>(ev, spec, region) != base;
        }
        a.add(flipped);
    });
    Estimate e = acc.estimate();
    e.seed = seed;
    e.p = p;
    e.n = spec.outer;
    e.eps = geom.sample_pitch;
    e.h = geom.h;
    e.event = "influence:" + spec.name();
    e.engine = "raster";
    return e;
}

/// The derivative-vs-influence-sum relation: d/dp P[A] >= 1/2 sum_x Inf_x^eps
/// checked at each epsilon of the sweep, with the sum split at B_{4n}.
struct InfluenceSumReport {
    double eps = 0.0;
    double sum_core = 0.0;  // boxes with center inside B_{4n}
    double se_sum = 0.0;    // from per-trial totals (all boxes)
    double sum_tail = 0.0;  // remaining boxes
    double derivative = 0.0;
    double se_derivative = 0.0;
    bool holds = false;
    std::int64_t trials = 0;
};

template <int D>
std::vector<InfluenceSumReport> influence_sum_vs_derivative(
    const Window<D>& window, double p, double event_radius, const std::vector<double>& eps_sweep,
    std::int64_t trials, std::uint64_t seed, int threads = 0, double dp = 0.02) {
    std::vector<InfluenceSumReport> out;
    const EventSpec spec = EventSpec::origin_to_sphere(event_radius);
    for (std::size_t i = 0; i < eps_sweep.size(); ++i) {
        const double eps = eps_sweep[i];
        ExperimentGeom<D> geom{window, eps, std::min(kDefaultRasterPitch, eps / 4.0)};
        const auto prof = influence_profile<D>(geom, p, spec, trials, substream(seed, i), threads);
        const auto grid = box_partition(window, eps);
        std::vector<std::int64_t> core, tail;
        for (std::int64_t b = 0; b < grid.box_count(); ++b) {
            const double r = std::sqrt(norm2<D>(grid.center(b)));
            (r <= 4.0 * event_radius ? core : tail).push_back(b);
        }
        IntMomentAcc totals;
        for (const std::int64_t v : prof.trial_total) totals.add(v);
        const Estimate deriv =
            derivative_crn<D>(geom, p, dp, spec, trials, substream(seed, 100 + i), threads);
        InfluenceSumReport r;
        r.eps = eps;
        r.sum_core = prof.sum_over(core);
        r.sum_tail = prof.sum_over(tail);
        r.se_sum = totals.se();
        r.derivative = deriv.mean;
        r.se_derivative = deriv.se;
        const double se_comb = std::sqrt(r.se_derivative * r.se_derivative +
                                         0.25 * r.se_sum * r.se_sum);
        r.holds = r.derivative >= 0.5 * (r.sum_core + r.sum_tail) - 3.0 * se_comb;
        r.trials = trials;
        out.push_back(r);
    }
    return out;
}

}  // namespace vperc
