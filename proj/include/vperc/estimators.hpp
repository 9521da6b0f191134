#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "vperc/estimate.hpp"
#include "vperc/events.hpp"
#include "vperc/parallel.hpp"
#include "vperc/point_process.hpp"

namespace vperc {

/// Geometry shared by every trial of an experiment.
template <int D>
struct ExperimentGeom {
    Window<D> window;
    double sample_pitch = 1.0;  // epsilon of the sampling grid
    double h = kDefaultRasterPitch;

    static ExperimentGeom for_radius(double max_radius, double h = kDefaultRasterPitch,
                                     double pitch = 1.0) {
        return ExperimentGeom{Window<D>::with_auto_padding(max_radius), pitch, h};
    }
};

namespace detail {

template <int D>
double raster_region(const EventSpec& spec, const Window<D>& window) {
    if (spec.kind == EventKind::point_to_sphere) return window.half_width;
    return std::max(spec.outer, spec.inner);
}

template <int D>
bool eval_raster(RasterEvaluator<D>& ev, const EventSpec& spec, double region) {
    switch (spec.kind) {
        case EventKind::origin_to_sphere: return ev.origin_to_sphere(spec.outer);
        case EventKind::point_to_sphere: {
            Pt<D> x{};
            for (int a = 0; a < D; ++a) x[a] = spec.x[a];
            return ev.point_to_sphere(x, spec.inner, region);
        }
        case EventKind::box_crossing: return ev.box_crossing(spec.outer);
        case EventKind::box_to_sphere: return ev.box_to_sphere(spec.inner, spec.outer);
    }
    return false;
}

inline bool eval_delaunay(DelaunayEvaluator& ev, const EventSpec& spec, double p) {
    switch (spec.kind) {
        case EventKind::origin_to_sphere: return ev.origin_to_sphere(spec.outer, p);
        case EventKind::point_to_sphere:
            return ev.point_to_sphere({spec.x[0], spec.x[1]}, spec.inner, p);
        case EventKind::box_crossing: return ev.box_crossing(spec.outer, p);
        case EventKind::box_to_sphere: return ev.box_to_sphere(spec.inner, spec.outer, p);
    }
    return false;
}

inline const char* engine_name(Engine e) { return e == Engine::raster ? "raster" : "delaunay2d"; }

}  // namespace detail

/// Unbiased Bernoulli estimate of P_p[spec] over independent configurations.
template <int D>
Estimate estimate_event(const ExperimentGeom<D>& geom, double p, const EventSpec& spec,
                        std::int64_t trials, std::uint64_t seed, int threads = 0) {
    require(trials >= 1, "estimate_event: trials must be >= 1");
    validate_event(geom.window, spec);
    const double region = detail::raster_region<D>(spec, geom.window);
    auto acc = run_trials<BernoulliAcc>(trials, threads, {}, [&](std::int64_t t, BernoulliAcc& a) {
        const auto cfg =
            sample_configuration<D>(geom.window, p, substream(seed, t), geom.sample_pitch);
        bool v = false;
        if (spec.engine == Engine::delaunay2d) {
            if constexpr (D == 2) {
                DelaunayEvaluator ev(cfg);
                v = detail::eval_delaunay(ev, spec, p);
            }
        } else {
            RasterEvaluator<D> ev(cfg, std::max(region, spec.inner), geom.h);
            v = detail::eval_raster<D>(ev, spec, region);
        }
        a.add(v);
    });
    Estimate e = acc.estimate();
    e.seed = seed;
    e.p = p;
    e.n = spec.outer > 0 ? spec.outer : spec.inner;
    e.eps = geom.sample_pitch;
    e.h = spec.engine == Engine::raster ? geom.h : 0.0;
    e.event = spec.name();
    e.engine = detail::engine_name(spec.engine);
    return e;
}

/// theta_r for every radius in `radii`, sharing trials (nested events cost
/// one labeling pass per configuration). radius 0 means "origin is black".
template <int D>
std::vector<Estimate> theta_ladder(const ExperimentGeom<D>& geom, double p,
                                   const std::vector<double>& radii, std::int64_t trials,
                                   std::uint64_t seed, int threads = 0,
                                   Engine engine = Engine::raster) {
    require(trials >= 1, "theta_ladder: trials must be >= 1");
    double region = 0.0;
    for (double r : radii) region = std::max(region, r);
    require(region <= geom.window.half_width + 1e-12, "theta_ladder: radius exceeds window");

    struct Acc {
        std::vector<std::int64_t> sums;
        std::int64_t n = 0;
        void merge(const Acc& o) {
            n += o.n;
            for (std::size_t i = 0; i < sums.size(); ++i) sums[i] += o.sums[i];
        }
    };
    Acc proto;
    proto.sums.assign(radii.size(), 0);
    auto acc = run_trials<Acc>(trials, threads, proto, [&](std::int64_t t, Acc& a) {
        const auto cfg =
            sample_configuration<D>(geom.window, p, substream(seed, t), geom.sample_pitch);
        ++a.n;
        if (engine == Engine::delaunay2d) {
            if constexpr (D == 2) {
                DelaunayEvaluator ev(cfg);
                for (std::size_t i = 0; i < radii.size(); ++i)
                    a.sums[i] += radii[i] == 0.0 ? color_at<2>(cfg, Pt<2>{})
                                                 : ev.origin_to_sphere(radii[i], p);
            }
            return;
        }
        RasterEvaluator<D> ev(cfg, region, geom.h);
        const auto hits = ev.origin_to_spheres(radii, region);
        for (std::size_t i = 0; i < radii.size(); ++i) a.sums[i] += hits[i] ? 1 : 0;
    });
    std::vector<Estimate> out;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        BernoulliAcc b{acc.n, acc.sums[i]};
        Estimate e = b.estimate();
        e.seed = seed;
        e.p = p;
        e.n = radii[i];
        e.eps = geom.sample_pitch;
        e.h = engine == Engine::raster ? geom.h : 0.0;
        e.event = "origin_to_sphere";
        e.engine = detail::engine_name(engine);
        out.push_back(e);
    }
    return out;
}

// --- pivotal points and the Russo identity ---------------------------------

/// Number of points whose color flip changes the event: recoloring the point
/// black makes the event hold and recoloring it white makes it fail.
/// Raster engine; candidates are the owners of sites in the event's region.
template <int D>
std::int64_t pivotal_count(const PointConfiguration<D>& cfg, const EventSpec& spec,
                           double h = kDefaultRasterPitch) {
    validate_event(cfg.window, spec);
    const double region = detail::raster_region<D>(spec, cfg.window);
    RasterEvaluator<D> ev(cfg, std::max(region, spec.inner), h);
    const bool base = detail::eval_raster<D>(ev, spec, region);
    // Owners with at least one site in the raster; only they can matter.
    std::vector<std::uint32_t> owners(ev.grid().owner.begin(), ev.grid().owner.end());
    std::sort(owners.begin(), owners.end());
    owners.erase(std::unique(owners.begin(), owners.end()), owners.end());
    std::int64_t piv = 0;
    for (const std::uint32_t id : owners) {
        const bool is_black = cfg.black(id);
        if (base == is_black) {
            // Flipping toward the event's current value cannot change it
            // (increasing event); test the opposite recoloring.
            ev.recolor_with_override(cfg.p, id, !is_black);
            if (detail::eval_raster<D>(ev, spec, region) != base) ++piv;
        }
    }
    ev.recolor(cfg.p);
    return piv;
}

template <int D>
Estimate estimate_pivotal(const ExperimentGeom<D>& geom, double p, const EventSpec& spec,
                          std::int64_t trials, std::uint64_t seed, int threads = 0) {
    auto acc = run_trials<IntMomentAcc>(trials, threads, {}, [&](std::int64_t t, IntMomentAcc& a) {
        auto cfg = sample_configuration<D>(geom.window, p, substream(seed, t), geom.sample_pitch);
        a.add(pivotal_count<D>(cfg, spec, geom.h));
    });
    Estimate e = acc.estimate();
    e.seed = seed;
    e.p = p;
    e.n = spec.outer;
    e.eps = geom.sample_pitch;
    e.h = geom.h;
    e.event = "pivotal:" + spec.name();
    e.engine = "raster";
    return e;
}

/// Central finite difference (P[A](p+dp) - P[A](p-dp)) / (2 dp) with common
/// random numbers: the same positions and color uniforms serve both sides, so
/// the per-trial difference is a monotone 0/1 indicator.
template <int D>
Estimate derivative_crn(const ExperimentGeom<D>& geom, double p, double dp, const EventSpec& spec,
                        std::int64_t trials, std::uint64_t seed, int threads = 0) {
    require(dp > 0 && p - dp >= 0.0 && p + dp <= 1.0, "derivative_crn: p +- dp outside [0,1]");
    const double region = detail::raster_region<D>(spec, geom.window);
    auto acc = run_trials<IntMomentAcc>(trials, threads, {}, [&](std::int64_t t, IntMomentAcc& a) {
        const auto cfg =
            sample_configuration<D>(geom.window, p, substream(seed, t), geom.sample_pitch);
        bool lo = false, hi = false;
        if (spec.engine == Engine::delaunay2d) {
            if constexpr (D == 2) {
                DelaunayEvaluator ev(cfg);
                lo = detail::eval_delaunay(ev, spec, p - dp);
                hi = detail::eval_delaunay(ev, spec, p + dp);
            }
        } else {
            RasterEvaluator<D> ev(cfg, std::max(region, spec.inner), geom.h);
            ev.recolor(p - dp);
            lo = detail::eval_raster<D>(ev, spec, region);
            ev.recolor(p + dp);
            hi = detail::eval_raster<D>(ev, spec, region);
        }
        a.add((hi ? 1 : 0) - (lo ? 1 : 0));
    });
    Estimate e = acc.estimate();
    e.mean /= 2.0 * dp;
    e.se /= 2.0 * dp;
    e.seed = seed;
    e.p = p;
    e.n = spec.outer;
    e.eps = geom.sample_pitch;
    e.h = geom.h;
    e.event = "ddp:" + spec.name();
    e.engine = detail::engine_name(spec.engine);
    return e;
}

// --- decay fits -------------------------------------------------------------

struct fit_error : std::runtime_error {
    std::vector<std::size_t> usable;
    fit_error(const std::string& msg, std::vector<std::size_t> u)
        : std::runtime_error(msg), usable(std::move(u)) {}
};

/// Least-squares line on (n, log mean). log_slope < 0 means decay; the
/// paper-style positive decay rate is -log_slope.
struct DecayFit {
    double log_slope = 0.0;
    double se_slope = 0.0;
    double intercept = 0.0;
    double n_min = 0.0, n_max = 0.0;
    double resid_rms = 0.0;
    std::vector<std::size_t> used;  // indices of estimates that passed the filter

    double decay_rate() const { return -log_slope; }
};

/// Fit log theta_n ~ a + slope * n over the estimates whose mean clears the
/// log-safety threshold 5/trials.
inline DecayFit fit_decay(const std::vector<Estimate>& estimates) {
    std::vector<std::size_t> usable;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const auto& e = estimates[i];
        if (e.trials > 0 && e.mean > 5.0 / static_cast<double>(e.trials)) usable.push_back(i);
    }
    if (usable.size() < 4)
        throw fit_error("fit_decay: fewer than 4 usable points after the log-safety filter",
                        usable);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto m = static_cast<double>(usable.size());
    for (const std::size_t i : usable) {
        const double x = estimates[i].n, y = std::log(estimates[i].mean);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double det = m * sxx - sx * sx;
    require(det > 0, "fit_decay: degenerate abscissas");
    DecayFit fit;
    fit.log_slope = (m * sxy - sx * sy) / det;
    fit.intercept = (sy - fit.log_slope * sx) / m;
    double rss = 0;
    for (const std::size_t i : usable) {
        const double r = std::log(estimates[i].mean) - fit.intercept - fit.log_slope * estimates[i].n;
        rss += r * r;
    }
    fit.resid_rms = std::sqrt(rss / m);
    const double sigma2 = usable.size() > 2 ? rss / (m - 2.0) : 0.0;
    fit.se_slope = std::sqrt(sigma2 * m / det);
    fit.n_min = estimates[usable.front()].n;
    fit.n_max = estimates[usable.back()].n;
    fit.used = std::move(usable);
    return fit;
}

// --- critical point ----------------------------------------------------------

struct PcEval {
    double p;
    double n;
    double mean;
    double se;
};

struct PcResult {
    double lo = 0.0, hi = 1.0;
    std::vector<PcEval> evals;
    std::uint64_t seed = 0;
    std::int64_t trials = 0;

    double width() const { return hi - lo; }
};

/// d=2: bisection on p against the self-dual crossing value 1/2.
/// One batch of configurations serves the whole search: per trial and per
/// size, the critical p where the (monotone) crossing switches on is found by
/// recoloring, and every crossing estimate is a quantile of those values.
/// The bisection runs on size n2; n1 is reported as a consistency diagnostic.
/// The final interval is widened by `stat_pad` against boundary misreads.
inline PcResult estimate_pc_2d(double n1, double n2, std::int64_t trials, std::uint64_t seed,
                               int threads = 0, double p_lo = 0.40, double p_hi = 0.60,
                               double stop_width = 0.0125, double stat_pad = 0.003) {
    require(n1 < n2, "estimate_pc_2d: need n1 < n2");
    const auto window = Window<2>::with_auto_padding(n2);

    struct Acc {
        std::vector<double> crit1, crit2;
        void merge(const Acc& o) {
            crit1.insert(crit1.end(), o.crit1.begin(), o.crit1.end());
            crit2.insert(crit2.end(), o.crit2.begin(), o.crit2.end());
        }
    };
    auto acc = run_trials<Acc>(trials, threads, {}, [&](std::int64_t t, Acc& a) {
        const auto cfg = sample_configuration<2>(window, 0.5, substream(seed, t), 1.0);
        DelaunayEvaluator ev(cfg);
        auto crit = [&](double n) {
            double lo = 0.0, hi = 1.0;
            for (int it = 0; it < 11; ++it) {
                const double mid = 0.5 * (lo + hi);
                (ev.box_crossing(n, mid) ? hi : lo) = mid;
            }
            return 0.5 * (lo + hi);
        };
        a.crit1.push_back(crit(n1));
        a.crit2.push_back(crit(n2));
    });
    // merge order of the per-trial values does not affect quantile counts
    auto frac_below = [&](const std::vector<double>& v, double p) {
        std::int64_t c = 0;
        for (const double x : v) c += x <= p;
        return static_cast<double>(c) / static_cast<double>(v.size());
    };
    PcResult res;
    res.seed = seed;
    res.trials = trials;
    auto record = [&](double p) {
        for (const auto& [n, v] : {std::pair{n1, &acc.crit1}, std::pair{n2, &acc.crit2}}) {
            const double m = frac_below(*v, p);
            res.evals.push_back(
                {p, n, m, std::sqrt(std::max(m * (1 - m), 1e-12) / double(trials - 1))});
        }
        return frac_below(acc.crit2, p);
    };
    double flo = record(p_lo), fhi = record(p_hi);
    require(flo < 0.5 && fhi > 0.5, "estimate_pc_2d: initial interval does not bracket");
    double lo = p_lo, hi = p_hi;
    while (hi - lo > stop_width) {
        const double mid = 0.5 * (lo + hi);
        (record(mid) >= 0.5 ? hi : lo) = mid;
    }
    res.lo = std::max(p_lo, lo - stat_pad);
    res.hi = std::min(p_hi, hi + stat_pad);
    return res;
}

/// d=3: bisection on the flattening of log theta_n between two sizes.
/// Subcritical p shows d log theta / d log n below `flatten_threshold`
/// (steeply negative); supercritical p shows a flattening curve. No exact
/// reference value exists; the returned interval is a reproducible
/// finite-size measurement.
inline PcResult estimate_pc_3d(double n1, double n2, std::int64_t trials, std::uint64_t seed,
                               double h = 0.25, int threads = 0, double p_lo = 0.02,
                               double p_hi = 0.40, double stop_width = 0.02,
                               double flatten_threshold = -1.0) {
    require(n1 < n2, "estimate_pc_3d: need n1 < n2");
    ExperimentGeom<3> geom{Window<3>::with_auto_padding(n2), 1.0, h};
    PcResult res;
    res.seed = seed;
    res.trials = trials;
    int step = 0;
    auto flat = [&](double p) {
        const auto th =
            theta_ladder<3>(geom, p, {n1, n2}, trials, substream(seed, 1000 + step++), threads);
        for (const auto& e : th) res.evals.push_back({p, e.n, e.mean, e.se});
        if (th[0].mean <= 0.0 || th[1].mean <= 0.0) return -1e9;
        return std::log(th[1].mean / th[0].mean) / std::log(n2 / n1);
    };
    require(flat(p_lo) < flatten_threshold, "estimate_pc_3d: p_lo not subcritical");
    require(flat(p_hi) >= flatten_threshold, "estimate_pc_3d: p_hi not supercritical");
    double lo = p_lo, hi = p_hi;
    while (hi - lo > stop_width) {
        const double mid = 0.5 * (lo + hi);
        (flat(mid) >= flatten_threshold ? hi : lo) = mid;
    }
    res.lo = lo;
    res.hi = hi;
    return res;
}

// --- positive association and the square-root trick -------------------------

struct PairReport {
    double pa = 0, pb = 0, pab = 0;
    double gap = 0;     // P[A and B] - P[A] P[B]
    double se_gap = 0;
    bool holds = false; // FKG direction for increasing A, B
    std::int64_t trials = 0;
    std::uint64_t seed = 0;
};

/// Verify P[A and B] >= P[A] P[B] - 3 se for increasing events A, B.
/// If `b_white_crossing_n` > 0, B is instead the decreasing event "white
/// axis-1 crossing of [-n,n]^2" and the reversed inequality is checked.
template <int D>
PairReport fkg_check(const ExperimentGeom<D>& geom, double p, const EventSpec& specA,
                     const EventSpec& specB, std::int64_t trials, std::uint64_t seed,
                     int threads = 0, double b_white_crossing_n = 0.0) {
    validate_event(geom.window, specA);
    const bool mixed = b_white_crossing_n > 0.0;
    if (!mixed) validate_event(geom.window, specB);
    double region = detail::raster_region<D>(specA, geom.window);
    region = std::max(region, mixed ? b_white_crossing_n : detail::raster_region<D>(specB, geom.window));
    auto acc = run_trials<PairAcc>(trials, threads, {}, [&](std::int64_t t, PairAcc& a) {
        const auto cfg =
            sample_configuration<D>(geom.window, p, substream(seed, t), geom.sample_pitch);
        RasterEvaluator<D> ev(cfg, region, geom.h);
        const bool va = detail::eval_raster<D>(ev, specA, region);
        const bool vb = mixed ? ev.crossing_along(b_white_crossing_n, 1, /*white=*/true)
                              : detail::eval_raster<D>(ev, specB, region);
        a.add(va, vb);
    });
    PairReport r;
    r.pa = acc.pa();
    r.pb = acc.pb();
    r.pab = acc.pab();
    r.gap = r.pab - r.pa * r.pb;
    r.se_gap = acc.se_gap();
    r.holds = mixed ? (r.gap <= 3.0 * r.se_gap) : (r.gap >= -3.0 * r.se_gap);
    r.trials = trials;
    r.seed = seed;
    return r;
}

struct SqrtTrickReport {
    std::array<double, 4> side{};   // B_k to each side of Lambda_n, within it
    std::array<double, 4> se{};
    double p_union = 0, se_union = 0;
    double max_side = 0, se_max = 0;
    double bound = 0, se_bound = 0;  // 1 - (1 - p_union)^{1/4}
    bool holds = false;
    std::int64_t trials = 0;
    std::uint64_t seed = 0;
};

/// Square-root trick: max_i P[B_k <-> side_i] >= 1 - (1 - P[union])^{1/4},
/// checked within 3 propagated standard errors. d = 2, raster engine.
inline SqrtTrickReport sqrt_trick_check(const ExperimentGeom<2>& geom, double p, double k,
                                        double n, std::int64_t trials, std::uint64_t seed,
                                        int threads = 0) {
    require(k < n, "sqrt_trick_check: need k < n");
    require(n <= geom.window.half_width + 1e-12, "sqrt_trick_check: n exceeds window");
    struct Acc {
        std::array<std::int64_t, 4> side{};
        std::int64_t uni = 0, n = 0;
        void merge(const Acc& o) {
            for (int i = 0; i < 4; ++i) side[i] += o.side[i];
            uni += o.uni;
            n += o.n;
        }
    };
    auto acc = run_trials<Acc>(trials, threads, {}, [&](std::int64_t t, Acc& a) {
        const auto cfg =
            sample_configuration<2>(geom.window, p, substream(seed, t), geom.sample_pitch);
        RasterEvaluator<2> ev(cfg, n, geom.h);
        bool any = false;
        int i = 0;
        for (const int axis : {0, 1}) {
            for (const bool positive : {false, true}) {
                const bool v = ev.box_to_side(k, n, axis, positive);
                a.side[i++] += v;
                any = any || v;
            }
        }
        a.uni += any;
        ++a.n;
    });
    SqrtTrickReport r;
    r.trials = trials;
    r.seed = seed;
    const auto m = static_cast<double>(acc.n);
    int argmax = 0;
    for (int i = 0; i < 4; ++i) {
        r.side[i] = static_cast<double>(acc.side[i]) / m;
        r.se[i] = std::sqrt(std::max(r.side[i] * (1 - r.side[i]), 1e-12) / (m - 1));
        if (r.side[i] > r.side[argmax]) argmax = i;
    }
    r.max_side = r.side[argmax];
    r.se_max = r.se[argmax];
    r.p_union = static_cast<double>(acc.uni) / m;
    r.se_union = std::sqrt(std::max(r.p_union * (1 - r.p_union), 1e-12) / (m - 1));
    r.bound = 1.0 - std::pow(1.0 - r.p_union, 0.25);
    const double dbound = 0.25 * std::pow(std::max(1.0 - r.p_union, 1e-12), -0.75);
    r.se_bound = dbound * r.se_union;
    r.holds = r.max_side >= r.bound - 3.0 * std::sqrt(r.se_max * r.se_max + r.se_bound * r.se_bound);
    return r;
}

}  // namespace vperc
