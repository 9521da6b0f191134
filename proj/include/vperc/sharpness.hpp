#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "vperc/errors.hpp"
#include "vperc/estimators.hpp"
#include "vperc/events.hpp"
#include "vperc/parallel.hpp"

namespace vperc {

// --- measured theta table and the differential inequality -------------------

/// theta_n(p) over a p-grid with shared positions across the grid (colors
/// coupled through the shared uniforms), plus the cross moments needed to put
/// an error bar on the ratio theta'_n / (n theta_n / S_n). The convention
/// theta_0 = 1 enters S_n as a constant.
struct ThetaTable {
    std::vector<double> ps;
    int nmax = 0;
    std::int64_t trials = 0;
    std::uint64_t seed = 0;
    double h = 0.0;
    std::vector<std::vector<double>> means;  // [pi][n], n = 1..nmax at index n-1
    bool has_moments = false;
    // flat [pi * nmax + (n-1)] moments, interior pi only
    std::vector<std::int64_t> sx, sxx, sy, sz, szz, sxy, sxz, syz;

    std::size_t at(std::size_t pi, int n) const { return pi * nmax + (n - 1); }
};

template <int D>
ThetaTable measure_theta_table(const ExperimentGeom<D>& geom, const std::vector<double>& ps,
                               int nmax, std::int64_t trials, std::uint64_t seed,
                               int threads = 0) {
    require(nmax >= 1, "theta table: nmax >= 1");
    require(ps.size() >= 3, "theta table: need at least 3 grid points");
    require(nmax <= geom.window.half_width + 1e-12, "theta table: nmax exceeds window");
    const std::size_t np = ps.size();
    std::vector<double> radii;
    for (int n = 1; n <= nmax; ++n) radii.push_back(n);

    struct Acc {
        std::vector<std::int64_t> cnt;  // [pi][n-1] flattened
        std::vector<std::int64_t> sx, sxx, sy, sz, szz, sxy, sxz, syz;
        std::int64_t n = 0;
        void merge(const Acc& o) {
            n += o.n;
            auto madd = [](auto& a, const auto& b) {
                for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
            };
            madd(cnt, o.cnt);
            madd(sx, o.sx);
            madd(sxx, o.sxx);
            madd(sy, o.sy);
            madd(sz, o.sz);
            madd(szz, o.szz);
            madd(sxy, o.sxy);
            madd(sxz, o.sxz);
            madd(syz, o.syz);
        }
    };
    Acc proto;
    const std::size_t cells = np * static_cast<std::size_t>(nmax);
    proto.cnt.assign(cells, 0);
    for (auto* v : {&proto.sx, &proto.sxx, &proto.sy, &proto.sz, &proto.szz, &proto.sxy,
                    &proto.sxz, &proto.syz})
        v->assign(cells, 0);

    auto acc = run_trials<Acc>(trials, threads, proto, [&](std::int64_t t, Acc& a) {
        const auto cfg = sample_configuration<D>(geom.window, ps.front(), substream(seed, t),
                                                 geom.sample_pitch);
        RasterEvaluator<D> ev(cfg, static_cast<double>(nmax), geom.h);
        std::vector<std::vector<bool>> ind(np);
        for (std::size_t pi = 0; pi < np; ++pi) {
            ev.recolor(ps[pi]);
            ind[pi] = ev.origin_to_spheres(radii, static_cast<double>(nmax));
        }
        ++a.n;
        for (std::size_t pi = 0; pi < np; ++pi) {
            std::int64_t z = 0;  // sum_{1<=k<n} I(p_i, k)
            for (int n = 1; n <= nmax; ++n) {
                const std::size_t c = pi * nmax + (n - 1);
                const std::int64_t y = ind[pi][n - 1] ? 1 : 0;
                a.cnt[c] += y;
                if (pi > 0 && pi + 1 < np) {
                    const std::int64_t x =
                        (ind[pi + 1][n - 1] ? 1 : 0) - (ind[pi - 1][n - 1] ? 1 : 0);
                    a.sx[c] += x;
                    a.sxx[c] += x * x;
                    a.sy[c] += y;
                    a.sz[c] += z;
                    a.szz[c] += z * z;
                    a.sxy[c] += x * y;
                    a.sxz[c] += x * z;
                    a.syz[c] += y * z;
                }
                z += y;
            }
        }
    });
    ThetaTable tab;
    tab.ps = ps;
    tab.nmax = nmax;
    tab.trials = trials;
    tab.seed = seed;
    tab.h = geom.h;
    tab.has_moments = true;
    tab.means.assign(np, std::vector<double>(nmax, 0.0));
    for (std::size_t pi = 0; pi < np; ++pi)
        for (int n = 1; n <= nmax; ++n)
            tab.means[pi][n - 1] =
                static_cast<double>(acc.cnt[pi * nmax + (n - 1)]) / static_cast<double>(trials);
    tab.sx = std::move(acc.sx);
    tab.sxx = std::move(acc.sxx);
    tab.sy = std::move(acc.sy);
    tab.sz = std::move(acc.sz);
    tab.szz = std::move(acc.szz);
    tab.sxy = std::move(acc.sxy);
    tab.sxz = std::move(acc.sxz);
    tab.syz = std::move(acc.syz);
    return tab;
}

/// Synthetic table from a closed-form theta(p, n), for oracle tests.
inline ThetaTable synthetic_theta_table(const std::vector<double>& ps, int nmax,
                                        const std::function<double(double, int)>& theta) {
    ThetaTable tab;
    tab.ps = ps;
    tab.nmax = nmax;
    tab.trials = 0;
    tab.has_moments = false;
    tab.means.assign(ps.size(), std::vector<double>(nmax, 0.0));
    for (std::size_t pi = 0; pi < ps.size(); ++pi)
        for (int n = 1; n <= nmax; ++n) tab.means[pi][n - 1] = theta(ps[pi], n);
    return tab;
}

struct MlemCell {
    double p = 0;
    int n = 0;
    double ratio = 0, se = 0;
    double theta = 0, dtheta = 0, S = 0;
};

struct MlemReport {
    double c_hat = 0;
    double se_at_argmin = 0;
    double argmin_p = 0;
    int argmin_n = 0;
    bool significant = false;  // c_hat > 3 se
    std::vector<MlemCell> cells;
    std::int64_t excluded = 0;  // cells under the log-safety threshold
};

/// Ratios theta'_n / (n theta_n / S_n) over the interior of the p-grid and
/// their empirical infimum c_hat. Derivatives are central differences over
/// the grid (CRN-coupled when the table was measured); error bars come from
/// the delta method on the per-trial (X, Y, Z) moments.
inline MlemReport mlem_check(const ThetaTable& tab) {
    MlemReport rep;
    rep.c_hat = std::numeric_limits<double>::infinity();
    const double thresh = tab.trials > 0 ? 5.0 / static_cast<double>(tab.trials) : 0.0;
    for (std::size_t pi = 1; pi + 1 < tab.ps.size(); ++pi) {
        const double dp2 = tab.ps[pi + 1] - tab.ps[pi - 1];
        for (int n = 1; n <= tab.nmax; ++n) {
            const double theta = tab.means[pi][n - 1];
            if (theta <= thresh) {
                ++rep.excluded;
                continue;
            }
            double S = 1.0;  // theta_0 = 1 convention
            for (int kk = 1; kk < n; ++kk) S += tab.means[pi][kk - 1];
            const double dtheta =
                (tab.means[pi + 1][n - 1] - tab.means[pi - 1][n - 1]) / dp2;
            MlemCell cell;
            cell.p = tab.ps[pi];
            cell.n = n;
            cell.theta = theta;
            cell.dtheta = dtheta;
            cell.S = S;
            cell.ratio = dtheta * S / (static_cast<double>(n) * theta);
            if (tab.has_moments && tab.trials > 1) {
                const std::size_t c = tab.at(pi, n);
                const double T = static_cast<double>(tab.trials);
                const double mx = tab.sx[c] / T, my = tab.sy[c] / T, mz = tab.sz[c] / T;
                const double vx = tab.sxx[c] / T - mx * mx;
                const double vy = my - my * my;
                const double vz = tab.szz[c] / T - mz * mz;
                const double cxy = tab.sxy[c] / T - mx * my;
                const double cxz = tab.sxz[c] / T - mx * mz;
                const double cyz = tab.syz[c] / T - my * mz;
                const double gx = (1.0 + mz) / (dp2 * n * my);
                const double gz = mx / (dp2 * n * my);
                const double gy = -cell.ratio / my;
                double var = gx * gx * vx + gy * gy * vy + gz * gz * vz + 2 * gx * gy * cxy +
                             2 * gx * gz * cxz + 2 * gy * gz * cyz;
                cell.se = std::sqrt(std::max(var, 0.0) / T);
            }
            rep.cells.push_back(cell);
            if (cell.ratio < rep.c_hat) {
                rep.c_hat = cell.ratio;
                rep.se_at_argmin = cell.se;
                rep.argmin_p = cell.p;
                rep.argmin_n = cell.n;
            }
        }
    }
    require(!rep.cells.empty(), "mlem_check: no usable cells after the log-safety filter");
    rep.significant = rep.c_hat > 3.0 * rep.se_at_argmin;
    return rep;
}

// --- the Lemma 1 ODE system --------------------------------------------------

struct refine_step_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A family f_n: [alpha0, alpha1] -> [0, M], n = 0..N, on a parameter grid.
struct SequenceFamily {
    double alpha0 = 0, alpha1 = 1, M = 1;
    std::vector<double> grid;               // parameter values
    std::vector<std::vector<double>> f;     // f[n][gi]

    int N() const { return static_cast<int>(f.size()) - 1; }

    double sigma(int n, std::size_t gi) const {
        double s = 0;
        for (int k = 0; k < n; ++k) s += f[k][gi];
        return s;
    }
};

/// Integrate the saturated system f_n' = slack (n / Sigma_n) f_n upward from
/// boundary values at alpha0, explicit Euler with step halving until the
/// outputs self-converge below 1e-4 relative, clipping at M.
inline SequenceFamily integrate_lemma_system(double M, double alpha0, double alpha1, int N,
                                             const std::vector<double>& boundary,
                                             double slack = 1.0, std::size_t grid_points = 201,
                                             double self_tol = 1e-4) {
    require(N >= 1, "lemma system: N >= 1");
    require(alpha1 > alpha0, "lemma system: need alpha1 > alpha0");
    require(slack >= 1.0, "lemma system: slack >= 1");
    require(static_cast<int>(boundary.size()) == N + 1, "lemma system: need N+1 boundary values");
    for (const double b : boundary) require(b > 0 && b <= M, "lemma system: boundary in (0, M]");

    auto integrate = [&](int substeps) {
        SequenceFamily fam;
        fam.alpha0 = alpha0;
        fam.alpha1 = alpha1;
        fam.M = M;
        fam.grid.resize(grid_points);
        fam.f.assign(N + 1, std::vector<double>(grid_points, 0.0));
        const double dbeta = (alpha1 - alpha0) / static_cast<double>(grid_points - 1);
        for (std::size_t gi = 0; gi < grid_points; ++gi)
            fam.grid[gi] = alpha0 + dbeta * static_cast<double>(gi);
        std::vector<double> cur = boundary;
        for (std::size_t gi = 0; gi < grid_points; ++gi) {
            for (int n = 0; n <= N; ++n) fam.f[n][gi] = cur[n];
            if (gi + 1 == grid_points) break;
            const double hstep = dbeta / static_cast<double>(substeps);
            for (int sub = 0; sub < substeps; ++sub) {
                std::vector<double> nxt = cur;
                double sigma = cur[0];
                for (int n = 1; n <= N; ++n) {
                    const double deriv = slack * (static_cast<double>(n) / sigma) * cur[n];
                    nxt[n] = cur[n] + hstep * deriv;
                    if (nxt[n] > M * 1.01)
                        throw refine_step_error("lemma system: step instability");
                    nxt[n] = std::min(nxt[n], M);
                    sigma += cur[n];
                }
                cur = std::move(nxt);
            }
        }
        return fam;
    };
    int substeps = 16;
    SequenceFamily prev = integrate(substeps);
    for (int iter = 0; iter < 14; ++iter) {
        SequenceFamily next = integrate(substeps * 2);
        double rel = 0;
        for (int n = 0; n <= N; ++n)
            for (std::size_t gi = 0; gi < prev.grid.size(); ++gi)
                rel = std::max(rel, std::abs(next.f[n][gi] - prev.f[n][gi]) /
                                        std::max(1e-12, std::abs(next.f[n][gi])));
        if (rel < self_tol) return next;
        substeps *= 2;
        prev = std::move(next);
    }
    throw refine_step_error("lemma system: no self-convergence, refine the grid");
}

struct Beta1Estimate {
    double beta1 = 0;
    bool found = false;  // false: proxy never reached the threshold, beta1 = alpha1
    std::vector<double> proxy;  // per grid point
};

/// Finite-N proxy of beta_1 = inf{beta : limsup log Sigma_n / log n >= 1}:
/// the tail max over n in [N/2, N] against threshold 1 - tol.
inline Beta1Estimate beta1_estimate(const SequenceFamily& fam, double tol = 0.02) {
    require(fam.N() >= 4, "beta1: N too small");
    Beta1Estimate out;
    out.proxy.resize(fam.grid.size());
    for (std::size_t gi = 0; gi < fam.grid.size(); ++gi) {
        double best = -std::numeric_limits<double>::infinity();
        for (int n = fam.N() / 2; n <= fam.N(); ++n)
            best = std::max(best, std::log(std::max(fam.sigma(n, gi), 1e-300)) /
                                      std::log(static_cast<double>(n)));
        out.proxy[gi] = best;
    }
    for (std::size_t gi = 0; gi < fam.grid.size(); ++gi) {
        if (out.proxy[gi] >= 1.0 - tol) {
            out.beta1 = fam.grid[gi];
            out.found = true;
            return out;
        }
    }
    out.beta1 = fam.alpha1;
    out.found = false;
    return out;
}

struct DichotomyReport {
    bool below_ok = true;   // strict decay below beta1 - margin
    bool above_ok = true;   // f_N(beta) >= beta - beta1 - tol above beta1 + margin
    double worst_slope = 0; // max fitted log-slope over the subcritical range
    double worst_gap = 0;   // min of f_N - (beta - beta1) over the supercritical range
    std::int64_t checked_below = 0, checked_above = 0;
};

/// Lemma 1's two conclusions on an integrated family.
inline DichotomyReport verify_lemma_dichotomy(const SequenceFamily& fam, double beta1,
                                              double margin = 0.05, double tol = 0.02) {
    require(beta1 >= fam.alpha0 && beta1 <= fam.alpha1, "dichotomy: beta1 outside grid");
    require(margin > 0, "dichotomy: margin must be positive");
    DichotomyReport rep;
    rep.worst_slope = -std::numeric_limits<double>::infinity();
    rep.worst_gap = std::numeric_limits<double>::infinity();
    for (std::size_t gi = 0; gi < fam.grid.size(); ++gi) {
        const double beta = fam.grid[gi];
        if (beta <= beta1 - margin) {
            std::vector<Estimate> pts;
            for (int n = 1; n <= fam.N(); ++n) {
                Estimate e;
                e.n = n;
                e.mean = fam.f[n][gi];
                e.trials = std::int64_t(1) << 40;  // exact values, no noise filter
                pts.push_back(e);
            }
            const DecayFit fit = fit_decay(pts);
            rep.worst_slope = std::max(rep.worst_slope, fit.log_slope);
            if (fit.log_slope >= 0) rep.below_ok = false;
            ++rep.checked_below;
        } else if (beta >= beta1 + margin) {
            const double gap = fam.f[fam.N()][gi] - (beta - beta1);
            rep.worst_gap = std::min(rep.worst_gap, gap);
            if (gap < -tol) rep.above_ok = false;
            ++rep.checked_above;
        }
    }
    require(rep.checked_below + rep.checked_above > 0, "dichotomy: margins exceed the grid");
    return rep;
}

}  // namespace vperc
