#pragma once

#include <cstdint>
#include <vector>

#include "vperc/errors.hpp"
#include "vperc/estimators.hpp"
#include "vperc/exploration.hpp"
#include "vperc/rng.hpp"
#include "vperc/tensor.hpp"

namespace vperc {

inline constexpr std::int64_t kOsssEnumBudget = 10'000'000;

/// A finite product space with a boolean function (truth table, mixed-radix
/// row-major) and a query strategy given as a decision tree. The algorithm
/// walks the tree but stops as soon as f is constant on the subcube fixed by
/// the revealed coordinates, per the OSSS notion of "determining f".
struct FiniteProductSpace {
    struct Node {
        int coord = -1;           // -1: leaf marker
        std::vector<int> child;   // size alphabet[coord] when internal
    };

    std::vector<int> alphabet;                // outcomes per coordinate
    std::vector<std::vector<double>> prob;    // per-coordinate distribution
    std::vector<std::uint8_t> truth;          // f over all outcomes
    std::vector<Node> tree;                   // node 0 is the root

    int coords() const { return static_cast<int>(alphabet.size()); }

    std::int64_t outcome_count() const {
        std::int64_t n = 1;
        for (const int a : alphabet) n *= a;
        return n;
    }

    void validate() const {
        require(!alphabet.empty(), "osss: no coordinates");
        for (const int a : alphabet) require(a >= 1, "osss: empty alphabet");
        require(static_cast<std::int64_t>(truth.size()) == outcome_count(),
                "osss: truth table size mismatch");
        require(prob.size() == alphabet.size(), "osss: probability vectors missing");
        for (std::size_t i = 0; i < prob.size(); ++i) {
            require(static_cast<int>(prob[i].size()) == alphabet[i],
                    "osss: probability vector size mismatch");
            double s = 0;
            for (const double v : prob[i]) {
                require(v >= 0, "osss: negative probability");
                s += v;
            }
            require(std::abs(s - 1.0) < 1e-9, "osss: probabilities must sum to 1");
        }
        require(!tree.empty(), "osss: empty tree");
        if (outcome_count() > kOsssEnumBudget)
            throw resource_error("osss: outcome count exceeds the enumeration budget");
    }

    std::int64_t index_of(const std::vector<int>& omega) const {
        std::int64_t idx = 0;
        for (int i = 0; i < coords(); ++i) idx = idx * alphabet[i] + omega[i];
        return idx;
    }

    double pi_of(const std::vector<int>& omega) const {
        double w = 1.0;
        for (int i = 0; i < coords(); ++i) w *= prob[i][omega[i]];
        return w;
    }

    /// Is f constant on the subcube where coordinates with revealed[i] != 0
    /// are pinned to omega[i]? Returns {constant, value}.
    std::pair<bool, bool> determined(const std::vector<int>& omega,
                                     const std::vector<std::uint8_t>& revealed) const {
        std::vector<int> probe(coords(), 0);
        for (int i = 0; i < coords(); ++i)
            if (revealed[i]) probe[i] = omega[i];
        const bool first = truth[index_of(probe)] != 0;
        while (true) {
            int i = coords() - 1;
            for (; i >= 0; --i) {
                if (revealed[i]) continue;
                if (++probe[i] < alphabet[i]) break;
                probe[i] = 0;
            }
            if (i < 0) return {true, first};
            if ((truth[index_of(probe)] != 0) != first) return {false, first};
        }
    }

    /// Coordinates the algorithm reveals on input omega. Throws if the tree
    /// fails to determine f on some branch.
    std::vector<std::uint8_t> reveal_set(const std::vector<int>& omega) const {
        std::vector<std::uint8_t> revealed(coords(), 0);
        int node = 0;
        while (true) {
            if (determined(omega, revealed).first) return revealed;
            require(node >= 0 && node < static_cast<int>(tree.size()), "osss: bad tree node");
            const Node& nd = tree[node];
            if (nd.coord < 0)
                throw parameter_error("osss: tree reaches a leaf before determining f");
            require(nd.coord < coords(), "osss: bad coordinate in tree");
            revealed[nd.coord] = 1;
            require(static_cast<int>(nd.child.size()) == alphabet[nd.coord],
                    "osss: child count mismatch");
            node = nd.child[omega[nd.coord]];
        }
    }
};

struct OsssExactReport {
    double variance = 0.0;
    std::vector<double> revealment;
    std::vector<double> influence;
    double rhs = 0.0;
    double slack = 0.0;  // rhs - variance, must be >= 0
};

/// Exact OSSS data by full enumeration of outcomes and per-coordinate
/// resample pairs.
inline OsssExactReport exact_osss(const FiniteProductSpace& space) {
    space.validate();
    const int m = space.coords();
    OsssExactReport rep;
    rep.revealment.assign(m, 0.0);
    rep.influence.assign(m, 0.0);
    double ef = 0.0;
    std::vector<int> omega(m, 0);
    while (true) {
        const double w = space.pi_of(omega);
        const bool f = space.truth[space.index_of(omega)] != 0;
        ef += w * (f ? 1.0 : 0.0);
        const auto revealed = space.reveal_set(omega);
        for (int i = 0; i < m; ++i)
            if (revealed[i]) rep.revealment[i] += w;
        // Influences: resample coordinate i independently.
        for (int i = 0; i < m; ++i) {
            std::vector<int> alt = omega;
            for (int v = 0; v < space.alphabet[i]; ++v) {
                alt[i] = v;
                const bool f2 = space.truth[space.index_of(alt)] != 0;
                if (f2 != f) rep.influence[i] += w * space.prob[i][v];
            }
        }
        int i = m - 1;
        for (; i >= 0; --i) {
            if (++omega[i] < space.alphabet[i]) break;
            omega[i] = 0;
        }
        if (i < 0) break;
    }
    rep.variance = ef * (1.0 - ef);
    for (int i = 0; i < m; ++i) rep.rhs += rep.revealment[i] * rep.influence[i];
    rep.slack = rep.rhs - rep.variance;
    return rep;
}

/// Monte Carlo counterpart of exact_osss, for consistency property tests.
inline OsssExactReport mc_osss(const FiniteProductSpace& space, std::int64_t trials,
                               std::uint64_t seed) {
    space.validate();
    const int m = space.coords();
    OsssExactReport rep;
    rep.revealment.assign(m, 0.0);
    rep.influence.assign(m, 0.0);
    double ef = 0.0;
    Stream s(seed);
    auto draw = [&](int i) {
        const double u = s.next_unit();
        double acc = 0.0;
        for (int v = 0; v < space.alphabet[i]; ++v) {
            acc += space.prob[i][v];
            if (u < acc) return v;
        }
        return space.alphabet[i] - 1;
    };
    std::vector<int> omega(m);
    for (std::int64_t t = 0; t < trials; ++t) {
        for (int i = 0; i < m; ++i) omega[i] = draw(i);
        const bool f = space.truth[space.index_of(omega)] != 0;
        ef += f ? 1.0 : 0.0;
        const auto revealed = space.reveal_set(omega);
        for (int i = 0; i < m; ++i)
            if (revealed[i]) rep.revealment[i] += 1.0;
        for (int i = 0; i < m; ++i) {
            std::vector<int> alt = omega;
            alt[i] = draw(i);
            const bool f2 = space.truth[space.index_of(alt)] != 0;
            if (f2 != f) rep.influence[i] += 1.0;
        }
    }
    const double T = static_cast<double>(trials);
    ef /= T;
    for (int i = 0; i < m; ++i) {
        rep.revealment[i] /= T;
        rep.influence[i] /= T;
    }
    rep.variance = ef * (1.0 - ef);
    for (int i = 0; i < m; ++i) rep.rhs += rep.revealment[i] * rep.influence[i];
    rep.slack = rep.rhs - rep.variance;
    return rep;
}

/// Random instance: uniform random truth table, random outcome distributions,
/// and a random full-depth adaptive query tree (always determines f).
inline FiniteProductSpace random_osss_instance(std::uint64_t seed, int max_coords = 4,
                                               int max_alphabet = 3) {
    Stream s(seed);
    FiniteProductSpace sp;
    const int m = 1 + static_cast<int>(s.next_u64() % max_coords);
    for (int i = 0; i < m; ++i)
        sp.alphabet.push_back(2 + static_cast<int>(s.next_u64() % (max_alphabet - 1)));
    for (int i = 0; i < m; ++i) {
        std::vector<double> p(sp.alphabet[i]);
        double tot = 0;
        for (double& v : p) {
            v = 0.05 + s.next_unit();
            tot += v;
        }
        for (double& v : p) v /= tot;
        sp.prob.push_back(p);
    }
    sp.truth.resize(sp.outcome_count());
    for (auto& b : sp.truth) b = (s.next_u64() & 1) ? 1 : 0;
    // Random adaptive order: each branch queries the remaining coordinates in
    // an order drawn on the fly.
    struct Builder {
        FiniteProductSpace& sp;
        Stream& s;
        int build(std::vector<std::uint8_t> used, int depth) {
            const int id = static_cast<int>(sp.tree.size());
            sp.tree.push_back({});
            std::vector<int> open;
            for (int i = 0; i < sp.coords(); ++i)
                if (!used[i]) open.push_back(i);
            if (open.empty()) return id;  // leaf
            const int coord = open[s.next_u64() % open.size()];
            used[coord] = 1;
            sp.tree[id].coord = coord;
            std::vector<int> children;
            for (int v = 0; v < sp.alphabet[coord]; ++v) children.push_back(build(used, depth + 1));
            sp.tree[id].child = std::move(children);
            return id;
        }
    };
    Builder b{sp, s};
    b.build(std::vector<std::uint8_t>(m, 0), 0);
    return sp;
}

// --- OSSS on the Voronoi event ----------------------------------------------

struct OsssVoronoiReport {
    double theta = 0, se_theta = 0;
    double lhs = 0, se_lhs = 0;     // theta (1 - theta)
    double rhs_core = 0;            // boxes with center in B_{4n}
    double rhs_tail = 0;
    double se_rhs = 0;
    double slack = 0;               // rhs - lhs
    bool holds = false;
    double p = 0, n = 0, k = 0, eps = 0, h = 0;
    std::int64_t trials = 0;
    std::uint64_t seed = 0;
};

/// Check theta_n (1 - theta_n) <= sum_x delta_x(T_k) Inf_x^eps[0 <-> S_n]
/// within 3 propagated standard errors. The three campaigns (theta,
/// revealments, influences) run on disjoint seed streams of `seed`; the
/// standard error of the RHS combines the per-trial-total variance of the
/// influence side with the per-box revealment errors.
template <int D>
OsssVoronoiReport osss_check_voronoi(const ExperimentGeom<D>& geom, double p, double n, double k,
                                     std::int64_t trials, std::uint64_t seed, int threads = 0) {
    const EventSpec spec = EventSpec::origin_to_sphere(n);
    const Estimate th = estimate_event<D>(geom, p, spec, trials, substream(seed, 1), threads);
    const auto rev = revealment_profile<D>(geom, p, k, n, trials, substream(seed, 2), threads);
    const auto inf = influence_profile<D>(geom, p, spec, trials, substream(seed, 3), threads);

    const auto grid = box_partition(geom.window, geom.sample_pitch);
    OsssVoronoiReport rep;
    rep.theta = th.mean;
    rep.se_theta = th.se;
    rep.lhs = th.mean * (1.0 - th.mean);
    rep.se_lhs = std::abs(1.0 - 2.0 * th.mean) * th.se + th.se * th.se;
    const double T = static_cast<double>(trials);
    double var_rev_side = 0.0;
    for (std::int64_t b = 0; b < grid.box_count(); ++b) {
        const double dm = static_cast<double>(rev.reveal_count[b]) / T;
        const double im = static_cast<double>(inf.flips[b]) / T;
        const double term = dm * im;
        const double se_d = std::sqrt(std::max(dm * (1 - dm), 0.0) / (T - 1));
        var_rev_side += im * im * se_d * se_d;
        const double r = std::sqrt(norm2<D>(grid.center(b)));
        (r <= 4.0 * n ? rep.rhs_core : rep.rhs_tail) += term;
    }
    IntMomentAcc totals;
    for (const std::int64_t v : inf.trial_total) totals.add(v);
    // delta weights are in [0,1]; the per-trial-total se bounds the influence
    // side's contribution
    rep.se_rhs = std::sqrt(totals.se() * totals.se() + var_rev_side);
    rep.slack = rep.rhs_core + rep.rhs_tail - rep.lhs;
    rep.holds = rep.lhs <= rep.rhs_core + rep.rhs_tail + 3.0 * std::sqrt(rep.se_rhs * rep.se_rhs +
                                                                         rep.se_lhs * rep.se_lhs);
    rep.p = p;
    rep.n = n;
    rep.k = k;
    rep.eps = geom.sample_pitch;
    rep.h = geom.h;
    rep.trials = trials;
    rep.seed = seed;
    return rep;
}

}  // namespace vperc
