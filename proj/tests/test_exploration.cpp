#include <catch_amalgamated.hpp>

#include "helpers.hpp"
#include "vperc/exploration.hpp"

using namespace vperc;
using vperc::testing::config_from_points;

TEST_CASE("all-white sample: only the seed layer is visited, decision false") {
    const Window<2> w(6.0, 4.0);
    std::vector<std::pair<Pt<2>, bool>> pts;
    for (double x = -9.5; x <= 9.5; x += 0.7)
        for (double y = -9.5; y <= 9.5; y += 0.7) pts.push_back({{x, y}, false});
    const auto cfg = config_from_points<2>(w, pts, 0.5, 0.5);
    const auto tr = run_Tk<2>(cfg, 3.0, 6.0, 0.1);
    CHECK_FALSE(tr.decision);
    // every visited box touches the S_3 ring band
    for (const std::int64_t y : tr.visit_order) {
        CHECK(cfg.grid.min_dist_to_origin(y) <= 3.0 + 0.1 * std::sqrt(2.0) + 1e-9);
        CHECK(cfg.grid.max_dist_to_origin(y) >= 3.0 - 0.1 * std::sqrt(2.0) - 1e-9);
    }
}

TEST_CASE("all-black sample floods and decides true") {
    const Window<2> w(6.0, 4.0);
    std::vector<std::pair<Pt<2>, bool>> pts;
    for (double x = -9.5; x <= 9.5; x += 0.7)
        for (double y = -9.5; y <= 9.5; y += 0.7) pts.push_back({{x, y}, true});
    const auto cfg = config_from_points<2>(w, pts, 0.5, 0.5);
    const auto tr = run_Tk<2>(cfg, 3.0, 6.0, 0.1);
    CHECK(tr.decision);
    CHECK(std::int64_t(tr.visit_order.size()) >= 100);  // the frontier floods the region
    for (std::size_t i = 1; i < tr.z_sizes.size(); ++i) CHECK(tr.z_sizes[i] >= tr.z_sizes[i - 1]);
}

TEST_CASE("discover certifies exactly the true colors") {
    const Window<2> w(4.0, 4.0);
    for (int t = 0; t < 12; ++t) {
        const auto cfg = sample_configuration<2>(w, 0.5, substream(91, t), 0.5);
        ExplorationRun<2> run(cfg, 2.0, 4.0, 0.1);
        std::vector<std::int64_t> log;
        const std::int64_t y = cfg.grid.box_of(Pt<2>{0.3 * (t % 5) - 0.6, 0.2 * (t % 7) - 0.6});
        run.discover(y, log);
        for (const std::int64_t s : run.box_sites(y)) {
            REQUIRE(run.site_color(s) >= 0);
            CHECK(run.site_color(s) == (color_at<2>(cfg, run.site_position(s)) ? 1 : 0));
        }
        CHECK(!log.empty());
    }
}

TEST_CASE("dense surroundings keep discovery local") {
    const Window<2> w(4.0, 4.0);
    std::vector<std::pair<Pt<2>, bool>> pts;
    const double eps = 0.5;
    for (double x = -8 + eps / 2; x < 8; x += eps)
        for (double y = -8 + eps / 2; y < 8; y += eps) pts.push_back({{x, y}, true});
    const auto cfg = config_from_points<2>(w, pts, 0.5, eps);
    ExplorationRun<2> run(cfg, 2.0, 4.0, 0.1);
    std::vector<std::int64_t> log;
    const std::int64_t y = cfg.grid.box_of(Pt<2>{0.1, 0.1});
    run.discover(y, log);
    const Pt<2> ybase = cfg.grid.low_corner(y);
    for (const std::int64_t b : log) {
        const Pt<2> base = cfg.grid.low_corner(b);
        const double d = std::sqrt(dist2<2>(base, ybase));
        CHECK(d <= 2.0 + std::sqrt(2.0) * eps + 1e-9);  // within the round-2 ball
    }
}

TEST_CASE("decision equals direct evaluation across p") {
    const Window<2> w(6.0, 4.0);
    int checked = 0;
    for (int t = 0; t < 120; ++t) {
        for (const double p : {0.3, 0.5, 0.7}) {
            const auto cfg = sample_configuration<2>(w, p, substream(92, t * 3 + int(p * 10)), 0.5);
            const auto tr = run_Tk<2>(cfg, 3.0, 6.0, 0.1);
            RasterEvaluator<2> ev(cfg, 6.0, 0.1);
            REQUIRE(tr.decision == ev.origin_to_sphere(6.0));
            ++checked;
        }
    }
    CHECK(checked == 360);
}

TEST_CASE("traces are deterministic") {
    const Window<2> w(6.0, 4.0);
    const auto cfg = sample_configuration<2>(w, 0.5, 93, 0.5);
    const auto a = run_Tk<2>(cfg, 3.0, 6.0, 0.1);
    const auto b = run_Tk<2>(cfg, 3.0, 6.0, 0.1);
    CHECK(a.visit_order == b.visit_order);
    CHECK(a.revealed == b.revealed);
    CHECK(a.decision == b.decision);
}

TEST_CASE("revealment is one on the seed ring and zero far away") {
    ExperimentGeom<2> geom{Window<2>::with_auto_padding(6.0), 0.5, 0.1};
    const auto prof = revealment_profile<2>(geom, 0.5, 2.0, 4.0, 60, 94);
    const auto grid = box_partition(geom.window, 0.5);
    std::int64_t ring_boxes = 0, far_boxes = 0;
    for (std::int64_t b = 0; b < grid.box_count(); ++b) {
        const double lo = grid.min_dist_to_origin(b), hi = grid.max_dist_to_origin(b);
        if (lo <= 2.0 && hi >= 2.0) {
            CHECK(prof.reveal_count[b] == prof.trials);  // always the seed layer
            ++ring_boxes;
        }
        if (lo > 8.5) {
            CHECK(prof.reveal_count[b] == 0);
            ++far_boxes;
        }
    }
    CHECK(ring_boxes > 0);
    CHECK(far_boxes > 0);
}

TEST_CASE("averaged connection probabilities are controlled by S_n") {
    // (1/n) sum_k P[x <-> S_k] <= 2 S_n / n within statistical tolerance
    const int n = 4;
    ExperimentGeom<2> geom{Window<2>::with_auto_padding(double(n)), 1.0, 0.1};
    const double p = 0.5;
    const int T = 500;
    const auto grid = box_partition(geom.window, 1.0);
    std::vector<Pt<2>> probes;
    for (const auto& c : {Pt<2>{0.0, 0.0}, Pt<2>{1.0, 0.0}, Pt<2>{2.0, 2.0}, Pt<2>{-3.0, 1.0}})
        probes.push_back(c);
    std::vector<std::array<std::int64_t, 4>> conn(probes.size(), {0, 0, 0, 0});
    std::vector<std::int64_t> theta_sum(n, 0);  // theta_k for k = 1..n-1 plus theta_n
    for (int t = 0; t < T; ++t) {
        const auto cfg = sample_configuration<2>(geom.window, p, substream(95, t));
        RasterEvaluator<2> ev(cfg, double(n), geom.h);
        const auto hits = ev.origin_to_spheres({1.0, 2.0, 3.0, 4.0}, double(n));
        for (int k = 0; k < n; ++k) theta_sum[k] += hits[k] ? 1 : 0;
        UnionFind& uf = ev.labels(double(n));
        for (std::size_t i = 0; i < probes.size(); ++i) {
            const std::int64_t s = ev.site_at(probes[i]);
            if (!ev.grid().color[s]) continue;
            for (int k = 1; k <= n; ++k) {
                bool hit = false;
                for (const std::int64_t r : ev.ring_sites(double(k)))
                    if (ev.grid().color[r] && uf.find(r) == uf.find(s)) {
                        hit = true;
                        break;
                    }
                conn[i][k - 1] += hit ? 1 : 0;
            }
        }
    }
    double S_n = 1.0;  // theta_0 convention
    for (int k = 1; k < n; ++k) S_n += double(theta_sum[k - 1]) / T;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        double avg = 0;
        for (int k = 0; k < n; ++k) avg += double(conn[i][k]) / T;
        avg /= n;
        const double bound = 2.0 * S_n / n;
        CHECK(avg <= bound + 3.0 * std::sqrt(1.0 / T));
    }
}

TEST_CASE("parameter validation") {
    const Window<2> w(6.0, 4.0);
    const auto cfg = sample_configuration<2>(w, 0.5, 96, 0.5);
    CHECK_THROWS_AS(run_Tk<2>(cfg, 0.5, 6.0, 0.1), parameter_error);   // k < 1
    CHECK_THROWS_AS(run_Tk<2>(cfg, 4.0, 3.0, 0.1), parameter_error);   // k > n
    CHECK_THROWS_AS(run_Tk<2>(cfg, 2.0, 6.0, 0.3), parameter_error);   // h does not divide eps
}
