#include <catch_amalgamated.hpp>

#include "helpers.hpp"
#include "vperc/estimators.hpp"
#include "vperc/events.hpp"

using namespace vperc;
using vperc::testing::config_from_points;
using vperc::testing::flood_fill_black_components;

TEST_CASE("single point configurations decide every event") {
    const Window<2> w(8.0, 3.0);
    const auto black = config_from_points<2>(w, {{{0.3, 0.2}, true}});
    const auto white = config_from_points<2>(w, {{{0.3, 0.2}, false}});
    for (const double n : {2.0, 4.0, 8.0}) {
        CHECK(evaluate<2>(black, EventSpec::origin_to_sphere(n)));
        CHECK_FALSE(evaluate<2>(white, EventSpec::origin_to_sphere(n)));
        CHECK(evaluate<2>(black, EventSpec::origin_to_sphere(n, Engine::delaunay2d)));
        CHECK_FALSE(evaluate<2>(white, EventSpec::origin_to_sphere(n, Engine::delaunay2d)));
        CHECK(evaluate<2>(black, EventSpec::box_crossing(n)));
        CHECK(evaluate<2>(black, EventSpec::box_crossing(n, Engine::delaunay2d)));
    }
}

TEST_CASE("engines agree on origin_to_sphere except on a vanishing fraction") {
    const Window<2> w(8.0, 3.0);
    int agree_coarse = 0, agree_fine = 0;
    const int T = 150;
    for (int t = 0; t < T; ++t) {
        const auto cfg = sample_configuration<2>(w, 0.5, substream(41, t));
        DelaunayEvaluator dev(cfg);
        const bool d = dev.origin_to_sphere(8.0, cfg.p);
        RasterEvaluator<2> coarse(cfg, 8.0, 0.1);
        RasterEvaluator<2> fine(cfg, 8.0, 0.05);
        agree_coarse += coarse.origin_to_sphere(8.0) == d;
        agree_fine += fine.origin_to_sphere(8.0) == d;
    }
    CHECK(agree_coarse >= static_cast<int>(0.97 * T));
    CHECK(agree_fine >= agree_coarse);
}

TEST_CASE("black component labeling matches flood fill") {
    const Window<2> w(6.0, 3.0);
    for (int t = 0; t < 10; ++t) {
        const auto cfg = sample_configuration<2>(w, 0.45, substream(42, t));
        RasterEvaluator<2> ev(cfg, 6.0, 0.1);
        const auto [labels, count] = ev.black_components(6.0);
        ColorGrid<2> sub = ev.grid();
        CHECK(count == flood_fill_black_components<2>(sub));
    }
}

TEST_CASE("isolated black cells are separate components") {
    const Window<2> w(6.0, 3.0);
    std::vector<std::pair<Pt<2>, bool>> pts{{{-4.0, -4.0}, true}, {{4.0, 4.0}, true}};
    // a dense white separator along the diagonal
    for (int i = -6; i <= 6; ++i) pts.push_back({{double(i), double(-i) * 0 + 0.0}, false});
    for (int i = -6; i <= 6; ++i) pts.push_back({{0.0, double(i)}, false});
    const auto cfg = config_from_points<2>(w, pts);
    RasterEvaluator<2> ev(cfg, 6.0, 0.1);
    const auto [labels, count] = ev.black_components(6.0);
    CHECK(count == 2);

    const auto all_black = config_from_points<2>(w, {{{-2.0, 0.0}, true}, {{2.0, 0.0}, true}});
    RasterEvaluator<2> ev2(all_black, 6.0, 0.1);
    CHECK(ev2.black_components(6.0).second == 1);
}

TEST_CASE("adding black points never destroys an increasing event") {
    const Window<2> w(6.0, 3.0);
    const std::vector<EventSpec> specs{EventSpec::origin_to_sphere(5.0),
                                       EventSpec::box_crossing(5.0),
                                       EventSpec::box_to_sphere(2.0, 5.0)};
    for (int t = 0; t < 40; ++t) {
        const auto cfg = sample_configuration<2>(w, 0.5, substream(43, t));
        RasterEvaluator<2> ev(cfg, 6.0, 0.1);
        for (const auto& spec : specs) {
            bool prev = false;
            for (const double p : {0.2, 0.35, 0.5, 0.65, 0.8}) {
                ev.recolor(p);
                const bool cur = detail::eval_raster<2>(ev, spec, 6.0);
                if (prev) CHECK(cur);  // colors only flip white -> black as p grows
                prev = cur;
            }
        }
    }
}

TEST_CASE("sphere events nest in the radius") {
    const Window<2> w(8.0, 3.0);
    for (int t = 0; t < 50; ++t) {
        const auto cfg = sample_configuration<2>(w, 0.55, substream(44, t));
        RasterEvaluator<2> ev(cfg, 8.0, 0.1);
        const auto hits = ev.origin_to_spheres({2.0, 4.0, 6.0, 8.0}, 8.0);
        for (std::size_t i = 1; i < hits.size(); ++i)
            if (hits[i]) CHECK(hits[i - 1]);
    }
}

TEST_CASE("black LR and white TB crossings never coexist on one raster") {
    const Window<2> w(6.0, 3.0);
    for (int t = 0; t < 120; ++t) {
        const auto cfg =
            sample_configuration<2>(w, 0.3 + 0.4 * ((t * 7) % 11) / 10.0, substream(45, t));
        RasterEvaluator<2> ev(cfg, 6.0, 0.1);
        const bool black_lr = ev.crossing_along(6.0, 0, false);
        const bool white_tb = ev.crossing_along(6.0, 1, true);
        CHECK_FALSE((black_lr && white_tb));
    }
}

TEST_CASE("engine and dimension mismatches are rejected") {
    const Window<3> w(3.0, 2.0);
    const auto cfg = sample_configuration<3>(w, 0.5, 46);
    CHECK_THROWS_AS(evaluate<3>(cfg, EventSpec::origin_to_sphere(2.0, Engine::delaunay2d)),
                    parameter_error);
    CHECK_THROWS_AS(evaluate<3>(cfg, EventSpec::origin_to_sphere(9.0)), parameter_error);
}

TEST_CASE("raster events work in d = 3") {
    const Window<3> w(4.0, 2.0);
    const auto black = config_from_points<3>(w, {{{0.1, 0.2, -0.1}, true}});
    CHECK(evaluate<3>(black, EventSpec::origin_to_sphere(3.0), 0.25));
    int hits = 0;
    const int T = 40;
    for (int t = 0; t < T; ++t) {
        const auto cfg = sample_configuration<3>(w, 0.9, substream(47, t));
        RasterEvaluator<3> ev(cfg, 4.0, 0.25);
        hits += ev.origin_to_sphere(4.0);
    }
    CHECK(hits > T / 2);  // deep supercritical in d = 3
}

TEST_CASE("delaunay crossing restricted to the box") {
    // two black points far outside Lambda_2 cannot produce a crossing of it,
    // even though their cells are adjacent somewhere else
    const Window<2> w(6.0, 3.0);
    std::vector<std::pair<Pt<2>, bool>> pts{{{-5.5, 5.5}, true}, {{5.5, 5.5}, true}};
    for (double x = -6; x <= 6; x += 0.5) pts.push_back({{x, -2.0}, false});
    for (double x = -6; x <= 6; x += 0.5) pts.push_back({{x, 2.0}, false});
    for (double y = -1.5; y <= 1.5; y += 0.5) {
        pts.push_back({{-6.0, y}, false});
        pts.push_back({{6.0, y}, false});
        pts.push_back({{0.0, y}, false});
    }
    const auto cfg = config_from_points<2>(w, pts);
    DelaunayEvaluator ev(cfg);
    CHECK_FALSE(ev.box_crossing(2.0, cfg.p));
}
