#include <catch_amalgamated.hpp>

#include "vperc/osss.hpp"

using namespace vperc;

namespace {

FiniteProductSpace and_of_two_bits() {
    FiniteProductSpace sp;
    sp.alphabet = {2, 2};
    sp.prob = {{0.5, 0.5}, {0.5, 0.5}};
    sp.truth = {0, 0, 0, 1};
    sp.tree.resize(3);
    sp.tree[0].coord = 0;
    sp.tree[0].child = {1, 2};
    sp.tree[2].coord = 1;
    sp.tree[2].child = {1, 1};
    return sp;
}

}  // namespace

TEST_CASE("AND of two bits reproduces the exact OSSS data") {
    const auto rep = exact_osss(and_of_two_bits());
    CHECK(rep.variance == Catch::Approx(3.0 / 16.0).margin(1e-15));
    CHECK(rep.revealment[0] == Catch::Approx(1.0).margin(1e-15));
    CHECK(rep.revealment[1] == Catch::Approx(0.5).margin(1e-15));
    CHECK(rep.influence[0] == Catch::Approx(0.25).margin(1e-15));
    CHECK(rep.influence[1] == Catch::Approx(0.25).margin(1e-15));
    CHECK(rep.rhs == Catch::Approx(3.0 / 8.0).margin(1e-15));
    CHECK(rep.slack >= 0.0);
}

TEST_CASE("dictator function: one query decides") {
    FiniteProductSpace sp;
    sp.alphabet = {2, 2};
    sp.prob = {{0.5, 0.5}, {0.5, 0.5}};
    sp.truth = {0, 0, 1, 1};  // f = first bit
    sp.tree.resize(2);
    sp.tree[0].coord = 0;
    sp.tree[0].child = {1, 1};
    const auto rep = exact_osss(sp);
    CHECK(rep.variance == Catch::Approx(0.25).margin(1e-15));
    CHECK(rep.revealment[0] == Catch::Approx(1.0).margin(1e-15));
    CHECK(rep.revealment[1] == Catch::Approx(0.0).margin(1e-15));
    CHECK(rep.influence[0] == Catch::Approx(0.5).margin(1e-15));
    CHECK(rep.rhs == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("constant functions reveal nothing and the inequality is tight") {
    FiniteProductSpace sp;
    sp.alphabet = {2, 3};
    sp.prob = {{0.5, 0.5}, {0.2, 0.3, 0.5}};
    sp.truth.assign(6, 1);
    sp.tree.resize(1);
    sp.tree[0].coord = 0;
    sp.tree[0].child = {0, 0};  // never taken: determination precedes any query
    const auto rep = exact_osss(sp);
    CHECK(rep.variance == 0.0);
    CHECK(rep.rhs == 0.0);
    CHECK(rep.slack == 0.0);
    for (const double d : rep.revealment) CHECK(d == 0.0);
}

TEST_CASE("trees that fail to determine f are rejected") {
    auto sp = and_of_two_bits();
    sp.tree[2].coord = -1;  // leaf where f is still undetermined on omega_1 = 1
    sp.tree[2].child.clear();
    CHECK_THROWS_AS(exact_osss(sp), parameter_error);
}

TEST_CASE("oversized instances hit the enumeration budget") {
    FiniteProductSpace sp;
    sp.alphabet.assign(24, 2);
    sp.prob.assign(24, {0.5, 0.5});
    sp.truth.assign(std::size_t(1) << 24, 0);
    sp.tree.resize(1);
    CHECK_THROWS_AS(exact_osss(sp), resource_error);
}

TEST_CASE("random instances never violate the inequality") {
    for (int i = 0; i < 300; ++i) {
        const auto sp = random_osss_instance(substream(101, i));
        const auto rep = exact_osss(sp);
        INFO("instance " << i << " slack " << rep.slack);
        CHECK(rep.slack >= -1e-12);
    }
}

TEST_CASE("monte carlo agrees with exact enumeration") {
    for (int i = 0; i < 5; ++i) {
        const auto sp = random_osss_instance(substream(102, i));
        const auto ex = exact_osss(sp);
        const auto mc = mc_osss(sp, 60000, substream(103, i));
        CHECK(std::abs(mc.variance - ex.variance) < 0.02);
        for (std::size_t j = 0; j < ex.revealment.size(); ++j) {
            CHECK(std::abs(mc.revealment[j] - ex.revealment[j]) < 0.02);
            CHECK(std::abs(mc.influence[j] - ex.influence[j]) < 0.02);
        }
    }
}

TEST_CASE("osss holds for the voronoi event at desk scale") {
    ExperimentGeom<2> geom{Window<2>::with_auto_padding(6.0), 0.5,
                           std::min(kDefaultRasterPitch, 0.5 / 4.0)};
    const auto rep = osss_check_voronoi<2>(geom, 0.5, 4.0, 2.0, 150, 104);
    INFO("lhs " << rep.lhs << " rhs " << rep.rhs_core + rep.rhs_tail << " slack " << rep.slack);
    CHECK(rep.holds);
    CHECK(rep.rhs_core > 0.0);
}

TEST_CASE("osss voronoi is trivial at p = 1") {
    ExperimentGeom<2> geom{Window<2>::with_auto_padding(4.0), 0.5, 0.1};
    const auto rep = osss_check_voronoi<2>(geom, 1.0, 3.0, 2.0, 40, 105);
    CHECK(rep.lhs == 0.0);
    CHECK(rep.holds);
}
