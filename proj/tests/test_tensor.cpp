#include <catch_amalgamated.hpp>

#include "vperc/tensor.hpp"

using namespace vperc;

namespace {

// The synthetic single-box event {box holds >= 1 black point}: its influence
// and derivative are known in closed form and by truncated-Poisson
// enumeration, an oracle for the resampling machinery.
double poisson_pmf(double lambda, int k) {
    double v = std::exp(-lambda);
    for (int i = 1; i <= k; ++i) v *= lambda / i;
    return v;
}

}  // namespace

TEST_CASE("single-box event: influence matches enumeration and closed form") {
    const double eps = 0.5, p = 0.4;
    const double lambda_b = p * eps * eps;
    const double closed = 2.0 * std::exp(-lambda_b) * (1.0 - std::exp(-lambda_b));

    // truncated enumeration over (k, k~) black-count pairs
    double enumerated = 0.0;
    for (int k = 0; k <= 8; ++k)
        for (int k2 = 0; k2 <= 8; ++k2)
            if ((k >= 1) != (k2 >= 1))
                enumerated += poisson_pmf(lambda_b, k) * poisson_pmf(lambda_b, k2);
    CHECK(std::abs(enumerated - closed) < 1e-9);

    // Monte Carlo through the actual resampling primitive
    const Window<2> w(1.0, 1.0);
    const std::int64_t box = 5;
    const int T = 40000;
    int flips = 0;
    for (int t = 0; t < T; ++t) {
        const auto cfg = sample_configuration<2>(w, p, substream(71, t), eps);
        const auto fresh = resample_content<2>(cfg, box, substream(72, t));
        auto blacks = [&](std::span<const PointRec<2>> seg) {
            int n = 0;
            for (const auto& rec : seg) n += rec.color_u < p;
            return n;
        };
        const int base = blacks(cfg.points_in_box(box));
        const int re = blacks({fresh.data(), fresh.size()});
        flips += (base >= 1) != (re >= 1);
    }
    const double est = double(flips) / T;
    const double se = std::sqrt(closed * (1 - closed) / T);
    CHECK(std::abs(est - closed) < 4 * se);

    // derivative of P[A] = 1 - exp(-p eps^d): CRN finite difference
    const double dp = 0.01;
    const double exact_deriv = eps * eps * std::exp(-lambda_b);
    int delta = 0;
    for (int t = 0; t < T; ++t) {
        const auto cfg = sample_configuration<2>(w, p, substream(73, t), eps);
        auto count_at = [&](double pp) {
            int n = 0;
            for (const auto& rec : cfg.points_in_box(box)) n += rec.color_u < pp;
            return n >= 1;
        };
        delta += int(count_at(p + dp)) - int(count_at(p - dp));
    }
    const double fd = double(delta) / (2 * dp * T);
    CHECK(std::abs(fd - exact_deriv) < 4.0 * std::sqrt(2 * dp * exact_deriv) / (2 * dp * std::sqrt(double(T))) + 1e-3);
}

TEST_CASE("far boxes have negligible influence; the origin box does not") {
    ExperimentGeom<2> geom{Window<2>::with_auto_padding(4.0), 1.0, 0.1};
    const auto grid = box_partition(geom.window, 1.0);
    const EventSpec spec = EventSpec::origin_to_sphere(4.0);

    const std::int64_t corner = 0;  // low corner of the padded window, far outside B_4
    const auto far_e = estimate_influence<2>(geom, 0.5, spec, corner, 400, 74);
    CHECK(far_e.mean <= 2.0 / 400.0);

    const std::int64_t center = grid.box_of(Pt<2>{0.1, 0.1});
    const auto ctr = estimate_influence<2>(geom, 0.5, spec, center, 400, 75);
    CHECK(ctr.mean > 3.0 * ctr.se);
    CHECK(ctr.se > 0.0);
}

TEST_CASE("influence profile respects the lattice symmetry of the event") {
    ExperimentGeom<2> geom{Window<2>::with_auto_padding(3.0), 1.0, 0.1};
    const auto prof = influence_profile<2>(geom, 0.5, EventSpec::origin_to_sphere(3.0), 3000, 76);
    const auto grid = box_partition(geom.window, 1.0);
    // compare the box at low corner (x, y) with its mirror (-1-x, y) in grid
    // coordinates; the event is symmetric under reflection across x = 0
    const std::int64_t m = grid.cells;
    std::int64_t checked = 0;
    for (std::int64_t i = 0; i < m / 2; ++i) {
        for (std::int64_t j = 0; j < m; ++j) {
            const std::int64_t a = grid.encode({i, j});
            const std::int64_t b = grid.encode({m - 1 - i, j});
            const auto ea = prof.entry(a), eb = prof.entry(b);
            if (ea.mean < 0.01 && eb.mean < 0.01) continue;
            CHECK(std::abs(ea.mean - eb.mean) <= 4.0 * (ea.se + eb.se) + 1e-12);
            ++checked;
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("derivative dominates half the influence sum") {
    const Window<2> w = Window<2>::with_auto_padding(3.0);
    const auto reports = influence_sum_vs_derivative<2>(w, 0.5, 3.0, {1.0, 0.5}, 250, 77);
    REQUIRE(reports.size() == 2);
    for (const auto& r : reports) {
        INFO("eps " << r.eps << ": deriv " << r.derivative << " vs half-sum "
                    << 0.5 * (r.sum_core + r.sum_tail));
        CHECK(r.holds);
        CHECK(r.sum_core >= 0.0);
    }
}

TEST_CASE("influences vanish for saturated events") {
    ExperimentGeom<2> geom{Window<2>::with_auto_padding(3.0), 1.0, 0.1};
    const auto prof = influence_profile<2>(geom, 1.0, EventSpec::origin_to_sphere(3.0), 60, 78);
    for (const std::int64_t f : prof.flips) CHECK(f == 0);
}
