#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace vperc {

/// A Monte Carlo estimate with its full parameterization, reproducible
/// bit-for-bit from (seed, trials) and the labelled parameters.
struct Estimate {
    double mean = 0.0;
    double se = 0.0;
    std::int64_t trials = 0;
    std::uint64_t seed = 0;
    // labels
    double p = 0.0;
    double n = 0.0;
    double eps = 0.0;
    double h = 0.0;
    std::string event;
    std::string engine;
};

/// Bernoulli counter. Standard error is the sample standard deviation over
/// sqrt(trials).
struct BernoulliAcc {
    std::int64_t n = 0;
    std::int64_t sum = 0;

    void add(bool v) {
        ++n;
        sum += v ? 1 : 0;
    }
    void merge(const BernoulliAcc& o) {
        n += o.n;
        sum += o.sum;
    }
    double mean() const { return n ? static_cast<double>(sum) / static_cast<double>(n) : 0.0; }
    double se() const {
        if (n < 2) return 0.0;
        const double m = mean();
        return std::sqrt(m * (1.0 - m) / static_cast<double>(n - 1));
    }
    Estimate estimate() const { return Estimate{mean(), se(), n}; }
};

/// Integer-valued observations (counts, coupled differences). Integer sums
/// keep parallel merging exact.
struct IntMomentAcc {
    std::int64_t n = 0;
    std::int64_t sum = 0;
    std::int64_t sum2 = 0;

    void add(std::int64_t v) {
        ++n;
        sum += v;
        sum2 += v * v;
    }
    void merge(const IntMomentAcc& o) {
        n += o.n;
        sum += o.sum;
        sum2 += o.sum2;
    }
    double mean() const { return n ? static_cast<double>(sum) / static_cast<double>(n) : 0.0; }
    double variance() const {
        if (n < 2) return 0.0;
        const double m = mean();
        return (static_cast<double>(sum2) - static_cast<double>(n) * m * m) /
               static_cast<double>(n - 1);
    }
    double se() const { return n ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
    Estimate estimate() const { return Estimate{mean(), se(), n}; }
};

/// Joint counts of two indicators, enough to propagate the error of
/// g = P[A and B] - P[A] P[B] by the delta method.
struct PairAcc {
    std::int64_t n = 0;
    std::int64_t sa = 0, sb = 0, sab = 0;

    void add(bool a, bool b) {
        ++n;
        sa += a;
        sb += b;
        sab += a && b;
    }
    void merge(const PairAcc& o) {
        n += o.n;
        sa += o.sa;
        sb += o.sb;
        sab += o.sab;
    }
    double pa() const { return n ? double(sa) / double(n) : 0.0; }
    double pb() const { return n ? double(sb) / double(n) : 0.0; }
    double pab() const { return n ? double(sab) / double(n) : 0.0; }

    /// Standard error of pab - pa*pb.
    double se_gap() const {
        if (n < 2) return 0.0;
        const double ma = pa(), mb = pb(), mab = pab();
        // Covariance matrix of (1_ab, 1_a, 1_b); products of indicators collapse.
        const double v_ab = mab * (1 - mab);
        const double v_a = ma * (1 - ma);
        const double v_b = mb * (1 - mb);
        const double c_ab_a = mab - mab * ma;
        const double c_ab_b = mab - mab * mb;
        const double c_a_b = mab - ma * mb;
        const double g0 = 1.0, g1 = -mb, g2 = -ma;
        const double var = g0 * g0 * v_ab + g1 * g1 * v_a + g2 * g2 * v_b +
                           2 * g0 * g1 * c_ab_a + 2 * g0 * g2 * c_ab_b + 2 * g1 * g2 * c_a_b;
        return std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
    }
};

}  // namespace vperc
