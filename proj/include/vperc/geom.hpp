#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "vperc/errors.hpp"

namespace vperc {

template <int D>
using Pt = std::array<double, D>;

template <int D>
inline double dist2(const Pt<D>& a, const Pt<D>& b) {
    double s = 0.0;
    for (int i = 0; i < D; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

template <int D>
inline double norm2(const Pt<D>& a) {
    double s = 0.0;
    for (int i = 0; i < D; ++i) s += a[i] * a[i];
    return s;
}

/// Lexicographic comparison, the tie rule for equidistant nearest points.
template <int D>
inline bool lex_less(const Pt<D>& a, const Pt<D>& b) {
    for (int i = 0; i < D; ++i) {
        if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
}

/// Volume of the d-dimensional unit ball.
inline double unit_ball_volume(int d) {
    return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

/// Simulation box [-L-pad, L+pad]^D; events are only evaluated inside [-L, L]^D.
template <int D>
struct Window {
    double half_width;  // L
    double padding;     // pad

    Window(double L, double pad) : half_width(L), padding(pad) {
        require(D >= 2, "window: dimension must be >= 2");
        require(L > 0.0, "window: half-width must be positive");
        require(pad > 0.0, "window: padding must be positive");
    }

    /// Padding chosen so the Poisson void probability exp(-v_D pad^D) < 1e-9,
    /// rounded up to keep L+pad integral. This keeps boundary-truncation error
    /// below ~1e-9 for every cell or color query inside [-L, L]^D.
    static Window with_auto_padding(double L) {
        const double need = std::pow(std::log(1e9) / unit_ball_volume(D), 1.0 / D);
        double pad = std::ceil(need);
        pad = std::max(pad, std::ceil(L + pad) - L);  // make L+pad integral
        return Window(L, pad);
    }

    double padded_half() const { return half_width + padding; }
    double padded_extent() const { return 2.0 * padded_half(); }
    double volume() const { return std::pow(padded_extent(), D); }

    bool contains_padded(const Pt<D>& x) const {
        for (int i = 0; i < D; ++i)
            if (x[i] < -padded_half() || x[i] >= padded_half()) return false;
        return true;
    }
};

/// Partition of the padded window into half-open boxes x + [0, eps)^D,
/// x on the lattice eps*Z^D shifted to the low window corner. Linear box
/// indices are row-major, so index order coincides with lexicographic
/// order of the integer coordinates.
template <int D>
struct EpsilonGrid {
    double pitch = 1.0;       // eps
    double origin = 0.0;      // low corner, same on every axis
    std::int64_t cells = 0;   // per axis

    EpsilonGrid() = default;
    EpsilonGrid(double eps, double lo, std::int64_t m) : pitch(eps), origin(lo), cells(m) {}

    std::int64_t box_count() const {
        std::int64_t n = 1;
        for (int i = 0; i < D; ++i) n *= cells;
        return n;
    }

    std::array<std::int64_t, D> decode(std::int64_t idx) const {
        std::array<std::int64_t, D> c{};
        for (int i = D - 1; i >= 0; --i) {
            c[i] = idx % cells;
            idx /= cells;
        }
        return c;
    }

    std::int64_t encode(const std::array<std::int64_t, D>& c) const {
        std::int64_t idx = 0;
        for (int i = 0; i < D; ++i) idx = idx * cells + c[i];
        return idx;
    }

    bool in_range(const std::array<std::int64_t, D>& c) const {
        for (int i = 0; i < D; ++i)
            if (c[i] < 0 || c[i] >= cells) return false;
        return true;
    }

    std::array<std::int64_t, D> coords_of(const Pt<D>& x) const {
        std::array<std::int64_t, D> c{};
        for (int i = 0; i < D; ++i)
            c[i] = static_cast<std::int64_t>(std::floor((x[i] - origin) / pitch));
        return c;
    }

    std::int64_t box_of(const Pt<D>& x) const {
        auto c = coords_of(x);
        require(in_range(c), "grid: point outside the padded window");
        return encode(c);
    }

    Pt<D> low_corner(std::int64_t idx) const {
        auto c = decode(idx);
        Pt<D> p{};
        for (int i = 0; i < D; ++i) p[i] = origin + pitch * static_cast<double>(c[i]);
        return p;
    }

    Pt<D> center(std::int64_t idx) const {
        Pt<D> p = low_corner(idx);
        for (int i = 0; i < D; ++i) p[i] += 0.5 * pitch;
        return p;
    }

    /// Squared distance from a point to the closed box `idx`.
    double dist2_to_box(const Pt<D>& x, std::int64_t idx) const {
        const Pt<D> lo = low_corner(idx);
        double s = 0.0;
        for (int i = 0; i < D; ++i) {
            double d = 0.0;
            if (x[i] < lo[i]) d = lo[i] - x[i];
            else if (x[i] > lo[i] + pitch) d = x[i] - (lo[i] + pitch);
            s += d * d;
        }
        return s;
    }

    /// Distance bounds from the origin to the closed box, for sphere intersection tests.
    double min_dist_to_origin(std::int64_t idx) const { return std::sqrt(dist2_to_box(Pt<D>{}, idx)); }

    double max_dist_to_origin(std::int64_t idx) const {
        const Pt<D> lo = low_corner(idx);
        double s = 0.0;
        for (int i = 0; i < D; ++i) {
            const double far = std::max(std::abs(lo[i]), std::abs(lo[i] + pitch));
            s += far * far;
        }
        return std::sqrt(s);
    }
};

/// The complete non-overlapping box cover of the padded window.
template <int D>
EpsilonGrid<D> box_partition(const Window<D>& window, double eps) {
    require(eps > 0.0, "box_partition: pitch must be positive");
    const double extent = window.padded_extent();
    const double m_real = extent / eps;
    const auto m = static_cast<std::int64_t>(std::llround(m_real));
    require(m >= 1 && std::abs(m_real - static_cast<double>(m)) < 1e-9,
            "box_partition: pitch must divide the padded window extent");
    return EpsilonGrid<D>(eps, -window.padded_half(), m);
}

}  // namespace vperc
