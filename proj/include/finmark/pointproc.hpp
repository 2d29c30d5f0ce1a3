#pragma once

#include "finmark/rational.hpp"
#include "finmark/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace finmark
{
    struct Window
    {
        Rational lo;
        Rational hi;

        Window(Rational l, Rational h) : lo(std::move(l)), hi(std::move(h))
        {
            if (lo >= hi)
            {
                throw std::invalid_argument("Window: degenerate window (lo >= hi)");
            }
        }

        Rational length() const { return hi - lo; }
        bool contains(const Rational &p) const { return lo <= p && p <= hi; }
        bool contains(const Window &w) const { return lo <= w.lo && w.hi <= hi; }
        bool operator==(const Window &other) const { return lo == other.lo && hi == other.hi; }
    };

    // Simple point measure restricted to a finite window: strictly increasing
    // exact positions, no multiplicities.
    struct PointConfiguration
    {
        Window window;
        std::vector<Rational> points;

        void validate() const;
        bool operator==(const PointConfiguration &other) const
        {
            return window == other.window && points == other.points;
        }
    };

    // Marks are indices into a MarkDistribution alphabet; kNoMark tags points
    // outside a transform's core region.
    inline constexpr std::int32_t kNoMark = -1;

    struct MarkedConfiguration
    {
        PointConfiguration base;
        std::vector<std::int32_t> marks;
        std::optional<std::size_t> origin_index;

        void validate() const;
        bool operator==(const MarkedConfiguration &other) const
        {
            return base == other.base && marks == other.marks && origin_index == other.origin_index;
        }
    };

    // Index of the largest non-positive point, if any.
    std::optional<std::size_t> origin_index_of(const std::vector<Rational> &points);

    // Poisson(lambda) count by inversion of one dyadic uniform against
    // certified CDF enclosures.
    unsigned long poisson_count(const Rational &lambda, RandomStream &stream, unsigned long precision);

    // Count-then-conditionally-uniform sampler: N ~ Poisson(rate * |window|)
    // by inversion, then N points uniform on the window's dyadic grid with
    // `precision` fractional bits, sorted. Deterministic per (seed, precision).
    PointConfiguration sample_poisson(const Rational &rate, const Window &window,
                                      std::uint64_t seed, unsigned long precision);

    // Same law, but seeded per unit cell [m, m+1) so that enlarging the window
    // extends a sample instead of replacing it. Used wherever a window may
    // need to grow (coding-window measurement).
    PointConfiguration sample_poisson_cells(const Rational &rate, long cell_lo, long cell_hi,
                                            std::uint64_t seed, unsigned long precision);

    PointConfiguration translate(const PointConfiguration &config, const Rational &t);
    MarkedConfiguration translate_marked(const MarkedConfiguration &mc, const Rational &t);

    // Keeps the points inside `interval` (closed); the window becomes it.
    PointConfiguration restrict_to(const PointConfiguration &config, const Window &interval);

    // CSV round trip. Positions are written as exact rationals
    // ("numerator/denominator" or plain integers); the window travels in a
    // leading "# window lo hi" line, origin in "# origin_index k".
    void write_points_csv(std::ostream &out, const PointConfiguration &config);
    PointConfiguration read_points_csv(std::istream &in);
    void write_marked_csv(std::ostream &out, const MarkedConfiguration &mc,
                          const std::vector<std::string> &symbols);
    MarkedConfiguration read_marked_csv(std::istream &in, const std::vector<std::string> &symbols);
}
