#pragma once

#include "finmark/rational.hpp"

namespace finmark
{
    // Certified enclosure of a real number. Endpoints are exact rationals, so
    // interval arithmetic itself introduces no rounding; width comes only
    // from series truncation (with proven remainder bounds) and deliberate
    // endpoint compression.
    struct RatInterval
    {
        Rational lo;
        Rational hi;

        RatInterval() = default;
        RatInterval(Rational l, Rational h) : lo(std::move(l)), hi(std::move(h))
        {
            if (lo > hi)
            {
                throw std::invalid_argument("RatInterval: lo > hi");
            }
        }

        static RatInterval point(const Rational &v) { return RatInterval(v, v); }

        Rational width() const { return hi - lo; }
        Rational mid() const { return (lo + hi) / 2; }
        bool contains(const Rational &v) const { return lo <= v && v <= hi; }
    };

    RatInterval operator+(const RatInterval &a, const RatInterval &b);
    RatInterval operator-(const RatInterval &a, const RatInterval &b);
    RatInterval operator*(const RatInterval &a, const RatInterval &b);
    RatInterval operator*(const Rational &a, const RatInterval &b);
    RatInterval operator+(const Rational &a, const RatInterval &b);
    RatInterval operator-(const Rational &a, const RatInterval &b);
    RatInterval operator*(const RatInterval &a, const Rational &b);
    RatInterval operator+(const RatInterval &a, const Rational &b);
    RatInterval operator-(const RatInterval &a, const Rational &b);

    // Divisor interval must not contain zero.
    RatInterval inverse(const RatInterval &a);
    RatInterval operator/(const RatInterval &a, const RatInterval &b);

    // Rounds endpoints outward onto a dyadic grid with ~rel_bits significant
    // bits. Keeps the exact-rational representation of long computations from
    // ballooning. Positive intervals only; others are returned unchanged.
    RatInterval compress(const RatInterval &a, unsigned long rel_bits);

    // floor(log2(q)) for q > 0.
    long floor_log2(const Rational &q);

    // e^x with relative half-width at most 2^-bits.
    RatInterval exp_of(const Rational &x, unsigned long bits);

    // Natural log of x > 0; absolute width at most 2^-bits.
    RatInterval log_of(const Rational &x, unsigned long bits);

    // Square root of x >= 0; absolute width at most 2^-bits.
    RatInterval sqrt_of(const Rational &x, unsigned long bits);

    RatInterval pi_interval(unsigned long bits);

    // erfc(sqrt(x)) for x >= 0.
    RatInterval erfc_sqrt(const Rational &x, unsigned long bits);

    // P(Poisson(lambda) <= k).
    RatInterval poisson_cdf(unsigned long k, const Rational &lambda, unsigned long bits);

    // P(Poisson(lambda) = k).
    RatInterval poisson_pmf(unsigned long k, const Rational &lambda, unsigned long bits);

    // Upper tail of the chi-square distribution with df degrees of freedom,
    // evaluated over an interval-valued statistic.
    RatInterval chi_square_upper(const RatInterval &stat, unsigned long df, unsigned long bits);

    // Kolmogorov limiting upper tail Q(z) = 2 sum_k (-1)^{k-1} exp(-2 k^2 z^2),
    // parameterised by z^2 so no square root of the statistic is needed.
    RatInterval kolmogorov_upper(const RatInterval &z_sq, unsigned long bits);

    // P(Exp(rate) <= x) = 1 - e^{-rate x}.
    RatInterval exponential_cdf(const Rational &x, const Rational &rate, unsigned long bits);
}
