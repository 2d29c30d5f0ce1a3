#pragma once

#include "finmark/intervals.hpp"

#include <string>
#include <vector>

namespace finmark
{
    // One goodness-of-fit or independence test. Statistics are exact
    // rationals whenever the null is rational; otherwise they are certified
    // enclosures, like every p-value here.
    struct GofResult
    {
        std::string name;
        RatInterval statistic{Rational(0), Rational(0)};
        RatInterval p_value{Rational(0), Rational(1)};
        std::size_t sample_size = 0;
        unsigned long df = 0;
        bool decided = false;
        bool pass = false;
    };

    // Pearson chi-square against exact rational cell probabilities.
    GofResult chi_square_gof(std::string name, const std::vector<std::size_t> &counts,
                             const std::vector<Rational> &probs, const Rational &alpha);

    // Same with interval-valued cell probabilities (Poisson buckets).
    GofResult chi_square_gof_interval(std::string name, const std::vector<std::size_t> &counts,
                                      const std::vector<RatInterval> &probs, const Rational &alpha);

    // Bucket probabilities {P(N=0), ..., P(N=tail_from-1), P(N>=tail_from)}.
    std::vector<RatInterval> poisson_bucket_probs(const Rational &lambda, std::size_t tail_from,
                                                  unsigned long bits);

    // Two-way contingency test of independence; all-zero rows/columns are
    // dropped before computing expectations.
    GofResult chi_square_independence(std::string name,
                                      const std::vector<std::vector<std::size_t>> &table,
                                      const Rational &alpha);

    // Kolmogorov-Smirnov with the exact rational uniform CDF on [lo, hi].
    GofResult ks_uniform(std::string name, std::vector<Rational> samples, const Rational &lo,
                         const Rational &hi, const Rational &alpha);

    // Kolmogorov-Smirnov against Exp(rate) via certified CDF enclosures.
    GofResult ks_exponential(std::string name, std::vector<Rational> samples, const Rational &rate,
                             const Rational &alpha);
}
