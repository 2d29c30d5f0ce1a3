#include "finmark/stats.hpp"

#include <algorithm>
#include <numeric>

namespace finmark
{
    namespace
    {
        RatInterval square(const RatInterval &a)
        {
            if (a.lo >= 0)
            {
                return {a.lo * a.lo, a.hi * a.hi};
            }
            if (a.hi <= 0)
            {
                return {a.hi * a.hi, a.lo * a.lo};
            }
            return {Rational(0), std::max<Rational>(a.lo * a.lo, a.hi * a.hi)};
        }

        // Settle pass/fail of "p >= alpha" by refining the p-value enclosure.
        void decide(GofResult &result, unsigned long df, const Rational &alpha,
                    bool use_kolmogorov)
        {
            result.df = df;
            for (unsigned long bits = 96; bits <= 3072; bits *= 2)
            {
                result.p_value = use_kolmogorov ? kolmogorov_upper(result.statistic, bits)
                                                : chi_square_upper(result.statistic, df, bits);
                if (result.p_value.lo >= alpha)
                {
                    result.decided = true;
                    result.pass = true;
                    return;
                }
                if (result.p_value.hi < alpha)
                {
                    result.decided = true;
                    result.pass = false;
                    return;
                }
            }
            result.decided = false;
            result.pass = false;
        }
    }

    GofResult chi_square_gof(std::string name, const std::vector<std::size_t> &counts,
                             const std::vector<Rational> &probs, const Rational &alpha)
    {
        std::vector<RatInterval> boxed;
        boxed.reserve(probs.size());
        for (const Rational &p : probs)
        {
            boxed.push_back(RatInterval::point(p));
        }
        GofResult result = chi_square_gof_interval(std::move(name), counts, boxed, alpha);
        return result;
    }

    GofResult chi_square_gof_interval(std::string name, const std::vector<std::size_t> &counts,
                                      const std::vector<RatInterval> &probs, const Rational &alpha)
    {
        if (counts.size() != probs.size() || counts.size() < 2)
        {
            throw std::invalid_argument("chi_square_gof: need matching counts/probs with >= 2 cells");
        }
        GofResult result;
        result.name = std::move(name);
        const std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
        result.sample_size = n;
        const Rational total(static_cast<unsigned long>(n));
        RatInterval stat(Rational(0), Rational(0));
        for (std::size_t i = 0; i < counts.size(); ++i)
        {
            if (probs[i].lo <= 0)
            {
                throw std::invalid_argument("chi_square_gof: nonpositive cell probability");
            }
            const RatInterval expected = total * probs[i];
            const RatInterval diff = Rational(static_cast<unsigned long>(counts[i])) - expected;
            stat = stat + square(diff) / expected;
        }
        result.statistic = stat;
        decide(result, static_cast<unsigned long>(counts.size() - 1), alpha, false);
        return result;
    }

    std::vector<RatInterval> poisson_bucket_probs(const Rational &lambda, std::size_t tail_from,
                                                  unsigned long bits)
    {
        std::vector<RatInterval> probs;
        probs.reserve(tail_from + 1);
        for (std::size_t k = 0; k < tail_from; ++k)
        {
            probs.push_back(poisson_pmf(static_cast<unsigned long>(k), lambda, bits));
        }
        const RatInterval head = poisson_cdf(static_cast<unsigned long>(tail_from) - 1, lambda, bits);
        RatInterval tail = Rational(1) - head;
        tail.lo = std::max(tail.lo, Rational(0));
        probs.push_back(tail);
        return probs;
    }

    GofResult chi_square_independence(std::string name,
                                      const std::vector<std::vector<std::size_t>> &table,
                                      const Rational &alpha)
    {
        GofResult result;
        result.name = std::move(name);
        std::vector<std::size_t> row_sum(table.size(), 0);
        std::vector<std::size_t> col_sum(table.empty() ? 0 : table.front().size(), 0);
        std::size_t n = 0;
        for (std::size_t r = 0; r < table.size(); ++r)
        {
            if (table[r].size() != col_sum.size())
            {
                throw std::invalid_argument("chi_square_independence: ragged table");
            }
            for (std::size_t c = 0; c < table[r].size(); ++c)
            {
                row_sum[r] += table[r][c];
                col_sum[c] += table[r][c];
                n += table[r][c];
            }
        }
        std::vector<std::size_t> rows, cols;
        for (std::size_t r = 0; r < row_sum.size(); ++r)
        {
            if (row_sum[r] > 0)
            {
                rows.push_back(r);
            }
        }
        for (std::size_t c = 0; c < col_sum.size(); ++c)
        {
            if (col_sum[c] > 0)
            {
                cols.push_back(c);
            }
        }
        if (rows.size() < 2 || cols.size() < 2 || n == 0)
        {
            throw std::invalid_argument("chi_square_independence: degenerate table");
        }
        result.sample_size = n;
        Rational stat(0);
        const Rational total(static_cast<unsigned long>(n));
        for (const std::size_t r : rows)
        {
            for (const std::size_t c : cols)
            {
                const Rational expected =
                    Rational(static_cast<unsigned long>(row_sum[r])) *
                    Rational(static_cast<unsigned long>(col_sum[c])) / total;
                const Rational diff = Rational(static_cast<unsigned long>(table[r][c])) - expected;
                stat += diff * diff / expected;
            }
        }
        result.statistic = RatInterval::point(stat);
        decide(result, static_cast<unsigned long>((rows.size() - 1) * (cols.size() - 1)), alpha, false);
        return result;
    }

    namespace
    {
        // Stephens' small-sample correction: z = D (sqrt(n) + 0.12 + 0.11/sqrt(n)).
        RatInterval kolmogorov_z_sq(const RatInterval &d, std::size_t n, unsigned long bits)
        {
            const RatInterval sqrt_n = sqrt_of(Rational(static_cast<unsigned long>(n)), bits);
            const RatInterval factor =
                sqrt_n + RatInterval::point(Rational(12, 100)) +
                RatInterval::point(Rational(11, 100)) * inverse(sqrt_n);
            return square(d) * square(factor);
        }
    }

    GofResult ks_uniform(std::string name, std::vector<Rational> samples, const Rational &lo,
                         const Rational &hi, const Rational &alpha)
    {
        if (samples.size() < 8)
        {
            throw std::invalid_argument("ks_uniform: sample too small");
        }
        GofResult result;
        result.name = std::move(name);
        result.sample_size = samples.size();
        std::sort(samples.begin(), samples.end());
        const Rational span = hi - lo;
        const Rational n(static_cast<unsigned long>(samples.size()));
        Rational d(0);
        for (std::size_t i = 0; i < samples.size(); ++i)
        {
            const Rational f = (samples[i] - lo) / span;
            if (f < 0 || f > 1)
            {
                throw std::invalid_argument("ks_uniform: sample outside [lo, hi]");
            }
            const Rational upper = Rational(static_cast<unsigned long>(i + 1)) / n - f;
            const Rational lower = f - Rational(static_cast<unsigned long>(i)) / n;
            d = std::max({d, upper, lower});
        }
        result.statistic = kolmogorov_z_sq(RatInterval::point(d), samples.size(), 128);
        decide(result, 0, alpha, true);
        return result;
    }

    GofResult ks_exponential(std::string name, std::vector<Rational> samples, const Rational &rate,
                             const Rational &alpha)
    {
        if (samples.size() < 8)
        {
            throw std::invalid_argument("ks_exponential: sample too small");
        }
        GofResult result;
        result.name = std::move(name);
        result.sample_size = samples.size();
        std::sort(samples.begin(), samples.end());
        const Rational n(static_cast<unsigned long>(samples.size()));
        RatInterval d(Rational(0), Rational(0));
        for (std::size_t i = 0; i < samples.size(); ++i)
        {
            const RatInterval f = exponential_cdf(samples[i], rate, 96);
            const Rational ecdf_hi = Rational(static_cast<unsigned long>(i + 1)) / n;
            const Rational ecdf_lo = Rational(static_cast<unsigned long>(i)) / n;
            const RatInterval upper = ecdf_hi - f;
            const RatInterval lower = f - ecdf_lo;
            d = RatInterval{std::max({d.lo, upper.lo, lower.lo}), std::max({d.hi, upper.hi, lower.hi})};
        }
        result.statistic = kolmogorov_z_sq(d, samples.size(), 128);
        decide(result, 0, alpha, true);
        return result;
    }
}
