#include "finmark/borel.hpp"

#include "finmark/errors.hpp"

#include <algorithm>

namespace finmark
{
    MarkDistribution::MarkDistribution(std::vector<std::string> symbols, std::vector<Rational> probs)
        : symbols_(std::move(symbols)), probs_(std::move(probs))
    {
        if (probs_.empty())
        {
            throw std::invalid_argument("MarkDistribution: empty alphabet");
        }
        if (symbols_.size() != probs_.size())
        {
            throw std::invalid_argument("MarkDistribution: symbols and probabilities differ in length");
        }
        for (std::size_t i = 0; i < symbols_.size(); ++i)
        {
            if (symbols_[i].empty())
            {
                throw std::invalid_argument("MarkDistribution: empty symbol");
            }
            for (std::size_t j = i + 1; j < symbols_.size(); ++j)
            {
                if (symbols_[i] == symbols_[j])
                {
                    throw std::invalid_argument("MarkDistribution: duplicate symbol '" + symbols_[i] + "'");
                }
            }
        }
        ladder_.reserve(probs_.size() + 1);
        ladder_.push_back(Rational(0));
        for (const Rational &p : probs_)
        {
            if (p <= 0)
            {
                throw std::invalid_argument("MarkDistribution: probabilities must be positive");
            }
            ladder_.push_back(ladder_.back() + p);
        }
        if (ladder_.back() != 1)
        {
            throw std::invalid_argument("MarkDistribution: probabilities must sum to 1");
        }
    }

    std::int32_t MarkDistribution::index_of(const std::string &symbol) const
    {
        const auto it = std::find(symbols_.begin(), symbols_.end(), symbol);
        if (it == symbols_.end())
        {
            throw AlphabetMismatch("unknown mark symbol '" + symbol + "'");
        }
        return static_cast<std::int32_t>(it - symbols_.begin());
    }

    std::pair<std::int32_t, UnitValue> digit_step(const UnitValue &u, const MarkDistribution &dist)
    {
        const auto &ladder = dist.ladder();
        // largest k with ladder[k] <= u (the intervals I_k are half-open)
        std::size_t lo = 0;
        std::size_t hi = dist.size() - 1;
        while (lo < hi)
        {
            const std::size_t mid = (lo + hi + 1) / 2;
            if (ladder[mid] <= u.value)
            {
                lo = mid;
            }
            else
            {
                hi = mid - 1;
            }
        }
        Rational residual = (u.value - ladder[lo]) / dist.probs()[lo];
        residual.canonicalize();
        return {static_cast<std::int32_t>(lo), UnitValue(std::move(residual))};
    }

    // extract and inject run on raw numerator/denominator pairs and reduce
    // only once at the end; per-step mpq canonicalization would dominate the
    // whole transform on high-precision inputs.
    std::pair<UnitValue, std::vector<std::int32_t>> extract(const UnitValue &u, std::size_t k,
                                                            const MarkDistribution &dist)
    {
        Integer num = u.value.get_num();
        Integer den = u.value.get_den();
        std::vector<std::int32_t> marks;
        marks.reserve(k);
        const auto &ladder = dist.ladder();
        const auto &probs = dist.probs();
        Integer lhs, rhs;
        for (std::size_t step = 0; step < k; ++step)
        {
            // largest j with ladder[j] <= num/den
            std::size_t lo = 0;
            std::size_t hi = dist.size() - 1;
            while (lo < hi)
            {
                const std::size_t mid = (lo + hi + 1) / 2;
                lhs = ladder[mid].get_num() * den;
                rhs = num * ladder[mid].get_den();
                if (lhs <= rhs)
                {
                    lo = mid;
                }
                else
                {
                    hi = mid - 1;
                }
            }
            marks.push_back(static_cast<std::int32_t>(lo));
            // residual = (num/den - c/d) / (p/q) = (num*d - c*den) * q / (den*d*p)
            const Integer &c = ladder[lo].get_num();
            const Integer &d = ladder[lo].get_den();
            const Integer &p = probs[lo].get_num();
            const Integer &q = probs[lo].get_den();
            num = (num * d - c * den) * q;
            den = den * d * p;
        }
        Rational residual(num, den);
        residual.canonicalize();
        return {UnitValue(std::move(residual)), std::move(marks)};
    }

    UnitValue inject(const UnitValue &residual, const std::vector<std::int32_t> &marks,
                     const MarkDistribution &dist)
    {
        Integer num = residual.value.get_num();
        Integer den = residual.value.get_den();
        const auto &ladder = dist.ladder();
        const auto &probs = dist.probs();
        for (auto it = marks.rbegin(); it != marks.rend(); ++it)
        {
            const std::int32_t m = *it;
            if (m < 0 || static_cast<std::size_t>(m) >= dist.size())
            {
                throw AlphabetMismatch("inject: mark index outside alphabet");
            }
            const auto j = static_cast<std::size_t>(m);
            // u <- c/d + (p/q) u = (c*q*den + d*p*num) / (d*q*den)
            const Integer &c = ladder[j].get_num();
            const Integer &d = ladder[j].get_den();
            const Integer &p = probs[j].get_num();
            const Integer &q = probs[j].get_den();
            num = c * q * den + d * p * num;
            den = d * q * den;
        }
        Rational u(num, den);
        u.canonicalize();
        return UnitValue(std::move(u));
    }
}
