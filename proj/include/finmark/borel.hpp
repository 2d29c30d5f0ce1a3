#pragma once

#include "finmark/rational.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace finmark
{
    // Exact rational in [0, 1).
    struct UnitValue
    {
        Rational value;

        explicit UnitValue(Rational v) : value(std::move(v))
        {
            if (value < 0 || value >= 1)
            {
                throw std::invalid_argument("UnitValue: value outside [0, 1)");
            }
        }

        bool operator==(const UnitValue &other) const { return value == other.value; }
    };

    // Finite alphabet with positive rational probabilities summing to one and
    // the cumulative ladder l_k used to peel digits off a unit value.
    class MarkDistribution
    {
    public:
        MarkDistribution(std::vector<std::string> symbols, std::vector<Rational> probs);

        std::size_t size() const { return probs_.size(); }
        const std::vector<std::string> &symbols() const { return symbols_; }
        const std::vector<Rational> &probs() const { return probs_; }
        // ladder()[k] = sum of probs below symbol k; ladder has size()+1
        // entries with ladder[0] = 0 and ladder[size()] = 1.
        const std::vector<Rational> &ladder() const { return ladder_; }

        std::int32_t index_of(const std::string &symbol) const;

    private:
        std::vector<std::string> symbols_;
        std::vector<Rational> probs_;
        std::vector<Rational> ladder_;
    };

    // One digit: the mark k with l_k <= u < l_{k+1} and the renormalized
    // remainder (u - l_k) / alpha_k.
    std::pair<std::int32_t, UnitValue> digit_step(const UnitValue &u, const MarkDistribution &dist);

    // k successive digit steps, most significant first.
    std::pair<UnitValue, std::vector<std::int32_t>> extract(const UnitValue &u, std::size_t k,
                                                            const MarkDistribution &dist);

    // Exact inverse of extract: folds marks back rightmost-innermost, so
    // inject(extract(u, k, dist)) == u for every rational u and every k.
    UnitValue inject(const UnitValue &residual, const std::vector<std::int32_t> &marks,
                     const MarkDistribution &dist);
}
