#pragma once

#include "finmark/rational.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace finmark
{
    // Counter-based generator: word(i) is a pure function of (seed, stream, i),
    // so any draw can be reproduced without replaying the ones before it and
    // independent streams can be handed to concurrent trials. The mixer is
    // SplitMix64 (Steele, Lea, Flood 2014).
    inline std::uint64_t splitmix64(std::uint64_t x)
    {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    class RandomStream
    {
    public:
        RandomStream(std::uint64_t seed, std::uint64_t stream)
            : base_(splitmix64(splitmix64(seed) ^ (0x510e527fade682d1ULL + stream)))
        {
        }

        std::uint64_t next_word()
        {
            return splitmix64(base_ + counter_++);
        }

        // Uniform integer in [0, 2^bits).
        Integer next_bits(unsigned long bits)
        {
            const unsigned long words = (bits + 63) / 64;
            std::array<std::uint64_t, 64> stack_buf;
            std::vector<std::uint64_t> heap_buf;
            std::uint64_t *buf = stack_buf.data();
            if (words > stack_buf.size())
            {
                heap_buf.resize(words);
                buf = heap_buf.data();
            }
            for (unsigned long i = 0; i < words; ++i)
            {
                buf[i] = next_word();
            }
            const unsigned long excess = words * 64 - bits;
            if (excess > 0)
            {
                buf[0] >>= excess; // most significant word first
            }
            Integer value;
            mpz_import(value.get_mpz_t(), words, 1, sizeof(std::uint64_t), 0, 0, buf);
            return value;
        }

        // Unbiased uniform integer in [0, n) by rejection on the bit length.
        Integer next_below(const Integer &n)
        {
            if (n <= 0)
            {
                throw std::invalid_argument("RandomStream::next_below: n must be positive");
            }
            const unsigned long bits = mpz_sizeinbase(n.get_mpz_t(), 2);
            while (true)
            {
                Integer candidate = next_bits(bits);
                if (candidate < n)
                {
                    return candidate;
                }
            }
        }

        // Uniform dyadic rational k/2^bits in [0, 1).
        Rational next_unit(unsigned long bits)
        {
            Rational u(next_bits(bits), Integer(1) << bits);
            u.canonicalize();
            return u;
        }

    private:
        std::uint64_t base_;
        std::uint64_t counter_ = 0;
    };

    // Stable stream ids for the different consumers of one seed.
    namespace streams
    {
        inline constexpr std::uint64_t kPoissonCount = 1;
        inline constexpr std::uint64_t kPoissonPositions = 2;
        inline constexpr std::uint64_t kCellBase = 3;
        inline constexpr std::uint64_t kSkeleton = 4;
        inline constexpr std::uint64_t kShift = 5;
        inline constexpr std::uint64_t kAdversary = 6;
        inline constexpr std::uint64_t kBorel = 7;
    }
}
