#pragma once

#include <gmpxx.h>

#include <optional>
#include <stdexcept>
#include <string>

namespace finmark
{
    // Every coordinate, probability and test statistic in this library is an
    // exact rational; the only approximate quantities are the certified
    // interval enclosures in intervals.hpp.
    using Rational = mpq_class;
    using Integer = mpz_class;

    inline Rational make_rational(long num, long den = 1)
    {
        Rational q(num, den);
        q.canonicalize();
        return q;
    }

    // Parses "7", "-3/4", "12/8" (reduced on the way in).
    inline Rational parse_rational(const std::string &text)
    {
        if (text.empty())
        {
            throw std::invalid_argument("parse_rational: empty string");
        }
        Rational q;
        if (q.set_str(text, 10) != 0)
        {
            throw std::invalid_argument("parse_rational: malformed rational '" + text + "'");
        }
        q.canonicalize();
        if (q.get_den() == 0)
        {
            throw std::invalid_argument("parse_rational: zero denominator in '" + text + "'");
        }
        return q;
    }

    // Prints as "n" when integral, else "n/d".
    inline std::string to_string(const Rational &q)
    {
        return q.get_str();
    }

    inline Integer floor_of(const Rational &q)
    {
        Integer r;
        mpz_fdiv_q(r.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
        return r;
    }

    inline Integer ceil_of(const Rational &q)
    {
        Integer r;
        mpz_cdiv_q(r.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
        return r;
    }

    // 2^-bits as an exact rational.
    inline Rational pow2_neg(unsigned long bits)
    {
        Integer den = 1;
        den <<= bits;
        return Rational(1, den);
    }

    inline Rational abs_of(const Rational &q)
    {
        return q < 0 ? Rational(-q) : q;
    }
}
