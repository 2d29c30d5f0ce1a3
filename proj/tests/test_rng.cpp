#include "finmark/rng.hpp"

#include <doctest.h>

using namespace finmark;

TEST_CASE("streams are deterministic and independent")
{
    RandomStream a(42, 1);
    RandomStream b(42, 1);
    RandomStream c(42, 2);
    bool all_equal = true;
    bool any_differ = false;
    for (int i = 0; i < 100; ++i)
    {
        const auto wa = a.next_word();
        all_equal = all_equal && wa == b.next_word();
        any_differ = any_differ || wa != c.next_word();
    }
    CHECK(all_equal);
    CHECK(any_differ);
}

TEST_CASE("next_bits produces values in range with full width")
{
    RandomStream s(7, 3);
    bool top_bit_seen = false;
    for (int i = 0; i < 64; ++i)
    {
        const Integer v = s.next_bits(129);
        CHECK(v >= 0);
        CHECK(v < (Integer(1) << 129));
        if (v >= (Integer(1) << 128))
        {
            top_bit_seen = true;
        }
    }
    CHECK(top_bit_seen);
}

TEST_CASE("next_below is within bounds and hits both halves")
{
    RandomStream s(9, 4);
    const Integer n(1000);
    int low = 0;
    int high = 0;
    for (int i = 0; i < 200; ++i)
    {
        const Integer v = s.next_below(n);
        CHECK(v >= 0);
        CHECK(v < n);
        (v < 500 ? low : high) += 1;
    }
    CHECK(low > 0);
    CHECK(high > 0);
}

TEST_CASE("next_unit is a dyadic rational in [0,1)")
{
    RandomStream s(11, 5);
    for (int i = 0; i < 32; ++i)
    {
        const Rational u = s.next_unit(64);
        CHECK(u >= 0);
        CHECK(u < 1);
        // denominator is a power of two after canonicalization
        Integer den = u.get_den();
        while (den % 2 == 0)
        {
            den /= 2;
        }
        CHECK(den == 1);
    }
}
