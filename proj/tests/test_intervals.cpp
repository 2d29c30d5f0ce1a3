#include "finmark/intervals.hpp"

#include <doctest.h>

#include <mpfr.h>

#include <string>

using namespace finmark;

namespace
{
    // High-precision oracle via MPFR (test-only).
    double as_double(const Rational &q) { return q.get_d(); }

    bool encloses_mpfr(const RatInterval &iv, const char *expr, const Rational &x)
    {
        mpfr_t v, lo, hi;
        mpfr_inits2(256, v, lo, hi, static_cast<mpfr_ptr>(nullptr));
        mpfr_set_q(v, x.get_mpq_t(), MPFR_RNDN);
        const std::string op(expr);
        if (op == "exp")
        {
            mpfr_exp(v, v, MPFR_RNDN);
        }
        else if (op == "log")
        {
            mpfr_log(v, v, MPFR_RNDN);
        }
        else if (op == "sqrt")
        {
            mpfr_sqrt(v, v, MPFR_RNDN);
        }
        else if (op == "erfc_sqrt")
        {
            mpfr_sqrt(v, v, MPFR_RNDN);
            mpfr_erfc(v, v, MPFR_RNDN);
        }
        mpfr_set_q(lo, iv.lo.get_mpq_t(), MPFR_RNDD);
        mpfr_set_q(hi, iv.hi.get_mpq_t(), MPFR_RNDU);
        const bool ok = mpfr_cmp(lo, v) <= 0 && mpfr_cmp(v, hi) <= 0;
        mpfr_clears(v, lo, hi, static_cast<mpfr_ptr>(nullptr));
        return ok;
    }
}

TEST_CASE("exp enclosures contain the true value and are tight")
{
    for (const char *s : {"0", "1", "-1", "13/7", "-130", "255/2", "1/1000000"})
    {
        const Rational x = parse_rational(s);
        const RatInterval iv = exp_of(x, 80);
        CHECK(encloses_mpfr(iv, "exp", x));
        CHECK(iv.width() <= abs_of(iv.hi) * pow2_neg(78));
    }
}

TEST_CASE("log enclosures")
{
    for (const char *s : {"1", "2", "1/2", "3", "1/3", "1000000", "7/5"})
    {
        const Rational x = parse_rational(s);
        const RatInterval iv = log_of(x, 80);
        CHECK(encloses_mpfr(iv, "log", x));
        CHECK(iv.width() <= pow2_neg(80));
    }
    // log 2 + log(1/2) = 0 certified
    const RatInterval sum = log_of(Rational(2), 80) + log_of(Rational(1, 2), 80);
    CHECK(sum.contains(Rational(0)));
}

TEST_CASE("sqrt and pi")
{
    for (const char *s : {"2", "1/2", "10000", "17/13"})
    {
        const Rational x = parse_rational(s);
        const RatInterval iv = sqrt_of(x, 100);
        CHECK(encloses_mpfr(iv, "sqrt", x));
        CHECK(iv.lo * iv.lo <= x);
        CHECK(iv.hi * iv.hi >= x);
    }
    const RatInterval pi = pi_interval(100);
    CHECK(pi.contains(parse_rational("314159265358979323846/100000000000000000000")) == false);
    CHECK(as_double(pi.lo) == doctest::Approx(3.14159265358979).epsilon(1e-12));
}

TEST_CASE("erfc_sqrt on both series branches")
{
    for (const char *s : {"1/10", "1", "4", "9", "24", "26", "50", "200"})
    {
        const Rational x = parse_rational(s);
        const RatInterval iv = erfc_sqrt(x, 60);
        CHECK(encloses_mpfr(iv, "erfc_sqrt", x));
        CHECK(iv.lo >= 0);
        CHECK(iv.hi <= 1);
    }
}

TEST_CASE("poisson cdf/pmf against direct evaluation")
{
    const Rational lambda(1);
    const RatInterval p0 = poisson_pmf(0, lambda, 80);
    const RatInterval inv_e = inverse(exp_of(Rational(1), 80));
    CHECK(p0.lo <= inv_e.hi);
    CHECK(p0.hi >= inv_e.lo);
    RatInterval total(Rational(0), Rational(0));
    for (unsigned long k = 0; k <= 40; ++k)
    {
        total = total + poisson_pmf(k, lambda, 80);
    }
    CHECK(total.hi >= 1);
    CHECK(total.lo > Rational(99999, 100000));
    const RatInterval c3 = poisson_cdf(3, lambda, 80);
    CHECK(as_double(c3.lo) == doctest::Approx(0.98101184312).epsilon(1e-9));
}

TEST_CASE("chi-square upper tail matches known values")
{
    // Q(x; df=1) at x=3.841458... is 0.05
    const RatInterval p1 = chi_square_upper(RatInterval::point(parse_rational("3841459/1000000")), 1, 60);
    CHECK(as_double(p1.lo) == doctest::Approx(0.05).epsilon(1e-4));
    // Q(x; df=6) at x=12.591587... is 0.05
    const RatInterval p6 = chi_square_upper(RatInterval::point(parse_rational("12591587/1000000")), 6, 60);
    CHECK(as_double(p6.lo) == doctest::Approx(0.05).epsilon(1e-4));
    // df=2 closed form: Q = exp(-x/2)
    const RatInterval p2 = chi_square_upper(RatInterval::point(Rational(2)), 2, 80);
    CHECK(encloses_mpfr(p2, "exp", Rational(-1)));
}

TEST_CASE("kolmogorov upper tail matches known values")
{
    // Q(z) at z = 1.3581 is ~0.05, parameterised by z^2
    const Rational z = parse_rational("13581/10000");
    const RatInterval q = kolmogorov_upper(RatInterval::point(z * z), 60);
    CHECK(as_double(q.lo) == doctest::Approx(0.05).epsilon(2e-3));
    const RatInterval q1 = kolmogorov_upper(RatInterval::point(Rational(1)), 60);
    CHECK(as_double(q1.lo) == doctest::Approx(0.26999967).epsilon(1e-5));
}

TEST_CASE("exponential cdf")
{
    const RatInterval c = exponential_cdf(Rational(1), Rational(1), 80);
    const RatInterval expected = Rational(1) - inverse(exp_of(Rational(1), 80));
    CHECK(c.lo <= expected.hi);
    CHECK(c.hi >= expected.lo);
    CHECK(exponential_cdf(Rational(0), Rational(2), 40).hi == 0);
}
