#include "finmark/intervals.hpp"

#include <algorithm>
#include <array>

namespace finmark
{
    RatInterval operator+(const RatInterval &a, const RatInterval &b)
    {
        return {a.lo + b.lo, a.hi + b.hi};
    }

    RatInterval operator-(const RatInterval &a, const RatInterval &b)
    {
        return {a.lo - b.hi, a.hi - b.lo};
    }

    RatInterval operator*(const RatInterval &a, const RatInterval &b)
    {
        const std::array<Rational, 4> p = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
        return {*std::min_element(p.begin(), p.end()), *std::max_element(p.begin(), p.end())};
    }

    RatInterval operator*(const Rational &a, const RatInterval &b)
    {
        if (a >= 0)
        {
            return {a * b.lo, a * b.hi};
        }
        return {a * b.hi, a * b.lo};
    }

    RatInterval operator+(const Rational &a, const RatInterval &b)
    {
        return {a + b.lo, a + b.hi};
    }

    RatInterval operator-(const Rational &a, const RatInterval &b)
    {
        return {a - b.hi, a - b.lo};
    }

    RatInterval operator*(const RatInterval &a, const Rational &b)
    {
        return b * a;
    }

    RatInterval operator+(const RatInterval &a, const Rational &b)
    {
        return b + a;
    }

    RatInterval operator-(const RatInterval &a, const Rational &b)
    {
        return {a.lo - b, a.hi - b};
    }

    RatInterval inverse(const RatInterval &a)
    {
        if (a.lo <= 0 && a.hi >= 0)
        {
            throw std::domain_error("RatInterval inverse: interval contains zero");
        }
        return {1 / a.hi, 1 / a.lo};
    }

    RatInterval operator/(const RatInterval &a, const RatInterval &b)
    {
        return a * inverse(b);
    }

    long floor_log2(const Rational &q)
    {
        if (q <= 0)
        {
            throw std::domain_error("floor_log2: argument must be positive");
        }
        const long nb = static_cast<long>(mpz_sizeinbase(q.get_num().get_mpz_t(), 2));
        const long db = static_cast<long>(mpz_sizeinbase(q.get_den().get_mpz_t(), 2));
        long e = nb - db; // within 1 of the truth; fix up below
        Rational p;
        auto pow2 = [](long k)
        {
            Rational r;
            if (k >= 0)
            {
                r = Rational(Integer(1) << k, 1);
            }
            else
            {
                r = Rational(1, Integer(1) << (-k));
            }
            return r;
        };
        while (pow2(e) > q)
        {
            --e;
        }
        while (pow2(e + 1) <= q)
        {
            ++e;
        }
        return e;
    }

    RatInterval compress(const RatInterval &a, unsigned long rel_bits)
    {
        if (a.lo <= 0)
        {
            return a;
        }
        const long e = floor_log2(a.hi);
        const long shift = static_cast<long>(rel_bits) - e;
        Rational scale; // 2^shift
        if (shift >= 0)
        {
            scale = Rational(Integer(1) << shift, 1);
        }
        else
        {
            scale = Rational(1, Integer(1) << (-shift));
        }
        const Integer lo_grid = floor_of(a.lo * scale);
        const Integer hi_grid = ceil_of(a.hi * scale);
        Rational lo = Rational(lo_grid, 1) / scale;
        Rational hi = Rational(hi_grid, 1) / scale;
        lo.canonicalize();
        hi.canonicalize();
        return {lo, hi};
    }

    namespace
    {
        // e^f for rational f in [0, 1], absolute remainder bound.
        RatInterval exp_unit(const Rational &f, const Rational &tol)
        {
            Rational term = 1;
            Rational sum = 1;
            unsigned long k = 0;
            while (true)
            {
                ++k;
                term *= f;
                term /= static_cast<unsigned long>(k);
                sum += term;
                // tail <= term * f/(k+1) * 1/(1 - f/(k+2)) <= 2 term for k >= 1
                Rational tail = term * 2;
                if (k >= 2 && tail < tol)
                {
                    return {sum, sum + tail};
                }
                if (k > 10000)
                {
                    throw std::runtime_error("exp_unit: series failed to converge");
                }
            }
        }

        RatInterval pow_compress(RatInterval base, unsigned long n, unsigned long work_bits)
        {
            RatInterval result = RatInterval::point(1);
            while (n > 0)
            {
                if (n & 1UL)
                {
                    result = compress(result * base, work_bits);
                }
                n >>= 1;
                if (n > 0)
                {
                    base = compress(base * base, work_bits);
                }
            }
            return result;
        }

        // atanh(1/m) for integer m >= 2, absolute tolerance.
        RatInterval atanh_inv(unsigned long m, const Rational &tol)
        {
            const Rational y(1, m);
            const Rational y2 = y * y;
            Rational power = y;
            Rational sum = y;
            unsigned long k = 0;
            while (true)
            {
                ++k;
                power *= y2;
                const Rational term = power / (2 * k + 1);
                sum += term;
                // tail <= term * y^2 / (1 - y^2)
                const Rational tail = term * y2 / (1 - y2);
                if (tail < tol)
                {
                    return {sum, sum + tail};
                }
            }
        }

        // atan(1/m), alternating series, absolute tolerance.
        RatInterval atan_inv(unsigned long m, const Rational &tol)
        {
            const Rational y(1, m);
            const Rational y2 = y * y;
            Rational power = y;
            Rational sum = y;
            unsigned long k = 0;
            int sign = 1;
            while (true)
            {
                ++k;
                sign = -sign;
                power *= y2;
                const Rational term = power / (2 * k + 1);
                sum += sign > 0 ? term : -term;
                const Rational next = term * y2; // bound on the following term
                if (next < tol)
                {
                    if (sign > 0)
                    {
                        return {sum - next, sum};
                    }
                    return {sum, sum + next};
                }
            }
        }
    }

    RatInterval exp_of(const Rational &x, unsigned long bits)
    {
        if (x < 0)
        {
            return inverse(exp_of(Rational(-x), bits));
        }
        const Integer n_z = floor_of(x);
        if (n_z > 1000000)
        {
            throw std::domain_error("exp_of: exponent too large");
        }
        const unsigned long n = static_cast<unsigned long>(n_z.get_ui());
        const Rational f = x - Rational(n_z, 1);
        unsigned long nbits = 1;
        while ((1UL << nbits) < n + 2)
        {
            ++nbits;
        }
        const unsigned long work = bits + 2 * nbits + 8;
        const Rational tol = pow2_neg(work);
        RatInterval result = exp_unit(f, tol);
        if (n > 0)
        {
            const RatInterval e1 = exp_unit(Rational(1), tol);
            result = result * pow_compress(e1, n, work);
        }
        return compress(result, bits + 4);
    }

    RatInterval log_of(const Rational &x, unsigned long bits)
    {
        if (x <= 0)
        {
            throw std::domain_error("log_of: argument must be positive");
        }
        const long e = floor_log2(x);
        Rational m = x;
        if (e >= 0)
        {
            m /= Rational(Integer(1) << e, 1);
        }
        else
        {
            m *= Rational(Integer(1) << (-e), 1);
        }
        // m in [1, 2); ln m = 2 atanh(y) with y = (m-1)/(m+1) in [0, 1/3)
        const Rational tol = pow2_neg(bits + 3);
        const Rational y = (m - 1) / (m + 1);
        RatInterval lnm(0, 0);
        if (y > 0)
        {
            const Rational y2 = y * y;
            Rational power = y;
            Rational sum = 0;
            unsigned long k = 0;
            while (true)
            {
                const Rational term = power / (2 * k + 1);
                sum += term;
                const Rational tail = term * y2 / (1 - y2);
                if (tail < tol / 2)
                {
                    lnm = RatInterval(2 * sum, 2 * (sum + tail));
                    break;
                }
                power *= y2;
                ++k;
            }
        }
        RatInterval result = lnm;
        if (e != 0)
        {
            unsigned long ebits = 1;
            const unsigned long ea = static_cast<unsigned long>(e >= 0 ? e : -e);
            while ((1UL << ebits) < ea + 2)
            {
                ++ebits;
            }
            const RatInterval ln2 = 2 * atanh_inv(3, pow2_neg(bits + ebits + 3));
            result = result + Rational(e, 1) * ln2;
        }
        return result;
    }

    RatInterval sqrt_of(const Rational &x, unsigned long bits)
    {
        if (x < 0)
        {
            throw std::domain_error("sqrt_of: argument must be nonnegative");
        }
        if (x == 0)
        {
            return RatInterval::point(0);
        }
        Rational v = x;
        // Large-denominator inputs are first boxed on a dyadic grid.
        RatInterval box(v, v);
        if (mpz_sizeinbase(v.get_den().get_mpz_t(), 2) > 4 * bits)
        {
            box = compress(box, 2 * bits + 8);
        }
        auto sqrt_lower = [&](const Rational &q)
        {
            Integer m = q.get_num() * q.get_den();
            m <<= 2 * bits;
            Integer r;
            mpz_sqrt(r.get_mpz_t(), m.get_mpz_t());
            Rational s(r, q.get_den() * (Integer(1) << bits));
            s.canonicalize();
            return s;
        };
        auto sqrt_upper = [&](const Rational &q)
        {
            Integer m = q.get_num() * q.get_den();
            m <<= 2 * bits;
            Integer r;
            mpz_sqrt(r.get_mpz_t(), m.get_mpz_t());
            r += 1;
            Rational s(r, q.get_den() * (Integer(1) << bits));
            s.canonicalize();
            return s;
        };
        return {sqrt_lower(box.lo), sqrt_upper(box.hi)};
    }

    RatInterval pi_interval(unsigned long bits)
    {
        const Rational tol = pow2_neg(bits + 6);
        return Rational(16) * atan_inv(5, tol) - Rational(4) * atan_inv(239, tol);
    }

    namespace
    {
        RatInterval sqrt_of_interval(const RatInterval &a, unsigned long bits)
        {
            return {sqrt_of(a.lo, bits).lo, sqrt_of(a.hi, bits).hi};
        }
    }

    RatInterval erfc_sqrt(const Rational &x, unsigned long bits)
    {
        if (x < 0)
        {
            throw std::domain_error("erfc_sqrt: argument must be nonnegative");
        }
        if (x == 0)
        {
            return RatInterval::point(1);
        }
        const Rational tol = pow2_neg(bits + 4);
        const RatInterval sqrt_pi = sqrt_of_interval(pi_interval(bits + 8), bits + 8);
        if (x <= 25)
        {
            // erf(sqrt(x)) = 2 sqrt(x/pi) * sum_n (-1)^n x^n / (n! (2n+1)).
            Rational term = 1;
            Rational sum = 1;
            unsigned long n = 0;
            int sign = 1;
            RatInterval series;
            while (true)
            {
                ++n;
                sign = -sign;
                term *= x;
                term /= static_cast<unsigned long>(n);
                const Rational contrib = term / (2 * n + 1);
                sum += sign > 0 ? contrib : -contrib;
                const Rational next = term * x / (n + 1) / (2 * n + 3);
                if (Rational(n, 1) >= x && next < tol)
                {
                    if (sign > 0)
                    {
                        series = RatInterval(sum - next, sum);
                    }
                    else
                    {
                        series = RatInterval(sum, sum + next);
                    }
                    break;
                }
                if (n > 100000)
                {
                    throw std::runtime_error("erfc_sqrt: series failed to converge");
                }
            }
            const RatInterval factor = Rational(2) * sqrt_of(x, bits + 8) * inverse(sqrt_pi);
            RatInterval erf = factor * series;
            Rational lo = 1 - erf.hi;
            Rational hi = 1 - erf.lo;
            lo = std::max(lo, Rational(0));
            hi = std::min(hi, Rational(1));
            return {lo, hi};
        }
        // Asymptotic enveloping series: erfc(y) = e^{-x}/(y sqrt(pi)) *
        // [sum_{k<K} (-1)^k (2k-1)!!/(2x)^k +- (2K-1)!!/(2x)^K], y = sqrt(x).
        const unsigned long kmax = std::min<unsigned long>(30, static_cast<unsigned long>(mpz_get_ui(floor_of(x).get_mpz_t())));
        Rational term = 1;
        Rational sum = 1;
        int sign = 1;
        unsigned long k = 0;
        while (k + 1 < kmax)
        {
            ++k;
            sign = -sign;
            term *= Rational(2 * k - 1) / (2 * x);
            sum += sign > 0 ? term : -term;
        }
        const Rational bound = term * Rational(2 * k + 1) / (2 * x);
        const RatInterval series(sum - bound, sum + bound);
        const RatInterval denom = sqrt_of(x, bits + 8) * sqrt_pi;
        const RatInterval value = exp_of(Rational(-x), bits + 8) * series * inverse(denom);
        Rational lo = std::max(value.lo, Rational(0));
        Rational hi = std::min(value.hi, Rational(1));
        if (lo > hi)
        {
            lo = hi;
        }
        return {lo, hi};
    }

    RatInterval poisson_cdf(unsigned long k, const Rational &lambda, unsigned long bits)
    {
        Rational term = 1;
        Rational sum = 1;
        for (unsigned long j = 1; j <= k; ++j)
        {
            term *= lambda;
            term /= j;
            sum += term;
        }
        RatInterval v = exp_of(Rational(-lambda), bits + 4) * RatInterval::point(sum);
        v.lo = std::max(v.lo, Rational(0));
        v.hi = std::min(v.hi, Rational(1));
        return v;
    }

    RatInterval poisson_pmf(unsigned long k, const Rational &lambda, unsigned long bits)
    {
        Rational term = 1;
        for (unsigned long j = 1; j <= k; ++j)
        {
            term *= lambda;
            term /= j;
        }
        return exp_of(Rational(-lambda), bits + 4) * RatInterval::point(term);
    }

    namespace
    {
        // Q(df/2, x) for rational x > 0 (upper regularized incomplete gamma).
        RatInterval gamma_q_at(const Rational &x, unsigned long df, unsigned long bits)
        {
            if (x <= 0)
            {
                return RatInterval::point(1);
            }
            if (df % 2 == 0)
            {
                const unsigned long m = df / 2;
                Rational term = 1;
                Rational sum = 1;
                for (unsigned long j = 1; j < m; ++j)
                {
                    term *= x;
                    term /= j;
                    sum += term;
                }
                RatInterval v = exp_of(Rational(-x), bits + 4) * RatInterval::point(sum);
                v.lo = std::max(v.lo, Rational(0));
                v.hi = std::min(v.hi, Rational(1));
                return v;
            }
            // Odd df: climb from Q(1/2, x) = erfc(sqrt(x)) using
            // Q(s+1, x) = Q(s, x) + x^s e^{-x} / Gamma(s+1).
            RatInterval q = erfc_sqrt(x, bits + 6);
            const unsigned long m = df / 2; // number of climb steps
            if (m > 0)
            {
                const RatInterval sqrt_pi = sqrt_of_interval(pi_interval(bits + 8), bits + 8);
                // T(1/2) = x^{1/2} e^{-x} / Gamma(3/2) = 2 sqrt(x/pi) e^{-x}
                RatInterval t = Rational(2) * sqrt_of(x, bits + 8) * inverse(sqrt_pi) * exp_of(Rational(-x), bits + 8);
                Rational s(1, 2);
                for (unsigned long j = 0; j < m; ++j)
                {
                    q = q + t;
                    s += 1;
                    t = (x / s) * t;
                }
            }
            q.lo = std::max(q.lo, Rational(0));
            q.hi = std::min(q.hi, Rational(1));
            return q;
        }
    }

    RatInterval chi_square_upper(const RatInterval &stat, unsigned long df, unsigned long bits)
    {
        if (df == 0)
        {
            throw std::domain_error("chi_square_upper: df must be positive");
        }
        const RatInterval at_hi = gamma_q_at(stat.hi / 2, df, bits);
        const RatInterval at_lo = gamma_q_at(stat.lo / 2, df, bits);
        return {std::min(at_hi.lo, at_lo.lo), std::max(at_hi.hi, at_lo.hi)};
    }

    namespace
    {
        RatInterval kolmogorov_at(const Rational &z_sq, unsigned long bits)
        {
            if (z_sq <= 0)
            {
                return RatInterval::point(1);
            }
            const Rational tol = pow2_neg(bits + 4);
            RatInterval sum(0, 0);
            unsigned long k = 0;
            while (true)
            {
                ++k;
                const RatInterval term = exp_of(Rational(-2 * Rational(k * k, 1) * z_sq), bits + 8);
                if (k % 2 == 1)
                {
                    sum = sum + term;
                }
                else
                {
                    sum = sum - term;
                }
                // Alternating with decreasing magnitude: remainder bounded by
                // the next term.
                const RatInterval next = exp_of(Rational(-2 * Rational((k + 1) * (k + 1), 1) * z_sq), bits + 8);
                if (next.hi < tol)
                {
                    RatInterval q = Rational(2) * (sum + RatInterval(-next.hi, next.hi));
                    q.lo = std::max(q.lo, Rational(0));
                    q.hi = std::min(q.hi, Rational(1));
                    return q;
                }
                if (k > 10000)
                {
                    throw std::runtime_error("kolmogorov_at: series failed to converge");
                }
            }
        }
    }

    RatInterval kolmogorov_upper(const RatInterval &z_sq, unsigned long bits)
    {
        const RatInterval at_hi = kolmogorov_at(z_sq.hi, bits);
        const RatInterval at_lo = kolmogorov_at(z_sq.lo, bits);
        return {std::min(at_hi.lo, at_lo.lo), std::max(at_hi.hi, at_lo.hi)};
    }

    RatInterval exponential_cdf(const Rational &x, const Rational &rate, unsigned long bits)
    {
        if (x <= 0)
        {
            return RatInterval::point(0);
        }
        RatInterval v = Rational(1) - exp_of(Rational(-rate * x), bits + 2);
        v.lo = std::max(v.lo, Rational(0));
        v.hi = std::min(v.hi, Rational(1));
        return v;
    }
}
