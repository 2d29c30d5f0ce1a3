#include "finmark/pointproc.hpp"

#include "finmark/intervals.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>

namespace finmark
{
    void PointConfiguration::validate() const
    {
        for (std::size_t i = 0; i < points.size(); ++i)
        {
            if (!window.contains(points[i]))
            {
                throw std::invalid_argument("PointConfiguration: point outside window");
            }
            if (i > 0 && points[i - 1] >= points[i])
            {
                throw std::invalid_argument("PointConfiguration: points not strictly increasing");
            }
        }
    }

    void MarkedConfiguration::validate() const
    {
        base.validate();
        if (marks.size() != base.points.size())
        {
            throw std::invalid_argument("MarkedConfiguration: marks and points differ in length");
        }
        if (origin_index != origin_index_of(base.points))
        {
            throw std::invalid_argument("MarkedConfiguration: origin_index does not match points");
        }
    }

    std::optional<std::size_t> origin_index_of(const std::vector<Rational> &points)
    {
        std::optional<std::size_t> result;
        for (std::size_t i = 0; i < points.size(); ++i)
        {
            if (points[i] <= 0)
            {
                result = i;
            }
            else
            {
                break;
            }
        }
        return result;
    }

    namespace
    {
        constexpr unsigned long kCdfTableBits = 192;

        // Cells re-use one small lambda millions of times; cache its CDF
        // enclosures once. Map nodes are reference-stable under insertion.
        const std::vector<RatInterval> &cdf_table_for(const Rational &lambda)
        {
            static std::mutex mutex;
            static std::map<Rational, std::vector<RatInterval>> tables;
            std::lock_guard<std::mutex> lock(mutex);
            auto [it, inserted] = tables.try_emplace(lambda);
            if (inserted)
            {
                auto &table = it->second;
                const RatInterval e = exp_of(Rational(-lambda), kCdfTableBits);
                const Rational stop = 1 - pow2_neg(kCdfTableBits - 16);
                Rational term = 1;
                Rational sum = 1;
                for (unsigned long k = 0; k < 100000; ++k)
                {
                    if (k > 0)
                    {
                        term *= lambda;
                        term /= k;
                        sum += term;
                    }
                    RatInterval c = e * RatInterval::point(sum);
                    c.hi = std::min(c.hi, Rational(1));
                    table.push_back(c);
                    if (c.lo > stop)
                    {
                        return table;
                    }
                }
                throw std::runtime_error("cdf_table_for: table failed to close");
            }
            return it->second;
        }

        // Inversion against exact partial sums with compressed intervals;
        // used for large lambda and as the refinement fallback.
        unsigned long poisson_count_scan(const Rational &lambda, const Rational &u,
                                         unsigned long precision)
        {
            const unsigned long k_cap =
                1000 + 100 * static_cast<unsigned long>(mpz_get_ui(ceil_of(lambda).get_mpz_t()));
            unsigned long bits = precision + 96;
            while (bits <= (1UL << 20))
            {
                const RatInterval e = exp_of(Rational(-lambda), bits);
                RatInterval term = RatInterval::point(1);
                RatInterval sum = term;
                bool stuck = false;
                for (unsigned long k = 0; k <= k_cap; ++k)
                {
                    if (k > 0)
                    {
                        term = compress(term * RatInterval::point(lambda / k), bits);
                        sum = compress(sum + term, bits);
                    }
                    const RatInterval cdf = e * sum;
                    if (u < cdf.lo)
                    {
                        return k;
                    }
                    if (u < cdf.hi)
                    {
                        stuck = true;
                        break;
                    }
                }
                if (!stuck)
                {
                    throw std::runtime_error("poisson_count: inversion ran away");
                }
                bits *= 2;
            }
            throw std::runtime_error("poisson_count: dyadic uniform sits on the CDF");
        }
    }

    unsigned long poisson_count(const Rational &lambda, RandomStream &stream, unsigned long precision)
    {
        if (lambda <= 0)
        {
            throw std::invalid_argument("poisson_count: lambda must be positive");
        }
        // 256 dyadic bits already put the inversion within 2^-256 of the
        // real-valued law; drawing more for the count would be waste.
        const Rational u = stream.next_unit(std::min<unsigned long>(precision, 256));
        if (lambda <= 64)
        {
            const auto &table = cdf_table_for(lambda);
            for (std::size_t k = 0; k < table.size(); ++k)
            {
                if (u < table[k].lo)
                {
                    return static_cast<unsigned long>(k);
                }
                if (u < table[k].hi)
                {
                    break; // u inside the enclosure; decide with more bits
                }
            }
        }
        return poisson_count_scan(lambda, u, precision);
    }

    namespace
    {
        Rational grid_value(const Integer &index, unsigned long precision)
        {
            Rational q(index, Integer(1) << precision);
            q.canonicalize();
            return q;
        }
    }

    PointConfiguration sample_poisson(const Rational &rate, const Window &window,
                                      std::uint64_t seed, unsigned long precision)
    {
        if (rate <= 0)
        {
            throw std::invalid_argument("sample_poisson: rate must be positive");
        }
        if (precision < 32)
        {
            throw std::invalid_argument("sample_poisson: precision must be at least 32 bits");
        }
        RandomStream count_stream(seed, streams::kPoissonCount);
        const unsigned long n = poisson_count(rate * window.length(), count_stream, precision);

        const Integer scale = Integer(1) << precision;
        const Integer first = ceil_of(window.lo * Rational(scale, 1));
        const Integer last = ceil_of(window.hi * Rational(scale, 1)); // exclusive
        const Integer grid_count = last - first;
        if (grid_count <= 0)
        {
            throw std::invalid_argument("sample_poisson: window narrower than the dyadic grid");
        }

        RandomStream pos_stream(seed, streams::kPoissonPositions);
        std::set<Integer> chosen;
        while (chosen.size() < n)
        {
            chosen.insert(pos_stream.next_below(grid_count));
        }
        PointConfiguration config{window, {}};
        config.points.reserve(n);
        for (const Integer &k : chosen)
        {
            config.points.push_back(grid_value(first + k, precision));
        }
        return config;
    }

    PointConfiguration sample_poisson_cells(const Rational &rate, long cell_lo, long cell_hi,
                                            std::uint64_t seed, unsigned long precision)
    {
        if (rate <= 0)
        {
            throw std::invalid_argument("sample_poisson_cells: rate must be positive");
        }
        if (precision < 32)
        {
            throw std::invalid_argument("sample_poisson_cells: precision must be at least 32 bits");
        }
        if (cell_lo >= cell_hi)
        {
            throw std::invalid_argument("sample_poisson_cells: degenerate window (lo >= hi)");
        }
        PointConfiguration config{Window(Rational(cell_lo), Rational(cell_hi)), {}};
        for (long m = cell_lo; m < cell_hi; ++m)
        {
            const std::uint64_t sid =
                streams::kCellBase ^ (static_cast<std::uint64_t>(m) * 0x9e3779b97f4a7c15ULL);
            RandomStream stream(seed, sid);
            const unsigned long n = poisson_count(rate, stream, precision);
            std::set<Integer> offsets;
            while (offsets.size() < n)
            {
                offsets.insert(stream.next_bits(precision));
            }
            for (const Integer &k : offsets)
            {
                config.points.push_back(Rational(m) + grid_value(k, precision));
            }
        }
        return config;
    }

    PointConfiguration translate(const PointConfiguration &config, const Rational &t)
    {
        PointConfiguration shifted{Window(config.window.lo + t, config.window.hi + t), {}};
        shifted.points.reserve(config.points.size());
        for (const Rational &p : config.points)
        {
            shifted.points.push_back(p + t);
        }
        return shifted;
    }

    MarkedConfiguration translate_marked(const MarkedConfiguration &mc, const Rational &t)
    {
        MarkedConfiguration shifted{translate(mc.base, t), mc.marks, std::nullopt};
        shifted.origin_index = origin_index_of(shifted.base.points);
        return shifted;
    }

    PointConfiguration restrict_to(const PointConfiguration &config, const Window &interval)
    {
        if (!config.window.contains(interval))
        {
            throw std::invalid_argument("restrict_to: interval not contained in window");
        }
        PointConfiguration result{interval, {}};
        for (const Rational &p : config.points)
        {
            if (interval.contains(p))
            {
                result.points.push_back(p);
            }
        }
        return result;
    }

    void write_points_csv(std::ostream &out, const PointConfiguration &config)
    {
        out << "# window " << to_string(config.window.lo) << ' ' << to_string(config.window.hi) << '\n';
        out << "position\n";
        for (const Rational &p : config.points)
        {
            out << to_string(p) << '\n';
        }
    }

    namespace
    {
        struct CsvHeader
        {
            std::optional<Window> window;
            std::optional<std::size_t> origin_index;
            bool origin_declared_none = false;
        };

        CsvHeader read_header(std::istream &in, std::string &pending_line)
        {
            CsvHeader header;
            std::string line;
            while (std::getline(in, line))
            {
                if (line.empty())
                {
                    continue;
                }
                if (line[0] != '#')
                {
                    pending_line = line;
                    break;
                }
                std::istringstream ls(line.substr(1));
                std::string key;
                ls >> key;
                if (key == "window")
                {
                    std::string lo, hi;
                    ls >> lo >> hi;
                    header.window = Window(parse_rational(lo), parse_rational(hi));
                }
                else if (key == "origin_index")
                {
                    std::string value;
                    ls >> value;
                    if (value == "none")
                    {
                        header.origin_declared_none = true;
                    }
                    else
                    {
                        header.origin_index = std::stoul(value);
                    }
                }
            }
            if (!header.window)
            {
                throw std::invalid_argument("point CSV: missing '# window lo hi' line");
            }
            return header;
        }
    }

    PointConfiguration read_points_csv(std::istream &in)
    {
        std::string pending;
        const CsvHeader header = read_header(in, pending);
        if (pending != "position")
        {
            throw std::invalid_argument("point CSV: expected 'position' header row");
        }
        PointConfiguration config{*header.window, {}};
        std::string line;
        while (std::getline(in, line))
        {
            if (line.empty())
            {
                continue;
            }
            config.points.push_back(parse_rational(line));
        }
        config.validate();
        return config;
    }

    void write_marked_csv(std::ostream &out, const MarkedConfiguration &mc,
                          const std::vector<std::string> &symbols)
    {
        out << "# window " << to_string(mc.base.window.lo) << ' ' << to_string(mc.base.window.hi) << '\n';
        if (mc.origin_index)
        {
            out << "# origin_index " << *mc.origin_index << '\n';
        }
        else
        {
            out << "# origin_index none\n";
        }
        out << "position,mark\n";
        for (std::size_t i = 0; i < mc.base.points.size(); ++i)
        {
            out << to_string(mc.base.points[i]) << ',';
            const std::int32_t m = mc.marks[i];
            if (m != kNoMark)
            {
                if (m < 0 || static_cast<std::size_t>(m) >= symbols.size())
                {
                    throw std::invalid_argument("write_marked_csv: mark index outside alphabet");
                }
                out << symbols[static_cast<std::size_t>(m)];
            }
            out << '\n';
        }
    }

    MarkedConfiguration read_marked_csv(std::istream &in, const std::vector<std::string> &symbols)
    {
        std::string pending;
        const CsvHeader header = read_header(in, pending);
        if (pending != "position,mark")
        {
            throw std::invalid_argument("marked CSV: expected 'position,mark' header row");
        }
        MarkedConfiguration mc{PointConfiguration{*header.window, {}}, {}, header.origin_index};
        std::string line;
        while (std::getline(in, line))
        {
            if (line.empty())
            {
                continue;
            }
            const auto comma = line.find(',');
            if (comma == std::string::npos)
            {
                throw std::invalid_argument("marked CSV: row without mark column");
            }
            mc.base.points.push_back(parse_rational(line.substr(0, comma)));
            const std::string symbol = line.substr(comma + 1);
            if (symbol.empty())
            {
                mc.marks.push_back(kNoMark);
            }
            else
            {
                const auto it = std::find(symbols.begin(), symbols.end(), symbol);
                if (it == symbols.end())
                {
                    throw std::invalid_argument("marked CSV: unknown mark symbol '" + symbol + "'");
                }
                mc.marks.push_back(static_cast<std::int32_t>(it - symbols.begin()));
            }
        }
        mc.validate();
        return mc;
    }
}
