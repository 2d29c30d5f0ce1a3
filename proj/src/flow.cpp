#include "finmark/flow.hpp"

#include "finmark/errors.hpp"
#include "finmark/rng.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>

namespace finmark
{
    namespace
    {
        // Exact stationary row vector of a row-stochastic matrix by rational
        // Gaussian elimination on (M^T - I) x = 0 with sum(x) = 1.
        std::vector<Rational> solve_stationary(const std::vector<std::vector<Rational>> &m)
        {
            const std::size_t n = m.size();
            // rows: n equations from columns of M - I, then normalization
            std::vector<std::vector<Rational>> a(n + 1, std::vector<Rational>(n + 1, Rational(0)));
            for (std::size_t j = 0; j < n; ++j)
            {
                for (std::size_t i = 0; i < n; ++i)
                {
                    a[j][i] = m[i][j];
                }
                a[j][j] -= 1;
            }
            for (std::size_t i = 0; i < n; ++i)
            {
                a[n][i] = 1;
            }
            a[n][n] = 1; // rhs of the normalization row

            std::size_t row = 0;
            std::vector<std::size_t> pivot_of_col(n, SIZE_MAX);
            for (std::size_t col = 0; col < n && row <= n; ++col)
            {
                std::size_t pivot = SIZE_MAX;
                for (std::size_t r = row; r <= n; ++r)
                {
                    if (a[r][col] != 0)
                    {
                        pivot = r;
                        break;
                    }
                }
                if (pivot == SIZE_MAX)
                {
                    continue;
                }
                std::swap(a[row], a[pivot]);
                const Rational inv = a[row][col];
                for (std::size_t c = 0; c <= n; ++c)
                {
                    a[row][c] /= inv;
                }
                for (std::size_t r = 0; r <= n; ++r)
                {
                    if (r != row && a[r][col] != 0)
                    {
                        const Rational factor = a[r][col];
                        for (std::size_t c = 0; c <= n; ++c)
                        {
                            a[r][c] -= factor * a[row][c];
                        }
                    }
                }
                pivot_of_col[col] = row;
                ++row;
            }
            std::vector<Rational> beta(n, Rational(0));
            // Reconstruct: each pivot row now reads x_col = rhs.
            for (std::size_t col = 0; col < n; ++col)
            {
                if (pivot_of_col[col] == SIZE_MAX)
                {
                    throw std::invalid_argument("MarkovSpec: stationary distribution is not unique");
                }
                beta[col] = a[pivot_of_col[col]][n];
            }
            return beta;
        }
    }

    MarkovSpec::MarkovSpec(std::vector<std::string> states,
                           std::vector<std::vector<Rational>> transition, Rational holding_rate)
        : states_(std::move(states)), transition_(std::move(transition)),
          holding_rate_(std::move(holding_rate))
    {
        const std::size_t n = states_.size();
        if (n < 2)
        {
            throw std::invalid_argument("MarkovSpec: need at least 2 states (no zero-diagonal stochastic row exists otherwise)");
        }
        if (transition_.size() != n)
        {
            throw std::invalid_argument("MarkovSpec: transition matrix shape mismatch");
        }
        if (holding_rate_ <= 0)
        {
            throw std::invalid_argument("MarkovSpec: holding rate must be positive");
        }
        for (std::size_t i = 0; i < n; ++i)
        {
            if (transition_[i].size() != n)
            {
                throw std::invalid_argument("MarkovSpec: transition matrix shape mismatch");
            }
            if (transition_[i][i] != 0)
            {
                throw std::invalid_argument("MarkovSpec: diagonal entries must be zero");
            }
            Rational row_sum(0);
            for (const Rational &p : transition_[i])
            {
                if (p < 0)
                {
                    throw std::invalid_argument("MarkovSpec: negative transition probability");
                }
                row_sum += p;
            }
            if (row_sum != 1)
            {
                throw std::invalid_argument("MarkovSpec: row " + std::to_string(i) + " does not sum to 1");
            }
        }
        if (!irreducible())
        {
            throw std::invalid_argument("MarkovSpec: transition matrix is not irreducible");
        }
        stationary_ = solve_stationary(transition_);
        for (const Rational &b : stationary_)
        {
            if (b <= 0)
            {
                throw std::invalid_argument("MarkovSpec: stationary distribution not strictly positive");
            }
        }
    }

    bool MarkovSpec::irreducible() const
    {
        const std::size_t n = states_.size();
        auto reach = [&](bool forward)
        {
            std::vector<bool> seen(n, false);
            std::queue<std::size_t> queue;
            queue.push(0);
            seen[0] = true;
            while (!queue.empty())
            {
                const std::size_t u = queue.front();
                queue.pop();
                for (std::size_t v = 0; v < n; ++v)
                {
                    const Rational &p = forward ? transition_[u][v] : transition_[v][u];
                    if (p > 0 && !seen[v])
                    {
                        seen[v] = true;
                        queue.push(v);
                    }
                }
            }
            return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
        };
        return reach(true) && reach(false);
    }

    bool MarkovSpec::aperiodic() const
    {
        // Period = gcd over edges (u,v) of level[u] + 1 - level[v] on a BFS
        // tree; the chain is aperiodic iff the gcd is 1.
        const std::size_t n = states_.size();
        std::vector<long> level(n, -1);
        std::queue<std::size_t> queue;
        queue.push(0);
        level[0] = 0;
        long g = 0;
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        while (!queue.empty())
        {
            const std::size_t u = queue.front();
            queue.pop();
            for (std::size_t v = 0; v < n; ++v)
            {
                if (transition_[u][v] > 0)
                {
                    if (level[v] < 0)
                    {
                        level[v] = level[u] + 1;
                        queue.push(v);
                    }
                    edges.emplace_back(u, v);
                }
            }
        }
        for (const auto &[u, v] : edges)
        {
            const long diff = level[u] + 1 - level[v];
            g = std::gcd(g, diff);
        }
        return g == 1;
    }

    void Trajectory::validate() const
    {
        for (std::size_t i = 0; i < jumps.size(); ++i)
        {
            if (!window.contains(jumps[i]))
            {
                throw std::invalid_argument("Trajectory: jump outside window");
            }
            if (i > 0 && jumps[i - 1] >= jumps[i])
            {
                throw std::invalid_argument("Trajectory: jumps not strictly increasing");
            }
        }
        if (states.size() != jumps.size())
        {
            throw std::invalid_argument("Trajectory: one state per jump required");
        }
    }

    long Trajectory::segment_of(const Rational &t) const
    {
        const auto it = std::upper_bound(jumps.begin(), jumps.end(), t);
        return static_cast<long>(it - jumps.begin()) - 1;
    }

    std::vector<std::int32_t> IdentityEncoder::encode(const std::vector<std::int32_t> &marks) const
    {
        for (const std::int32_t m : marks)
        {
            if (m < 0 || static_cast<std::size_t>(m) >= alphabet_size_)
            {
                throw AlphabetMismatch("IdentityEncoder: mark outside alphabet");
            }
        }
        return marks;
    }

    std::vector<std::int32_t> IdentityEncoder::decode(const std::vector<std::int32_t> &states) const
    {
        for (const std::int32_t s : states)
        {
            if (s < 0 || static_cast<std::size_t>(s) >= alphabet_size_)
            {
                throw AlphabetMismatch("IdentityEncoder: state outside alphabet");
            }
        }
        return states;
    }

    namespace
    {
        std::vector<std::int32_t> apply_block_code(const std::vector<std::int32_t> &input,
                                                   std::size_t in_alphabet, std::size_t out_alphabet,
                                                   std::size_t radius,
                                                   const std::vector<std::int32_t> &table)
        {
            const std::size_t width = 2 * radius + 1;
            if (input.size() < width)
            {
                return {};
            }
            std::vector<std::int32_t> output;
            output.reserve(input.size() - width + 1);
            for (std::size_t i = radius; i + radius < input.size(); ++i)
            {
                std::size_t key = 0;
                for (std::size_t k = i - radius; k <= i + radius; ++k)
                {
                    const std::int32_t sym = input[k];
                    if (sym < 0 || static_cast<std::size_t>(sym) >= in_alphabet)
                    {
                        throw AlphabetMismatch("block code: symbol outside alphabet");
                    }
                    key = key * in_alphabet + static_cast<std::size_t>(sym);
                }
                const std::int32_t out = table[key];
                if (out < 0 || static_cast<std::size_t>(out) >= out_alphabet)
                {
                    throw AlphabetMismatch("block code: table output outside alphabet");
                }
                output.push_back(out);
            }
            return output;
        }

        std::size_t int_pow(std::size_t base, std::size_t e)
        {
            std::size_t r = 1;
            while (e-- > 0)
            {
                r *= base;
            }
            return r;
        }
    }

    TableEncoder::TableEncoder(std::size_t in_alphabet, std::size_t out_alphabet, std::size_t radius,
                               std::vector<std::int32_t> table, std::size_t inverse_radius,
                               std::vector<std::int32_t> inverse_table)
        : in_alphabet_(in_alphabet), out_alphabet_(out_alphabet), radius_(radius),
          table_(std::move(table)), inverse_radius_(inverse_radius),
          inverse_table_(std::move(inverse_table))
    {
        if (in_alphabet_ == 0 || out_alphabet_ == 0)
        {
            throw std::invalid_argument("TableEncoder: empty alphabet");
        }
        if (table_.size() != int_pow(in_alphabet_, 2 * radius_ + 1))
        {
            throw std::invalid_argument("TableEncoder: table size does not match radius");
        }
        if (inverse_table_.size() != int_pow(out_alphabet_, 2 * inverse_radius_ + 1))
        {
            throw std::invalid_argument("TableEncoder: inverse table size does not match radius");
        }
        // Round-trip validation on deterministic pseudo-random strings.
        RandomStream stream(0x7ab1e, streams::kBorel);
        const std::size_t pad = radius_ + inverse_radius_;
        for (int trial = 0; trial < 16; ++trial)
        {
            std::vector<std::int32_t> sample;
            for (std::size_t i = 0; i < 64 + 2 * pad; ++i)
            {
                sample.push_back(static_cast<std::int32_t>(stream.next_word() % in_alphabet_));
            }
            const auto coded = encode(sample);
            const auto back = decode(coded);
            // back corresponds to sample positions [pad, size - pad)
            for (std::size_t i = 0; i < back.size(); ++i)
            {
                if (back[i] != sample[i + pad])
                {
                    throw std::invalid_argument("TableEncoder: decode table does not invert encode table");
                }
            }
        }
    }

    std::vector<std::int32_t> TableEncoder::encode(const std::vector<std::int32_t> &marks) const
    {
        return apply_block_code(marks, in_alphabet_, out_alphabet_, radius_, table_);
    }

    std::vector<std::int32_t> TableEncoder::decode(const std::vector<std::int32_t> &states) const
    {
        return apply_block_code(states, out_alphabet_, in_alphabet_, inverse_radius_, inverse_table_);
    }

    Trajectory assemble_trajectory(const MarkedConfiguration &marked, const SkeletonEncoder &encoder)
    {
        marked.base.validate();
        const std::size_t r = encoder.radius();
        if (r > 0 && marked.base.points.size() < 2 * r + 1)
        {
            throw EncoderCoreTooSmall("assemble_trajectory: encoder radius exceeds available marks");
        }
        const std::vector<std::int32_t> states = encoder.encode(marked.marks);
        Trajectory traj{marked.base.window, {}, {}, false, -1};
        // Encoded output i corresponds to the point at index i + r; the 2r
        // boundary points carry no state and are dropped from the jump list.
        traj.jumps.assign(marked.base.points.begin() + static_cast<long>(r),
                          marked.base.points.end() - static_cast<long>(r));
        traj.states = states;
        traj.validate();
        return traj;
    }

    MarkedConfiguration disassemble(const Trajectory &traj, const SkeletonEncoder &encoder)
    {
        traj.validate();
        for (std::size_t i = 1; i < traj.states.size(); ++i)
        {
            if (traj.states[i] == traj.states[i - 1])
            {
                throw InvisibleJump("disassemble: equal consecutive states at a jump");
            }
        }
        const std::vector<std::int32_t> marks = encoder.decode(traj.states);
        const std::size_t r = encoder.decode_radius();
        if (r > 0 && traj.jumps.size() < 2 * r + 1)
        {
            throw EncoderCoreTooSmall("disassemble: decode radius exceeds available states");
        }
        MarkedConfiguration mc{PointConfiguration{traj.window, {}}, {}, std::nullopt};
        mc.base.points.assign(traj.jumps.begin() + static_cast<long>(r),
                              traj.jumps.end() - static_cast<long>(r));
        mc.marks = marks;
        mc.origin_index = origin_index_of(mc.base.points);
        mc.validate();
        return mc;
    }

    namespace
    {
        RatInterval entropy_of(const std::vector<Rational> &weights, const std::vector<Rational> &probs)
        {
            RatInterval h(0, 0);
            for (std::size_t i = 0; i < probs.size(); ++i)
            {
                if (probs[i] == 0)
                {
                    continue; // p log p -> 0
                }
                h = h - weights[i] * (Rational(probs[i]) * log_of(probs[i], kEntropyLogBits));
            }
            return h;
        }
    }

    ValidationReport validate_target(const MarkovSpec &spec, const MarkDistribution &dist,
                                     const Rational &rate)
    {
        ValidationReport report;
        report.rate_matches = rate == spec.holding_rate();
        report.irreducible = spec.irreducible();
        report.aperiodic = spec.aperiodic();

        std::vector<Rational> ones(dist.size(), Rational(1));
        report.alphabet_entropy = entropy_of(ones, dist.probs());

        RatInterval h(0, 0);
        for (std::size_t i = 0; i < spec.size(); ++i)
        {
            std::vector<Rational> weights(spec.size(), spec.stationary()[i]);
            h = h + entropy_of(weights, spec.transition()[i]);
        }
        report.skeleton_entropy = h;

        const Rational gap_lo = report.alphabet_entropy.lo - report.skeleton_entropy.hi;
        const Rational gap_hi = report.alphabet_entropy.hi - report.skeleton_entropy.lo;
        const Rational worst = std::max<Rational>(abs_of(gap_lo), abs_of(gap_hi));
        report.entropy_matches = worst <= entropy_tolerance();
        return report;
    }

    Trajectory sample_ctmc(const MarkovSpec &spec, const Window &window, std::uint64_t seed,
                           unsigned long precision)
    {
        const PointConfiguration jumps = sample_poisson(spec.holding_rate(), window, seed, precision);
        RandomStream stream(seed, streams::kSkeleton);

        auto draw_from = [&](const std::vector<Rational> &probs)
        {
            const Rational u = stream.next_unit(precision);
            Rational acc(0);
            for (std::size_t i = 0; i + 1 < probs.size(); ++i)
            {
                acc += probs[i];
                if (u < acc)
                {
                    return static_cast<std::int32_t>(i);
                }
            }
            return static_cast<std::int32_t>(probs.size() - 1);
        };

        Trajectory traj{window, jumps.points, {}, true, -1};
        std::int32_t state = draw_from(spec.stationary());
        traj.leading_state = state;
        traj.states.reserve(jumps.points.size());
        for (std::size_t i = 0; i < jumps.points.size(); ++i)
        {
            state = draw_from(spec.transition()[static_cast<std::size_t>(state)]);
            traj.states.push_back(state);
        }
        return traj;
    }

    void write_trajectory_csv(std::ostream &out, const Trajectory &traj,
                              const std::vector<std::string> &state_names)
    {
        out << "# window " << to_string(traj.window.lo) << ' ' << to_string(traj.window.hi) << '\n';
        if (traj.leading_state_known)
        {
            out << "# leading_state " << state_names[static_cast<std::size_t>(traj.leading_state)] << '\n';
        }
        else
        {
            out << "# leading_state unknown\n";
        }
        out << "jump,state\n";
        for (std::size_t i = 0; i < traj.jumps.size(); ++i)
        {
            out << to_string(traj.jumps[i]) << ',' << state_names[static_cast<std::size_t>(traj.states[i])]
                << '\n';
        }
    }

    Trajectory read_trajectory_csv(std::istream &in, const std::vector<std::string> &state_names)
    {
        std::optional<Window> window;
        bool leading_known = false;
        std::int32_t leading = -1;
        std::string line;
        std::string pending;
        while (std::getline(in, line))
        {
            if (line.empty())
            {
                continue;
            }
            if (line[0] != '#')
            {
                pending = line;
                break;
            }
            std::istringstream ls(line.substr(1));
            std::string key;
            ls >> key;
            if (key == "window")
            {
                std::string lo, hi;
                ls >> lo >> hi;
                window = Window(parse_rational(lo), parse_rational(hi));
            }
            else if (key == "leading_state")
            {
                std::string value;
                ls >> value;
                if (value != "unknown")
                {
                    const auto it = std::find(state_names.begin(), state_names.end(), value);
                    if (it == state_names.end())
                    {
                        throw std::invalid_argument("trajectory CSV: unknown leading state");
                    }
                    leading_known = true;
                    leading = static_cast<std::int32_t>(it - state_names.begin());
                }
            }
        }
        if (!window)
        {
            throw std::invalid_argument("trajectory CSV: missing '# window lo hi' line");
        }
        if (pending != "jump,state")
        {
            throw std::invalid_argument("trajectory CSV: expected 'jump,state' header row");
        }
        Trajectory traj{*window, {}, {}, leading_known, leading};
        while (std::getline(in, line))
        {
            if (line.empty())
            {
                continue;
            }
            const auto comma = line.find(',');
            if (comma == std::string::npos)
            {
                throw std::invalid_argument("trajectory CSV: row without state column");
            }
            traj.jumps.push_back(parse_rational(line.substr(0, comma)));
            const std::string name = line.substr(comma + 1);
            const auto it = std::find(state_names.begin(), state_names.end(), name);
            if (it == state_names.end())
            {
                throw std::invalid_argument("trajectory CSV: unknown state '" + name + "'");
            }
            traj.states.push_back(static_cast<std::int32_t>(it - state_names.begin()));
        }
        traj.validate();
        return traj;
    }
}
