#pragma once

#include "finmark/borel.hpp"
#include "finmark/intervals.hpp"
#include "finmark/pointproc.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace finmark
{
    // Continuous-time Markov chain target: zero-diagonal row-stochastic
    // rational transition matrix, one holding rate for all states, exact
    // stationary row vector of the jump chain.
    class MarkovSpec
    {
    public:
        MarkovSpec(std::vector<std::string> states, std::vector<std::vector<Rational>> transition,
                   Rational holding_rate);

        std::size_t size() const { return states_.size(); }
        const std::vector<std::string> &states() const { return states_; }
        const std::vector<std::vector<Rational>> &transition() const { return transition_; }
        const Rational &holding_rate() const { return holding_rate_; }
        const std::vector<Rational> &stationary() const { return stationary_; }

        bool irreducible() const;
        bool aperiodic() const;

    private:
        std::vector<std::string> states_;
        std::vector<std::vector<Rational>> transition_;
        Rational holding_rate_;
        std::vector<Rational> stationary_;
    };

    // Piecewise-constant right-continuous path on a window: value on
    // [jumps[i], jumps[i+1]) is states[i]. The stretch left of the first jump
    // carries leading_state only when leading_state_known; a trajectory read
    // off a marked configuration cannot know it.
    struct Trajectory
    {
        Window window;
        std::vector<Rational> jumps;
        std::vector<std::int32_t> states;
        bool leading_state_known = false;
        std::int32_t leading_state = -1;

        void validate() const;
        // q(t): index of the largest jump <= t; -1 when t precedes all jumps.
        long segment_of(const Rational &t) const;
        bool operator==(const Trajectory &other) const
        {
            return window == other.window && jumps == other.jumps && states == other.states &&
                   leading_state_known == other.leading_state_known &&
                   (!leading_state_known || leading_state == other.leading_state);
        }
    };

    // Shift-equivariant block code between mark alphabet A and state alphabet
    // B with a declared coding radius; decode inverts encode on certified
    // cores. The identity encoder is the stock implementation; sliding-block
    // tables can be loaded from config.
    class SkeletonEncoder
    {
    public:
        virtual ~SkeletonEncoder() = default;
        virtual std::size_t input_alphabet_size() const = 0;
        virtual std::size_t output_alphabet_size() const = 0;
        virtual std::size_t radius() const = 0;
        // Output i is defined for i in [radius, n - radius); the returned
        // vector has size n - 2*radius (empty when n < 2*radius + 1).
        virtual std::vector<std::int32_t> encode(const std::vector<std::int32_t> &marks) const = 0;
        virtual std::size_t decode_radius() const = 0;
        virtual std::vector<std::int32_t> decode(const std::vector<std::int32_t> &states) const = 0;
    };

    class IdentityEncoder final : public SkeletonEncoder
    {
    public:
        explicit IdentityEncoder(std::size_t alphabet_size) : alphabet_size_(alphabet_size) {}
        std::size_t input_alphabet_size() const override { return alphabet_size_; }
        std::size_t output_alphabet_size() const override { return alphabet_size_; }
        std::size_t radius() const override { return 0; }
        std::vector<std::int32_t> encode(const std::vector<std::int32_t> &marks) const override;
        std::size_t decode_radius() const override { return 0; }
        std::vector<std::int32_t> decode(const std::vector<std::int32_t> &states) const override;

    private:
        std::size_t alphabet_size_;
    };

    // Sliding-block code given by a full context table (window of 2r+1 input
    // symbols -> output symbol) plus an inverse table; the pair is validated
    // by round-trip testing on deterministic sample strings at construction.
    class TableEncoder final : public SkeletonEncoder
    {
    public:
        TableEncoder(std::size_t in_alphabet, std::size_t out_alphabet, std::size_t radius,
                     std::vector<std::int32_t> table, std::size_t inverse_radius,
                     std::vector<std::int32_t> inverse_table);

        std::size_t input_alphabet_size() const override { return in_alphabet_; }
        std::size_t output_alphabet_size() const override { return out_alphabet_; }
        std::size_t radius() const override { return radius_; }
        std::vector<std::int32_t> encode(const std::vector<std::int32_t> &marks) const override;
        std::size_t decode_radius() const override { return inverse_radius_; }
        std::vector<std::int32_t> decode(const std::vector<std::int32_t> &states) const override;

    private:
        std::size_t in_alphabet_;
        std::size_t out_alphabet_;
        std::size_t radius_;
        std::vector<std::int32_t> table_;
        std::size_t inverse_radius_;
        std::vector<std::int32_t> inverse_table_;
    };

    // phi assembly: jump positions are the marked points, states are the
    // encoded marks, trajectory value at t is the state entered at the last
    // jump <= t.
    Trajectory assemble_trajectory(const MarkedConfiguration &marked, const SkeletonEncoder &encoder);

    // Exact inverse of assemble on cores; requires visible jumps.
    MarkedConfiguration disassemble(const Trajectory &traj, const SkeletonEncoder &encoder);

    struct ValidationReport
    {
        bool rate_matches = false;
        bool irreducible = false;
        bool aperiodic = false;
        bool entropy_matches = false;
        RatInterval alphabet_entropy;
        RatInterval skeleton_entropy;
        bool pass() const { return rate_matches && irreducible && aperiodic && entropy_matches; }
    };

    // Checks the preconditions the assembly relies on: intensity equals the
    // holding rate, mixing skeleton, and Shannon entropy of the mark
    // distribution equal to the skeleton entropy within kEntropyTolerance.
    ValidationReport validate_target(const MarkovSpec &spec, const MarkDistribution &dist,
                                     const Rational &rate);

    // Interval log evaluations carry width 2^-40; the entropy comparison
    // accepts differences up to 2^-30.
    inline const unsigned long kEntropyLogBits = 40;
    inline Rational entropy_tolerance() { return pow2_neg(30); }

    // Reference sampler: Poisson jump times of intensity holding_rate plus an
    // independent skeleton from the beta-seeded jump chain.
    Trajectory sample_ctmc(const MarkovSpec &spec, const Window &window, std::uint64_t seed,
                           unsigned long precision);

    void write_trajectory_csv(std::ostream &out, const Trajectory &traj,
                              const std::vector<std::string> &state_names);
    Trajectory read_trajectory_csv(std::istream &in, const std::vector<std::string> &state_names);
}
