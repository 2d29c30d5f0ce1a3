#pragma once

#include "finmark/flow.hpp"
#include "finmark/marking.hpp"
#include "finmark/stats.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace finmark
{
    // Trials are independent and keyed by seed; the parallel engine fans them
    // out with OpenMP and merges per-trial results by index, so serial and
    // parallel runs produce bit-identical reports. The serial engine is the
    // reference the parallel one is tested against.
    enum class ExecPolicy
    {
        serial,
        parallel,
    };

    struct TrialPlan
    {
        std::uint64_t base_seed = 20260809;
        std::size_t trials = 32;
        long window_cells = 4000; // symmetric window [-w/2, w/2] in unit cells
        Rational rate{1};
        unsigned long precision = 64;
        unsigned long mark_precision = 8192;
        SelectionParams selection{};
        std::vector<std::string> symbols{"0", "1"};
        std::vector<Rational> probs{Rational(1, 2), Rational(1, 2)};
        Rational significance{1, 1000};
        long buffer_cells = 2000;     // initial coding-window buffer
        long max_buffer_cells = 64000;

        MarkDistribution alphabet() const { return MarkDistribution(symbols, probs); }
        void validate() const;
    };

    TrialPlan plan_from_json(std::istream &in);
    void write_plan_json(std::ostream &out, const TrialPlan &plan);

    struct TestEntry
    {
        std::string name;
        std::string kind; // "exact" | "statistical" | "negative-control"
        bool pass = false;
        std::string details;
    };

    struct TestReport
    {
        std::string suite;
        std::vector<TestEntry> entries;
        bool pass() const;
    };

    void write_report_json(std::ostream &out, const TestReport &report);

    // ---- exact checks -----------------------------------------------------

    TestEntry check_round_trip(const TrialPlan &plan, std::size_t trials, ExecPolicy policy);
    TestEntry check_equivariance(const TrialPlan &plan, std::size_t trials, std::size_t shifts,
                                 ExecPolicy policy);
    TestEntry check_resampling_invariance(const TrialPlan &plan, std::size_t trials,
                                          ExecPolicy policy);
    TestEntry check_globe_geometry(const TrialPlan &plan, std::size_t trials, ExecPolicy policy);
    TestEntry check_borel_round_trip(const TrialPlan &plan, std::size_t draws);
    TestEntry check_perturbation_outside_w(const TrialPlan &plan, std::size_t trials,
                                           std::size_t perturbations, ExecPolicy policy);
    TestEntry check_grid_mode_cross(const TrialPlan &plan, std::size_t trials, ExecPolicy policy);

    TestEntry control_mark_corruption(const TrialPlan &plan, std::size_t trials);
    TestEntry control_permuted_inject(const TrialPlan &plan);

    // ---- statistical checks ------------------------------------------------

    TestEntry stat_sampler_counts(const TrialPlan &plan, std::size_t trials, ExecPolicy policy);
    TestEntry stat_sampler_independence(const TrialPlan &plan, std::size_t trials, ExecPolicy policy);
    TestEntry stat_borel_measure(const TrialPlan &plan, std::size_t draws);
    TestEntry stat_special_offsets(const TrialPlan &plan, std::size_t target_specials,
                                   ExecPolicy policy);
    TestEntry stat_globe_density(const TrialPlan &plan, std::size_t trials, ExecPolicy policy);
    TestEntry stat_psi_distribution(const TrialPlan &plan, std::size_t target_specials,
                                    ExecPolicy policy);
    TestEntry stat_assembly_joint(const TrialPlan &plan, std::size_t target_specials,
                                  ExecPolicy policy);
    TestEntry stat_flow_occupancy(const TrialPlan &plan, std::size_t trials, ExecPolicy policy);
    TestEntry stat_flow_gaps(const TrialPlan &plan, std::size_t trials, ExecPolicy policy);

    TestEntry control_skip_resampling(const TrialPlan &plan, std::size_t target_specials,
                                      ExecPolicy policy);

    // ---- coding windows ----------------------------------------------------

    struct CodingWindowStats
    {
        std::size_t finite = 0;
        std::size_t undetermined = 0;
        std::size_t extended = 0; // trials that needed more than buffer_cells
        Rational max_w{0};
        Rational median_w{0};
        bool medians_stable = false; // seed-half medians within 10%
    };

    CodingWindowStats coding_window_stats(const TrialPlan &plan, std::size_t trials,
                                          ExecPolicy policy);

    // ---- suites -------------------------------------------------------------

    TestReport run_exact_suite(const TrialPlan &plan, ExecPolicy policy);
    TestReport run_statistical_suite(const TrialPlan &plan, ExecPolicy policy);
    TestReport measure_coding_windows(const TrialPlan &plan, ExecPolicy policy);

    // Samples [-buffer, buffer] in cells and grows the buffer until the
    // coding window is determined; nullopt when max_buffer_cells is hit.
    std::optional<Rational> coding_window_with_extension(const TrialPlan &plan, std::uint64_t seed,
                                                         long &used_buffer);

    std::string describe(const GofResult &gof);
}
