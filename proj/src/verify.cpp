#include "finmark/verify.hpp"

#include "finmark/errors.hpp"
#include "finmark/rng.hpp"

#include <json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace finmark
{
    void TrialPlan::validate() const
    {
        if (trials == 0)
        {
            throw std::invalid_argument("TrialPlan: need at least one trial seed");
        }
        if (significance <= 0 || significance > Rational(1, 10))
        {
            throw std::invalid_argument("TrialPlan: significance outside (0, 1/10]");
        }
        if (window_cells < 4 || buffer_cells < 4 || max_buffer_cells < buffer_cells)
        {
            throw std::invalid_argument("TrialPlan: degenerate window sizes");
        }
        selection.validate();
        alphabet(); // validates symbols/probs
    }

    namespace
    {
        template <typename Fn>
        void for_each_trial(std::size_t n, ExecPolicy policy, Fn &&fn)
        {
            if (policy == ExecPolicy::parallel)
            {
                std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic)
                for (long i = 0; i < static_cast<long>(n); ++i)
                {
                    try
                    {
                        fn(static_cast<std::size_t>(i));
                    }
                    catch (const std::exception &e)
                    {
                        errors[static_cast<std::size_t>(i)] = e.what();
                    }
                }
                for (const std::string &e : errors)
                {
                    if (!e.empty())
                    {
                        throw std::runtime_error("trial failed: " + e);
                    }
                }
            }
            else
            {
                for (std::size_t i = 0; i < n; ++i)
                {
                    fn(i);
                }
            }
        }

        PointConfiguration cells_trial(const TrialPlan &plan, std::uint64_t seed,
                                       unsigned long precision)
        {
            const long half = plan.window_cells / 2;
            return sample_poisson_cells(plan.rate, -half, half, seed, precision);
        }

        Rational small_shift(std::uint64_t seed, std::size_t k)
        {
            RandomStream stream(seed, streams::kShift + k);
            const Integer raw = stream.next_bits(24);
            Rational t(raw - (Integer(1) << 23), Integer(1) << 12);
            t.canonicalize();
            return t;
        }

        bool globe_intervals_equal(const GlobeSet &a, const GlobeSet &b)
        {
            if (a.globes.size() != b.globes.size() || a.determinacy_margin != b.determinacy_margin)
            {
                return false;
            }
            for (std::size_t i = 0; i < a.globes.size(); ++i)
            {
                if (!a.globes[i].same_interval(b.globes[i]))
                {
                    return false;
                }
            }
            return true;
        }

        std::vector<std::pair<Rational, std::int32_t>> marked_slice(const MarkedConfiguration &mc,
                                                                    const Rational &lo,
                                                                    const Rational &hi)
        {
            std::vector<std::pair<Rational, std::int32_t>> slice;
            for (std::size_t i = 0; i < mc.base.points.size(); ++i)
            {
                if (mc.base.points[i] > lo && mc.base.points[i] < hi)
                {
                    slice.emplace_back(mc.base.points[i], mc.marks[i]);
                }
            }
            return slice;
        }

        // Replaces the content of every listed globe. `generator` returns the
        // replacement points for one globe.
        template <typename Gen>
        PointConfiguration resample_globes(const PointConfiguration &config, const GlobeSet &gs,
                                           Gen &&generator)
        {
            std::vector<Rational> points;
            points.reserve(config.points.size());
            std::size_t g = 0;
            for (const Rational &p : config.points)
            {
                while (g < gs.globes.size() && gs.globes[g].hi < p)
                {
                    ++g;
                }
                const bool inside = g < gs.globes.size() && p >= gs.globes[g].lo && p <= gs.globes[g].hi;
                if (!inside)
                {
                    points.push_back(p);
                }
            }
            for (std::size_t i = 0; i < gs.globes.size(); ++i)
            {
                const std::vector<Rational> fresh = generator(i, gs.globes[i]);
                points.insert(points.end(), fresh.begin(), fresh.end());
            }
            std::sort(points.begin(), points.end());
            points.erase(std::unique(points.begin(), points.end()), points.end());
            PointConfiguration out{config.window, std::move(points)};
            out.validate();
            return out;
        }

        MarkovSpec uniform_markov_spec(std::size_t states, const Rational &holding_rate)
        {
            std::vector<std::string> names;
            std::vector<std::vector<Rational>> m(states, std::vector<Rational>(states, Rational(0)));
            for (std::size_t i = 0; i < states; ++i)
            {
                names.push_back("s" + std::to_string(i));
                for (std::size_t j = 0; j < states; ++j)
                {
                    if (i != j)
                    {
                        m[i][j] = Rational(1, static_cast<unsigned long>(states - 1));
                    }
                }
            }
            return MarkovSpec(std::move(names), std::move(m), holding_rate);
        }

        std::size_t gap_bucket(const Rational &gap)
        {
            if (gap < Rational(1, 4))
            {
                return 0;
            }
            if (gap < Rational(3, 4))
            {
                return 1;
            }
            if (gap < Rational(3, 2))
            {
                return 2;
            }
            return 3;
        }

        std::size_t quarter_bucket(const Rational &v) // v in [0, 1)
        {
            if (v < Rational(1, 4))
            {
                return 0;
            }
            if (v < Rational(1, 2))
            {
                return 1;
            }
            if (v < Rational(3, 4))
            {
                return 2;
            }
            return 3;
        }

        std::size_t stretch_bucket(std::size_t n)
        {
            if (n < 400)
            {
                return 0;
            }
            if (n < 800)
            {
                return 1;
            }
            return 2;
        }

        std::string approx(const Rational &q)
        {
            std::ostringstream os;
            os.precision(6);
            os << q.get_d();
            return os.str();
        }
    }

    std::string describe(const GofResult &gof)
    {
        std::ostringstream os;
        os << gof.name << ": stat in [" << approx(gof.statistic.lo) << ", " << approx(gof.statistic.hi)
           << "], p in [" << approx(gof.p_value.lo) << ", " << approx(gof.p_value.hi)
           << "], n=" << gof.sample_size << ", df=" << gof.df
           << (gof.decided ? "" : " (undecided)") << (gof.pass ? " pass" : " FAIL");
        return os.str();
    }

    bool TestReport::pass() const
    {
        return std::all_of(entries.begin(), entries.end(), [](const TestEntry &e) { return e.pass; });
    }

    // ---- exact checks -----------------------------------------------------

    TestEntry check_round_trip(const TrialPlan &plan, std::size_t trials, ExecPolicy policy)
    {
        const MarkDistribution dist = plan.alphabet();
        std::vector<int> status(trials, 0); // 0 ok, 1 insufficient core, 2 mismatch
        const long half = plan.window_cells / 2;
        for_each_trial(trials, policy, [&](std::size_t i)
        {
            const PointConfiguration config = sample_poisson(
                plan.rate, Window(Rational(-half), Rational(half)), plan.base_seed + i, plan.precision);
            try
            {
                const PsiResult fwd = psi_forward(config, dist, plan.selection);
                const PointConfiguration back = psi_inverse(fwd.output, dist, plan.selection);
                status[i] = back == config ? 0 : 2;
            }
            catch (const InsufficientCore &)
            {
                status[i] = 1;
            }
        });
        const auto ok = std::count(status.begin(), status.end(), 0);
        const auto insufficient = std::count(status.begin(), status.end(), 1);
        const auto mismatch = std::count(status.begin(), status.end(), 2);
        TestEntry entry{"psi round trip exact", "exact", mismatch == 0 && ok > 0, ""};
        std::ostringstream os;
        os << ok << " exact round trips, " << insufficient << " windows without a core, " << mismatch
           << " mismatches";
        entry.details = os.str();
        return entry;
    }

    TestEntry check_equivariance(const TrialPlan &plan, std::size_t trials, std::size_t shifts,
                                 ExecPolicy policy)
    {
        const MarkDistribution dist = plan.alphabet();
        const IdentityEncoder encoder(dist.size());
        std::vector<int> bad(trials, 0);
        for_each_trial(trials, policy, [&](std::size_t i)
        {
            const std::uint64_t seed = plan.base_seed + i;
            const PointConfiguration config = cells_trial(plan, seed, plan.precision);
            for (std::size_t s = 0; s < shifts; ++s)
            {
                const Rational t = small_shift(seed, s);
                const PointConfiguration shifted = translate(config, t);

                const GlobeSet ga = find_globes(config, plan.selection);
                const GlobeSet gb = find_globes(shifted, plan.selection);
                if (gb.determinacy_margin != ga.determinacy_margin + t ||
                    gb.globes.size() != ga.globes.size())
                {
                    bad[i] = 1;
                    return;
                }
                for (std::size_t k = 0; k < ga.globes.size(); ++k)
                {
                    const Globe &a = ga.globes[k];
                    const Globe &b = gb.globes[k];
                    if (b.trigger != a.trigger + t || b.lo != a.lo + t || b.hi != a.hi + t ||
                        b.special != a.special)
                    {
                        bad[i] = 1;
                        return;
                    }
                }

                std::optional<PsiResult> fa;
                std::optional<PsiResult> fb;
                try
                {
                    fa = psi_forward(config, dist, plan.selection);
                }
                catch (const InsufficientCore &)
                {
                }
                try
                {
                    fb = psi_forward(shifted, dist, plan.selection);
                }
                catch (const InsufficientCore &)
                {
                }
                if (fa.has_value() != fb.has_value())
                {
                    bad[i] = 1;
                    return;
                }
                if (!fa)
                {
                    continue;
                }
                if (!(translate_marked(fa->output, t) == fb->output) ||
                    fb->core_region.lo != fa->core_region.lo + t ||
                    fb->core_region.hi != fa->core_region.hi + t)
                {
                    bad[i] = 1;
                    return;
                }
                const Trajectory ta = assemble_trajectory(core_slice(*fa), encoder);
                const Trajectory tb = assemble_trajectory(core_slice(*fb), encoder);
                if (ta.states != tb.states || ta.jumps.size() != tb.jumps.size())
                {
                    bad[i] = 1;
                    return;
                }
                for (std::size_t k = 0; k < ta.jumps.size(); ++k)
                {
                    if (tb.jumps[k] != ta.jumps[k] + t)
                    {
                        bad[i] = 1;
                        return;
                    }
                }
            }
        });
        const auto failures = std::count_if(bad.begin(), bad.end(), [](int b) { return b != 0; });
        TestEntry entry{"translation equivariance exact", "exact", failures == 0, ""};
        entry.details = std::to_string(trials) + " trials x " + std::to_string(shifts) +
                        " rational shifts, " + std::to_string(failures) + " failures";
        return entry;
    }

    TestEntry check_resampling_invariance(const TrialPlan &plan, std::size_t trials,
                                          ExecPolicy policy)
    {
        std::vector<int> bad(trials, 0);
        std::vector<int> globes_seen(trials, 0);
        for_each_trial(trials, policy, [&](std::size_t i)
        {
            const std::uint64_t seed = plan.base_seed + i;
            const PointConfiguration config = cells_trial(plan, seed, plan.precision);
            const GlobeSet gs = find_globes(config, plan.selection);
            if (gs.globes.empty())
            {
                return;
            }
            globes_seen[i] = 1;

            RandomStream adversary(seed, streams::kAdversary);
            auto fresh = [&](std::size_t, const Globe &g)
            {
                std::vector<Rational> pts;
                const unsigned long n = poisson_count(plan.rate * 2, adversary, plan.precision);
                for (unsigned long k = 0; k < n; ++k)
                {
                    Rational offset(adversary.next_bits(plan.precision), Integer(1) << plan.precision);
                    offset.canonicalize();
                    pts.push_back(g.lo + 2 * offset);
                }
                std::sort(pts.begin(), pts.end());
                pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
                return pts;
            };
            auto dense = [&](std::size_t, const Globe &g)
            {
                return std::vector<Rational>{g.lo + Rational(1, 8), g.lo + Rational(1, 2),
                                             g.lo + Rational(1), g.lo + Rational(3, 2),
                                             g.lo + Rational(15, 8), g.hi};
            };
            auto empty = [&](std::size_t, const Globe &) { return std::vector<Rational>{}; };

            const GlobeSet g1 = find_globes(resample_globes(config, gs, fresh), plan.selection);
            const GlobeSet g2 = find_globes(resample_globes(config, gs, dense), plan.selection);
            const GlobeSet g3 = find_globes(resample_globes(config, gs, empty), plan.selection);
            if (!globe_intervals_equal(gs, g1) || !globe_intervals_equal(gs, g2) ||
                !globe_intervals_equal(gs, g3))
            {
                bad[i] = 1;
            }
        });
        const auto failures = std::count_if(bad.begin(), bad.end(), [](int b) { return b != 0; });
        const auto with_globes = std::count_if(globes_seen.begin(), globes_seen.end(),
                                               [](int b) { return b != 0; });
        TestEntry entry{"globe resampling invariance exact", "exact",
                        failures == 0 && with_globes > 0, ""};
        entry.details = std::to_string(with_globes) + " configurations resampled (fresh Poisson, dense adversarial, emptied), " +
                        std::to_string(failures) + " globe-set changes";
        return entry;
    }

    TestEntry check_globe_geometry(const TrialPlan &plan, std::size_t trials, ExecPolicy policy)
    {
        const Rational required_gap = plan.selection.lookback - kGlobeLength;
        std::vector<int> bad(trials, 0);
        std::vector<Rational> min_gaps(trials, Rational(-1));
        for_each_trial(trials, policy, [&](std::size_t i)
        {
            const PointConfiguration config = cells_trial(plan, plan.base_seed + i, plan.precision);
            const GlobeSet gs = find_globes(config, plan.selection);
            for (std::size_t k = 0; k < gs.globes.size(); ++k)
            {
                const Globe &g = gs.globes[k];
                if (k > 0)
                {
                    const Rational gap = g.lo - gs.globes[k - 1].hi;
                    if (min_gaps[i] < 0 || gap < min_gaps[i])
                    {
                        min_gaps[i] = gap;
                    }
                    if (gap < required_gap)
                    {
                        bad[i] = 1;
                    }
                }
                // no trigger of any globe may sit inside a globe
                for (const Globe &other : gs.globes)
                {
                    if (other.trigger >= g.lo && other.trigger <= g.hi)
                    {
                        bad[i] = 1;
                    }
                }
            }
        });
        Rational min_gap(-1);
        for (const Rational &g : min_gaps)
        {
            if (g >= 0 && (min_gap < 0 || g < min_gap))
            {
                min_gap = g;
            }
        }
        const auto failures = std::count_if(bad.begin(), bad.end(), [](int b) { return b != 0; });
        TestEntry entry{"globe gaps and trigger placement exact", "exact", failures == 0, ""};
        entry.details = "min observed gap " + (min_gap < 0 ? std::string("n/a") : approx(min_gap)) +
                        " (required >= " + approx(required_gap) + "), " + std::to_string(failures) +
                        " violations";
        return entry;
    }

    TestEntry check_borel_round_trip(const TrialPlan &plan, std::size_t draws)
    {
        const MarkDistribution dist = plan.alphabet();
        RandomStream stream(plan.base_seed, streams::kBorel);
        std::size_t failures = 0;
        for (std::size_t i = 0; i < draws; ++i)
        {
            const Integer den = stream.next_below((Integer(1) << 32) - 1) + 1;
            const Integer num = stream.next_below(den);
            Rational u(num, den);
            u.canonicalize();
            const std::size_t k = stream.next_word() % 9;
            const UnitValue uv{u};
            auto [residual, marks] = extract(uv, k, dist);
            // cross-check the batched path against single digit steps
            UnitValue check = uv;
            for (std::size_t j = 0; j < k; ++j)
            {
                auto [m, rest] = digit_step(check, dist);
                if (m != marks[j])
                {
                    ++failures;
                    break;
                }
                check = rest;
            }
            if (check.value != residual.value)
            {
                ++failures;
            }
            if (inject(residual, marks, dist).value != u)
            {
                ++failures;
            }
        }
        TestEntry entry{"borel bijection exact round trip", "exact", failures == 0, ""};
        entry.details = std::to_string(draws) + " random rationals, k <= 8, " +
                        std::to_string(failures) + " failures";
        return entry;
    }

    TestEntry control_permuted_inject(const TrialPlan &plan)
    {
        const MarkDistribution dist = plan.alphabet();
        // A value whose first two digits differ; injecting them permuted must
        // not reproduce it.
        UnitValue u{Rational(1, 4)};
        auto [residual, marks] = extract(u, 2, dist);
        bool distinct = marks.size() == 2 && marks[0] != marks[1];
        std::vector<std::int32_t> permuted = marks;
        if (distinct)
        {
            std::swap(permuted[0], permuted[1]);
        }
        const bool changed = distinct && inject(residual, permuted, dist).value != u.value;
        TestEntry entry{"control: permuted marks break the round trip", "negative-control", changed,
                        changed ? "permuted inject differs from the original value"
                                : "control could not distinguish permuted marks"};
        return entry;
    }

    TestEntry control_mark_corruption(const TrialPlan &plan, std::size_t trials)
    {
        const MarkDistribution dist = plan.alphabet();
        std::size_t exercised = 0;
        std::size_t failures = 0;
        const long half = plan.window_cells / 2;
        for (std::size_t i = 0; i < trials; ++i)
        {
            const PointConfiguration config = sample_poisson(
                plan.rate, Window(Rational(-half), Rational(half)), plan.base_seed + i, plan.precision);
            try
            {
                const PsiResult fwd = psi_forward(config, dist, plan.selection);
                MarkedConfiguration corrupted = fwd.output;
                const Rational &target = fwd.witness.front().new_point;
                const auto it = std::lower_bound(corrupted.base.points.begin(),
                                                 corrupted.base.points.end(), target);
                const std::size_t idx =
                    static_cast<std::size_t>(it - corrupted.base.points.begin());
                corrupted.marks[idx] = static_cast<std::int32_t>(
                    (static_cast<std::size_t>(corrupted.marks[idx]) + 1) % dist.size());
                const PointConfiguration back = psi_inverse(corrupted, dist, plan.selection);
                ++exercised;
                if (back == config)
                {
                    ++failures; // corruption went unnoticed: harness is broken
                }
            }
            catch (const InsufficientCore &)
            {
            }
        }
        TestEntry entry{"control: corrupted mark changes the reconstruction", "negative-control",
                        failures == 0 && exercised > 0, ""};
        entry.details = std::to_string(exercised) + " corrupted round trips, " +
                        std::to_string(failures) + " went unnoticed";
        return entry;
    }

    TestEntry check_perturbation_outside_w(const TrialPlan &plan, std::size_t trials,
                                           std::size_t perturbations, ExecPolicy policy)
    {
        const MarkDistribution dist = plan.alphabet();
        std::vector<int> bad(trials, 0);
        std::vector<int> skipped(trials, 0);
        for_each_trial(trials, policy, [&](std::size_t i)
        {
            const std::uint64_t seed = plan.base_seed + i;
            long buffer = plan.buffer_cells;
            std::optional<PointConfiguration> config;
            std::optional<Rational> w;
            while (buffer <= plan.max_buffer_cells)
            {
                PointConfiguration candidate =
                    sample_poisson_cells(plan.rate, -buffer, buffer, seed, plan.precision);
                try
                {
                    w = coding_window(candidate, plan.selection);
                    config = std::move(candidate);
                    break;
                }
                catch (const std::runtime_error &)
                {
                    buffer *= 2;
                }
            }
            if (!config)
            {
                skipped[i] = 1;
                return;
            }
            const PsiResult base = psi_forward(*config, dist, plan.selection);
            const auto base_slice = marked_slice(base.output, Rational(-1), Rational(1));

            for (std::size_t p = 0; p < perturbations; ++p)
            {
                std::vector<Rational> points;
                for (const Rational &x : config->points)
                {
                    if (x > -*w && x < *w)
                    {
                        points.push_back(x);
                    }
                }
                // deterministic adversarial content outside (-w, w)
                if (p != 0)
                {
                    const Rational step = Rational(7 + static_cast<long>(p), 7);
                    for (Rational x = *w + Rational(1, 3); x < config->window.hi; x += step)
                    {
                        points.push_back(x);
                    }
                    if (p % 2 == 0)
                    {
                        for (Rational x = -*w - Rational(1, 3); x > config->window.lo; x -= step)
                        {
                            points.push_back(x);
                        }
                    }
                }
                std::sort(points.begin(), points.end());
                PointConfiguration perturbed{config->window, std::move(points)};
                try
                {
                    const PsiResult out = psi_forward(perturbed, dist, plan.selection);
                    if (marked_slice(out.output, Rational(-1), Rational(1)) != base_slice)
                    {
                        bad[i] = 1;
                        return;
                    }
                }
                catch (const std::runtime_error &)
                {
                    bad[i] = 1;
                    return;
                }
            }
        });
        const auto failures = std::count_if(bad.begin(), bad.end(), [](int b) { return b != 0; });
        const auto skips = std::count_if(skipped.begin(), skipped.end(), [](int b) { return b != 0; });
        TestEntry entry{"coding window shields (-1,1) from outside edits", "exact",
                        failures == 0 && skips == 0, ""};
        entry.details = std::to_string(trials) + " trials x " + std::to_string(perturbations) +
                        " perturbations, " + std::to_string(failures) + " leaks, " +
                        std::to_string(skips) + " undetermined";
        return entry;
    }

    TestEntry check_grid_mode_cross(const TrialPlan &plan, std::size_t trials, ExecPolicy policy)
    {
        // Warm-up mode: unit-interval partition, integer equivariance, and a
        // binary-expansion oracle for the fair-coin alphabet.
        const MarkDistribution coin({"0", "1"}, {Rational(1, 2), Rational(1, 2)});
        std::vector<int> bad(trials, 0);
        for_each_trial(trials, policy, [&](std::size_t i)
        {
            const std::uint64_t seed = plan.base_seed + i;
            PointConfiguration config = sample_poisson_cells(plan.rate, -24, 24, seed, plan.precision);
            try
            {
                const PsiResult fwd =
                    psi_forward(config, coin, plan.selection, MarkingMode::unit_grid);
                const PointConfiguration back =
                    psi_inverse(fwd.output, coin, plan.selection, MarkingMode::unit_grid);
                if (!(back == config))
                {
                    bad[i] = 1;
                    return;
                }
                // integer-shift equivariance
                const PsiResult shifted =
                    psi_forward(translate(config, Rational(3)), coin, plan.selection,
                                MarkingMode::unit_grid);
                if (!(translate_marked(fwd.output, Rational(3)) == shifted.output))
                {
                    bad[i] = 1;
                    return;
                }
                // binary-expansion oracle: marks are the leading binary digits of v
                for (const GlobeWitness &w : fwd.witness)
                {
                    Rational v = w.v;
                    for (const std::int32_t mark : w.marks)
                    {
                        v *= 2;
                        const std::int32_t bit = v >= 1 ? 1 : 0;
                        if (bit != mark)
                        {
                            bad[i] = 1;
                            return;
                        }
                        if (bit == 1)
                        {
                            v -= 1;
                        }
                    }
                    if (v != w.g)
                    {
                        bad[i] = 1;
                        return;
                    }
                }
            }
            catch (const InsufficientCore &)
            {
            }
        });
        const auto failures = std::count_if(bad.begin(), bad.end(), [](int b) { return b != 0; });
        TestEntry entry{"integer-grid warm-up agrees with binary-expansion oracle", "exact",
                        failures == 0, ""};
        entry.details = std::to_string(trials) + " trials, " + std::to_string(failures) + " failures";
        return entry;
    }

    // ---- statistical checks -------------------------------------------------

    TestEntry stat_sampler_counts(const TrialPlan &plan, std::size_t trials, ExecPolicy policy)
    {
        constexpr std::size_t kCells = 8;
        constexpr std::size_t kTail = 6;
        std::vector<std::vector<std::size_t>> partial(trials,
                                                      std::vector<std::size_t>(kTail + 1, 0));
        for_each_trial(trials, policy, [&](std::size_t i)
        {
            const PointConfiguration config = sample_poisson(
                plan.rate, Window(Rational(0), Rational(kCells)), plan.base_seed + i, plan.precision);
            std::vector<std::size_t> counts(kCells, 0);
            for (const Rational &p : config.points)
            {
                const Integer cell = floor_of(p);
                const unsigned long c = static_cast<unsigned long>(mpz_get_ui(cell.get_mpz_t()));
                if (c < kCells)
                {
                    ++counts[c];
                }
            }
            for (const std::size_t c : counts)
            {
                ++partial[i][std::min<std::size_t>(c, kTail)];
            }
        });
        std::vector<std::size_t> pooled(kTail + 1, 0);
        for (const auto &row : partial)
        {
            for (std::size_t b = 0; b <= kTail; ++b)
            {
                pooled[b] += row[b];
            }
        }
        const auto probs = poisson_bucket_probs(plan.rate, kTail, 160);
        const GofResult gof =
            chi_square_gof_interval("unit counts vs Poisson pmf", pooled, probs, plan.significance);
        return TestEntry{"sampler unit-interval counts", "statistical", gof.pass, describe(gof)};
    }

    TestEntry stat_sampler_independence(const TrialPlan &plan, std::size_t trials, ExecPolicy policy)
    {
        std::vector<std::pair<std::size_t, std::size_t>> obs(trials);
        for_each_trial(trials, policy, [&](std::size_t i)
        {
            const PointConfiguration config = sample_poisson(
                plan.rate, Window(Rational(0), Rational(2)), plan.base_seed + i, plan.precision);
            std::size_t c0 = 0;
            std::size_t c1 = 0;
            for (const Rational &p : config.points)
            {
                (p < 1 ? c0 : c1) += 1;
            }
            obs[i] = {std::min<std::size_t>(c0, 3), std::min<std::size_t>(c1, 3)};
        });
        std::vector<std::vector<std::size_t>> table(4, std::vector<std::size_t>(4, 0));
        for (const auto &[a, b] : obs)
        {
            ++table[a][b];
        }
        const GofResult gof = chi_square_independence("counts in disjoint unit intervals independent",
                                                      table, plan.significance);
        return TestEntry{"sampler count independence", "statistical", gof.pass, describe(gof)};
    }

    TestEntry stat_borel_measure(const TrialPlan &plan, std::size_t draws)
    {
        const MarkDistribution dist = plan.alphabet();
        RandomStream stream(plan.base_seed + 17, streams::kBorel);
        const std::size_t a = dist.size();
        std::vector<std::size_t> triple_counts(a * a * a, 0);
        std::vector<Rational> residuals;
        residuals.reserve(draws);
        std::vector<std::vector<std::size_t>> factor_table(a, std::vector<std::size_t>(4, 0));
        for (std::size_t i = 0; i < draws; ++i)
        {
            const UnitValue u{stream.next_unit(64)};
            auto [residual, marks] = extract(u, 3, dist);
            const std::size_t key = (static_cast<std::size_t>(marks[0]) * a +
                                     static_cast<std::size_t>(marks[1])) * a +
                                    static_cast<std::size_t>(marks[2]);
            ++triple_counts[key];
            residuals.push_back(residual.value);
            ++factor_table[static_cast<std::size_t>(marks[0])][quarter_bucket(residual.value)];
        }
        std::vector<Rational> triple_probs(a * a * a);
        for (std::size_t x = 0; x < a; ++x)
        {
            for (std::size_t y = 0; y < a; ++y)
            {
                for (std::size_t z = 0; z < a; ++z)
                {
                    triple_probs[(x * a + y) * a + z] =
                        dist.probs()[x] * dist.probs()[y] * dist.probs()[z];
                }
            }
        }
        const GofResult g1 = chi_square_gof("mark triples vs alpha^3", triple_counts, triple_probs,
                                            plan.significance);
        const GofResult g2 =
            ks_uniform("residual vs uniform", residuals, Rational(0), Rational(1), plan.significance);
        const GofResult g3 = chi_square_independence("first mark vs residual quarter", factor_table,
                                                     plan.significance);
        TestEntry entry{"borel measure preservation", "statistical", g1.pass && g2.pass && g3.pass,
                        describe(g1) + "; " + describe(g2) + "; " + describe(g3)};
        return entry;
    }

    namespace
    {
        struct SpecialsHarvest
        {
            std::vector<Rational> offsets;          // s - c in [-1, 1]
            std::vector<std::size_t> stretch_sizes; // non-special points before each special
        };

        std::size_t trials_for_specials(const TrialPlan &plan, std::size_t target)
        {
            const double per_trial = static_cast<double>(plan.window_cells) / 690.0;
            const double need = static_cast<double>(target) * 1.3 / std::max(per_trial, 0.1);
            return static_cast<std::size_t>(need) + 1;
        }
    }

    TestEntry stat_special_offsets(const TrialPlan &plan, std::size_t target_specials,
                                   ExecPolicy policy)
    {
        const std::size_t trials = trials_for_specials(plan, target_specials);
        std::vector<SpecialsHarvest> partial(trials);
        for_each_trial(trials, policy, [&](std::size_t i)
        {
            const PointConfiguration config = cells_trial(plan, plan.base_seed + i, plan.precision);
            const GlobeSet gs = find_globes(config, plan.selection);
            const auto &pts = config.points;
            const Globe *prev_special = nullptr;
            for (const Globe &g : gs.globes)
            {
                if (!g.special)
                {
                    continue;
                }
                if (prev_special != nullptr)
                {
                    const auto first = std::upper_bound(pts.begin(), pts.end(), prev_special->hi);
                    const auto last = std::lower_bound(pts.begin(), pts.end(), g.lo);
                    partial[i].offsets.push_back(*g.special_point - g.center);
                    partial[i].stretch_sizes.push_back(static_cast<std::size_t>(last - first));
                }
                prev_special = &g;
            }
        });
        std::vector<Rational> offsets;
        std::vector<std::vector<std::size_t>> table(4, std::vector<std::size_t>(3, 0));
        for (const auto &h : partial)
        {
            for (std::size_t k = 0; k < h.offsets.size(); ++k)
            {
                const Rational v = (h.offsets[k] + 1) / 2; // map [-1,1] to [0,1]
                ++table[quarter_bucket(v == 1 ? Rational(0) : v)][stretch_bucket(h.stretch_sizes[k])];
                offsets.push_back(h.offsets[k]);
            }
        }
        if (offsets.size() < target_specials)
        {
            return TestEntry{"special point offsets", "statistical", false,
                             "collected only " + std::to_string(offsets.size()) + " specials"};
        }
        const GofResult g1 = ks_uniform("offsets vs uniform[-1,1]", offsets, Rational(-1),
                                        Rational(1), plan.significance);
        const GofResult g2 = chi_square_independence("offset quarter vs preceding stretch size",
                                                     table, plan.significance);
        TestEntry entry{"special point offsets uniform and outside-independent", "statistical",
                        g1.pass && g2.pass,
                        std::to_string(offsets.size()) + " specials; " + describe(g1) + "; " +
                            describe(g2)};
        return entry;
    }

    TestEntry stat_globe_density(const TrialPlan &plan, std::size_t trials, ExecPolicy policy)
    {
        std::vector<std::size_t> small_counts(trials, 0);
        std::vector<std::size_t> large_counts(trials, 0);
        for_each_trial(trials, policy, [&](std::size_t i)
        {
            const long half = plan.window_cells / 2;
            const PointConfiguration small_cfg =
                sample_poisson_cells(plan.rate, -half, half, plan.base_seed + i, plan.precision);
            const PointConfiguration large_cfg = sample_poisson_cells(
                plan.rate, -2 * half, 2 * half, plan.base_seed + i, plan.precision);
            small_counts[i] = find_globes(small_cfg, plan.selection).globes.size();
            large_counts[i] = find_globes(large_cfg, plan.selection).globes.size();
        });
        const double small_total = static_cast<double>(
            std::accumulate(small_counts.begin(), small_counts.end(), std::size_t{0}));
        const double large_total = static_cast<double>(
            std::accumulate(large_counts.begin(), large_counts.end(), std::size_t{0}));
        const double d1 = small_total / (static_cast<double>(trials * plan.window_cells));
        const double d2 = large_total / (static_cast<double>(trials * 2 * plan.window_cells));
        const bool pass = d1 > 0 && d2 > 0 && std::abs(d1 / d2 - 1.0) <= 0.1;
        std::ostringstream os;
        os << "globes per unit length " << d1 << " vs " << d2 << " at doubled window";
        return TestEntry{"globe density positive and stable", "statistical", pass, os.str()};
    }

    namespace
    {
        struct PsiHarvest
        {
            std::vector<std::size_t> count_buckets = std::vector<std::size_t>(7, 0);
            std::vector<std::size_t> mark_counts;
            std::vector<std::vector<std::size_t>> gap_mark;
            std::vector<std::vector<std::size_t>> pair_marks;
            std::vector<std::vector<std::size_t>> offset_first_mark;
            std::size_t specials = 0;

            explicit PsiHarvest(std::size_t a)
                : mark_counts(a, 0), gap_mark(4, std::vector<std::size_t>(a, 0)),
                  pair_marks(a, std::vector<std::size_t>(a, 0)),
                  offset_first_mark(4, std::vector<std::size_t>(a, 0))
            {
            }
        };

        void harvest_psi(const TrialPlan &plan, const MarkDistribution &dist, std::uint64_t seed,
                         bool skip_resampling, PsiHarvest &out)
        {
            const PointConfiguration config = cells_trial(plan, seed, plan.mark_precision);
            std::optional<PsiResult> maybe_fwd;
            try
            {
                maybe_fwd = psi_forward(config, dist, plan.selection);
            }
            catch (const InsufficientCore &)
            {
                return;
            }
            const PsiResult &fwd = *maybe_fwd;
            MarkedConfiguration output = fwd.output;
            if (skip_resampling)
            {
                // Broken pipeline for the negative control: marks assigned but
                // special points left where they were.
                for (const GlobeWitness &w : fwd.witness)
                {
                    const auto it = std::lower_bound(output.base.points.begin(),
                                                     output.base.points.end(), w.new_point);
                    output.base.points[static_cast<std::size_t>(it - output.base.points.begin())] =
                        w.original_point;
                }
                std::sort(output.base.points.begin(), output.base.points.end());
            }

            // unit-cell counts inside the core region
            const Integer c_lo = ceil_of(fwd.core_region.lo);
            const Integer c_hi = floor_of(fwd.core_region.hi);
            for (Integer c = c_lo; c + 1 <= c_hi; ++c)
            {
                const Rational cell_lo(c, 1);
                const Rational cell_hi(c + 1, 1);
                const auto first = std::lower_bound(output.base.points.begin(),
                                                    output.base.points.end(), cell_lo);
                const auto last = std::lower_bound(output.base.points.begin(),
                                                   output.base.points.end(), cell_hi);
                ++out.count_buckets[std::min<std::size_t>(static_cast<std::size_t>(last - first), 6)];
            }

            // marks, gaps, neighbour pairs
            std::int32_t prev_mark = kNoMark;
            for (std::size_t i = 0; i < output.base.points.size(); ++i)
            {
                const std::int32_t m = output.marks[i];
                if (m == kNoMark)
                {
                    prev_mark = kNoMark;
                    continue;
                }
                ++out.mark_counts[static_cast<std::size_t>(m)];
                if (i > 0)
                {
                    ++out.gap_mark[gap_bucket(output.base.points[i] - output.base.points[i - 1])]
                                  [static_cast<std::size_t>(m)];
                }
                if (prev_mark != kNoMark)
                {
                    ++out.pair_marks[static_cast<std::size_t>(prev_mark)][static_cast<std::size_t>(m)];
                }
                prev_mark = m;
            }

            // resident offset (within its interval) vs the first extracted mark
            for (const GlobeWitness &w : fwd.witness)
            {
                const Rational offset = skip_resampling
                                            ? (w.original_point - w.interval_lo) /
                                                  (w.interval_hi - w.interval_lo)
                                            : w.g;
                ++out.offset_first_mark[quarter_bucket(offset == 1 ? Rational(0) : offset)]
                                       [static_cast<std::size_t>(w.marks.front())];
                ++out.specials;
            }
        }

        void merge_harvest(PsiHarvest &into, const PsiHarvest &from)
        {
            for (std::size_t i = 0; i < into.count_buckets.size(); ++i)
            {
                into.count_buckets[i] += from.count_buckets[i];
            }
            for (std::size_t i = 0; i < into.mark_counts.size(); ++i)
            {
                into.mark_counts[i] += from.mark_counts[i];
            }
            for (std::size_t r = 0; r < into.gap_mark.size(); ++r)
            {
                for (std::size_t c = 0; c < into.gap_mark[r].size(); ++c)
                {
                    into.gap_mark[r][c] += from.gap_mark[r][c];
                }
            }
            for (std::size_t r = 0; r < into.pair_marks.size(); ++r)
            {
                for (std::size_t c = 0; c < into.pair_marks[r].size(); ++c)
                {
                    into.pair_marks[r][c] += from.pair_marks[r][c];
                }
            }
            for (std::size_t r = 0; r < into.offset_first_mark.size(); ++r)
            {
                for (std::size_t c = 0; c < into.offset_first_mark[r].size(); ++c)
                {
                    into.offset_first_mark[r][c] += from.offset_first_mark[r][c];
                }
            }
            into.specials += from.specials;
        }
    }

    TestEntry stat_psi_distribution(const TrialPlan &plan, std::size_t target_specials,
                                    ExecPolicy policy)
    {
        const MarkDistribution dist = plan.alphabet();
        const std::size_t trials = trials_for_specials(plan, target_specials);
        std::vector<PsiHarvest> partial(trials, PsiHarvest(dist.size()));
        for_each_trial(trials, policy, [&](std::size_t i)
        { harvest_psi(plan, dist, plan.base_seed + i, false, partial[i]); });
        PsiHarvest total(dist.size());
        for (const auto &h : partial)
        {
            merge_harvest(total, h);
        }
        if (total.specials < target_specials)
        {
            return TestEntry{"psi output distribution", "statistical", false,
                             "collected only " + std::to_string(total.specials) + " specials"};
        }
        const auto probs = poisson_bucket_probs(plan.rate, 6, 160);
        const GofResult g1 = chi_square_gof_interval("output unit counts vs Poisson", total.count_buckets,
                                                     probs, plan.significance);
        const GofResult g2 =
            chi_square_gof("marks vs alpha", total.mark_counts, dist.probs(), plan.significance);
        const GofResult g3 =
            chi_square_independence("mark vs preceding gap", total.gap_mark, plan.significance);
        const GofResult g4 =
            chi_square_independence("consecutive marks", total.pair_marks, plan.significance);
        const GofResult g5 = chi_square_independence("resident offset vs first stretch mark",
                                                     total.offset_first_mark, plan.significance);
        TestEntry entry{"psi output distribution", "statistical",
                        g1.pass && g2.pass && g3.pass && g4.pass && g5.pass,
                        std::to_string(total.specials) + " specials; " + describe(g1) + "; " +
                            describe(g2) + "; " + describe(g3) + "; " + describe(g4) + "; " +
                            describe(g5)};
        return entry;
    }

    TestEntry control_skip_resampling(const TrialPlan &plan, std::size_t target_specials,
                                      ExecPolicy policy)
    {
        const MarkDistribution dist = plan.alphabet();
        const std::size_t trials = trials_for_specials(plan, target_specials);
        std::vector<PsiHarvest> partial(trials, PsiHarvest(dist.size()));
        for_each_trial(trials, policy, [&](std::size_t i)
        { harvest_psi(plan, dist, plan.base_seed + i, true, partial[i]); });
        PsiHarvest total(dist.size());
        for (const auto &h : partial)
        {
            merge_harvest(total, h);
        }
        const GofResult joint = chi_square_independence("resident offset vs first stretch mark",
                                                        total.offset_first_mark, plan.significance);
        // The broken pipeline leaves the special points where the marks were
        // read from, so the joint law must fail.
        TestEntry entry{"control: skipping the resample fails the joint Poisson battery",
                        "negative-control", joint.decided && !joint.pass,
                        std::to_string(total.specials) + " specials; " + describe(joint)};
        return entry;
    }

    TestEntry stat_assembly_joint(const TrialPlan &plan, std::size_t target_specials,
                                  ExecPolicy policy)
    {
        const MarkDistribution dist = plan.alphabet();
        const IdentityEncoder encoder(dist.size());
        const std::size_t trials = trials_for_specials(plan, target_specials);
        struct Harvest
        {
            std::vector<Rational> gaps;
            std::vector<std::size_t> state_counts;
            std::vector<std::vector<std::size_t>> gap_state = std::vector<std::vector<std::size_t>>(4);
        };
        std::vector<Harvest> partial(trials);
        for_each_trial(trials, policy, [&](std::size_t i)
        {
            partial[i].state_counts.assign(dist.size(), 0);
            for (auto &row : partial[i].gap_state)
            {
                row.assign(dist.size(), 0);
            }
            const PointConfiguration config = cells_trial(plan, plan.base_seed + i, plan.mark_precision);
            try
            {
                const PsiResult fwd = psi_forward(config, dist, plan.selection);
                const Trajectory traj = assemble_trajectory(core_slice(fwd), encoder);
                for (std::size_t k = 1; k < traj.jumps.size(); ++k)
                {
                    const Rational gap = traj.jumps[k] - traj.jumps[k - 1];
                    partial[i].gaps.push_back(gap);
                    ++partial[i].state_counts[static_cast<std::size_t>(traj.states[k])];
                    ++partial[i].gap_state[gap_bucket(gap)][static_cast<std::size_t>(traj.states[k])];
                }
            }
            catch (const InsufficientCore &)
            {
            }
        });
        std::vector<Rational> gaps;
        std::vector<std::size_t> state_counts(dist.size(), 0);
        std::vector<std::vector<std::size_t>> gap_state(4, std::vector<std::size_t>(dist.size(), 0));
        for (const auto &h : partial)
        {
            gaps.insert(gaps.end(), h.gaps.begin(), h.gaps.end());
            for (std::size_t s = 0; s < dist.size(); ++s)
            {
                state_counts[s] += h.state_counts[s];
            }
            for (std::size_t r = 0; r < 4; ++r)
            {
                for (std::size_t s = 0; s < dist.size(); ++s)
                {
                    gap_state[r][s] += h.gap_state[r][s];
                }
            }
        }
        const GofResult g1 = ks_exponential("jump gaps vs Exp(rate)", gaps, plan.rate, plan.significance);
        const GofResult g2 =
            chi_square_gof("states vs alpha", state_counts, dist.probs(), plan.significance);
        const GofResult g3 = chi_square_independence("jump gap vs state", gap_state, plan.significance);
        TestEntry entry{"assembled trajectory: jumps Poisson, skeleton iid, independent", "statistical",
                        g1.pass && g2.pass && g3.pass,
                        std::to_string(gaps.size()) + " gaps; " + describe(g1) + "; " + describe(g2) +
                            "; " + describe(g3)};
        return entry;
    }

    TestEntry stat_flow_occupancy(const TrialPlan &plan, std::size_t trials, ExecPolicy policy)
    {
        const MarkovSpec spec = uniform_markov_spec(3, plan.rate);
        std::vector<std::int32_t> observed(trials, -1);
        for_each_trial(trials, policy, [&](std::size_t i)
        {
            const Trajectory traj =
                sample_ctmc(spec, Window(Rational(0), Rational(16)), plan.base_seed + i, plan.precision);
            const long seg = traj.segment_of(Rational(8));
            observed[i] = seg < 0 ? traj.leading_state : traj.states[static_cast<std::size_t>(seg)];
        });
        std::vector<std::size_t> counts(spec.size(), 0);
        for (const std::int32_t s : observed)
        {
            ++counts[static_cast<std::size_t>(s)];
        }
        const GofResult gof = chi_square_gof("occupancy at fixed time vs stationary", counts,
                                             spec.stationary(), plan.significance);
        return TestEntry{"ctmc occupancy matches stationary law", "statistical", gof.pass,
                         describe(gof)};
    }

    TestEntry stat_flow_gaps(const TrialPlan &plan, std::size_t trials, ExecPolicy policy)
    {
        const MarkovSpec spec = uniform_markov_spec(3, plan.rate);
        struct Harvest
        {
            std::vector<Rational> gaps;
            std::vector<std::vector<std::size_t>> gap_state =
                std::vector<std::vector<std::size_t>>(4, std::vector<std::size_t>(3, 0));
        };
        std::vector<Harvest> partial(trials);
        for_each_trial(trials, policy, [&](std::size_t i)
        {
            const Trajectory traj = sample_ctmc(spec, Window(Rational(0), Rational(plan.window_cells)),
                                                plan.base_seed + i, plan.precision);
            for (std::size_t k = 1; k < traj.jumps.size(); ++k)
            {
                const Rational gap = traj.jumps[k] - traj.jumps[k - 1];
                partial[i].gaps.push_back(gap);
                ++partial[i].gap_state[gap_bucket(gap)][static_cast<std::size_t>(traj.states[k])];
            }
        });
        std::vector<Rational> gaps;
        std::vector<std::vector<std::size_t>> gap_state(4, std::vector<std::size_t>(3, 0));
        for (const auto &h : partial)
        {
            gaps.insert(gaps.end(), h.gaps.begin(), h.gaps.end());
            for (std::size_t r = 0; r < 4; ++r)
            {
                for (std::size_t c = 0; c < 3; ++c)
                {
                    gap_state[r][c] += h.gap_state[r][c];
                }
            }
        }
        const GofResult g1 = ks_exponential("holding times vs Exp(holding rate)", gaps,
                                            spec.holding_rate(), plan.significance);
        const GofResult g2 =
            chi_square_independence("holding time vs entered state", gap_state, plan.significance);
        return TestEntry{"ctmc jump gaps exponential and skeleton-independent", "statistical",
                         g1.pass && g2.pass, describe(g1) + "; " + describe(g2)};
    }

    // ---- coding windows -------------------------------------------------

    std::optional<Rational> coding_window_with_extension(const TrialPlan &plan, std::uint64_t seed,
                                                         long &used_buffer)
    {
        long buffer = plan.buffer_cells;
        while (buffer <= plan.max_buffer_cells)
        {
            const PointConfiguration config =
                sample_poisson_cells(plan.rate, -buffer, buffer, seed, plan.precision);
            try
            {
                const Rational w = coding_window(config, plan.selection);
                used_buffer = buffer;
                return w;
            }
            catch (const std::runtime_error &)
            {
                buffer *= 2;
            }
        }
        used_buffer = buffer;
        return std::nullopt;
    }

    CodingWindowStats coding_window_stats(const TrialPlan &plan, std::size_t trials,
                                          ExecPolicy policy)
    {
        std::vector<std::optional<Rational>> ws(trials);
        std::vector<long> buffers(trials, 0);
        for_each_trial(trials, policy, [&](std::size_t i)
        { ws[i] = coding_window_with_extension(plan, plan.base_seed + i, buffers[i]); });

        CodingWindowStats stats;
        std::vector<Rational> finite;
        for (std::size_t i = 0; i < trials; ++i)
        {
            if (ws[i])
            {
                ++stats.finite;
                finite.push_back(*ws[i]);
                if (buffers[i] > plan.buffer_cells)
                {
                    ++stats.extended;
                }
                if (*ws[i] > stats.max_w)
                {
                    stats.max_w = *ws[i];
                }
            }
            else
            {
                ++stats.undetermined;
            }
        }
        auto median_of = [](std::vector<Rational> v)
        {
            if (v.empty())
            {
                return Rational(0);
            }
            std::sort(v.begin(), v.end());
            return v[v.size() / 2];
        };
        stats.median_w = median_of(finite);
        std::vector<Rational> first_half, second_half;
        for (std::size_t i = 0; i < trials; ++i)
        {
            if (ws[i])
            {
                (i % 2 == 0 ? first_half : second_half).push_back(*ws[i]);
            }
        }
        const Rational m1 = median_of(first_half);
        const Rational m2 = median_of(second_half);
        const Rational larger = std::max(m1, m2);
        stats.medians_stable = larger > 0 && abs_of(m1 - m2) <= larger / 10;
        return stats;
    }

    TestReport measure_coding_windows(const TrialPlan &plan, ExecPolicy policy)
    {
        plan.validate();
        const CodingWindowStats stats = coding_window_stats(plan, plan.trials, policy);
        TestReport report{"coding-windows", {}};
        std::ostringstream os;
        os << stats.finite << " finite, " << stats.undetermined << " undetermined, "
           << stats.extended << " needed buffer beyond " << plan.buffer_cells << " cells; max w "
           << approx(stats.max_w) << ", median w " << approx(stats.median_w);
        report.entries.push_back(TestEntry{"coding windows finite", "statistical",
                                           stats.undetermined == 0 && stats.finite > 0, os.str()});
        report.entries.push_back(TestEntry{"median coding window stable across seed halves",
                                           "statistical", stats.medians_stable,
                                           "split-half medians within 10%"});
        return report;
    }

    // ---- suites ----------------------------------------------------------

    TestReport run_exact_suite(const TrialPlan &plan, ExecPolicy policy)
    {
        plan.validate();
        TestReport report{"exact", {}};
        report.entries.push_back(check_round_trip(plan, plan.trials, policy));
        report.entries.push_back(check_equivariance(plan, std::max<std::size_t>(plan.trials / 4, 2), 3, policy));
        report.entries.push_back(check_resampling_invariance(plan, std::max<std::size_t>(plan.trials / 2, 2), policy));
        report.entries.push_back(check_globe_geometry(plan, plan.trials, policy));
        report.entries.push_back(check_borel_round_trip(plan, 2000));
        report.entries.push_back(check_perturbation_outside_w(plan, std::max<std::size_t>(plan.trials / 8, 2), 4, policy));
        report.entries.push_back(check_grid_mode_cross(plan, std::max<std::size_t>(plan.trials / 4, 2), policy));
        report.entries.push_back(control_mark_corruption(plan, std::max<std::size_t>(plan.trials / 4, 2)));
        report.entries.push_back(control_permuted_inject(plan));
        return report;
    }

    TestReport run_statistical_suite(const TrialPlan &plan, ExecPolicy policy)
    {
        plan.validate();
        TestReport report{"statistical", {}};
        report.entries.push_back(stat_sampler_counts(plan, 10000, policy));
        report.entries.push_back(stat_sampler_independence(plan, 10000, policy));
        report.entries.push_back(stat_borel_measure(plan, 100000));
        report.entries.push_back(stat_special_offsets(plan, 20000, policy));
        report.entries.push_back(stat_globe_density(plan, std::max<std::size_t>(plan.trials / 2, 2), policy));
        report.entries.push_back(stat_psi_distribution(plan, 20000, policy));
        report.entries.push_back(stat_assembly_joint(plan, 4000, policy));
        report.entries.push_back(stat_flow_occupancy(plan, 4000, policy));
        report.entries.push_back(stat_flow_gaps(plan, 32, policy));
        report.entries.push_back(control_skip_resampling(plan, 3000, policy));
        return report;
    }

    // ---- JSON ------------------------------------------------------------

    TrialPlan plan_from_json(std::istream &in)
    {
        nlohmann::json j;
        in >> j;
        TrialPlan plan;
        if (j.contains("base_seed"))
        {
            plan.base_seed = j["base_seed"].get<std::uint64_t>();
        }
        if (j.contains("trials"))
        {
            plan.trials = j["trials"].get<std::size_t>();
        }
        if (j.contains("window_cells"))
        {
            plan.window_cells = j["window_cells"].get<long>();
        }
        if (j.contains("rate"))
        {
            plan.rate = parse_rational(j["rate"].get<std::string>());
        }
        if (j.contains("precision"))
        {
            plan.precision = j["precision"].get<unsigned long>();
        }
        if (j.contains("mark_precision"))
        {
            plan.mark_precision = j["mark_precision"].get<unsigned long>();
        }
        if (j.contains("lookback"))
        {
            plan.selection.lookback = parse_rational(j["lookback"].get<std::string>());
        }
        if (j.contains("anchor_gap"))
        {
            plan.selection.anchor_gap = parse_rational(j["anchor_gap"].get<std::string>());
        }
        if (j.contains("alphabet"))
        {
            plan.symbols.clear();
            plan.probs.clear();
            for (const auto &entry : j["alphabet"])
            {
                plan.symbols.push_back(entry[0].get<std::string>());
                plan.probs.push_back(parse_rational(entry[1].get<std::string>()));
            }
        }
        if (j.contains("significance"))
        {
            plan.significance = parse_rational(j["significance"].get<std::string>());
        }
        if (j.contains("buffer_cells"))
        {
            plan.buffer_cells = j["buffer_cells"].get<long>();
        }
        if (j.contains("max_buffer_cells"))
        {
            plan.max_buffer_cells = j["max_buffer_cells"].get<long>();
        }
        plan.validate();
        return plan;
    }

    void write_plan_json(std::ostream &out, const TrialPlan &plan)
    {
        nlohmann::json j;
        j["base_seed"] = plan.base_seed;
        j["trials"] = plan.trials;
        j["window_cells"] = plan.window_cells;
        j["rate"] = to_string(plan.rate);
        j["precision"] = plan.precision;
        j["mark_precision"] = plan.mark_precision;
        j["lookback"] = to_string(plan.selection.lookback);
        j["anchor_gap"] = to_string(plan.selection.anchor_gap);
        nlohmann::json alphabet = nlohmann::json::array();
        for (std::size_t i = 0; i < plan.symbols.size(); ++i)
        {
            alphabet.push_back({plan.symbols[i], to_string(plan.probs[i])});
        }
        j["alphabet"] = std::move(alphabet);
        j["significance"] = to_string(plan.significance);
        j["buffer_cells"] = plan.buffer_cells;
        j["max_buffer_cells"] = plan.max_buffer_cells;
        out << j.dump(2) << '\n';
    }

    void write_report_json(std::ostream &out, const TestReport &report)
    {
        nlohmann::json j;
        j["suite"] = report.suite;
        j["verdict"] = report.pass() ? "pass" : "fail";
        nlohmann::json entries = nlohmann::json::array();
        for (const TestEntry &e : report.entries)
        {
            entries.push_back({{"name", e.name}, {"kind", e.kind}, {"pass", e.pass}, {"details", e.details}});
        }
        j["tests"] = std::move(entries);
        out << j.dump(2) << '\n';
    }
}
