#include "finmark/errors.hpp"
#include "finmark/flow.hpp"
#include "finmark/marking.hpp"
#include "finmark/pointproc.hpp"
#include "finmark/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>

namespace
{
    constexpr int kExitOk = 0;
    constexpr int kExitValidation = 2;
    constexpr int kExitUndetermined = 3;
    constexpr int kExitIo = 4;

    struct RunConfig
    {
        finmark::Rational rate{1};
        finmark::Rational window_lo{-1000};
        finmark::Rational window_hi{1000};
        std::uint64_t seed = 1;
        unsigned long precision = 64;
        finmark::SelectionParams selection{};
        std::vector<std::string> symbols{"0", "1"};
        std::vector<finmark::Rational> probs{finmark::Rational(1, 2), finmark::Rational(1, 2)};
        std::optional<finmark::MarkovSpec> markov;
        std::unique_ptr<finmark::SkeletonEncoder> encoder;

        finmark::MarkDistribution alphabet() const
        {
            return finmark::MarkDistribution(symbols, probs);
        }
        finmark::Window window() const { return finmark::Window(window_lo, window_hi); }
    };

    RunConfig load_config(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw std::ios_base::failure("cannot open config file '" + path + "'");
        }
        nlohmann::json j;
        in >> j;
        RunConfig config;
        if (j.contains("rate"))
        {
            config.rate = finmark::parse_rational(j["rate"].get<std::string>());
        }
        if (j.contains("window"))
        {
            config.window_lo = finmark::parse_rational(j["window"][0].get<std::string>());
            config.window_hi = finmark::parse_rational(j["window"][1].get<std::string>());
        }
        if (j.contains("seed"))
        {
            config.seed = j["seed"].get<std::uint64_t>();
        }
        if (j.contains("precision"))
        {
            config.precision = j["precision"].get<unsigned long>();
        }
        if (j.contains("lookback"))
        {
            config.selection.lookback = finmark::parse_rational(j["lookback"].get<std::string>());
        }
        if (j.contains("anchor_gap"))
        {
            config.selection.anchor_gap = finmark::parse_rational(j["anchor_gap"].get<std::string>());
        }
        if (j.contains("alphabet"))
        {
            config.symbols.clear();
            config.probs.clear();
            for (const auto &entry : j["alphabet"])
            {
                config.symbols.push_back(entry[0].get<std::string>());
                config.probs.push_back(finmark::parse_rational(entry[1].get<std::string>()));
            }
        }
        if (j.contains("markov"))
        {
            const auto &m = j["markov"];
            std::vector<std::string> states;
            for (const auto &s : m["states"])
            {
                states.push_back(s.get<std::string>());
            }
            std::vector<std::vector<finmark::Rational>> rows;
            for (const auto &row : m["rows"])
            {
                std::vector<finmark::Rational> r;
                for (const auto &v : row)
                {
                    r.push_back(finmark::parse_rational(v.get<std::string>()));
                }
                rows.push_back(std::move(r));
            }
            config.markov.emplace(std::move(states), std::move(rows),
                                  finmark::parse_rational(m["holding_rate"].get<std::string>()));
            if (config.rate != config.markov->holding_rate())
            {
                throw std::invalid_argument(
                    "config: rate must equal the Markov holding rate (intensity change is out of scope)");
            }
        }
        if (j.contains("encoder") && j["encoder"]["type"].get<std::string>() == "table")
        {
            const auto &e = j["encoder"];
            std::vector<std::int32_t> table;
            for (const auto &v : e["table"])
            {
                table.push_back(v.get<std::int32_t>());
            }
            std::vector<std::int32_t> inverse;
            for (const auto &v : e["inverse_table"])
            {
                inverse.push_back(v.get<std::int32_t>());
            }
            config.encoder = std::make_unique<finmark::TableEncoder>(
                e["in_alphabet"].get<std::size_t>(), e["out_alphabet"].get<std::size_t>(),
                e["radius"].get<std::size_t>(), std::move(table),
                e["inverse_radius"].get<std::size_t>(), std::move(inverse));
        }
        return config;
    }

    const finmark::SkeletonEncoder &encoder_of(const RunConfig &config,
                                               finmark::IdentityEncoder &fallback)
    {
        return config.encoder ? *config.encoder : static_cast<finmark::SkeletonEncoder &>(fallback);
    }

    std::ofstream open_out(const std::string &path)
    {
        std::ofstream out(path);
        if (!out)
        {
            throw std::ios_base::failure("cannot open output file '" + path + "'");
        }
        return out;
    }

    std::ifstream open_in(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw std::ios_base::failure("cannot open input file '" + path + "'");
        }
        return in;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"finmark: exact marked-Poisson transforms and Markov-path assembly"};
    app.require_subcommand(1);

    std::string config_path;
    std::string plan_path;
    std::string input_path;
    std::string out_path;
    std::string witness_path;
    std::string suite = "all";
    std::optional<std::uint64_t> seed_override;
    std::optional<unsigned long> precision_override;
    bool serial = false;

    auto add_common = [&](CLI::App *cmd, bool needs_config)
    {
        auto *opt = cmd->add_option("--config", config_path, "JSON run configuration");
        if (needs_config)
        {
            opt->required();
        }
        cmd->add_option("--seed", seed_override, "override the config seed");
        cmd->add_option("--precision", precision_override, "override the dyadic precision (bits)");
        cmd->add_option("--out", out_path, "output file (stdout when omitted)");
    };

    auto *sample_cmd = app.add_subcommand("sample", "sample a Poisson configuration or a CTMC path");
    add_common(sample_cmd, true);

    auto *transform_cmd = app.add_subcommand("transform", "apply the marking map psi to a point CSV");
    add_common(transform_cmd, true);
    transform_cmd->add_option("input", input_path, "point configuration CSV")->required();
    transform_cmd->add_option("--witness", witness_path, "write the per-globe witness JSON here");

    auto *invert_cmd = app.add_subcommand("invert", "apply psi^{-1} to a marked CSV");
    add_common(invert_cmd, true);
    invert_cmd->add_option("input", input_path, "marked configuration CSV")->required();

    auto *assemble_cmd = app.add_subcommand("assemble", "assemble a trajectory from a marked CSV");
    add_common(assemble_cmd, true);
    assemble_cmd->add_option("input", input_path, "marked configuration CSV")->required();

    auto *disassemble_cmd =
        app.add_subcommand("disassemble", "recover the marked configuration from a trajectory CSV");
    add_common(disassemble_cmd, true);
    disassemble_cmd->add_option("input", input_path, "trajectory CSV")->required();

    auto *validate_cmd =
        app.add_subcommand("validate-target", "check rate, mixing and entropy preconditions");
    add_common(validate_cmd, true);

    auto *verify_cmd = app.add_subcommand("verify", "run a verification plan");
    verify_cmd->add_option("--plan", plan_path, "JSON trial plan")->required();
    verify_cmd->add_option("--out", out_path, "report JSON (stdout when omitted)");
    verify_cmd->add_option("--suite", suite, "exact | statistical | coding-windows | all");
    verify_cmd->add_flag("--serial", serial, "use the serial reference engine");

    std::size_t coding_trials = 16;
    auto *coding_cmd =
        app.add_subcommand("coding-window", "report coding windows for sampled configurations");
    add_common(coding_cmd, true);
    coding_cmd->add_option("--trials", coding_trials, "number of seeds to measure");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        return app.exit(e) == 0 ? kExitOk : kExitIo;
    }

    try
    {
        std::ostream *out = &std::cout;
        std::ofstream out_file;
        if (!out_path.empty())
        {
            out_file = open_out(out_path);
            out = &out_file;
        }

        if (sample_cmd->parsed())
        {
            RunConfig config = load_config(config_path);
            if (seed_override)
            {
                config.seed = *seed_override;
            }
            if (precision_override)
            {
                config.precision = *precision_override;
            }
            if (config.markov)
            {
                const finmark::Trajectory traj =
                    finmark::sample_ctmc(*config.markov, config.window(), config.seed, config.precision);
                finmark::write_trajectory_csv(*out, traj, config.markov->states());
            }
            else
            {
                const finmark::PointConfiguration points =
                    finmark::sample_poisson(config.rate, config.window(), config.seed, config.precision);
                finmark::write_points_csv(*out, points);
            }
            return kExitOk;
        }

        if (transform_cmd->parsed())
        {
            RunConfig config = load_config(config_path);
            auto in = open_in(input_path);
            const finmark::PointConfiguration points = finmark::read_points_csv(in);
            const finmark::MarkDistribution dist = config.alphabet();
            const finmark::PsiResult result = finmark::psi_forward(points, dist, config.selection);
            finmark::write_marked_csv(*out, result.output, dist.symbols());
            if (!witness_path.empty())
            {
                auto wout = open_out(witness_path);
                finmark::write_witness_json(wout, result, dist);
            }
            return kExitOk;
        }

        if (invert_cmd->parsed())
        {
            RunConfig config = load_config(config_path);
            auto in = open_in(input_path);
            const finmark::MarkDistribution dist = config.alphabet();
            const finmark::MarkedConfiguration marked = finmark::read_marked_csv(in, dist.symbols());
            const finmark::PointConfiguration restored =
                finmark::psi_inverse(marked, dist, config.selection);
            finmark::write_points_csv(*out, restored);
            return kExitOk;
        }

        if (assemble_cmd->parsed())
        {
            RunConfig config = load_config(config_path);
            auto in = open_in(input_path);
            const finmark::MarkDistribution dist = config.alphabet();
            const finmark::MarkedConfiguration marked = finmark::read_marked_csv(in, dist.symbols());
            finmark::IdentityEncoder fallback(dist.size());
            const finmark::Trajectory traj =
                finmark::assemble_trajectory(marked, encoder_of(config, fallback));
            const std::vector<std::string> &names =
                config.markov ? config.markov->states() : dist.symbols();
            finmark::write_trajectory_csv(*out, traj, names);
            return kExitOk;
        }

        if (disassemble_cmd->parsed())
        {
            RunConfig config = load_config(config_path);
            auto in = open_in(input_path);
            const finmark::MarkDistribution dist = config.alphabet();
            const std::vector<std::string> &names =
                config.markov ? config.markov->states() : dist.symbols();
            const finmark::Trajectory traj = finmark::read_trajectory_csv(in, names);
            finmark::IdentityEncoder fallback(dist.size());
            const finmark::MarkedConfiguration marked =
                finmark::disassemble(traj, encoder_of(config, fallback));
            finmark::write_marked_csv(*out, marked, dist.symbols());
            return kExitOk;
        }

        if (validate_cmd->parsed())
        {
            RunConfig config = load_config(config_path);
            if (!config.markov)
            {
                throw std::invalid_argument("validate-target: config has no markov block");
            }
            const finmark::ValidationReport report =
                finmark::validate_target(*config.markov, config.alphabet(), config.rate);
            nlohmann::json j;
            j["rate_matches"] = report.rate_matches;
            j["irreducible"] = report.irreducible;
            j["aperiodic"] = report.aperiodic;
            j["entropy_matches"] = report.entropy_matches;
            j["alphabet_entropy"] = {finmark::to_string(report.alphabet_entropy.lo),
                                     finmark::to_string(report.alphabet_entropy.hi)};
            j["skeleton_entropy"] = {finmark::to_string(report.skeleton_entropy.lo),
                                     finmark::to_string(report.skeleton_entropy.hi)};
            j["pass"] = report.pass();
            *out << j.dump(2) << '\n';
            return report.pass() ? kExitOk : kExitValidation;
        }

        if (verify_cmd->parsed())
        {
            auto in = open_in(plan_path);
            const finmark::TrialPlan plan = finmark::plan_from_json(in);
            const finmark::ExecPolicy policy =
                serial ? finmark::ExecPolicy::serial : finmark::ExecPolicy::parallel;
            bool pass = true;
            std::vector<finmark::TestReport> reports;
            if (suite == "exact" || suite == "all")
            {
                reports.push_back(finmark::run_exact_suite(plan, policy));
            }
            if (suite == "statistical" || suite == "all")
            {
                reports.push_back(finmark::run_statistical_suite(plan, policy));
            }
            if (suite == "coding-windows" || suite == "all")
            {
                reports.push_back(finmark::measure_coding_windows(plan, policy));
            }
            if (reports.empty())
            {
                throw std::invalid_argument("verify: unknown suite '" + suite + "'");
            }
            for (const auto &report : reports)
            {
                finmark::write_report_json(*out, report);
                pass = pass && report.pass();
            }
            return pass ? kExitOk : kExitValidation;
        }

        if (coding_cmd->parsed())
        {
            RunConfig config = load_config(config_path);
            if (seed_override)
            {
                config.seed = *seed_override;
            }
            finmark::TrialPlan plan;
            plan.base_seed = config.seed;
            plan.rate = config.rate;
            plan.precision = precision_override.value_or(config.precision);
            plan.selection = config.selection;
            *out << "seed,w,buffer_cells\n";
            bool all_finite = true;
            for (std::size_t i = 0; i < coding_trials; ++i)
            {
                long used = 0;
                const auto w = finmark::coding_window_with_extension(plan, plan.base_seed + i, used);
                *out << plan.base_seed + i << ',';
                if (w)
                {
                    *out << finmark::to_string(*w);
                }
                else
                {
                    all_finite = false;
                    *out << "undetermined";
                }
                *out << ',' << used << '\n';
            }
            return all_finite ? kExitOk : kExitUndetermined;
        }

        return kExitIo;
    }
    catch (const finmark::NoGroundingGap &e)
    {
        std::cerr << "undetermined: " << e.what() << '\n';
        return kExitUndetermined;
    }
    catch (const finmark::InsufficientCore &e)
    {
        std::cerr << "undetermined: " << e.what() << '\n';
        return kExitUndetermined;
    }
    catch (const std::ios_base::failure &e)
    {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitIo;
    }
    catch (const nlohmann::json::exception &e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitValidation;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
}
