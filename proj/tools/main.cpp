#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "stylerl/common.hpp"
#include "stylerl/config.hpp"
#include "stylerl/pipeline.hpp"

namespace {

struct StageHelp {
    const char* name;
    const char* help;
};

constexpr StageHelp kStages[] = {
    {"gen-data", "Generate the synthetic two-style corpus and gold transfers"},
    {"pretrain-classifier", "Train the style classifier used for rewards"},
    {"select-head", "Pick the classifier attention head carrying the style signal"},
    {"pretrain-lm", "Train the fluency language model"},
    {"synth-parallel", "Synthesize the parallel corpus for policy pre-training"},
    {"pretrain-policy", "Pre-train the transfer policy on the synthetic pairs"},
    {"train-rl", "Fine-tune the policy with REINFORCE under the configured strategy"},
    {"transfer", "Greedy-decode the test split with the trained policy"},
    {"evaluate", "Score transferred sentences with independently trained models"},
    {"report", "Aggregate metrics and evaluations into CSV tables and charts"},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dense-reward REINFORCE experiments for text style transfer"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out_dir = "runs";
    std::string strategy;
    std::uint64_t seed = 0;
    bool force = false;
    bool debug_rewards = false;

    app.add_option("--config", config_path,
                   "run configuration file (key = value lines)")
        ->check(CLI::ExistingFile);
    CLI::Option* seed_opt = app.add_option("--seed", seed, "override run.seed");
    app.add_option("--out", out_dir, "directory holding all run directories")
        ->capture_default_str();
    app.add_flag("--force", force, "rebuild a finished run in place");
    app.add_option("--strategy", strategy, "override rl.strategy")
        ->check(CLI::IsMember(
            {"dense", "rollout", "dense-attention", "naive-sparse"}));
    app.add_flag("--debug-rewards", debug_rewards,
                 "dump first-step reward traces to stderr");

    for (const StageHelp& s : kStages) app.add_subcommand(s.name, s.help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }

    const std::string stage = app.get_subcommands().front()->get_name();
    try {
        stylerl::RunConfig cfg;
        if (!config_path.empty()) cfg = stylerl::load_run_config(config_path);
        if (seed_opt->count() > 0) cfg.seed = seed;
        if (!strategy.empty()) cfg.rl.strategy = strategy;

        stylerl::Stage s = stylerl::stage_from_name(stage);
        if (s == stylerl::Stage::report &&
            !stylerl::has_report_inputs(out_dir)) {
            std::puts("nothing to report");
            return 0;
        }
        stylerl::StageContext ctx{cfg, out_dir, force, debug_rewards};
        stylerl::StageResult res = stylerl::run_stage(s, ctx);
        std::printf("%s: %s%s\n", res.run_id.c_str(), res.run_dir.c_str(),
                    res.skipped ? " (up to date)" : "");
        return 0;
    } catch (const stylerl::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "fatal: %s\n", e.what());
        return 2;
    }
}
