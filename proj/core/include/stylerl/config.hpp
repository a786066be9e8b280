#pragma once

#include <cstdint>
#include <string>

#include "stylerl/rewards.hpp"
#include "stylerl/sampler.hpp"
#include "stylerl/trainer.hpp"

namespace stylerl {

// Width, depth, and optimizer settings for one trainable model.
struct ModelHyper {
    int layers = 2;
    int heads = 2;
    int d_model = 64;
    int max_positions = 48;
    int epochs = 10;
    int batch = 8;
    double lr = 0.5;
    double clip = 5.0;
};

// Everything a run needs, expressible as a flat key = value document with
// dotted keys. Defaults reproduce the toy experiments; any subset of keys
// may be overridden from a config file.
struct RunConfig {
    std::uint64_t seed = 1;

    struct Corpus {
        int train_per_style = 200;
        int dev_per_style = 40;
        int test_per_style = 40;
        double multi_attr_prob = 0.3;
    } corpus;

    struct Parallel {
        std::string transform = "lexicon_swap";
        double noise = 0.0;
    } parallel;

    ModelHyper classifier{2, 4, 64, 32, 30, 8, 1.0, 5.0};
    ModelHyper lm{2, 2, 64, 48, 10, 8, 0.5, 5.0};
    ModelHyper policy{2, 2, 64, 64, 20, 8, 0.5, 5.0};
    // The evaluation models deliberately differ from the reward models in
    // width and seed so they cannot share blind spots.
    ModelHyper eval_classifier{2, 4, 48, 32, 30, 8, 1.0, 5.0};
    ModelHyper eval_lm{2, 2, 48, 48, 10, 8, 0.5, 5.0};

    double head_lambda = 0.25;

    RewardWeights weights;
    bool sentence_wide_match = false;

    SamplingConfig sampling;

    struct Rl {
        std::string strategy = "dense";
        double gamma = 0.9;
        int n_sentences = 16;
        int k_samples = 4;
        double epsilon = 1e-3;
        int smooth_window = 5;
        double lr = 0.05;
        double clip = 1.0;
        long max_episodes = 20000;
        int rollouts = 1;
    } rl;

    double report_fraction = 0.9;
};

// Parses a key = value document ('#' starts a comment) over the defaults.
// Unknown keys and unparsable values are rejected.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

// Canonical full-document rendering; parse(render(c)) == c, and the render
// of a parsed document is byte-stable.
std::string render_run_config(const RunConfig& cfg);

// Hash of the canonical rendering, for manifests and idempotence checks.
std::uint64_t run_config_hash(const RunConfig& cfg);

// Typed views used by the pipeline stages.
MLEConfig mle_config(const ModelHyper& m, std::uint64_t seed);
RLConfig rl_config(const RunConfig& cfg);

}  // namespace stylerl
