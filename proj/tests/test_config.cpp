#include "doctest.h"
#include "stylerl/common.hpp"
#include "stylerl/config.hpp"

using namespace stylerl;

TEST_CASE("defaults render and parse back unchanged") {
    RunConfig def;
    std::string text = render_run_config(def);
    RunConfig back = parse_run_config(text);
    CHECK(render_run_config(back) == text);
    CHECK(run_config_hash(back) == run_config_hash(def));
}

TEST_CASE("overrides apply on top of defaults") {
    RunConfig cfg = parse_run_config(
        "# toy overrides\n"
        "run.seed = 7\n"
        "rl.strategy = rollout\n"
        "rl.max_episodes = 300\n"
        "sampling.p = 0.85\n"
        "classifier.d_model = 32\n"
        "rewards.sentence_wide_match = true\n"
        "\n"
        "parallel.transform = noisy-swap  # trailing comment\n");
    CHECK(cfg.seed == 7);
    CHECK(cfg.rl.strategy == "rollout");
    CHECK(cfg.rl.max_episodes == 300);
    CHECK(cfg.sampling.p == 0.85);
    CHECK(cfg.classifier.d_model == 32);
    CHECK(cfg.sentence_wide_match);
    CHECK(cfg.parallel.transform == "noisy-swap");
    // Untouched keys keep their defaults.
    RunConfig def;
    CHECK(cfg.rl.n_sentences == def.rl.n_sentences);
    CHECK(cfg.lm.d_model == def.lm.d_model);
}

TEST_CASE("unknown keys are rejected by name") {
    try {
        parse_run_config("rl.strateggy = dense\n");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("rl.strateggy") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_run_config("extra.key = 1\n"), ValidationError);
}

TEST_CASE("malformed values and lines are rejected") {
    CHECK_THROWS_AS(parse_run_config("run.seed = banana\n"), ValidationError);
    CHECK_THROWS_AS(parse_run_config("rl.max_episodes = 12.5\n"), ValidationError);
    CHECK_THROWS_AS(parse_run_config("sampling.p = \n"), ValidationError);
    CHECK_THROWS_AS(parse_run_config("just some words\n"), ValidationError);
    CHECK_THROWS_AS(parse_run_config("rewards.sentence_wide_match = maybe\n"),
                    ValidationError);
    CHECK_THROWS_AS(parse_run_config("run.seed = 1\nrun.seed = 2\n"),
                    ValidationError);  // duplicate key
}

TEST_CASE("the config hash tracks content") {
    RunConfig a, b;
    b.rl.lr = 0.06;
    CHECK(run_config_hash(a) != run_config_hash(b));
    b.rl.lr = a.rl.lr;
    CHECK(run_config_hash(a) == run_config_hash(b));
}

TEST_CASE("typed views carry the flat values through") {
    RunConfig cfg = parse_run_config(
        "rl.strategy = naive-sparse\n"
        "rl.gamma = 0.8\n"
        "rl.n_sentences = 3\n"
        "rl.k_samples = 2\n"
        "rl.rollouts = 4\n"
        "sampling.max_new_tokens = 12\n"
        "run.seed = 99\n"
        "policy.epochs = 5\n"
        "policy.lr = 0.25\n");
    RLConfig rl = rl_config(cfg);
    CHECK(rl.strategy == StrategyKind::naive_sparse);
    CHECK(rl.gamma == 0.8);
    CHECK(rl.n_sentences == 3);
    CHECK(rl.k_samples == 2);
    CHECK(rl.rollouts == 4);
    CHECK(rl.sampling.max_new_tokens == 12);
    CHECK(rl.seed == 99);

    MLEConfig m = mle_config(cfg.policy, 42);
    CHECK(m.epochs == 5);
    CHECK(m.lr == 0.25);
    CHECK(m.batch == cfg.policy.batch);
    CHECK(m.clip == cfg.policy.clip);
    CHECK(m.seed == 42);

    CHECK_THROWS_AS(
        [] {
            RunConfig bad;
            bad.rl.strategy = "off-policy";
            return rl_config(bad);
        }(),
        ValidationError);
}

TEST_CASE("every known key appears exactly once in the rendering") {
    std::string text = "\n" + render_run_config(RunConfig{});
    for (const char* key :
         {"run.seed", "corpus.train_per_style", "corpus.multi_attr_prob",
          "parallel.transform", "classifier.d_model", "lm.max_positions",
          "policy.epochs", "eval_classifier.d_model", "eval_lm.d_model",
          "head.lambda", "rewards.style_weight", "rewards.fluency_weight",
          "sampling.p", "sampling.temperature", "rl.strategy", "rl.epsilon",
          "rl.max_episodes", "report.fraction"}) {
        std::string line_start = "\n" + std::string(key) + " ";
        size_t first = text.find(line_start);
        REQUIRE(first != std::string::npos);
        CHECK(text.find(line_start, first + 1) == std::string::npos);
    }
    // Distinct widths by default: the evaluation classifier must not share
    // the reward classifier's architecture exactly.
    RunConfig def;
    CHECK(def.eval_classifier.d_model != def.classifier.d_model);
}
