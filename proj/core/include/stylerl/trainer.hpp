#pragma once

#include <functional>
#include <vector>

#include "stylerl/corpus.hpp"
#include "stylerl/episode.hpp"
#include "stylerl/metrics.hpp"
#include "stylerl/model.hpp"
#include "stylerl/rewards.hpp"
#include "stylerl/sampler.hpp"

namespace stylerl {

// ---- supervised pre-training ----

struct MLEConfig {
    int epochs = 10;
    // Defaults picked by a small dev-loss sweep on the toy corpus; see the
    // per-stage overrides in the pipeline configs.
    double lr = 0.1;
    double clip = 1.0;
    int batch = 8;
    std::uint64_t seed = 0;
};

struct EpochStats {
    double train_loss = 0.0;
    double dev_loss = 0.0;
};

struct MLEResult {
    std::vector<EpochStats> curve;
    int best_epoch = -1;       // epoch whose dev loss was kept
    double best_dev_loss = 0.0;
};

// Cross-entropy on the output side only: the style marker, source sentence,
// and <start> are context, not targets. The model ends at its best-dev epoch.
MLEResult mle_pretrain_policy(SequenceModel& model, const Vocab& vocab,
                              const std::vector<ParallelPair>& train,
                              const std::vector<ParallelPair>& dev,
                              const MLEConfig& cfg);

// Language modeling over [<start>, sentence, <end>]; every position counts.
MLEResult mle_pretrain_lm(SequenceModel& model,
                          const std::vector<StyledSentence>& train,
                          const std::vector<StyledSentence>& dev,
                          const MLEConfig& cfg);

MLEResult mle_pretrain_classifier(SequenceModel& model,
                                  const std::vector<StyledSentence>& train,
                                  const std::vector<StyledSentence>& dev,
                                  const MLEConfig& cfg);

// ---- REINFORCE ----

struct RLConfig {
    StrategyKind strategy = StrategyKind::dense;
    // Discount consumed by the naive-sparse reward copier. The return
    // discount is fixed by the strategy: 1 for rollout (suffix sums), 0
    // otherwise (naive-sparse rewards arrive already discounted).
    double gamma = 0.9;
    int n_sentences = 16;  // N source sentences per step
    int k_samples = 4;     // K episodes per sentence
    double epsilon = 1e-3;
    int smooth_window = 5;  // trailing-mean width for the stopping check
    double lr = 0.05;
    double clip = 1.0;
    long max_episodes = 20000;
    int rollouts = 1;  // completions per position under rollout
    std::uint64_t seed = 0;
    SamplingConfig sampling;
    bool debug_rewards = false;  // dump first-step reward traces to stderr
};

void validate_rl(const RLConfig& cfg);

// Discount applied when turning rewards into returns under a strategy.
double returns_gamma(StrategyKind s);

// Q_t = r_t + sum_{i>t} gamma^(i-t) r_i over ep.rewards[].overall.
void estimate_returns(Episode& ep, double gamma);

// Flat mean of returns over every token of every episode in the batch.
double compute_baseline(const std::vector<Episode>& batch);

// One episode prepared for the policy-gradient update: the full model input,
// the first logit row that predicts an output token, and per-output-token
// advantages (Q_t - b).
struct WeightedSequence {
    std::vector<int> ids;
    int first_action_row = 0;
    std::vector<double> advantages;
};

// Accumulates the gradient of (1/total_tokens) * sum -log pi * advantage
// into grad (sized to the parameter count); returns total_tokens. Descending
// this loss ascends the REINFORCE objective.
long reinforce_gradient(const SequenceModel& policy,
                        const std::vector<WeightedSequence>& seqs,
                        std::vector<double>& grad);

// Builds weighted sequences from scored episodes (returns and baseline
// ready), takes one clipped SGD step, and reports the pre-clip norm.
// Episodes whose only token is <end> carry no gradient.
double policy_gradient_step(SequenceModel& policy, const Vocab& vocab,
                            const std::vector<Episode>& batch, double baseline,
                            double lr, double clip);

struct TrainingState {
    long step = 0;
    long episodes = 0;
    double baseline = 0.0;
    double prev_baseline = 0.0;
    double wall_ms = 0.0;
    RewardCounters counters;
};

struct RLResult {
    TrainingState state;
    std::vector<MetricsRecord> records;
    bool converged = false;  // baseline-change rule fired before the cap
};

// One training loop: sample N sentences, K episodes each, score rewards per
// cfg.strategy, compute returns and the batch baseline, update, and stop when
// the (smoothed) baseline moves less than epsilon or the episode cap hits.
// on_step, when given, sees each MetricsRecord as it is produced.
RLResult rl_train(SequenceModel& policy, const RewardModels& models,
                  const std::vector<StyledSentence>& corpus, const RLConfig& cfg,
                  const std::function<void(const MetricsRecord&)>& on_step = {});

}  // namespace stylerl
