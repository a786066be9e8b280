#pragma once

#include <iosfwd>
#include <vector>

#include "stylerl/attribution.hpp"
#include "stylerl/episode.hpp"
#include "stylerl/model.hpp"
#include "stylerl/sampler.hpp"
#include "stylerl/vocab.hpp"

namespace stylerl {

struct RewardWeights {
    double style = 2.0;
    double content = 1.0;
    double fluency = 0.5;
};

// Mutation-free scoring against frozen models; every pass is counted so cost
// comparisons between strategies come from instrumentation, not estimates.
struct RewardCounters {
    long classifier_calls = 0;
    long attribution_calls = 0;
    long lm_calls = 0;
    long tokens_generated = 0;
};

// Everything needed to score a sentence, bundled once per run.
struct RewardModels {
    const SequenceModel* classifier = nullptr;  // frozen style classifier
    const SequenceModel* lm = nullptr;          // frozen fluency model
    const Vocab* vocab = nullptr;
    HeadId head;                // winning attribution head
    double lambda_frac = 0.25;  // mask fraction for hard masks
    RewardWeights weights;
    bool sentence_wide_match = false;  // content n-grams matched against all of x
};

// Per-strategy scoring inputs that are not per-episode.
struct ScoringContext {
    const SequenceModel* policy = nullptr;  // rollout completions only
    SamplingConfig sampling;                // rollout completion sampling
    int rollouts = 1;                       // completions per position
    double gamma_n = 0.9;                   // naive-sparse discount
};

// rs_t = mask_t * (P(target | y) - 0.5). One classifier pass per sentence.
std::vector<double> style_reward(const std::vector<int>& y,
                                 const std::vector<double>& mask,
                                 const SequenceModel& classifier,
                                 int target_style,
                                 RewardCounters* counters = nullptr);

// rc_t = (1 - mask_t) * mean n-gram agreement between y's context around t
// and x's window at the same position.
std::vector<double> content_reward(const std::vector<int>& y,
                                   const std::vector<int>& x,
                                   const std::vector<double>& mask,
                                   bool sentence_wide = false);

// rf_t = P(y_t | y_1..t-1) under the fluency model, the first token
// conditioned on the start-of-sequence context.
std::vector<double> fluency_reward(const std::vector<int>& y,
                                   const SequenceModel& lm,
                                   RewardCounters* counters = nullptr);

std::vector<double> overall_reward(const std::vector<double>& rs,
                                   const std::vector<double>& rc,
                                   const std::vector<double>& rf,
                                   const RewardWeights& w);

// Sentence-level score used by the rollout and naive-sparse strategies:
// style on the whole sentence (mask 1), content everywhere (mask 0), fluency
// as usual, averaged over tokens.
double sentence_reward(const std::vector<int>& y, const std::vector<int>& x,
                       int target_style, const RewardModels& models,
                       RewardCounters& counters);

// Estimates the value of the prefix y_1..t by sampling `rollouts` completions
// from the policy and averaging their sentence rewards. When `complete` is
// set the prefix already is the full output and is scored directly.
double rollout_reward(const std::vector<int>& x, int target_style,
                      const std::vector<int>& y_prefix, bool complete,
                      const SequenceModel& policy, const RewardModels& models,
                      const SamplingConfig& sampling, int rollouts,
                      std::uint64_t seed, RewardCounters& counters);

// r_t = gamma_n^(T - t) * R with R the sentence reward of the full output.
std::vector<double> naive_sparse_reward(const std::vector<int>& x,
                                        int target_style,
                                        const std::vector<int>& y,
                                        const RewardModels& models,
                                        double gamma_n,
                                        RewardCounters& counters);

// Fills ep.rewards according to ep.strategy. Special tokens (start/end/
// markers) receive fluency reward only and never enter masks or the style/
// content terms.
void score_episode(Episode& ep, const RewardModels& models,
                   const ScoringContext& ctx, RewardCounters& counters);

// One structured record per token: token, mask, rs, rc, rf, r.
void dump_reward_trace(std::ostream& out, const Vocab& vocab, const Episode& ep);

}  // namespace stylerl
