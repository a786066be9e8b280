#pragma once

#include <cstdint>
#include <vector>

#include "stylerl/episode.hpp"
#include "stylerl/model.hpp"
#include "stylerl/vocab.hpp"

namespace stylerl {

struct SamplingConfig {
    double p = 0.9;           // nucleus mass, in (0, 1]
    int k = 4;                // samples per input
    int max_new_tokens = 24;  // cap on |y|, <end> included
    double temperature = 1.0;
    std::uint64_t seed = 0;
};

void validate_sampling(const SamplingConfig& cfg);

// Zeroes everything outside the smallest descending-probability prefix whose
// cumulative mass reaches p, then renormalizes. Probability ties are broken
// by token id ascending, so the nucleus set is deterministic.
std::vector<double> nucleus_filter(const std::vector<double>& dist, double p);

// Softmax of a logit row at the given temperature.
std::vector<double> softmax_dist(const std::vector<double>& logits,
                                 double temperature);

// Samples y autoregressively from [marker, <src>, x..., <start>] until <end>
// or max_new_tokens. Log-probs come from the unfiltered temperature-1
// distribution: the quantity the policy gradient differentiates. Rewards and
// returns are left empty.
Episode generate_episode(const SequenceModel& policy, const Vocab& vocab,
                         const std::vector<int>& x, int target_style,
                         const SamplingConfig& cfg);

// K episodes with per-episode seeds derived from (cfg.seed, k).
std::vector<Episode> generate_k_episodes(const SequenceModel& policy,
                                         const Vocab& vocab,
                                         const std::vector<int>& x,
                                         int target_style,
                                         const SamplingConfig& cfg);

// Continues an arbitrary context until <end> or max_tokens more tokens, using
// cfg's nucleus parameters with the given seed. Returns only the new tokens;
// max_tokens <= 0 yields none. Rollout scoring completes output prefixes
// through this.
std::vector<int> sample_completion(const SequenceModel& policy,
                                   const std::vector<int>& ids, int max_tokens,
                                   std::uint64_t seed,
                                   const SamplingConfig& cfg);

// Deterministic argmax decoding (first maximum wins); for evaluation.
std::vector<int> greedy_decode(const SequenceModel& policy, const Vocab& vocab,
                               const std::vector<int>& x, int target_style,
                               int max_new_tokens);

}  // namespace stylerl
