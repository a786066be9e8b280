#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stylerl/vocab.hpp"

namespace stylerl {

enum class StrategyKind { dense, rollout, dense_attention, naive_sparse };

StrategyKind strategy_from_name(const std::string& name);
std::string strategy_name(StrategyKind s);

// Per-token reward components. `overall` is the weighted sum actually used by
// the trainer; the components and the mask value that produced them are kept
// for metrics and debugging dumps.
struct RewardBreakdown {
    double style = 0.0;
    double content = 0.0;
    double fluency = 0.0;
    double overall = 0.0;
    double mask = 0.0;
};

// One sampled generation for one (source sentence, target style) pair.
// The sampler fills x/y/log_probs; the rewards module fills rewards; the
// trainer fills returns. All per-token vectors are indexed like y.
struct Episode {
    std::vector<int> x;      // source tokens, no markers
    int target_style = -1;
    std::vector<int> y;      // generated tokens; ends with <end> iff ended
    std::vector<double> log_probs;  // log pi(y_t | s_t), unfiltered
    std::vector<RewardBreakdown> rewards;
    std::vector<double> returns;
    bool ended = false;
    StrategyKind strategy = StrategyKind::dense;
    std::uint64_t seed = 0;
};

// Policy input prefix: [target-style marker, <src>, x..., <start>].
std::vector<int> policy_prefix(const Vocab& vocab, const std::vector<int>& x,
                               int target_style);
// Prefix followed by the generated tokens: the full policy-model sequence.
std::vector<int> episode_ids(const Vocab& vocab, const Episode& ep);

}  // namespace stylerl
