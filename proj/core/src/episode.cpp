#include "stylerl/episode.hpp"

#include "stylerl/common.hpp"

namespace stylerl {

StrategyKind strategy_from_name(const std::string& name) {
    if (name == "dense") return StrategyKind::dense;
    if (name == "rollout") return StrategyKind::rollout;
    if (name == "dense-attention") return StrategyKind::dense_attention;
    if (name == "naive-sparse") return StrategyKind::naive_sparse;
    throw ValidationError("unknown strategy: " + name +
                          " (expected dense|rollout|dense-attention|naive-sparse)");
}

std::string strategy_name(StrategyKind s) {
    switch (s) {
        case StrategyKind::dense: return "dense";
        case StrategyKind::rollout: return "rollout";
        case StrategyKind::dense_attention: return "dense-attention";
        case StrategyKind::naive_sparse: return "naive-sparse";
    }
    throw std::logic_error("bad StrategyKind");
}

std::vector<int> policy_prefix(const Vocab& vocab, const std::vector<int>& x,
                               int target_style) {
    std::vector<int> ids;
    ids.reserve(x.size() + 3);
    ids.push_back(vocab.style_marker(target_style));
    ids.push_back(Vocab::kSrcStart);
    ids.insert(ids.end(), x.begin(), x.end());
    ids.push_back(Vocab::kStart);
    return ids;
}

std::vector<int> episode_ids(const Vocab& vocab, const Episode& ep) {
    std::vector<int> ids = policy_prefix(vocab, ep.x, ep.target_style);
    ids.insert(ids.end(), ep.y.begin(), ep.y.end());
    return ids;
}

}  // namespace stylerl
