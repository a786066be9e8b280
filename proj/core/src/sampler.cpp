#include "stylerl/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stylerl/common.hpp"

namespace stylerl {

void validate_sampling(const SamplingConfig& cfg) {
    if (!(cfg.p > 0.0 && cfg.p <= 1.0))
        throw ValidationError("sampling.p must lie in (0, 1]");
    if (cfg.k < 1) throw ValidationError("sampling.k must be >= 1");
    if (cfg.max_new_tokens < 1)
        throw ValidationError("sampling.max_new_tokens must be >= 1");
    if (!(cfg.temperature > 0.0))
        throw ValidationError("sampling.temperature must be positive");
}

std::vector<double> nucleus_filter(const std::vector<double>& dist, double p) {
    if (!(p > 0.0 && p <= 1.0)) throw std::logic_error("nucleus p out of range");
    double total = std::accumulate(dist.begin(), dist.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-6)
        throw std::logic_error("nucleus_filter input does not sum to 1");

    std::vector<int> order;
    order.reserve(dist.size());
    for (int i = 0; i < int(dist.size()); ++i)
        if (dist[size_t(i)] > 0.0) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (dist[size_t(a)] != dist[size_t(b)]) return dist[size_t(a)] > dist[size_t(b)];
        return a < b;
    });

    std::vector<double> out(dist.size(), 0.0);
    double mass = 0.0;
    for (int id : order) {
        out[size_t(id)] = dist[size_t(id)];
        mass += dist[size_t(id)];
        if (mass >= p) break;
    }
    for (double& v : out) v /= mass;
    return out;
}

std::vector<double> softmax_dist(const std::vector<double>& logits,
                                 double temperature) {
    double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp((logits[i] - mx) / temperature);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

namespace {

double log_softmax_at(const std::vector<double>& logits, int id) {
    double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double l : logits) sum += std::exp(l - mx);
    return logits[size_t(id)] - mx - std::log(sum);
}

// Continues sampling from a session already holding the episode prefix.
Episode sample_continuation(DecoderSession session, const std::vector<int>& x,
                            int target_style, const SamplingConfig& cfg) {
    Episode ep;
    ep.x = x;
    ep.target_style = target_style;
    ep.seed = cfg.seed;
    Rng rng(cfg.seed);
    for (int t = 0; t < cfg.max_new_tokens; ++t) {
        const std::vector<double>& logits = session.logits();
        std::vector<double> dist = softmax_dist(logits, cfg.temperature);
        std::vector<double> filtered = nucleus_filter(dist, cfg.p);
        int tok = int(rng.categorical(filtered));
        ep.y.push_back(tok);
        ep.log_probs.push_back(log_softmax_at(logits, tok));
        if (tok == Vocab::kEnd) {
            ep.ended = true;
            break;
        }
        if (t + 1 < cfg.max_new_tokens) session.push(tok);
    }
    return ep;
}

}  // namespace

Episode generate_episode(const SequenceModel& policy, const Vocab& vocab,
                         const std::vector<int>& x, int target_style,
                         const SamplingConfig& cfg) {
    validate_sampling(cfg);
    std::vector<int> prefix = policy_prefix(vocab, x, target_style);
    if (int(prefix.size()) + cfg.max_new_tokens > policy.config().max_positions)
        throw ValidationError("prefix plus max_new_tokens exceeds the policy's " +
                              std::to_string(policy.config().max_positions) +
                              " positions");
    DecoderSession session(policy);
    session.push_all(prefix);
    return sample_continuation(std::move(session), x, target_style, cfg);
}

std::vector<Episode> generate_k_episodes(const SequenceModel& policy,
                                         const Vocab& vocab,
                                         const std::vector<int>& x,
                                         int target_style,
                                         const SamplingConfig& cfg) {
    validate_sampling(cfg);
    std::vector<int> prefix = policy_prefix(vocab, x, target_style);
    if (int(prefix.size()) + cfg.max_new_tokens > policy.config().max_positions)
        throw ValidationError("prefix plus max_new_tokens exceeds the policy's " +
                              std::to_string(policy.config().max_positions) +
                              " positions");
    DecoderSession base(policy);
    base.push_all(prefix);
    std::vector<Episode> eps;
    eps.reserve(size_t(cfg.k));
    for (int k = 0; k < cfg.k; ++k) {
        SamplingConfig per = cfg;
        per.seed = derive_seed(cfg.seed, std::uint64_t(k));
        eps.push_back(sample_continuation(base, x, target_style, per));
    }
    return eps;
}

std::vector<int> sample_completion(const SequenceModel& policy,
                                   const std::vector<int>& ids, int max_tokens,
                                   std::uint64_t seed,
                                   const SamplingConfig& cfg) {
    if (max_tokens <= 0) return {};
    if (int(ids.size()) + max_tokens > policy.config().max_positions)
        throw ValidationError("completion would exceed the policy's " +
                              std::to_string(policy.config().max_positions) +
                              " positions");
    DecoderSession session(policy);
    session.push_all(ids);
    SamplingConfig per = cfg;
    per.seed = seed;
    per.max_new_tokens = max_tokens;
    Episode ep = sample_continuation(std::move(session), {}, 0, per);
    return ep.y;
}

std::vector<int> greedy_decode(const SequenceModel& policy, const Vocab& vocab,
                               const std::vector<int>& x, int target_style,
                               int max_new_tokens) {
    if (max_new_tokens < 1)
        throw ValidationError("max_new_tokens must be >= 1");
    std::vector<int> prefix = policy_prefix(vocab, x, target_style);
    if (int(prefix.size()) + max_new_tokens > policy.config().max_positions)
        throw ValidationError("prefix plus max_new_tokens exceeds the policy's " +
                              std::to_string(policy.config().max_positions) +
                              " positions");
    DecoderSession session(policy);
    session.push_all(prefix);
    std::vector<int> y;
    for (int t = 0; t < max_new_tokens; ++t) {
        const std::vector<double>& logits = session.logits();
        int tok = int(std::max_element(logits.begin(), logits.end()) - logits.begin());
        y.push_back(tok);
        if (tok == Vocab::kEnd) break;
        if (t + 1 < max_new_tokens) session.push(tok);
    }
    return y;
}

}  // namespace stylerl
