#include "stylerl/rewards.hpp"

#include <cmath>
#include <ostream>

#include "json.hpp"
#include "stylerl/common.hpp"

namespace stylerl {

namespace {

// y's positions that carry words rather than control tokens, in order.
std::vector<int> content_positions(const Vocab& vocab, const std::vector<int>& y) {
    std::vector<int> pos;
    for (int i = 0; i < int(y.size()); ++i)
        if (!vocab.is_marker(y[size_t(i)])) pos.push_back(i);
    return pos;
}

bool window_contains(const std::vector<int>& y, int glo, int ghi,
                     const std::vector<int>& x, int wlo, int whi) {
    int len = ghi - glo + 1;
    for (int s = wlo; s + len - 1 <= whi; ++s) {
        bool hit = true;
        for (int i = 0; i < len; ++i)
            if (x[size_t(s + i)] != y[size_t(glo + i)]) {
                hit = false;
                break;
            }
        if (hit) return true;
    }
    return false;
}

}  // namespace

std::vector<double> style_reward(const std::vector<int>& y,
                                 const std::vector<double>& mask,
                                 const SequenceModel& classifier,
                                 int target_style,
                                 RewardCounters* counters) {
    if (y.empty()) throw ValidationError("style reward on an empty sentence");
    if (mask.size() != y.size())
        throw ValidationError("style-reward mask length does not match the sentence");
    if (target_style < 0 || target_style >= classifier.config().n_styles)
        throw ValidationError("target style outside the classifier's range");
    double p = classifier.classify(y).probs[size_t(target_style)];
    if (counters) ++counters->classifier_calls;
    std::vector<double> rs(y.size());
    for (size_t t = 0; t < y.size(); ++t) rs[t] = mask[t] * (p - 0.5);
    return rs;
}

std::vector<double> content_reward(const std::vector<int>& y,
                                   const std::vector<int>& x,
                                   const std::vector<double>& mask,
                                   bool sentence_wide) {
    if (y.empty() || x.empty())
        throw ValidationError("content reward needs non-empty sentences");
    if (mask.size() != y.size())
        throw ValidationError("content-reward mask length does not match the sentence");
    int ny = int(y.size());
    int nx = int(x.size());
    std::vector<double> rc(y.size());
    for (int t = 0; t < ny; ++t) {
        // The n-grams through position t, lowest order first; out-of-range
        // ones are dropped and the normalizer shrinks with them.
        const int spans[5][2] = {
            {t, t}, {t - 1, t}, {t, t + 1}, {t - 2, t}, {t, t + 2}};
        int wlo, whi;
        if (sentence_wide) {
            wlo = 0;
            whi = nx - 1;
        } else if (t < nx) {
            wlo = std::max(0, t - 2);
            whi = std::min(nx - 1, t + 2);
        } else {  // past the source: anchor the window at its tail
            whi = nx - 1;
            wlo = std::max(0, nx - 5);
        }
        double sum = 0.0;
        int count = 0;
        for (const auto& span : spans) {
            if (span[0] < 0 || span[1] >= ny) continue;
            ++count;
            sum += window_contains(y, span[0], span[1], x, wlo, whi) ? 1.0 : -1.0;
        }
        rc[size_t(t)] = (1.0 - mask[size_t(t)]) * sum / count;
    }
    return rc;
}

std::vector<double> fluency_reward(const std::vector<int>& y,
                                   const SequenceModel& lm,
                                   RewardCounters* counters) {
    if (y.empty()) return {};
    std::vector<int> ids;
    ids.reserve(y.size() + 1);
    ids.push_back(Vocab::kStart);
    ids.insert(ids.end(), y.begin(), y.end());
    std::vector<double> steps = lm.stepwise_log_probs(ids);
    if (counters) ++counters->lm_calls;
    for (double& v : steps) v = std::exp(v);
    return steps;
}

std::vector<double> overall_reward(const std::vector<double>& rs,
                                   const std::vector<double>& rc,
                                   const std::vector<double>& rf,
                                   const RewardWeights& w) {
    if (rs.size() != rc.size() || rc.size() != rf.size())
        throw std::logic_error("reward component length mismatch");
    std::vector<double> r(rs.size());
    for (size_t t = 0; t < r.size(); ++t)
        r[t] = w.style * rs[t] + w.content * rc[t] + w.fluency * rf[t];
    return r;
}

double sentence_reward(const std::vector<int>& y, const std::vector<int>& x,
                       int target_style, const RewardModels& models,
                       RewardCounters& counters) {
    if (y.empty()) throw ValidationError("sentence reward on an empty output");
    const Vocab& vocab = *models.vocab;
    std::vector<int> pos = content_positions(vocab, y);
    std::vector<int> yc;
    yc.reserve(pos.size());
    for (int i : pos) yc.push_back(y[size_t(i)]);

    std::vector<double> rs(y.size(), 0.0), rc(y.size(), 0.0);
    if (!yc.empty()) {
        std::vector<double> ones(yc.size(), 1.0);
        std::vector<double> zeros(yc.size(), 0.0);
        std::vector<double> rs_c =
            style_reward(yc, ones, *models.classifier, target_style, &counters);
        std::vector<double> rc_c =
            content_reward(yc, x, zeros, models.sentence_wide_match);
        for (size_t i = 0; i < pos.size(); ++i) {
            rs[size_t(pos[i])] = rs_c[i];
            rc[size_t(pos[i])] = rc_c[i];
        }
    }
    std::vector<double> rf = fluency_reward(y, *models.lm, &counters);
    std::vector<double> r = overall_reward(rs, rc, rf, models.weights);
    double sum = 0.0;
    for (double v : r) sum += v;
    return sum / double(r.size());
}

double rollout_reward(const std::vector<int>& x, int target_style,
                      const std::vector<int>& y_prefix, bool complete,
                      const SequenceModel& policy, const RewardModels& models,
                      const SamplingConfig& sampling, int rollouts,
                      std::uint64_t seed, RewardCounters& counters) {
    if (y_prefix.empty()) throw ValidationError("rollout on an empty prefix");
    if (rollouts < 1) throw ValidationError("rollouts must be >= 1");
    int budget = sampling.max_new_tokens - int(y_prefix.size());
    if (complete || y_prefix.back() == Vocab::kEnd || budget <= 0)
        return sentence_reward(y_prefix, x, target_style, models, counters);

    std::vector<int> ids = policy_prefix(*models.vocab, x, target_style);
    ids.insert(ids.end(), y_prefix.begin(), y_prefix.end());
    double acc = 0.0;
    for (int m = 0; m < rollouts; ++m) {
        std::vector<int> comp = sample_completion(
            policy, ids, budget, derive_seed(seed, std::uint64_t(m)), sampling);
        counters.tokens_generated += long(comp.size());
        std::vector<int> full = y_prefix;
        full.insert(full.end(), comp.begin(), comp.end());
        acc += sentence_reward(full, x, target_style, models, counters);
    }
    return acc / rollouts;
}

std::vector<double> naive_sparse_reward(const std::vector<int>& x,
                                        int target_style,
                                        const std::vector<int>& y,
                                        const RewardModels& models,
                                        double gamma_n,
                                        RewardCounters& counters) {
    if (!(gamma_n >= 0.0 && gamma_n <= 1.0))
        throw ValidationError("naive-sparse discount must lie in [0, 1]");
    double R = sentence_reward(y, x, target_style, models, counters);
    int T = int(y.size());
    std::vector<double> r(y.size());
    for (int t = 0; t < T; ++t) r[size_t(t)] = std::pow(gamma_n, T - 1 - t) * R;
    return r;
}

void score_episode(Episode& ep, const RewardModels& models,
                   const ScoringContext& ctx, RewardCounters& counters) {
    if (ep.y.empty()) throw ValidationError("scoring an empty episode");
    const Vocab& vocab = *models.vocab;
    ep.rewards.assign(ep.y.size(), RewardBreakdown{});

    switch (ep.strategy) {
        case StrategyKind::dense:
        case StrategyKind::dense_attention: {
            std::vector<int> pos = content_positions(vocab, ep.y);
            std::vector<int> yc;
            yc.reserve(pos.size());
            for (int i : pos) yc.push_back(ep.y[size_t(i)]);

            std::vector<double> rf = fluency_reward(ep.y, *models.lm, &counters);
            if (!yc.empty()) {
                std::vector<double> alpha =
                    attention_scores(*models.classifier, vocab, models.head, yc);
                ++counters.attribution_calls;
                MaskMode mode = ep.strategy == StrategyKind::dense
                                    ? MaskMode::hard
                                    : MaskMode::continuous;
                AttributionResult attr =
                    compute_mask(alpha, models.lambda_frac, mode);
                std::vector<double> rs_c = style_reward(
                    yc, attr.mask, *models.classifier, ep.target_style, &counters);
                std::vector<double> rc_c = content_reward(
                    yc, ep.x, attr.mask, models.sentence_wide_match);
                for (size_t i = 0; i < pos.size(); ++i) {
                    RewardBreakdown& b = ep.rewards[size_t(pos[i])];
                    b.style = rs_c[i];
                    b.content = rc_c[i];
                    b.mask = attr.mask[i];
                }
            }
            for (size_t t = 0; t < ep.y.size(); ++t) {
                RewardBreakdown& b = ep.rewards[t];
                b.fluency = rf[t];
                b.overall = models.weights.style * b.style +
                            models.weights.content * b.content +
                            models.weights.fluency * b.fluency;
            }
            break;
        }
        case StrategyKind::rollout: {
            if (ctx.policy == nullptr)
                throw ValidationError("rollout scoring needs the current policy");
            std::uint64_t base = derive_seed(ep.seed, 0x9011);
            int T = int(ep.y.size());
            for (int t = 1; t <= T; ++t) {
                std::vector<int> prefix(ep.y.begin(), ep.y.begin() + t);
                double r = rollout_reward(ep.x, ep.target_style, prefix, t == T,
                                          *ctx.policy, models, ctx.sampling,
                                          ctx.rollouts,
                                          derive_seed(base, std::uint64_t(t)),
                                          counters);
                ep.rewards[size_t(t) - 1].overall = r;
            }
            break;
        }
        case StrategyKind::naive_sparse: {
            std::vector<double> r = naive_sparse_reward(
                ep.x, ep.target_style, ep.y, models, ctx.gamma_n, counters);
            for (size_t t = 0; t < r.size(); ++t) ep.rewards[t].overall = r[t];
            break;
        }
    }
}

void dump_reward_trace(std::ostream& out, const Vocab& vocab, const Episode& ep) {
    for (size_t t = 0; t < ep.y.size(); ++t) {
        RewardBreakdown b = t < ep.rewards.size() ? ep.rewards[t] : RewardBreakdown{};
        nlohmann::ordered_json j;
        j["t"] = t;
        j["token"] = vocab.token(ep.y[t]);
        j["mask"] = b.mask;
        j["rs"] = b.style;
        j["rc"] = b.content;
        j["rf"] = b.fluency;
        j["r"] = b.overall;
        out << j.dump() << "\n";
    }
}

}  // namespace stylerl
