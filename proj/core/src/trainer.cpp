#include "stylerl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <iostream>
#include <numeric>
#include <sstream>

#include "stylerl/common.hpp"
#include "stylerl/graph.hpp"

namespace stylerl {

namespace {

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// One supervised example in decoder form.
struct DecoderExample {
    std::vector<int> ids;
    std::vector<int> targets;
    std::vector<double> weights;
};

DecoderExample lm_example(const StyledSentence& s) {
    DecoderExample ex;
    ex.ids.push_back(Vocab::kStart);
    ex.ids.insert(ex.ids.end(), s.tokens.begin(), s.tokens.end());
    ex.ids.push_back(Vocab::kEnd);
    size_t n = ex.ids.size();
    ex.targets.resize(n, -1);
    ex.weights.resize(n, 0.0);
    for (size_t i = 0; i + 1 < n; ++i) {
        ex.targets[i] = ex.ids[i + 1];
        ex.weights[i] = 1.0;
    }
    return ex;
}

DecoderExample policy_example(const Vocab& vocab, const ParallelPair& pair) {
    DecoderExample ex;
    ex.ids = policy_prefix(vocab, pair.source.tokens, pair.target.style.id);
    size_t prefix = ex.ids.size();
    ex.ids.insert(ex.ids.end(), pair.target.tokens.begin(),
                  pair.target.tokens.end());
    ex.ids.push_back(Vocab::kEnd);
    size_t n = ex.ids.size();
    ex.targets.resize(n, -1);
    ex.weights.resize(n, 0.0);
    for (size_t i = 0; i + 1 < n; ++i) ex.targets[i] = ex.ids[i + 1];
    // Only the rows predicting the output sentence and <end> train the model;
    // the marker, source, and <start> are conditioning context.
    for (size_t i = prefix - 1; i + 1 < n; ++i) ex.weights[i] = 1.0;
    return ex;
}

void check_mle(const MLEConfig& cfg, size_t n_train, size_t n_dev) {
    if (cfg.epochs < 1) throw ValidationError("epochs must be positive");
    if (cfg.lr <= 0.0) throw ValidationError("learning rate must be positive");
    if (cfg.batch < 1) throw ValidationError("batch size must be positive");
    if (n_train == 0) throw ValidationError("empty training set");
    if (n_dev == 0) throw ValidationError("empty dev set");
}

double decoder_dev_loss(const SequenceModel& model,
                        const std::vector<DecoderExample>& dev) {
    double nll = 0.0, weight = 0.0;
    for (const DecoderExample& ex : dev) {
        Mat logits = model.forward_logits(ex.ids);
        for (size_t i = 0; i < ex.ids.size(); ++i) {
            if (ex.weights[i] == 0.0) continue;
            nll -= ex.weights[i] *
                   row_log_softmax_at(logits, int(i), ex.targets[i]);
            weight += ex.weights[i];
        }
    }
    return nll / weight;
}

MLEResult run_decoder_mle(SequenceModel& model,
                          const std::vector<DecoderExample>& train,
                          const std::vector<DecoderExample>& dev,
                          const MLEConfig& cfg) {
    check_mle(cfg, train.size(), dev.size());
    MLEResult res;
    res.best_dev_loss = std::numeric_limits<double>::infinity();
    std::vector<double> best_params;
    std::vector<size_t> order(train.size());
    std::iota(order.begin(), order.end(), size_t(0));
    Rng rng(derive_seed(cfg.seed, 0x317e));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_nll = 0.0, epoch_weight = 0.0;
        for (size_t at = 0; at < order.size(); at += size_t(cfg.batch)) {
            size_t stop = std::min(order.size(), at + size_t(cfg.batch));
            Tape tape;
            SequenceModel::Binding bind = model.bind(tape);
            Tape::Node* total = nullptr;
            double batch_weight = 0.0;
            for (size_t j = at; j < stop; ++j) {
                const DecoderExample& ex = train[order[j]];
                Tape::Node* loss =
                    model.decoder_nll(tape, bind, ex.ids, ex.targets, ex.weights);
                total = total ? tape.add(total, loss) : loss;
                batch_weight +=
                    std::accumulate(ex.weights.begin(), ex.weights.end(), 0.0);
            }
            Tape::Node* root = tape.scale(total, 1.0 / batch_weight);
            tape.backward(root);
            std::vector<double> grad;
            model.accumulate_grad(bind, grad);
            double batch_loss = root->val.at(0, 0);
            if (!std::isfinite(batch_loss) || !all_finite(grad))
                throw std::runtime_error("training diverged: non-finite loss");
            model.apply_sgd(grad, cfg.lr, cfg.clip);
            epoch_nll += batch_loss * batch_weight;
            epoch_weight += batch_weight;
        }
        EpochStats stats;
        stats.train_loss = epoch_nll / epoch_weight;
        stats.dev_loss = decoder_dev_loss(model, dev);
        if (!std::isfinite(stats.dev_loss))
            throw std::runtime_error("training diverged: non-finite dev loss");
        res.curve.push_back(stats);
        if (stats.dev_loss < res.best_dev_loss) {
            res.best_dev_loss = stats.dev_loss;
            res.best_epoch = epoch;
            best_params = model.params().data();
        }
    }
    model.params().data() = best_params;
    return res;
}

struct ClassifierExample {
    std::vector<int> tokens;
    int label = 0;
};

}  // namespace

MLEResult mle_pretrain_policy(SequenceModel& model, const Vocab& vocab,
                              const std::vector<ParallelPair>& train,
                              const std::vector<ParallelPair>& dev,
                              const MLEConfig& cfg) {
    std::vector<DecoderExample> tr, dv;
    tr.reserve(train.size());
    dv.reserve(dev.size());
    for (const ParallelPair& p : train) tr.push_back(policy_example(vocab, p));
    for (const ParallelPair& p : dev) dv.push_back(policy_example(vocab, p));
    return run_decoder_mle(model, tr, dv, cfg);
}

MLEResult mle_pretrain_lm(SequenceModel& model,
                          const std::vector<StyledSentence>& train,
                          const std::vector<StyledSentence>& dev,
                          const MLEConfig& cfg) {
    std::vector<DecoderExample> tr, dv;
    tr.reserve(train.size());
    dv.reserve(dev.size());
    for (const StyledSentence& s : train) tr.push_back(lm_example(s));
    for (const StyledSentence& s : dev) dv.push_back(lm_example(s));
    return run_decoder_mle(model, tr, dv, cfg);
}

MLEResult mle_pretrain_classifier(SequenceModel& model,
                                  const std::vector<StyledSentence>& train,
                                  const std::vector<StyledSentence>& dev,
                                  const MLEConfig& cfg) {
    check_mle(cfg, train.size(), dev.size());
    MLEResult res;
    res.best_dev_loss = std::numeric_limits<double>::infinity();
    std::vector<double> best_params;
    std::vector<size_t> order(train.size());
    std::iota(order.begin(), order.end(), size_t(0));
    Rng rng(derive_seed(cfg.seed, 0x317e));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_nll = 0.0;
        long epoch_count = 0;
        for (size_t at = 0; at < order.size(); at += size_t(cfg.batch)) {
            size_t stop = std::min(order.size(), at + size_t(cfg.batch));
            Tape tape;
            SequenceModel::Binding bind = model.bind(tape);
            Tape::Node* total = nullptr;
            for (size_t j = at; j < stop; ++j) {
                const StyledSentence& s = train[order[j]];
                Tape::Node* loss =
                    model.classifier_nll(tape, bind, s.tokens, s.style.id, 1.0);
                total = total ? tape.add(total, loss) : loss;
            }
            double count = double(stop - at);
            Tape::Node* root = tape.scale(total, 1.0 / count);
            tape.backward(root);
            std::vector<double> grad;
            model.accumulate_grad(bind, grad);
            double batch_loss = root->val.at(0, 0);
            if (!std::isfinite(batch_loss) || !all_finite(grad))
                throw std::runtime_error("training diverged: non-finite loss");
            model.apply_sgd(grad, cfg.lr, cfg.clip);
            epoch_nll += batch_loss * count;
            epoch_count += long(stop - at);
        }
        double dev_nll = 0.0;
        for (const StyledSentence& s : dev) {
            double p = model.classify(s.tokens).probs[size_t(s.style.id)];
            dev_nll -= std::log(std::max(p, 1e-300));
        }
        EpochStats stats;
        stats.train_loss = epoch_nll / double(epoch_count);
        stats.dev_loss = dev_nll / double(dev.size());
        if (!std::isfinite(stats.dev_loss))
            throw std::runtime_error("training diverged: non-finite dev loss");
        res.curve.push_back(stats);
        if (stats.dev_loss < res.best_dev_loss) {
            res.best_dev_loss = stats.dev_loss;
            res.best_epoch = epoch;
            best_params = model.params().data();
        }
    }
    model.params().data() = best_params;
    return res;
}

// ---- REINFORCE ----

void validate_rl(const RLConfig& cfg) {
    if (cfg.gamma < 0.0 || cfg.gamma > 1.0)
        throw ValidationError("gamma must lie in [0, 1]");
    if (cfg.n_sentences < 1) throw ValidationError("n_sentences must be positive");
    if (cfg.k_samples < 1) throw ValidationError("k_samples must be positive");
    if (!(cfg.epsilon > 0.0)) throw ValidationError("epsilon must be positive");
    if (cfg.smooth_window < 1)
        throw ValidationError("smooth_window must be positive");
    if (cfg.lr <= 0.0) throw ValidationError("learning rate must be positive");
    if (cfg.max_episodes < 1)
        throw ValidationError("max_episodes must be positive");
    if (cfg.rollouts < 1) throw ValidationError("rollouts must be positive");
    validate_sampling(cfg.sampling);
}

double returns_gamma(StrategyKind s) {
    // Rollout rewards are per-step estimates that still need suffix
    // accumulation; the dense variants already score every token, and
    // naive-sparse rewards arrive pre-discounted, so summing suffixes
    // again would double-count the future.
    return s == StrategyKind::rollout ? 1.0 : 0.0;
}

void estimate_returns(Episode& ep, double gamma) {
    if (ep.rewards.size() != ep.y.size() || ep.y.empty())
        throw ValidationError("episode has no scored rewards");
    size_t n = ep.y.size();
    ep.returns.assign(n, 0.0);
    double acc = 0.0;
    for (size_t t = n; t-- > 0;) {
        acc = ep.rewards[t].overall + gamma * acc;
        ep.returns[t] = acc;
    }
}

double compute_baseline(const std::vector<Episode>& batch) {
    double sum = 0.0;
    long count = 0;
    for (const Episode& ep : batch) {
        if (ep.returns.size() != ep.y.size())
            throw ValidationError("episode returns not computed");
        for (double q : ep.returns) {
            sum += q;
            ++count;
        }
    }
    if (count == 0) throw ValidationError("empty batch has no baseline");
    return sum / double(count);
}

long reinforce_gradient(const SequenceModel& policy,
                        const std::vector<WeightedSequence>& seqs,
                        std::vector<double>& grad) {
    long total = 0;
    for (const WeightedSequence& s : seqs) total += long(s.advantages.size());
    if (grad.size() < policy.params().size())
        grad.resize(policy.params().size(), 0.0);
    if (total == 0) return 0;

    Tape tape;
    SequenceModel::Binding bind = policy.bind(tape);
    Tape::Node* sum = nullptr;
    for (const WeightedSequence& s : seqs) {
        size_t n = s.ids.size();
        if (s.first_action_row < 0 ||
            size_t(s.first_action_row) + s.advantages.size() + 1 > n)
            throw ValidationError("weighted sequence rows out of range");
        std::vector<int> targets(n, -1);
        std::vector<double> weights(n, 0.0);
        for (size_t i = 0; i + 1 < n; ++i) targets[i] = s.ids[i + 1];
        for (size_t t = 0; t < s.advantages.size(); ++t)
            weights[size_t(s.first_action_row) + t] = s.advantages[t];
        Tape::Node* loss = policy.decoder_nll(tape, bind, s.ids, targets, weights);
        sum = sum ? tape.add(sum, loss) : loss;
    }
    Tape::Node* root = tape.scale(sum, 1.0 / double(total));
    tape.backward(root);
    policy.accumulate_grad(bind, grad);
    return total;
}

double policy_gradient_step(SequenceModel& policy, const Vocab& vocab,
                            const std::vector<Episode>& batch, double baseline,
                            double lr, double clip) {
    std::vector<WeightedSequence> seqs;
    seqs.reserve(batch.size());
    for (const Episode& ep : batch) {
        if (ep.returns.size() != ep.y.size())
            throw ValidationError("episode returns not computed");
        // An episode that ended before emitting any real token has nothing
        // to reinforce; it still shaped the baseline upstream.
        if (ep.y.size() == 1 && ep.y[0] == Vocab::kEnd) continue;
        WeightedSequence s;
        s.ids = episode_ids(vocab, ep);
        s.first_action_row =
            int(policy_prefix(vocab, ep.x, ep.target_style).size()) - 1;
        s.advantages.reserve(ep.returns.size());
        for (double q : ep.returns) s.advantages.push_back(q - baseline);
        seqs.push_back(std::move(s));
    }
    if (seqs.empty()) return 0.0;

    std::vector<double> grad;
    long total = reinforce_gradient(policy, seqs, grad);
    if (total == 0) return 0.0;
    if (!all_finite(grad)) {
        std::ostringstream msg;
        msg << "non-finite policy gradient; batch rewards follow\n";
        for (const Episode& ep : batch) dump_reward_trace(msg, vocab, ep);
        throw std::runtime_error(msg.str());
    }
    return policy.apply_sgd(grad, lr, clip);
}

RLResult rl_train(SequenceModel& policy, const RewardModels& models,
                  const std::vector<StyledSentence>& corpus, const RLConfig& cfg,
                  const std::function<void(const MetricsRecord&)>& on_step) {
    validate_rl(cfg);
    if (corpus.empty()) throw ValidationError("empty RL corpus");
    if (!models.classifier || !models.lm || !models.vocab)
        throw ValidationError("reward models are not set");
    const Vocab& vocab = *models.vocab;
    int n_styles = models.classifier->config().n_styles;
    if (n_styles < 2) throw ValidationError("classifier has fewer than 2 styles");

    ScoringContext ctx;
    ctx.policy = &policy;
    ctx.sampling = cfg.sampling;
    ctx.rollouts = cfg.rollouts;
    ctx.gamma_n = cfg.gamma;

    RLResult res;
    Rng pick(derive_seed(cfg.seed, 0x5a3e));
    std::deque<double> window;
    double prev_smoothed = 0.0;
    auto t0 = std::chrono::steady_clock::now();

    for (;;) {
        ++res.state.step;
        std::vector<Episode> batch;
        batch.reserve(size_t(cfg.n_sentences) * size_t(cfg.k_samples));
        for (int i = 0; i < cfg.n_sentences; ++i) {
            const StyledSentence& src = corpus[pick.index(corpus.size())];
            int target = (src.style.id + 1) % n_styles;
            SamplingConfig samp = cfg.sampling;
            samp.k = cfg.k_samples;
            samp.seed = derive_seed(cfg.seed, 0xe915,
                                    std::uint64_t(res.state.step),
                                    std::uint64_t(i));
            std::vector<Episode> eps =
                generate_k_episodes(policy, vocab, src.tokens, target, samp);
            for (Episode& ep : eps) {
                ep.strategy = cfg.strategy;
                res.state.counters.tokens_generated += long(ep.y.size());
                batch.push_back(std::move(ep));
            }
        }
        double gamma = returns_gamma(cfg.strategy);
        double sum_r = 0.0, sum_rs = 0.0, sum_rc = 0.0, sum_rf = 0.0;
        long tokens = 0;
        for (Episode& ep : batch) {
            score_episode(ep, models, ctx, res.state.counters);
            estimate_returns(ep, gamma);
            if (cfg.debug_rewards && res.state.step == 1)
                dump_reward_trace(std::cerr, vocab, ep);
            for (const RewardBreakdown& b : ep.rewards) {
                sum_r += b.overall;
                sum_rs += b.style;
                sum_rc += b.content;
                sum_rf += b.fluency;
                ++tokens;
            }
        }
        double baseline = compute_baseline(batch);
        policy_gradient_step(policy, vocab, batch, baseline, cfg.lr, cfg.clip);

        res.state.episodes += long(batch.size());
        window.push_back(baseline);
        if (window.size() > size_t(cfg.smooth_window)) window.pop_front();
        double smoothed =
            std::accumulate(window.begin(), window.end(), 0.0) /
            double(window.size());
        res.state.baseline = smoothed;
        res.state.wall_ms = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - t0)
                                .count();

        MetricsRecord rec;
        rec.step = res.state.step;
        rec.episodes = res.state.episodes;
        rec.mean_r = sum_r / double(tokens);
        rec.mean_rs = sum_rs / double(tokens);
        rec.mean_rc = sum_rc / double(tokens);
        rec.mean_rf = sum_rf / double(tokens);
        rec.baseline = baseline;
        rec.wall_ms = res.state.wall_ms;
        rec.tokens_generated = res.state.counters.tokens_generated;
        rec.reward_model_calls = res.state.counters.classifier_calls +
                                 res.state.counters.attribution_calls +
                                 res.state.counters.lm_calls;
        rec.strategy = strategy_name(cfg.strategy);
        if (on_step) on_step(rec);
        res.records.push_back(std::move(rec));

        if (std::abs(smoothed - prev_smoothed) < cfg.epsilon) {
            res.converged = true;
            break;
        }
        if (res.state.episodes >= cfg.max_episodes) break;
        res.state.prev_baseline = prev_smoothed = smoothed;
    }
    return res;
}

}  // namespace stylerl
