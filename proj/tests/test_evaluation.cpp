#include <cmath>
#include <cstdio>
#include <map>

#include "doctest.h"
#include "stylerl/common.hpp"
#include "stylerl/evaluation.hpp"
#include "stylerl/toy_task.hpp"
#include "stylerl/trainer.hpp"

using namespace stylerl;

namespace {

// ---- reference BLEU, written as plainly as possible ----
//
// Modified n-gram precision from explicit count maps, clipped per sentence,
// pooled over the corpus; add-one smoothing only where a precision has zero
// matches; brevity penalty from total lengths.

std::map<std::vector<int>, int> oracle_ngram_counts(const std::vector<int>& s,
                                                    int n) {
    std::map<std::vector<int>, int> counts;
    for (int i = 0; i + n <= int(s.size()); ++i) {
        std::vector<int> gram(s.begin() + i, s.begin() + i + n);
        counts[gram] += 1;
    }
    return counts;
}

double oracle_bleu(const std::vector<std::vector<int>>& outs,
                   const std::vector<std::vector<int>>& refs) {
    long matches[4] = {0, 0, 0, 0};
    long totals[4] = {0, 0, 0, 0};
    long out_len = 0, ref_len = 0;
    for (size_t s = 0; s < outs.size(); ++s) {
        out_len += long(outs[s].size());
        ref_len += long(refs[s].size());
        for (int n = 1; n <= 4; ++n) {
            auto oc = oracle_ngram_counts(outs[s], n);
            auto rc = oracle_ngram_counts(refs[s], n);
            for (const auto& [gram, count] : oc) {
                totals[n - 1] += count;
                auto it = rc.find(gram);
                if (it != rc.end()) matches[n - 1] += std::min(count, it->second);
            }
        }
    }
    double log_prec = 0.0;
    for (int n = 0; n < 4; ++n) {
        double p = matches[n] > 0
                       ? double(matches[n]) / double(totals[n])
                       : (double(matches[n]) + 1.0) / (double(totals[n]) + 1.0);
        log_prec += std::log(p);
    }
    if (out_len == 0) return 0.0;
    double bp = out_len >= ref_len
                    ? 1.0
                    : std::exp(1.0 - double(ref_len) / double(out_len));
    return 100.0 * bp * std::exp(log_prec / 4.0);
}

std::vector<std::vector<int>> random_corpus(Rng& rng, size_t sentences,
                                            int alphabet) {
    std::vector<std::vector<int>> out(sentences);
    for (auto& s : out) {
        size_t len = 1 + rng.index(8);
        s.resize(len, 0);
        for (int& t : s) t = int(rng.index(size_t(alphabet)));
    }
    return out;
}

SequenceModel uniform_lm(int vocab, std::uint64_t seed = 5) {
    SequenceModel lm(decoder_config(vocab, 16, 1, 1, 8), seed);
    int head = lm.params().seg_index("head.w");
    Mat zero(lm.params().seg(head).rows, lm.params().seg(head).cols);
    lm.params().set(head, zero);
    return lm;
}

MetricsStream make_stream(const std::string& strategy, std::uint64_t seed,
                          std::vector<double> rewards,
                          std::vector<long> episodes) {
    MetricsStream s;
    s.strategy = strategy;
    s.seed = seed;
    for (size_t i = 0; i < rewards.size(); ++i) {
        MetricsRecord rec;
        rec.step = long(i) + 1;
        rec.episodes = episodes[i];
        rec.mean_r = rewards[i];
        rec.wall_ms = 10.0 * double(i + 1);
        rec.strategy = strategy;
        s.records.push_back(rec);
    }
    return s;
}

}  // namespace

TEST_CASE("corpus bleu hits the hand-computed single-pair value") {
    // "the food was bad" scored against "the food was bad ." with ids:
    // all n-gram precisions are exact, so the score is pure brevity penalty:
    // 100 * exp(1 - 5/4).
    std::vector<std::vector<int>> out = {{7, 8, 9, 10}};
    std::vector<std::vector<int>> ref = {{7, 8, 9, 10, 11}};
    double want = 100.0 * std::exp(1.0 - 5.0 / 4.0);
    CHECK(corpus_bleu(out, ref) == doctest::Approx(want).epsilon(1e-9));
    CHECK(corpus_bleu(out, ref) == doctest::Approx(77.8801).epsilon(1e-4));
}

TEST_CASE("identical corpora score 100") {
    Rng rng(81);
    std::vector<std::vector<int>> corpus = random_corpus(rng, 12, 9);
    // 4-gram precision needs at least one sentence of length >= 4.
    corpus.push_back({1, 2, 3, 4, 5});
    CHECK(corpus_bleu(corpus, corpus) == doctest::Approx(100.0).epsilon(1e-9));
}

TEST_CASE("disjoint vocabularies fall under the smoothing floor") {
    std::vector<std::vector<int>> out, ref;
    Rng rng(82);
    for (int i = 0; i < 10; ++i) {
        std::vector<int> o(5, 0), r(5, 0);
        for (int& t : o) t = int(rng.index(6));        // ids 0..5
        for (int& t : r) t = 10 + int(rng.index(6));   // ids 10..15
        out.push_back(o);
        ref.push_back(r);
    }
    CHECK(corpus_bleu(out, ref) < 5.0);
}

TEST_CASE("corpus bleu equals the reference implementation on random corpora") {
    Rng rng(83);
    for (int trial = 0; trial < 300; ++trial) {
        size_t n = 1 + rng.index(6);
        std::vector<std::vector<int>> out = random_corpus(rng, n, 7);
        std::vector<std::vector<int>> ref = random_corpus(rng, n, 7);
        if (trial % 3 == 0) ref = out;  // exercise the exact-match path too
        double got = corpus_bleu(out, ref);
        double want = oracle_bleu(out, ref);
        REQUIRE(got == doctest::Approx(want).epsilon(1e-12));
        REQUIRE(got >= 0.0);
        REQUIRE(got <= 100.0 + 1e-9);
    }
}

TEST_CASE("corpus bleu ignores sentence order") {
    Rng rng(84);
    std::vector<std::vector<int>> out = random_corpus(rng, 8, 6);
    std::vector<std::vector<int>> ref = random_corpus(rng, 8, 6);
    double base = corpus_bleu(out, ref);
    std::vector<size_t> perm = {5, 2, 7, 0, 3, 6, 1, 4};
    std::vector<std::vector<int>> pout, pref;
    for (size_t i : perm) {
        pout.push_back(out[i]);
        pref.push_back(ref[i]);
    }
    CHECK(corpus_bleu(pout, pref) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("corpus bleu validates its inputs") {
    CHECK_THROWS_AS(corpus_bleu({}, {}), ValidationError);
    CHECK_THROWS_AS(corpus_bleu({{1, 2}}, {{1, 2}, {3}}), ValidationError);
    // All-empty outputs score zero rather than dividing by zero.
    CHECK(corpus_bleu({{}}, {{1, 2}}) == 0.0);
}

TEST_CASE("a uniform language model yields vocabulary-size perplexity") {
    SequenceModel lm = uniform_lm(12);
    std::vector<std::vector<int>> outs = {{3, 7, 2}, {11, 0}};
    CHECK(perplexity(outs, lm) == doctest::Approx(12.0).epsilon(1e-9));
}

TEST_CASE("one token at probability one half gives perplexity two") {
    SequenceModel lm(decoder_config(6, 16, 1, 1, 8), 5);
    int head = lm.params().seg_index("head.w");
    Mat w = lm.params().get(head);
    Mat logits = lm.forward_logits({Vocab::kStart});
    int k = 0;
    for (int j = 1; j < 6; ++j)
        if (std::abs(logits.at(0, j)) > std::abs(logits.at(0, k))) k = j;
    REQUIRE(logits.at(0, k) != 0.0);
    // Rebuild the output head as a linear map of the observed logit row:
    // tokens 1 and 5 land at logit 0, everything else at -1000 (which
    // underflows out of the softmax), so P(next = 5) is exactly one half.
    Mat remap(6, 6);
    for (int j = 0; j < 6; ++j)
        remap.at(k, j) = (j == 1 || j == 5 ? 0.0 : -1000.0) / logits.at(0, k);
    Mat remapped(w.rows, 6);
    matmul(w, remap, remapped);
    lm.params().set(head, remapped);
    CHECK(perplexity({{5}}, lm) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(perplexity({{1}}, lm) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("perplexity pools over the corpus and ignores order") {
    SequenceModel lm(decoder_config(9, 16, 1, 1, 8), 6);
    std::vector<std::vector<int>> outs = {{3, 4}, {5}, {6, 7, 8}};
    double base = perplexity(outs, lm);
    std::vector<std::vector<int>> rev(outs.rbegin(), outs.rend());
    CHECK(perplexity(rev, lm) == doctest::Approx(base).epsilon(1e-12));

    // Pooling is by token, not by sentence: splitting a sentence in two
    // changes nothing because the second half is reconditioned. Check the
    // exact pooled value against stepwise log-probs instead.
    double nll = 0.0;
    long count = 0;
    for (const auto& s : outs) {
        std::vector<int> ids;
        ids.push_back(Vocab::kStart);
        ids.insert(ids.end(), s.begin(), s.end());
        for (double lp : lm.stepwise_log_probs(ids)) nll -= lp;
        count += long(s.size());
    }
    CHECK(base == doctest::Approx(std::exp(nll / double(count))).epsilon(1e-12));
}

TEST_CASE("trained language models prefer real sentences to shuffled ones") {
    ToyCorpus c = generate_toy_corpus(default_toy_spec(), 40, 8, 8, 21);
    SequenceModel lm(decoder_config(c.vocab.size(), 48, 2, 2, 32), 77);
    MLEConfig cfg;
    cfg.epochs = 8;
    cfg.lr = 0.5;
    cfg.clip = 5.0;
    cfg.batch = 8;
    cfg.seed = 4;
    mle_pretrain_lm(lm, c.train.sentences, c.dev.sentences, cfg);

    std::vector<std::vector<int>> real, shuffled;
    Rng rng(85);
    for (const StyledSentence& s : c.test.sentences) {
        real.push_back(s.tokens);
        std::vector<int> mixed = s.tokens;
        rng.shuffle(mixed);
        shuffled.push_back(mixed);
    }
    CHECK(perplexity(real, lm) < perplexity(shuffled, lm));
}

TEST_CASE("perplexity rejects empty corpora") {
    SequenceModel lm = uniform_lm(4);
    CHECK_THROWS_AS(perplexity({}, lm), ValidationError);
    CHECK_THROWS_AS(perplexity({{}, {}}, lm), ValidationError);
}

TEST_CASE("geometric mean matches its closed form") {
    CHECK(geometric_mean(50.6, 42.9) == doctest::Approx(46.6).epsilon(0.0011));
    CHECK(geometric_mean(0.0, 87.3) == 0.0);
    CHECK(geometric_mean(64.0, 0.0) == 0.0);
    Rng rng(86);
    for (int i = 0; i < 100; ++i) {
        double x = rng.uniform(0.0, 100.0);
        CHECK(geometric_mean(x, x) == doctest::Approx(x).epsilon(1e-12));
    }
    CHECK_THROWS_AS(geometric_mean(-1.0, 5.0), ValidationError);
    CHECK_THROWS_AS(geometric_mean(5.0, -0.1), ValidationError);
}

TEST_CASE("style accuracy is the fraction of argmax hits, as a percent") {
    ToyCorpus c = generate_toy_corpus(default_toy_spec(), 10, 4, 4, 22);
    SequenceModel cls(classifier_config(c.vocab.size(), 32, 2, 2, 2, 16), 87);

    std::vector<StyledSentence> outputs = c.dev.sentences;
    int hits = 0;
    for (const StyledSentence& s : outputs) {
        auto probs = cls.classify(s.tokens).probs;
        int pred = 0;
        for (size_t k = 1; k < probs.size(); ++k)
            if (probs[k] > probs[pred]) pred = int(k);
        if (pred == s.style.id) ++hits;
    }
    double want = 100.0 * double(hits) / double(outputs.size());
    CHECK(style_accuracy(outputs, cls) == doctest::Approx(want).epsilon(1e-12));
    CHECK_THROWS_AS(style_accuracy({}, cls), ValidationError);
}

TEST_CASE("reward and evaluation models must differ") {
    SequenceModel a(decoder_config(10, 16, 1, 1, 8), 31);
    SequenceModel b(decoder_config(10, 16, 1, 1, 8), 31);
    SequenceModel cdiff(decoder_config(10, 16, 1, 1, 8), 32);
    CHECK_THROWS_AS(require_distinct_models(a, b), ValidationError);
    CHECK_NOTHROW(require_distinct_models(a, cdiff));
}

TEST_CASE("evaluate_transfer assembles the report and its invariant holds") {
    ToyCorpus c = generate_toy_corpus(default_toy_spec(), 12, 6, 4, 23);
    SequenceModel cls(classifier_config(c.vocab.size(), 32, 2, 2, 2, 16), 88);
    SequenceModel lm(decoder_config(c.vocab.size(), 48, 1, 2, 16), 89);

    std::vector<TransferResult> results;
    for (size_t i = 0; i < c.dev.sentences.size(); ++i) {
        TransferResult r;
        r.source = c.dev.sentences[i].tokens;
        r.output = c.dev.gold[i].tokens;     // pretend we nailed the transfer
        r.reference = c.dev.gold[i].tokens;
        r.source_style = c.dev.sentences[i].style.id;
        r.target_style = c.dev.gold[i].style.id;
        results.push_back(r);
    }
    EvalModels models;
    models.classifier = &cls;
    models.lm = &lm;
    models.vocab = &c.vocab;

    EvalReport rep = evaluate_transfer(results, models);
    CHECK(rep.content_bleu == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(rep.gm_all ==
          doctest::Approx(std::sqrt(rep.style_accuracy * rep.content_bleu))
              .epsilon(1e-9));
    CHECK(rep.perplexity > 0.0);
    REQUIRE(rep.detail.size() == results.size());
    for (const SentenceEval& row : rep.detail) {
        CHECK(row.bleu == doctest::Approx(100.0).epsilon(1e-9));
        CHECK(!row.output.empty());
        CHECK(row.tokens > 0);
    }

    std::string path = "/tmp/stylerl_eval_report.json";
    save_eval_report(path, rep);
    EvalReport back = load_eval_report(path);
    CHECK(back.style_accuracy == rep.style_accuracy);
    CHECK(back.content_bleu == rep.content_bleu);
    CHECK(back.perplexity == rep.perplexity);
    CHECK(back.gm_all == rep.gm_all);
    REQUIRE(back.detail.size() == rep.detail.size());
    CHECK(back.detail[0].output == rep.detail[0].output);
    CHECK(back.detail[0].predicted_style == rep.detail[0].predicted_style);
    std::remove(path.c_str());
}

TEST_CASE("efficiency report normalizes per run and finds first crossings") {
    std::vector<MetricsStream> streams;
    streams.push_back(
        make_stream("dense", 1, {0.0, 10.0, 5.0, 9.0, 10.0}, {4, 8, 12, 16, 20}));
    EfficiencyReport rep = efficiency_report(streams, 0.9);
    REQUIRE(rep.runs.size() == 1);
    const EfficiencyRun& run = rep.runs[0];
    CHECK(run.peak_reward == 10.0);
    // threshold 0 + 0.9 * (10 - 0) = 9, first crossed at the second step.
    CHECK(run.episodes_to_fraction == 8);
    REQUIRE(run.points.size() == 5);
    CHECK(run.points[0].normalized_reward == 0.0);
    CHECK(run.points[1].normalized_reward == 1.0);
    CHECK(run.points[2].normalized_reward == 0.5);
    for (const EfficiencyPoint& p : run.points) {
        CHECK(p.normalized_reward >= 0.0);
        CHECK(p.normalized_reward <= 1.0);
    }
}

TEST_CASE("a monotone stream peaks at its final step") {
    std::vector<MetricsStream> streams;
    streams.push_back(
        make_stream("dense", 1, {0.1, 0.4, 0.7, 1.3}, {8, 16, 24, 32}));
    EfficiencyReport rep = efficiency_report(streams, 1.0);
    CHECK(rep.runs[0].episodes_to_fraction == 32);
}

TEST_CASE("identical streams compare at ratio one") {
    std::vector<MetricsStream> streams;
    streams.push_back(make_stream("dense", 1, {0.0, 0.5, 1.0}, {4, 8, 12}));
    streams.push_back(make_stream("rollout", 1, {0.0, 0.5, 1.0}, {4, 8, 12}));
    EfficiencyReport rep = efficiency_report(streams, 0.9);
    CHECK(efficiency_ratio(rep, "dense", "rollout") == doctest::Approx(1.0));
}

TEST_CASE("short runs are excluded with a warning") {
    std::vector<MetricsStream> streams;
    streams.push_back(make_stream("dense", 1, {0.3}, {4}));
    streams.push_back(make_stream("dense", 2, {0.0, 0.5, 1.0}, {4, 8, 12}));
    EfficiencyReport rep = efficiency_report(streams, 0.9);
    CHECK(rep.runs.size() == 1);
    CHECK(rep.runs[0].seed == 2);
    REQUIRE(rep.warnings.size() == 1);
    CHECK(rep.warnings[0].find("seed 1") != std::string::npos);

    // A strategy with no usable runs at all cannot be reported.
    std::vector<MetricsStream> hopeless;
    hopeless.push_back(make_stream("dense", 1, {0.3}, {4}));
    CHECK_THROWS_AS(efficiency_report(hopeless, 0.9), ValidationError);
    CHECK_THROWS_AS(efficiency_report({}, 0.9), ValidationError);

    // Constant streams sit at their peak from the first step.
    std::vector<MetricsStream> flat;
    flat.push_back(make_stream("dense", 3, {0.5, 0.5, 0.5}, {4, 8, 12}));
    EfficiencyReport frep = efficiency_report(flat, 0.9);
    CHECK(frep.runs[0].episodes_to_fraction == 4);
    for (const EfficiencyPoint& p : frep.runs[0].points)
        CHECK(p.normalized_reward == 1.0);
}

TEST_CASE("efficiency report validates the fraction") {
    std::vector<MetricsStream> streams;
    streams.push_back(make_stream("dense", 1, {0.0, 1.0}, {4, 8}));
    CHECK_THROWS_AS(efficiency_report(streams, 0.0), ValidationError);
    CHECK_THROWS_AS(efficiency_report(streams, 1.5), ValidationError);
    CHECK_NOTHROW(efficiency_report(streams, 1.0));
}

TEST_CASE("efficiency csv carries one labeled row per point") {
    std::vector<MetricsStream> streams;
    streams.push_back(make_stream("dense", 7, {0.0, 1.0}, {4, 8}));
    streams.push_back(make_stream("rollout", 8, {0.2, 0.1, 0.9}, {6, 12, 18}));
    EfficiencyReport rep = efficiency_report(streams, 0.9);
    std::string path = "/tmp/stylerl_efficiency.csv";
    write_efficiency_csv(path, rep);
    std::string text = read_text_file(path);
    CHECK(text.find("episodes,normalized_reward,strategy,seed") == 0);
    CHECK(text.find("4,0,dense,7") != std::string::npos);
    CHECK(text.find("8,1,dense,7") != std::string::npos);
    CHECK(text.find("18,1,rollout,8") != std::string::npos);
    size_t rows = 0;
    for (char ch : text)
        if (ch == '\n') ++rows;
    CHECK(rows == 6);  // header + 5 points
    std::remove(path.c_str());
}
