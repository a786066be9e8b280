#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stylerl/corpus.hpp"
#include "stylerl/metrics.hpp"
#include "stylerl/model.hpp"
#include "stylerl/vocab.hpp"

namespace stylerl {

// One transferred sentence ready for scoring. Token lists carry no special
// tokens; references are the aligned gold transfers.
struct TransferResult {
    std::vector<int> source;
    std::vector<int> output;
    std::vector<int> reference;
    int source_style = 0;
    int target_style = 0;
};

struct SentenceEval {
    std::string source;
    std::string output;
    std::string reference;
    int target_style = 0;
    int predicted_style = 0;
    double bleu = 0.0;  // this sentence against its own reference
    long tokens = 0;
};

struct EvalReport {
    double style_accuracy = 0.0;  // percent of outputs hitting their target
    double content_bleu = 0.0;    // corpus BLEU, 0..100
    double perplexity = 0.0;
    double gm_all = 0.0;          // sqrt(style_accuracy * content_bleu)
    std::vector<SentenceEval> detail;
};

// Percent of sentences whose predicted style equals the intended target
// (each sentence's style field holds the target). Ties break toward the
// lower style id so results do not depend on probability noise.
double style_accuracy(const std::vector<StyledSentence>& outputs,
                      const SequenceModel& eval_classifier);

// Corpus-level BLEU up to 4-grams with brevity penalty, scaled to 0..100.
// A modified precision with zero matches is add-one smoothed; the corpus
// totals make the score invariant to sentence order.
double corpus_bleu(const std::vector<std::vector<int>>& outputs,
                   const std::vector<std::vector<int>>& references);

// exp of the corpus-pooled mean negative log-likelihood per output token.
// Sentences are scored as continuations of <start>; empty ones contribute
// nothing.
double perplexity(const std::vector<std::vector<int>>& outputs,
                  const SequenceModel& eval_lm);

double geometric_mean(double style, double content);

// Evaluation models must not share parameters with the reward models they
// audit; equality of parameter hashes is a configuration bug.
void require_distinct_models(const SequenceModel& reward_model,
                             const SequenceModel& eval_model);

struct EvalModels {
    const SequenceModel* classifier = nullptr;
    const SequenceModel* lm = nullptr;
    const Vocab* vocab = nullptr;
};

EvalReport evaluate_transfer(const std::vector<TransferResult>& results,
                             const EvalModels& models);

void save_eval_report(const std::string& path, const EvalReport& report);
EvalReport load_eval_report(const std::string& path);

// Transfer outputs, one JSON object per line, token ids as arrays.
void save_transfer_records(const std::string& path,
                           const std::vector<TransferResult>& results);
std::vector<TransferResult> load_transfer_records(const std::string& path);

// ---- sample-efficiency comparison ----

struct MetricsStream {
    std::string strategy;
    std::uint64_t seed = 0;
    std::vector<MetricsRecord> records;
};

struct EfficiencyPoint {
    long episodes = 0;
    double normalized_reward = 0.0;  // min-max over this run, in [0, 1]
};

struct EfficiencyRun {
    std::string strategy;
    std::uint64_t seed = 0;
    std::vector<EfficiencyPoint> points;
    double peak_reward = 0.0;        // raw mean reward at the run's peak
    long episodes_to_fraction = 0;   // first step crossing fraction * peak
    double wall_ms_to_fraction = 0.0;
};

struct EfficiencyReport {
    double fraction = 0.0;
    std::vector<EfficiencyRun> runs;
    std::vector<std::string> warnings;  // runs excluded as too short
};

// Normalizes each run min-max, finds the first crossing of
// fraction * peak, and keeps a per-seed breakdown. Runs shorter than two
// steps are excluded with a warning; a strategy losing all of its runs is
// an error.
EfficiencyReport efficiency_report(const std::vector<MetricsStream>& streams,
                                   double fraction);

// Mean episodes-to-fraction of strategy a divided by that of strategy b.
double efficiency_ratio(const EfficiencyReport& report, const std::string& a,
                        const std::string& b);

// One row per curve point: episodes, normalized_reward, strategy, seed.
void write_efficiency_csv(const std::string& path,
                          const EfficiencyReport& report);

}  // namespace stylerl
