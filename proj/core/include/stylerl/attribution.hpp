#pragma once

#include <string>
#include <vector>

#include "stylerl/corpus.hpp"
#include "stylerl/mat.hpp"
#include "stylerl/model.hpp"
#include "stylerl/vocab.hpp"

namespace stylerl {

struct HeadId {
    int layer = 0;
    int head = 0;
    bool operator==(const HeadId& o) const { return layer == o.layer && head == o.head; }
};

enum class MaskMode { hard, continuous };

struct AttributionResult {
    std::vector<double> alpha;  // per-token attention weight, sums to 1
    std::vector<double> mask;   // 0/1 in hard mode, alpha in continuous mode
    double lambda_frac = 0.0;
    HeadId head;
};

// Attention paid by the classification readout to each sentence token in the
// given head, renormalized over non-special positions.
std::vector<double> attention_scores(const SequenceModel& classifier,
                                     const Vocab& vocab, HeadId head,
                                     const std::vector<int>& sentence);

struct HeadSelection {
    HeadId head;
    Mat deviations;   // layer x head: mean |P(true|x) - P(true|x_reduced)|
    int used = 0;     // dev sentences that contributed
    int skipped = 0;  // dev sentences where removal would empty the input
    double lambda_frac = 0.0;
};

// Leave-one-out search over every head: remove each head's top lambda-fraction
// tokens from each dev sentence, re-classify, and keep the head that moves the
// true-style probability the most. Ties fall to the earliest (layer, head).
HeadSelection select_style_head(const SequenceModel& classifier,
                                const Vocab& vocab,
                                const std::vector<StyledSentence>& dev,
                                double lambda_frac);

// Hard mode marks the top floor(lambda * n) positions by alpha (ties go to
// the lower position); continuous mode passes alpha through.
AttributionResult compute_mask(const std::vector<double>& alpha,
                               double lambda_frac, MaskMode mode);

void save_head_report(const std::string& path, const HeadSelection& sel);
HeadSelection load_head_report(const std::string& path);

}  // namespace stylerl
