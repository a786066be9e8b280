#include "stylerl/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "json.hpp"
#include "stylerl/common.hpp"

namespace stylerl {

namespace {

void check_head(const SequenceModelConfig& cfg, HeadId head) {
    if (head.layer < 0 || head.layer >= cfg.n_layers || head.head < 0 ||
        head.head >= cfg.n_heads)
        throw ValidationError("attention head (" + std::to_string(head.layer) + "," +
                              std::to_string(head.head) + ") outside classifier bounds");
}

}  // namespace

std::vector<double> attention_scores(const SequenceModel& classifier,
                                     const Vocab& vocab, HeadId head,
                                     const std::vector<int>& sentence) {
    check_head(classifier.config(), head);
    ClassifyResult res = classifier.classify(sentence);
    const Mat& map = res.attention[size_t(head.layer * res.n_heads + head.head)];

    std::vector<double> alpha(sentence.size(), 0.0);
    double sum = 0.0;
    for (size_t i = 0; i < sentence.size(); ++i) {
        if (vocab.is_marker(sentence[i])) continue;  // readout looks past specials
        alpha[i] = map.at(0, int(i) + 1);            // row 0 is the readout query
        sum += alpha[i];
    }
    if (sum > 0.0)
        for (double& a : alpha) a /= sum;
    return alpha;
}

HeadSelection select_style_head(const SequenceModel& classifier,
                                const Vocab& vocab,
                                const std::vector<StyledSentence>& dev,
                                double lambda_frac) {
    if (dev.empty()) throw ValidationError("head selection needs a non-empty dev set");
    if (!(lambda_frac > 0.0 && lambda_frac < 1.0))
        throw ValidationError("head-selection lambda must lie in (0, 1)");
    const SequenceModelConfig& cfg = classifier.config();

    HeadSelection sel;
    sel.lambda_frac = lambda_frac;
    sel.deviations = Mat(cfg.n_layers, cfg.n_heads);

    // One classify per (sentence, head) pair is wasteful: every head's alpha
    // comes from the same forward pass, so cache the maps per sentence.
    for (const StyledSentence& s : dev) {
        int n = int(s.tokens.size());
        int remove = int(std::floor(lambda_frac * n));
        if (remove == n) {
            ++sel.skipped;
            std::cerr << "head selection: skipping a " << n
                      << "-token sentence (removal would empty it)\n";
            continue;
        }
        ++sel.used;
        ClassifyResult full = classifier.classify(s.tokens);
        double p_full = full.probs[size_t(s.style.id)];

        std::vector<int> candidates;
        candidates.reserve(size_t(n));
        for (int i = 0; i < n; ++i)
            if (!vocab.is_marker(s.tokens[size_t(i)])) candidates.push_back(i);

        for (int l = 0; l < cfg.n_layers; ++l) {
            for (int h = 0; h < cfg.n_heads; ++h) {
                const Mat& map = full.attention[size_t(l * cfg.n_heads + h)];
                std::vector<int> order = candidates;
                std::sort(order.begin(), order.end(), [&](int a, int b) {
                    double aa = map.at(0, a + 1), ab = map.at(0, b + 1);
                    if (aa != ab) return aa > ab;
                    return a < b;
                });
                std::vector<bool> drop(size_t(n), false);
                int n_drop = std::min(remove, int(order.size()));
                for (int i = 0; i < n_drop; ++i) drop[size_t(order[size_t(i)])] = true;
                std::vector<int> reduced;
                reduced.reserve(size_t(n - remove));
                for (int i = 0; i < n; ++i)
                    if (!drop[size_t(i)]) reduced.push_back(s.tokens[size_t(i)]);

                double p_red = classifier.classify(reduced).probs[size_t(s.style.id)];
                sel.deviations.at(l, h) += std::abs(p_full - p_red);
            }
        }
    }
    if (sel.used == 0)
        throw ValidationError("head selection: every dev sentence was skipped");

    double best = -1.0;
    for (int l = 0; l < cfg.n_layers; ++l) {
        for (int h = 0; h < cfg.n_heads; ++h) {
            sel.deviations.at(l, h) /= sel.used;
            if (sel.deviations.at(l, h) > best) {
                best = sel.deviations.at(l, h);
                sel.head = {l, h};
            }
        }
    }
    return sel;
}

AttributionResult compute_mask(const std::vector<double>& alpha,
                               double lambda_frac, MaskMode mode) {
    if (!(lambda_frac >= 0.0 && lambda_frac <= 1.0))
        throw ValidationError("mask lambda must lie in [0, 1]");
    AttributionResult res;
    res.alpha = alpha;
    res.lambda_frac = lambda_frac;
    if (mode == MaskMode::continuous) {
        res.mask = alpha;
        return res;
    }
    int n = int(alpha.size());
    int k = int(std::floor(lambda_frac * n));
    std::vector<int> order(size_t(n), 0);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (alpha[size_t(a)] != alpha[size_t(b)]) return alpha[size_t(a)] > alpha[size_t(b)];
        return a < b;
    });
    res.mask.assign(size_t(n), 0.0);
    for (int i = 0; i < k; ++i) res.mask[size_t(order[size_t(i)])] = 1.0;
    return res;
}

void save_head_report(const std::string& path, const HeadSelection& sel) {
    nlohmann::ordered_json j;
    j["head"] = {{"layer", sel.head.layer}, {"head", sel.head.head}};
    j["lambda"] = sel.lambda_frac;
    j["dev_sentences_used"] = sel.used;
    j["dev_sentences_skipped"] = sel.skipped;
    nlohmann::ordered_json table = nlohmann::ordered_json::array();
    for (int l = 0; l < sel.deviations.rows; ++l) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (int h = 0; h < sel.deviations.cols; ++h) row.push_back(sel.deviations.at(l, h));
        table.push_back(row);
    }
    j["deviation"] = table;
    write_text_file(path, j.dump(2) + "\n");
}

HeadSelection load_head_report(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed head report " + path + ": " + e.what());
    }
    HeadSelection sel;
    try {
        sel.head.layer = j.at("head").at("layer").get<int>();
        sel.head.head = j.at("head").at("head").get<int>();
        sel.lambda_frac = j.at("lambda").get<double>();
        sel.used = j.at("dev_sentences_used").get<int>();
        sel.skipped = j.at("dev_sentences_skipped").get<int>();
        const auto& table = j.at("deviation");
        int rows = int(table.size());
        int cols = rows > 0 ? int(table.at(0).size()) : 0;
        sel.deviations = Mat(rows, cols);
        for (int l = 0; l < rows; ++l)
            for (int h = 0; h < cols; ++h)
                sel.deviations.at(l, h) = table.at(size_t(l)).at(size_t(h)).get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed head report " + path + ": " + e.what());
    }
    return sel;
}

}  // namespace stylerl
