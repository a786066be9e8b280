#include <cmath>
#include <cstdio>
#include <numeric>

#include "doctest.h"
#include "stylerl/attribution.hpp"
#include "stylerl/common.hpp"

using namespace stylerl;

namespace {

Vocab small_vocab() {
    std::vector<std::vector<std::string>> sents = {
        {"the", "food", "was", "good", "bad", "and", "."},
    };
    return Vocab::build(sents, {"pos", "neg"});
}

SequenceModel small_classifier(const Vocab& v, std::uint64_t seed = 5) {
    return SequenceModel(classifier_config(v.size(), 32, 2, 2, 2, 16), seed);
}

StyledSentence sent(const Vocab& v, std::vector<std::string> words, int style) {
    StyledSentence s;
    s.tokens = v.encode(words);
    s.style = {style, v.style_names()[size_t(style)]};
    s.raw_text = detokenize(words);
    return s;
}

}  // namespace

TEST_CASE("attention scores form a distribution over tokens") {
    Vocab v = small_vocab();
    SequenceModel cls = small_classifier(v);
    std::vector<int> y = v.encode({"the", "food", "was", "good"});
    for (int l = 0; l < 2; ++l) {
        for (int h = 0; h < 2; ++h) {
            auto alpha = attention_scores(cls, v, {l, h}, y);
            REQUIRE(alpha.size() == y.size());
            double sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
            for (double a : alpha) CHECK(a >= 0.0);
        }
    }
}

TEST_CASE("single-token sentence gets all the attention") {
    Vocab v = small_vocab();
    SequenceModel cls = small_classifier(v);
    auto alpha = attention_scores(cls, v, {0, 1}, v.encode({"good"}));
    REQUIRE(alpha.size() == 1);
    CHECK(alpha[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("attention scores reject out-of-range heads") {
    Vocab v = small_vocab();
    SequenceModel cls = small_classifier(v);
    std::vector<int> y = v.encode({"the", "food"});
    CHECK_THROWS_AS(attention_scores(cls, v, {2, 0}, y), ValidationError);
    CHECK_THROWS_AS(attention_scores(cls, v, {0, 2}, y), ValidationError);
    CHECK_THROWS_AS(attention_scores(cls, v, {-1, 0}, y), ValidationError);
}

TEST_CASE("hard mask keeps the documented selections") {
    auto a = compute_mask({0.1, 0.6, 0.3}, 0.34, MaskMode::hard);
    CHECK(a.mask == std::vector<double>({0.0, 1.0, 0.0}));

    auto zero = compute_mask({0.1, 0.6, 0.3}, 0.0, MaskMode::hard);
    CHECK(zero.mask == std::vector<double>({0.0, 0.0, 0.0}));

    // Equal scores: the earlier position wins the single slot.
    auto tie = compute_mask({0.5, 0.5}, 0.5, MaskMode::hard);
    CHECK(tie.mask == std::vector<double>({1.0, 0.0}));
}

TEST_CASE("hard mask cardinality is exact on random inputs") {
    Rng rng(808);
    for (int trial = 0; trial < 300; ++trial) {
        size_t n = 1 + rng.index(20);
        std::vector<double> alpha(n, 0.0);
        for (double& a : alpha) a = rng.uniform();
        double lambda = rng.uniform();
        auto res = compute_mask(alpha, lambda, MaskMode::hard);
        int ones = 0;
        for (double m : res.mask) {
            CHECK((m == 0.0 || m == 1.0));
            if (m == 1.0) ++ones;
        }
        CHECK(ones == int(std::floor(lambda * double(n))));

        // Rank-based selection: uniform rescaling cannot change the mask.
        std::vector<double> scaled = alpha;
        for (double& a : scaled) a *= 7.5;
        CHECK(compute_mask(scaled, lambda, MaskMode::hard).mask == res.mask);
    }
}

TEST_CASE("continuous mask passes alpha through") {
    std::vector<double> alpha = {0.2, 0.5, 0.3};
    auto res = compute_mask(alpha, 0.25, MaskMode::continuous);
    CHECK(res.mask == alpha);
    CHECK(res.alpha == alpha);
    CHECK(res.lambda_frac == 0.25);
}

TEST_CASE("compute_mask validates lambda") {
    CHECK_THROWS_AS(compute_mask({0.5}, -0.1, MaskMode::hard), ValidationError);
    CHECK_THROWS_AS(compute_mask({0.5}, 1.1, MaskMode::hard), ValidationError);
}

TEST_CASE("head selection with no removable tokens falls back to the first head") {
    Vocab v = small_vocab();
    SequenceModel cls = small_classifier(v);
    // 4-token sentences with lambda 0.2: floor(0.8) = 0 tokens removed, so
    // every head deviates by exactly zero and the tie-break picks (0, 0).
    std::vector<StyledSentence> dev = {
        sent(v, {"the", "food", "was", "good"}, 0),
        sent(v, {"the", "food", "was", "bad"}, 1),
    };
    HeadSelection sel = select_style_head(cls, v, dev, 0.2);
    CHECK(sel.head == HeadId{0, 0});
    CHECK(sel.used == 2);
    CHECK(sel.skipped == 0);
    for (int l = 0; l < sel.deviations.rows; ++l)
        for (int h = 0; h < sel.deviations.cols; ++h)
            CHECK(sel.deviations.at(l, h) == 0.0);
}

TEST_CASE("head selection deviations are probabilities and deterministic") {
    Vocab v = small_vocab();
    SequenceModel cls = small_classifier(v, 17);
    std::vector<StyledSentence> dev = {
        sent(v, {"the", "food", "was", "good"}, 0),
        sent(v, {"the", "food", "was", "bad"}, 1),
        sent(v, {"food", "was", "good", "and", "bad"}, 0),
    };
    HeadSelection a = select_style_head(cls, v, dev, 0.3);
    HeadSelection b = select_style_head(cls, v, dev, 0.3);
    CHECK(a.head == b.head);
    for (int l = 0; l < a.deviations.rows; ++l) {
        for (int h = 0; h < a.deviations.cols; ++h) {
            CHECK(a.deviations.at(l, h) >= 0.0);
            CHECK(a.deviations.at(l, h) <= 1.0);
            CHECK(a.deviations.at(l, h) == b.deviations.at(l, h));
        }
    }
    // The winner attains the table maximum.
    double best = -1.0;
    for (int l = 0; l < a.deviations.rows; ++l)
        for (int h = 0; h < a.deviations.cols; ++h)
            best = std::max(best, a.deviations.at(l, h));
    CHECK(a.deviations.at(a.head.layer, a.head.head) == best);
}

TEST_CASE("head selection skips sentences it would empty, and validates input") {
    Vocab v = small_vocab();
    SequenceModel cls = small_classifier(v);
    StyledSentence empty;
    empty.style = {0, "pos"};
    std::vector<StyledSentence> dev = {
        empty,
        sent(v, {"the", "food", "was", "good"}, 0),
    };
    HeadSelection sel = select_style_head(cls, v, dev, 0.3);
    CHECK(sel.skipped == 1);
    CHECK(sel.used == 1);

    CHECK_THROWS_AS(select_style_head(cls, v, {}, 0.3), ValidationError);
    CHECK_THROWS_AS(select_style_head(cls, v, dev, 0.0), ValidationError);
    CHECK_THROWS_AS(select_style_head(cls, v, dev, 1.0), ValidationError);
    std::vector<StyledSentence> all_empty = {empty};
    CHECK_THROWS_AS(select_style_head(cls, v, all_empty, 0.3), ValidationError);
}

TEST_CASE("head report round-trips through disk") {
    Vocab v = small_vocab();
    SequenceModel cls = small_classifier(v, 23);
    std::vector<StyledSentence> dev = {
        sent(v, {"the", "food", "was", "good"}, 0),
        sent(v, {"the", "food", "was", "bad"}, 1),
    };
    HeadSelection sel = select_style_head(cls, v, dev, 0.3);
    std::string path = "head_report_test.json";
    save_head_report(path, sel);
    HeadSelection back = load_head_report(path);
    CHECK(back.head == sel.head);
    CHECK(back.lambda_frac == sel.lambda_frac);
    CHECK(back.used == sel.used);
    CHECK(back.skipped == sel.skipped);
    for (int l = 0; l < sel.deviations.rows; ++l)
        for (int h = 0; h < sel.deviations.cols; ++h)
            CHECK(back.deviations.at(l, h) == sel.deviations.at(l, h));
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_head_report("no_such_report.json"), ValidationError);
}
