#include <filesystem>
#include <set>
#include <unordered_set>

#include "doctest.h"
#include "stylerl/common.hpp"
#include "stylerl/corpus.hpp"
#include "stylerl/toy_task.hpp"
#include "stylerl/vocab.hpp"

using namespace stylerl;
namespace fs = std::filesystem;

TEST_CASE("tokenize lowercases, splits punctuation and collapses spaces") {
    CHECK(tokenize("The  food was GOOD.") ==
          std::vector<std::string>{"the", "food", "was", "good", "."});
    CHECK(tokenize("great, really!") ==
          std::vector<std::string>{"great", ",", "really", "!"});
    CHECK(tokenize("   ") == std::vector<std::string>{});
    CHECK(normalize_text("The food was good.") == "the food was good .");
}

TEST_CASE("normalized text survives a tokenize round trip") {
    std::string norm = normalize_text("This place, honestly, was SO cozy!");
    CHECK(detokenize(tokenize(norm)) == norm);
}

TEST_CASE("vocab reserves the special ids in order") {
    Vocab v = Vocab::build({{"the", "food", "was", "good"}}, {"pos", "neg"});
    CHECK(v.token(Vocab::kPad) == "<pad>");
    CHECK(v.token(Vocab::kUnk) == "<unk>");
    CHECK(v.token(Vocab::kSrcStart) == "<src>");
    CHECK(v.token(Vocab::kStart) == "<start>");
    CHECK(v.token(Vocab::kEnd) == "<end>");
    CHECK(v.token(v.style_marker(0)) == "<pos>");
    CHECK(v.token(v.style_marker(1)) == "<neg>");
    CHECK(v.n_specials() == 7);
    CHECK(v.size() == 7 + 4);
    CHECK(v.is_marker(Vocab::kPad));
    CHECK(v.is_marker(v.style_marker(1)));
    CHECK_FALSE(v.is_marker(Vocab::kUnk));
    CHECK_FALSE(v.is_marker(v.id("food")));
}

TEST_CASE("vocab maps ids bijectively and unknown words to <unk>") {
    Vocab v = Vocab::build({{"a", "b"}}, {"pos", "neg"});
    for (int i = 0; i < v.size(); ++i) CHECK(v.id(v.token(i)) == i);
    CHECK(v.id("zebra") == Vocab::kUnk);
    auto ids = v.encode({"a", "zebra", "b"});
    CHECK(ids == std::vector<int>{v.id("a"), Vocab::kUnk, v.id("b")});
}

TEST_CASE("vocab save/load round trip preserves ids and hash") {
    Vocab v = Vocab::build({{"x", "y", "z"}}, {"pos", "neg"});
    auto path = (fs::temp_directory_path() / "stylerl_vocab_test.json").string();
    v.save(path);
    Vocab w = Vocab::load(path);
    fs::remove(path);
    CHECK(w.size() == v.size());
    CHECK(w.content_hash() == v.content_hash());
    for (int i = 0; i < v.size(); ++i) CHECK(w.token(i) == v.token(i));
}

TEST_CASE("load_corpus encodes a one-line file consistently") {
    auto path = (fs::temp_directory_path() / "stylerl_corpus_test.txt").string();
    write_text_file(path, "the food was good\n\nthe staff was rude\n");
    auto lines = load_corpus_lines(path, 16);
    Vocab v = Vocab::build(lines, {"pos", "neg"});
    LoadStats stats;
    auto sents = load_corpus(path, {0, "pos"}, v, 16, &stats);
    fs::remove(path);
    REQUIRE(sents.size() == 2);
    CHECK(stats.kept == 2);
    CHECK(stats.skipped_empty == 1);
    CHECK(sents[0].raw_text == "the food was good");
    CHECK(sents[0].tokens == v.encode({"the", "food", "was", "good"}));
    CHECK(v.decode(sents[0].tokens) ==
          std::vector<std::string>{"the", "food", "was", "good"});
}

TEST_CASE("load_corpus skips and counts overlong sentences") {
    auto path = (fs::temp_directory_path() / "stylerl_overlong_test.txt").string();
    write_text_file(path, "a b c d e\na b\n");
    LoadStats stats;
    auto lines = load_corpus_lines(path, 3, &stats);
    fs::remove(path);
    CHECK(lines.size() == 1);
    CHECK(stats.skipped_overlong == 1);
}

TEST_CASE("corpus records round trip") {
    Vocab v = Vocab::build({{"nice", "bad", "spot"}}, {"pos", "neg"});
    std::vector<StyleLabel> styles = {{0, "pos"}, {1, "neg"}};
    std::vector<StyledSentence> sents = {
        {v.encode({"nice", "spot"}), styles[0], "nice spot"},
        {v.encode({"bad", "spot"}), styles[1], "bad spot"},
    };
    auto path = (fs::temp_directory_path() / "stylerl_records_test.jsonl").string();
    save_corpus_records(path, sents);
    auto back = load_corpus_records(path, v, styles);
    fs::remove(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].raw_text == "nice spot");
    CHECK(back[0].style.name == "pos");
    CHECK(back[1].tokens == sents[1].tokens);
}

TEST_CASE("toy spec validation rejects malformed specs") {
    ToyTaskSpec s = default_toy_spec();
    CHECK_NOTHROW(validate_toy_spec(s));

    ToyTaskSpec overlap = default_toy_spec();
    overlap.neutrals.push_back("good");
    CHECK_THROWS_AS(validate_toy_spec(overlap), ValidationError);

    ToyTaskSpec no_style = default_toy_spec();
    no_style.templates.push_back("{d} {n} was fine .");
    CHECK_THROWS_AS(validate_toy_spec(no_style), ValidationError);

    ToyTaskSpec short_range = default_toy_spec();
    short_range.max_len = 3;
    CHECK_THROWS_AS(validate_toy_spec(short_range), ValidationError);

    ToyTaskSpec bad_slot = default_toy_spec();
    bad_slot.templates.push_back("{d} {n} was {x} {s}");
    CHECK_THROWS_AS(validate_toy_spec(bad_slot), ValidationError);
}

TEST_CASE("toy corpus is deterministic, disjoint, and exactly sized") {
    ToyTaskSpec spec = default_toy_spec();
    ToyCorpus a = generate_toy_corpus(spec, 50, 20, 20, 99);
    ToyCorpus b = generate_toy_corpus(spec, 50, 20, 20, 99);
    ToyCorpus c = generate_toy_corpus(spec, 50, 20, 20, 100);

    CHECK(a.train.sentences.size() == 100);
    CHECK(a.dev.sentences.size() == 40);
    CHECK(a.test.sentences.size() == 40);

    auto texts = [](const ToySplit& s) {
        std::vector<std::string> out;
        for (const auto& x : s.sentences) out.push_back(x.raw_text);
        return out;
    };
    CHECK(texts(a.train) == texts(b.train));
    CHECK(texts(a.dev) == texts(b.dev));
    CHECK(texts(a.train) != texts(c.train));

    std::unordered_set<std::string> all;
    int per_style[2] = {0, 0};
    for (const ToySplit* sp : {&a.train, &a.dev, &a.test})
        for (const auto& s : sp->sentences) {
            CHECK(all.insert(s.raw_text).second);  // no duplicates anywhere
            if (sp == &a.train) ++per_style[s.style.id];
        }
    CHECK(per_style[0] == 50);
    CHECK(per_style[1] == 50);
}

TEST_CASE("every toy sentence carries at least one style word") {
    ToyTaskSpec spec = default_toy_spec();
    ToyCorpus c = generate_toy_corpus(spec, 80, 10, 10, 7);
    for (const auto& s : c.train.sentences) {
        int n_style = 0;
        for (const auto& w : tokenize(s.raw_text)) {
            int sty, idx;
            if (style_word_index(spec, w, &sty, &idx)) {
                ++n_style;
                CHECK(sty == s.style.id);
            }
        }
        CHECK(n_style >= 1);
    }
}

TEST_CASE("multi-attribute probability zero gives exactly one style word") {
    ToyTaskSpec spec = default_toy_spec();
    spec.multi_attr_prob = 0.0;
    ToyCorpus c = generate_toy_corpus(spec, 60, 5, 5, 3);
    for (const auto& s : c.train.sentences) {
        int n_style = 0;
        for (const auto& w : tokenize(s.raw_text))
            if (style_word_index(spec, w, nullptr, nullptr)) ++n_style;
        CHECK(n_style == 1);
    }
}

TEST_CASE("gold references flip the style and swap back exactly") {
    ToyTaskSpec spec = default_toy_spec();
    ToyCorpus c = generate_toy_corpus(spec, 40, 5, 5, 17);
    const auto& split = c.train;
    REQUIRE(split.gold.size() == split.sentences.size());
    for (size_t i = 0; i < split.sentences.size(); ++i) {
        const auto& src = split.sentences[i];
        const auto& gold = split.gold[i];
        CHECK(gold.style.id == 1 - src.style.id);
        CHECK(gold.tokens.size() == src.tokens.size());
        // Swapping the gold again must reproduce the source.
        auto pairs = synthesize_parallel_corpus({gold}, spec, c.vocab,
                                                ParallelTransform::lexicon_swap,
                                                0.0, 1);
        CHECK(pairs[0].target.raw_text == src.raw_text);
    }
}

TEST_CASE("unsatisfiable uniqueness demand fails loudly") {
    ToyTaskSpec spec = default_toy_spec();
    spec.templates = {"{d} {n} was {s}"};
    spec.determiners = {"the"};
    spec.nouns = {"food"};
    // Only 12 unique sentences exist per style.
    CHECK_THROWS_AS(generate_toy_corpus(spec, 100, 0, 0, 5), ValidationError);
}

TEST_CASE("parallel synthesis transforms behave as named") {
    ToyTaskSpec spec = default_toy_spec();
    ToyCorpus c = generate_toy_corpus(spec, 30, 5, 5, 23);
    const auto& sents = c.train.sentences;

    auto ident = synthesize_parallel_corpus(sents, spec, c.vocab,
                                            ParallelTransform::identity, 0.0, 9);
    for (size_t i = 0; i < sents.size(); ++i) {
        CHECK(ident[i].target.raw_text == sents[i].raw_text);
        CHECK(ident[i].target.style.id == sents[i].style.id);
        CHECK(ident[i].provenance == "identity");
    }

    auto swap = synthesize_parallel_corpus(sents, spec, c.vocab,
                                           ParallelTransform::lexicon_swap, 0.0, 9);
    auto noisy0 = synthesize_parallel_corpus(sents, spec, c.vocab,
                                             ParallelTransform::noisy_swap, 0.0, 9);
    for (size_t i = 0; i < sents.size(); ++i) {
        CHECK(swap[i].target.style.id == 1 - sents[i].style.id);
        CHECK(swap[i].target.raw_text == noisy0[i].target.raw_text);
        // Swapped text must contain no source-style lexicon words.
        for (const auto& w : tokenize(swap[i].target.raw_text)) {
            int sty, idx;
            if (style_word_index(spec, w, &sty, &idx))
                CHECK(sty == swap[i].target.style.id);
        }
    }

    auto noisy1 = synthesize_parallel_corpus(sents, spec, c.vocab,
                                             ParallelTransform::noisy_swap, 1.0, 9);
    int differs = 0;
    for (size_t i = 0; i < sents.size(); ++i) {
        for (const auto& w : tokenize(noisy1[i].target.raw_text)) {
            int sty, idx;
            if (style_word_index(spec, w, &sty, &idx))
                CHECK(sty == 1 - sents[i].style.id);
        }
        if (noisy1[i].target.raw_text != swap[i].target.raw_text) ++differs;
    }
    CHECK(differs > 0);  // full noise rarely reproduces every aligned swap
}
