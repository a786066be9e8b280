#include "stylerl/toy_task.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "stylerl/common.hpp"

namespace stylerl {

namespace {

enum class SlotKind { Literal, Det, Noun, Verb, Mod, Style, OptStyle };

struct Slot {
    SlotKind kind;
    std::string literal;
};

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<Slot> parse_template(const std::string& tmpl) {
    std::vector<Slot> out;
    for (const auto& tok : split_ws(tmpl)) {
        if (tok == "{d}") out.push_back({SlotKind::Det, {}});
        else if (tok == "{n}") out.push_back({SlotKind::Noun, {}});
        else if (tok == "{v}") out.push_back({SlotKind::Verb, {}});
        else if (tok == "{m}") out.push_back({SlotKind::Mod, {}});
        else if (tok == "{s}") out.push_back({SlotKind::Style, {}});
        else if (tok == "{s?}") out.push_back({SlotKind::OptStyle, {}});
        else if (tok.front() == '{')
            throw ValidationError("unknown template slot: " + tok);
        else out.push_back({SlotKind::Literal, tok});
    }
    return out;
}

}  // namespace

ToyTaskSpec default_toy_spec() {
    ToyTaskSpec s;
    s.style_names = {"pos", "neg"};
    s.style_lexicons[0] = {"good",     "great", "tasty",  "fresh", "friendly",
                           "clean",    "lovely", "fast",  "cheap", "cozy",
                           "helpful",  "amazing"};
    s.style_lexicons[1] = {"bad",      "awful", "bland",  "stale", "rude",
                           "dirty",    "ugly",  "slow",   "pricey", "cramped",
                           "useless",  "terrible"};
    s.determiners = {"the", "this", "that", "my", "our"};
    s.nouns = {"food",  "place", "service", "staff", "coffee", "room",
               "pizza", "soup",  "menu",    "bread", "decor",  "wine",
               "cake",  "tea",   "salad",   "patio"};
    s.verbs = {"was", "is", "seemed", "looked", "felt", "tasted", "smelled", "sounded"};
    s.modifiers = {"very", "really", "quite", "so", "truly", "rather", "pretty", "super"};
    s.neutrals = {"small", "big", "local", "busy", "quiet", "simple"};
    s.templates = {
        "{d} {n} was {s}",
        "{d} {n} was {s} .",
        "{d} {n} {v} {m} {s}",
        "{d} {n} was {m} {s} .",
        "{d} {n} and {n} were {s}",
        "{d} {n} was {s} and {s?} .",
        "honestly {d} {n} {v} {m} {s} .",
        "{d} {s?} {n} was {m} {s} .",
        "{d} {n} was {s} and {d} {n} was {s?} .",
        "{d} {n} was {s} , {d} {n} seemed {s?} and {d} {n} looked {s?}",
    };
    s.multi_attr_prob = 0.3;
    s.min_len = 3;
    s.max_len = 16;
    return s;
}

bool style_word_index(const ToyTaskSpec& spec, const std::string& token,
                      int* style, int* word) {
    for (int s = 0; s < 2; ++s) {
        const auto& lex = spec.style_lexicons[size_t(s)];
        auto it = std::find(lex.begin(), lex.end(), token);
        if (it != lex.end()) {
            if (style) *style = s;
            if (word) *word = int(it - lex.begin());
            return true;
        }
    }
    return false;
}

void validate_toy_spec(const ToyTaskSpec& spec) {
    if (spec.style_names.size() != 2)
        throw ValidationError("toy task needs exactly two styles");
    if (spec.style_lexicons[0].empty() ||
        spec.style_lexicons[0].size() != spec.style_lexicons[1].size())
        throw ValidationError("style lexicons must be nonempty and aligned");
    if (spec.multi_attr_prob < 0.0 || spec.multi_attr_prob > 1.0)
        throw ValidationError("multi-attribute probability outside [0,1]");
    if (spec.templates.empty()) throw ValidationError("no templates");
    if (spec.min_len < 1 || spec.max_len < spec.min_len)
        throw ValidationError("bad sentence length range");

    const std::vector<const std::vector<std::string>*> groups = {
        &spec.style_lexicons[0], &spec.style_lexicons[1], &spec.determiners,
        &spec.nouns, &spec.verbs, &spec.modifiers, &spec.neutrals};
    std::unordered_set<std::string> seen;
    for (const auto* g : groups)
        for (const auto& w : *g) {
            if (tokenize(w).size() != 1 || tokenize(w)[0] != w)
                throw ValidationError("lexicon entry is not a single normalized token: " + w);
            if (!seen.insert(w).second)
                throw ValidationError("lexicon groups overlap on word: " + w);
        }

    for (const auto& t : spec.templates) {
        auto slots = parse_template(t);  // throws on unknown slots
        int len = int(slots.size());
        if (len < spec.min_len || len > spec.max_len)
            throw ValidationError("template length outside range: " + t);
        int mandatory = 0;
        for (const auto& sl : slots) {
            if (sl.kind == SlotKind::Literal &&
                (tokenize(sl.literal).size() != 1 || tokenize(sl.literal)[0] != sl.literal))
                throw ValidationError("template literal is not a single normalized token: " +
                                      sl.literal);
            if (sl.kind == SlotKind::Style) ++mandatory;
            if (sl.kind == SlotKind::Det && spec.determiners.empty())
                throw ValidationError("template uses {d} but no determiners: " + t);
            if (sl.kind == SlotKind::Noun && spec.nouns.empty())
                throw ValidationError("template uses {n} but no nouns: " + t);
            if (sl.kind == SlotKind::Verb && spec.verbs.empty())
                throw ValidationError("template uses {v} but no verbs: " + t);
            if (sl.kind == SlotKind::Mod && spec.modifiers.empty())
                throw ValidationError("template uses {m} but no modifiers: " + t);
            if (sl.kind == SlotKind::OptStyle && spec.neutrals.empty())
                throw ValidationError("template uses {s?} but no neutral fillers: " + t);
        }
        if (mandatory != 1)
            throw ValidationError("template must contain exactly one {s}: " + t);
    }
}

namespace {

Vocab build_toy_vocab(const ToyTaskSpec& spec) {
    std::vector<std::vector<std::string>> pseudo;
    std::vector<std::string> literals;
    for (const auto& t : spec.templates)
        for (const auto& sl : parse_template(t))
            if (sl.kind == SlotKind::Literal) literals.push_back(sl.literal);
    pseudo.push_back(literals);
    pseudo.push_back(spec.determiners);
    pseudo.push_back(spec.nouns);
    pseudo.push_back(spec.verbs);
    pseudo.push_back(spec.modifiers);
    pseudo.push_back(spec.neutrals);
    pseudo.push_back(spec.style_lexicons[0]);
    pseudo.push_back(spec.style_lexicons[1]);
    return Vocab::build(pseudo, spec.style_names);
}

struct DrawnSentence {
    std::vector<std::string> words;
    std::vector<int> style_positions;  // filled style slots, for the gold swap
    std::vector<int> style_word_ids;   // aligned lexicon indices at those positions
};

DrawnSentence draw_sentence(const ToyTaskSpec& spec,
                            const std::vector<std::vector<Slot>>& parsed,
                            int style, Rng& rng) {
    const auto& tmpl = parsed[rng.index(parsed.size())];
    bool has_opt = std::any_of(tmpl.begin(), tmpl.end(), [](const Slot& s) {
        return s.kind == SlotKind::OptStyle;
    });
    bool multi = has_opt && rng.bernoulli(spec.multi_attr_prob);
    const auto& lex = spec.style_lexicons[size_t(style)];

    DrawnSentence out;
    auto pick = [&](const std::vector<std::string>& v) {
        return v[rng.index(v.size())];
    };
    for (const auto& sl : tmpl) {
        switch (sl.kind) {
            case SlotKind::Literal: out.words.push_back(sl.literal); break;
            case SlotKind::Det: out.words.push_back(pick(spec.determiners)); break;
            case SlotKind::Noun: out.words.push_back(pick(spec.nouns)); break;
            case SlotKind::Verb: out.words.push_back(pick(spec.verbs)); break;
            case SlotKind::Mod: out.words.push_back(pick(spec.modifiers)); break;
            case SlotKind::Style: {
                int w = int(rng.index(lex.size()));
                out.style_positions.push_back(int(out.words.size()));
                out.style_word_ids.push_back(w);
                out.words.push_back(lex[size_t(w)]);
                break;
            }
            case SlotKind::OptStyle: {
                if (multi) {
                    int w = int(rng.index(lex.size()));
                    out.style_positions.push_back(int(out.words.size()));
                    out.style_word_ids.push_back(w);
                    out.words.push_back(lex[size_t(w)]);
                } else {
                    out.words.push_back(pick(spec.neutrals));
                }
                break;
            }
        }
    }
    return out;
}

}  // namespace

ToyCorpus generate_toy_corpus(const ToyTaskSpec& spec, int n_train, int n_dev,
                              int n_test, std::uint64_t seed) {
    validate_toy_spec(spec);
    if (n_train < 0 || n_dev < 0 || n_test < 0)
        throw ValidationError("negative split size");
    const int total = n_train + n_dev + n_test;

    ToyCorpus corpus;
    corpus.vocab = build_toy_vocab(spec);
    for (int s = 0; s < 2; ++s)
        corpus.styles.push_back({s, spec.style_names[size_t(s)]});

    std::vector<std::vector<Slot>> parsed;
    for (const auto& t : spec.templates) parsed.push_back(parse_template(t));

    // Per-style pools, unique across every split and both styles.
    std::unordered_set<std::string> seen;
    std::array<std::vector<StyledSentence>, 2> pool;
    std::array<std::vector<StyledSentence>, 2> pool_gold;
    for (int s = 0; s < 2; ++s) {
        Rng rng(derive_seed(seed, 0x7071, std::uint64_t(s)));
        long attempts = 0;
        const long max_attempts = 400L * std::max(total, 1);
        while (int(pool[size_t(s)].size()) < total) {
            if (++attempts > max_attempts)
                throw ValidationError(
                    "toy spec cannot produce enough unique sentences for the "
                    "requested split sizes");
            auto d = draw_sentence(spec, parsed, s, rng);
            std::string text = detokenize(d.words);
            if (!seen.insert(text).second) continue;

            StyledSentence sent{corpus.vocab.encode(d.words), corpus.styles[size_t(s)], text};

            auto gold_words = d.words;
            const auto& other = spec.style_lexicons[size_t(1 - s)];
            for (size_t i = 0; i < d.style_positions.size(); ++i)
                gold_words[size_t(d.style_positions[i])] =
                    other[size_t(d.style_word_ids[i])];
            StyledSentence gold{corpus.vocab.encode(gold_words),
                                corpus.styles[size_t(1 - s)], detokenize(gold_words)};

            pool[size_t(s)].push_back(std::move(sent));
            pool_gold[size_t(s)].push_back(std::move(gold));
        }
    }

    auto take = [&](int offset, int n, int split_tag) {
        ToySplit split;
        for (int i = 0; i < n; ++i)
            for (int s = 0; s < 2; ++s) {
                split.sentences.push_back(pool[size_t(s)][size_t(offset + i)]);
                split.gold.push_back(pool_gold[size_t(s)][size_t(offset + i)]);
            }
        // Deterministic shuffle so styles do not strictly alternate.
        std::vector<size_t> idx(split.sentences.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        Rng rng(derive_seed(seed, 0x5157, std::uint64_t(split_tag)));
        rng.shuffle(idx);
        ToySplit shuffled;
        for (size_t i : idx) {
            shuffled.sentences.push_back(std::move(split.sentences[i]));
            shuffled.gold.push_back(std::move(split.gold[i]));
        }
        return shuffled;
    };
    corpus.train = take(0, n_train, 0);
    corpus.dev = take(n_train, n_dev, 1);
    corpus.test = take(n_train + n_dev, n_test, 2);
    return corpus;
}

ParallelTransform parse_transform(const std::string& name) {
    if (name == "identity") return ParallelTransform::identity;
    if (name == "lexicon_swap") return ParallelTransform::lexicon_swap;
    if (name == "noisy_swap") return ParallelTransform::noisy_swap;
    throw ValidationError("unknown parallel transform: " + name);
}

std::string transform_name(ParallelTransform t) {
    switch (t) {
        case ParallelTransform::identity: return "identity";
        case ParallelTransform::lexicon_swap: return "lexicon_swap";
        case ParallelTransform::noisy_swap: return "noisy_swap";
    }
    return "?";
}

std::vector<ParallelPair> synthesize_parallel_corpus(
    const std::vector<StyledSentence>& corpus, const ToyTaskSpec& spec,
    const Vocab& vocab, ParallelTransform transform, double p_noise,
    std::uint64_t seed) {
    if (p_noise < 0.0 || p_noise > 1.0)
        throw ValidationError("noise probability outside [0,1]");
    Rng rng(derive_seed(seed, 0x9a7a));
    std::vector<ParallelPair> out;
    out.reserve(corpus.size());
    const std::string tag = transform_name(transform);
    for (const auto& src : corpus) {
        ParallelPair p;
        p.source = src;
        p.provenance = tag;
        if (transform == ParallelTransform::identity) {
            p.target = src;
            out.push_back(std::move(p));
            continue;
        }
        int tgt_style = 1 - src.style.id;
        const auto& tgt_lex = spec.style_lexicons[size_t(tgt_style)];
        auto words = tokenize(src.raw_text);
        for (auto& w : words) {
            int sty = 0, idx = 0;
            if (!style_word_index(spec, w, &sty, &idx)) continue;
            if (transform == ParallelTransform::noisy_swap && rng.bernoulli(p_noise))
                w = tgt_lex[rng.index(tgt_lex.size())];
            else
                w = tgt_lex[size_t(idx)];
        }
        p.target = {vocab.encode(words),
                    {tgt_style, spec.style_names[size_t(tgt_style)]},
                    detokenize(words)};
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace stylerl
