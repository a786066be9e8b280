#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "stylerl/corpus.hpp"
#include "stylerl/vocab.hpp"

namespace stylerl {

// Two-style synthetic review corpus. Templates are token strings with slots:
//   {D} determiner   {N} noun      {V} linking verb   {M} intensity modifier
//   {S} style word (mandatory, exactly one per template)
//   {S?} optional style slot: filled with a second style word when the
//        sentence's multi-attribute coin fires, otherwise a neutral adjective
// Style lexicons are aligned: word i of one style maps to word i of the other.
struct ToyTaskSpec {
    std::vector<std::string> style_names;
    std::array<std::vector<std::string>, 2> style_lexicons;
    std::vector<std::string> determiners;
    std::vector<std::string> nouns;
    std::vector<std::string> verbs;
    std::vector<std::string> modifiers;
    std::vector<std::string> neutrals;
    std::vector<std::string> templates;
    double multi_attr_prob = 0.3;
    int min_len = 3;
    int max_len = 16;
};

ToyTaskSpec default_toy_spec();

// Throws ValidationError on an unsatisfiable or malformed spec.
void validate_toy_spec(const ToyTaskSpec& spec);

// True when the token belongs to either style lexicon; fills the style index
// and the aligned word index.
bool style_word_index(const ToyTaskSpec& spec, const std::string& token,
                      int* style, int* word);

struct ToySplit {
    std::vector<StyledSentence> sentences;
    std::vector<StyledSentence> gold;  // aligned style-swapped references
};

struct ToyCorpus {
    Vocab vocab;
    std::vector<StyleLabel> styles;
    ToySplit train;
    ToySplit dev;
    ToySplit test;
};

// Deterministic in (spec, counts, seed). Splits are disjoint (no repeated
// surface form anywhere) and hold exactly n sentences per style each.
ToyCorpus generate_toy_corpus(const ToyTaskSpec& spec, int n_train, int n_dev,
                              int n_test, std::uint64_t seed);

enum class ParallelTransform { identity, lexicon_swap, noisy_swap };

ParallelTransform parse_transform(const std::string& name);
std::string transform_name(ParallelTransform t);

// identity keeps the text and style (reconstruction pairs); the swap
// transforms flip every style-lexicon word to its aligned counterpart and
// flip the label. noisy_swap additionally replaces each swapped word, with
// probability p_noise, by a uniformly random word of the target lexicon.
std::vector<ParallelPair> synthesize_parallel_corpus(
    const std::vector<StyledSentence>& corpus, const ToyTaskSpec& spec,
    const Vocab& vocab, ParallelTransform transform, double p_noise,
    std::uint64_t seed);

}  // namespace stylerl
