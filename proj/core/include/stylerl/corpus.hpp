#pragma once

#include <string>
#include <vector>

#include "stylerl/vocab.hpp"

namespace stylerl {

struct StyleLabel {
    int id = 0;
    std::string name;
    bool operator==(const StyleLabel& o) const { return id == o.id && name == o.name; }
};

struct StyledSentence {
    std::vector<int> tokens;  // content tokens only, no markers
    StyleLabel style;
    std::string raw_text;  // normalized surface form
};

struct ParallelPair {
    StyledSentence source;
    StyledSentence target;
    std::string provenance;
};

struct LoadStats {
    int kept = 0;
    int skipped_empty = 0;
    int skipped_overlong = 0;
};

// Plain-text corpus: one sentence per line, one file per style.
std::vector<std::vector<std::string>> load_corpus_lines(const std::string& path,
                                                        int max_len,
                                                        LoadStats* stats = nullptr);

std::vector<StyledSentence> encode_sentences(
    const Vocab& vocab, const std::vector<std::vector<std::string>>& lines,
    const StyleLabel& style);

std::vector<StyledSentence> load_corpus(const std::string& path,
                                        const StyleLabel& style, const Vocab& vocab,
                                        int max_len, LoadStats* stats = nullptr);

void save_corpus_text(const std::string& path,
                      const std::vector<StyledSentence>& sentences);

// Records format: one JSON object per line with "text" and "style" fields.
void save_corpus_records(const std::string& path,
                         const std::vector<StyledSentence>& sentences);
std::vector<StyledSentence> load_corpus_records(const std::string& path,
                                                const Vocab& vocab,
                                                const std::vector<StyleLabel>& styles);

// Gold transfer pairs, one JSON object per line.
void save_parallel_records(const std::string& path,
                           const std::vector<ParallelPair>& pairs);
std::vector<ParallelPair> load_parallel_records(const std::string& path,
                                                const Vocab& vocab,
                                                const std::vector<StyleLabel>& styles);

}  // namespace stylerl
