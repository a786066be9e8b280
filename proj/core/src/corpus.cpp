#include "stylerl/corpus.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "stylerl/common.hpp"

namespace stylerl {

namespace {

const StyleLabel& style_by_name(const std::vector<StyleLabel>& styles,
                                const std::string& name) {
    for (const auto& s : styles)
        if (s.name == name) return s;
    throw ValidationError("unknown style label: " + name);
}

}  // namespace

std::vector<std::vector<std::string>> load_corpus_lines(const std::string& path,
                                                        int max_len,
                                                        LoadStats* stats) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open corpus file: " + path);
    std::vector<std::vector<std::string>> out;
    LoadStats local;
    std::string line;
    while (std::getline(in, line)) {
        auto toks = tokenize(line);
        if (toks.empty()) {
            ++local.skipped_empty;
            continue;
        }
        if (max_len > 0 && int(toks.size()) > max_len) {
            ++local.skipped_overlong;
            continue;
        }
        ++local.kept;
        out.push_back(std::move(toks));
    }
    if (stats) *stats = local;
    return out;
}

std::vector<StyledSentence> encode_sentences(
    const Vocab& vocab, const std::vector<std::vector<std::string>>& lines,
    const StyleLabel& style) {
    std::vector<StyledSentence> out;
    out.reserve(lines.size());
    for (const auto& toks : lines)
        out.push_back({vocab.encode(toks), style, detokenize(toks)});
    return out;
}

std::vector<StyledSentence> load_corpus(const std::string& path,
                                        const StyleLabel& style, const Vocab& vocab,
                                        int max_len, LoadStats* stats) {
    return encode_sentences(vocab, load_corpus_lines(path, max_len, stats), style);
}

void save_corpus_text(const std::string& path,
                      const std::vector<StyledSentence>& sentences) {
    std::string body;
    for (const auto& s : sentences) {
        body += s.raw_text;
        body.push_back('\n');
    }
    write_text_file(path, body);
}

void save_corpus_records(const std::string& path,
                         const std::vector<StyledSentence>& sentences) {
    std::string body;
    for (const auto& s : sentences) {
        nlohmann::ordered_json j;
        j["text"] = s.raw_text;
        j["style"] = s.style.name;
        body += j.dump();
        body.push_back('\n');
    }
    write_text_file(path, body);
}

std::vector<StyledSentence> load_corpus_records(const std::string& path,
                                                const Vocab& vocab,
                                                const std::vector<StyleLabel>& styles) {
    std::istringstream in(read_text_file(path));
    std::vector<StyledSentence> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        std::string text = normalize_text(j.at("text").get<std::string>());
        StyledSentence s;
        s.style = style_by_name(styles, j.at("style").get<std::string>());
        s.tokens = vocab.encode(tokenize(text));
        s.raw_text = text;
        out.push_back(std::move(s));
    }
    return out;
}

void save_parallel_records(const std::string& path,
                           const std::vector<ParallelPair>& pairs) {
    std::string body;
    for (const auto& p : pairs) {
        nlohmann::ordered_json j;
        j["source"] = p.source.raw_text;
        j["source_style"] = p.source.style.name;
        j["target"] = p.target.raw_text;
        j["target_style"] = p.target.style.name;
        j["provenance"] = p.provenance;
        body += j.dump();
        body.push_back('\n');
    }
    write_text_file(path, body);
}

std::vector<ParallelPair> load_parallel_records(const std::string& path,
                                                const Vocab& vocab,
                                                const std::vector<StyleLabel>& styles) {
    std::istringstream in(read_text_file(path));
    std::vector<ParallelPair> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        ParallelPair p;
        auto fill = [&](StyledSentence& s, const char* text_key, const char* style_key) {
            std::string text = normalize_text(j.at(text_key).get<std::string>());
            s.style = style_by_name(styles, j.at(style_key).get<std::string>());
            s.tokens = vocab.encode(tokenize(text));
            s.raw_text = text;
        };
        fill(p.source, "source", "source_style");
        fill(p.target, "target", "target_style");
        p.provenance = j.value("provenance", std::string{});
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace stylerl
