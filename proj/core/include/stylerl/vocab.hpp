#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace stylerl {

// Word-level vocabulary. Special tokens sit at the lowest ids, in a fixed
// order: <pad>, <unk>, <src>, <start>, <end>, then one target-style marker
// per style.
class Vocab {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kSrcStart = 2;
    static constexpr int kStart = 3;
    static constexpr int kEnd = 4;
    static constexpr int kFirstStyleMarker = 5;

    Vocab() = default;

    // Builds from tokenized sentences; every observed token enters the vocab.
    static Vocab build(const std::vector<std::vector<std::string>>& sentences,
                       const std::vector<std::string>& style_names);

    int n_specials() const { return kFirstStyleMarker + int(style_names_.size()); }
    int size() const { return int(id_to_token_.size()); }
    int n_styles() const { return int(style_names_.size()); }

    int style_marker(int style_id) const;
    const std::vector<std::string>& style_names() const { return style_names_; }

    // <pad>/<src>/<start>/<end>/style markers. <unk> is not a marker: it
    // stands in for a real word and is kept when stripping markers.
    bool is_marker(int id) const { return id != kUnk && id < n_specials(); }

    int id(const std::string& token) const;  // kUnk when absent
    const std::string& token(int id) const;

    std::vector<int> encode(const std::vector<std::string>& words) const;
    std::vector<std::string> decode(const std::vector<int>& ids) const;

    std::uint64_t content_hash() const;

    void save(const std::string& path) const;
    static Vocab load(const std::string& path);

private:
    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, int> token_to_id_;
    std::vector<std::string> style_names_;

    void push(const std::string& tok);
};

// Normalization: lowercase, punctuation split into its own token, whitespace
// collapsed to single spaces.
std::vector<std::string> tokenize(const std::string& text);
std::string detokenize(const std::vector<std::string>& tokens);
std::string normalize_text(const std::string& text);

}  // namespace stylerl
