#include "stylerl/vocab.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "stylerl/common.hpp"

namespace stylerl {

void Vocab::push(const std::string& tok) {
    auto [it, inserted] = token_to_id_.emplace(tok, int(id_to_token_.size()));
    if (!inserted) throw std::logic_error("duplicate vocab token: " + tok);
    id_to_token_.push_back(tok);
}

Vocab Vocab::build(const std::vector<std::vector<std::string>>& sentences,
                   const std::vector<std::string>& style_names) {
    Vocab v;
    v.style_names_ = style_names;
    v.push("<pad>");
    v.push("<unk>");
    v.push("<src>");
    v.push("<start>");
    v.push("<end>");
    for (const auto& name : style_names) v.push("<" + name + ">");
    for (const auto& sent : sentences)
        for (const auto& w : sent)
            if (!v.token_to_id_.count(w)) v.push(w);
    return v;
}

int Vocab::style_marker(int style_id) const {
    if (style_id < 0 || style_id >= n_styles())
        throw std::out_of_range("style id out of range");
    return kFirstStyleMarker + style_id;
}

int Vocab::id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
    if (id < 0 || id >= size()) throw std::out_of_range("token id out of range");
    return id_to_token_[size_t(id)];
}

std::vector<int> Vocab::encode(const std::vector<std::string>& words) const {
    std::vector<int> out;
    out.reserve(words.size());
    for (const auto& w : words) out.push_back(id(w));
    return out;
}

std::vector<std::string> Vocab::decode(const std::vector<int>& ids) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (int i : ids) out.push_back(token(i));
    return out;
}

std::uint64_t Vocab::content_hash() const {
    std::uint64_t h = fnv1a64(std::string_view{});
    for (const auto& tok : id_to_token_) {
        h = fnv1a64(tok.data(), tok.size(), h);
        h = fnv1a64("\n", 1, h);
    }
    return h;
}

void Vocab::save(const std::string& path) const {
    nlohmann::ordered_json j;
    j["styles"] = style_names_;
    j["tokens"] = id_to_token_;
    write_text_file(path, j.dump(2) + "\n");
}

Vocab Vocab::load(const std::string& path) {
    auto j = nlohmann::json::parse(read_text_file(path));
    Vocab v;
    v.style_names_ = j.at("styles").get<std::vector<std::string>>();
    for (const auto& tok : j.at("tokens")) v.push(tok.get<std::string>());
    int expect = Vocab::kFirstStyleMarker + int(v.style_names_.size());
    if (v.size() < expect) throw ValidationError("vocab file truncated: " + path);
    return v;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    };
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            flush();
        } else if (std::isalnum(c) || c == '\'' || c == '<' || c == '>' ||
                   c == '_' || c == '-') {
            cur.push_back(char(std::tolower(c)));
        } else {
            flush();
            out.push_back(std::string(1, char(c)));
        }
    }
    flush();
    return out;
}

std::string detokenize(const std::vector<std::string>& tokens) {
    std::string out;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

std::string normalize_text(const std::string& text) {
    return detokenize(tokenize(text));
}

}  // namespace stylerl
