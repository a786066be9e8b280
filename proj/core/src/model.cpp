#include "stylerl/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "stylerl/common.hpp"

namespace stylerl {

SequenceModelConfig decoder_config(int vocab_size, int max_positions,
                                   int n_layers, int n_heads, int d_model) {
    SequenceModelConfig c;
    c.vocab_size = vocab_size;
    c.max_positions = max_positions;
    c.n_layers = n_layers;
    c.n_heads = n_heads;
    c.d_model = d_model;
    c.causal = true;
    c.readout = false;
    c.n_styles = 0;
    return c;
}

SequenceModelConfig classifier_config(int vocab_size, int max_positions,
                                      int n_styles, int n_layers, int n_heads,
                                      int d_model) {
    SequenceModelConfig c;
    c.vocab_size = vocab_size;
    c.max_positions = max_positions;
    c.n_layers = n_layers;
    c.n_heads = n_heads;
    c.d_model = d_model;
    c.causal = false;
    c.readout = true;
    c.n_styles = n_styles;
    return c;
}

int ParamStore::add(const std::string& name, int rows, int cols) {
    if (by_name_.count(name)) throw std::logic_error("duplicate segment: " + name);
    Segment s{name, data_.size(), rows, cols};
    by_name_[name] = int(segs_.size());
    segs_.push_back(s);
    data_.resize(data_.size() + size_t(rows) * size_t(cols), 0.0);
    return int(segs_.size()) - 1;
}

int ParamStore::seg_index(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw std::logic_error("unknown segment: " + name);
    return it->second;
}

Mat ParamStore::get(int seg) const {
    const Segment& s = segs_[size_t(seg)];
    Mat m(s.rows, s.cols);
    std::copy(data_.begin() + long(s.offset),
              data_.begin() + long(s.offset) + long(m.a.size()), m.a.begin());
    return m;
}

void ParamStore::set(int seg, const Mat& m) {
    const Segment& s = segs_[size_t(seg)];
    if (m.rows != s.rows || m.cols != s.cols)
        throw std::logic_error("segment shape mismatch: " + s.name);
    std::copy(m.a.begin(), m.a.end(), data_.begin() + long(s.offset));
}

std::uint64_t ParamStore::hash() const {
    return fnv1a64(data_.data(), data_.size() * sizeof(double));
}

namespace {

void validate_config(const SequenceModelConfig& c) {
    if (c.vocab_size <= 0) throw ValidationError("model vocab size must be positive");
    if (c.max_positions <= 0) throw ValidationError("model needs at least one position");
    if (c.n_layers <= 0 || c.n_heads <= 0 || c.d_model <= 0)
        throw ValidationError("model dimensions must be positive");
    if (c.d_model % c.n_heads != 0)
        throw ValidationError("model width must be divisible by the head count");
    if (c.n_styles > 0) {
        if (!c.readout || c.causal)
            throw ValidationError("style classifiers need a readout row and "
                                  "bidirectional attention");
    } else if (c.readout || !c.causal) {
        throw ValidationError("decoders are causal and have no readout row");
    }
}

nlohmann::ordered_json config_to_json(const SequenceModelConfig& c) {
    nlohmann::ordered_json j;
    j["vocab_size"] = c.vocab_size;
    j["max_positions"] = c.max_positions;
    j["n_layers"] = c.n_layers;
    j["n_heads"] = c.n_heads;
    j["d_model"] = c.d_model;
    j["mlp_ratio"] = c.mlp_ratio;
    j["n_styles"] = c.n_styles;
    j["causal"] = c.causal;
    j["readout"] = c.readout;
    j["ln_eps"] = c.ln_eps;
    return j;
}

SequenceModelConfig config_from_json(const nlohmann::json& j) {
    SequenceModelConfig c;
    c.vocab_size = j.at("vocab_size").get<int>();
    c.max_positions = j.at("max_positions").get<int>();
    c.n_layers = j.at("n_layers").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.d_model = j.at("d_model").get<int>();
    c.mlp_ratio = j.at("mlp_ratio").get<int>();
    c.n_styles = j.at("n_styles").get<int>();
    c.causal = j.at("causal").get<bool>();
    c.readout = j.at("readout").get<bool>();
    c.ln_eps = j.at("ln_eps").get<double>();
    return c;
}

std::vector<int> iota_ids(int n) {
    std::vector<int> v(size_t(n), 0);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

}  // namespace

SequenceModel::SequenceModel(const SequenceModelConfig& cfg) : cfg_(cfg) {
    validate_config(cfg_);
    register_segments();
}

SequenceModel::SequenceModel(const SequenceModelConfig& cfg, std::uint64_t seed)
    : SequenceModel(cfg) {
    init_params(seed);
}

void SequenceModel::register_segments() {
    const int C = cfg_.d_model;
    const int H = cfg_.mlp_ratio * C;
    tok_emb_ = store_.add("tok_emb", cfg_.vocab_size, C);
    pos_emb_ = store_.add("pos_emb", cfg_.max_positions, C);
    if (cfg_.readout) readout_ = store_.add("readout", 1, C);
    for (int l = 0; l < cfg_.n_layers; ++l) {
        std::string p = "l" + std::to_string(l) + ".";
        LayerIdx ix;
        ix.ln1g = store_.add(p + "ln1.g", 1, C);
        ix.ln1b = store_.add(p + "ln1.b", 1, C);
        ix.qkvw = store_.add(p + "qkv.w", C, 3 * C);
        ix.qkvb = store_.add(p + "qkv.b", 1, 3 * C);
        ix.projw = store_.add(p + "proj.w", C, C);
        ix.projb = store_.add(p + "proj.b", 1, C);
        ix.ln2g = store_.add(p + "ln2.g", 1, C);
        ix.ln2b = store_.add(p + "ln2.b", 1, C);
        ix.w1 = store_.add(p + "mlp.w1", C, H);
        ix.b1 = store_.add(p + "mlp.b1", 1, H);
        ix.w2 = store_.add(p + "mlp.w2", H, C);
        ix.b2 = store_.add(p + "mlp.b2", 1, C);
        layers_.push_back(ix);
    }
    lnfg_ = store_.add("lnf.g", 1, C);
    lnfb_ = store_.add("lnf.b", 1, C);
    if (cfg_.n_styles > 0) {
        clsw_ = store_.add("cls.w", C, cfg_.n_styles);
        clsb_ = store_.add("cls.b", 1, cfg_.n_styles);
    } else {
        headw_ = store_.add("head.w", C, cfg_.vocab_size);
    }
}

void SequenceModel::init_params(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x1417));
    auto& d = store_.data();
    for (int i = 0; i < store_.n_segments(); ++i) {
        const auto& s = store_.seg(i);
        // Layernorm gains start at one, biases at zero, everything else at
        // small gaussian noise.
        std::string last = s.name.substr(s.name.find_last_of('.') + 1);
        double* p = d.data() + s.offset;
        size_t n = size_t(s.rows) * size_t(s.cols);
        if (last == "g") {
            std::fill(p, p + n, 1.0);
        } else if (!last.empty() && last[0] == 'b') {
            std::fill(p, p + n, 0.0);
        } else {
            for (size_t k = 0; k < n; ++k) p[k] = rng.normal(0.0, 0.02);
        }
    }
}

void SequenceModel::check_ids(const std::vector<int>& ids) const {
    for (int id : ids)
        if (id < 0 || id >= cfg_.vocab_size)
            throw ValidationError("token id " + std::to_string(id) +
                                  " outside vocab of size " +
                                  std::to_string(cfg_.vocab_size));
}

SequenceModel::Binding SequenceModel::bind(Tape& tape) const {
    Binding b;
    b.params.reserve(size_t(store_.n_segments()));
    for (int i = 0; i < store_.n_segments(); ++i) b.params.push_back(tape.leaf(store_.get(i)));
    return b;
}

namespace {

// Shared trunk builder; also used for plain inference via a throwaway tape.
Tape::Node* trunk_node(Tape& t, const std::vector<Tape::Node*>& P,
                       const SequenceModelConfig& cfg, Tape::Node* x,
                       const std::vector<int>& layer_segs, int lnfg, int lnfb,
                       std::vector<Mat>* attn) {
    const int C = cfg.d_model;
    const int d = C / cfg.n_heads;
    const double inv_sqrt_d = 1.0 / std::sqrt(double(d));
    int li = 0;
    for (int l = 0; l < cfg.n_layers; ++l) {
        auto seg = [&](int k) { return P[size_t(layer_segs[size_t(li + k)])]; };
        Tape::Node* ln1 = t.add_rowvec(t.mul_rowvec(t.layernorm(x, cfg.ln_eps), seg(0)), seg(1));
        Tape::Node* qkv = t.add_rowvec(t.matmul(ln1, seg(2)), seg(3));
        std::vector<Tape::Node*> heads;
        for (int h = 0; h < cfg.n_heads; ++h) {
            Tape::Node* q = t.slice_cols(qkv, h * d, (h + 1) * d);
            Tape::Node* k = t.slice_cols(qkv, C + h * d, C + (h + 1) * d);
            Tape::Node* v = t.slice_cols(qkv, 2 * C + h * d, 2 * C + (h + 1) * d);
            Tape::Node* scores = t.scale(t.matmul_nt(q, k), inv_sqrt_d);
            Tape::Node* probs = t.softmax_rows(scores, cfg.causal);
            if (attn) attn->push_back(probs->val);
            heads.push_back(t.matmul(probs, v));
        }
        Tape::Node* ctx = cfg.n_heads == 1 ? heads[0] : t.concat_cols(heads);
        Tape::Node* atno = t.add_rowvec(t.matmul(ctx, seg(4)), seg(5));
        x = t.add(x, atno);
        Tape::Node* ln2 = t.add_rowvec(t.mul_rowvec(t.layernorm(x, cfg.ln_eps), seg(6)), seg(7));
        Tape::Node* m = t.add_rowvec(t.matmul(ln2, seg(8)), seg(9));
        Tape::Node* o = t.add_rowvec(t.matmul(t.gelu(m), seg(10)), seg(11));
        x = t.add(x, o);
        li += 12;
    }
    return t.add_rowvec(t.mul_rowvec(t.layernorm(x, cfg.ln_eps), P[size_t(lnfg)]),
                        P[size_t(lnfb)]);
}

}  // namespace

Tape::Node* SequenceModel::decoder_nll(Tape& tape, const Binding& b,
                                       const std::vector<int>& ids,
                                       const std::vector<int>& targets,
                                       const std::vector<double>& weights) const {
    if (cfg_.n_styles > 0) throw std::logic_error("decoder_nll on a classifier");
    if (ids.empty()) throw ValidationError("empty sequence");
    if (int(ids.size()) > cfg_.max_positions)
        throw ValidationError("sequence of length " + std::to_string(ids.size()) +
                              " exceeds the model's " +
                              std::to_string(cfg_.max_positions) + " positions");
    check_ids(ids);
    std::vector<int> layer_segs = flat_layer_segs();
    Tape::Node* tok = tape.rows_gather(b.params[size_t(tok_emb_)], ids);
    Tape::Node* pos = tape.rows_gather(b.params[size_t(pos_emb_)], iota_ids(int(ids.size())));
    Tape::Node* x = tape.add(tok, pos);
    Tape::Node* h = trunk_node(tape, b.params, cfg_, x, layer_segs, lnfg_, lnfb_, nullptr);
    Tape::Node* logits = tape.matmul(h, b.params[size_t(headw_)]);
    return tape.weighted_nll(logits, targets, weights);
}

Tape::Node* SequenceModel::classifier_nll(Tape& tape, const Binding& b,
                                          const std::vector<int>& tokens,
                                          int label, double weight) const {
    if (cfg_.n_styles == 0) throw std::logic_error("classifier_nll on a decoder");
    if (label < 0 || label >= cfg_.n_styles)
        throw ValidationError("style label out of range");
    if (int(tokens.size()) + 1 > cfg_.max_positions)
        throw ValidationError("sequence of length " + std::to_string(tokens.size()) +
                              " exceeds the classifier's " +
                              std::to_string(cfg_.max_positions - 1) + " token positions");
    check_ids(tokens);
    std::vector<int> layer_segs = flat_layer_segs();
    Tape::Node* x;
    Tape::Node* pos = tape.rows_gather(b.params[size_t(pos_emb_)],
                                       iota_ids(int(tokens.size()) + 1));
    if (tokens.empty()) {
        x = tape.add(b.params[size_t(readout_)], pos);
    } else {
        Tape::Node* tok = tape.rows_gather(b.params[size_t(tok_emb_)], tokens);
        x = tape.add(tape.concat_rows({b.params[size_t(readout_)], tok}), pos);
    }
    Tape::Node* h = trunk_node(tape, b.params, cfg_, x, layer_segs, lnfg_, lnfb_, nullptr);
    Tape::Node* h0 = tape.slice_rows(h, 0, 1);
    Tape::Node* logits = tape.add_rowvec(tape.matmul(h0, b.params[size_t(clsw_)]),
                                         b.params[size_t(clsb_)]);
    return tape.weighted_nll(logits, {label}, {weight});
}

void SequenceModel::accumulate_grad(const Binding& b, std::vector<double>& grad) const {
    grad.resize(store_.size(), 0.0);
    for (int i = 0; i < store_.n_segments(); ++i) {
        const auto& s = store_.seg(i);
        const Mat& g = b.params[size_t(i)]->grad;
        for (size_t k = 0; k < g.a.size(); ++k) grad[s.offset + k] += g.a[k];
    }
}

double SequenceModel::decoder_loss_grad(const std::vector<int>& ids,
                                        const std::vector<int>& targets,
                                        const std::vector<double>& weights,
                                        std::vector<double>& grad) const {
    Tape tape;
    Binding b = bind(tape);
    Tape::Node* loss = decoder_nll(tape, b, ids, targets, weights);
    tape.backward(loss);
    accumulate_grad(b, grad);
    return loss->val.at(0, 0);
}

double SequenceModel::classifier_loss_grad(const std::vector<int>& tokens,
                                           int label, double weight,
                                           std::vector<double>& grad) const {
    Tape tape;
    Binding b = bind(tape);
    Tape::Node* loss = classifier_nll(tape, b, tokens, label, weight);
    tape.backward(loss);
    accumulate_grad(b, grad);
    return loss->val.at(0, 0);
}

Mat SequenceModel::embed_decoder(const std::vector<int>& ids) const {
    Mat tok = store_.get(tok_emb_);
    Mat pos = store_.get(pos_emb_);
    Mat x(int(ids.size()), cfg_.d_model);
    for (size_t r = 0; r < ids.size(); ++r)
        for (int c = 0; c < cfg_.d_model; ++c)
            x.at(int(r), c) = tok.at(ids[r], c) + pos.at(int(r), c);
    return x;
}

Mat SequenceModel::embed_classifier(const std::vector<int>& tokens) const {
    Mat tok = store_.get(tok_emb_);
    Mat pos = store_.get(pos_emb_);
    Mat ro = store_.get(readout_);
    Mat x(int(tokens.size()) + 1, cfg_.d_model);
    for (int c = 0; c < cfg_.d_model; ++c) x.at(0, c) = ro.at(0, c) + pos.at(0, c);
    for (size_t r = 0; r < tokens.size(); ++r)
        for (int c = 0; c < cfg_.d_model; ++c)
            x.at(int(r) + 1, c) = tok.at(tokens[r], c) + pos.at(int(r) + 1, c);
    return x;
}

Mat SequenceModel::forward_hidden(const Mat& x0, std::vector<Mat>* attn) const {
    Tape tape;
    Binding b = bind(tape);
    Tape::Node* h = trunk_node(tape, b.params, cfg_, tape.leaf(x0),
                               flat_layer_segs(), lnfg_, lnfb_, attn);
    return h->val;
}

Mat SequenceModel::forward_logits(const std::vector<int>& ids) const {
    if (cfg_.n_styles > 0) throw std::logic_error("forward_logits on a classifier");
    if (ids.empty()) throw ValidationError("empty sequence");
    if (int(ids.size()) > cfg_.max_positions)
        throw ValidationError("sequence of length " + std::to_string(ids.size()) +
                              " exceeds the model's " +
                              std::to_string(cfg_.max_positions) + " positions");
    check_ids(ids);
    Mat h = forward_hidden(embed_decoder(ids), nullptr);
    Mat W = store_.get(headw_);
    Mat logits(h.rows, W.cols);
    matmul(h, W, logits);
    return logits;
}

double SequenceModel::sequence_log_prob(const std::vector<int>& ids, int from) const {
    if (from < 1 || from > int(ids.size()))
        throw ValidationError("log-prob start index out of range");
    Mat logits = forward_logits(ids);
    double total = 0.0;
    for (int t = from; t < int(ids.size()); ++t)
        total += row_log_softmax_at(logits, t - 1, ids[size_t(t)]);
    return total;
}

ClassifyResult SequenceModel::classify(const std::vector<int>& tokens) const {
    if (cfg_.n_styles == 0) throw std::logic_error("classify on a decoder");
    if (int(tokens.size()) + 1 > cfg_.max_positions)
        throw ValidationError("sequence of length " + std::to_string(tokens.size()) +
                              " exceeds the classifier's " +
                              std::to_string(cfg_.max_positions - 1) + " token positions");
    check_ids(tokens);
    ClassifyResult res;
    res.n_heads = cfg_.n_heads;
    Mat h = forward_hidden(embed_classifier(tokens), &res.attention);
    Mat W = store_.get(clsw_);
    Mat bcls = store_.get(clsb_);
    std::vector<double> logits(size_t(cfg_.n_styles));
    for (int j = 0; j < cfg_.n_styles; ++j) {
        double acc = 0.0;
        for (int k = 0; k < cfg_.d_model; ++k) acc += h.at(0, k) * W.at(k, j);
        logits[size_t(j)] = acc + bcls.at(0, j);
    }
    double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    res.probs.resize(logits.size());
    for (size_t j = 0; j < logits.size(); ++j) {
        res.probs[j] = std::exp(logits[j] - mx);
        sum += res.probs[j];
    }
    for (auto& p : res.probs) p /= sum;
    return res;
}

std::vector<double> SequenceModel::stepwise_log_probs(const std::vector<int>& ids) const {
    if (ids.size() < 2) throw ValidationError("stepwise log-probs need at least two tokens");
    Mat logits = forward_logits(ids);
    std::vector<double> out(ids.size() - 1);
    for (int t = 1; t < int(ids.size()); ++t)
        out[size_t(t) - 1] = row_log_softmax_at(logits, t - 1, ids[size_t(t)]);
    return out;
}

double SequenceModel::apply_sgd(const std::vector<double>& grad, double lr,
                                double clip) {
    if (frozen_)
        throw ValidationError("parameter update on a frozen model");
    if (grad.size() != store_.size())
        throw std::logic_error("gradient size mismatch");
    double norm = l2_norm(grad);
    double scale = (clip > 0.0 && norm > clip) ? clip / norm : 1.0;
    auto& d = store_.data();
    for (size_t i = 0; i < d.size(); ++i) d[i] -= lr * scale * grad[i];
    return norm;
}

double row_log_softmax_at(const Mat& logits, int row, int id) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < logits.cols; ++c) mx = std::max(mx, logits.at(row, c));
    double sum = 0.0;
    for (int c = 0; c < logits.cols; ++c) sum += std::exp(logits.at(row, c) - mx);
    return logits.at(row, id) - mx - std::log(sum);
}

std::vector<int> SequenceModel::flat_layer_segs() const {
    std::vector<int> v;
    v.reserve(layers_.size() * 12);
    for (const auto& ix : layers_) {
        v.push_back(ix.ln1g);
        v.push_back(ix.ln1b);
        v.push_back(ix.qkvw);
        v.push_back(ix.qkvb);
        v.push_back(ix.projw);
        v.push_back(ix.projb);
        v.push_back(ix.ln2g);
        v.push_back(ix.ln2b);
        v.push_back(ix.w1);
        v.push_back(ix.b1);
        v.push_back(ix.w2);
        v.push_back(ix.b2);
    }
    return v;
}

void SequenceModel::save_checkpoint(const std::string& path) const {
    nlohmann::ordered_json header;
    header["config"] = config_to_json(cfg_);
    nlohmann::ordered_json segs = nlohmann::ordered_json::array();
    for (int i = 0; i < store_.n_segments(); ++i) {
        const auto& s = store_.seg(i);
        segs.push_back({s.name, s.rows, s.cols});
    }
    header["segments"] = segs;
    header["n_params"] = store_.size();
    std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write("STYLERL1", 8);
    std::uint64_t hlen = hs.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(hs.data(), std::streamsize(hs.size()));
    out.write(reinterpret_cast<const char*>(store_.data().data()),
              std::streamsize(store_.size() * sizeof(double)));
    if (!out) throw std::runtime_error("short write on checkpoint: " + path);
}

void write_checkpoint_sidecar(const std::string& path, const SequenceModel& m,
                              std::uint64_t vocab_hash, long step,
                              std::uint64_t seed) {
    nlohmann::ordered_json j;
    j["config"] = config_to_json(m.config());
    j["param_hash"] = hash_hex(m.param_hash());
    j["vocab_hash"] = hash_hex(vocab_hash);
    j["step"] = step;
    j["seed"] = seed;
    write_text_file(path + ".json", j.dump(2) + "\n");
}

SequenceModel SequenceModel::load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, "STYLERL1", 8) != 0)
        throw ValidationError("not a model checkpoint: " + path);
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    if (!in || hlen == 0 || hlen > (1u << 20))
        throw ValidationError("corrupt checkpoint header: " + path);
    std::string hs(hlen, '\0');
    in.read(hs.data(), std::streamsize(hlen));
    if (!in) throw ValidationError("corrupt checkpoint header: " + path);
    auto header = nlohmann::json::parse(hs, nullptr, false);
    if (header.is_discarded())
        throw ValidationError("corrupt checkpoint header: " + path);

    SequenceModel m(config_from_json(header.at("config")));
    const auto& segs = header.at("segments");
    if (int(segs.size()) != m.store_.n_segments())
        throw ValidationError("checkpoint segment table mismatch: " + path);
    for (int i = 0; i < m.store_.n_segments(); ++i) {
        const auto& s = m.store_.seg(i);
        if (segs[size_t(i)][0].get<std::string>() != s.name ||
            segs[size_t(i)][1].get<int>() != s.rows ||
            segs[size_t(i)][2].get<int>() != s.cols)
            throw ValidationError("checkpoint segment table mismatch: " + path);
    }
    if (header.at("n_params").get<size_t>() != m.store_.size())
        throw ValidationError("checkpoint parameter count mismatch: " + path);
    in.read(reinterpret_cast<char*>(m.store_.data().data()),
            std::streamsize(m.store_.size() * sizeof(double)));
    if (!in || size_t(in.gcount()) != m.store_.size() * sizeof(double))
        throw ValidationError("checkpoint truncated: " + path);
    return m;
}

DecoderSession::DecoderSession(const SequenceModel& m) : cfg_(m.config()) {
    if (cfg_.n_styles > 0) throw std::logic_error("decoder session on a classifier");
    const auto& st = m.params();
    auto grab = [&](const std::string& name) { return st.get(st.seg_index(name)); };
    tok_emb_ = grab("tok_emb");
    pos_emb_ = grab("pos_emb");
    lnfg_ = grab("lnf.g");
    lnfb_ = grab("lnf.b");
    headw_ = grab("head.w");
    for (int l = 0; l < cfg_.n_layers; ++l) {
        std::string p = "l" + std::to_string(l) + ".";
        LayerW w{grab(p + "ln1.g"), grab(p + "ln1.b"), grab(p + "qkv.w"),
                 grab(p + "qkv.b"), grab(p + "proj.w"), grab(p + "proj.b"),
                 grab(p + "ln2.g"), grab(p + "ln2.b"), grab(p + "mlp.w1"),
                 grab(p + "mlp.b1"), grab(p + "mlp.w2"), grab(p + "mlp.b2"),
                 Mat(cfg_.max_positions, cfg_.d_model),
                 Mat(cfg_.max_positions, cfg_.d_model)};
        layers_.push_back(std::move(w));
    }
    logits_.resize(size_t(cfg_.vocab_size), 0.0);
}

namespace {

// Row helpers mirroring the tape kernels exactly: the same accumulation
// order gives bit-identical results to the batched forward pass.
void row_affine(const std::vector<double>& x, const Mat& W, const Mat& b,
                std::vector<double>& out) {
    out.assign(size_t(W.cols), 0.0);
    for (int k = 0; k < W.rows; ++k) {
        double xv = x[size_t(k)];
        const double* wrow = W.a.data() + size_t(k) * size_t(W.cols);
        for (int j = 0; j < W.cols; ++j) out[size_t(j)] += xv * wrow[j];
    }
    for (int j = 0; j < W.cols; ++j) out[size_t(j)] += b.at(0, j);
}

void row_layernorm(const std::vector<double>& x, const Mat& g, const Mat& b,
                   double eps, std::vector<double>& out) {
    const int C = int(x.size());
    double mu = 0.0;
    for (int c = 0; c < C; ++c) mu += x[size_t(c)];
    mu /= C;
    double var = 0.0;
    for (int c = 0; c < C; ++c) {
        double d = x[size_t(c)] - mu;
        var += d * d;
    }
    var /= C;
    double is = 1.0 / std::sqrt(var + eps);
    out.resize(size_t(C));
    for (int c = 0; c < C; ++c)
        out[size_t(c)] = (x[size_t(c)] - mu) * is * g.at(0, c) + b.at(0, c);
}

}  // namespace

void DecoderSession::push(int token) {
    if (token < 0 || token >= cfg_.vocab_size)
        throw ValidationError("token id " + std::to_string(token) +
                              " outside vocab of size " +
                              std::to_string(cfg_.vocab_size));
    if (t_ >= cfg_.max_positions)
        throw ValidationError("decoder session exceeded " +
                              std::to_string(cfg_.max_positions) + " positions");
    const int C = cfg_.d_model;
    const int d = C / cfg_.n_heads;
    const double inv_sqrt_d = 1.0 / std::sqrt(double(d));

    std::vector<double> x(size_t(C), 0.0);
    for (int c = 0; c < C; ++c) x[size_t(c)] = tok_emb_.at(token, c) + pos_emb_.at(t_, c);

    std::vector<double> ln, qkv, atno, m1, m2;
    std::vector<double> ctx(size_t(C), 0.0);
    for (auto& L : layers_) {
        row_layernorm(x, L.ln1g, L.ln1b, cfg_.ln_eps, ln);
        row_affine(ln, L.qkvw, L.qkvb, qkv);
        for (int c = 0; c < C; ++c) {
            L.kcache.at(t_, c) = qkv[size_t(C + c)];
            L.vcache.at(t_, c) = qkv[size_t(2 * C + c)];
        }
        std::fill(ctx.begin(), ctx.end(), 0.0);
        std::vector<double> scores(size_t(t_) + 1);
        for (int h = 0; h < cfg_.n_heads; ++h) {
            const int off = h * d;
            for (int j = 0; j <= t_; ++j) {
                double acc = 0.0;
                for (int e = 0; e < d; ++e)
                    acc += qkv[size_t(off + e)] * L.kcache.at(j, off + e);
                scores[size_t(j)] = acc * inv_sqrt_d;
            }
            double mx = *std::max_element(scores.begin(), scores.end());
            double sum = 0.0;
            for (int j = 0; j <= t_; ++j) {
                scores[size_t(j)] = std::exp(scores[size_t(j)] - mx);
                sum += scores[size_t(j)];
            }
            for (int j = 0; j <= t_; ++j) {
                double p = scores[size_t(j)] / sum;
                for (int e = 0; e < d; ++e)
                    ctx[size_t(off + e)] += p * L.vcache.at(j, off + e);
            }
        }
        row_affine(ctx, L.projw, L.projb, atno);
        for (int c = 0; c < C; ++c) x[size_t(c)] += atno[size_t(c)];
        row_layernorm(x, L.ln2g, L.ln2b, cfg_.ln_eps, ln);
        row_affine(ln, L.w1, L.b1, m1);
        for (auto& v : m1) v = 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2));
        row_affine(m1, L.w2, L.b2, m2);
        for (int c = 0; c < C; ++c) x[size_t(c)] += m2[size_t(c)];
    }
    row_layernorm(x, lnfg_, lnfb_, cfg_.ln_eps, ln);
    logits_.assign(size_t(cfg_.vocab_size), 0.0);
    for (int k = 0; k < C; ++k) {
        double xv = ln[size_t(k)];
        const double* wrow = headw_.a.data() + size_t(k) * size_t(headw_.cols);
        for (int j = 0; j < headw_.cols; ++j) logits_[size_t(j)] += xv * wrow[j];
    }
    ++t_;
}

void DecoderSession::push_all(const std::vector<int>& tokens) {
    for (int t : tokens) push(t);
}

}  // namespace stylerl
