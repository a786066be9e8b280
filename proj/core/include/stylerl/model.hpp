#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "stylerl/graph.hpp"
#include "stylerl/mat.hpp"

namespace stylerl {

struct SequenceModelConfig {
    int vocab_size = 0;
    int max_positions = 64;  // maximum rows, including the classifier readout
    int n_layers = 2;
    int n_heads = 2;
    int d_model = 64;
    int mlp_ratio = 4;
    int n_styles = 0;    // classifier output arity; 0 for decoders
    bool causal = true;  // decoders attend left-to-right, classifiers both ways
    bool readout = false;  // prepend the learned classification row
    double ln_eps = 1e-5;
};

SequenceModelConfig decoder_config(int vocab_size, int max_positions,
                                   int n_layers = 2, int n_heads = 2,
                                   int d_model = 64);
SequenceModelConfig classifier_config(int vocab_size, int max_positions,
                                      int n_styles, int n_layers = 2,
                                      int n_heads = 4, int d_model = 64);

class ParamStore {
public:
    struct Segment {
        std::string name;
        size_t offset = 0;
        int rows = 0;
        int cols = 0;
    };

    int add(const std::string& name, int rows, int cols);
    int n_segments() const { return int(segs_.size()); }
    const Segment& seg(int i) const { return segs_[size_t(i)]; }
    int seg_index(const std::string& name) const;

    size_t size() const { return data_.size(); }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    Mat get(int seg) const;
    void set(int seg, const Mat& m);

    std::uint64_t hash() const;

private:
    std::vector<Segment> segs_;
    std::unordered_map<std::string, int> by_name_;
    std::vector<double> data_;
};

struct ClassifyResult {
    std::vector<double> probs;  // over styles
    // Attention maps, layer-major (index l*n_heads+h). Row r holds the
    // distribution of attention from position r; position 0 is the readout.
    std::vector<Mat> attention;
    int n_heads = 0;
};

// Pre-LN transformer over learned token and position embeddings. Decoders are
// causal with an untied output head; classifiers are bidirectional with a
// learned readout row prepended at position 0.
class SequenceModel {
public:
    SequenceModel(const SequenceModelConfig& cfg, std::uint64_t seed);

    const SequenceModelConfig& config() const { return cfg_; }
    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }
    std::uint64_t param_hash() const { return store_.hash(); }

    // Frozen models reject parameter mutation through apply_sgd. Reward models
    // are frozen before RL so a stray update cannot corrupt the reward signal.
    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }

    // Next-token logits at every position; row t conditions on ids[0..t].
    Mat forward_logits(const std::vector<int>& ids) const;
    // Sum of log P(ids[t] | ids[0..t-1]) for t in [from, ids.size()).
    double sequence_log_prob(const std::vector<int>& ids, int from) const;
    // Entry t-1 holds log P(ids[t] | ids[0..t-1]), for t in [1, ids.size()).
    std::vector<double> stepwise_log_probs(const std::vector<int>& ids) const;

    ClassifyResult classify(const std::vector<int>& tokens) const;

    // Tape-based training. bind() creates one parameter leaf per segment;
    // several examples may share a binding on one tape, and their scalar
    // losses can be chained with Tape::add before a single backward pass.
    struct Binding {
        std::vector<Tape::Node*> params;
    };
    Binding bind(Tape& tape) const;
    Tape::Node* decoder_nll(Tape& tape, const Binding& b,
                            const std::vector<int>& ids,
                            const std::vector<int>& targets,
                            const std::vector<double>& weights) const;
    Tape::Node* classifier_nll(Tape& tape, const Binding& b,
                               const std::vector<int>& tokens, int label,
                               double weight) const;
    void accumulate_grad(const Binding& b, std::vector<double>& grad) const;

    // Convenience single-example wrappers around the tape API.
    double decoder_loss_grad(const std::vector<int>& ids,
                             const std::vector<int>& targets,
                             const std::vector<double>& weights,
                             std::vector<double>& grad) const;
    double classifier_loss_grad(const std::vector<int>& tokens, int label,
                                double weight, std::vector<double>& grad) const;

    // Clips the gradient to the given global norm (clip <= 0 disables), then
    // takes one SGD step. Returns the pre-clip norm.
    double apply_sgd(const std::vector<double>& grad, double lr, double clip);

    void save_checkpoint(const std::string& path) const;
    static SequenceModel load_checkpoint(const std::string& path);

private:
    friend class DecoderSession;

    SequenceModelConfig cfg_;
    ParamStore store_;
    bool frozen_ = false;

    struct LayerIdx {
        int ln1g, ln1b, qkvw, qkvb, projw, projb;
        int ln2g, ln2b, w1, b1, w2, b2;
    };
    int tok_emb_ = -1, pos_emb_ = -1, readout_ = -1;
    int lnfg_ = -1, lnfb_ = -1, headw_ = -1, clsw_ = -1, clsb_ = -1;
    std::vector<LayerIdx> layers_;

    explicit SequenceModel(const SequenceModelConfig& cfg);  // uninitialized
    void register_segments();
    void init_params(std::uint64_t seed);
    void check_ids(const std::vector<int>& ids) const;
    std::vector<int> flat_layer_segs() const;

    // Shared plain forward: returns post-final-layernorm hidden states for
    // the given embedded rows; optionally records attention maps.
    Mat forward_hidden(const Mat& x0, std::vector<Mat>* attn) const;
    Mat embed_decoder(const std::vector<int>& ids) const;
    Mat embed_classifier(const std::vector<int>& tokens) const;
};

// log softmax(logits row)[id], computed with the usual max shift.
double row_log_softmax_at(const Mat& logits, int row, int id);

// Writes "<path>.json" describing the checkpoint at <path>: model config,
// parameter and vocabulary hashes, training step, and the run seed.
void write_checkpoint_sidecar(const std::string& path, const SequenceModel& m,
                              std::uint64_t vocab_hash, long step,
                              std::uint64_t seed);

// Incremental decoding with per-layer key/value caches. Weights are copied
// out of the model once at construction; logits() match forward_logits() of
// the same model exactly.
class DecoderSession {
public:
    explicit DecoderSession(const SequenceModel& m);

    void push(int token);
    void push_all(const std::vector<int>& tokens);
    const std::vector<double>& logits() const { return logits_; }
    int size() const { return t_; }

private:
    struct LayerW {
        Mat ln1g, ln1b, qkvw, qkvb, projw, projb;
        Mat ln2g, ln2b, w1, b1, w2, b2;
        Mat kcache, vcache;
    };
    SequenceModelConfig cfg_;
    Mat tok_emb_, pos_emb_, lnfg_, lnfb_, headw_;
    std::vector<LayerW> layers_;
    std::vector<double> logits_;
    int t_ = 0;
};

}  // namespace stylerl
