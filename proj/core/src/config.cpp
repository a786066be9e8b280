#include "stylerl/config.hpp"

#include <cstdio>
#include <map>
#include <sstream>

#include "stylerl/common.hpp"

namespace stylerl {

namespace {

// Single definition of the key space: both the parser and the renderer walk
// this visitor, so they cannot drift apart.
template <typename C, typename F>
void visit_config(C& c, F&& f) {
    f("run.seed", c.seed);

    f("corpus.train_per_style", c.corpus.train_per_style);
    f("corpus.dev_per_style", c.corpus.dev_per_style);
    f("corpus.test_per_style", c.corpus.test_per_style);
    f("corpus.multi_attr_prob", c.corpus.multi_attr_prob);

    f("parallel.transform", c.parallel.transform);
    f("parallel.noise", c.parallel.noise);

    auto model = [&](const std::string& prefix, auto& m) {
        f(prefix + ".layers", m.layers);
        f(prefix + ".heads", m.heads);
        f(prefix + ".d_model", m.d_model);
        f(prefix + ".max_positions", m.max_positions);
        f(prefix + ".epochs", m.epochs);
        f(prefix + ".batch", m.batch);
        f(prefix + ".lr", m.lr);
        f(prefix + ".clip", m.clip);
    };
    model("classifier", c.classifier);
    model("lm", c.lm);
    model("policy", c.policy);
    model("eval_classifier", c.eval_classifier);
    model("eval_lm", c.eval_lm);

    f("head.lambda", c.head_lambda);

    f("rewards.style_weight", c.weights.style);
    f("rewards.content_weight", c.weights.content);
    f("rewards.fluency_weight", c.weights.fluency);
    f("rewards.sentence_wide_match", c.sentence_wide_match);

    f("sampling.p", c.sampling.p);
    f("sampling.k", c.sampling.k);
    f("sampling.max_new_tokens", c.sampling.max_new_tokens);
    f("sampling.temperature", c.sampling.temperature);

    f("rl.strategy", c.rl.strategy);
    f("rl.gamma", c.rl.gamma);
    f("rl.n_sentences", c.rl.n_sentences);
    f("rl.k_samples", c.rl.k_samples);
    f("rl.epsilon", c.rl.epsilon);
    f("rl.smooth_window", c.rl.smooth_window);
    f("rl.lr", c.rl.lr);
    f("rl.clip", c.rl.clip);
    f("rl.max_episodes", c.rl.max_episodes);
    f("rl.rollouts", c.rl.rollouts);

    f("report.fraction", c.report_fraction);
}

std::string strip(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw ValidationError("config key " + key + ": cannot parse value '" +
                          value + "'");
}

void assign(const std::string& key, const std::string& value, int& out) {
    size_t used = 0;
    try {
        out = std::stoi(value, &used);
    } catch (const std::exception&) {
        bad_value(key, value);
    }
    if (used != value.size()) bad_value(key, value);
}

void assign(const std::string& key, const std::string& value, long& out) {
    size_t used = 0;
    try {
        out = std::stol(value, &used);
    } catch (const std::exception&) {
        bad_value(key, value);
    }
    if (used != value.size()) bad_value(key, value);
}

void assign(const std::string& key, const std::string& value,
            std::uint64_t& out) {
    size_t used = 0;
    try {
        out = std::stoull(value, &used);
    } catch (const std::exception&) {
        bad_value(key, value);
    }
    if (used != value.size() || value[0] == '-') bad_value(key, value);
}

void assign(const std::string& key, const std::string& value, double& out) {
    size_t used = 0;
    try {
        out = std::stod(value, &used);
    } catch (const std::exception&) {
        bad_value(key, value);
    }
    if (used != value.size()) bad_value(key, value);
}

void assign(const std::string& key, const std::string& value, bool& out) {
    if (value == "true")
        out = true;
    else if (value == "false")
        out = false;
    else
        bad_value(key, value);
}

void assign(const std::string&, const std::string& value, std::string& out) {
    out = value;
}

std::string render(int v) { return std::to_string(v); }
std::string render(long v) { return std::to_string(v); }
std::string render(std::uint64_t v) { return std::to_string(v); }
std::string render(bool v) { return v ? "true" : "false"; }
std::string render(const std::string& v) { return v; }
std::string render(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    std::map<std::string, std::string> pending;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::string body = strip(line);
        if (body.empty()) continue;
        size_t eq = body.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(lineno) +
                                  ": expected key = value");
        std::string key = strip(body.substr(0, eq));
        std::string value = strip(body.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ValidationError("config line " + std::to_string(lineno) +
                                  ": expected key = value");
        if (!pending.emplace(key, value).second)
            throw ValidationError("duplicate config key: " + key);
    }

    RunConfig cfg;
    visit_config(cfg, [&](const std::string& key, auto& field) {
        auto it = pending.find(key);
        if (it == pending.end()) return;
        assign(key, it->second, field);
        pending.erase(it);
    });
    if (!pending.empty())
        throw ValidationError("unknown config key: " + pending.begin()->first);
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(read_text_file(path));
}

std::string render_run_config(const RunConfig& cfg) {
    std::ostringstream out;
    visit_config(cfg, [&](const std::string& key, const auto& field) {
        out << key << " = " << render(field) << "\n";
    });
    return out.str();
}

std::uint64_t run_config_hash(const RunConfig& cfg) {
    return fnv1a64(render_run_config(cfg));
}

MLEConfig mle_config(const ModelHyper& m, std::uint64_t seed) {
    MLEConfig cfg;
    cfg.epochs = m.epochs;
    cfg.lr = m.lr;
    cfg.clip = m.clip;
    cfg.batch = m.batch;
    cfg.seed = seed;
    return cfg;
}

RLConfig rl_config(const RunConfig& cfg) {
    RLConfig rl;
    rl.strategy = strategy_from_name(cfg.rl.strategy);
    rl.gamma = cfg.rl.gamma;
    rl.n_sentences = cfg.rl.n_sentences;
    rl.k_samples = cfg.rl.k_samples;
    rl.epsilon = cfg.rl.epsilon;
    rl.smooth_window = cfg.rl.smooth_window;
    rl.lr = cfg.rl.lr;
    rl.clip = cfg.rl.clip;
    rl.max_episodes = cfg.rl.max_episodes;
    rl.rollouts = cfg.rl.rollouts;
    rl.seed = cfg.seed;
    rl.sampling = cfg.sampling;
    return rl;
}

}  // namespace stylerl
