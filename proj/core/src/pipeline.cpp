#include "stylerl/pipeline.hpp"

#include <algorithm>
#include <ctime>
#include <filesystem>
#include <sstream>

#include "json.hpp"
#include "stylerl/attribution.hpp"
#include "stylerl/common.hpp"
#include "stylerl/episode.hpp"
#include "stylerl/evaluation.hpp"
#include "stylerl/metrics.hpp"
#include "stylerl/report.hpp"
#include "stylerl/rewards.hpp"
#include "stylerl/sampler.hpp"
#include "stylerl/toy_task.hpp"
#include "stylerl/trainer.hpp"

namespace fs = std::filesystem;

namespace stylerl {

namespace {

constexpr const char* kVersion = "v0.1.0";

std::string iso_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::tm tm;
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string hash_file(const std::string& path) {
    return hash_hex(fnv1a64(read_text_file(path)));
}

std::uint64_t stage_seed(const RunConfig& cfg, const std::string& tag) {
    return derive_seed(cfg.seed, fnv1a64(tag));
}

ToyTaskSpec spec_for(const RunConfig& cfg) {
    ToyTaskSpec spec = default_toy_spec();
    spec.multi_attr_prob = cfg.corpus.multi_attr_prob;
    return spec;
}

std::vector<StyleLabel> style_labels(const Vocab& vocab) {
    std::vector<StyleLabel> styles;
    for (int i = 0; i < vocab.n_styles(); ++i)
        styles.push_back({i, vocab.style_names()[size_t(i)]});
    return styles;
}

void save_curve(const std::string& path, const MLEResult& res) {
    nlohmann::ordered_json j;
    j["best_epoch"] = res.best_epoch;
    j["best_dev_loss"] = res.best_dev_loss;
    j["curve"] = nlohmann::ordered_json::array();
    for (const EpochStats& e : res.curve) {
        nlohmann::ordered_json row;
        row["train_loss"] = e.train_loss;
        row["dev_loss"] = e.dev_loss;
        j["curve"].push_back(std::move(row));
    }
    write_text_file(path, j.dump(2) + "\n");
}

void save_model(const std::string& path, const SequenceModel& m,
                const Vocab& vocab, long step, std::uint64_t seed) {
    m.save_checkpoint(path);
    write_checkpoint_sidecar(path, m, vocab.content_hash(), step, seed);
}

// One prerequisite artifact: where it lives and which stage makes it.
struct Prereq {
    std::string label;  // manifest key: "<producer run id>/<relative path>"
    std::string path;
    Stage producer;
};

void add_prereqs(std::vector<Prereq>& list, const std::string& out_dir,
                 Stage producer, const RunConfig& cfg,
                 const std::vector<std::string>& files) {
    std::string id = stage_run_id(producer, cfg);
    for (const std::string& f : files)
        list.push_back({id + "/" + f, out_dir + "/" + id + "/" + f, producer});
}

// Everything the report stage aggregates, scanned from finished run dirs.
struct ReportInputs {
    std::vector<MetricsStream> streams;
    std::vector<RunSummary> evals;
    std::vector<Prereq> files;
};

ReportInputs scan_report_inputs(const std::string& out_dir) {
    ReportInputs in;
    if (!fs::is_directory(out_dir)) return in;
    std::vector<std::string> names;
    for (const fs::directory_entry& e : fs::directory_iterator(out_dir))
        if (e.is_directory()) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());

    for (const std::string& name : names) {
        std::string dir = out_dir + "/" + name;
        std::string resolved = dir + "/config.resolved";
        if (!fs::exists(resolved)) continue;
        if (name.rfind("train-rl-", 0) == 0 &&
            fs::exists(dir + "/metrics.records")) {
            RunConfig rc = load_run_config(resolved);
            MetricsStream s;
            s.strategy = rc.rl.strategy;
            s.seed = rc.seed;
            s.records = load_metrics(dir + "/metrics.records");
            in.streams.push_back(std::move(s));
            in.files.push_back({name + "/metrics.records",
                                dir + "/metrics.records", Stage::train_rl});
            in.files.push_back(
                {name + "/config.resolved", resolved, Stage::train_rl});
        } else if (name.rfind("evaluate-", 0) == 0 &&
                   fs::exists(dir + "/reports/eval_report.json")) {
            RunConfig rc = load_run_config(resolved);
            RunSummary s;
            s.run_id = name;
            s.strategy = rc.rl.strategy;
            s.seed = rc.seed;
            s.eval = load_eval_report(dir + "/reports/eval_report.json");
            in.evals.push_back(std::move(s));
            in.files.push_back({name + "/reports/eval_report.json",
                                dir + "/reports/eval_report.json",
                                Stage::evaluate});
            in.files.push_back(
                {name + "/config.resolved", resolved, Stage::evaluate});
        }
    }
    return in;
}

// ---- stage bodies ----

void do_gen_data(const StageContext& ctx, const std::string& dir) {
    const RunConfig& cfg = ctx.cfg;
    ToyTaskSpec spec = spec_for(cfg);
    ToyCorpus toy = generate_toy_corpus(
        spec, cfg.corpus.train_per_style, cfg.corpus.dev_per_style,
        cfg.corpus.test_per_style, stage_seed(cfg, "gen-data"));
    toy.vocab.save(dir + "/vocab.json");
    save_corpus_records(dir + "/train.records", toy.train.sentences);
    save_corpus_records(dir + "/dev.records", toy.dev.sentences);
    save_corpus_records(dir + "/test.records", toy.test.sentences);
    std::vector<ParallelPair> gold;
    for (size_t i = 0; i < toy.test.sentences.size(); ++i)
        gold.push_back({toy.test.sentences[i], toy.test.gold[i], "gold"});
    save_parallel_records(dir + "/test_gold.records", gold);
}

void do_pretrain_classifier(const StageContext& ctx, const std::string& dir,
                            const std::string& gen) {
    const RunConfig& cfg = ctx.cfg;
    Vocab vocab = Vocab::load(gen + "/vocab.json");
    std::vector<StyleLabel> styles = style_labels(vocab);
    auto train = load_corpus_records(gen + "/train.records", vocab, styles);
    auto dev = load_corpus_records(gen + "/dev.records", vocab, styles);
    SequenceModel model(
        classifier_config(vocab.size(), cfg.classifier.max_positions,
                          vocab.n_styles(), cfg.classifier.layers,
                          cfg.classifier.heads, cfg.classifier.d_model),
        stage_seed(cfg, "pretrain-classifier/init"));
    MLEResult res = mle_pretrain_classifier(
        model, train, dev,
        mle_config(cfg.classifier, stage_seed(cfg, "pretrain-classifier/train")));
    save_model(dir + "/checkpoints/classifier.ckpt", model, vocab,
               res.best_epoch, cfg.seed);
    save_curve(dir + "/reports/mle_curve.json", res);
}

void do_select_head(const StageContext& ctx, const std::string& dir,
                    const std::string& gen, const std::string& cls) {
    const RunConfig& cfg = ctx.cfg;
    Vocab vocab = Vocab::load(gen + "/vocab.json");
    auto dev = load_corpus_records(gen + "/dev.records", vocab,
                                   style_labels(vocab));
    SequenceModel classifier =
        SequenceModel::load_checkpoint(cls + "/checkpoints/classifier.ckpt");
    HeadSelection sel =
        select_style_head(classifier, vocab, dev, cfg.head_lambda);
    save_head_report(dir + "/reports/head.json", sel);
}

void do_pretrain_lm(const StageContext& ctx, const std::string& dir,
                    const std::string& gen) {
    const RunConfig& cfg = ctx.cfg;
    Vocab vocab = Vocab::load(gen + "/vocab.json");
    std::vector<StyleLabel> styles = style_labels(vocab);
    auto train = load_corpus_records(gen + "/train.records", vocab, styles);
    auto dev = load_corpus_records(gen + "/dev.records", vocab, styles);
    SequenceModel model(
        decoder_config(vocab.size(), cfg.lm.max_positions, cfg.lm.layers,
                       cfg.lm.heads, cfg.lm.d_model),
        stage_seed(cfg, "pretrain-lm/init"));
    MLEResult res = mle_pretrain_lm(
        model, train, dev,
        mle_config(cfg.lm, stage_seed(cfg, "pretrain-lm/train")));
    save_model(dir + "/checkpoints/lm.ckpt", model, vocab, res.best_epoch,
               cfg.seed);
    save_curve(dir + "/reports/mle_curve.json", res);
}

void do_synth_parallel(const StageContext& ctx, const std::string& dir,
                       const std::string& gen) {
    const RunConfig& cfg = ctx.cfg;
    Vocab vocab = Vocab::load(gen + "/vocab.json");
    std::vector<StyleLabel> styles = style_labels(vocab);
    auto train = load_corpus_records(gen + "/train.records", vocab, styles);
    auto dev = load_corpus_records(gen + "/dev.records", vocab, styles);
    ToyTaskSpec spec = spec_for(cfg);
    ParallelTransform transform = parse_transform(cfg.parallel.transform);
    save_parallel_records(
        dir + "/pairs_train.records",
        synthesize_parallel_corpus(train, spec, vocab, transform,
                                   cfg.parallel.noise,
                                   stage_seed(cfg, "synth-parallel/train")));
    save_parallel_records(
        dir + "/pairs_dev.records",
        synthesize_parallel_corpus(dev, spec, vocab, transform,
                                   cfg.parallel.noise,
                                   stage_seed(cfg, "synth-parallel/dev")));
}

void do_pretrain_policy(const StageContext& ctx, const std::string& dir,
                        const std::string& gen, const std::string& synth) {
    const RunConfig& cfg = ctx.cfg;
    Vocab vocab = Vocab::load(gen + "/vocab.json");
    std::vector<StyleLabel> styles = style_labels(vocab);
    auto train =
        load_parallel_records(synth + "/pairs_train.records", vocab, styles);
    auto dev =
        load_parallel_records(synth + "/pairs_dev.records", vocab, styles);
    SequenceModel model(
        decoder_config(vocab.size(), cfg.policy.max_positions,
                       cfg.policy.layers, cfg.policy.heads,
                       cfg.policy.d_model),
        stage_seed(cfg, "pretrain-policy/init"));
    MLEResult res = mle_pretrain_policy(
        model, vocab, train, dev,
        mle_config(cfg.policy, stage_seed(cfg, "pretrain-policy/train")));
    save_model(dir + "/checkpoints/policy.ckpt", model, vocab, res.best_epoch,
               cfg.seed);
    save_curve(dir + "/reports/mle_curve.json", res);
}

void do_train_rl(const StageContext& ctx, const std::string& dir,
                 const std::string& gen, const std::string& pol,
                 const std::string& cls, const std::string& lm,
                 const std::string& head) {
    const RunConfig& cfg = ctx.cfg;
    Vocab vocab = Vocab::load(gen + "/vocab.json");
    auto train = load_corpus_records(gen + "/train.records", vocab,
                                     style_labels(vocab));
    SequenceModel policy =
        SequenceModel::load_checkpoint(pol + "/checkpoints/policy.ckpt");
    SequenceModel classifier =
        SequenceModel::load_checkpoint(cls + "/checkpoints/classifier.ckpt");
    SequenceModel fluency =
        SequenceModel::load_checkpoint(lm + "/checkpoints/lm.ckpt");
    classifier.freeze();
    fluency.freeze();
    HeadSelection sel = load_head_report(head + "/reports/head.json");

    RewardModels models;
    models.classifier = &classifier;
    models.lm = &fluency;
    models.vocab = &vocab;
    models.head = sel.head;
    models.lambda_frac = cfg.head_lambda;
    models.weights = cfg.weights;
    models.sentence_wide_match = cfg.sentence_wide_match;

    RLConfig rl = rl_config(cfg);
    rl.debug_rewards = ctx.debug_rewards;

    std::string metrics_path = dir + "/metrics.records";
    write_text_file(metrics_path, "");  // a rebuilt run starts a fresh stream
    RLResult res =
        rl_train(policy, models, train, rl,
                 [&](const MetricsRecord& rec) { append_metrics(metrics_path, rec); });

    save_model(dir + "/checkpoints/policy_rl.ckpt", policy, vocab,
               res.state.step, cfg.seed);
    nlohmann::ordered_json j;
    j["steps"] = res.state.step;
    j["episodes"] = res.state.episodes;
    j["converged"] = res.converged;
    j["baseline"] = res.state.baseline;
    j["wall_ms"] = res.state.wall_ms;
    write_text_file(dir + "/reports/rl_summary.json", j.dump(2) + "\n");
}

void do_transfer(const StageContext& ctx, const std::string& dir,
                 const std::string& gen, const std::string& rl) {
    const RunConfig& cfg = ctx.cfg;
    Vocab vocab = Vocab::load(gen + "/vocab.json");
    std::vector<StyleLabel> styles = style_labels(vocab);
    auto test = load_corpus_records(gen + "/test.records", vocab, styles);
    auto gold =
        load_parallel_records(gen + "/test_gold.records", vocab, styles);
    if (gold.size() != test.size())
        throw ValidationError("test split and gold references disagree in size");
    SequenceModel policy =
        SequenceModel::load_checkpoint(rl + "/checkpoints/policy_rl.ckpt");

    int n_styles = vocab.n_styles();
    std::vector<TransferResult> results;
    for (size_t i = 0; i < test.size(); ++i) {
        if (gold[i].source.tokens != test[i].tokens)
            throw ValidationError("gold references are not aligned with the test split");
        TransferResult r;
        r.source = test[i].tokens;
        r.source_style = test[i].style.id;
        r.target_style = (test[i].style.id + 1) % n_styles;
        std::vector<int> y =
            greedy_decode(policy, vocab, test[i].tokens, r.target_style,
                          cfg.sampling.max_new_tokens);
        for (int t : y)
            if (!vocab.is_marker(t)) r.output.push_back(t);
        r.reference = gold[i].target.tokens;
        results.push_back(std::move(r));
    }
    save_transfer_records(dir + "/transfer.records", results);
}

void do_evaluate(const StageContext& ctx, const std::string& dir,
                 const std::string& gen, const std::string& transfer,
                 const std::string& cls, const std::string& lm) {
    const RunConfig& cfg = ctx.cfg;
    Vocab vocab = Vocab::load(gen + "/vocab.json");
    std::vector<StyleLabel> styles = style_labels(vocab);
    auto train = load_corpus_records(gen + "/train.records", vocab, styles);
    auto dev = load_corpus_records(gen + "/dev.records", vocab, styles);
    auto results = load_transfer_records(transfer + "/transfer.records");

    SequenceModel eval_cls(
        classifier_config(vocab.size(), cfg.eval_classifier.max_positions,
                          vocab.n_styles(), cfg.eval_classifier.layers,
                          cfg.eval_classifier.heads,
                          cfg.eval_classifier.d_model),
        stage_seed(cfg, "evaluate/classifier-init"));
    MLEResult cls_res = mle_pretrain_classifier(
        eval_cls, train, dev,
        mle_config(cfg.eval_classifier, stage_seed(cfg, "evaluate/classifier")));
    SequenceModel eval_lm(
        decoder_config(vocab.size(), cfg.eval_lm.max_positions,
                       cfg.eval_lm.layers, cfg.eval_lm.heads,
                       cfg.eval_lm.d_model),
        stage_seed(cfg, "evaluate/lm-init"));
    MLEResult lm_res = mle_pretrain_lm(
        eval_lm, train, dev, mle_config(cfg.eval_lm, stage_seed(cfg, "evaluate/lm")));

    SequenceModel reward_cls =
        SequenceModel::load_checkpoint(cls + "/checkpoints/classifier.ckpt");
    SequenceModel reward_lm =
        SequenceModel::load_checkpoint(lm + "/checkpoints/lm.ckpt");
    require_distinct_models(reward_cls, eval_cls);
    require_distinct_models(reward_lm, eval_lm);

    save_model(dir + "/checkpoints/eval_classifier.ckpt", eval_cls, vocab,
               cls_res.best_epoch, cfg.seed);
    save_model(dir + "/checkpoints/eval_lm.ckpt", eval_lm, vocab,
               lm_res.best_epoch, cfg.seed);

    EvalModels models;
    models.classifier = &eval_cls;
    models.lm = &eval_lm;
    models.vocab = &vocab;
    EvalReport report = evaluate_transfer(results, models);
    save_eval_report(dir + "/reports/eval_report.json", report);
}

void do_report(const StageContext& ctx, const std::string& dir,
               const ReportInputs& in) {
    write_reports(dir + "/reports", in.streams, in.evals,
                  ctx.cfg.report_fraction);
}

}  // namespace

Stage stage_from_name(const std::string& name) {
    if (name == "gen-data") return Stage::gen_data;
    if (name == "pretrain-classifier") return Stage::pretrain_classifier;
    if (name == "select-head") return Stage::select_head;
    if (name == "pretrain-lm") return Stage::pretrain_lm;
    if (name == "synth-parallel") return Stage::synth_parallel;
    if (name == "pretrain-policy") return Stage::pretrain_policy;
    if (name == "train-rl") return Stage::train_rl;
    if (name == "transfer") return Stage::transfer;
    if (name == "evaluate") return Stage::evaluate;
    if (name == "report") return Stage::report;
    throw ValidationError("unknown stage: " + name);
}

std::string stage_name(Stage s) {
    switch (s) {
        case Stage::gen_data: return "gen-data";
        case Stage::pretrain_classifier: return "pretrain-classifier";
        case Stage::select_head: return "select-head";
        case Stage::pretrain_lm: return "pretrain-lm";
        case Stage::synth_parallel: return "synth-parallel";
        case Stage::pretrain_policy: return "pretrain-policy";
        case Stage::train_rl: return "train-rl";
        case Stage::transfer: return "transfer";
        case Stage::evaluate: return "evaluate";
        case Stage::report: return "report";
    }
    throw ValidationError("unknown stage");
}

std::string pipeline_version() { return kVersion; }

std::string stage_run_id(Stage s, const RunConfig& cfg) {
    if (s == Stage::report) return "report";
    std::string id = stage_name(s);
    if (s == Stage::train_rl || s == Stage::transfer || s == Stage::evaluate)
        id += "-" + cfg.rl.strategy;
    return id + "-seed" + std::to_string(cfg.seed);
}

std::uint64_t stage_config_hash(Stage s, const RunConfig& cfg) {
    std::vector<std::string> prefixes{"run.seed"};
    switch (s) {
        case Stage::gen_data: prefixes.push_back("corpus."); break;
        case Stage::pretrain_classifier: prefixes.push_back("classifier."); break;
        case Stage::select_head: prefixes.push_back("head."); break;
        case Stage::pretrain_lm: prefixes.push_back("lm."); break;
        case Stage::synth_parallel: prefixes.push_back("parallel."); break;
        case Stage::pretrain_policy: prefixes.push_back("policy."); break;
        case Stage::train_rl:
            prefixes.insert(prefixes.end(),
                            {"rl.", "sampling.", "rewards.", "head.lambda"});
            break;
        case Stage::transfer:
            prefixes.push_back("sampling.max_new_tokens");
            break;
        case Stage::evaluate:
            prefixes.insert(prefixes.end(), {"eval_classifier.", "eval_lm."});
            break;
        case Stage::report: prefixes.push_back("report."); break;
    }
    std::istringstream in(render_run_config(cfg));
    std::string line, kept;
    while (std::getline(in, line))
        for (const std::string& p : prefixes)
            if (line.rfind(p, 0) == 0) {
                kept += line;
                kept += '\n';
                break;
            }
    return fnv1a64(kept);
}

void save_manifest(const std::string& path, const RunManifest& m) {
    nlohmann::ordered_json j;
    j["run_id"] = m.run_id;
    j["stage"] = m.stage;
    j["inputs"] = nlohmann::ordered_json::object();
    for (const auto& [name, hash] : m.inputs) j["inputs"][name] = hash;
    j["config_hash"] = m.config_hash;
    j["started_at"] = m.started_at;
    j["finished_at"] = m.finished_at;
    j["version"] = m.version;
    write_text_file(path, j.dump(2) + "\n");
}

RunManifest load_manifest(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": bad manifest: " + e.what());
    }
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.stage = j.at("stage").get<std::string>();
    for (const auto& [name, hash] : j.at("inputs").items())
        m.inputs[name] = hash.get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    m.version = j.at("version").get<std::string>();
    return m;
}

bool has_report_inputs(const std::string& out_dir) {
    ReportInputs in = scan_report_inputs(out_dir);
    return !in.streams.empty() || !in.evals.empty();
}

StageResult run_stage(Stage s, const StageContext& ctx) {
    const RunConfig& cfg = ctx.cfg;
    StageResult result;
    result.run_id = stage_run_id(s, cfg);
    result.run_dir = ctx.out_dir + "/" + result.run_id;

    std::vector<Prereq> prereqs;
    ReportInputs report_in;
    switch (s) {
        case Stage::gen_data:
            break;
        case Stage::pretrain_classifier:
        case Stage::pretrain_lm:
        case Stage::synth_parallel:
            add_prereqs(prereqs, ctx.out_dir, Stage::gen_data, cfg,
                        {"vocab.json", "train.records", "dev.records"});
            break;
        case Stage::select_head:
            add_prereqs(prereqs, ctx.out_dir, Stage::gen_data, cfg,
                        {"vocab.json", "dev.records"});
            add_prereqs(prereqs, ctx.out_dir, Stage::pretrain_classifier, cfg,
                        {"checkpoints/classifier.ckpt"});
            break;
        case Stage::pretrain_policy:
            add_prereqs(prereqs, ctx.out_dir, Stage::gen_data, cfg,
                        {"vocab.json"});
            add_prereqs(prereqs, ctx.out_dir, Stage::synth_parallel, cfg,
                        {"pairs_train.records", "pairs_dev.records"});
            break;
        case Stage::train_rl:
            add_prereqs(prereqs, ctx.out_dir, Stage::gen_data, cfg,
                        {"vocab.json", "train.records"});
            add_prereqs(prereqs, ctx.out_dir, Stage::pretrain_policy, cfg,
                        {"checkpoints/policy.ckpt"});
            add_prereqs(prereqs, ctx.out_dir, Stage::pretrain_classifier, cfg,
                        {"checkpoints/classifier.ckpt"});
            add_prereqs(prereqs, ctx.out_dir, Stage::pretrain_lm, cfg,
                        {"checkpoints/lm.ckpt"});
            add_prereqs(prereqs, ctx.out_dir, Stage::select_head, cfg,
                        {"reports/head.json"});
            break;
        case Stage::transfer:
            add_prereqs(prereqs, ctx.out_dir, Stage::gen_data, cfg,
                        {"vocab.json", "test.records", "test_gold.records"});
            add_prereqs(prereqs, ctx.out_dir, Stage::train_rl, cfg,
                        {"checkpoints/policy_rl.ckpt"});
            break;
        case Stage::evaluate:
            add_prereqs(prereqs, ctx.out_dir, Stage::gen_data, cfg,
                        {"vocab.json", "train.records", "dev.records"});
            add_prereqs(prereqs, ctx.out_dir, Stage::transfer, cfg,
                        {"transfer.records"});
            add_prereqs(prereqs, ctx.out_dir, Stage::pretrain_classifier, cfg,
                        {"checkpoints/classifier.ckpt"});
            add_prereqs(prereqs, ctx.out_dir, Stage::pretrain_lm, cfg,
                        {"checkpoints/lm.ckpt"});
            break;
        case Stage::report:
            report_in = scan_report_inputs(ctx.out_dir);
            if (report_in.streams.empty() && report_in.evals.empty())
                throw ValidationError("nothing to report");
            prereqs = report_in.files;
            break;
    }
    for (const Prereq& p : prereqs)
        if (!fs::exists(p.path))
            throw ValidationError(stage_name(s) + " needs " + p.path +
                                  "; run the " + stage_name(p.producer) +
                                  " stage first");

    std::map<std::string, std::string> input_hashes;
    for (const Prereq& p : prereqs) input_hashes[p.label] = hash_file(p.path);
    std::string cfg_hash = hash_hex(stage_config_hash(s, cfg));

    std::string manifest_path = result.run_dir + "/manifest.json";
    if (fs::exists(manifest_path) && !ctx.force) {
        RunManifest m = load_manifest(manifest_path);
        if (m.config_hash == cfg_hash && m.inputs == input_hashes) {
            result.skipped = true;
            return result;
        }
        throw ValidationError(result.run_dir +
                              " holds results for a different configuration "
                              "or inputs; pass --force to rebuild");
    }

    fs::create_directories(result.run_dir + "/checkpoints");
    fs::create_directories(result.run_dir + "/reports");
    write_text_file(result.run_dir + "/config.resolved",
                    render_run_config(cfg));

    RunManifest manifest;
    manifest.run_id = result.run_id;
    manifest.stage = stage_name(s);
    manifest.inputs = input_hashes;
    manifest.config_hash = cfg_hash;
    manifest.version = kVersion;
    manifest.started_at = iso_now();

    const std::string& dir = result.run_dir;
    auto producer_dir = [&](Stage p) {
        return ctx.out_dir + "/" + stage_run_id(p, cfg);
    };
    switch (s) {
        case Stage::gen_data:
            do_gen_data(ctx, dir);
            break;
        case Stage::pretrain_classifier:
            do_pretrain_classifier(ctx, dir, producer_dir(Stage::gen_data));
            break;
        case Stage::select_head:
            do_select_head(ctx, dir, producer_dir(Stage::gen_data),
                           producer_dir(Stage::pretrain_classifier));
            break;
        case Stage::pretrain_lm:
            do_pretrain_lm(ctx, dir, producer_dir(Stage::gen_data));
            break;
        case Stage::synth_parallel:
            do_synth_parallel(ctx, dir, producer_dir(Stage::gen_data));
            break;
        case Stage::pretrain_policy:
            do_pretrain_policy(ctx, dir, producer_dir(Stage::gen_data),
                               producer_dir(Stage::synth_parallel));
            break;
        case Stage::train_rl:
            do_train_rl(ctx, dir, producer_dir(Stage::gen_data),
                        producer_dir(Stage::pretrain_policy),
                        producer_dir(Stage::pretrain_classifier),
                        producer_dir(Stage::pretrain_lm),
                        producer_dir(Stage::select_head));
            break;
        case Stage::transfer:
            do_transfer(ctx, dir, producer_dir(Stage::gen_data),
                        producer_dir(Stage::train_rl));
            break;
        case Stage::evaluate:
            do_evaluate(ctx, dir, producer_dir(Stage::gen_data),
                        producer_dir(Stage::transfer),
                        producer_dir(Stage::pretrain_classifier),
                        producer_dir(Stage::pretrain_lm));
            break;
        case Stage::report:
            do_report(ctx, dir, report_in);
            break;
    }

    manifest.finished_at = iso_now();
    save_manifest(manifest_path, manifest);
    return result;
}

}  // namespace stylerl
