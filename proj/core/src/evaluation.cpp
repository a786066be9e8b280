#include "stylerl/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "json.hpp"
#include "stylerl/common.hpp"

namespace stylerl {

namespace {

int argmax_style(const std::vector<double>& probs) {
    int best = 0;
    for (size_t k = 1; k < probs.size(); ++k)
        if (probs[k] > probs[size_t(best)]) best = int(k);
    return best;
}

void count_ngrams(const std::vector<int>& s, int n,
                  std::map<std::vector<int>, int>& counts) {
    for (int i = 0; i + n <= int(s.size()); ++i)
        counts[std::vector<int>(s.begin() + i, s.begin() + i + n)] += 1;
}

std::string trim_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

double style_accuracy(const std::vector<StyledSentence>& outputs,
                      const SequenceModel& eval_classifier) {
    if (outputs.empty())
        throw ValidationError("style accuracy over an empty output set");
    long hits = 0;
    for (const StyledSentence& s : outputs) {
        ClassifyResult res = eval_classifier.classify(s.tokens);
        if (argmax_style(res.probs) == s.style.id) ++hits;
    }
    return 100.0 * double(hits) / double(outputs.size());
}

double corpus_bleu(const std::vector<std::vector<int>>& outputs,
                   const std::vector<std::vector<int>>& references) {
    if (outputs.empty()) throw ValidationError("bleu over an empty corpus");
    if (outputs.size() != references.size())
        throw ValidationError("bleu needs aligned output/reference lists");

    long matches[4] = {0, 0, 0, 0};
    long totals[4] = {0, 0, 0, 0};
    long out_len = 0, ref_len = 0;
    for (size_t s = 0; s < outputs.size(); ++s) {
        out_len += long(outputs[s].size());
        ref_len += long(references[s].size());
        for (int n = 1; n <= 4; ++n) {
            std::map<std::vector<int>, int> oc, rc;
            count_ngrams(outputs[s], n, oc);
            count_ngrams(references[s], n, rc);
            for (const auto& [gram, count] : oc) {
                totals[n - 1] += count;
                auto it = rc.find(gram);
                if (it != rc.end())
                    matches[n - 1] += std::min(count, it->second);
            }
        }
    }
    if (out_len == 0) return 0.0;

    double log_prec = 0.0;
    for (int n = 0; n < 4; ++n) {
        // Add-one smoothing only where a precision would otherwise be zero
        // (or undefined for candidates shorter than n).
        double p = matches[n] > 0
                       ? double(matches[n]) / double(totals[n])
                       : 1.0 / (double(totals[n]) + 1.0);
        log_prec += std::log(p);
    }
    double bp = out_len >= ref_len
                    ? 1.0
                    : std::exp(1.0 - double(ref_len) / double(out_len));
    return 100.0 * bp * std::exp(log_prec / 4.0);
}

double perplexity(const std::vector<std::vector<int>>& outputs,
                  const SequenceModel& eval_lm) {
    double nll = 0.0;
    long tokens = 0;
    for (const std::vector<int>& s : outputs) {
        if (s.empty()) continue;
        std::vector<int> ids;
        ids.reserve(s.size() + 1);
        ids.push_back(Vocab::kStart);
        ids.insert(ids.end(), s.begin(), s.end());
        for (double lp : eval_lm.stepwise_log_probs(ids)) nll -= lp;
        tokens += long(s.size());
    }
    if (tokens == 0)
        throw ValidationError("perplexity over an empty output set");
    return std::exp(nll / double(tokens));
}

double geometric_mean(double style, double content) {
    if (style < 0.0 || content < 0.0)
        throw ValidationError("geometric mean needs non-negative inputs");
    return std::sqrt(style * content);
}

void require_distinct_models(const SequenceModel& reward_model,
                             const SequenceModel& eval_model) {
    if (reward_model.param_hash() == eval_model.param_hash())
        throw ValidationError(
            "evaluation model shares parameters with a reward model");
}

EvalReport evaluate_transfer(const std::vector<TransferResult>& results,
                             const EvalModels& models) {
    if (results.empty()) throw ValidationError("nothing to evaluate");
    if (!models.classifier || !models.lm || !models.vocab)
        throw ValidationError("evaluation models are not set");

    EvalReport rep;
    std::vector<StyledSentence> labeled;
    std::vector<std::vector<int>> outs, refs;
    labeled.reserve(results.size());
    for (const TransferResult& r : results) {
        StyledSentence s;
        s.tokens = r.output;
        s.style.id = r.target_style;
        labeled.push_back(std::move(s));
        outs.push_back(r.output);
        refs.push_back(r.reference);
    }
    rep.style_accuracy = style_accuracy(labeled, *models.classifier);
    rep.content_bleu = corpus_bleu(outs, refs);
    rep.perplexity = perplexity(outs, *models.lm);
    rep.gm_all = geometric_mean(rep.style_accuracy, rep.content_bleu);

    const Vocab& vocab = *models.vocab;
    for (const TransferResult& r : results) {
        SentenceEval row;
        row.source = detokenize(vocab.decode(r.source));
        row.output = detokenize(vocab.decode(r.output));
        row.reference = detokenize(vocab.decode(r.reference));
        row.target_style = r.target_style;
        row.predicted_style =
            argmax_style(models.classifier->classify(r.output).probs);
        row.bleu = corpus_bleu({r.output}, {r.reference});
        row.tokens = long(r.output.size());
        rep.detail.push_back(std::move(row));
    }
    return rep;
}

void save_eval_report(const std::string& path, const EvalReport& report) {
    nlohmann::ordered_json j;
    j["style_accuracy"] = report.style_accuracy;
    j["content_bleu"] = report.content_bleu;
    j["perplexity"] = report.perplexity;
    j["gm_all"] = report.gm_all;
    j["detail"] = nlohmann::ordered_json::array();
    for (const SentenceEval& row : report.detail) {
        nlohmann::ordered_json r;
        r["source"] = row.source;
        r["output"] = row.output;
        r["reference"] = row.reference;
        r["target_style"] = row.target_style;
        r["predicted_style"] = row.predicted_style;
        r["bleu"] = row.bleu;
        r["tokens"] = row.tokens;
        j["detail"].push_back(std::move(r));
    }
    write_text_file(path, j.dump(2) + "\n");
}

EvalReport load_eval_report(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": bad evaluation report: " + e.what());
    }
    EvalReport rep;
    rep.style_accuracy = j.at("style_accuracy").get<double>();
    rep.content_bleu = j.at("content_bleu").get<double>();
    rep.perplexity = j.at("perplexity").get<double>();
    rep.gm_all = j.at("gm_all").get<double>();
    for (const auto& r : j.at("detail")) {
        SentenceEval row;
        row.source = r.at("source").get<std::string>();
        row.output = r.at("output").get<std::string>();
        row.reference = r.at("reference").get<std::string>();
        row.target_style = r.at("target_style").get<int>();
        row.predicted_style = r.at("predicted_style").get<int>();
        row.bleu = r.at("bleu").get<double>();
        row.tokens = r.at("tokens").get<long>();
        rep.detail.push_back(std::move(row));
    }
    return rep;
}

void save_transfer_records(const std::string& path,
                           const std::vector<TransferResult>& results) {
    std::ostringstream out;
    for (const TransferResult& r : results) {
        nlohmann::ordered_json j;
        j["source"] = r.source;
        j["output"] = r.output;
        j["reference"] = r.reference;
        j["source_style"] = r.source_style;
        j["target_style"] = r.target_style;
        out << j.dump() << "\n";
    }
    write_text_file(path, out.str());
}

std::vector<TransferResult> load_transfer_records(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::vector<TransferResult> results;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            nlohmann::json j = nlohmann::json::parse(line);
            TransferResult r;
            r.source = j.at("source").get<std::vector<int>>();
            r.output = j.at("output").get<std::vector<int>>();
            r.reference = j.at("reference").get<std::vector<int>>();
            r.source_style = j.at("source_style").get<int>();
            r.target_style = j.at("target_style").get<int>();
            results.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": bad transfer record: " + e.what());
        }
    }
    return results;
}

EfficiencyReport efficiency_report(const std::vector<MetricsStream>& streams,
                                   double fraction) {
    if (streams.empty()) throw ValidationError("no metrics streams to compare");
    if (fraction <= 0.0 || fraction > 1.0)
        throw ValidationError("fraction must lie in (0, 1]");

    EfficiencyReport rep;
    rep.fraction = fraction;
    std::map<std::string, int> kept, seen;
    for (const MetricsStream& s : streams) {
        ++seen[s.strategy];
        if (s.records.size() < 2) {
            std::ostringstream w;
            w << "run " << s.strategy << " seed " << s.seed << " has only "
              << s.records.size()
              << " step(s); excluded from the efficiency comparison";
            rep.warnings.push_back(w.str());
            continue;
        }
        double lo = s.records[0].mean_r, hi = s.records[0].mean_r;
        for (const MetricsRecord& r : s.records) {
            lo = std::min(lo, r.mean_r);
            hi = std::max(hi, r.mean_r);
        }
        EfficiencyRun run;
        run.strategy = s.strategy;
        run.seed = s.seed;
        run.peak_reward = hi;
        double range = hi - lo;
        double threshold = lo + fraction * range;
        bool crossed = false;
        for (const MetricsRecord& r : s.records) {
            EfficiencyPoint p;
            p.episodes = r.episodes;
            p.normalized_reward = range > 0.0 ? (r.mean_r - lo) / range : 1.0;
            run.points.push_back(p);
            if (!crossed && r.mean_r >= threshold) {
                run.episodes_to_fraction = r.episodes;
                run.wall_ms_to_fraction = r.wall_ms;
                crossed = true;
            }
        }
        ++kept[s.strategy];
        rep.runs.push_back(std::move(run));
    }
    for (const auto& [strategy, n] : seen)
        if (kept[strategy] == 0)
            throw ValidationError("strategy " + strategy +
                                  " has no run long enough to compare");
    return rep;
}

double efficiency_ratio(const EfficiencyReport& report, const std::string& a,
                        const std::string& b) {
    double sum_a = 0.0, sum_b = 0.0;
    int n_a = 0, n_b = 0;
    for (const EfficiencyRun& run : report.runs) {
        if (run.strategy == a) {
            sum_a += double(run.episodes_to_fraction);
            ++n_a;
        }
        if (run.strategy == b) {
            sum_b += double(run.episodes_to_fraction);
            ++n_b;
        }
    }
    if (n_a == 0 || n_b == 0)
        throw ValidationError("efficiency ratio needs runs for both strategies");
    return (sum_a / double(n_a)) / (sum_b / double(n_b));
}

void write_efficiency_csv(const std::string& path,
                          const EfficiencyReport& report) {
    std::ostringstream out;
    out << "episodes,normalized_reward,strategy,seed\n";
    for (const EfficiencyRun& run : report.runs)
        for (const EfficiencyPoint& p : run.points)
            out << p.episodes << "," << trim_number(p.normalized_reward) << ","
                << run.strategy << "," << run.seed << "\n";
    write_text_file(path, out.str());
}

}  // namespace stylerl
