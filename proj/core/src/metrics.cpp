#include "stylerl/metrics.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "stylerl/common.hpp"

namespace stylerl {

void append_metrics(const std::string& path, const MetricsRecord& rec) {
    nlohmann::ordered_json j;
    j["step"] = rec.step;
    j["episodes"] = rec.episodes;
    j["mean_r"] = rec.mean_r;
    j["mean_rs"] = rec.mean_rs;
    j["mean_rc"] = rec.mean_rc;
    j["mean_rf"] = rec.mean_rf;
    j["baseline"] = rec.baseline;
    j["wall_ms"] = rec.wall_ms;
    j["tokens_generated"] = rec.tokens_generated;
    j["reward_model_calls"] = rec.reward_model_calls;
    j["strategy"] = rec.strategy;

    std::ofstream out(path, std::ios::app);
    if (!out) throw ValidationError("cannot open metrics file: " + path);
    out << j.dump() << "\n";
    if (!out) throw ValidationError("cannot write metrics file: " + path);
}

std::vector<MetricsRecord> load_metrics(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open metrics file: " + path);
    std::vector<MetricsRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            std::ostringstream msg;
            msg << path << ":" << lineno << ": bad metrics record: " << e.what();
            throw ValidationError(msg.str());
        }
        MetricsRecord rec;
        rec.step = j.at("step").get<long>();
        rec.episodes = j.at("episodes").get<long>();
        rec.mean_r = j.at("mean_r").get<double>();
        rec.mean_rs = j.at("mean_rs").get<double>();
        rec.mean_rc = j.at("mean_rc").get<double>();
        rec.mean_rf = j.at("mean_rf").get<double>();
        rec.baseline = j.at("baseline").get<double>();
        rec.wall_ms = j.at("wall_ms").get<double>();
        rec.tokens_generated = j.at("tokens_generated").get<long>();
        rec.reward_model_calls = j.at("reward_model_calls").get<long>();
        rec.strategy = j.at("strategy").get<std::string>();
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace stylerl
