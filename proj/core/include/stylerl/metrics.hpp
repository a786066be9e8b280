#pragma once

#include <string>
#include <vector>

namespace stylerl {

// One RL training step. Reward means cover the step's batch; wall_ms,
// tokens_generated, and reward_model_calls accumulate over the run so cost
// curves can be read straight off the stream.
struct MetricsRecord {
    long step = 0;
    long episodes = 0;  // cumulative episodes sampled
    double mean_r = 0.0;
    double mean_rs = 0.0;
    double mean_rc = 0.0;
    double mean_rf = 0.0;
    double baseline = 0.0;
    double wall_ms = 0.0;
    long tokens_generated = 0;
    long reward_model_calls = 0;
    std::string strategy;
};

// Append-only structured records, one JSON object per line; a crashed run
// keeps every step written so far.
void append_metrics(const std::string& path, const MetricsRecord& rec);
std::vector<MetricsRecord> load_metrics(const std::string& path);

}  // namespace stylerl
