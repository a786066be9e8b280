#pragma once

#include <map>
#include <string>
#include <vector>

#include "stylerl/config.hpp"

namespace stylerl {

enum class Stage {
    gen_data,
    pretrain_classifier,
    select_head,
    pretrain_lm,
    synth_parallel,
    pretrain_policy,
    train_rl,
    transfer,
    evaluate,
    report,
};

Stage stage_from_name(const std::string& name);  // "gen-data", "train-rl", ...
std::string stage_name(Stage s);

std::string pipeline_version();

struct StageContext {
    RunConfig cfg;
    std::string out_dir;
    bool force = false;
    bool debug_rewards = false;
};

// Directory name of one stage's run under out_dir. Pre-training stages fork
// per seed; the RL stages additionally fork per strategy; report aggregates
// across all of them.
std::string stage_run_id(Stage s, const RunConfig& cfg);

// Hash over the config keys this stage actually consumes. Upstream changes
// arrive through input-file hashes instead, so editing, say, rl.lr does not
// invalidate a finished pre-training run.
std::uint64_t stage_config_hash(Stage s, const RunConfig& cfg);

struct RunManifest {
    std::string run_id;
    std::string stage;
    std::map<std::string, std::string> inputs;  // artifact name -> content hash
    std::string config_hash;
    std::string started_at;
    std::string finished_at;
    std::string version;
};

void save_manifest(const std::string& path, const RunManifest& m);
RunManifest load_manifest(const std::string& path);

struct StageResult {
    std::string run_id;
    std::string run_dir;
    bool skipped = false;  // finished run with matching config and inputs
};

// Runs one stage: checks prerequisites (an absent input names the stage that
// produces it), skips finished runs whose config and inputs still match,
// refuses to overwrite a stale run without force, and writes config.resolved
// plus manifest.json next to the outputs.
StageResult run_stage(Stage s, const StageContext& ctx);

// True when out_dir holds at least one metrics stream or evaluation report
// for the report stage to aggregate.
bool has_report_inputs(const std::string& out_dir);

}  // namespace stylerl
