#pragma once

#include <string>
#include <utility>
#include <vector>

#include "stylerl/evaluation.hpp"

namespace stylerl {

struct ChartSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

struct BarEntry {
    std::string label;
    double value = 0.0;
};

// Self-contained SVG documents with axes, ticks, and a legend. Output is
// byte-deterministic for identical inputs.
std::string render_line_chart(const std::string& title,
                              const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<ChartSeries>& series);
std::string render_bar_chart(const std::string& title,
                             const std::string& y_label,
                             const std::vector<BarEntry>& bars);

// One evaluated run, keyed by the run directory name.
struct RunSummary {
    std::string run_id;
    std::string strategy;
    std::uint64_t seed = 0;
    EvalReport eval;
};

// Emits reward_vs_episodes.{csv,svg} from the training streams and a
// {metric}.{csv,svg} pair per evaluation metric. The CSVs are the source of
// truth; every chart is derived from the same rows. Returns the paths
// written, in order. Either input list may be empty, but not both.
std::vector<std::string> write_reports(const std::string& dir,
                                       const std::vector<MetricsStream>& streams,
                                       const std::vector<RunSummary>& evals,
                                       double fraction);

}  // namespace stylerl
