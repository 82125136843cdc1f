#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace unitsel::cli {

struct AnalyzeOptions {
    std::string activations;
    std::string format = "binary";  // binary | csv
    std::string labels;
    std::string predictions;  // optional; keeps only correctly classified images
    std::string out_dir;
    uint32_t k = 60;
    double p = 0.95;
    std::string tie_mode = "expected";  // expected | deterministic
    std::string units = "all";          // all | list:... | random:N
    uint64_t seed = 0;
    uint32_t threads = 0;  // 0 = hardware concurrency
};
int cmd_analyze(const AnalyzeOptions& opt);

struct JitterOptions {
    std::string activations;
    std::string format = "binary";
    std::string labels;
    std::string predictions;  // optional; plot only correctly classified images
    std::string out_file;
    uint32_t unit = 0;
    std::vector<std::string> highlights;  // class[:marker]
    std::vector<std::string> rules;       // label:x
    bool rule_max_informedness = false;
    uint64_t seed = 0;
};
int cmd_jitter(const JitterOptions& opt);

struct DissectOptions {
    std::string maps;
    std::string masks;
    std::string concepts;
    std::string out_dir;
    double top_fraction = 0.005;
};
int cmd_dissect(const DissectOptions& opt);

struct SynthOptions {
    std::string kind = "grandmother";
    uint32_t classes = 10;
    uint32_t per_class = 100;
    uint32_t units = 1;
    double active_value = 1.0;
    double on_value = 1.0;
    double baseline = -1.0;      // <0 = scenario default
    double delta = 0.1;
    double jitter_scale = -1.0;  // <0 = scenario default, 0 = none
    double noise_scale = 1.0;
    uint64_t seed = 0;
    std::string out_dir;
};
int cmd_synth(const SynthOptions& opt);

struct SummarizeOptions {
    std::string metrics_csv;
    std::string out_file;
    std::vector<std::string> measures;  // default: all
    std::string rank_measure;           // optional ranking output
    uint32_t top_n = 10;
    std::string rank_out;
    std::string iou_csv;     // optional detectors.csv to merge IoU per unit
    std::string merged_out;  // where the merged metrics CSV goes
};
int cmd_summarize(const SummarizeOptions& opt);

struct CorrelateOptions {
    std::string metrics_csv;
    std::string out_file;
    std::vector<std::string> measures;  // default: the headline set
};
int cmd_correlate(const CorrelateOptions& opt);

}  // namespace unitsel::cli
