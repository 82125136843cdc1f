#include "commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "unitsel/activation_store.hpp"
#include "unitsel/batch.hpp"
#include "unitsel/dissection.hpp"
#include "unitsel/error.hpp"
#include "unitsel/metrics.hpp"
#include "unitsel/report.hpp"
#include "unitsel/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace unitsel::cli {

namespace {

TieMode parse_tie_mode(const std::string& text) {
    if (text == "expected") return TieMode::Expected;
    if (text == "deterministic") return TieMode::Deterministic;
    throw InvalidArgument("tie mode must be 'expected' or 'deterministic'");
}

ActivationFormat parse_format(const std::string& text) {
    if (text == "binary") return ActivationFormat::BinaryV1;
    if (text == "csv") return ActivationFormat::Csv;
    throw InvalidArgument("format must be 'binary' or 'csv'");
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const std::map<std::string, ordered_json>& config,
                    const std::vector<std::string>& outputs) {
    ordered_json m;
    m["command"] = command;
    m["config"] = ordered_json::object();
    for (const auto& [key, value] : config) m["config"][key] = value;
    m["format_versions"] = {{"activations", "SELA1"},
                            {"maps", "SELA2"},
                            {"labels_csv", 1},
                            {"metrics_csv", 1}};
    m["outputs"] = outputs;
    std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
    out << m.dump(2) << '\n';
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

uint32_t effective_threads(uint32_t requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// label:x, split at the last colon so labels may contain colons
RuleAnnotation parse_rule(const std::string& text) {
    const size_t pos = text.rfind(':');
    if (pos == std::string::npos || pos + 1 >= text.size())
        throw InvalidArgument("rule must be 'label:x', got '" + text + "'");
    RuleAnnotation rule;
    rule.label = text.substr(0, pos);
    try {
        size_t used = 0;
        rule.x = std::stod(text.substr(pos + 1), &used);
        if (used != text.size() - pos - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw InvalidArgument("bad rule x-value in '" + text + "'");
    }
    return rule;
}

HighlightSpec parse_highlight(const std::string& text) {
    HighlightSpec spec;
    std::string id_part = text;
    const size_t pos = text.find(':');
    if (pos != std::string::npos) {
        id_part = text.substr(0, pos);
        spec.marker = text.substr(pos + 1);
    }
    try {
        size_t used = 0;
        const unsigned long v = std::stoul(id_part, &used);
        if (used != id_part.size() || v > 0x7fffffffUL) throw std::invalid_argument("range");
        spec.class_id = static_cast<uint32_t>(v);
    } catch (const std::exception&) {
        throw InvalidArgument("bad highlight class in '" + text + "'");
    }
    return spec;
}

std::vector<Measure> parse_measures(const std::vector<std::string>& names) {
    std::vector<Measure> measures;
    for (const std::string& n : names) measures.push_back(measure_from_name(n));
    return measures;
}

// unit_id -> iou out of a detectors.csv written by cmd_dissect
std::map<uint32_t, double> load_detector_ious(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::map<uint32_t, double> by_unit;
    std::string line;
    bool saw_header = false;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!saw_header) {
            if (line.rfind("unit_id,", 0) != 0 || line.find(",iou,") == std::string::npos)
                throw ParseError(path.string() + ": not a detectors csv");
            saw_header = true;
            continue;
        }
        // unit_id,best_concept,concept_name,iou,...
        std::istringstream row(line);
        std::string unit_field, skip, iou_field;
        std::getline(row, unit_field, ',');
        std::getline(row, skip, ',');
        std::getline(row, skip, ',');
        std::getline(row, iou_field, ',');
        try {
            by_unit[static_cast<uint32_t>(std::stoul(unit_field))] = std::stod(iou_field);
        } catch (const std::exception&) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                             ": cannot parse unit/iou");
        }
    }
    if (!saw_header) throw ParseError(path.string() + ": empty file");
    return by_unit;
}

}  // namespace

int cmd_analyze(const AnalyzeOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();

    ClassIndex labels = load_labels(opt.labels);
    BatchOptions batch;
    batch.metrics.precision_k = opt.k;
    batch.metrics.recall_precision_target = opt.p;
    batch.metrics.tie_mode = parse_tie_mode(opt.tie_mode);
    batch.threads = effective_threads(opt.threads);

    if (!opt.predictions.empty()) {
        const auto preds = load_predictions(opt.predictions);
        auto [kept, filtered] = filter_correct_labels(labels, preds);
        labels = std::move(filtered);
        batch.image_subset = std::move(kept);
    }

    const UnitSelection selection = UnitSelection::parse(opt.units);
    std::vector<UnitMetrics> metrics;
    if (parse_format(opt.format) == ActivationFormat::BinaryV1) {
        ActivationFileReader probe(opt.activations);
        const auto units = resolve_units(selection, probe.n_units(), opt.seed);
        metrics = analyze_file(opt.activations, labels, units, batch);
    } else {
        const ActivationDataset dataset = load_activations(opt.activations, ActivationFormat::Csv);
        const auto units = resolve_units(selection, dataset.n_units, opt.seed);
        metrics = analyze_dataset(dataset, labels, units, batch);
    }

    ensure_dir(opt.out_dir);
    const fs::path dir(opt.out_dir);
    export_metrics_csv(metrics, dir / "metrics.csv");
    export_summary_csv(metrics, all_measures(), dir / "summary.csv");
    write_manifest(dir, "analyze",
                   {{"activations", opt.activations},
                    {"format", opt.format},
                    {"labels", opt.labels},
                    {"predictions", opt.predictions},
                    {"k", opt.k},
                    {"p", opt.p},
                    {"tie_mode", opt.tie_mode},
                    {"units", opt.units},
                    {"seed", opt.seed}},
                   {"metrics.csv", "summary.csv"});

    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    std::cerr << "analyzed " << metrics.size() << " units in " << ms << " ms\n";
    return 0;
}

int cmd_jitter(const JitterOptions& opt) {
    ClassIndex labels = load_labels(opt.labels);

    UnitActivations acts;
    acts.unit_id = opt.unit;
    if (parse_format(opt.format) == ActivationFormat::BinaryV1) {
        ActivationFileReader reader(opt.activations);
        reader.read_unit(opt.unit, acts.values);
    } else {
        const ActivationDataset dataset = load_activations(opt.activations, ActivationFormat::Csv);
        acts = slice_unit(dataset, opt.unit);
    }
    if (!opt.predictions.empty()) {
        const auto preds = load_predictions(opt.predictions);
        auto [kept, filtered] = filter_correct_labels(labels, preds);
        std::vector<float> gathered(kept.size());
        for (size_t j = 0; j < kept.size(); ++j) gathered[j] = acts.values[kept[j]];
        acts.values = std::move(gathered);
        labels = std::move(filtered);
    }

    std::vector<HighlightSpec> highlights;
    for (const std::string& h : opt.highlights) highlights.push_back(parse_highlight(h));
    std::vector<RuleAnnotation> rules;
    for (const std::string& r : opt.rules) rules.push_back(parse_rule(r));
    if (opt.rule_max_informedness) {
        const ThresholdSweep sweep = build_sweep(acts, labels);
        const InformednessPoint mi = max_informedness(sweep, labels);
        rules.push_back({"max informedness", static_cast<double>(mi.threshold)});
    }

    JitterplotOptions options;
    options.seed = opt.seed;
    const std::string svg = jitterplot_svg(acts, labels, highlights, rules, options);

    std::ofstream out(opt.out_file, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + opt.out_file);
    out.write(svg.data(), static_cast<std::streamsize>(svg.size()));
    if (!out) throw IoError("write failed: " + opt.out_file);
    std::cerr << "wrote " << opt.out_file << "\n";
    return 0;
}

int cmd_dissect(const DissectOptions& opt) {
    const auto stacks = load_map_stacks(opt.maps);
    const auto concepts = load_concept_masks(opt.masks, opt.concepts);

    ensure_dir(opt.out_dir);
    const fs::path dir(opt.out_dir);
    std::string csv = "unit_id,best_concept,concept_name,iou,is_detector,binarization_threshold\n";
    for (const ActivationMapStack& stack : stacks) {
        const DissectionResult r = dissect_unit(stack, concepts, opt.top_fraction);
        csv += std::to_string(r.unit_id);
        csv += ',' + std::to_string(r.best_concept);
        csv += ',' + concepts[r.best_concept].name;
        csv += ',' + format_real(r.iou);
        csv += ',';
        csv += r.is_detector ? "true" : "false";
        csv += ',' + format_real(r.binarization_threshold);
        csv += '\n';
    }
    std::ofstream out(dir / "detectors.csv", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "detectors.csv").string());
    out.write(csv.data(), static_cast<std::streamsize>(csv.size()));
    if (!out) throw IoError("write failed: " + (dir / "detectors.csv").string());

    write_manifest(dir, "dissect",
                   {{"maps", opt.maps},
                    {"masks", opt.masks},
                    {"concepts", opt.concepts},
                    {"top_fraction", opt.top_fraction}},
                   {"detectors.csv"});
    std::cerr << "dissected " << stacks.size() << " units against " << concepts.size()
              << " concepts\n";
    return 0;
}

int cmd_synth(const SynthOptions& opt) {
    ScenarioSpec spec;
    spec.kind = scenario_from_name(opt.kind);
    spec.n_classes = opt.classes;
    spec.n_per_class = opt.per_class;
    spec.n_units = opt.units;
    spec.active_value = static_cast<float>(opt.active_value);
    spec.on_value = static_cast<float>(opt.on_value);
    if (opt.baseline >= 0.0) spec.baseline = opt.baseline;
    spec.delta = opt.delta;
    spec.jitter_scale = opt.jitter_scale;
    spec.noise_scale = opt.noise_scale;
    spec.seed = opt.seed;

    ensure_dir(opt.out_dir);
    const fs::path dir(opt.out_dir);
    generate_to_files(spec, dir / "activations.sela", dir / "labels.csv");
    write_manifest(dir, "synth",
                   {{"kind", opt.kind},
                    {"classes", opt.classes},
                    {"per_class", opt.per_class},
                    {"units", opt.units},
                    {"active_value", opt.active_value},
                    {"on_value", opt.on_value},
                    {"baseline", opt.baseline >= 0.0 ? opt.baseline : spec.baseline},
                    {"delta", opt.delta},
                    {"jitter_scale", opt.jitter_scale},
                    {"noise_scale", opt.noise_scale},
                    {"seed", opt.seed}},
                   {"activations.sela", "labels.csv"});
    std::cerr << "generated " << spec.n_units << " unit(s) x "
              << spec.n_classes * spec.n_per_class << " images\n";
    return 0;
}

int cmd_summarize(const SummarizeOptions& opt) {
    auto metrics = parse_metrics_csv(opt.metrics_csv);
    if (!opt.iou_csv.empty()) {
        if (opt.merged_out.empty()) throw InvalidArgument("--iou requires --merged-out");
        const auto iou_by_unit = load_detector_ious(opt.iou_csv);
        for (UnitMetrics& m : metrics) {
            const auto it = iou_by_unit.find(m.unit_id);
            if (it != iou_by_unit.end()) m.iou = it->second;
        }
        export_metrics_csv(metrics, opt.merged_out);
    }
    std::vector<Measure> measures;
    if (opt.measures.empty()) {
        measures.assign(all_measures().begin(), all_measures().end());
    } else {
        measures = parse_measures(opt.measures);
    }
    export_summary_csv(metrics, measures, opt.out_file);
    if (!opt.rank_measure.empty()) {
        if (opt.rank_out.empty()) throw InvalidArgument("--rank requires --rank-out");
        export_ranking_csv(metrics, measure_from_name(opt.rank_measure), opt.top_n, opt.rank_out);
    }
    std::cerr << "summarized " << metrics.size() << " units\n";
    return 0;
}

int cmd_correlate(const CorrelateOptions& opt) {
    const auto metrics = parse_metrics_csv(opt.metrics_csv);
    std::vector<Measure> measures;
    if (opt.measures.empty()) {
        measures = {Measure::Precision, Measure::Ccmas, Measure::RecallAtPrecision,
                    Measure::MaxInformedness, Measure::NClassesTopk};
    } else {
        measures = parse_measures(opt.measures);
    }
    export_correlation_csv(metrics, measures, opt.out_file);
    std::cerr << "correlated " << measures.size() << " measures over " << metrics.size()
              << " units\n";
    return 0;
}

}  // namespace unitsel::cli
