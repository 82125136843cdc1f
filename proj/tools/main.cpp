// unitsel: single-unit selectivity measures over stored activation matrices.

#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "unitsel/error.hpp"

namespace {

int run(int argc, char** argv) {
    CLI::App app{"Single-unit selectivity analysis over stored activation matrices"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file; command-line flags take precedence");

    unitsel::cli::AnalyzeOptions analyze;
    CLI::App* a = app.add_subcommand("analyze", "Compute every selectivity measure per unit");
    a->add_option("--activations", analyze.activations, "Activation matrix file")->required();
    a->add_option("--input-format", analyze.format, "Activation file format: binary|csv");
    a->add_option("--labels", analyze.labels, "Labels CSV")->required();
    a->add_option("--predictions", analyze.predictions,
                  "Predictions CSV; keeps only correctly classified images");
    a->add_option("--out", analyze.out_dir, "Output directory")->required();
    a->add_option("--k", analyze.k, "Top-k size for precision (60 or 100 in practice)");
    a->add_option("--p", analyze.p, "Precision target for the recall measure");
    a->add_option("--tie-mode", analyze.tie_mode, "expected|deterministic");
    a->add_option("--units", analyze.units, "all | list:0,5,7 | random:N");
    a->add_option("--seed", analyze.seed, "Seed for random unit sampling");
    a->add_option("--threads", analyze.threads, "Worker threads (0 = hardware)");

    unitsel::cli::JitterOptions jitter;
    CLI::App* j = app.add_subcommand("jitter", "Emit a deterministic jitterplot SVG for one unit");
    j->add_option("--activations", jitter.activations, "Activation matrix file")->required();
    j->add_option("--input-format", jitter.format, "binary|csv");
    j->add_option("--labels", jitter.labels, "Labels CSV")->required();
    j->add_option("--predictions", jitter.predictions,
                  "Predictions CSV; plot only correctly classified images");
    j->add_option("--unit", jitter.unit, "Unit id")->required();
    j->add_option("--out", jitter.out_file, "Output SVG path")->required();
    j->add_option("--highlight", jitter.highlights,
                  "class[:marker], repeatable; markers: circle square diamond triangle star pentagon");
    j->add_option("--rule", jitter.rules, "label:x vertical rule, repeatable");
    j->add_flag("--rule-max-informedness", jitter.rule_max_informedness,
                "Annotate the unit's maximum-informedness threshold");
    j->add_option("--seed", jitter.seed, "Jitter seed");

    unitsel::cli::DissectOptions dissect;
    CLI::App* d = app.add_subcommand("dissect", "Concept-mask alignment (IoU) per unit");
    d->add_option("--maps", dissect.maps, "Activation map stacks (SELA v2)")->required();
    d->add_option("--masks", dissect.masks, "Concept masks (SELA v2)")->required();
    d->add_option("--concepts", dissect.concepts, "Concepts CSV (concept_id,name)")->required();
    d->add_option("--top-fraction", dissect.top_fraction,
                  "Pooled pixel fraction kept active when binarizing");
    d->add_option("--out", dissect.out_dir, "Output directory")->required();

    unitsel::cli::SynthOptions synth;
    CLI::App* s = app.add_subcommand("synth", "Generate a synthetic activation scenario");
    s->add_option("--kind", synth.kind, "grandmother|single-active|uniform-offset|random")
        ->required();
    s->add_option("--classes", synth.classes, "Number of classes");
    s->add_option("--per-class", synth.per_class, "Images per class");
    s->add_option("--units", synth.units, "Units to generate");
    s->add_option("--active-value", synth.active_value, "single-active: the one hot value");
    s->add_option("--on-value", synth.on_value, "grandmother: the on value");
    s->add_option("--baseline", synth.baseline, "uniform-offset: baseline level");
    s->add_option("--delta", synth.delta, "uniform-offset: class-0 shift");
    s->add_option("--jitter-scale", synth.jitter_scale,
                  "uniform-offset: jitter half-width (<0 default, 0 none)");
    s->add_option("--noise-scale", synth.noise_scale, "random: mean activation");
    s->add_option("--seed", synth.seed, "Generation seed");
    s->add_option("--out", synth.out_dir, "Output directory")->required();

    unitsel::cli::SummarizeOptions summarize;
    CLI::App* m = app.add_subcommand("summarize", "Layer-level distribution summary of a metrics CSV");
    m->add_option("--metrics", summarize.metrics_csv, "metrics.csv from analyze")->required();
    m->add_option("--out", summarize.out_file, "Summary CSV path")->required();
    m->add_option("--measures", summarize.measures, "Measure names (default: all)");
    m->add_option("--rank", summarize.rank_measure, "Also rank units by this measure");
    m->add_option("--top", summarize.top_n, "Ranking length");
    m->add_option("--rank-out", summarize.rank_out, "Ranking CSV path");
    m->add_option("--iou", summarize.iou_csv, "detectors.csv whose IoU column merges per unit");
    m->add_option("--merged-out", summarize.merged_out, "Merged metrics CSV path");

    unitsel::cli::CorrelateOptions correlate;
    CLI::App* c = app.add_subcommand("correlate", "Pearson correlation matrix between measures");
    c->add_option("--metrics", correlate.metrics_csv, "metrics.csv from analyze")->required();
    c->add_option("--out", correlate.out_file, "Correlation CSV path")->required();
    c->add_option("--measures", correlate.measures, "Measure names (default: headline set)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (a->parsed()) return unitsel::cli::cmd_analyze(analyze);
        if (j->parsed()) return unitsel::cli::cmd_jitter(jitter);
        if (d->parsed()) return unitsel::cli::cmd_dissect(dissect);
        if (s->parsed()) return unitsel::cli::cmd_synth(synth);
        if (m->parsed()) return unitsel::cli::cmd_summarize(summarize);
        if (c->parsed()) return unitsel::cli::cmd_correlate(correlate);
    } catch (const unitsel::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
