#include "unitsel/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "io_util.hpp"
#include "unitsel/error.hpp"

namespace unitsel {

namespace {

constexpr std::array<Measure, 11> kAllMeasures = {
    Measure::Precision,    Measure::NClassesTopk,      Measure::Ccmas,
    Measure::Ccmas2,       Measure::RecallPerfect,     Measure::RecallAtPrecision,
    Measure::MaxInformedness, Measure::MiRecall,       Measure::MiSpecificity,
    Measure::MiFallout,    Measure::MiFdr,
};

std::string format_fixed(double v, int decimals) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, decimals);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string format_real(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 6);
    return std::string(buf, res.ptr);
}

const char* measure_name(Measure m) {
    switch (m) {
        case Measure::Precision: return "precision";
        case Measure::NClassesTopk: return "n_classes_topk";
        case Measure::Ccmas: return "ccmas";
        case Measure::Ccmas2: return "ccmas2";
        case Measure::RecallPerfect: return "recall_perfect";
        case Measure::RecallAtPrecision: return "recall_p";
        case Measure::MaxInformedness: return "max_informedness";
        case Measure::MiRecall: return "mi_recall";
        case Measure::MiSpecificity: return "mi_specificity";
        case Measure::MiFallout: return "mi_fallout";
        case Measure::MiFdr: return "mi_fdr";
    }
    return "unknown";
}

Measure measure_from_name(const std::string& name) {
    for (Measure m : kAllMeasures)
        if (name == measure_name(m)) return m;
    throw InvalidArgument("unknown measure '" + name + "'");
}

std::span<const Measure> all_measures() { return kAllMeasures; }

std::optional<double> measure_value(const UnitMetrics& metrics, Measure m) {
    switch (m) {
        case Measure::Precision: return metrics.precision.value;
        case Measure::NClassesTopk: return static_cast<double>(metrics.n_classes_in_topk);
        case Measure::Ccmas:
            if (metrics.ccmas1) return metrics.ccmas1->value;
            return std::nullopt;
        case Measure::Ccmas2:
            if (metrics.ccmas2) return metrics.ccmas2->value;
            return std::nullopt;
        case Measure::RecallPerfect: return metrics.recall_perfect.value;
        case Measure::RecallAtPrecision: return metrics.recall_at_target.value;
        case Measure::MaxInformedness: return metrics.max_informedness.informedness;
        case Measure::MiRecall: return metrics.max_informedness.recall;
        case Measure::MiSpecificity: return metrics.max_informedness.specificity;
        case Measure::MiFallout: return metrics.max_informedness.fallout;
        case Measure::MiFdr: return metrics.max_informedness.false_discovery_rate;
    }
    return std::nullopt;
}

// --- jitterplots -------------------------------------------------------------

namespace {

struct PlotFrame {
    double margin_left = 56, margin_right = 16, margin_top = 34, margin_bottom = 44;
    double width, height;
    double x_min, x_max;
    double plot_w() const { return width - margin_left - margin_right; }
    double plot_h() const { return height - margin_top - margin_bottom; }
    double px(double x) const {
        return margin_left + (x - x_min) / (x_max - x_min) * plot_w();
    }
    double py(double y01) const {  // jitter in [0,1], plotted bottom-up
        return margin_top + (1.0 - y01) * plot_h();
    }
};

const char* highlight_color(size_t index) {
    static constexpr std::array<const char*, 6> palette = {
        "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    return palette[index % palette.size()];
}

std::string coord(double v) { return format_fixed(v, 2); }

void append_marker(std::string& svg, const std::string& shape, double cx, double cy, double r,
                   const std::string& fill) {
    if (shape == "circle") {
        svg += "<circle class=\"pt\" cx=\"" + coord(cx) + "\" cy=\"" + coord(cy) + "\" r=\"" +
               coord(r) + "\" fill=\"" + fill + "\"/>\n";
        return;
    }
    std::vector<std::pair<double, double>> pts;
    if (shape == "square") {
        pts = {{cx - r, cy - r}, {cx + r, cy - r}, {cx + r, cy + r}, {cx - r, cy + r}};
    } else if (shape == "diamond") {
        pts = {{cx, cy - r * 1.3}, {cx + r * 1.3, cy}, {cx, cy + r * 1.3}, {cx - r * 1.3, cy}};
    } else if (shape == "triangle") {
        pts = {{cx, cy - r * 1.2}, {cx + r * 1.2, cy + r}, {cx - r * 1.2, cy + r}};
    } else if (shape == "pentagon" || shape == "star") {
        const int spokes = shape == "pentagon" ? 5 : 10;
        for (int i = 0; i < spokes; ++i) {
            const double angle = -1.5707963267948966 + i * 2.0 * 3.141592653589793 / spokes;
            const double rr = (shape == "star" && (i % 2 == 1)) ? r * 0.5 : r * 1.25;
            pts.emplace_back(cx + rr * std::cos(angle), cy + rr * std::sin(angle));
        }
    } else {
        throw InvalidArgument("unknown marker shape '" + shape + "'");
    }
    svg += "<polygon class=\"pt\" points=\"";
    for (size_t i = 0; i < pts.size(); ++i) {
        if (i) svg += ' ';
        svg += coord(pts[i].first) + "," + coord(pts[i].second);
    }
    svg += "\" fill=\"" + fill + "\"/>\n";
}

}  // namespace

JitterplotData build_jitterplot_data(const UnitActivations& acts, const ClassIndex& labels,
                                     std::span<const HighlightSpec> highlights,
                                     std::span<const RuleAnnotation> annotations, uint64_t seed) {
    if (acts.values.size() != labels.n_images())
        throw InvalidArgument("activations/labels length mismatch");
    if (acts.values.empty()) throw InvalidArgument("empty unit vector");
    for (const HighlightSpec& h : highlights)
        if (h.class_id >= labels.n_classes() || labels.class_count[h.class_id] == 0)
            throw InvalidArgument("unknown highlight class " + std::to_string(h.class_id));

    JitterplotData data;
    data.unit_id = acts.unit_id;
    data.points.reserve(acts.values.size());
    for (uint32_t i = 0; i < acts.values.size(); ++i)
        data.points.push_back(
            {i, labels.class_of[i], acts.values[i], jitter_y(seed, acts.unit_id, i)});
    data.highlights.assign(highlights.begin(), highlights.end());
    data.annotations.assign(annotations.begin(), annotations.end());
    return data;
}

std::string render_jitterplot_svg(const JitterplotData& data, const JitterplotOptions& options) {
    PlotFrame frame;
    frame.width = options.width;
    frame.height = options.height;
    const auto [min_it, max_it] =
        std::minmax_element(data.points.begin(), data.points.end(),
                            [](const JitterPoint& a, const JitterPoint& b) {
                                return a.activation < b.activation;
                            });
    frame.x_min = std::min(0.0, static_cast<double>(min_it->activation));
    frame.x_max = static_cast<double>(max_it->activation);
    for (const RuleAnnotation& a : data.annotations) {
        frame.x_min = std::min(frame.x_min, a.x);
        frame.x_max = std::max(frame.x_max, a.x);
    }
    if (frame.x_max <= frame.x_min) frame.x_max = frame.x_min + 1.0;

    int max_class = 0;
    for (const JitterPoint& p : data.points)
        max_class = std::max(max_class, static_cast<int>(p.class_id));
    std::vector<int> highlight_of(max_class + 1, -1);
    for (size_t h = 0; h < data.highlights.size(); ++h)
        highlight_of[data.highlights[h].class_id] = static_cast<int>(h);

    const std::string title =
        options.title.empty() ? "unit " + std::to_string(data.unit_id) : options.title;

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
           std::to_string(options.width) + "\" height=\"" + std::to_string(options.height) +
           "\" viewBox=\"0 0 " + std::to_string(options.width) + " " +
           std::to_string(options.height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + coord(frame.width / 2) + "\" y=\"20\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"14\">" + title + "</text>\n";

    // frame + x-axis ticks
    svg += "<rect x=\"" + coord(frame.margin_left) + "\" y=\"" + coord(frame.margin_top) +
           "\" width=\"" + coord(frame.plot_w()) + "\" height=\"" + coord(frame.plot_h()) +
           "\" fill=\"none\" stroke=\"#444444\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double x = frame.x_min + (frame.x_max - frame.x_min) * t / 4.0;
        const double xp = frame.px(x);
        svg += "<line x1=\"" + coord(xp) + "\" y1=\"" + coord(frame.margin_top + frame.plot_h()) +
               "\" x2=\"" + coord(xp) + "\" y2=\"" +
               coord(frame.margin_top + frame.plot_h() + 5) + "\" stroke=\"#444444\"/>\n";
        svg += "<text x=\"" + coord(xp) + "\" y=\"" +
               coord(frame.margin_top + frame.plot_h() + 18) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               format_real(x) + "</text>\n";
    }
    svg += "<text x=\"" + coord(frame.margin_left + frame.plot_w() / 2) + "\" y=\"" +
           coord(frame.height - 8) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">activation"
           "</text>\n";

    // base points first, highlighted classes after so they stay visible
    svg += "<g>\n";
    for (const JitterPoint& p : data.points) {
        if (highlight_of[p.class_id] >= 0) continue;
        append_marker(svg, "circle", frame.px(p.activation), frame.py(p.jitter), 2.4, "#b0b4ba");
    }
    for (size_t h = 0; h < data.highlights.size(); ++h) {
        const HighlightSpec& spec = data.highlights[h];
        for (const JitterPoint& p : data.points) {
            if (p.class_id != spec.class_id) continue;
            append_marker(svg, spec.marker, frame.px(p.activation), frame.py(p.jitter), 3.2,
                          highlight_color(h));
        }
    }
    svg += "</g>\n";

    for (const RuleAnnotation& a : data.annotations) {
        const double xp = frame.px(a.x);
        svg += "<line class=\"rule\" x1=\"" + coord(xp) + "\" y1=\"" + coord(frame.margin_top) +
               "\" x2=\"" + coord(xp) + "\" y2=\"" + coord(frame.margin_top + frame.plot_h()) +
               "\" stroke=\"#222222\" stroke-dasharray=\"5,3\"/>\n";
        svg += "<text x=\"" + coord(xp + 3) + "\" y=\"" + coord(frame.margin_top + 12) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" + a.label + " (" +
               format_real(a.x) + ")</text>\n";
    }

    svg += "</svg>\n";
    return svg;
}

std::string jitterplot_svg(const UnitActivations& acts, const ClassIndex& labels,
                           std::span<const HighlightSpec> highlights,
                           std::span<const RuleAnnotation> annotations,
                           const JitterplotOptions& options) {
    return render_jitterplot_svg(
        build_jitterplot_data(acts, labels, highlights, annotations, options.seed), options);
}

// --- layer summaries ---------------------------------------------------------

namespace {

// linear interpolation between order statistics (the common "type 7" rule)
double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.size() == 1) return sorted[0];
    const double h = p * static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

LayerSummary summarize_values(std::span<const double> values, size_t undefined_count) {
    if (values.empty()) throw InvalidArgument("no defined values to summarize");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());

    LayerSummary s;
    s.n = sorted.size();
    s.undefined_count = undefined_count;
    s.q1 = quantile_sorted(sorted, 0.25);
    s.median = quantile_sorted(sorted, 0.5);
    s.q3 = quantile_sorted(sorted, 0.75);
    const double iqr = s.q3 - s.q1;
    const double lo_fence = s.q1 - 1.5 * iqr;
    const double hi_fence = s.q3 + 1.5 * iqr;
    s.whisker_low = sorted.back();
    s.whisker_high = sorted.front();
    for (double v : sorted) {
        if (v < lo_fence || v > hi_fence) {
            s.outliers.push_back(v);
        } else {
            s.whisker_low = std::min(s.whisker_low, v);
            s.whisker_high = std::max(s.whisker_high, v);
        }
    }
    double sum = 0.0;
    for (double v : sorted) sum += v;
    s.mean = sum / static_cast<double>(sorted.size());
    if (sorted.size() > 1) {
        double ss = 0.0;
        for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
        const double sd = std::sqrt(ss / static_cast<double>(sorted.size() - 1));
        s.standard_error = sd / std::sqrt(static_cast<double>(sorted.size()));
    }
    return s;
}

LayerSummary layer_summary(std::span<const UnitMetrics> metrics, Measure measure) {
    std::vector<double> values;
    size_t undefined = 0;
    for (const UnitMetrics& m : metrics) {
        if (const auto v = measure_value(m, measure))
            values.push_back(*v);
        else
            ++undefined;
    }
    return summarize_values(values, undefined);
}

// --- correlations and rankings -------------------------------------------------

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InvalidArgument("pearson inputs differ in length");
    if (x.size() < 3) throw InvalidArgument("pearson needs at least 3 paired values");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw InvalidArgument("pearson undefined for zero variance");
    return sxy / std::sqrt(sxx * syy);
}

double correlate(std::span<const UnitMetrics> metrics, Measure x, Measure y) {
    std::vector<double> xs, ys;
    for (const UnitMetrics& m : metrics) {
        const auto vx = measure_value(m, x);
        const auto vy = measure_value(m, y);
        if (vx && vy) {
            xs.push_back(*vx);
            ys.push_back(*vy);
        }
    }
    return pearson(xs, ys);
}

std::vector<uint32_t> rank_units(std::span<const UnitMetrics> metrics, Measure measure,
                                 size_t top_n) {
    std::vector<std::pair<double, uint32_t>> scored;
    for (const UnitMetrics& m : metrics)
        if (const auto v = measure_value(m, measure)) scored.emplace_back(*v, m.unit_id);
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    if (top_n > 0 && scored.size() > top_n) scored.resize(top_n);
    std::vector<uint32_t> ids;
    ids.reserve(scored.size());
    for (const auto& [value, id] : scored) ids.push_back(id);
    return ids;
}

// --- CSV ----------------------------------------------------------------------

namespace {

constexpr const char* kMetricsHeader =
    "unit_id,localist_class,precision_k,precision_class,precision,n_classes_topk,"
    "ccmas_class,ccmas,ccmas2_class,ccmas2,recall_perfect_class,recall_perfect,"
    "recall_p_target,recall_p_class,recall_p,mi_class,mi_threshold,mi_informedness,"
    "mi_recall,mi_specificity,mi_fallout,mi_fdr,stats_class,mu_class,mu_not_class,"
    "prop_pos_class,prop_pos_not_class,iou";

std::string na_or_id(const std::optional<uint32_t>& v) {
    return v ? std::to_string(*v) : "NA";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void export_metrics_csv(std::span<const UnitMetrics> metrics, const std::filesystem::path& path) {
    std::string out(kMetricsHeader);
    out += '\n';
    for (const UnitMetrics& m : metrics) {
        out += std::to_string(m.unit_id);
        out += ',' + na_or_id(m.localist);
        out += ',' + std::to_string(m.precision_k);
        out += ',' + std::to_string(m.precision.class_id);
        out += ',' + format_real(m.precision.value);
        out += ',' + std::to_string(m.n_classes_in_topk);
        if (m.ccmas1) {
            out += ',' + std::to_string(m.ccmas1->class_id);
            out += ',' + format_real(m.ccmas1->value);
        } else {
            out += ",NA,NA";
        }
        if (m.ccmas2) {
            out += ',' + std::to_string(m.ccmas2->class_id);
            out += ',' + format_real(m.ccmas2->value);
        } else {
            out += ",NA,NA";
        }
        out += ',' + std::to_string(m.recall_perfect.class_id);
        out += ',' + format_real(m.recall_perfect.value);
        out += ',' + format_real(m.recall_precision_target);
        out += ',' + std::to_string(m.recall_at_target.class_id);
        out += ',' + format_real(m.recall_at_target.value);
        out += ',' + std::to_string(m.max_informedness.class_id);
        out += ',' + format_real(m.max_informedness.threshold);
        out += ',' + format_real(m.max_informedness.informedness);
        out += ',' + format_real(m.max_informedness.recall);
        out += ',' + format_real(m.max_informedness.specificity);
        out += ',' + format_real(m.max_informedness.fallout);
        out += ',' + format_real(m.max_informedness.false_discovery_rate);
        out += ',' + std::to_string(m.stats.class_id);
        out += ',' + format_real(m.stats.mean_in);
        out += ',' + format_real(m.stats.mean_out);
        out += ',' + format_real(m.stats.prop_positive_in);
        out += ',' + format_real(m.stats.prop_positive_out);
        out += ',';
        out += m.iou ? format_real(*m.iou) : "NA";
        out += '\n';
    }
    write_text(path, out);
}

std::vector<UnitMetrics> parse_metrics_csv(const std::filesystem::path& path) {
    const std::string text = detail::read_text_file(path);
    std::vector<UnitMetrics> metrics;
    size_t pos = 0, line_no = 0;
    bool saw_header = false;
    while (pos < text.size()) {
        size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        ++line_no;
        const std::string_view line = detail::strip_cr(std::string_view(text).substr(pos, end - pos));
        pos = end + 1;
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != kMetricsHeader)
                throw ParseError(path.string() + ": unexpected metrics header");
            saw_header = true;
            continue;
        }
        const auto f = detail::split_csv(line);
        if (f.size() != 28)
            throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                             ": expected 28 fields, got " + std::to_string(f.size()));
        auto opt_id = [&](std::string_view s) -> std::optional<uint32_t> {
            if (s == "NA") return std::nullopt;
            return detail::parse_number<uint32_t>(s, "class id", line_no);
        };
        auto real = [&](std::string_view s) {
            return detail::parse_number<double>(s, "value", line_no);
        };
        UnitMetrics m;
        m.unit_id = detail::parse_number<uint32_t>(f[0], "unit_id", line_no);
        m.localist = opt_id(f[1]);
        m.precision_k = detail::parse_number<uint32_t>(f[2], "precision_k", line_no);
        m.precision = {detail::parse_number<uint32_t>(f[3], "precision_class", line_no), real(f[4])};
        m.n_classes_in_topk = detail::parse_number<uint32_t>(f[5], "n_classes_topk", line_no);
        if (const auto c = opt_id(f[6])) m.ccmas1 = ClassValue{*c, real(f[7])};
        if (const auto c = opt_id(f[8])) m.ccmas2 = ClassValue{*c, real(f[9])};
        m.recall_perfect = {detail::parse_number<uint32_t>(f[10], "class", line_no), real(f[11])};
        m.recall_precision_target = real(f[12]);
        m.recall_at_target = {detail::parse_number<uint32_t>(f[13], "class", line_no), real(f[14])};
        m.max_informedness.class_id = detail::parse_number<uint32_t>(f[15], "class", line_no);
        m.max_informedness.threshold = detail::parse_number<float>(f[16], "threshold", line_no);
        m.max_informedness.informedness = real(f[17]);
        m.max_informedness.recall = real(f[18]);
        m.max_informedness.specificity = real(f[19]);
        m.max_informedness.fallout = real(f[20]);
        m.max_informedness.false_discovery_rate = real(f[21]);
        m.stats.class_id = detail::parse_number<uint32_t>(f[22], "class", line_no);
        m.stats.mean_in = real(f[23]);
        m.stats.mean_out = real(f[24]);
        m.stats.prop_positive_in = real(f[25]);
        m.stats.prop_positive_out = real(f[26]);
        if (f[27] != "NA") m.iou = real(f[27]);
        metrics.push_back(std::move(m));
    }
    if (!saw_header) throw ParseError(path.string() + ": empty file");
    return metrics;
}

void export_summary_csv(std::span<const UnitMetrics> metrics, std::span<const Measure> measures,
                        const std::filesystem::path& path) {
    std::string out =
        "measure,n_defined,n_undefined,median,q1,q3,whisker_low,whisker_high,n_outliers,mean,se\n";
    for (Measure measure : measures) {
        out += measure_name(measure);
        size_t undefined = 0;
        std::vector<double> values;
        for (const UnitMetrics& m : metrics) {
            if (const auto v = measure_value(m, measure))
                values.push_back(*v);
            else
                ++undefined;
        }
        if (values.empty()) {
            out += ",0," + std::to_string(undefined) + ",NA,NA,NA,NA,NA,NA,NA,NA\n";
            continue;
        }
        const LayerSummary s = summarize_values(values, undefined);
        out += ',' + std::to_string(s.n);
        out += ',' + std::to_string(s.undefined_count);
        out += ',' + format_real(s.median);
        out += ',' + format_real(s.q1);
        out += ',' + format_real(s.q3);
        out += ',' + format_real(s.whisker_low);
        out += ',' + format_real(s.whisker_high);
        out += ',' + std::to_string(s.outliers.size());
        out += ',' + format_real(s.mean);
        out += ',' + format_real(s.standard_error);
        out += '\n';
    }
    write_text(path, out);
}

void export_correlation_csv(std::span<const UnitMetrics> metrics,
                            std::span<const Measure> measures,
                            const std::filesystem::path& path) {
    std::string out = "measure";
    for (Measure m : measures) {
        out += ',';
        out += measure_name(m);
    }
    out += '\n';
    for (Measure mx : measures) {
        out += measure_name(mx);
        for (Measure my : measures) {
            out += ',';
            try {
                out += format_real(correlate(metrics, mx, my));
            } catch (const Error&) {
                out += "NA";
            }
        }
        out += '\n';
    }
    write_text(path, out);
}

void export_ranking_csv(std::span<const UnitMetrics> metrics, Measure measure, size_t top_n,
                        const std::filesystem::path& path) {
    std::string out = "rank,unit_id,";
    out += measure_name(measure);
    out += '\n';
    const auto ids = rank_units(metrics, measure, top_n);
    std::map<uint32_t, const UnitMetrics*> by_id;
    for (const UnitMetrics& m : metrics) by_id[m.unit_id] = &m;
    for (size_t r = 0; r < ids.size(); ++r) {
        out += std::to_string(r + 1);
        out += ',' + std::to_string(ids[r]);
        out += ',' + format_real(*measure_value(*by_id[ids[r]], measure));
        out += '\n';
    }
    write_text(path, out);
}

}  // namespace unitsel
