#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "unitsel/dataset.hpp"
#include "unitsel/hash.hpp"
#include "unitsel/metrics.hpp"

namespace unitsel {

/// Measures a layer summary, ranking, or correlation can select from a
/// UnitMetrics scorecard. Ccmas/Ccmas2 may be undefined for a unit; such
/// units are excluded from statistics and counted separately.
enum class Measure {
    Precision,
    NClassesTopk,
    Ccmas,
    Ccmas2,
    RecallPerfect,
    RecallAtPrecision,
    MaxInformedness,
    MiRecall,
    MiSpecificity,
    MiFallout,
    MiFdr,
};

const char* measure_name(Measure m);
Measure measure_from_name(const std::string& name);
std::span<const Measure> all_measures();
std::optional<double> measure_value(const UnitMetrics& metrics, Measure m);

// --- jitterplots -----------------------------------------------------------

struct HighlightSpec {
    uint32_t class_id = 0;
    std::string marker = "square";  // circle|square|diamond|triangle|star|pentagon
};

struct RuleAnnotation {
    std::string label;
    double x = 0.0;
};

struct JitterplotOptions {
    uint64_t seed = 0;
    uint32_t width = 840;
    uint32_t height = 420;
    std::string title;  // defaults to "unit <id>"
};

/// Stable per-point vertical jitter: a hash of (seed, unit, image), not an
/// RNG stream, so a point keeps its y-value under any subsetting.
inline double jitter_y(uint64_t seed, uint32_t unit_id, uint32_t image) {
    return unit_interval(hash_combine(hash_combine(seed, unit_id), image));
}

/// The deterministic point cloud behind a jitterplot: one (activation,
/// jitter) point per image, plus the highlight and rule annotations to draw.
struct JitterPoint {
    uint32_t image = 0;
    uint32_t class_id = 0;
    float activation = 0.0f;
    double jitter = 0.0;  // in [0, 1)
};

struct JitterplotData {
    uint32_t unit_id = 0;
    std::vector<JitterPoint> points;  // image order; size == n_images
    std::vector<HighlightSpec> highlights;
    std::vector<RuleAnnotation> annotations;
};

JitterplotData build_jitterplot_data(const UnitActivations& acts, const ClassIndex& labels,
                                     std::span<const HighlightSpec> highlights,
                                     std::span<const RuleAnnotation> annotations, uint64_t seed);

/// Deterministic SVG 1.1 scatter of activation (x) against arbitrary jitter
/// (y), one point per image. Highlighted classes are drawn last with their
/// own marker shapes; annotations become labelled vertical rules.
std::string render_jitterplot_svg(const JitterplotData& data, const JitterplotOptions& options);

std::string jitterplot_svg(const UnitActivations& acts, const ClassIndex& labels,
                           std::span<const HighlightSpec> highlights,
                           std::span<const RuleAnnotation> annotations,
                           const JitterplotOptions& options);

// --- layer summaries -------------------------------------------------------

/// Box-plot style five-number summary plus mean/standard error. Quartiles
/// interpolate linearly between order statistics; whiskers reach the most
/// extreme data within 1.5 IQR of the quartiles (Tukey), the rest are
/// outliers.
struct LayerSummary {
    size_t n = 0;
    size_t undefined_count = 0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double whisker_low = 0.0;
    double whisker_high = 0.0;
    double mean = 0.0;
    double standard_error = 0.0;
    std::vector<double> outliers;
};

LayerSummary layer_summary(std::span<const UnitMetrics> metrics, Measure measure);
LayerSummary summarize_values(std::span<const double> values, size_t undefined_count);

// --- correlations and rankings ---------------------------------------------

/// Pearson product-moment correlation; requires >= 3 pairs and nonzero
/// variance on both sides.
double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation across units where both measures are defined.
double correlate(std::span<const UnitMetrics> metrics, Measure x, Measure y);

/// Unit ids ordered by descending measure value (ties by ascending unit id),
/// undefined values excluded, truncated to top_n (0 = no limit).
std::vector<uint32_t> rank_units(std::span<const UnitMetrics> metrics, Measure measure,
                                 size_t top_n);

// --- CSV emission ----------------------------------------------------------

/// One row per unit, fixed column order, 6 significant digits, "NA" for
/// undefined cells. Re-ingestable via parse_metrics_csv.
void export_metrics_csv(std::span<const UnitMetrics> metrics, const std::filesystem::path& path);
std::vector<UnitMetrics> parse_metrics_csv(const std::filesystem::path& path);

void export_summary_csv(std::span<const UnitMetrics> metrics, std::span<const Measure> measures,
                        const std::filesystem::path& path);

/// Correlation matrix over the given measures; cells that cannot be computed
/// (undefined pairs, zero variance) are "NA".
void export_correlation_csv(std::span<const UnitMetrics> metrics,
                            std::span<const Measure> measures,
                            const std::filesystem::path& path);

void export_ranking_csv(std::span<const UnitMetrics> metrics, Measure measure, size_t top_n,
                        const std::filesystem::path& path);

/// Locale-independent shortest-faithful formatting at 6 significant digits.
std::string format_real(double value);

}  // namespace unitsel
