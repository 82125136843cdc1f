#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "unitsel/dataset.hpp"

namespace unitsel {

enum class TieMode { Deterministic, Expected };

/// Exhaustive threshold enumeration for one unit: images sorted by
/// (activation descending, image index ascending), grouped into blocks of
/// equal value. Every threshold-based measure is an O(n) scan over the
/// blocks, and the candidate threshold set is exactly the distinct observed
/// values plus one sentinel above the maximum (empty positive set).
struct ThresholdSweep {
    uint32_t n_images = 0;
    uint32_t n_classes = 0;               // class-id space size
    std::vector<float> sorted_values;     // non-increasing
    std::vector<uint32_t> sorted_classes; // aligned to sorted_values
    std::vector<uint32_t> sorted_images;  // aligned; ascending within a block
    std::vector<uint32_t> block_start;    // one entry per distinct value, plus n_images

    size_t n_thresholds() const { return block_start.size() - 1; }
    float threshold(size_t block) const { return sorted_values[block_start[block]]; }
    /// Smallest representable value above the maximum: predicts nothing positive.
    float sentinel_threshold() const;
    /// Per-class count of images with activation >= threshold(block).
    /// O(prefix) reconstruction; for tests and diagnostics, not hot paths.
    std::vector<uint64_t> class_counts_at(size_t block) const;
};

ThresholdSweep build_sweep(const UnitActivations& acts, const ClassIndex& labels);

struct ClassValue {
    uint32_t class_id = 0;
    double value = 0.0;
    bool operator==(const ClassValue&) const = default;
};

/// Class whose members are all strictly more active than every non-member,
/// i.e. a localist ("grandmother") unit. At most one class can qualify.
std::optional<uint32_t> localist_class(const ThresholdSweep& sweep, const ClassIndex& labels);

/// Largest single-class share among the k most active images. Deterministic
/// mode resolves value ties by ascending image index; Expected mode gives
/// boundary-tied images fractional membership (uniform draw of the remaining
/// slots), which makes the result independent of image order.
ClassValue precision_topk(const ThresholdSweep& sweep, const ClassIndex& labels, uint32_t k,
                          TieMode mode);

/// Distinct classes among the k most active images (deterministic tie order).
uint32_t n_classes_topk(const ThresholdSweep& sweep, const ClassIndex& labels, uint32_t k);

/// Class-conditional mean activation selectivity (mu_A - mu_notA) /
/// (mu_A + mu_notA), ranked over classes by value; rank 1 is the most
/// selective class, rank 2 the runner-up. Classes whose denominator is <= 0
/// have no defined value; nullopt when no class at the requested rank does.
std::optional<ClassValue> ccmas(const UnitActivations& acts, const ClassIndex& labels, int rank);

/// For the class of the single most active image: fraction of its members
/// strictly above every other class's maximum. 1.0 is exactly the localist
/// case.
ClassValue recall_perfect_precision(const ThresholdSweep& sweep, const ClassIndex& labels);

/// Maximum recall over all (class, threshold) pairs subject to
/// precision >= target at that threshold (positives are activations >= t).
/// Ties prefer the lower class id; {lowest present class, 0.0} when no pair
/// is feasible.
ClassValue recall_at_precision(const ThresholdSweep& sweep, const ClassIndex& labels,
                               double target_precision);

struct InformednessPoint {
    uint32_t class_id = 0;
    float threshold = 0.0f;
    double informedness = 0.0;
    double recall = 0.0;
    double specificity = 0.0;
    double fallout = 0.0;              // FP / (FP + TN), the false-positive rate
    double false_discovery_rate = 0.0; // FP / (FP + TP); 0 when nothing is above threshold
};

/// Maximizes recall + specificity - 1 over all classes and thresholds.
/// Comparisons are exact (integer cross-multiplication), tie order: higher
/// recall, then lower threshold, then lower class id.
InformednessPoint max_informedness(const ThresholdSweep& sweep, const ClassIndex& labels);

struct ClassStats {
    uint32_t class_id = 0;
    double mean_in = 0.0;       // mean activation over class members
    double mean_out = 0.0;      // mean activation over non-members
    double prop_positive_in = 0.0;   // fraction of members with activation > 0
    double prop_positive_out = 0.0;  // fraction of non-members with activation > 0
};

ClassStats class_stats(const UnitActivations& acts, const ClassIndex& labels, uint32_t class_id);

struct MetricsConfig {
    uint32_t precision_k = 60;             // 100 is the common alternative
    double recall_precision_target = 0.95;
    TieMode tie_mode = TieMode::Expected;
};

/// One unit's full scorecard. Optional fields are typed outcomes: a missing
/// localist class means no class qualified, a missing CCMAS means the
/// denominator was not positive for any candidate.
struct UnitMetrics {
    uint32_t unit_id = 0;
    std::optional<uint32_t> localist;
    uint32_t precision_k = 0;
    ClassValue precision;
    uint32_t n_classes_in_topk = 0;
    std::optional<ClassValue> ccmas1;
    std::optional<ClassValue> ccmas2;
    ClassValue recall_perfect;
    double recall_precision_target = 0.0;
    ClassValue recall_at_target;
    InformednessPoint max_informedness;
    ClassStats stats;            // computed for the precision class
    std::optional<double> iou;   // attached from a dissection pass, if any
};

/// Runs every measure off a single sweep. Deterministic for fixed inputs and
/// config; requires at least two present classes and k <= n_images.
UnitMetrics analyze_unit(const UnitActivations& acts, const ClassIndex& labels,
                         const MetricsConfig& config);

}  // namespace unitsel
