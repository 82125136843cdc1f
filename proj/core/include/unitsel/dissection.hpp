#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "unitsel/dataset.hpp"

namespace unitsel {

/// Per-image spatial activation grids for one convolutional unit, row-major,
/// shared h x w.
struct ActivationMapStack {
    uint32_t unit_id = 0;
    uint32_t n_images = 0;
    uint32_t height = 0;
    uint32_t width = 0;
    std::vector<float> maps;  // n_images * height * width

    std::span<const float> map(uint32_t image) const {
        const size_t cell = static_cast<size_t>(height) * width;
        return std::span<const float>(maps).subspan(image * cell, cell);
    }
};

/// Per-image binary concept-location masks, pixel 1 where the concept occurs.
struct ConceptMaskSet {
    uint32_t concept_id = 0;
    std::string name;
    uint32_t n_images = 0;
    uint32_t height = 0;
    uint32_t width = 0;
    std::vector<uint8_t> masks;  // n_images * height * width, strictly 0/1

    std::span<const uint8_t> mask(uint32_t image) const {
        const size_t cell = static_cast<size_t>(height) * width;
        return std::span<const uint8_t>(masks).subspan(image * cell, cell);
    }
};

struct DissectionResult {
    uint32_t unit_id = 0;
    uint32_t best_concept = 0;
    double iou = 0.0;
    bool is_detector = false;
    float binarization_threshold = 0.0f;
};

/// A unit whose best concept IoU exceeds this is flagged as a detector.
inline constexpr double kDetectorIouThreshold = 0.04;
inline bool is_detector(double iou) { return iou > kDetectorIouThreshold; }

/// Smallest pooled activation value v such that the fraction of the unit's
/// pixels strictly above v is at most top_fraction.
float binarize_threshold(const ActivationMapStack& stack, double top_fraction);

/// Corner-aligned bilinear upsampling; target must be at least the source
/// size in both dimensions. Constant inputs stay constant and outputs never
/// leave the input value range.
std::vector<float> upsample_bilinear(std::span<const float> src, uint32_t src_h, uint32_t src_w,
                                     uint32_t dst_h, uint32_t dst_w);

/// Intersection over union of two equally sized binary masks; 0 when both
/// are empty.
double mask_iou(std::span<const uint8_t> a, std::span<const uint8_t> b);

/// Full dissection of one unit: pooled-quantile threshold, bilinear upsample
/// to each concept's resolution, binarize (strictly above threshold), then
/// dataset-aggregated IoU (sum of intersections over sum of unions across
/// images). Best concept by IoU, ties to the lower concept id.
DissectionResult dissect_unit(const ActivationMapStack& stack,
                              std::span<const ConceptMaskSet> concepts, double top_fraction);

// SELA v2 containers (see activation_store.hpp for the header layout).
std::vector<ActivationMapStack> load_map_stacks(const std::filesystem::path& path);
void write_map_stacks(std::span<const ActivationMapStack> stacks,
                      const std::filesystem::path& path);
/// Masks travel in the same container with concept index in the unit slot;
/// values must be exactly 0.0 or 1.0. Names come from a `concept_id,name`
/// CSV aligned to record order.
std::vector<ConceptMaskSet> load_concept_masks(const std::filesystem::path& masks_path,
                                               const std::filesystem::path& concepts_csv_path);
void write_concept_masks(std::span<const ConceptMaskSet> concepts,
                         const std::filesystem::path& masks_path,
                         const std::filesystem::path& concepts_csv_path);

}  // namespace unitsel
