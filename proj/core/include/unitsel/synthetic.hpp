#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "unitsel/dataset.hpp"

namespace unitsel {

/// Pathological activation patterns used to stress the selectivity measures,
/// plus a seeded random generator for oracle and throughput testing. Images
/// are laid out class-major: image i belongs to class i / n_per_class.
enum class ScenarioKind {
    SingleActive,   // one image of class 0 at active_value, everything else 0
    Grandmother,    // every class-0 image at on_value, everything else 0
    UniformOffset,  // all images near baseline, class 0 shifted up by delta
    Random,         // seeded positive activations (exponential-shaped)
};

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::Grandmother;
    uint32_t n_classes = 10;
    uint32_t n_per_class = 100;
    uint32_t n_units = 1;
    float active_value = 1.0f;  // SingleActive
    float on_value = 1.0f;      // Grandmother
    // UniformOffset: the default baseline inverts delta/(2b+delta) for a 0.06
    // selectivity score at delta = 0.1.
    double baseline = 47.0 / 60.0;
    double delta = 0.1;
    double jitter_scale = -1.0;  // <0 picks the default 0.01*delta; 0 disables
    double noise_scale = 1.0;    // Random: mean of the positive draws
    uint64_t seed = 0;
};

const char* scenario_name(ScenarioKind kind);
ScenarioKind scenario_from_name(const std::string& name);

/// In-memory generation. Deterministic: equal specs produce equal datasets.
std::pair<ActivationDataset, ClassIndex> generate(const ScenarioSpec& spec);

/// Streams the same dataset to a SELA v1 file plus labels CSV without
/// holding more than one unit vector; byte-identical to write_activations
/// over generate(spec).
void generate_to_files(const ScenarioSpec& spec, const std::filesystem::path& activations_path,
                       const std::filesystem::path& labels_path);

/// Single-unit vector for unit `unit_id` of the scenario (used by both
/// generation paths).
void fill_unit(const ScenarioSpec& spec, uint32_t unit_id, std::vector<float>& out);

ClassIndex scenario_labels(const ScenarioSpec& spec);

}  // namespace unitsel
