#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "unitsel/activation_store.hpp"
#include "unitsel/metrics.hpp"

namespace unitsel {

/// Which units to analyze: every unit, an explicit list, or a seeded random
/// sample (mirroring random unit sampling of large layers).
struct UnitSelection {
    enum class Mode { All, List, RandomSample };
    Mode mode = Mode::All;
    std::vector<uint32_t> list;   // List mode; deduplicated, sorted
    uint32_t sample_size = 0;     // RandomSample mode

    /// Accepts "all", "list:1,2,3" or "random:100".
    static UnitSelection parse(const std::string& text);
};

/// Concrete ascending unit ids for a dataset of n_units. Random sampling is
/// a seeded partial shuffle, deterministic across platforms.
std::vector<uint32_t> resolve_units(const UnitSelection& selection, uint32_t n_units,
                                    uint64_t seed);

struct BatchOptions {
    MetricsConfig metrics;
    uint32_t threads = 1;
    /// When set, only these image indices (ascending) of each unit vector
    /// are analyzed; pair with the matching filtered ClassIndex.
    std::optional<std::vector<uint32_t>> image_subset;
};

/// Streams unit vectors from a SELA v1 file and analyzes them in parallel.
/// Results come back in the given unit order regardless of thread count;
/// peak memory stays at a few unit vectors per worker.
std::vector<UnitMetrics> analyze_file(const std::filesystem::path& activations_path,
                                      const ClassIndex& labels, std::span<const uint32_t> units,
                                      const BatchOptions& options);

/// Same analysis over an in-memory dataset.
std::vector<UnitMetrics> analyze_dataset(const ActivationDataset& dataset,
                                         const ClassIndex& labels,
                                         std::span<const uint32_t> units,
                                         const BatchOptions& options);

}  // namespace unitsel
