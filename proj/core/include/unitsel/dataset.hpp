#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace unitsel {

/// Dense unit-major activation matrix. Each unit's activations form one
/// contiguous run aligned to image order 0..n_images-1, so per-unit scans
/// are sequential reads. All values are finite; validate() enforces that.
struct ActivationDataset {
    uint32_t n_units = 0;
    uint32_t n_images = 0;
    std::vector<float> values;  // n_units * n_images entries

    std::span<const float> unit(uint32_t unit_id) const {
        return std::span<const float>(values).subspan(
            static_cast<size_t>(unit_id) * n_images, n_images);
    }
    float at(uint32_t unit_id, uint32_t image) const {
        return values[static_cast<size_t>(unit_id) * n_images + image];
    }

    void validate() const;  // throws InvalidArgument on shape/NaN violations

    bool operator==(const ActivationDataset&) const = default;
};

/// Image -> class assignment over an already-filtered image set.
/// Class ids are dense at load time; after filter_correct some counts may
/// drop to zero (the class id space is kept stable, absent classes have
/// count 0).
struct ClassIndex {
    std::vector<uint32_t> class_of;       // image index -> class id
    std::vector<uint32_t> class_count;    // class id -> member count
    std::vector<std::string> class_name;  // optional; empty or size n_classes

    uint32_t n_images() const { return static_cast<uint32_t>(class_of.size()); }
    uint32_t n_classes() const { return static_cast<uint32_t>(class_count.size()); }
    uint32_t n_present_classes() const;
    uint32_t lowest_present_class() const;  // throws if no class present

    void validate() const;  // counts consistent with class_of and sum to n_images

    bool operator==(const ClassIndex&) const = default;
};

/// One unit's activation vector, value-snapshot semantics: mutating the
/// source dataset after slicing does not affect this copy.
struct UnitActivations {
    uint32_t unit_id = 0;
    std::vector<float> values;  // aligned to image order
};

}  // namespace unitsel
