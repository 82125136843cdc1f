#include "unitsel/dataset.hpp"

#include <cmath>

#include "unitsel/error.hpp"

namespace unitsel {

void ActivationDataset::validate() const {
    if (n_units == 0 || n_images == 0)
        throw InvalidArgument("degenerate dataset: n_units and n_images must be >= 1");
    const size_t expected = static_cast<size_t>(n_units) * n_images;
    if (values.size() != expected)
        throw InvalidArgument("dataset shape mismatch: expected " + std::to_string(expected) +
                              " values, have " + std::to_string(values.size()));
    for (size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            const uint32_t unit = static_cast<uint32_t>(i / n_images);
            const uint32_t image = static_cast<uint32_t>(i % n_images);
            throw InvalidArgument("non-finite activation at unit " + std::to_string(unit) +
                                  ", image " + std::to_string(image));
        }
    }
}

uint32_t ClassIndex::n_present_classes() const {
    uint32_t n = 0;
    for (uint32_t c : class_count)
        if (c > 0) ++n;
    return n;
}

uint32_t ClassIndex::lowest_present_class() const {
    for (uint32_t c = 0; c < class_count.size(); ++c)
        if (class_count[c] > 0) return c;
    throw InvalidArgument("class index has no present class");
}

void ClassIndex::validate() const {
    std::vector<uint64_t> recount(class_count.size(), 0);
    for (size_t i = 0; i < class_of.size(); ++i) {
        if (class_of[i] >= class_count.size())
            throw InvalidArgument("image " + std::to_string(i) + " has out-of-range class id " +
                                  std::to_string(class_of[i]));
        ++recount[class_of[i]];
    }
    uint64_t total = 0;
    for (size_t c = 0; c < class_count.size(); ++c) {
        if (recount[c] != class_count[c])
            throw InvalidArgument("class " + std::to_string(c) + " count mismatch: stored " +
                                  std::to_string(class_count[c]) + ", actual " +
                                  std::to_string(recount[c]));
        total += class_count[c];
    }
    if (total != class_of.size())
        throw InvalidArgument("class counts sum to " + std::to_string(total) + ", expected " +
                              std::to_string(class_of.size()));
    if (!class_name.empty() && class_name.size() != class_count.size())
        throw InvalidArgument("class_name size mismatch");
}

}  // namespace unitsel
