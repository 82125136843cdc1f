#pragma once

// Shared fixtures for the test binaries: scratch directories, tiny dataset
// builders, and file byte helpers.

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "unitsel/dataset.hpp"

namespace testutil {

class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag) {
        static std::atomic<uint64_t> counter{0};
        const auto base = std::filesystem::temp_directory_path();
        path_ = base / ("unitsel_" + tag + "_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline size_t count_occurrences(const std::string& text, const std::string& needle) {
    size_t count = 0, pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

/// Class index with the given per-class member counts, images laid out
/// class-major.
inline unitsel::ClassIndex make_labels(const std::vector<uint32_t>& counts) {
    unitsel::ClassIndex idx;
    idx.class_count = counts;
    for (uint32_t c = 0; c < counts.size(); ++c)
        for (uint32_t i = 0; i < counts[c]; ++i) idx.class_of.push_back(c);
    return idx;
}

inline unitsel::UnitActivations make_unit(std::vector<float> values, uint32_t unit_id = 0) {
    return unitsel::UnitActivations{unit_id, std::move(values)};
}

inline unitsel::ActivationDataset make_dataset(uint32_t n_units, uint32_t n_images,
                                               std::vector<float> values) {
    unitsel::ActivationDataset d;
    d.n_units = n_units;
    d.n_images = n_images;
    d.values = std::move(values);
    return d;
}

}  // namespace testutil
