#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <utility>
#include <vector>

#include "unitsel/dataset.hpp"

namespace unitsel {

// SELA container: "SELA" magic, version byte, 3 reserved zero bytes, then
// n_units and n_images as u32 little-endian (16-byte header total).
//   version 0x01: unit-major contiguous f32-LE scalars (one per image).
//   version 0x02: per (unit, image) record, two u32-LE dims h,w followed
//                 by h*w f32-LE values (spatial maps; see dissection.hpp).
inline constexpr size_t kSelaHeaderSize = 16;
inline constexpr uint8_t kSelaVersionScalar = 0x01;
inline constexpr uint8_t kSelaVersionMaps = 0x02;

enum class ActivationFormat { BinaryV1, Csv };

/// Full in-memory load. BinaryV1 is the bit-exact SELA v1 format; Csv is a
/// `unit,image,value` triplet table that must cover the matrix densely.
ActivationDataset load_activations(const std::filesystem::path& path, ActivationFormat format);

/// Emit SELA v1. Round-trips bit-exactly through load_activations and is
/// byte-deterministic for a given dataset.
void write_activations(const ActivationDataset& dataset, const std::filesystem::path& path);

/// Labels CSV: header `image_id,class_id[,class_name]`, LF newlines, dense
/// image ids 0..n-1, dense nonempty class ids.
ClassIndex load_labels(const std::filesystem::path& path);
void write_labels(const ClassIndex& labels, const std::filesystem::path& path);

/// Predictions CSV: header `image_id,predicted_class_id`, dense image ids.
std::vector<uint32_t> load_predictions(const std::filesystem::path& path);

/// Retains exactly the images whose prediction matches the label, with image
/// indices re-densified. Classes that lose all images keep their id with a
/// zero count. Throws InvalidArgument when nothing survives.
std::pair<ActivationDataset, ClassIndex> filter_correct(const ActivationDataset& dataset,
                                                        const ClassIndex& labels,
                                                        const std::vector<uint32_t>& predictions);

/// Label-side half of filter_correct: kept image indices (ascending) plus the
/// filtered index. Used by the streaming analyzer, which never holds the
/// whole matrix.
std::pair<std::vector<uint32_t>, ClassIndex> filter_correct_labels(
    const ClassIndex& labels, const std::vector<uint32_t>& predictions);

/// Value-snapshot copy of one unit's activation vector.
UnitActivations slice_unit(const ActivationDataset& dataset, uint32_t unit_id);

/// Streaming reader over a SELA v1 file: one unit vector at a time, so peak
/// memory stays at one unit vector regardless of matrix size. Not thread
/// safe; give each worker its own reader.
class ActivationFileReader {
public:
    explicit ActivationFileReader(const std::filesystem::path& path);

    uint32_t n_units() const { return n_units_; }
    uint32_t n_images() const { return n_images_; }

    /// Reads unit `unit_id` into `out` (resized to n_images). Validates
    /// finiteness like the full loader.
    void read_unit(uint32_t unit_id, std::vector<float>& out);

private:
    std::filesystem::path path_;
    std::ifstream stream_;
    uint32_t n_units_ = 0;
    uint32_t n_images_ = 0;
};

/// Streaming SELA v1 writer: header up front, then unit vectors in order.
class ActivationFileWriter {
public:
    ActivationFileWriter(const std::filesystem::path& path, uint32_t n_units, uint32_t n_images);
    void write_unit(std::span<const float> values);
    void finish();  // flushes and verifies all units were written
    ~ActivationFileWriter();

private:
    std::filesystem::path path_;
    std::ofstream stream_;
    uint32_t n_units_ = 0;
    uint32_t n_images_ = 0;
    uint32_t written_ = 0;
    bool finished_ = false;
};

}  // namespace unitsel
