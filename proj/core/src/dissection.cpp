#include "unitsel/dissection.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <string>

#include "io_util.hpp"
#include "unitsel/activation_store.hpp"
#include "unitsel/error.hpp"

namespace unitsel {

namespace {

void validate_stack(const ActivationMapStack& stack) {
    if (stack.n_images == 0 || stack.height == 0 || stack.width == 0)
        throw InvalidArgument("empty activation map stack");
    const size_t expected = static_cast<size_t>(stack.n_images) * stack.height * stack.width;
    if (stack.maps.size() != expected)
        throw InvalidArgument("map stack size mismatch for unit " + std::to_string(stack.unit_id));
}

}  // namespace

float binarize_threshold(const ActivationMapStack& stack, double top_fraction) {
    validate_stack(stack);
    if (!(top_fraction > 0.0) || !(top_fraction < 1.0))
        throw InvalidArgument("top_fraction must be in (0, 1)");

    std::vector<float> pooled(stack.maps);
    std::sort(pooled.begin(), pooled.end(), std::greater<float>());
    const double budget = top_fraction * static_cast<double>(pooled.size());

    // For a distinct value starting at index i (descending order) exactly i
    // pixels lie strictly above it. The smallest admissible value is the one
    // with the largest block start still within budget.
    float threshold = pooled[0];
    for (size_t i = 0; i < pooled.size();) {
        if (static_cast<double>(i) > budget) break;
        threshold = pooled[i];
        size_t j = i;
        while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
        i = j;
    }
    return threshold;
}

std::vector<float> upsample_bilinear(std::span<const float> src, uint32_t src_h, uint32_t src_w,
                                     uint32_t dst_h, uint32_t dst_w) {
    if (src.size() != static_cast<size_t>(src_h) * src_w)
        throw InvalidArgument("source grid size mismatch");
    if (dst_h < src_h || dst_w < src_w)
        throw InvalidArgument("upsample target smaller than source");

    std::vector<float> out(static_cast<size_t>(dst_h) * dst_w);
    const double sy = dst_h > 1 ? static_cast<double>(src_h - 1) / (dst_h - 1) : 0.0;
    const double sx = dst_w > 1 ? static_cast<double>(src_w - 1) / (dst_w - 1) : 0.0;
    for (uint32_t y = 0; y < dst_h; ++y) {
        const double fy = y * sy;
        const uint32_t y0 = static_cast<uint32_t>(fy);
        const uint32_t y1 = std::min(y0 + 1, src_h - 1);
        const double ty = fy - y0;
        for (uint32_t x = 0; x < dst_w; ++x) {
            const double fx = x * sx;
            const uint32_t x0 = static_cast<uint32_t>(fx);
            const uint32_t x1 = std::min(x0 + 1, src_w - 1);
            const double tx = fx - x0;
            const double v00 = src[static_cast<size_t>(y0) * src_w + x0];
            const double v01 = src[static_cast<size_t>(y0) * src_w + x1];
            const double v10 = src[static_cast<size_t>(y1) * src_w + x0];
            const double v11 = src[static_cast<size_t>(y1) * src_w + x1];
            const double top = v00 + (v01 - v00) * tx;
            const double bottom = v10 + (v11 - v10) * tx;
            out[static_cast<size_t>(y) * dst_w + x] = static_cast<float>(top + (bottom - top) * ty);
        }
    }
    return out;
}

double mask_iou(std::span<const uint8_t> a, std::span<const uint8_t> b) {
    if (a.size() != b.size()) throw InvalidArgument("mask dimension mismatch");
    uint64_t intersection = 0, uni = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        intersection += a[i] & b[i];
        uni += a[i] | b[i];
    }
    if (uni == 0) return 0.0;  // both silent: no alignment evidence
    return static_cast<double>(intersection) / static_cast<double>(uni);
}

DissectionResult dissect_unit(const ActivationMapStack& stack,
                              std::span<const ConceptMaskSet> concepts, double top_fraction) {
    validate_stack(stack);
    if (concepts.empty()) throw InvalidArgument("no concepts supplied");
    for (const ConceptMaskSet& c : concepts) {
        if (c.n_images != stack.n_images)
            throw InvalidArgument("concept " + std::to_string(c.concept_id) + " covers " +
                                  std::to_string(c.n_images) + " images, stack has " +
                                  std::to_string(stack.n_images));
        if (c.height < stack.height || c.width < stack.width)
            throw InvalidArgument("concept " + std::to_string(c.concept_id) +
                                  " mask resolution below the activation map");
    }

    const float threshold = binarize_threshold(stack, top_fraction);

    DissectionResult best;
    best.unit_id = stack.unit_id;
    best.binarization_threshold = threshold;
    best.iou = -1.0;

    std::vector<uint8_t> binary;
    for (const ConceptMaskSet& mask_set : concepts) {
        uint64_t intersection = 0, uni = 0;
        for (uint32_t img = 0; img < stack.n_images; ++img) {
            const auto upsampled = upsample_bilinear(stack.map(img), stack.height, stack.width,
                                                     mask_set.height, mask_set.width);
            binary.resize(upsampled.size());
            for (size_t p = 0; p < upsampled.size(); ++p)
                binary[p] = upsampled[p] > threshold ? 1 : 0;
            const auto mask = mask_set.mask(img);
            for (size_t p = 0; p < binary.size(); ++p) {
                intersection += binary[p] & mask[p];
                uni += binary[p] | mask[p];
            }
        }
        const double iou = uni == 0 ? 0.0 : static_cast<double>(intersection) / static_cast<double>(uni);
        if (iou > best.iou || (iou == best.iou && mask_set.concept_id < best.best_concept)) {
            best.iou = iou;
            best.best_concept = mask_set.concept_id;
        }
    }
    best.is_detector = is_detector(best.iou);
    return best;
}

namespace {

constexpr size_t kRecordDimsBytes = 8;

void write_maps_container(const std::filesystem::path& path, uint32_t n_major, uint32_t n_images,
                          const std::function<void(uint32_t, uint32_t, std::string&)>& emit) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    std::string header;
    header += "SELA";
    header.push_back(static_cast<char>(kSelaVersionMaps));
    header.append(3, '\0');
    detail::put_u32le(header, n_major);
    detail::put_u32le(header, n_images);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    std::string record;
    for (uint32_t m = 0; m < n_major; ++m) {
        for (uint32_t i = 0; i < n_images; ++i) {
            record.clear();
            emit(m, i, record);
            out.write(record.data(), static_cast<std::streamsize>(record.size()));
        }
    }
    if (!out) throw IoError("write failed: " + path.string());
}

struct MapsFile {
    uint32_t n_major = 0;
    uint32_t n_images = 0;
    std::ifstream stream;
};

MapsFile open_maps(const std::filesystem::path& path) {
    MapsFile f;
    f.stream.open(path, std::ios::binary);
    if (!f.stream) throw IoError("cannot open " + path.string());
    unsigned char raw[kSelaHeaderSize];
    f.stream.read(reinterpret_cast<char*>(raw), kSelaHeaderSize);
    if (f.stream.gcount() != static_cast<std::streamsize>(kSelaHeaderSize))
        throw ParseError(path.string() + ": malformed header");
    if (std::memcmp(raw, "SELA", 4) != 0)
        throw ParseError(path.string() + ": malformed header, bad magic at byte 0");
    if (raw[4] != kSelaVersionMaps)
        throw ParseError(path.string() + ": unsupported format version " + std::to_string(raw[4]) +
                         " (expected " + std::to_string(kSelaVersionMaps) + ")");
    f.n_major = detail::get_u32le(raw + 8);
    f.n_images = detail::get_u32le(raw + 12);
    if (f.n_major == 0 || f.n_images == 0)
        throw ParseError(path.string() + ": malformed header, zero dimension");
    return f;
}

// Reads one record's grid; checks dims against the stack-wide expectation.
void read_record(MapsFile& f, const std::filesystem::path& path, uint32_t major, uint32_t image,
                 uint32_t& h, uint32_t& w, std::vector<float>& grid) {
    unsigned char dims[kRecordDimsBytes];
    detail::read_exact(f.stream, dims, kRecordDimsBytes,
                       "record dims (major " + std::to_string(major) + ", image " +
                           std::to_string(image) + ")");
    const uint32_t rh = detail::get_u32le(dims);
    const uint32_t rw = detail::get_u32le(dims + 4);
    if (rh == 0 || rw == 0)
        throw ParseError(path.string() + ": zero map dimension at record (" +
                         std::to_string(major) + ", " + std::to_string(image) + ")");
    if (image == 0) {
        h = rh;
        w = rw;
    } else if (rh != h || rw != w) {
        throw ParseError(path.string() + ": inconsistent map dims within record " +
                         std::to_string(major));
    }
    const size_t cells = static_cast<size_t>(rh) * rw;
    std::vector<unsigned char> buf(cells * 4);
    detail::read_exact(f.stream, buf.data(), buf.size(),
                       "record payload (major " + std::to_string(major) + ", image " +
                           std::to_string(image) + ")");
    grid.resize(cells);
    detail::decode_f32le(buf.data(), cells, grid.data());
    for (size_t p = 0; p < cells; ++p)
        if (!std::isfinite(grid[p]))
            throw ParseError(path.string() + ": non-finite value in record (" +
                             std::to_string(major) + ", " + std::to_string(image) + ")");
}

}  // namespace

std::vector<ActivationMapStack> load_map_stacks(const std::filesystem::path& path) {
    MapsFile f = open_maps(path);
    std::vector<ActivationMapStack> stacks(f.n_major);
    std::vector<float> grid;
    for (uint32_t m = 0; m < f.n_major; ++m) {
        ActivationMapStack& stack = stacks[m];
        stack.unit_id = m;
        stack.n_images = f.n_images;
        for (uint32_t i = 0; i < f.n_images; ++i) {
            read_record(f, path, m, i, stack.height, stack.width, grid);
            stack.maps.insert(stack.maps.end(), grid.begin(), grid.end());
        }
    }
    return stacks;
}

void write_map_stacks(std::span<const ActivationMapStack> stacks,
                      const std::filesystem::path& path) {
    if (stacks.empty()) throw InvalidArgument("no map stacks to write");
    const uint32_t n_images = stacks.front().n_images;
    for (const ActivationMapStack& s : stacks) {
        validate_stack(s);
        if (s.n_images != n_images) throw InvalidArgument("stacks disagree on image count");
    }
    write_maps_container(path, static_cast<uint32_t>(stacks.size()), n_images,
                         [&](uint32_t m, uint32_t i, std::string& record) {
                             const ActivationMapStack& s = stacks[m];
                             detail::put_u32le(record, s.height);
                             detail::put_u32le(record, s.width);
                             for (float v : s.map(i)) detail::put_f32le(record, v);
                         });
}

std::vector<ConceptMaskSet> load_concept_masks(const std::filesystem::path& masks_path,
                                               const std::filesystem::path& concepts_csv_path) {
    // names first: record count must match
    const std::string text = detail::read_text_file(concepts_csv_path);
    std::vector<std::string> names;
    bool saw_header = false;
    size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        ++line_no;
        const std::string_view line = detail::strip_cr(std::string_view(text).substr(pos, end - pos));
        pos = end + 1;
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != "concept_id,name")
                throw ParseError(concepts_csv_path.string() +
                                 ": line 1: expected header 'concept_id,name'");
            saw_header = true;
            continue;
        }
        const auto fields = detail::split_csv(line);
        if (fields.size() != 2)
            throw ParseError(concepts_csv_path.string() + ": line " + std::to_string(line_no) +
                             ": expected 2 fields");
        const uint32_t id = detail::parse_number<uint32_t>(fields[0], "concept_id", line_no);
        if (id != names.size())
            throw ParseError(concepts_csv_path.string() + ": line " + std::to_string(line_no) +
                             ": concept ids must be dense and ordered");
        names.emplace_back(fields[1]);
    }
    if (!saw_header) throw ParseError(concepts_csv_path.string() + ": empty file");

    MapsFile f = open_maps(masks_path);
    if (f.n_major != names.size())
        throw ParseError(masks_path.string() + ": has " + std::to_string(f.n_major) +
                         " concepts, csv names " + std::to_string(names.size()));

    std::vector<ConceptMaskSet> concepts(f.n_major);
    std::vector<float> grid;
    for (uint32_t m = 0; m < f.n_major; ++m) {
        ConceptMaskSet& c = concepts[m];
        c.concept_id = m;
        c.name = names[m];
        c.n_images = f.n_images;
        for (uint32_t i = 0; i < f.n_images; ++i) {
            read_record(f, masks_path, m, i, c.height, c.width, grid);
            for (size_t p = 0; p < grid.size(); ++p) {
                if (grid[p] != 0.0f && grid[p] != 1.0f)
                    throw ParseError(masks_path.string() + ": non-binary mask value in record (" +
                                     std::to_string(m) + ", " + std::to_string(i) + ")");
                c.masks.push_back(grid[p] == 1.0f ? 1 : 0);
            }
        }
    }
    return concepts;
}

void write_concept_masks(std::span<const ConceptMaskSet> concepts,
                         const std::filesystem::path& masks_path,
                         const std::filesystem::path& concepts_csv_path) {
    if (concepts.empty()) throw InvalidArgument("no concepts to write");
    const uint32_t n_images = concepts.front().n_images;
    for (const ConceptMaskSet& c : concepts)
        if (c.n_images != n_images) throw InvalidArgument("concepts disagree on image count");

    write_maps_container(masks_path, static_cast<uint32_t>(concepts.size()), n_images,
                         [&](uint32_t m, uint32_t i, std::string& record) {
                             const ConceptMaskSet& c = concepts[m];
                             detail::put_u32le(record, c.height);
                             detail::put_u32le(record, c.width);
                             for (uint8_t v : c.mask(i))
                                 detail::put_f32le(record, v ? 1.0f : 0.0f);
                         });

    std::string csv = "concept_id,name\n";
    for (const ConceptMaskSet& c : concepts) {
        csv += std::to_string(c.concept_id);
        csv += ',';
        csv += c.name;
        csv += '\n';
    }
    std::ofstream out(concepts_csv_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + concepts_csv_path.string());
    out.write(csv.data(), static_cast<std::streamsize>(csv.size()));
    if (!out) throw IoError("write failed: " + concepts_csv_path.string());
}

}  // namespace unitsel
