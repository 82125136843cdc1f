#include "unitsel/activation_store.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "io_util.hpp"
#include "unitsel/error.hpp"

namespace unitsel {

namespace {

constexpr uint32_t kMaxDim = 0x7fffffff;  // keeps exact integer arithmetic in range

std::string encode_header(uint8_t version, uint32_t n_units, uint32_t n_images) {
    std::string h;
    h.reserve(kSelaHeaderSize);
    h += "SELA";
    h.push_back(static_cast<char>(version));
    h.append(3, '\0');
    detail::put_u32le(h, n_units);
    detail::put_u32le(h, n_images);
    return h;
}

struct SelaHeader {
    uint8_t version;
    uint32_t n_units;
    uint32_t n_images;
};

SelaHeader read_header(std::ifstream& stream, const std::filesystem::path& path,
                       uint8_t expected_version) {
    unsigned char raw[kSelaHeaderSize];
    stream.read(reinterpret_cast<char*>(raw), kSelaHeaderSize);
    if (stream.gcount() != static_cast<std::streamsize>(kSelaHeaderSize))
        throw ParseError(path.string() + ": malformed header, file shorter than " +
                         std::to_string(kSelaHeaderSize) + " bytes");
    if (std::memcmp(raw, "SELA", 4) != 0)
        throw ParseError(path.string() + ": malformed header, bad magic at byte 0");
    SelaHeader h;
    h.version = raw[4];
    if (h.version != expected_version)
        throw ParseError(path.string() + ": unsupported format version " +
                         std::to_string(h.version) + " (expected " +
                         std::to_string(expected_version) + ")");
    h.n_units = detail::get_u32le(raw + 8);
    h.n_images = detail::get_u32le(raw + 12);
    if (h.n_units == 0 || h.n_images == 0)
        throw ParseError(path.string() + ": malformed header, zero dimension");
    if (h.n_units > kMaxDim || h.n_images > kMaxDim)
        throw ParseError(path.string() + ": dimension exceeds supported maximum");
    return h;
}

ActivationDataset load_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const SelaHeader h = read_header(in, path, kSelaVersionScalar);

    const uint64_t n_values = static_cast<uint64_t>(h.n_units) * h.n_images;
    const uint64_t expected_size = kSelaHeaderSize + n_values * 4;
    const uint64_t actual_size = std::filesystem::file_size(path);
    if (actual_size != expected_size)
        throw ParseError(path.string() + ": truncated payload, expected " +
                         std::to_string(expected_size) + " bytes, found " +
                         std::to_string(actual_size));

    ActivationDataset d;
    d.n_units = h.n_units;
    d.n_images = h.n_images;
    d.values.resize(n_values);

    std::vector<unsigned char> buf(static_cast<size_t>(h.n_images) * 4);
    for (uint32_t u = 0; u < h.n_units; ++u) {
        detail::read_exact(in, buf.data(), buf.size(), "unit " + std::to_string(u));
        float* dst = d.values.data() + static_cast<size_t>(u) * h.n_images;
        detail::decode_f32le(buf.data(), h.n_images, dst);
        for (uint32_t i = 0; i < h.n_images; ++i) {
            if (!std::isfinite(dst[i])) {
                const uint64_t offset =
                    kSelaHeaderSize + (static_cast<uint64_t>(u) * h.n_images + i) * 4;
                throw ParseError(path.string() + ": non-finite value at unit " +
                                 std::to_string(u) + ", image " + std::to_string(i) +
                                 " (byte offset " + std::to_string(offset) + ")");
            }
        }
    }
    return d;
}

ActivationDataset load_csv(const std::filesystem::path& path) {
    const std::string text = detail::read_text_file(path);

    struct Entry {
        uint32_t unit, image;
        float value;
    };
    std::vector<Entry> entries;
    uint32_t max_unit = 0, max_image = 0;

    size_t pos = 0, line_no = 0;
    bool saw_header = false;
    while (pos < text.size()) {
        size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        ++line_no;
        const std::string_view line = detail::strip_cr(std::string_view(text).substr(pos, end - pos));
        pos = end + 1;
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != "unit,image,value")
                throw ParseError(path.string() + ": line 1: expected header 'unit,image,value'");
            saw_header = true;
            continue;
        }
        const auto fields = detail::split_csv(line);
        if (fields.size() != 3)
            throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                             ": expected 3 fields, got " + std::to_string(fields.size()));
        Entry e;
        e.unit = detail::parse_number<uint32_t>(fields[0], "unit", line_no);
        e.image = detail::parse_number<uint32_t>(fields[1], "image", line_no);
        e.value = detail::parse_number<float>(fields[2], "value", line_no);
        if (!std::isfinite(e.value))
            throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                             ": non-finite value at unit " + std::to_string(e.unit) + ", image " +
                             std::to_string(e.image));
        max_unit = std::max(max_unit, e.unit);
        max_image = std::max(max_image, e.image);
        entries.push_back(e);
    }
    if (!saw_header) throw ParseError(path.string() + ": empty file");
    if (entries.empty()) throw ParseError(path.string() + ": no data rows");
    if (max_unit >= kMaxDim || max_image >= kMaxDim)
        throw ParseError(path.string() + ": index exceeds supported maximum");

    ActivationDataset d;
    d.n_units = max_unit + 1;
    d.n_images = max_image + 1;
    const uint64_t n_values = static_cast<uint64_t>(d.n_units) * d.n_images;
    if (entries.size() != n_values)
        throw ParseError(path.string() + ": sparse matrix, got " + std::to_string(entries.size()) +
                         " rows for a " + std::to_string(d.n_units) + "x" +
                         std::to_string(d.n_images) + " matrix");
    d.values.resize(n_values);
    std::vector<uint8_t> seen(n_values, 0);
    for (const Entry& e : entries) {
        const size_t idx = static_cast<size_t>(e.unit) * d.n_images + e.image;
        if (seen[idx])
            throw ParseError(path.string() + ": duplicate cell unit " + std::to_string(e.unit) +
                             ", image " + std::to_string(e.image));
        seen[idx] = 1;
        d.values[idx] = e.value;
    }
    return d;
}

}  // namespace

ActivationDataset load_activations(const std::filesystem::path& path, ActivationFormat format) {
    switch (format) {
        case ActivationFormat::BinaryV1:
            return load_binary(path);
        case ActivationFormat::Csv:
            return load_csv(path);
    }
    throw InvalidArgument("unknown activation format");
}

void write_activations(const ActivationDataset& dataset, const std::filesystem::path& path) {
    dataset.validate();
    ActivationFileWriter writer(path, dataset.n_units, dataset.n_images);
    for (uint32_t u = 0; u < dataset.n_units; ++u) writer.write_unit(dataset.unit(u));
    writer.finish();
}

ClassIndex load_labels(const std::filesystem::path& path) {
    const std::string text = detail::read_text_file(path);

    struct Row {
        uint32_t image, cls;
        std::string name;
        bool has_name;
    };
    std::vector<Row> rows;
    bool saw_header = false;
    bool header_has_name = false;
    uint32_t max_class = 0;

    size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        ++line_no;
        const std::string_view line = detail::strip_cr(std::string_view(text).substr(pos, end - pos));
        pos = end + 1;
        if (line.empty()) continue;
        if (!saw_header) {
            if (line == "image_id,class_id")
                header_has_name = false;
            else if (line == "image_id,class_id,class_name")
                header_has_name = true;
            else
                throw ParseError(path.string() +
                                 ": line 1: expected header 'image_id,class_id[,class_name]'");
            saw_header = true;
            continue;
        }
        const auto fields = detail::split_csv(line);
        const size_t expected = header_has_name ? 3 : 2;
        if (fields.size() != expected)
            throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": expected " +
                             std::to_string(expected) + " fields, got " +
                             std::to_string(fields.size()));
        Row r;
        r.image = detail::parse_number<uint32_t>(fields[0], "image_id", line_no);
        r.cls = detail::parse_number<uint32_t>(fields[1], "class_id", line_no);
        r.has_name = header_has_name;
        if (header_has_name) r.name = std::string(fields[2]);
        if (r.cls >= kMaxDim)
            throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                             ": class id exceeds supported maximum");
        max_class = std::max(max_class, r.cls);
        rows.push_back(std::move(r));
    }
    if (!saw_header) throw ParseError(path.string() + ": empty file");
    if (rows.empty()) throw ParseError(path.string() + ": no label rows");

    ClassIndex idx;
    idx.class_of.assign(rows.size(), 0);
    idx.class_count.assign(static_cast<size_t>(max_class) + 1, 0);
    std::vector<uint8_t> seen(rows.size(), 0);
    std::vector<std::optional<std::string>> names(idx.class_count.size());
    for (const Row& r : rows) {
        if (r.image >= rows.size())
            throw ParseError(path.string() + ": image_id gap: id " + std::to_string(r.image) +
                             " with only " + std::to_string(rows.size()) + " rows");
        if (seen[r.image])
            throw ParseError(path.string() + ": duplicate image_id " + std::to_string(r.image));
        seen[r.image] = 1;
        idx.class_of[r.image] = r.cls;
        ++idx.class_count[r.cls];
        if (r.has_name && !r.name.empty()) {
            if (names[r.cls] && *names[r.cls] != r.name)
                throw ParseError(path.string() + ": conflicting names for class " +
                                 std::to_string(r.cls) + ": '" + *names[r.cls] + "' vs '" +
                                 r.name + "'");
            names[r.cls] = r.name;
        }
    }
    // dense ids + all rows distinct implies no gaps at this point
    for (uint32_t c = 0; c < idx.class_count.size(); ++c)
        if (idx.class_count[c] == 0)
            throw ParseError(path.string() + ": empty class " + std::to_string(c));
    bool any_name = false;
    for (const auto& n : names)
        if (n) any_name = true;
    if (any_name) {
        idx.class_name.resize(idx.class_count.size());
        for (size_t c = 0; c < names.size(); ++c)
            if (names[c]) idx.class_name[c] = *names[c];
    }
    return idx;
}

void write_labels(const ClassIndex& labels, const std::filesystem::path& path) {
    labels.validate();
    std::string out;
    const bool with_names = !labels.class_name.empty();
    out += with_names ? "image_id,class_id,class_name\n" : "image_id,class_id\n";
    for (uint32_t i = 0; i < labels.n_images(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += std::to_string(labels.class_of[i]);
        if (with_names) {
            out += ',';
            out += labels.class_name[labels.class_of[i]];
        }
        out += '\n';
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed: " + path.string());
}

std::vector<uint32_t> load_predictions(const std::filesystem::path& path) {
    const std::string text = detail::read_text_file(path);
    std::vector<std::pair<uint32_t, uint32_t>> rows;
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
            if (line != "image_id,predicted_class_id")
                throw ParseError(path.string() +
                                 ": line 1: expected header 'image_id,predicted_class_id'");
            saw_header = true;
            continue;
        }
        const auto fields = detail::split_csv(line);
        if (fields.size() != 2)
            throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                             ": expected 2 fields");
        rows.emplace_back(detail::parse_number<uint32_t>(fields[0], "image_id", line_no),
                          detail::parse_number<uint32_t>(fields[1], "predicted_class_id", line_no));
    }
    if (!saw_header) throw ParseError(path.string() + ": empty file");
    std::vector<uint32_t> preds(rows.size(), 0);
    std::vector<uint8_t> seen(rows.size(), 0);
    for (const auto& [image, cls] : rows) {
        if (image >= rows.size())
            throw ParseError(path.string() + ": image_id gap: id " + std::to_string(image));
        if (seen[image])
            throw ParseError(path.string() + ": duplicate image_id " + std::to_string(image));
        seen[image] = 1;
        preds[image] = cls;
    }
    return preds;
}

std::pair<std::vector<uint32_t>, ClassIndex> filter_correct_labels(
    const ClassIndex& labels, const std::vector<uint32_t>& predictions) {
    if (predictions.size() != labels.n_images())
        throw InvalidArgument("predictions cover " + std::to_string(predictions.size()) +
                              " images, labels have " + std::to_string(labels.n_images()));
    std::vector<uint32_t> kept;
    for (uint32_t i = 0; i < labels.n_images(); ++i)
        if (predictions[i] == labels.class_of[i]) kept.push_back(i);
    if (kept.empty()) throw InvalidArgument("no correctly classified images remain");

    ClassIndex filtered;
    filtered.class_of.reserve(kept.size());
    filtered.class_count.assign(labels.class_count.size(), 0);
    filtered.class_name = labels.class_name;
    for (uint32_t i : kept) {
        filtered.class_of.push_back(labels.class_of[i]);
        ++filtered.class_count[labels.class_of[i]];
    }
    return {std::move(kept), std::move(filtered)};
}

std::pair<ActivationDataset, ClassIndex> filter_correct(const ActivationDataset& dataset,
                                                        const ClassIndex& labels,
                                                        const std::vector<uint32_t>& predictions) {
    if (labels.n_images() != dataset.n_images)
        throw InvalidArgument("labels cover " + std::to_string(labels.n_images()) +
                              " images, dataset has " + std::to_string(dataset.n_images));
    auto [kept, filtered] = filter_correct_labels(labels, predictions);

    ActivationDataset out;
    out.n_units = dataset.n_units;
    out.n_images = static_cast<uint32_t>(kept.size());
    out.values.resize(static_cast<size_t>(out.n_units) * out.n_images);
    for (uint32_t u = 0; u < dataset.n_units; ++u) {
        const auto src = dataset.unit(u);
        float* dst = out.values.data() + static_cast<size_t>(u) * out.n_images;
        for (size_t j = 0; j < kept.size(); ++j) dst[j] = src[kept[j]];
    }
    return {std::move(out), std::move(filtered)};
}

UnitActivations slice_unit(const ActivationDataset& dataset, uint32_t unit_id) {
    if (unit_id >= dataset.n_units)
        throw InvalidArgument("unit " + std::to_string(unit_id) + " out of range (dataset has " +
                              std::to_string(dataset.n_units) + " units)");
    const auto span = dataset.unit(unit_id);
    return UnitActivations{unit_id, std::vector<float>(span.begin(), span.end())};
}

ActivationFileReader::ActivationFileReader(const std::filesystem::path& path)
    : path_(path), stream_(path, std::ios::binary) {
    if (!stream_) throw IoError("cannot open " + path.string());
    const SelaHeader h = read_header(stream_, path, kSelaVersionScalar);
    n_units_ = h.n_units;
    n_images_ = h.n_images;
    const uint64_t expected_size =
        kSelaHeaderSize + static_cast<uint64_t>(n_units_) * n_images_ * 4;
    const uint64_t actual_size = std::filesystem::file_size(path);
    if (actual_size != expected_size)
        throw ParseError(path.string() + ": truncated payload, expected " +
                         std::to_string(expected_size) + " bytes, found " +
                         std::to_string(actual_size));
}

void ActivationFileReader::read_unit(uint32_t unit_id, std::vector<float>& out) {
    if (unit_id >= n_units_)
        throw InvalidArgument("unit " + std::to_string(unit_id) + " out of range (file has " +
                              std::to_string(n_units_) + " units)");
    out.resize(n_images_);
    const uint64_t offset = kSelaHeaderSize + static_cast<uint64_t>(unit_id) * n_images_ * 4;
    stream_.clear();
    stream_.seekg(static_cast<std::streamoff>(offset));
    std::vector<unsigned char> buf(static_cast<size_t>(n_images_) * 4);
    detail::read_exact(stream_, buf.data(), buf.size(), "unit " + std::to_string(unit_id));
    detail::decode_f32le(buf.data(), n_images_, out.data());
    for (uint32_t i = 0; i < n_images_; ++i)
        if (!std::isfinite(out[i]))
            throw ParseError(path_.string() + ": non-finite value at unit " +
                             std::to_string(unit_id) + ", image " + std::to_string(i));
}

ActivationFileWriter::ActivationFileWriter(const std::filesystem::path& path, uint32_t n_units,
                                           uint32_t n_images)
    : path_(path), n_units_(n_units), n_images_(n_images) {
    if (n_units == 0 || n_images == 0)
        throw InvalidArgument("degenerate dataset: n_units and n_images must be >= 1");
    if (n_units > kMaxDim || n_images > kMaxDim)
        throw InvalidArgument("dimension exceeds supported maximum");
    stream_.open(path, std::ios::binary | std::ios::trunc);
    if (!stream_) throw IoError("cannot write " + path.string());
    const std::string header = encode_header(kSelaVersionScalar, n_units, n_images);
    stream_.write(header.data(), static_cast<std::streamsize>(header.size()));
}

void ActivationFileWriter::write_unit(std::span<const float> values) {
    if (written_ >= n_units_) throw InvalidArgument("all units already written");
    if (values.size() != n_images_)
        throw InvalidArgument("unit vector has " + std::to_string(values.size()) +
                              " entries, expected " + std::to_string(n_images_));
    for (size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw InvalidArgument("non-finite activation at unit " + std::to_string(written_) +
                                  ", image " + std::to_string(i));
    std::vector<unsigned char> buf;
    detail::encode_f32le(values.data(), values.size(), buf);
    stream_.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size()));
    if (!stream_) throw IoError("write failed: " + path_.string());
    ++written_;
}

void ActivationFileWriter::finish() {
    if (finished_) return;
    if (written_ != n_units_)
        throw InvalidArgument("wrote " + std::to_string(written_) + " of " +
                              std::to_string(n_units_) + " units");
    stream_.flush();
    if (!stream_) throw IoError("write failed: " + path_.string());
    stream_.close();
    finished_ = true;
}

ActivationFileWriter::~ActivationFileWriter() {
    if (!finished_ && stream_.is_open()) stream_.close();
}

}  // namespace unitsel
