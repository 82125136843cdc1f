#include "unitsel/batch.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>

#include "unitsel/error.hpp"
#include "unitsel/hash.hpp"

namespace unitsel {

UnitSelection UnitSelection::parse(const std::string& text) {
    UnitSelection sel;
    if (text == "all") {
        sel.mode = Mode::All;
        return sel;
    }
    if (text.starts_with("list:")) {
        sel.mode = Mode::List;
        std::string body = text.substr(5);
        size_t pos = 0;
        while (pos <= body.size()) {
            size_t comma = body.find(',', pos);
            if (comma == std::string::npos) comma = body.size();
            const std::string field = body.substr(pos, comma - pos);
            if (field.empty()) throw InvalidArgument("empty unit id in '" + text + "'");
            size_t used = 0;
            unsigned long v = 0;
            try {
                v = std::stoul(field, &used);
            } catch (const std::exception&) {
                throw InvalidArgument("bad unit id '" + field + "'");
            }
            if (used != field.size() || v > 0x7fffffffUL)
                throw InvalidArgument("bad unit id '" + field + "'");
            sel.list.push_back(static_cast<uint32_t>(v));
            pos = comma + 1;
        }
        std::sort(sel.list.begin(), sel.list.end());
        sel.list.erase(std::unique(sel.list.begin(), sel.list.end()), sel.list.end());
        if (sel.list.empty()) throw InvalidArgument("empty unit list");
        return sel;
    }
    if (text.starts_with("random:")) {
        sel.mode = Mode::RandomSample;
        const std::string body = text.substr(7);
        size_t used = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(body, &used);
        } catch (const std::exception&) {
            throw InvalidArgument("bad sample size in '" + text + "'");
        }
        if (used != body.size() || v == 0 || v > 0x7fffffffUL)
            throw InvalidArgument("bad sample size in '" + text + "'");
        sel.sample_size = static_cast<uint32_t>(v);
        return sel;
    }
    throw InvalidArgument("unit selection must be 'all', 'list:...' or 'random:N'");
}

std::vector<uint32_t> resolve_units(const UnitSelection& selection, uint32_t n_units,
                                    uint64_t seed) {
    switch (selection.mode) {
        case UnitSelection::Mode::All: {
            std::vector<uint32_t> units(n_units);
            for (uint32_t u = 0; u < n_units; ++u) units[u] = u;
            return units;
        }
        case UnitSelection::Mode::List: {
            for (uint32_t u : selection.list)
                if (u >= n_units)
                    throw InvalidArgument("unit " + std::to_string(u) +
                                          " out of range (dataset has " +
                                          std::to_string(n_units) + " units)");
            return selection.list;
        }
        case UnitSelection::Mode::RandomSample: {
            if (selection.sample_size > n_units)
                throw InvalidArgument("sample of " + std::to_string(selection.sample_size) +
                                      " exceeds " + std::to_string(n_units) + " units");
            // partial Fisher-Yates with the library's own stream, then sorted
            // so output order is unit-id order
            std::vector<uint32_t> pool(n_units);
            for (uint32_t u = 0; u < n_units; ++u) pool[u] = u;
            SplitMix rng(hash_combine(seed, 0x756e697473ull));  // "units"
            for (uint32_t i = 0; i < selection.sample_size; ++i) {
                const uint64_t j = i + rng.next_below(n_units - i);
                std::swap(pool[i], pool[j]);
            }
            pool.resize(selection.sample_size);
            std::sort(pool.begin(), pool.end());
            return pool;
        }
    }
    throw InvalidArgument("invalid unit selection");
}

namespace {

void subset_values(const std::vector<float>& full, const std::vector<uint32_t>& keep,
                   std::vector<float>& out) {
    out.resize(keep.size());
    for (size_t j = 0; j < keep.size(); ++j) out[j] = full[keep[j]];
}

template <typename ReadUnitFn>
std::vector<UnitMetrics> analyze_parallel(uint32_t n_units_total,
                                          const ClassIndex& labels,
                                          std::span<const uint32_t> units,
                                          const BatchOptions& options,
                                          ReadUnitFn&& make_reader) {
    for (uint32_t u : units)
        if (u >= n_units_total)
            throw InvalidArgument("unit " + std::to_string(u) + " out of range");
    if (options.image_subset) {
        if (labels.n_images() != options.image_subset->size())
            throw InvalidArgument("image subset size does not match filtered labels");
    }

    std::vector<UnitMetrics> results(units.size());
    const uint32_t threads =
        std::max(1u, std::min<uint32_t>(options.threads, static_cast<uint32_t>(units.size())));

    std::atomic<size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
        auto read_unit = make_reader();  // per-worker reader state
        std::vector<float> raw, gathered;
        try {
            while (true) {
                const size_t idx = next.fetch_add(1);
                if (idx >= units.size()) break;
                const uint32_t unit_id = units[idx];
                read_unit(unit_id, raw);
                UnitActivations acts;
                acts.unit_id = unit_id;
                if (options.image_subset) {
                    subset_values(raw, *options.image_subset, gathered);
                    acts.values = gathered;
                } else {
                    acts.values = raw;
                }
                results[idx] = analyze_unit(acts, labels, options.metrics);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };

    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (uint32_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

}  // namespace

std::vector<UnitMetrics> analyze_file(const std::filesystem::path& activations_path,
                                      const ClassIndex& labels, std::span<const uint32_t> units,
                                      const BatchOptions& options) {
    // probe the header once up front so errors surface before threads spawn
    const ActivationFileReader probe(activations_path);
    const uint32_t n_units_total = probe.n_units();
    const uint32_t n_images = probe.n_images();
    if (!options.image_subset && labels.n_images() != n_images)
        throw InvalidArgument("labels cover " + std::to_string(labels.n_images()) +
                              " images, file has " + std::to_string(n_images));

    return analyze_parallel(n_units_total, labels, units, options, [&]() {
        auto reader = std::make_shared<ActivationFileReader>(activations_path);
        return [reader](uint32_t unit_id, std::vector<float>& out) {
            reader->read_unit(unit_id, out);
        };
    });
}

std::vector<UnitMetrics> analyze_dataset(const ActivationDataset& dataset,
                                         const ClassIndex& labels,
                                         std::span<const uint32_t> units,
                                         const BatchOptions& options) {
    if (!options.image_subset && labels.n_images() != dataset.n_images)
        throw InvalidArgument("labels cover " + std::to_string(labels.n_images()) +
                              " images, dataset has " + std::to_string(dataset.n_images));
    return analyze_parallel(dataset.n_units, labels, units, options, [&]() {
        return [&dataset](uint32_t unit_id, std::vector<float>& out) {
            const auto span = dataset.unit(unit_id);
            out.assign(span.begin(), span.end());
        };
    });
}

}  // namespace unitsel
