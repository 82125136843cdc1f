#include "unitsel/synthetic.hpp"

#include <cmath>
#include <string>

#include "unitsel/activation_store.hpp"
#include "unitsel/error.hpp"
#include "unitsel/hash.hpp"

namespace unitsel {

namespace {

void validate_spec(const ScenarioSpec& spec) {
    if (spec.n_classes < 2) throw InvalidArgument("scenario needs n_classes >= 2");
    if (spec.n_per_class < 1) throw InvalidArgument("scenario needs n_per_class >= 1");
    if (spec.n_units < 1) throw InvalidArgument("scenario needs n_units >= 1");
    const uint64_t n_images = static_cast<uint64_t>(spec.n_classes) * spec.n_per_class;
    if (n_images > 0x7fffffffull) throw InvalidArgument("scenario too large");
    switch (spec.kind) {
        case ScenarioKind::SingleActive:
            if (!(spec.active_value > 0.0f))
                throw InvalidArgument("single_active needs active_value > 0");
            break;
        case ScenarioKind::Grandmother:
            if (!(spec.on_value > 0.0f)) throw InvalidArgument("grandmother needs on_value > 0");
            break;
        case ScenarioKind::UniformOffset:
            if (!(spec.delta > 0.0)) throw InvalidArgument("uniform_offset needs delta > 0");
            if (!(spec.baseline > 0.0)) throw InvalidArgument("uniform_offset needs baseline > 0");
            if (spec.jitter_scale > 0.0 && spec.jitter_scale >= spec.delta / 2.0)
                throw InvalidArgument("jitter_scale must stay below delta/2");
            break;
        case ScenarioKind::Random:
            if (!(spec.noise_scale > 0.0)) throw InvalidArgument("random needs noise_scale > 0");
            break;
    }
}

}  // namespace

const char* scenario_name(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::SingleActive: return "single_active";
        case ScenarioKind::Grandmother: return "grandmother";
        case ScenarioKind::UniformOffset: return "uniform_offset";
        case ScenarioKind::Random: return "random";
    }
    return "unknown";
}

ScenarioKind scenario_from_name(const std::string& name) {
    if (name == "single_active" || name == "single-active") return ScenarioKind::SingleActive;
    if (name == "grandmother") return ScenarioKind::Grandmother;
    if (name == "uniform_offset" || name == "uniform-offset") return ScenarioKind::UniformOffset;
    if (name == "random") return ScenarioKind::Random;
    throw InvalidArgument("unknown scenario kind '" + name + "'");
}

void fill_unit(const ScenarioSpec& spec, uint32_t unit_id, std::vector<float>& out) {
    const uint32_t n_images = spec.n_classes * spec.n_per_class;
    out.assign(n_images, 0.0f);
    SplitMix rng(hash_combine(spec.seed, unit_id));

    switch (spec.kind) {
        case ScenarioKind::SingleActive:
            out[0] = spec.active_value;  // first image of class 0
            break;
        case ScenarioKind::Grandmother:
            for (uint32_t i = 0; i < spec.n_per_class; ++i) out[i] = spec.on_value;
            break;
        case ScenarioKind::UniformOffset: {
            const double jitter =
                spec.jitter_scale < 0.0 ? 0.01 * spec.delta : spec.jitter_scale;
            for (uint32_t i = 0; i < n_images; ++i) {
                double v = spec.baseline + (i < spec.n_per_class ? spec.delta : 0.0);
                if (jitter > 0.0) v += (rng.next_unit() * 2.0 - 1.0) * jitter;
                out[i] = static_cast<float>(v);
            }
            break;
        }
        case ScenarioKind::Random:
            // exponential-shaped positives, matching the heavy-at-zero look of
            // real post-ReLU activations
            for (uint32_t i = 0; i < n_images; ++i) {
                const double u = rng.next_unit();
                out[i] = static_cast<float>(-spec.noise_scale * std::log1p(-u));
            }
            break;
    }
}

ClassIndex scenario_labels(const ScenarioSpec& spec) {
    ClassIndex labels;
    const uint32_t n_images = spec.n_classes * spec.n_per_class;
    labels.class_of.resize(n_images);
    labels.class_count.assign(spec.n_classes, spec.n_per_class);
    for (uint32_t i = 0; i < n_images; ++i) labels.class_of[i] = i / spec.n_per_class;
    return labels;
}

std::pair<ActivationDataset, ClassIndex> generate(const ScenarioSpec& spec) {
    validate_spec(spec);
    ActivationDataset d;
    d.n_units = spec.n_units;
    d.n_images = spec.n_classes * spec.n_per_class;
    d.values.resize(static_cast<size_t>(d.n_units) * d.n_images);
    std::vector<float> unit;
    for (uint32_t u = 0; u < spec.n_units; ++u) {
        fill_unit(spec, u, unit);
        std::copy(unit.begin(), unit.end(),
                  d.values.begin() + static_cast<size_t>(u) * d.n_images);
    }
    return {std::move(d), scenario_labels(spec)};
}

void generate_to_files(const ScenarioSpec& spec, const std::filesystem::path& activations_path,
                       const std::filesystem::path& labels_path) {
    validate_spec(spec);
    const uint32_t n_images = spec.n_classes * spec.n_per_class;
    ActivationFileWriter writer(activations_path, spec.n_units, n_images);
    std::vector<float> unit;
    for (uint32_t u = 0; u < spec.n_units; ++u) {
        fill_unit(spec, u, unit);
        writer.write_unit(unit);
    }
    writer.finish();
    write_labels(scenario_labels(spec), labels_path);
}

}  // namespace unitsel
