#include "unitsel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "unitsel/error.hpp"

namespace unitsel {

namespace {

// All counts are < 2^31 (enforced at load), so signed 64-bit numerators and
// 128-bit cross products are exact. Measure *selection* (argmax class,
// threshold, tie chains) never touches floating point.

struct SweepItem {
    float value;
    uint32_t image;
};

struct MiCandidate {
    uint64_t tp = 0;
    uint64_t above = 0;
    uint64_t n_in = 0;  // class size
    float threshold = 0.0f;
    uint32_t cls = 0;
};

// informedness = tp/n_in - (above-tp)/(N-n_in), as an exact fraction
std::pair<long long, long long> informedness_fraction(const MiCandidate& c, uint64_t n_total) {
    const long long n_out = static_cast<long long>(n_total - c.n_in);
    const long long num = static_cast<long long>(c.tp) * n_out -
                          static_cast<long long>(c.above - c.tp) * static_cast<long long>(c.n_in);
    const long long den = static_cast<long long>(c.n_in) * n_out;
    return {num, den};
}

bool mi_better(const MiCandidate& a, const MiCandidate& b, uint64_t n_total) {
    const auto [an, ad] = informedness_fraction(a, n_total);
    const auto [bn, bd] = informedness_fraction(b, n_total);
    const __int128 lhs = static_cast<__int128>(an) * bd;
    const __int128 rhs = static_cast<__int128>(bn) * ad;
    if (lhs != rhs) return lhs > rhs;
    const __int128 ra = static_cast<__int128>(a.tp) * b.n_in;
    const __int128 rb = static_cast<__int128>(b.tp) * a.n_in;
    if (ra != rb) return ra > rb;
    if (a.threshold != b.threshold) return a.threshold < b.threshold;
    return a.cls < b.cls;
}

// Walks the sweep block by block, maintaining per-class positives and the
// set of classes whose count changed in the current block (ascending).
template <typename BlockFn>
void scan_blocks(const ThresholdSweep& sweep, const ClassIndex& labels, BlockFn&& on_block) {
    std::vector<uint64_t> tp(labels.n_classes(), 0);
    std::vector<uint32_t> block_classes;
    std::vector<uint32_t> seen_in_block(labels.n_classes(), UINT32_MAX);
    uint64_t above = 0;
    for (size_t b = 0; b + 1 < sweep.block_start.size(); ++b) {
        const uint32_t begin = sweep.block_start[b];
        const uint32_t end = sweep.block_start[b + 1];
        block_classes.clear();
        for (uint32_t i = begin; i < end; ++i) {
            const uint32_t c = sweep.sorted_classes[i];
            ++tp[c];
            if (seen_in_block[c] != b) {
                seen_in_block[c] = static_cast<uint32_t>(b);
                block_classes.push_back(c);
            }
        }
        above += end - begin;
        std::sort(block_classes.begin(), block_classes.end());
        on_block(sweep.sorted_values[begin], above, tp, block_classes);
    }
}

void require_two_classes(const ClassIndex& labels, const char* op) {
    if (labels.n_present_classes() < 2)
        throw InvalidArgument(std::string(op) + " requires at least 2 present classes");
}

}  // namespace

float ThresholdSweep::sentinel_threshold() const {
    return std::nextafter(sorted_values.front(), std::numeric_limits<float>::infinity());
}

std::vector<uint64_t> ThresholdSweep::class_counts_at(size_t block) const {
    std::vector<uint64_t> counts(n_classes, 0);
    const uint32_t end = block_start[block + 1];
    for (uint32_t i = 0; i < end; ++i) ++counts[sorted_classes[i]];
    return counts;
}

ThresholdSweep build_sweep(const UnitActivations& acts, const ClassIndex& labels) {
    const size_t n = acts.values.size();
    if (n != labels.n_images())
        throw InvalidArgument("activations cover " + std::to_string(n) + " images, labels have " +
                              std::to_string(labels.n_images()));
    if (n == 0) throw InvalidArgument("empty unit vector");
    for (uint32_t c : labels.class_of)
        if (c >= labels.n_classes())
            throw InvalidArgument("class id " + std::to_string(c) + " out of range");

    std::vector<SweepItem> items(n);
    for (size_t i = 0; i < n; ++i)
        items[i] = {acts.values[i], static_cast<uint32_t>(i)};
    std::sort(items.begin(), items.end(), [](const SweepItem& a, const SweepItem& b) {
        if (a.value != b.value) return a.value > b.value;
        return a.image < b.image;
    });

    ThresholdSweep sweep;
    sweep.n_images = static_cast<uint32_t>(n);
    sweep.n_classes = labels.n_classes();
    sweep.sorted_values.resize(n);
    sweep.sorted_classes.resize(n);
    sweep.sorted_images.resize(n);
    for (size_t i = 0; i < n; ++i) {
        sweep.sorted_values[i] = items[i].value;
        sweep.sorted_images[i] = items[i].image;
        sweep.sorted_classes[i] = labels.class_of[items[i].image];
        if (i == 0 || items[i].value != items[i - 1].value)
            sweep.block_start.push_back(static_cast<uint32_t>(i));
    }
    sweep.block_start.push_back(static_cast<uint32_t>(n));
    return sweep;
}

std::optional<uint32_t> localist_class(const ThresholdSweep& sweep, const ClassIndex& labels) {
    const uint32_t candidate = sweep.sorted_classes[0];
    uint32_t first_other = sweep.n_images;
    for (uint32_t i = 0; i < sweep.n_images; ++i) {
        if (sweep.sorted_classes[i] != candidate) {
            first_other = i;
            break;
        }
    }
    if (first_other == sweep.n_images) return candidate;  // no non-members at all
    // start of the block holding the best non-member value
    const auto it = std::upper_bound(sweep.block_start.begin(), sweep.block_start.end(), first_other);
    const uint32_t boundary = *(it - 1);
    // disjoint iff no member shares that value and every member sits above it
    if (boundary == first_other && first_other == labels.class_count[candidate]) return candidate;
    return std::nullopt;
}

ClassValue precision_topk(const ThresholdSweep& sweep, const ClassIndex& labels, uint32_t k,
                          TieMode mode) {
    if (k < 1 || k > sweep.n_images)
        throw InvalidArgument("k = " + std::to_string(k) + " out of range [1, " +
                              std::to_string(sweep.n_images) + "]");
    std::vector<uint64_t> above_count(labels.n_classes(), 0);
    std::vector<uint32_t> touched;

    if (mode == TieMode::Deterministic) {
        for (uint32_t i = 0; i < k; ++i) {
            const uint32_t c = sweep.sorted_classes[i];
            if (above_count[c]++ == 0) touched.push_back(c);
        }
        uint64_t best_count = 0;
        uint32_t best_class = sweep.sorted_classes[0];
        std::sort(touched.begin(), touched.end());
        for (uint32_t c : touched) {
            if (above_count[c] > best_count) {
                best_count = above_count[c];
                best_class = c;
            }
        }
        return {best_class, static_cast<double>(best_count) / static_cast<double>(k)};
    }

    // Expected mode: images strictly above the k-th value are certain; images
    // tied with it share the remaining slots uniformly at random.
    const auto it = std::upper_bound(sweep.block_start.begin(), sweep.block_start.end(), k - 1);
    const uint32_t tie_begin = *(it - 1);
    const uint32_t tie_end = *it;
    const uint64_t slots = k - tie_begin;
    const uint64_t tied_total = tie_end - tie_begin;

    std::vector<uint64_t> tied_count(labels.n_classes(), 0);
    for (uint32_t i = 0; i < tie_begin; ++i) {
        const uint32_t c = sweep.sorted_classes[i];
        if (above_count[c]++ == 0 && tied_count[c] == 0) touched.push_back(c);
    }
    for (uint32_t i = tie_begin; i < tie_end; ++i) {
        const uint32_t c = sweep.sorted_classes[i];
        if (tied_count[c]++ == 0 && above_count[c] == 0) touched.push_back(c);
    }
    std::sort(touched.begin(), touched.end());
    const double tie_share = static_cast<double>(slots) / static_cast<double>(tied_total);
    double best_expected = -1.0;
    uint32_t best_class = sweep.sorted_classes[0];
    for (uint32_t c : touched) {
        const double expected = static_cast<double>(above_count[c]) +
                                static_cast<double>(tied_count[c]) * tie_share;
        if (expected > best_expected) {
            best_expected = expected;
            best_class = c;
        }
    }
    return {best_class, best_expected / static_cast<double>(k)};
}

uint32_t n_classes_topk(const ThresholdSweep& sweep, const ClassIndex& labels, uint32_t k) {
    if (k < 1 || k > sweep.n_images)
        throw InvalidArgument("k = " + std::to_string(k) + " out of range [1, " +
                              std::to_string(sweep.n_images) + "]");
    std::vector<uint8_t> seen(labels.n_classes(), 0);
    uint32_t distinct = 0;
    for (uint32_t i = 0; i < k; ++i) {
        const uint32_t c = sweep.sorted_classes[i];
        if (!seen[c]) {
            seen[c] = 1;
            ++distinct;
        }
    }
    return distinct;
}

std::optional<ClassValue> ccmas(const UnitActivations& acts, const ClassIndex& labels, int rank) {
    if (rank != 1 && rank != 2) throw InvalidArgument("ccmas rank must be 1 or 2");
    if (acts.values.size() != labels.n_images())
        throw InvalidArgument("activations/labels length mismatch");
    require_two_classes(labels, "ccmas");

    std::vector<double> sum(labels.n_classes(), 0.0);
    for (size_t i = 0; i < acts.values.size(); ++i)
        sum[labels.class_of[i]] += acts.values[i];
    double total = 0.0;
    for (uint32_t c = 0; c < labels.n_classes(); ++c) total += sum[c];

    const double n_total = static_cast<double>(labels.n_images());
    std::vector<ClassValue> defined;
    for (uint32_t c = 0; c < labels.n_classes(); ++c) {
        const uint32_t n_in = labels.class_count[c];
        if (n_in == 0 || n_in == labels.n_images()) continue;
        const double mean_in = sum[c] / static_cast<double>(n_in);
        const double mean_out = (total - sum[c]) / (n_total - static_cast<double>(n_in));
        const double denom = mean_in + mean_out;
        if (!(denom > 0.0)) continue;  // no defined selectivity for this class
        defined.push_back({c, (mean_in - mean_out) / denom});
    }
    std::stable_sort(defined.begin(), defined.end(), [](const ClassValue& a, const ClassValue& b) {
        if (a.value != b.value) return a.value > b.value;
        return a.class_id < b.class_id;
    });
    if (defined.size() < static_cast<size_t>(rank)) return std::nullopt;
    return defined[rank - 1];
}

ClassValue recall_perfect_precision(const ThresholdSweep& sweep, const ClassIndex& labels) {
    const uint32_t cstar = sweep.sorted_classes[0];
    uint32_t first_other = sweep.n_images;
    for (uint32_t i = 0; i < sweep.n_images; ++i) {
        if (sweep.sorted_classes[i] != cstar) {
            first_other = i;
            break;
        }
    }
    if (first_other == sweep.n_images) return {cstar, 1.0};
    const auto it = std::upper_bound(sweep.block_start.begin(), sweep.block_start.end(), first_other);
    const uint32_t strictly_above = *(it - 1);  // members above the best non-member value
    return {cstar, static_cast<double>(strictly_above) /
                       static_cast<double>(labels.class_count[cstar])};
}

ClassValue recall_at_precision(const ThresholdSweep& sweep, const ClassIndex& labels,
                               double target_precision) {
    if (!(target_precision > 0.0) || target_precision > 1.0)
        throw InvalidArgument("target precision must be in (0, 1]");

    uint32_t best_cls = labels.lowest_present_class();
    uint64_t best_tp = 0;
    uint64_t best_n = labels.class_count[best_cls];

    scan_blocks(sweep, labels,
                [&](float /*threshold*/, uint64_t above, const std::vector<uint64_t>& tp,
                    const std::vector<uint32_t>& block_classes) {
                    for (uint32_t c : block_classes) {
                        const uint64_t hits = tp[c];
                        if (static_cast<double>(hits) / static_cast<double>(above) <
                            target_precision)
                            continue;
                        const uint64_t n_in = labels.class_count[c];
                        const __int128 lhs = static_cast<__int128>(hits) * best_n;
                        const __int128 rhs = static_cast<__int128>(best_tp) * n_in;
                        if (lhs > rhs || (lhs == rhs && c < best_cls)) {
                            best_cls = c;
                            best_tp = hits;
                            best_n = n_in;
                        }
                    }
                });
    return {best_cls, static_cast<double>(best_tp) / static_cast<double>(best_n)};
}

InformednessPoint max_informedness(const ThresholdSweep& sweep, const ClassIndex& labels) {
    require_two_classes(labels, "max_informedness");
    const uint64_t n_total = sweep.n_images;

    // Empty positive set: informedness 0 for every class, lowest id wins.
    const uint32_t lowest = labels.lowest_present_class();
    MiCandidate best{0, 0, labels.class_count[lowest], sweep.sentinel_threshold(), lowest};

    // Between blocks that add members of c, informedness for c only decays,
    // so the only candidates are block boundaries right after such blocks.
    scan_blocks(sweep, labels,
                [&](float threshold, uint64_t above, const std::vector<uint64_t>& tp,
                    const std::vector<uint32_t>& block_classes) {
                    for (uint32_t c : block_classes) {
                        const MiCandidate cand{tp[c], above, labels.class_count[c], threshold, c};
                        if (mi_better(cand, best, n_total)) best = cand;
                    }
                });

    const uint64_t n_out = n_total - best.n_in;
    const uint64_t fp = best.above - best.tp;
    const uint64_t tn = n_out - fp;
    InformednessPoint out;
    out.class_id = best.cls;
    out.threshold = best.threshold;
    out.recall = static_cast<double>(best.tp) / static_cast<double>(best.n_in);
    out.specificity = static_cast<double>(tn) / static_cast<double>(n_out);
    out.informedness = out.recall + out.specificity - 1.0;
    out.fallout = static_cast<double>(fp) / static_cast<double>(n_out);
    out.false_discovery_rate =
        best.above == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(best.above);
    return out;
}

ClassStats class_stats(const UnitActivations& acts, const ClassIndex& labels, uint32_t class_id) {
    if (acts.values.size() != labels.n_images())
        throw InvalidArgument("activations/labels length mismatch");
    if (class_id >= labels.n_classes() || labels.class_count[class_id] == 0)
        throw InvalidArgument("class " + std::to_string(class_id) + " not present");

    double sum_in = 0.0, sum_out = 0.0;
    uint64_t pos_in = 0, pos_out = 0;
    for (size_t i = 0; i < acts.values.size(); ++i) {
        const float v = acts.values[i];
        if (labels.class_of[i] == class_id) {
            sum_in += v;
            if (v > 0.0f) ++pos_in;
        } else {
            sum_out += v;
            if (v > 0.0f) ++pos_out;
        }
    }
    const uint64_t n_in = labels.class_count[class_id];
    const uint64_t n_out = labels.n_images() - n_in;
    ClassStats s;
    s.class_id = class_id;
    s.mean_in = sum_in / static_cast<double>(n_in);
    s.mean_out = n_out == 0 ? 0.0 : sum_out / static_cast<double>(n_out);
    s.prop_positive_in = static_cast<double>(pos_in) / static_cast<double>(n_in);
    s.prop_positive_out = n_out == 0 ? 0.0 : static_cast<double>(pos_out) / static_cast<double>(n_out);
    return s;
}

UnitMetrics analyze_unit(const UnitActivations& acts, const ClassIndex& labels,
                         const MetricsConfig& config) {
    require_two_classes(labels, "analyze_unit");
    const ThresholdSweep sweep = build_sweep(acts, labels);

    UnitMetrics m;
    m.unit_id = acts.unit_id;
    m.localist = localist_class(sweep, labels);
    m.precision_k = config.precision_k;
    m.precision = precision_topk(sweep, labels, config.precision_k, config.tie_mode);
    m.n_classes_in_topk = n_classes_topk(sweep, labels, config.precision_k);
    m.ccmas1 = ccmas(acts, labels, 1);
    m.ccmas2 = ccmas(acts, labels, 2);
    m.recall_perfect = recall_perfect_precision(sweep, labels);
    m.recall_precision_target = config.recall_precision_target;
    m.recall_at_target = recall_at_precision(sweep, labels, config.recall_precision_target);
    m.max_informedness = max_informedness(sweep, labels);
    m.stats = class_stats(acts, labels, m.precision.class_id);
    return m;
}

}  // namespace unitsel
