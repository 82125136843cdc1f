#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "test_util.hpp"
#include "unitsel/activation_store.hpp"
#include "unitsel/error.hpp"
#include "unitsel/report.hpp"
#include "unitsel/synthetic.hpp"

using namespace unitsel;
using testutil::ScratchDir;

namespace {

UnitMetrics metric_with(uint32_t unit_id, double precision, std::optional<double> ccmas_value,
                        double informedness) {
    UnitMetrics m;
    m.unit_id = unit_id;
    m.precision_k = 60;
    m.precision = {0, precision};
    m.n_classes_in_topk = 3;
    if (ccmas_value) m.ccmas1 = ClassValue{0, *ccmas_value};
    if (ccmas_value) m.ccmas2 = ClassValue{1, *ccmas_value - 0.1};
    m.recall_perfect = {0, precision / 2.0};
    m.recall_precision_target = 0.95;
    m.recall_at_target = {0, precision / 3.0};
    m.max_informedness = {0, 1.5f, informedness, 0.8, 0.9, 0.1, 0.2};
    m.stats = {0, 1.0, 0.5, 0.9, 0.4};
    return m;
}

}  // namespace

TEST_CASE("jitterplot: deterministic bytes and one element per image") {
    ScenarioSpec spec;
    spec.kind = ScenarioKind::Random;
    spec.n_classes = 2;
    spec.n_per_class = 2;
    spec.seed = 8;
    const auto [dataset, labels] = generate(spec);
    const auto acts = slice_unit(dataset, 0);

    JitterplotOptions options;
    options.seed = 42;
    const auto a = jitterplot_svg(acts, labels, {}, {}, options);
    const auto b = jitterplot_svg(acts, labels, {}, {}, options);
    CHECK(a == b);
    CHECK(testutil::count_occurrences(a, "class=\"pt\"") == 4);
    CHECK(a.find("<svg") == 0);

    // different seed moves the points
    options.seed = 43;
    CHECK(jitterplot_svg(acts, labels, {}, {}, options) != a);
}

TEST_CASE("jitterplot: highlights draw last with their marker shapes") {
    ScenarioSpec spec;
    spec.kind = ScenarioKind::Grandmother;
    spec.n_classes = 3;
    spec.n_per_class = 4;
    const auto [dataset, labels] = generate(spec);
    const auto acts = slice_unit(dataset, 0);

    const std::vector<HighlightSpec> highlights = {{0, "square"}, {2, "star"}};
    const auto svg = jitterplot_svg(acts, labels, highlights, {}, {});
    CHECK(testutil::count_occurrences(svg, "class=\"pt\"") == 12);
    CHECK(testutil::count_occurrences(svg, "<polygon") == 8);  // 4 squares + 4 stars
    // highlighted points appear after the base layer
    CHECK(svg.rfind("<circle") < svg.rfind("<polygon"));

    CHECK_THROWS_AS(
        jitterplot_svg(acts, labels, std::vector<HighlightSpec>{{7, "square"}}, {}, {}),
        InvalidArgument);
    CHECK_THROWS_AS(
        jitterplot_svg(acts, labels, std::vector<HighlightSpec>{{0, "blob"}}, {}, {}),
        InvalidArgument);
}

TEST_CASE("jitterplot: annotations become labelled vertical rules") {
    ScenarioSpec spec;
    spec.kind = ScenarioKind::Grandmother;
    const auto [dataset, labels] = generate(spec);
    const auto acts = slice_unit(dataset, 0);

    const auto sweep = build_sweep(acts, labels);
    const auto mi = max_informedness(sweep, labels);
    const std::vector<RuleAnnotation> rules = {{"max informedness", static_cast<double>(mi.threshold)}};
    const auto svg = jitterplot_svg(acts, labels, {}, rules, {});
    CHECK(testutil::count_occurrences(svg, "class=\"rule\"") == 1);
    CHECK(svg.find("max informedness") != std::string::npos);
    CHECK(svg.find(format_real(mi.threshold)) != std::string::npos);
}

TEST_CASE("per-point jitter is stable under subsetting") {
    // hash-of-(seed,unit,image), so dropping other images never moves a point
    const double y5 = jitter_y(9, 3, 5);
    CHECK(y5 == jitter_y(9, 3, 5));
    CHECK(y5 >= 0.0);
    CHECK(y5 < 1.0);
    CHECK(y5 != jitter_y(9, 3, 6));
    CHECK(y5 != jitter_y(9, 4, 5));
    CHECK(y5 != jitter_y(10, 3, 5));
}

TEST_CASE("layer_summary: interpolated quartiles") {
    std::vector<double> values = {5, 3, 1, 4, 2};
    const auto s = summarize_values(values, 0);
    CHECK(s.median == 3.0);
    CHECK(s.q1 == 2.0);
    CHECK(s.q3 == 4.0);
    CHECK(s.whisker_low == 1.0);
    CHECK(s.whisker_high == 5.0);
    CHECK(s.outliers.empty());
    CHECK(s.mean == 3.0);
    CHECK(s.standard_error == doctest::Approx(std::sqrt(2.5) / std::sqrt(5.0)));
}

TEST_CASE("layer_summary: single value collapses, SE 0") {
    const std::vector<double> one = {0.7};
    const auto s = summarize_values(one, 2);
    CHECK(s.median == 0.7);
    CHECK(s.q1 == 0.7);
    CHECK(s.q3 == 0.7);
    CHECK(s.whisker_low == 0.7);
    CHECK(s.whisker_high == 0.7);
    CHECK(s.mean == 0.7);
    CHECK(s.standard_error == 0.0);
    CHECK(s.undefined_count == 2);
}

TEST_CASE("layer_summary: Tukey fences flag the far point") {
    const std::vector<double> values = {1, 2, 3, 4, 100};
    const auto s = summarize_values(values, 0);
    CHECK(s.q1 == 2.0);
    CHECK(s.q3 == 4.0);
    REQUIRE(s.outliers.size() == 1);
    CHECK(s.outliers[0] == 100.0);
    CHECK(s.whisker_high == 4.0);
    CHECK(s.whisker_low == 1.0);
}

TEST_CASE("layer_summary invariants on random values") {
    std::mt19937 rng(19);
    for (int round = 0; round < 20; ++round) {
        std::vector<double> values(3 + rng() % 40);
        for (auto& v : values) v = static_cast<double>(rng() % 1000) / 100.0;
        const auto s = summarize_values(values, 0);
        CHECK(s.q1 <= s.median);
        CHECK(s.median <= s.q3);
        const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        CHECK(s.whisker_low >= *lo);
        CHECK(s.whisker_high <= *hi);

        // permutation invariance
        std::shuffle(values.begin(), values.end(), rng);
        const auto s2 = summarize_values(values, 0);
        CHECK(s2.median == s.median);
        CHECK(s2.q1 == s.q1);
        CHECK(s2.q3 == s.q3);
        CHECK(s2.outliers == s.outliers);
    }
}

TEST_CASE("layer_summary over metrics counts undefined units") {
    std::vector<UnitMetrics> metrics;
    metrics.push_back(metric_with(0, 0.9, 0.8, 0.5));
    metrics.push_back(metric_with(1, 0.7, std::nullopt, 0.4));
    metrics.push_back(metric_with(2, 0.5, 0.6, 0.3));
    const auto s = layer_summary(metrics, Measure::Ccmas);
    CHECK(s.n == 2);
    CHECK(s.undefined_count == 1);
    CHECK_THROWS_AS(layer_summary(std::vector<UnitMetrics>{metric_with(0, 1, std::nullopt, 0)},
                                  Measure::Ccmas),
                    InvalidArgument);
}

TEST_CASE("pearson: hand-derived values") {
    const std::vector<double> x = {1, 2, 3};
    CHECK(pearson(x, x) == doctest::Approx(1.0).epsilon(1e-12));
    const std::vector<double> linear = {2, 4, 6};
    CHECK(pearson(x, linear) == doctest::Approx(1.0).epsilon(1e-12));
    const std::vector<double> y = {6, 4, 5};
    CHECK(pearson(x, y) == doctest::Approx(-0.5).epsilon(1e-12));
    std::vector<double> neg = {-1, -2, -3};
    CHECK(pearson(x, neg) == doctest::Approx(-1.0).epsilon(1e-12));

    const std::vector<double> flat = {1, 1, 1};
    CHECK_THROWS_AS(pearson(x, flat), InvalidArgument);
    const std::vector<double> two = {1, 2};
    CHECK_THROWS_AS(pearson(two, two), InvalidArgument);
}

TEST_CASE("correlate skips units where either measure is undefined") {
    std::vector<UnitMetrics> metrics;
    for (uint32_t u = 0; u < 6; ++u)
        metrics.push_back(metric_with(u, 0.1 * u, 0.05 * u + 0.1, 0.2));
    metrics.push_back(metric_with(6, 0.9, std::nullopt, 0.2));
    const double r = correlate(metrics, Measure::Precision, Measure::Ccmas);
    CHECK(r == doctest::Approx(1.0).epsilon(1e-9));  // exactly linear over defined pairs
}

TEST_CASE("rank_units orders by value then unit id") {
    std::vector<UnitMetrics> metrics;
    metrics.push_back(metric_with(0, 0.5, 0.1, 0));
    metrics.push_back(metric_with(1, 0.9, 0.1, 0));
    metrics.push_back(metric_with(2, 0.7, 0.1, 0));
    CHECK(rank_units(metrics, Measure::Precision, 0) == std::vector<uint32_t>{1, 2, 0});
    CHECK(rank_units(metrics, Measure::Precision, 2) == std::vector<uint32_t>{1, 2});
    // all-equal values fall back to unit id order
    CHECK(rank_units(metrics, Measure::Ccmas, 0) == std::vector<uint32_t>{0, 1, 2});

    std::mt19937 rng(29);
    std::vector<UnitMetrics> random_metrics;
    std::vector<std::pair<double, uint32_t>> expect;
    for (uint32_t u = 0; u < 50; ++u) {
        const double v = static_cast<double>(rng() % 20) / 10.0;
        random_metrics.push_back(metric_with(u, v, 0.5, 0));
        expect.emplace_back(-v, u);
    }
    std::sort(expect.begin(), expect.end());
    std::vector<uint32_t> want;
    for (const auto& [nv, u] : expect) want.push_back(u);
    CHECK(rank_units(random_metrics, Measure::Precision, 0) == want);
}

TEST_CASE("metrics CSV: header, NA cells, and a faithful round-trip") {
    ScratchDir dir("report");
    std::vector<UnitMetrics> metrics;
    metrics.push_back(metric_with(0, 0.83, 0.77, 0.4));
    metrics.push_back(metric_with(3, 1.0 / 3.0, std::nullopt, 0.123456789));
    metrics[0].iou = 0.15;
    metrics[0].localist = 2;

    const auto path = dir.file("metrics.csv");
    export_metrics_csv(metrics, path);

    const auto text = testutil::read_bytes(path);
    CHECK(text.find("unit_id,localist_class,precision_k,") == 0);
    CHECK(testutil::count_occurrences(text, "\n") == 3);  // header + 2 rows
    CHECK(text.find(",NA,NA,") != std::string::npos);     // undefined ccmas cells

    const auto parsed = parse_metrics_csv(path);
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].unit_id == 0);
    CHECK(parsed[0].localist == 2);
    CHECK(parsed[0].iou == doctest::Approx(0.15));
    CHECK_FALSE(parsed[1].ccmas1.has_value());
    CHECK(parsed[1].precision.value == doctest::Approx(1.0 / 3.0).epsilon(1e-5));

    // formatting is stable after one quantization: re-export matches bytes
    const auto again = dir.file("again.csv");
    export_metrics_csv(parsed, again);
    CHECK(testutil::read_bytes(again) == text);
}

TEST_CASE("summary and correlation CSVs emit one row per measure") {
    ScratchDir dir("report");
    std::vector<UnitMetrics> metrics;
    for (uint32_t u = 0; u < 8; ++u)
        metrics.push_back(metric_with(u, 0.1 * u, 0.3 + 0.05 * u, 0.02 * u));

    export_summary_csv(metrics, all_measures(), dir.file("summary.csv"));
    const auto summary = testutil::read_bytes(dir.file("summary.csv"));
    CHECK(testutil::count_occurrences(summary, "\n") == all_measures().size() + 1);
    CHECK(summary.find("measure,n_defined,n_undefined,median,") == 0);

    const std::vector<Measure> pair = {Measure::Precision, Measure::Ccmas};
    export_correlation_csv(metrics, pair, dir.file("corr.csv"));
    const auto corr = testutil::read_bytes(dir.file("corr.csv"));
    CHECK(corr.find("measure,precision,ccmas\n") == 0);
    CHECK(testutil::count_occurrences(corr, "\n") == 3);
    CHECK(corr.find("precision,1,") != std::string::npos);  // self-correlation cell
}

TEST_CASE("format_real keeps six significant digits") {
    CHECK(format_real(1.0) == "1");
    CHECK(format_real(0.95) == "0.95");
    CHECK(format_real(1.0 / 3.0) == "0.333333");
    CHECK(format_real(123456789.0) == "1.23457e+08");
}
