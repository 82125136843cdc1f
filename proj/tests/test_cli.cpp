#include <doctest.h>

#include <cstdlib>
#include <string>

#include "test_util.hpp"
#include "unitsel/dissection.hpp"
#include "unitsel/report.hpp"

using testutil::ScratchDir;

namespace {

// UNITSEL_CLI_PATH comes from the build; stdout/stderr are silenced so test
// output stays readable.
int run_cli(const std::string& args) {
    const std::string cmd = std::string(UNITSEL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("cli synth + analyze reproduce the grandmother scorecard") {
    ScratchDir dir("cli");
    REQUIRE(run_cli("synth --kind grandmother --classes 10 --per-class 100 --out " +
                    q(dir.file("gm"))) == 0);
    REQUIRE(run_cli("analyze --activations " + q(dir.file("gm/activations.sela")) + " --labels " +
                    q(dir.file("gm/labels.csv")) + " --k 100 --out " + q(dir.file("run"))) == 0);

    const auto metrics = unitsel::parse_metrics_csv(dir.file("run/metrics.csv"));
    REQUIRE(metrics.size() == 1);
    CHECK(metrics[0].precision.value == 1.0);
    REQUIRE(metrics[0].ccmas1.has_value());
    CHECK(metrics[0].ccmas1->value == 1.0);
    CHECK(metrics[0].localist == 0);
    CHECK(std::filesystem::exists(dir.file("run/summary.csv")));
    CHECK(std::filesystem::exists(dir.file("run/manifest.json")));
}

TEST_CASE("cli analyze: missing labels file fails with a diagnostic") {
    ScratchDir dir("cli");
    REQUIRE(run_cli("synth --kind grandmother --out " + q(dir.file("gm"))) == 0);
    const std::string cmd = std::string(UNITSEL_CLI_PATH) + " analyze --activations " +
                            q(dir.file("gm/activations.sela")) + " --labels " +
                            q(dir.file("nope.csv")) + " --out " + q(dir.file("run")) +
                            " 2> " + q(dir.file("err.txt"));
    const int status = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(status) != 0);
    const auto err = testutil::read_bytes(dir.file("err.txt"));
    CHECK(err.find("nope.csv") != std::string::npos);
}

TEST_CASE("cli analyze: random unit sampling is seed-deterministic") {
    ScratchDir dir("cli");
    REQUIRE(run_cli("synth --kind random --units 30 --classes 4 --per-class 25 --seed 3 --out " +
                    q(dir.file("data"))) == 0);
    const std::string common = "analyze --activations " + q(dir.file("data/activations.sela")) +
                               " --labels " + q(dir.file("data/labels.csv")) +
                               " --k 10 --units random:7 --seed 7 --out ";
    REQUIRE(run_cli(common + q(dir.file("r1"))) == 0);
    REQUIRE(run_cli(common + q(dir.file("r2"))) == 0);
    CHECK(testutil::read_bytes(dir.file("r1/metrics.csv")) ==
          testutil::read_bytes(dir.file("r2/metrics.csv")));
    CHECK(testutil::read_bytes(dir.file("r1/summary.csv")) ==
          testutil::read_bytes(dir.file("r2/summary.csv")));
    CHECK(testutil::read_bytes(dir.file("r1/manifest.json")) ==
          testutil::read_bytes(dir.file("r2/manifest.json")));
}

TEST_CASE("cli jitter: svg output with a rule, reproducible bytes, bad unit fails") {
    ScratchDir dir("cli");
    REQUIRE(run_cli("synth --kind grandmother --out " + q(dir.file("gm"))) == 0);
    const std::string common = "jitter --activations " + q(dir.file("gm/activations.sela")) +
                               " --labels " + q(dir.file("gm/labels.csv")) +
                               " --unit 0 --highlight 0:square --rule-max-informedness --seed 11";
    REQUIRE(run_cli(common + " --out " + q(dir.file("a.svg"))) == 0);
    REQUIRE(run_cli(common + " --out " + q(dir.file("b.svg"))) == 0);
    const auto svg = testutil::read_bytes(dir.file("a.svg"));
    CHECK(svg == testutil::read_bytes(dir.file("b.svg")));
    CHECK(testutil::count_occurrences(svg, "class=\"rule\"") == 1);
    CHECK(testutil::count_occurrences(svg, "class=\"pt\"") == 1000);

    CHECK(run_cli("jitter --activations " + q(dir.file("gm/activations.sela")) + " --labels " +
                  q(dir.file("gm/labels.csv")) + " --unit 99 --out " + q(dir.file("x.svg"))) != 0);
}

TEST_CASE("cli dissect: exact fixture and dimension mismatch") {
    ScratchDir dir("cli");
    // build fixtures through the library writers
    using namespace unitsel;
    ActivationMapStack stack;
    stack.unit_id = 0;
    stack.n_images = 1;
    stack.height = 2;
    stack.width = 2;
    stack.maps = {4, 0, 0, 4};
    write_map_stacks(std::vector<ActivationMapStack>{stack}, dir.file("maps.sela"));
    ConceptMaskSet cms;
    cms.concept_id = 0;
    cms.name = "diag";
    cms.n_images = 1;
    cms.height = 2;
    cms.width = 2;
    cms.masks = {1, 0, 0, 1};
    write_concept_masks(std::vector<ConceptMaskSet>{cms}, dir.file("masks.sela"),
                        dir.file("concepts.csv"));

    REQUIRE(run_cli("dissect --maps " + q(dir.file("maps.sela")) + " --masks " +
                    q(dir.file("masks.sela")) + " --concepts " + q(dir.file("concepts.csv")) +
                    " --top-fraction 0.5 --out " + q(dir.file("d"))) == 0);
    const auto csv = testutil::read_bytes(dir.file("d/detectors.csv"));
    CHECK(csv.find("0,0,diag,1,true,") != std::string::npos);

    // masks covering a different image count cannot be dissected
    ConceptMaskSet wrong = cms;
    wrong.n_images = 2;
    wrong.masks = {1, 0, 0, 1, 1, 0, 0, 1};
    write_concept_masks(std::vector<ConceptMaskSet>{wrong}, dir.file("masks2.sela"),
                        dir.file("concepts2.csv"));
    CHECK(run_cli("dissect --maps " + q(dir.file("maps.sela")) + " --masks " +
                  q(dir.file("masks2.sela")) + " --concepts " + q(dir.file("concepts2.csv")) +
                  " --out " + q(dir.file("d2"))) != 0);
}

TEST_CASE("cli synth: parameter validation and determinism") {
    ScratchDir dir("cli");
    CHECK(run_cli("synth --kind uniform-offset --delta 0 --out " + q(dir.file("bad"))) != 0);
    CHECK(run_cli("synth --kind uniform-offset --delta -0.5 --out " + q(dir.file("bad2"))) != 0);

    const std::string common = "synth --kind random --units 3 --seed 12 --out ";
    REQUIRE(run_cli(common + q(dir.file("s1"))) == 0);
    REQUIRE(run_cli(common + q(dir.file("s2"))) == 0);
    CHECK(testutil::read_bytes(dir.file("s1/activations.sela")) ==
          testutil::read_bytes(dir.file("s2/activations.sela")));
    CHECK(testutil::read_bytes(dir.file("s1/labels.csv")) ==
          testutil::read_bytes(dir.file("s2/labels.csv")));
}

TEST_CASE("cli summarize and correlate consume a metrics csv") {
    ScratchDir dir("cli");
    REQUIRE(run_cli("synth --kind random --units 20 --classes 5 --per-class 20 --seed 9 --out " +
                    q(dir.file("data"))) == 0);
    REQUIRE(run_cli("analyze --activations " + q(dir.file("data/activations.sela")) +
                    " --labels " + q(dir.file("data/labels.csv")) + " --k 15 --out " +
                    q(dir.file("run"))) == 0);

    REQUIRE(run_cli("summarize --metrics " + q(dir.file("run/metrics.csv")) + " --out " +
                    q(dir.file("summary.csv")) + " --rank precision --top 5 --rank-out " +
                    q(dir.file("top.csv"))) == 0);
    const auto summary = testutil::read_bytes(dir.file("summary.csv"));
    CHECK(summary.find("measure,") == 0);
    const auto top = testutil::read_bytes(dir.file("top.csv"));
    CHECK(testutil::count_occurrences(top, "\n") == 6);  // header + 5 rows

    REQUIRE(run_cli("correlate --metrics " + q(dir.file("run/metrics.csv")) + " --out " +
                    q(dir.file("corr.csv"))) == 0);
    const auto corr = testutil::read_bytes(dir.file("corr.csv"));
    CHECK(corr.find("measure,precision,ccmas,recall_p,max_informedness,n_classes_topk") == 0);

    // same shape as the summary analyze wrote (values requantize at 6 digits)
    const auto run_summary = testutil::read_bytes(dir.file("run/summary.csv"));
    CHECK(summary.substr(0, summary.find('\n')) ==
          run_summary.substr(0, run_summary.find('\n')));
    CHECK(testutil::count_occurrences(summary, "\n") ==
          testutil::count_occurrences(run_summary, "\n"));
}

TEST_CASE("cli summarize merges dissection IoU into the metrics csv") {
    ScratchDir dir("cli");
    REQUIRE(run_cli("synth --kind random --units 3 --classes 4 --per-class 10 --seed 2 --out " +
                    q(dir.file("data"))) == 0);
    REQUIRE(run_cli("analyze --activations " + q(dir.file("data/activations.sela")) +
                    " --labels " + q(dir.file("data/labels.csv")) + " --k 5 --out " +
                    q(dir.file("run"))) == 0);
    // external IoU values for units 0 and 2
    testutil::write_bytes(dir.file("detectors.csv"),
                          "unit_id,best_concept,concept_name,iou,is_detector,"
                          "binarization_threshold\n"
                          "0,1,bus,0.15,true,2.5\n"
                          "2,0,lamp,0.03,false,1.0\n");
    REQUIRE(run_cli("summarize --metrics " + q(dir.file("run/metrics.csv")) + " --iou " +
                    q(dir.file("detectors.csv")) + " --merged-out " + q(dir.file("merged.csv")) +
                    " --out " + q(dir.file("s.csv"))) == 0);
    const auto merged = unitsel::parse_metrics_csv(dir.file("merged.csv"));
    REQUIRE(merged.size() == 3);
    CHECK(merged[0].iou == doctest::Approx(0.15));
    CHECK_FALSE(merged[1].iou.has_value());
    CHECK(merged[2].iou == doctest::Approx(0.03));
}

TEST_CASE("cli jitter honors the predictions filter") {
    ScratchDir dir("cli");
    REQUIRE(run_cli("synth --kind grandmother --classes 2 --per-class 3 --out " +
                    q(dir.file("gm"))) == 0);
    // mispredict two of the six images
    testutil::write_bytes(dir.file("preds.csv"),
                          "image_id,predicted_class_id\n0,0\n1,1\n2,0\n3,1\n4,0\n5,1\n");
    REQUIRE(run_cli("jitter --activations " + q(dir.file("gm/activations.sela")) + " --labels " +
                    q(dir.file("gm/labels.csv")) + " --predictions " + q(dir.file("preds.csv")) +
                    " --unit 0 --out " + q(dir.file("f.svg"))) == 0);
    const auto svg = testutil::read_bytes(dir.file("f.svg"));
    CHECK(testutil::count_occurrences(svg, "class=\"pt\"") == 4);
}
