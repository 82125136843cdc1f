#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "test_util.hpp"
#include "unitsel/activation_store.hpp"
#include "unitsel/error.hpp"

using namespace unitsel;
using testutil::ScratchDir;

TEST_CASE("binary round-trip: 2x3 dataset survives bit-exactly") {
    ScratchDir dir("store");
    const auto d = testutil::make_dataset(2, 3, {1.0f, 2.5f, -3.25f, 0.0f, 1e-20f, 4096.0f});
    const auto path = dir.file("a.sela");
    write_activations(d, path);
    const auto back = load_activations(path, ActivationFormat::BinaryV1);
    CHECK(back == d);
}

TEST_CASE("binary header is 16 bytes and file size is exact") {
    ScratchDir dir("store");
    const auto d = testutil::make_dataset(7, 11, std::vector<float>(77, 0.5f));
    const auto path = dir.file("a.sela");
    write_activations(d, path);
    CHECK(std::filesystem::file_size(path) == kSelaHeaderSize + 7ull * 11 * 4);
    CHECK(kSelaHeaderSize == 16);
    // large-matrix arithmetic from the same formula
    CHECK(kSelaHeaderSize + 4096ull * 100000 * 4 == 1638400016ull);
}

TEST_CASE("format determinism: writing twice yields identical bytes") {
    ScratchDir dir("store");
    const auto d = testutil::make_dataset(3, 4, std::vector<float>(12, 1.25f));
    write_activations(d, dir.file("a.sela"));
    write_activations(d, dir.file("b.sela"));
    CHECK(testutil::read_bytes(dir.file("a.sela")) == testutil::read_bytes(dir.file("b.sela")));
}

TEST_CASE("NaN in payload names unit and image") {
    ScratchDir dir("store");
    auto d = testutil::make_dataset(2, 3, {1, 2, 3, 4, 5, 6});
    write_activations(d, dir.file("a.sela"));
    // poke a NaN into unit 1, image 2 behind the writer's back
    auto bytes = testutil::read_bytes(dir.file("a.sela"));
    const float nan = std::nanf("");
    std::memcpy(bytes.data() + kSelaHeaderSize + (1 * 3 + 2) * 4, &nan, 4);
    testutil::write_bytes(dir.file("a.sela"), bytes);
    CHECK_THROWS_WITH_AS(load_activations(dir.file("a.sela"), ActivationFormat::BinaryV1),
                         doctest::Contains("unit 1, image 2"), ParseError);
}

TEST_CASE("truncated payload and bad magic are distinct parse errors") {
    ScratchDir dir("store");
    const auto d = testutil::make_dataset(2, 2, {1, 2, 3, 4});
    write_activations(d, dir.file("a.sela"));
    auto bytes = testutil::read_bytes(dir.file("a.sela"));

    testutil::write_bytes(dir.file("short.sela"), bytes.substr(0, bytes.size() - 4));
    CHECK_THROWS_WITH_AS(load_activations(dir.file("short.sela"), ActivationFormat::BinaryV1),
                         doctest::Contains("truncated"), ParseError);

    bytes[0] = 'X';
    testutil::write_bytes(dir.file("magic.sela"), bytes);
    CHECK_THROWS_WITH_AS(load_activations(dir.file("magic.sela"), ActivationFormat::BinaryV1),
                         doctest::Contains("magic"), ParseError);
}

TEST_CASE("csv and binary loads agree") {
    ScratchDir dir("store");
    const auto d = testutil::make_dataset(2, 2, {0.5f, 2.25f, -1.0f, 8.0f});
    write_activations(d, dir.file("a.sela"));
    testutil::write_bytes(dir.file("a.csv"),
                          "unit,image,value\n"
                          "0,0,0.5\n0,1,2.25\n1,0,-1\n1,1,8\n");
    const auto from_bin = load_activations(dir.file("a.sela"), ActivationFormat::BinaryV1);
    const auto from_csv = load_activations(dir.file("a.csv"), ActivationFormat::Csv);
    CHECK(from_bin == from_csv);
}

TEST_CASE("csv rejects duplicates, gaps and bad headers") {
    ScratchDir dir("store");
    testutil::write_bytes(dir.file("dup.csv"), "unit,image,value\n0,0,1\n0,0,2\n0,1,3\n1,0,4\n");
    CHECK_THROWS_AS(load_activations(dir.file("dup.csv"), ActivationFormat::Csv), ParseError);
    testutil::write_bytes(dir.file("sparse.csv"), "unit,image,value\n0,0,1\n1,1,2\n");
    CHECK_THROWS_AS(load_activations(dir.file("sparse.csv"), ActivationFormat::Csv), ParseError);
    testutil::write_bytes(dir.file("hdr.csv"), "a,b,c\n0,0,1\n");
    CHECK_THROWS_AS(load_activations(dir.file("hdr.csv"), ActivationFormat::Csv), ParseError);
}

TEST_CASE("degenerate datasets are rejected on write") {
    ScratchDir dir("store");
    ActivationDataset empty;
    empty.n_units = 1;
    empty.n_images = 0;
    CHECK_THROWS_AS(write_activations(empty, dir.file("x.sela")), InvalidArgument);
    CHECK_THROWS_AS(ActivationFileWriter(dir.file("x.sela"), 0, 5), InvalidArgument);
}

TEST_CASE("labels: two classes of two images") {
    ScratchDir dir("store");
    testutil::write_bytes(dir.file("l.csv"), "image_id,class_id\n0,0\n1,0\n2,1\n3,1\n");
    const auto idx = load_labels(dir.file("l.csv"));
    idx.validate();
    CHECK(idx.n_images() == 4);
    CHECK(idx.class_count == std::vector<uint32_t>{2, 2});
}

TEST_CASE("labels: names column round-trips and conflicts fail") {
    ScratchDir dir("store");
    testutil::write_bytes(dir.file("l.csv"),
                          "image_id,class_id,class_name\n0,0,cat\n1,1,dog\n2,0,cat\n");
    const auto idx = load_labels(dir.file("l.csv"));
    REQUIRE(idx.class_name.size() == 2);
    CHECK(idx.class_name[0] == "cat");
    CHECK(idx.class_name[1] == "dog");

    write_labels(idx, dir.file("round.csv"));
    const auto again = load_labels(dir.file("round.csv"));
    CHECK(again == idx);

    testutil::write_bytes(dir.file("bad.csv"),
                          "image_id,class_id,class_name\n0,0,cat\n1,0,lion\n");
    CHECK_THROWS_WITH_AS(load_labels(dir.file("bad.csv")), doctest::Contains("conflicting"),
                         ParseError);
}

TEST_CASE("labels: duplicate ids, gaps and empty classes are errors") {
    ScratchDir dir("store");
    testutil::write_bytes(dir.file("dup.csv"), "image_id,class_id\n0,0\n0,1\n");
    CHECK_THROWS_WITH_AS(load_labels(dir.file("dup.csv")), doctest::Contains("duplicate"),
                         ParseError);
    testutil::write_bytes(dir.file("gap.csv"), "image_id,class_id\n0,0\n2,1\n");
    CHECK_THROWS_WITH_AS(load_labels(dir.file("gap.csv")), doctest::Contains("gap"), ParseError);
    testutil::write_bytes(dir.file("empty.csv"), "image_id,class_id\n0,0\n1,2\n");
    CHECK_THROWS_WITH_AS(load_labels(dir.file("empty.csv")), doctest::Contains("empty class"),
                         ParseError);
}

TEST_CASE("labels: thousand-class generated index stays consistent") {
    ScratchDir dir("store");
    const uint32_t n_classes = 1000;
    std::mt19937 rng(7);
    std::string csv = "image_id,class_id\n";
    std::vector<uint32_t> expected(n_classes, 0);
    // between 600 and 840 images per class, shuffled image order
    std::vector<uint32_t> class_of;
    for (uint32_t c = 0; c < n_classes; ++c) {
        const uint32_t n = 600 + rng() % 241;
        expected[c] = n;
        for (uint32_t i = 0; i < n; ++i) class_of.push_back(c);
    }
    std::shuffle(class_of.begin(), class_of.end(), rng);
    for (size_t i = 0; i < class_of.size(); ++i)
        csv += std::to_string(i) + "," + std::to_string(class_of[i]) + "\n";
    testutil::write_bytes(dir.file("big.csv"), csv);

    const auto idx = load_labels(dir.file("big.csv"));
    idx.validate();
    CHECK(idx.n_images() == class_of.size());
    uint64_t total = 0;
    for (uint32_t c = 0; c < n_classes; ++c) {
        CHECK(idx.class_count[c] == expected[c]);
        total += idx.class_count[c];
    }
    CHECK(total == idx.n_images());
}

TEST_CASE("filter_correct keeps matching images and re-densifies") {
    const auto d = testutil::make_dataset(1, 10, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    const auto labels = testutil::make_labels({4, 3, 3});

    SUBCASE("all correct is identity up to index identity") {
        const std::vector<uint32_t> preds(labels.class_of);
        const auto [fd, fl] = filter_correct(d, labels, preds);
        CHECK(fd == d);
        CHECK(fl.class_of == labels.class_of);
        CHECK(fl.class_count == labels.class_count);
    }

    SUBCASE("nothing correct is an error") {
        std::vector<uint32_t> preds(10, 99);
        CHECK_THROWS_AS(filter_correct(d, labels, preds), InvalidArgument);
    }

    SUBCASE("7 of 10 correct matches hand enumeration") {
        // mispredict images 1, 4 and 7
        std::vector<uint32_t> preds = labels.class_of;
        preds[1] = 2;
        preds[4] = 0;
        preds[7] = 0;
        const auto [fd, fl] = filter_correct(d, labels, preds);
        CHECK(fd.n_images == 7);
        CHECK(fl.class_count == std::vector<uint32_t>{3, 2, 2});
        CHECK(fd.unit(0)[0] == 0.0f);  // image 0 kept
        CHECK(fd.unit(0)[3] == 5.0f);  // image 5 is the 4th survivor
        const uint64_t matches = [&] {
            uint64_t m = 0;
            for (size_t i = 0; i < preds.size(); ++i)
                if (preds[i] == labels.class_of[i]) ++m;
            return m;
        }();
        CHECK(fd.n_images == matches);
    }
}

TEST_CASE("slice_unit snapshots values") {
    auto d = testutil::make_dataset(1, 3, {1, 2, 3});
    const auto slice = slice_unit(d, 0);
    CHECK(slice.values == std::vector<float>{1, 2, 3});
    d.values[1] = 99.0f;  // later mutation must not leak into the slice
    CHECK(slice.values[1] == 2.0f);
    CHECK_THROWS_AS(slice_unit(d, 5), InvalidArgument);
}

TEST_CASE("slice_unit agrees with full-matrix lookup elementwise") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<float> dist(-5.0f, 5.0f);
    std::vector<float> values(6 * 40);
    for (float& v : values) v = dist(rng);
    const auto d = testutil::make_dataset(6, 40, values);
    for (uint32_t u = 0; u < d.n_units; ++u) {
        const auto slice = slice_unit(d, u);
        for (uint32_t i = 0; i < d.n_images; ++i) CHECK(slice.values[i] == d.at(u, i));
    }
}

TEST_CASE("streaming reader matches the full loader") {
    ScratchDir dir("store");
    std::mt19937 rng(3);
    std::uniform_real_distribution<float> dist(0.0f, 10.0f);
    std::vector<float> values(5 * 64);
    for (float& v : values) v = dist(rng);
    const auto d = testutil::make_dataset(5, 64, values);
    write_activations(d, dir.file("a.sela"));

    ActivationFileReader reader(dir.file("a.sela"));
    CHECK(reader.n_units() == 5);
    CHECK(reader.n_images() == 64);
    std::vector<float> unit;
    for (uint32_t u : {4u, 0u, 2u}) {  // out-of-order seeks
        reader.read_unit(u, unit);
        const auto expect = d.unit(u);
        CHECK(std::equal(unit.begin(), unit.end(), expect.begin(), expect.end()));
    }
    CHECK_THROWS_AS(reader.read_unit(5, unit), InvalidArgument);
}

TEST_CASE("predictions loader enforces shape") {
    ScratchDir dir("store");
    testutil::write_bytes(dir.file("p.csv"), "image_id,predicted_class_id\n0,1\n1,0\n");
    const auto preds = load_predictions(dir.file("p.csv"));
    CHECK(preds == std::vector<uint32_t>{1, 0});
    testutil::write_bytes(dir.file("bad.csv"), "image_id,predicted_class_id\n0,1\n0,0\n");
    CHECK_THROWS_AS(load_predictions(dir.file("bad.csv")), ParseError);
}
