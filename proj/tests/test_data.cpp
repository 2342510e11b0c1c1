#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "lesioncam/data.hpp"

using namespace lesioncam;
namespace fs = std::filesystem;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = (fs::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("load_labels parses flags, decimals and computes class counts") {
    const std::string path = write_temp(
        "labels_ok.csv",
        "image_id,melanoma,seborrheic_keratosis\n"
        "a,1,0\n"
        "b,0.0,1.0\n"
        "c,0,0\n"
        "d,0,0\n");
    const auto records = load_labels(path);
    REQUIRE(records.size() == 4);
    CHECK(records[0].class_id() == 0);
    CHECK(records[1].class_id() == 1);
    CHECK(records[2].class_id() == 2);
    const auto counts = count_classes(records);
    CHECK(counts.melanoma == 1);
    CHECK(counts.seborrheic_keratosis == 1);
    CHECK(counts.nevus == 2);
    fs::remove(path);
}

TEST_CASE("both flags set is a validation error naming the row") {
    const std::string path = write_temp("labels_both.csv",
                                        "image_id,melanoma,seborrheic_keratosis\nx,1,1\n");
    CHECK_THROWS_WITH_AS(load_labels(path), doctest::Contains("x"), DataError);
    fs::remove(path);
}

TEST_CASE("malformed rows carry the line number") {
    const std::string path = write_temp("labels_bad.csv",
                                        "image_id,melanoma,seborrheic_keratosis\n"
                                        "ok,0,0\n"
                                        "bad,2,0\n");
    CHECK_THROWS_WITH_AS(load_labels(path), doctest::Contains("line 3"), FormatError);
    fs::remove(path);
}

TEST_CASE("empty file with header gives an empty list") {
    const std::string path =
        write_temp("labels_empty.csv", "image_id,melanoma,seborrheic_keratosis\n");
    CHECK(load_labels(path).empty());
    fs::remove(path);
}

TEST_CASE("ppm roundtrip is bit-exact") {
    RgbImage img(3, 2);
    for (std::size_t i = 0; i < img.px.size(); ++i)
        img.px[i] = static_cast<std::uint8_t>(i * 13 % 256);
    const std::string path = (fs::temp_directory_path() / "roundtrip.ppm").string();
    encode_image(img, path);
    const RgbImage back = decode_image(path);
    CHECK(back.w == 3);
    CHECK(back.h == 2);
    CHECK(back.px == img.px);
    fs::remove(path);
}

TEST_CASE("png roundtrip is lossless for rgb") {
    RgbImage img(8, 5);
    for (std::size_t i = 0; i < img.px.size(); ++i)
        img.px[i] = static_cast<std::uint8_t>((i * 31 + 7) % 256);
    const std::string path = (fs::temp_directory_path() / "roundtrip.png").string();
    encode_image(img, path);
    const RgbImage back = decode_image(path);
    CHECK(back.px == img.px);
    fs::remove(path);
}

TEST_CASE("truncated ppm is a format error") {
    const std::string path = write_temp("truncated.ppm", "P6\n4 4\n255\nxy");
    CHECK_THROWS_AS(decode_image(path), FormatError);
    fs::remove(path);
}

TEST_CASE("hand-built 2x2 P6 file decodes to known pixels") {
    const std::string path = (fs::temp_directory_path() / "hand.ppm").string();
    std::ofstream out(path, std::ios::binary);
    out << "P6\n2 2\n255\n";
    const unsigned char bytes[12] = {255, 0, 0, 0, 255, 0, 0, 0, 255, 10, 20, 30};
    out.write(reinterpret_cast<const char*>(bytes), 12);
    out.close();
    const RgbImage img = decode_image(path);
    CHECK(img.at(0, 0, 0) == 255);
    CHECK(img.at(1, 0, 1) == 255);
    CHECK(img.at(0, 1, 2) == 255);
    CHECK(img.at(1, 1, 0) == 10);
    CHECK(img.at(1, 1, 1) == 20);
    CHECK(img.at(1, 1, 2) == 30);
    fs::remove(path);
}

TEST_CASE("unsupported format is a format error") {
    const std::string path = write_temp("garbage.img", "this is not an image");
    CHECK_THROWS_AS(decode_image(path), FormatError);
    fs::remove(path);
}

TEST_CASE("resize identities") {
    RgbImage img(4, 4);
    for (std::size_t i = 0; i < img.px.size(); ++i)
        img.px[i] = static_cast<std::uint8_t>(i * 7 % 256);
    CHECK(resize_bilinear(img, 4, 4).px == img.px);

    RgbImage constant(3, 3);
    std::fill(constant.px.begin(), constant.px.end(), 99);
    const RgbImage up = resize_bilinear(constant, 11, 6);
    for (auto v : up.px) CHECK(v == 99);
}

TEST_CASE("2x upscale of a 2x2 checker matches the bilinear closed form") {
    RgbImage img(2, 2);
    for (int ch = 0; ch < 3; ++ch) {
        img.at(0, 0, ch) = 0;
        img.at(1, 0, ch) = 200;
        img.at(0, 1, ch) = 200;
        img.at(1, 1, ch) = 0;
    }
    // corner-aligned 2->4: sample positions 0, 1/3, 2/3, 1 of the source span
    const RgbImage up = resize_bilinear(img, 4, 4);
    CHECK(up.at(0, 0, 0) == 0);
    CHECK(up.at(3, 0, 0) == 200);
    CHECK(up.at(1, 0, 0) == static_cast<std::uint8_t>(std::lround(200.0 / 3.0)));
    CHECK(up.at(2, 0, 0) == static_cast<std::uint8_t>(std::lround(400.0 / 3.0)));
    // center (1/3,1/3): bilinear mix of 0,200,200,0
    const double c = (4.0 / 9.0) * 0 + (2.0 / 9.0) * 200 + (2.0 / 9.0) * 200 + (1.0 / 9.0) * 0;
    CHECK(up.at(1, 1, 0) == static_cast<std::uint8_t>(std::lround(c)));
}

TEST_CASE("synthetic generation is deterministic and class-structured") {
    SyntheticSpec spec;
    spec.image_size = 48;
    spec.per_class = 2;
    spec.seed = 11;
    const auto a = generate_synthetic(spec);
    const auto b = generate_synthetic(spec);
    REQUIRE(a.size() == 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].image.px == b[i].image.px);
        CHECK(a[i].id == b[i].id);
        CHECK(a[i].lesion_bbox == b[i].lesion_bbox);
        // the lesion bbox is nonempty and inside the image
        CHECK(a[i].lesion_bbox.width() > 0);
        CHECK(a[i].lesion_bbox.x1 <= 48);
        CHECK(a[i].lesion_bbox.y1 <= 48);
    }
}

TEST_CASE("hair density zero means empty truth masks") {
    SyntheticSpec spec;
    spec.image_size = 32;
    spec.per_class = 1;
    spec.hair_density = 0.0;
    for (const auto& s : generate_synthetic(spec)) {
        CHECK(s.hair_mask.count() == 0);
        CHECK(s.image.px == s.clean_image.px);
    }
}

TEST_CASE("materialize + manifest roundtrip") {
    SyntheticSpec spec;
    spec.image_size = 32;
    spec.per_class = 2;
    spec.seed = 12;
    const auto samples = generate_synthetic(spec);
    const std::string dir = (fs::temp_directory_path() / "synth_test").string();
    const DatasetManifest manifest = materialize_synthetic(samples, dir);
    CHECK(manifest.entries.size() == 6);

    const DatasetManifest loaded =
        load_manifest((fs::path(dir) / "manifest.csv").string());
    REQUIRE(loaded.entries.size() == 6);
    for (std::size_t i = 0; i < loaded.entries.size(); ++i) {
        CHECK(loaded.entries[i].label.class_id() == samples[i].class_id);
        REQUIRE(loaded.entries[i].true_bbox.has_value());
        CHECK(*loaded.entries[i].true_bbox == samples[i].lesion_bbox);
        CHECK(fs::exists(loaded.entries[i].image_path));
    }
    fs::remove_all(dir);
}

TEST_CASE("split is stratified, seeded and exhaustive") {
    SyntheticSpec spec;
    spec.image_size = 24;
    spec.per_class = 10;
    spec.seed = 13;
    const std::string dir = (fs::temp_directory_path() / "split_test").string();
    const DatasetManifest manifest = materialize_synthetic(generate_synthetic(spec), dir);

    SUBCASE("all-train split") {
        const auto [train, val] = split(manifest, 1.0, 1);
        CHECK(train.entries.size() == 30);
        CHECK(val.entries.empty());
    }

    SUBCASE("90/10 split keeps per-class arithmetic") {
        const auto [train, val] = split(manifest, 0.9, 1);
        CHECK(train.entries.size() == 27);
        CHECK(val.entries.size() == 3);
        const auto counts = count_classes([&] {
            std::vector<LabelRecord> ls;
            for (const auto& e : val.entries) ls.push_back(e.label);
            return ls;
        }());
        CHECK(counts.melanoma == 1);
        CHECK(counts.seborrheic_keratosis == 1);
        CHECK(counts.nevus == 1);
    }

    SUBCASE("same seed gives the identical split") {
        const auto [t1, v1] = split(manifest, 0.8, 5);
        const auto [t2, v2] = split(manifest, 0.8, 5);
        REQUIRE(t1.entries.size() == t2.entries.size());
        for (std::size_t i = 0; i < t1.entries.size(); ++i)
            CHECK(t1.entries[i].image_path == t2.entries[i].image_path);
    }

    fs::remove_all(dir);
}

TEST_CASE("split with a missing class cannot stratify") {
    DatasetManifest manifest;
    ManifestEntry e;
    e.image_path = "x.png";
    e.label = LabelRecord::from_class("x", 0);
    manifest.entries.push_back(e);
    CHECK_THROWS_AS(split(manifest, 0.5, 0), DataError);
}
