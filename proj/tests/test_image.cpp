#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fenceguide/image.hpp"
#include "fenceguide/rng.hpp"
#include "oracles.hpp"

using namespace fenceguide;

namespace {

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("image constructors validate dimensions and buffer size") {
    CHECK_THROWS_AS(GrayImage(0, 4), Error);
    CHECK_THROWS_AS(GrayImage(4, -1), Error);
    CHECK_THROWS_AS(GrayImage(2, 2, std::vector<std::uint8_t>{1, 2, 3}), Error);

    GrayImage img(3, 2, 7);
    CHECK(img.width() == 3);
    CHECK(img.height() == 2);
    CHECK(img.size() == 6);
    CHECK(img.at(1, 2) == 7);
}

TEST_CASE("mask rejects values other than 0 and 1") {
    CHECK_THROWS_AS(BinaryMask(2, 2, 2), Error);
    CHECK_THROWS_AS(BinaryMask(2, 2, std::vector<std::uint8_t>{0, 1, 1, 9}), Error);

    BinaryMask m(2, 2);
    m.set(0, 1, 1);
    CHECK(m.count_ones() == 1);
    CHECK_THROWS_AS(m.set(0, 0, 3), Error);
}

TEST_CASE("clip_nonneg") {
    CHECK(clip_nonneg(5) == 5);
    CHECK(clip_nonneg(-5) == 0);
    CHECK(clip_nonneg(0) == 0);
    CHECK(clip_nonneg(1.5) == 1.5);
    CHECK(clip_nonneg(-0.25) == 0.0);
}

TEST_CASE("shift_horizontal moves content right for positive shifts") {
    BinaryMask m(4, 1);
    m.set(0, 1, 1);

    BinaryMask right = shift_horizontal(m, 2);
    CHECK(right.at(0, 3) == 1);
    CHECK(right.count_ones() == 1);

    BinaryMask left = shift_horizontal(m, -1);
    CHECK(left.at(0, 0) == 1);
    CHECK(left.count_ones() == 1);

    // Content pushed past the border disappears; vacated cells are zero.
    BinaryMask gone = shift_horizontal(m, 3);
    CHECK(gone.count_ones() == 0);

    CHECK(shift_horizontal(m, 0) == m);
    CHECK_THROWS_AS(shift_horizontal(m, 4), Error);
    CHECK_THROWS_AS(shift_horizontal(m, -4), Error);
}

TEST_CASE("gray image shift matches mask shift") {
    GrayImage img(5, 2);
    img.at(0, 2) = 200;
    img.at(1, 4) = 10;
    GrayImage s = shift_horizontal(img, 1);
    CHECK(s.at(0, 3) == 200);
    CHECK(s.at(1, 4) == 0); // the 10 at col 4 moved past the edge
    CHECK(s.at(0, 0) == 0);
}

TEST_CASE("binarize is strictly-greater") {
    GrayImage img(3, 1);
    img.at(0, 0) = 99;
    img.at(0, 1) = 100;
    img.at(0, 2) = 101;
    BinaryMask m = binarize(img, 100);
    CHECK(m.at(0, 0) == 0);
    CHECK(m.at(0, 1) == 0);
    CHECK(m.at(0, 2) == 1);
}

TEST_CASE("luma weights") {
    CHECK(luma_from_rgb(255, 255, 255) == 255);
    CHECK(luma_from_rgb(0, 0, 0) == 0);
    CHECK(luma_from_rgb(255, 0, 0) == 76);  // round(0.299 * 255)
    CHECK(luma_from_rgb(0, 255, 0) == 150); // round(0.587 * 255)
    CHECK(luma_from_rgb(0, 0, 255) == 29);  // round(0.114 * 255)
}

TEST_CASE("mask/image conversions") {
    BinaryMask m(2, 1);
    m.set(0, 1, 1);
    GrayImage img = mask_to_image(m);
    CHECK(img.at(0, 0) == 0);
    CHECK(img.at(0, 1) == 255);
    CHECK(image_to_mask(img) == m);

    GrayImage g(2, 1);
    g.at(0, 0) = 127; // not strictly above 127
    g.at(0, 1) = 128;
    BinaryMask t = image_to_mask(g);
    CHECK(t.at(0, 0) == 0);
    CHECK(t.at(0, 1) == 1);
}

TEST_CASE("png round trip preserves every pixel") {
    Rng rng(123);
    GrayImage img(37, 21);
    for (int r = 0; r < img.height(); ++r)
        for (int c = 0; c < img.width(); ++c)
            img.at(r, c) = static_cast<std::uint8_t>(rng.uniform_int(0, 255));

    const std::string path = tmp_path("fg_roundtrip.png");
    save_image(img, path);
    GrayImage back = load_image(path);
    CHECK(back == img);
    std::remove(path.c_str());
}

TEST_CASE("pgm round trip") {
    GrayImage img(4, 3);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c)
            img.at(r, c) = static_cast<std::uint8_t>(40 * r + 10 * c);

    const std::string path = tmp_path("fg_roundtrip.pgm");
    save_image(img, path);
    CHECK(load_image(path) == img);
    std::remove(path.c_str());
}

TEST_CASE("mask round trip stores 0/255 on disk") {
    BinaryMask m(8, 8);
    for (int r = 0; r < 8; ++r) m.set(r, (r * 3) % 8, 1);

    const std::string path = tmp_path("fg_mask.png");
    save_mask(m, path);
    GrayImage raw = load_image(path);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c)
            CHECK(raw.at(r, c) == (m.at(r, c) ? 255 : 0));
    CHECK(load_mask(path) == m);
    std::remove(path.c_str());
}

TEST_CASE("color png loads through the luma conversion") {
    const int w = 5, h = 4;
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w) * h * 3);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            rgb[(static_cast<std::size_t>(r) * w + c) * 3 + 0] = static_cast<std::uint8_t>(30 * c);
            rgb[(static_cast<std::size_t>(r) * w + c) * 3 + 1] = static_cast<std::uint8_t>(50 * r);
            rgb[(static_cast<std::size_t>(r) * w + c) * 3 + 2] = 200;
        }

    const std::string path = tmp_path("fg_color.png");
    oracle::write_rgb_png(path, w, h, rgb);
    GrayImage img = load_image(path);
    REQUIRE(img.width() == w);
    REQUIRE(img.height() == h);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            CHECK(img.at(r, c) == luma_from_rgb(static_cast<std::uint8_t>(30 * c),
                                                static_cast<std::uint8_t>(50 * r), 200));
    std::remove(path.c_str());
}

TEST_CASE("load errors carry the right kind") {
    try {
        load_image(tmp_path("fg_nonexistent_48151.png"));
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::FileMissing);
    }

    const std::string garbage = tmp_path("fg_garbage.png");
    {
        std::ofstream out(garbage, std::ios::binary);
        out << "this is not an image";
    }
    try {
        load_image(garbage);
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::FileFormat);
    }
    std::remove(garbage.c_str());

    // A PNG header with a corrupt body must be rejected as malformed.
    const std::string broken = tmp_path("fg_broken.png");
    {
        GrayImage img(6, 6, 100);
        save_image(img, broken);
        std::fstream f(broken, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(40);
        f.put('\x7f');
    }
    CHECK_THROWS_AS(load_image(broken), Error);
    std::remove(broken.c_str());

    // Gray-level files load as masks through the >127 threshold.
    const std::string gray = tmp_path("fg_gray_levels.png");
    {
        GrayImage img(1, 3, 0);
        img.at(0, 0) = 127;
        img.at(0, 1) = 128;
        img.at(0, 2) = 255;
        save_image(img, gray);
    }
    BinaryMask levels = load_mask(gray);
    CHECK(levels.at(0, 0) == 0);
    CHECK(levels.at(0, 1) == 1);
    CHECK(levels.at(0, 2) == 1);
    std::remove(gray.c_str());
}
