#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <zlib.h>

#include <cmath>
#include <fstream>

#include "core/image.hpp"
#include "testutil.hpp"

using namespace mamsr;
using namespace testutil;

namespace {

// hand-rolled PNG writer for color types the save path does not produce
void write_test_png(const std::string& path, int w, int h, int bitdepth, int colortype,
                    const std::vector<unsigned char>& samples) {
    const int channels = colortype == 0 ? 1 : colortype == 2 ? 3 : colortype == 4 ? 2 : 4;
    const std::size_t rowbytes = std::size_t(w) * std::size_t(channels) * std::size_t(bitdepth / 8);
    std::vector<unsigned char> raw;
    for (int y = 0; y < h; ++y) {
        raw.push_back(0);
        raw.insert(raw.end(), samples.begin() + std::ptrdiff_t(std::size_t(y) * rowbytes),
                   samples.begin() + std::ptrdiff_t(std::size_t(y + 1) * rowbytes));
    }
    uLongf bound = compressBound(uLong(raw.size()));
    std::vector<unsigned char> compressed(bound);
    REQUIRE(compress2(compressed.data(), &bound, raw.data(), uLong(raw.size()), 6) == Z_OK);
    compressed.resize(bound);

    std::vector<unsigned char> out{0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    auto be32 = [&](std::uint32_t v) {
        out.push_back((unsigned char)(v >> 24));
        out.push_back((unsigned char)(v >> 16));
        out.push_back((unsigned char)(v >> 8));
        out.push_back((unsigned char)v);
    };
    auto chunk = [&](const char* type, const std::vector<unsigned char>& data) {
        be32(std::uint32_t(data.size()));
        const std::size_t start = out.size();
        out.insert(out.end(), type, type + 4);
        out.insert(out.end(), data.begin(), data.end());
        const std::uint32_t crc = std::uint32_t(
            crc32(crc32(0, &out[start], 4), data.empty() ? Z_NULL : data.data(), uInt(data.size())));
        be32(crc);
    };
    std::vector<unsigned char> ihdr(13);
    ihdr[0] = (unsigned char)(std::uint32_t(w) >> 24);
    ihdr[1] = (unsigned char)(std::uint32_t(w) >> 16);
    ihdr[2] = (unsigned char)(std::uint32_t(w) >> 8);
    ihdr[3] = (unsigned char)w;
    ihdr[4] = (unsigned char)(std::uint32_t(h) >> 24);
    ihdr[5] = (unsigned char)(std::uint32_t(h) >> 16);
    ihdr[6] = (unsigned char)(std::uint32_t(h) >> 8);
    ihdr[7] = (unsigned char)h;
    ihdr[8] = (unsigned char)bitdepth;
    ihdr[9] = (unsigned char)colortype;
    ihdr[10] = ihdr[11] = ihdr[12] = 0;
    chunk("IHDR", ihdr);
    chunk("IDAT", compressed);
    chunk("IEND", {});
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(reinterpret_cast<const char*>(out.data()), std::streamsize(out.size()));
}

} // namespace

TEST_CASE("png 8-bit RGB round trip is pixel exact") {
    const std::string dir = make_temp_dir("png_rt");
    Image img(13, 7);
    Rng rng(1);
    // start from representable values: k/255
    for (auto& v : img.v) v = float(rng.uniform_int(256)) / 255.f;
    save_png(img, dir + "/a.png");
    Image back = load_png(dir + "/a.png");
    REQUIRE(back.width == 13);
    REQUIRE(back.height == 7);
    for (std::size_t i = 0; i < img.v.size(); ++i) CHECK(back.v[i] == img.v[i]);

    // second generation: the file bytes are a deterministic function of pixels
    save_png(back, dir + "/b.png");
    std::ifstream fa(dir + "/a.png", std::ios::binary), fb(dir + "/b.png", std::ios::binary);
    const std::string ba((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    const std::string bb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    CHECK(ba == bb);
}

TEST_CASE("png: grayscale expands to three equal channels") {
    const std::string dir = make_temp_dir("png_gray");
    std::vector<unsigned char> samples{10, 20, 30, 40, 50, 60};
    write_test_png(dir + "/g.png", 3, 2, 8, 0, samples);
    Image img = load_png(dir + "/g.png");
    REQUIRE(img.width == 3);
    REQUIRE(img.height == 2);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 3; ++x) {
            const float* p = img.px(x, y);
            CHECK(p[0] == p[1]);
            CHECK(p[1] == p[2]);
            CHECK(p[0] == doctest::Approx(samples[std::size_t(y * 3 + x)] / 255.f));
        }
}

TEST_CASE("png: 16-bit samples scale by 65535") {
    const std::string dir = make_temp_dir("png_16");
    // one pixel, big-endian 16-bit RGB: 0x0000, 0x8000, 0xFFFF
    std::vector<unsigned char> samples{0x00, 0x00, 0x80, 0x00, 0xff, 0xff};
    write_test_png(dir + "/deep.png", 1, 1, 16, 2, samples);
    Image img = load_png(dir + "/deep.png");
    CHECK(img.px(0, 0)[0] == doctest::Approx(0.f));
    CHECK(img.px(0, 0)[1] == doctest::Approx(32768.f / 65535.f));
    CHECK(img.px(0, 0)[2] == doctest::Approx(1.f));
}

TEST_CASE("png: alpha dropped with warning") {
    const std::string dir = make_temp_dir("png_rgba");
    std::vector<unsigned char> samples{100, 150, 200, 128};
    write_test_png(dir + "/a.png", 1, 1, 8, 6, samples);
    std::vector<std::string> warnings;
    Image img = load_png(dir + "/a.png", &warnings);
    CHECK(img.px(0, 0)[0] == doctest::Approx(100 / 255.f));
    CHECK(img.px(0, 0)[2] == doctest::Approx(200 / 255.f));
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("alpha") != std::string::npos);
}

TEST_CASE("png: filter types survive a libpng-free decode") {
    // our encoder always writes filter 0; exercise filtered rows via
    // synthetic content through a full save/load of a gradient (content is
    // chosen so Sub/Up filters would matter if mishandled)
    const std::string dir = make_temp_dir("png_filters");
    Image img(32, 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            img.px(x, y)[0] = float(x) / 31.f;
            img.px(x, y)[1] = float(y) / 31.f;
            img.px(x, y)[2] = float((x + y) % 32) / 31.f;
        }
    save_png(img, dir + "/grad.png");
    Image back = load_png(dir + "/grad.png");
    for (std::size_t i = 0; i < img.v.size(); ++i) {
        CHECK(std::fabs(back.v[i] - img.v[i]) < 0.5f / 255.f + 1e-6f);
    }
}

TEST_CASE("png: distinct load errors") {
    const std::string dir = make_temp_dir("png_err");
    try {
        load_png(dir + "/missing.png");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::not_found);
    }

    std::ofstream f(dir + "/junk.png", std::ios::binary);
    f << "this is not a png at all";
    f.close();
    try {
        load_png(dir + "/junk.png");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::malformed);
    }

    // palette color type is unsupported
    std::vector<unsigned char> samples{0};
    write_test_png(dir + "/pal.png", 1, 1, 8, 3, samples);
    try {
        load_png(dir + "/pal.png");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::unsupported);
    }

    // truncated file
    save_png(synthetic_image(8, 8, 5), dir + "/ok.png");
    std::ifstream in(dir + "/ok.png", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream out(dir + "/trunc.png", std::ios::binary);
    out.write(bytes.data(), std::streamsize(bytes.size() - 8));
    out.close();
    try {
        load_png(dir + "/trunc.png");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::malformed);
    }
}

TEST_CASE("loaded values stay in [0,1]; saved files reload within 1/255") {
    const std::string dir = make_temp_dir("png_range");
    Image img = synthetic_image(21, 17, 9);
    img.v[0] = -0.5f; // out-of-gamut values clamp on save
    img.v[1] = 1.5f;
    save_png(img, dir + "/r.png");
    Image back = load_png(dir + "/r.png");
    for (std::size_t i = 0; i < back.v.size(); ++i) {
        CHECK(back.v[i] >= 0.f);
        CHECK(back.v[i] <= 1.f);
        const float clamped = std::min(1.f, std::max(0.f, img.v[i]));
        CHECK(std::fabs(back.v[i] - clamped) <= 1.f / 255.f);
    }
}

TEST_CASE("bicubic: identity size and constant images are preserved") {
    Image img = synthetic_image(24, 18, 11);
    Image same = bicubic_resize(img, 24, 18);
    double worst = 0.0;
    for (std::size_t i = 0; i < img.v.size(); ++i) {
        worst = std::max(worst, std::fabs(double(same.v[i]) - double(img.v[i])));
    }
    CHECK(worst < 1e-6);

    Image flat(17, 13);
    std::fill(flat.v.begin(), flat.v.end(), 0.37f);
    for (auto [w, h] : {std::pair{9, 5}, {34, 26}, {17, 13}, {5, 40}}) {
        Image r = bicubic_resize(flat, w, h);
        for (float v : r.v) CHECK(std::fabs(v - 0.37f) < 1e-6f);
    }
}

TEST_CASE("bicubic: downscaled linear ramp stays linear in the interior") {
    const int w = 64, h = 16;
    Image ramp(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) ramp.px(x, y)[c] = float(x) / float(w - 1);
    Image down = bicubic_resize(ramp, w / 2, h / 2);
    for (int x = 2; x < w / 2 - 2; ++x) {
        // output pixel x samples source coordinate 2x + 0.5
        const double expect = (2.0 * x + 0.5) / double(w - 1);
        CHECK(std::fabs(double(down.px(x, 4)[0]) - expect) < 1e-3);
    }
}

TEST_CASE("bicubic: resize commutes with transposition") {
    Image img = synthetic_image(28, 20, 13);
    Image trans(20, 28);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 28; ++x)
            for (int c = 0; c < 3; ++c) trans.px(y, x)[c] = img.px(x, y)[c];

    Image a = bicubic_resize(img, 14, 10);  // resize then transpose
    Image b = bicubic_resize(trans, 10, 14); // transpose then resize
    double worst = 0.0;
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 14; ++x)
            for (int c = 0; c < 3; ++c)
                worst = std::max(worst, std::fabs(double(a.px(x, y)[c]) - double(b.px(y, x)[c])));
    CHECK(worst < 1e-6);
}

TEST_CASE("tensor/image conversions round trip") {
    Image img = synthetic_image(11, 6, 21);
    Tensor<float> t = tensor_from_image(img);
    CHECK(t.n == 1);
    CHECK(t.c == 3);
    CHECK(t.h == 6);
    CHECK(t.w == 11);
    Image back = image_from_tensor(t, 0);
    CHECK(back.v == img.v);
}
