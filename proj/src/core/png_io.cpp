#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "core/error.hpp"
#include "core/image.hpp"

// Minimal PNG codec: chunk and filter layers here, DEFLATE via zlib.

namespace mamsr {

namespace {

constexpr unsigned char kSignature[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

std::uint32_t be32(const unsigned char* p) {
    return std::uint32_t(p[0]) << 24 | std::uint32_t(p[1]) << 16 | std::uint32_t(p[2]) << 8 | p[3];
}

void put_be32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back((unsigned char)(v >> 24));
    out.push_back((unsigned char)(v >> 16));
    out.push_back((unsigned char)(v >> 8));
    out.push_back((unsigned char)v);
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

void unfilter(std::vector<unsigned char>& raw, int height, std::size_t rowbytes, int bpp) {
    std::vector<unsigned char> prev(rowbytes, 0);
    for (int y = 0; y < height; ++y) {
        unsigned char* row = raw.data() + std::size_t(y) * (rowbytes + 1);
        const int filter = row[0];
        unsigned char* cur = row + 1;
        switch (filter) {
        case 0:
            break;
        case 1:
            for (std::size_t i = std::size_t(bpp); i < rowbytes; ++i) cur[i] = (unsigned char)(cur[i] + cur[i - std::size_t(bpp)]);
            break;
        case 2:
            for (std::size_t i = 0; i < rowbytes; ++i) cur[i] = (unsigned char)(cur[i] + prev[i]);
            break;
        case 3:
            for (std::size_t i = 0; i < rowbytes; ++i) {
                const int left = i >= std::size_t(bpp) ? cur[i - std::size_t(bpp)] : 0;
                cur[i] = (unsigned char)(cur[i] + (left + prev[i]) / 2);
            }
            break;
        case 4:
            for (std::size_t i = 0; i < rowbytes; ++i) {
                const int left = i >= std::size_t(bpp) ? cur[i - std::size_t(bpp)] : 0;
                const int upleft = i >= std::size_t(bpp) ? prev[i - std::size_t(bpp)] : 0;
                cur[i] = (unsigned char)(cur[i] + paeth(left, prev[i], upleft));
            }
            break;
        default:
            fail(ErrorCode::malformed, "png: unknown filter type " + std::to_string(filter));
        }
        std::memcpy(prev.data(), cur, rowbytes);
    }
}

} // namespace

Image load_png(const std::string& path, std::vector<std::string>* warnings) {
    std::ifstream f(path, std::ios::binary);
    check(f.good(), ErrorCode::not_found, "cannot open image: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    check(bytes.size() >= 8 && std::memcmp(bytes.data(), kSignature, 8) == 0, ErrorCode::malformed,
          "not a PNG file: " + path);

    int width = 0, height = 0, bitdepth = 0, colortype = 0;
    bool have_ihdr = false, have_iend = false;
    std::vector<unsigned char> idat;

    std::size_t pos = 8;
    while (pos + 12 <= bytes.size()) {
        const std::uint32_t len = be32(&bytes[pos]);
        check(pos + 12 + len <= bytes.size(), ErrorCode::malformed, "png: chunk overruns file");
        const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
        const unsigned char* data = &bytes[pos + 8];
        const std::uint32_t crc_stored = be32(&bytes[pos + 8 + len]);
        const std::uint32_t crc_calc =
            std::uint32_t(crc32(crc32(0, &bytes[pos + 4], 4), len ? data : Z_NULL, len));
        check(crc_stored == crc_calc, ErrorCode::malformed, "png: chunk CRC mismatch");

        if (std::memcmp(type, "IHDR", 4) == 0) {
            check(len == 13, ErrorCode::malformed, "png: bad IHDR size");
            width = int(be32(data));
            height = int(be32(data + 4));
            bitdepth = data[8];
            colortype = data[9];
            check(data[10] == 0 && data[11] == 0, ErrorCode::malformed, "png: bad compression/filter method");
            check(data[12] == 0, ErrorCode::unsupported, "png: interlaced images not supported");
            check(width > 0 && height > 0, ErrorCode::malformed, "png: bad dimensions");
            check(bitdepth == 8 || bitdepth == 16, ErrorCode::unsupported,
                  "png: only 8/16-bit depths supported, got " + std::to_string(bitdepth));
            check(colortype == 0 || colortype == 2 || colortype == 4 || colortype == 6,
                  ErrorCode::unsupported, "png: unsupported color type " + std::to_string(colortype));
            have_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            check(have_ihdr, ErrorCode::malformed, "png: IDAT before IHDR");
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            have_iend = true;
            break;
        }
        pos += 12 + len;
    }
    check(have_ihdr && have_iend && !idat.empty(), ErrorCode::malformed, "png: missing critical chunks");

    const int channels = colortype == 0 ? 1 : colortype == 2 ? 3 : colortype == 4 ? 2 : 4;
    const int bytes_per_sample = bitdepth / 8;
    const int bpp = channels * bytes_per_sample;
    const std::size_t rowbytes = std::size_t(width) * std::size_t(bpp);
    const std::size_t rawsize = std::size_t(height) * (rowbytes + 1);

    std::vector<unsigned char> raw(rawsize);
    uLongf destlen = uLongf(rawsize);
    const int zret = uncompress(raw.data(), &destlen, idat.data(), uLong(idat.size()));
    check(zret == Z_OK && destlen == rawsize, ErrorCode::malformed, "png: bad image data stream");

    unfilter(raw, height, rowbytes, bpp);

    if ((colortype == 4 || colortype == 6) && warnings) {
        warnings->push_back(path + ": alpha channel dropped");
    }

    Image img(width, height);
    const float divisor = bitdepth == 8 ? 255.f : 65535.f;
    for (int y = 0; y < height; ++y) {
        const unsigned char* row = raw.data() + std::size_t(y) * (rowbytes + 1) + 1;
        float* out = img.px(0, y);
        for (int x = 0; x < width; ++x) {
            const unsigned char* s = row + std::size_t(x) * std::size_t(bpp);
            float rgb[3];
            auto sample = [&](int idx) {
                if (bitdepth == 8) return float(s[idx]);
                return float((unsigned(s[idx * 2]) << 8) | s[idx * 2 + 1]);
            };
            if (channels <= 2) {
                rgb[0] = rgb[1] = rgb[2] = sample(0);
            } else {
                rgb[0] = sample(0);
                rgb[1] = sample(1);
                rgb[2] = sample(2);
            }
            out[std::int64_t(x) * 3 + 0] = rgb[0] / divisor;
            out[std::int64_t(x) * 3 + 1] = rgb[1] / divisor;
            out[std::int64_t(x) * 3 + 2] = rgb[2] / divisor;
        }
    }
    return img;
}

void save_png(const Image& img, const std::string& path) {
    check_arg(img.width > 0 && img.height > 0, "save_png: empty image");
    const std::size_t rowbytes = std::size_t(img.width) * 3;
    std::vector<unsigned char> raw(std::size_t(img.height) * (rowbytes + 1));
    for (int y = 0; y < img.height; ++y) {
        unsigned char* row = raw.data() + std::size_t(y) * (rowbytes + 1);
        row[0] = 0; // filter: none
        const float* src = img.px(0, y);
        for (std::size_t i = 0; i < rowbytes; ++i) {
            float v = src[i];
            v = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
            row[1 + i] = (unsigned char)std::lround(double(v) * 255.0);
        }
    }

    uLongf bound = compressBound(uLong(raw.size()));
    std::vector<unsigned char> compressed(bound);
    const int zret = compress2(compressed.data(), &bound, raw.data(), uLong(raw.size()), 6);
    check(zret == Z_OK, ErrorCode::io, "png: compression failed");
    compressed.resize(bound);

    std::vector<unsigned char> out(kSignature, kSignature + 8);
    auto chunk = [&](const char* type, const unsigned char* data, std::size_t len) {
        put_be32(out, std::uint32_t(len));
        const std::size_t start = out.size();
        out.insert(out.end(), type, type + 4);
        if (len) out.insert(out.end(), data, data + len);
        const std::uint32_t crc =
            std::uint32_t(crc32(crc32(0, &out[start], 4), len ? data : Z_NULL, uInt(len)));
        put_be32(out, crc);
    };

    unsigned char ihdr[13];
    ihdr[0] = (unsigned char)(std::uint32_t(img.width) >> 24);
    ihdr[1] = (unsigned char)(std::uint32_t(img.width) >> 16);
    ihdr[2] = (unsigned char)(std::uint32_t(img.width) >> 8);
    ihdr[3] = (unsigned char)img.width;
    ihdr[4] = (unsigned char)(std::uint32_t(img.height) >> 24);
    ihdr[5] = (unsigned char)(std::uint32_t(img.height) >> 16);
    ihdr[6] = (unsigned char)(std::uint32_t(img.height) >> 8);
    ihdr[7] = (unsigned char)img.height;
    ihdr[8] = 8;  // bit depth
    ihdr[9] = 2;  // RGB
    ihdr[10] = 0; // compression
    ihdr[11] = 0; // filter
    ihdr[12] = 0; // no interlace
    chunk("IHDR", ihdr, 13);
    chunk("IDAT", compressed.data(), compressed.size());
    chunk("IEND", nullptr, 0);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    check(f.good(), ErrorCode::io, "cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(out.data()), std::streamsize(out.size()));
    check(f.good(), ErrorCode::io, "write failed: " + path);
}

Image image_from_tensor(const Tensor<float>& t, int batch_index) {
    check_shape(t.c == 3, "image_from_tensor: need 3 channels");
    Image img(t.w, t.h);
    for (int c = 0; c < 3; ++c) {
        const float* p = t.plane(batch_index, c);
        for (int y = 0; y < t.h; ++y) {
            for (int x = 0; x < t.w; ++x) {
                img.px(x, y)[c] = p[std::int64_t(y) * t.w + x];
            }
        }
    }
    return img;
}

Tensor<float> tensor_from_image(const Image& img) {
    Tensor<float> t(1, 3, img.height, img.width);
    for (int c = 0; c < 3; ++c) {
        float* p = t.plane(0, c);
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                p[std::int64_t(y) * img.width + x] = img.px(x, y)[c];
            }
        }
    }
    return t;
}

} // namespace mamsr
