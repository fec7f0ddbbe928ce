#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/image.hpp"

namespace mamsr {

namespace {

// cubic convolution kernel, a = -0.5
double cubic(double t) {
    constexpr double a = -0.5;
    t = std::fabs(t);
    if (t <= 1.0) return (a + 2.0) * t * t * t - (a + 3.0) * t * t + 1.0;
    if (t < 2.0) return a * t * t * t - 5.0 * a * t * t + 8.0 * a * t - 4.0 * a;
    return 0.0;
}

struct Tap {
    int first;                  // first source index (clamped reads happen at apply time)
    std::vector<float> weights; // normalized to sum 1
};

// Contribution list for one axis. Center-aligned mapping; when shrinking the
// kernel support widens by in/out so the filter also band-limits.
std::vector<Tap> make_taps(int in_size, int out_size) {
    std::vector<Tap> taps;
    taps.resize(std::size_t(out_size));
    const double scale = double(in_size) / double(out_size);
    const double filter_scale = std::max(1.0, scale);
    const double support = 2.0 * filter_scale;
    for (int o = 0; o < out_size; ++o) {
        const double center = (o + 0.5) * scale - 0.5;
        const int lo = int(std::ceil(center - support));
        const int hi = int(std::floor(center + support));
        Tap& tap = taps[std::size_t(o)];
        tap.first = lo;
        tap.weights.resize(std::size_t(hi - lo + 1));
        double sum = 0.0;
        for (int i = lo; i <= hi; ++i) {
            const double w = cubic((center - i) / filter_scale);
            tap.weights[std::size_t(i - lo)] = float(w);
            sum += w;
        }
        check_arg(sum > 0.0, "bicubic: degenerate kernel");
        const float inv = float(1.0 / sum);
        for (auto& w : tap.weights) w *= inv;
    }
    return taps;
}

} // namespace

std::vector<float> bicubic_resize_plane(const std::vector<float>& src, int w, int h, int out_w, int out_h) {
    check_arg(out_w >= 1 && out_h >= 1, "bicubic: output dims must be >= 1");
    check_arg(w >= 1 && h >= 1 && std::int64_t(src.size()) == std::int64_t(w) * h, "bicubic: bad plane");

    const auto xtaps = make_taps(w, out_w);
    const auto ytaps = make_taps(h, out_h);

    // horizontal, then vertical
    std::vector<float> tmp(std::size_t(std::int64_t(out_w) * h));
    for (int y = 0; y < h; ++y) {
        const float* row = src.data() + std::int64_t(y) * w;
        float* dst = tmp.data() + std::int64_t(y) * out_w;
        for (int o = 0; o < out_w; ++o) {
            const Tap& t = xtaps[std::size_t(o)];
            double acc = 0.0;
            for (std::size_t k = 0; k < t.weights.size(); ++k) {
                const int xi = std::clamp(t.first + int(k), 0, w - 1);
                acc += double(t.weights[k]) * double(row[xi]);
            }
            dst[o] = float(acc);
        }
    }

    std::vector<float> out(std::size_t(std::int64_t(out_w) * out_h));
    for (int o = 0; o < out_h; ++o) {
        const Tap& t = ytaps[std::size_t(o)];
        float* dst = out.data() + std::int64_t(o) * out_w;
        for (int x = 0; x < out_w; ++x) {
            double acc = 0.0;
            for (std::size_t k = 0; k < t.weights.size(); ++k) {
                const int yi = std::clamp(t.first + int(k), 0, h - 1);
                acc += double(t.weights[k]) * double(tmp[std::size_t(std::int64_t(yi) * out_w + x)]);
            }
            dst[x] = float(acc);
        }
    }
    return out;
}

Image bicubic_resize(const Image& img, int out_w, int out_h) {
    check_arg(img.width >= 1 && img.height >= 1, "bicubic: empty image");
    Image out(out_w, out_h);
    std::vector<float> plane(std::size_t(std::int64_t(img.width) * img.height));
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                plane[std::size_t(std::int64_t(y) * img.width + x)] = img.px(x, y)[c];
            }
        }
        const auto resized = bicubic_resize_plane(plane, img.width, img.height, out_w, out_h);
        for (int y = 0; y < out_h; ++y) {
            for (int x = 0; x < out_w; ++x) {
                out.px(x, y)[c] = resized[std::size_t(std::int64_t(y) * out_w + x)];
            }
        }
    }
    return out;
}

} // namespace mamsr
