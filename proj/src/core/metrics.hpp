#pragma once

#include <string>
#include <vector>

#include "core/image.hpp"

namespace mamsr {

// Luma plane on the 0-255 scale (BT.601 studio swing: values in [16, 235]).
struct YImage {
    int width = 0;
    int height = 0;
    std::vector<float> v;

    YImage() = default;
    YImage(int w, int h) : width(w), height(h), v(std::size_t(std::int64_t(w) * h), 0.f) {}
};

// Y = 16 + 65.481 R + 128.553 G + 24.966 B, RGB in [0,1]
YImage rgb_to_y(const Image& img);

// 10 log10(255^2 / MSE) after removing `shave` pixels from every side.
// Identical inputs return +infinity.
double psnr(const YImage& a, const YImage& b, int shave);

// Mean local SSIM, 11x11 Gaussian window sigma 1.5, K1 = 0.01, K2 = 0.03,
// L = 255, valid-region filtering (no padding). Requires at least 11x11
// pixels after shaving.
double ssim(const YImage& a, const YImage& b, int shave);

} // namespace mamsr
