#pragma once

#include <array>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace mamsr {

// RGB image, interleaved rows, values in [0,1].
struct Image {
    int width = 0;
    int height = 0;
    std::vector<float> v; // width * height * 3

    Image() = default;
    Image(int w, int h) : width(w), height(h), v(std::size_t(std::int64_t(w) * h * 3), 0.f) {}

    float* px(int x, int y) { return v.data() + (std::int64_t(y) * width + x) * 3; }
    const float* px(int x, int y) const { return v.data() + (std::int64_t(y) * width + x) * 3; }
};

// PNG, 8- or 16-bit, gray / gray+alpha / RGB / RGBA, non-interlaced. Gray
// expands to three equal channels; alpha is dropped with a warning appended
// to *warnings. 16-bit samples are scaled by 1/65535.
Image load_png(const std::string& path, std::vector<std::string>* warnings = nullptr);

// 8-bit RGB output; values clamped to [0,1] and quantized as round(v*255).
void save_png(const Image& img, const std::string& path);

// Separable cubic-convolution resampling, kernel parameter a = -0.5,
// center-aligned grid, coordinates clamped at the borders. When an axis
// shrinks, the kernel is widened by the scale factor (anti-aliasing) and the
// weights renormalized to sum 1.
Image bicubic_resize(const Image& img, int out_w, int out_h);

// single-channel variant used by metric/inspection code
std::vector<float> bicubic_resize_plane(const std::vector<float>& src, int w, int h, int out_w, int out_h);

Image image_from_tensor(const Tensor<float>& t, int batch_index);
Tensor<float> tensor_from_image(const Image& img);

inline Image clip01(Image img) {
    for (auto& x : img.v) x = x < 0.f ? 0.f : (x > 1.f ? 1.f : x);
    return img;
}

} // namespace mamsr
