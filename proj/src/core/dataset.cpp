#include "core/dataset.hpp"

#include <algorithm>
#include <filesystem>

#include "core/error.hpp"

namespace fs = std::filesystem;

namespace mamsr {

std::vector<std::string> list_pngs(const std::string& dir) {
    check(fs::is_directory(dir), ErrorCode::not_found, "not a directory: " + dir);
    std::vector<std::string> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return char(std::tolower(c)); });
        if (ext == ".png") out.push_back(entry.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

Dataset load_dataset(const std::string& hr_dir, const std::string& lr_dir, int scale,
                     std::vector<std::string>* warnings) {
    check_arg(scale >= 1, "load_dataset: bad scale");
    Dataset data;
    data.scale = scale;
    for (const auto& path : list_pngs(hr_dir)) {
        const std::string name = fs::path(path).filename().string();
        Image hr;
        try {
            hr = load_png(path, warnings);
        } catch (const Error& e) {
            if (warnings) warnings->push_back(name + ": skipped (" + e.what() + ")");
            continue;
        }
        const int cw = (hr.width / scale) * scale;
        const int ch = (hr.height / scale) * scale;
        if (cw < scale || ch < scale) {
            if (warnings) warnings->push_back(name + ": skipped (smaller than the scale factor)");
            continue;
        }
        if (cw != hr.width || ch != hr.height) {
            Image cropped(cw, ch);
            for (int y = 0; y < ch; ++y) {
                std::copy_n(hr.px(0, y), std::size_t(cw) * 3, cropped.px(0, y));
            }
            hr = std::move(cropped);
        }

        Image lr;
        if (!lr_dir.empty()) {
            const fs::path lp = fs::path(lr_dir) / name;
            try {
                lr = load_png(lp.string(), warnings);
            } catch (const Error& e) {
                if (warnings) warnings->push_back(name + ": skipped, no usable LR (" + e.what() + ")");
                continue;
            }
            check_shape(lr.width == cw / scale && lr.height == ch / scale,
                        "LR image " + name + " is " + std::to_string(lr.width) + "x" +
                            std::to_string(lr.height) + ", expected " + std::to_string(cw / scale) + "x" +
                            std::to_string(ch / scale));
        } else {
            lr = bicubic_resize(hr, cw / scale, ch / scale);
        }
        data.items.push_back({name, std::move(hr), std::move(lr)});
    }
    return data;
}

std::array<float, 3> compute_rgb_mean(const std::vector<const Image*>& images) {
    check_arg(!images.empty(), "compute_rgb_mean: no images");
    double acc[3] = {0.0, 0.0, 0.0};
    std::int64_t pixels = 0;
    for (const Image* img : images) {
        const std::int64_t n = std::int64_t(img->width) * img->height;
        pixels += n;
        for (std::int64_t i = 0; i < n; ++i) {
            acc[0] += img->v[std::size_t(i * 3 + 0)];
            acc[1] += img->v[std::size_t(i * 3 + 1)];
            acc[2] += img->v[std::size_t(i * 3 + 2)];
        }
    }
    return {float(acc[0] / double(pixels)), float(acc[1] / double(pixels)), float(acc[2] / double(pixels))};
}

std::array<float, 3> lr_rgb_mean(const Dataset& data) {
    std::vector<const Image*> imgs;
    imgs.reserve(data.items.size());
    for (const auto& item : data.items) imgs.push_back(&item.lr);
    return compute_rgb_mean(imgs);
}

namespace {

// clockwise quarter turn of a square (1,C,S,S) patch
Tensor<float> rot90cw(const Tensor<float>& p) {
    Tensor<float> out(p.n, p.c, p.w, p.h);
    for (int c = 0; c < p.c; ++c) {
        const float* src = p.plane(0, c);
        float* dst = out.plane(0, c);
        for (int y = 0; y < out.h; ++y) {
            for (int x = 0; x < out.w; ++x) {
                dst[std::int64_t(y) * out.w + x] = src[std::int64_t(p.h - 1 - x) * p.w + y];
            }
        }
    }
    return out;
}

Tensor<float> flip_h(const Tensor<float>& p) {
    Tensor<float> out(p.n, p.c, p.h, p.w);
    for (int c = 0; c < p.c; ++c) {
        const float* src = p.plane(0, c);
        float* dst = out.plane(0, c);
        for (int y = 0; y < p.h; ++y) {
            for (int x = 0; x < p.w; ++x) {
                dst[std::int64_t(y) * p.w + x] = src[std::int64_t(y) * p.w + (p.w - 1 - x)];
            }
        }
    }
    return out;
}

} // namespace

Tensor<float> apply_dihedral(const Tensor<float>& patch, int transform) {
    check_arg(transform >= 0 && transform < 8, "apply_dihedral: transform must be in [0,8)");
    Tensor<float> out = patch;
    if (transform & 4) out = flip_h(out);
    for (int k = 0; k < (transform & 3); ++k) out = rot90cw(out);
    return out;
}

void sample_batch(const Dataset& data, int patch_lr, int batch, const std::array<float, 3>& rgb_mean,
                  Rng& rng, bool augment, Tensor<float>* lr_out, Tensor<float>* hr_out) {
    check_arg(!data.items.empty(), "sample_batch: empty dataset");
    check_arg(batch >= 1 && patch_lr >= 1, "sample_batch: bad batch/patch size");
    const int s = data.scale;
    const int hp = patch_lr * s;
    *lr_out = Tensor<float>(batch, 3, patch_lr, patch_lr);
    *hr_out = Tensor<float>(batch, 3, hp, hp);

    for (int b = 0; b < batch; ++b) {
        const auto& item = data.items[std::size_t(rng.uniform_int(std::int64_t(data.items.size())))];
        check(item.lr.width >= patch_lr && item.lr.height >= patch_lr, ErrorCode::invalid_argument,
              "image smaller than patch: " + item.name + " (" + std::to_string(item.lr.width) + "x" +
                  std::to_string(item.lr.height) + " LR vs patch " + std::to_string(patch_lr) + ")");
        const int x0 = int(rng.uniform_int(item.lr.width - patch_lr + 1));
        const int y0 = int(rng.uniform_int(item.lr.height - patch_lr + 1));
        const int transform = augment ? int(rng.uniform_int(8)) : 0;

        Tensor<float> lp(1, 3, patch_lr, patch_lr);
        for (int c = 0; c < 3; ++c) {
            float* dst = lp.plane(0, c);
            for (int y = 0; y < patch_lr; ++y) {
                for (int x = 0; x < patch_lr; ++x) {
                    dst[std::int64_t(y) * patch_lr + x] = item.lr.px(x0 + x, y0 + y)[c] - rgb_mean[std::size_t(c)];
                }
            }
        }
        Tensor<float> hpat(1, 3, hp, hp);
        for (int c = 0; c < 3; ++c) {
            float* dst = hpat.plane(0, c);
            for (int y = 0; y < hp; ++y) {
                for (int x = 0; x < hp; ++x) {
                    dst[std::int64_t(y) * hp + x] = item.hr.px(x0 * s + x, y0 * s + y)[c] - rgb_mean[std::size_t(c)];
                }
            }
        }
        lp = apply_dihedral(lp, transform);
        hpat = apply_dihedral(hpat, transform);

        std::copy_n(lp.data(), lp.size(), lr_out->plane(b, 0));
        std::copy_n(hpat.data(), hpat.size(), hr_out->plane(b, 0));
    }
}

} // namespace mamsr
