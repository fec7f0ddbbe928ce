#pragma once

#include <array>
#include <string>
#include <vector>

#include "core/image.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace mamsr {

struct ImagePair {
    std::string name;
    Image hr; // cropped to a multiple of scale
    Image lr;
};

struct Dataset {
    int scale = 2;
    std::vector<ImagePair> items;
};

// Sorted *.png listing (deterministic order).
std::vector<std::string> list_pngs(const std::string& dir);

// Loads HR images from hr_dir, cropping each to the largest multiple of
// scale. LR comes from lr_dir (matched by filename) when given, otherwise
// from the built-in bicubic downscaler. Unreadable images are skipped with a
// warning appended to *warnings.
Dataset load_dataset(const std::string& hr_dir, const std::string& lr_dir, int scale,
                     std::vector<std::string>* warnings = nullptr);

// Pixel-count-weighted per-channel mean over all images, in [0,1] scale.
std::array<float, 3> compute_rgb_mean(const std::vector<const Image*>& images);
std::array<float, 3> lr_rgb_mean(const Dataset& data);

// index 0..7 of the dihedral group: bit 2 = horizontal flip, bits 0..1 =
// number of 90-degree clockwise rotations. Identity is index 0.
Tensor<float> apply_dihedral(const Tensor<float>& patch, int transform);

// Randomly selects `batch` images (with replacement), crops aligned LR/HR
// patches, applies one random dihedral transform per pair, and subtracts
// rgb_mean from both. LR batch is (B,3,p,p); HR batch is (B,3,s*p,s*p).
void sample_batch(const Dataset& data, int patch_lr, int batch, const std::array<float, 3>& rgb_mean,
                  Rng& rng, bool augment, Tensor<float>* lr_out, Tensor<float>* hr_out);

} // namespace mamsr
