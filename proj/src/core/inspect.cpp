#include "core/inspect.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace mamsr {

namespace {

std::string fmt(float v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", double(v));
    return buf;
}

void write_vector_csv(const Tensor<float>& vec, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    check(f.good(), ErrorCode::io, "cannot write " + path);
    for (int c = 0; c < vec.c; ++c) {
        f << c << "," << fmt(vec.data()[c]) << "\n";
    }
}

// One grayscale PNG per channel with the normalization bounds recorded.
// Maps with analytically known bounds (the sigmoid gate: 0..1) use them, so
// unsaturated gates never touch 0 or 255; unbounded maps use their min/max.
void write_map_pngs(const Tensor<float>& map, const std::string& prefix, const std::string& map_name,
                    bool unit_range, std::ofstream& bounds, std::vector<std::string>* files) {
    for (int c = 0; c < map.c; ++c) {
        const float* p = map.plane(0, c);
        float lo = 0.f, hi = 1.f;
        if (!unit_range) {
            lo = hi = p[0];
            for (std::int64_t i = 1; i < map.plane_size(); ++i) {
                lo = std::min(lo, p[i]);
                hi = std::max(hi, p[i]);
            }
        }
        const float range = hi - lo;
        Image img(map.w, map.h);
        for (int y = 0; y < map.h; ++y) {
            for (int x = 0; x < map.w; ++x) {
                const float v = p[std::int64_t(y) * map.w + x];
                const float g = range > 0.f ? (v - lo) / range : 0.5f;
                float* px = img.px(x, y);
                px[0] = px[1] = px[2] = g;
            }
        }
        char name[64];
        std::snprintf(name, sizeof(name), "%s_c%03d.png", map_name.c_str(), c);
        const std::string path = prefix + name;
        save_png(img, path);
        bounds << map_name << "," << c << "," << fmt(lo) << "," << fmt(hi) << "\n";
        if (files) files->push_back(path);
    }
}

} // namespace

std::vector<std::string> dump_modulation_maps(const Model<float>& model, const Image& input, int block,
                                              const std::string& out_dir) {
    check_arg(block >= 0 && block < model.cfg.blocks,
              "inspect: block " + std::to_string(block) + " out of range [0," +
                  std::to_string(model.cfg.blocks) + ")");
    fs::create_directories(out_dir);

    Tensor<float> in = tensor_from_image(input);
    for (int c = 0; c < 3; ++c) {
        float* p = in.plane(0, c);
        for (std::int64_t i = 0; i < in.plane_size(); ++i) p[i] -= model.rgb_mean[std::size_t(c)];
    }

    ModulationMaps<float> maps;
    network_forward(in, model.params, model.cfg, nullptr, block, &maps);

    std::vector<std::string> files;
    const std::string prefix = (fs::path(out_dir) / ("block" + std::to_string(block))).string();

    if (maps.csi.size() > 0) {
        const std::string path = prefix + "_csi.csv";
        write_vector_csv(maps.csi, path);
        files.push_back(path);
    }
    if (maps.icd.size() > 0) {
        const std::string path = prefix + "_icd.csv";
        write_vector_csv(maps.icd, path);
        files.push_back(path);
    }
    if (maps.csd.size() > 0 || maps.gate.size() > 0) {
        const std::string bounds_path = prefix + "_bounds.csv";
        std::ofstream bounds(bounds_path, std::ios::trunc);
        check(bounds.good(), ErrorCode::io, "cannot write " + bounds_path);
        if (maps.csd.size() > 0) write_map_pngs(maps.csd, prefix, "_csd", false, bounds, &files);
        if (maps.gate.size() > 0) write_map_pngs(maps.gate, prefix, "_gate", true, bounds, &files);
        files.push_back(bounds_path);
    }
    return files;
}

} // namespace mamsr
