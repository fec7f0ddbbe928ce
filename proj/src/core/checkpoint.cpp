#include "core/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mamsr {

namespace {

constexpr char kMagic[4] = {'M', 'A', 'M', 'N'};
constexpr std::uint32_t kVersion = 1;

std::string fmt_float(float v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", double(v)); // round-trips binary32
    return buf;
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
           std::uint32_t(p[3]) << 24;
}

std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

} // namespace

std::string checkpoint_manifest(const Model<float>& model) {
    std::ostringstream m;
    const NetworkConfig& cfg = model.cfg;
    m << "blocks=" << cfg.blocks << "\n";
    m << "channels=" << cfg.channels << "\n";
    m << "scale=" << cfg.scale << "\n";
    m << "paths=" << cfg.paths_str() << "\n";
    m << "csi_stat=" << pool_stat_name(cfg.csi_stat) << "\n";
    m << "icd_stat=" << pool_stat_name(cfg.icd_stat) << "\n";
    m << "reduction=" << cfg.reduction << "\n";
    m << "eps=" << fmt_float(cfg.eps) << "\n";
    m << "rgb_mean=" << fmt_float(model.rgb_mean[0]) << "," << fmt_float(model.rgb_mean[1]) << ","
      << fmt_float(model.rgb_mean[2]) << "\n";
    visit_params(model.params,
                 [&](const std::string& name, const std::vector<int>& shape, const std::vector<float>&) {
                     m << "tensor " << name;
                     for (int d : shape) m << " " << d;
                     m << "\n";
                 });
    return m.str();
}

void save_checkpoint(const Model<float>& model, const std::string& path) {
    model.cfg.validate();
    const std::string manifest = checkpoint_manifest(model);

    std::string header;
    header.append(kMagic, 4);
    put_u32(header, kVersion);
    put_u64(header, manifest.size());

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    check(f.good(), ErrorCode::io, "cannot open checkpoint for writing: " + path);
    f.write(header.data(), std::streamsize(header.size()));
    f.write(manifest.data(), std::streamsize(manifest.size()));

    std::string payload;
    visit_params(model.params,
                 [&](const std::string&, const std::vector<int>&, const std::vector<float>& vals) {
                     for (float v : vals) {
                         std::uint32_t bits;
                         std::memcpy(&bits, &v, 4);
                         put_u32(payload, bits);
                     }
                 });
    f.write(payload.data(), std::streamsize(payload.size()));
    check(f.good(), ErrorCode::io, "write failed: " + path);
}

Model<float> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    check(f.good(), ErrorCode::not_found, "cannot open checkpoint: " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());

    check(bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) == 0, ErrorCode::bad_magic,
          "not a checkpoint (bad magic)");
    check(bytes.size() >= 16, ErrorCode::length_mismatch, "checkpoint truncated before header");
    const std::uint32_t version = get_u32(p + 4);
    check(version == kVersion, ErrorCode::bad_version,
          "unsupported checkpoint version " + std::to_string(version));
    const std::uint64_t manifest_len = get_u64(p + 8);
    check(bytes.size() >= 16 + manifest_len, ErrorCode::length_mismatch, "manifest length exceeds file size");

    const std::string manifest = bytes.substr(16, manifest_len);

    Model<float> model;
    NetworkConfig& cfg = model.cfg;
    std::vector<std::pair<std::string, std::vector<int>>> tensors;
    std::istringstream lines(manifest);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        if (line.rfind("tensor ", 0) == 0) {
            const auto parts = split(line.substr(7), ' ');
            check(parts.size() >= 2, ErrorCode::malformed, "bad tensor line: " + line);
            std::vector<int> shape;
            for (std::size_t i = 1; i < parts.size(); ++i) {
                try {
                    shape.push_back(std::stoi(parts[i]));
                } catch (const std::exception&) {
                    fail(ErrorCode::malformed, "bad tensor shape in: " + line);
                }
            }
            tensors.emplace_back(parts[0], shape);
            continue;
        }
        const auto eq = line.find('=');
        check(eq != std::string::npos, ErrorCode::malformed, "bad manifest line: " + line);
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        try {
            if (key == "blocks") cfg.blocks = std::stoi(val);
            else if (key == "channels") cfg.channels = std::stoi(val);
            else if (key == "scale") cfg.scale = std::stoi(val);
            else if (key == "reduction") cfg.reduction = std::stoi(val);
            else if (key == "eps") cfg.eps = std::stof(val);
            else if (key == "paths") {
                cfg.csi = cfg.icd = cfg.csd = false;
                if (val != "none") {
                    for (const auto& tok : split(val, ',')) {
                        if (tok == "csi") cfg.csi = true;
                        else if (tok == "icd") cfg.icd = true;
                        else if (tok == "csd") cfg.csd = true;
                        else fail(ErrorCode::malformed, "unknown path: " + tok);
                    }
                }
            } else if (key == "csi_stat") {
                check(pool_stat_from_name(val, &cfg.csi_stat), ErrorCode::malformed, "unknown stat: " + val);
            } else if (key == "icd_stat") {
                check(pool_stat_from_name(val, &cfg.icd_stat), ErrorCode::malformed, "unknown stat: " + val);
            } else if (key == "rgb_mean") {
                const auto parts = split(val, ',');
                check(parts.size() == 3, ErrorCode::malformed, "rgb_mean needs 3 values");
                for (int i = 0; i < 3; ++i) model.rgb_mean[std::size_t(i)] = std::stof(parts[std::size_t(i)]);
            } else {
                fail(ErrorCode::malformed, "unknown manifest key: " + key);
            }
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            fail(ErrorCode::malformed, "bad manifest value in: " + line);
        }
    }

    cfg.validate();

    // manifest must agree with the schema the config dictates
    const auto schema = param_schema(cfg);
    check(tensors.size() == schema.size(), ErrorCode::shape_mismatch,
          "manifest lists " + std::to_string(tensors.size()) + " tensors, config requires " +
              std::to_string(schema.size()));
    std::int64_t total = 0;
    for (std::size_t i = 0; i < schema.size(); ++i) {
        check(tensors[i].first == schema[i].name && tensors[i].second == schema[i].shape,
              ErrorCode::shape_mismatch, "manifest tensor '" + tensors[i].first + "' does not match '" +
                                             schema[i].name + "'");
        total += schema[i].numel;
    }

    const std::size_t payload_off = 16 + std::size_t(manifest_len);
    check(bytes.size() == payload_off + std::size_t(total) * 4, ErrorCode::length_mismatch,
          "payload size " + std::to_string(bytes.size() - payload_off) + " != expected " +
              std::to_string(total * 4));

    model.params = alloc_params<float>(cfg);
    const unsigned char* src = p + payload_off;
    visit_params(model.params,
                 [&](const std::string&, const std::vector<int>&, std::vector<float>& vals) {
                     for (auto& v : vals) {
                         std::uint32_t bits = get_u32(src);
                         std::memcpy(&v, &bits, 4);
                         src += 4;
                     }
                 });
    return model;
}

} // namespace mamsr
