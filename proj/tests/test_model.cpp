#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/checkpoint.hpp"
#include "core/gradcheck.hpp"
#include "core/model.hpp"
#include "testutil.hpp"

using namespace mamsr;
using namespace testutil;

namespace {

NetworkConfig analysis_config(bool csi, bool icd, bool csd) {
    NetworkConfig cfg;
    cfg.blocks = 16;
    cfg.channels = 64;
    cfg.scale = 2;
    cfg.csi = csi;
    cfg.icd = icd;
    cfg.csd = csd;
    return cfg;
}

} // namespace

TEST_CASE("parameter counts: R16 C64 x2 path combinations") {
    CHECK(count_params(analysis_config(false, false, false)) == 1369859);
    CHECK(count_params(analysis_config(true, false, false)) == 1369859); // CSI owns no parameters
    CHECK(count_params(analysis_config(false, true, false)) == 1379139);
    CHECK(count_params(analysis_config(false, false, true)) == 1380099);
    CHECK(count_params(analysis_config(true, true, true)) == 1389379);

    // layer-by-layer arithmetic behind the baseline figure
    const std::int64_t head = 3 * 64 * 9 + 64;
    const std::int64_t block = 2 * (64 * 64 * 9 + 64);
    const std::int64_t feat = 64 * 64 * 9 + 64;
    const std::int64_t up = 64 * 256 * 9 + 256;
    const std::int64_t recon = 64 * 3 * 9 + 3;
    CHECK(head + 16 * block + feat + up + recon == 1369859);
    CHECK(head == 1792);
    CHECK(block == 73856);
    CHECK(feat == 36928);
    CHECK(up == 147712);
    CHECK(recon == 1731);
}

TEST_CASE("parameter counts round to the published K values") {
    auto k = [](std::int64_t v) { return std::int64_t(std::llround(double(v) / 1000.0)); };
    CHECK(k(count_params(analysis_config(false, false, false))) == 1370);
    CHECK(k(count_params(analysis_config(false, true, false))) == 1379);
    CHECK(k(count_params(analysis_config(false, false, true))) == 1380);
    CHECK(k(count_params(analysis_config(true, true, true))) == 1389);
}

TEST_CASE("percent increase accounting") {
    auto pct = [](bool csi, bool icd, bool csd) { return param_increase_percent(analysis_config(csi, icd, csd)); };
    CHECK(pct(true, false, false) == doctest::Approx(0.0));
    CHECK(pct(false, true, false) == doctest::Approx(0.68));
    CHECK(pct(false, false, true) == doctest::Approx(0.75));
    CHECK(pct(true, true, true) == doctest::Approx(1.43));
    CHECK(pct(false, true, true) == doctest::Approx(1.43));
}

TEST_CASE("ICD layer shapes at C=32, reduction 16") {
    NetworkConfig base;
    base.blocks = 1;
    base.channels = 32;
    base.scale = 2;
    base.csi = base.icd = base.csd = false;
    NetworkConfig with_icd = base;
    with_icd.icd = true;
    // fc1: (2x32)+2, fc2: (32x2)+32
    CHECK(count_params(with_icd) - count_params(base) == 64 + 2 + 64 + 32);

    const auto schema = param_schema(with_icd);
    bool found_fc1 = false, found_fc2 = false;
    for (const auto& s : schema) {
        if (s.name == "block0.icd_fc1.weight") {
            CHECK(s.shape == std::vector<int>{2, 32});
            found_fc1 = true;
        }
        if (s.name == "block0.icd_fc2.weight") {
            CHECK(s.shape == std::vector<int>{32, 2});
            found_fc2 = true;
        }
    }
    CHECK(found_fc1);
    CHECK(found_fc2);
}

TEST_CASE("config validation") {
    NetworkConfig cfg;
    cfg.scale = 5;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.scale = 2;
    cfg.channels = 30; // not divisible by reduction 16 with ICD on
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.icd = false;
    CHECK_NOTHROW(cfg.validate());
    cfg.blocks = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("init_params: deterministic, zero biases, He std") {
    NetworkConfig cfg;
    cfg.blocks = 2;
    cfg.channels = 64;
    cfg.scale = 2;
    auto a = init_params<float>(cfg, 1234);
    auto b = init_params<float>(cfg, 1234);
    bool identical = true;
    std::vector<const std::vector<float>*> bt;
    visit_params(b, [&](const std::string&, const std::vector<int>&, const std::vector<float>& vals) {
        bt.push_back(&vals);
    });
    std::size_t ti = 0;
    visit_params(a, [&](const std::string& name, const std::vector<int>& shape, const std::vector<float>& vals) {
        if (std::memcmp(vals.data(), bt[ti]->data(), vals.size() * sizeof(float)) != 0) identical = false;
        if (shape.size() == 1) {
            for (float v : vals) CHECK(v == 0.f); // biases zero at init
        }
        if (name == "block0.conv1.weight") {
            // 64*64*9 = 36864 draws; std should sit within 10% of sqrt(2/576)
            double sum = 0.0, sum2 = 0.0;
            for (float v : vals) {
                sum += v;
                sum2 += double(v) * v;
            }
            const double n = double(vals.size());
            const double sd = std::sqrt(sum2 / n - (sum / n) * (sum / n));
            const double expect = std::sqrt(2.0 / 576.0);
            CHECK(sd == doctest::Approx(expect).epsilon(0.10));
        }
        ++ti;
    });
    CHECK(identical);

    auto c = init_params<float>(cfg, 1235);
    bool different = false;
    ti = 0;
    visit_params(c, [&](const std::string&, const std::vector<int>&, const std::vector<float>& vals) {
        if (std::memcmp(vals.data(), bt[ti]->data(), vals.size() * sizeof(float)) != 0) different = true;
        ++ti;
    });
    CHECK(different);
}

namespace {

NetworkConfig tiny_cfg(bool csi, bool icd, bool csd, int blocks = 1, int channels = 8, int reduction = 4) {
    NetworkConfig cfg;
    cfg.blocks = blocks;
    cfg.channels = channels;
    cfg.scale = 2;
    cfg.csi = csi;
    cfg.icd = icd;
    cfg.csd = csd;
    cfg.reduction = reduction;
    return cfg;
}

} // namespace

TEST_CASE("mamb: zero conv weights make the block an identity") {
    const NetworkConfig cfg = tiny_cfg(true, true, true);
    auto params = alloc_params<float>(cfg); // all zeros
    Rng rng(7);
    Tensor<float> f = random_tensor<float>(2, 8, 5, 5, rng);
    MambCache<float> cache;
    Tensor<float> out = mamb_forward(f, params.blocks[0], cfg, &cache);
    CHECK(max_abs_diff(out, f) == 0.0); // X = 0, so f + gate*0 = f
}

TEST_CASE("mamb: all paths disabled is a plain residual block") {
    const NetworkConfig cfg = tiny_cfg(false, false, false);
    auto params = init_params<float>(cfg, 3);
    Rng rng(8);
    Tensor<float> f = random_tensor<float>(1, 8, 6, 6, rng);
    MambCache<float> cache;
    Tensor<float> out = mamb_forward(f, params.blocks[0], cfg, &cache);
    Tensor<float> expect = f + conv2d(relu(conv2d(f, params.blocks[0].conv1, 1)), params.blocks[0].conv2, 1);
    CHECK(max_abs_diff(out, expect) == 0.0);
}

TEST_CASE("mamb: CSD with zero depth-wise params gives the half-X neutral gate") {
    NetworkConfig cfg = tiny_cfg(false, false, true);
    auto params = init_params<float>(cfg, 4);
    // zero the modulation parameters only
    std::fill(params.blocks[0].csd.w.v.begin(), params.blocks[0].csd.w.v.end(), 0.f);
    std::fill(params.blocks[0].csd.b.v.begin(), params.blocks[0].csd.b.v.end(), 0.f);
    Rng rng(9);
    Tensor<float> f = random_tensor<float>(1, 8, 6, 6, rng);
    MambCache<float> cache;
    Tensor<float> out = mamb_forward(f, params.blocks[0], cfg, &cache);
    Tensor<float> x = conv2d(relu(conv2d(f, params.blocks[0].conv1, 1)), params.blocks[0].conv2, 1);
    Tensor<float> expect = f;
    for (std::int64_t i = 0; i < x.size(); ++i) expect.v[std::size_t(i)] += 0.5f * x.v[std::size_t(i)];
    CHECK(max_abs_diff(out, expect) < 1e-6);
}

TEST_CASE("mamb: CSI on constant-per-channel features gives the 0.5 gate") {
    NetworkConfig cfg = tiny_cfg(true, false, false);
    auto params = alloc_params<float>(cfg);
    // zero conv1 weights + bias per channel c -> X constant per channel
    for (int c = 0; c < 8; ++c) params.blocks[0].conv2.b.v[std::size_t(c)] = float(c) * 0.25f - 1.f;
    Rng rng(10);
    Tensor<float> f = random_tensor<float>(1, 8, 5, 5, rng);
    MambCache<float> cache;
    Tensor<float> out = mamb_forward(f, params.blocks[0], cfg, &cache);
    // every channel variance is 0 -> standardized map 0 -> gate 0.5 everywhere
    for (std::int64_t i = 0; i < cache.gate.size(); ++i) {
        CHECK(cache.gate.v[std::size_t(i)] == doctest::Approx(0.5f));
    }
    Tensor<float> expect = f;
    for (std::int64_t i = 0; i < cache.x.size(); ++i) expect.v[std::size_t(i)] += 0.5f * cache.x.v[std::size_t(i)];
    CHECK(max_abs_diff(out, expect) < 1e-6);
}

TEST_CASE("mamb: gate strictly inside (0,1) and |out - f| bounded by |X|") {
    const NetworkConfig cfg = tiny_cfg(true, true, true);
    auto params = init_params<float>(cfg, 11);
    Rng rng(12);
    Tensor<float> f = random_tensor<float>(2, 8, 6, 6, rng);
    MambCache<float> cache;
    Tensor<float> out = mamb_forward(f, params.blocks[0], cfg, &cache);
    for (std::int64_t i = 0; i < cache.gate.size(); ++i) {
        const float g = cache.gate.v[std::size_t(i)];
        CHECK(g > 0.f);
        CHECK(g < 1.f);
        CHECK(std::fabs(out.v[std::size_t(i)] - f.v[std::size_t(i)]) <=
              std::fabs(cache.x.v[std::size_t(i)]) + 1e-6f);
    }
}

TEST_CASE("mamb: full block gradient check (all paths, 1x16x6x6)") {
    NetworkConfig cfg = tiny_cfg(true, true, true, 1, 16, 16);
    Rng rng(13);
    auto params0 = init_params<double>(cfg, 14);
    Tensor<double> f0 = random_tensor<double>(1, 16, 6, 6, rng);
    const auto wts = random_weights(f0.size(), rng);

    // flatten input + every block parameter
    std::vector<double> flat(f0.v.begin(), f0.v.end());
    visit_params(params0, [&](const std::string& name, const std::vector<int>&, const std::vector<double>& vals) {
        if (name.rfind("block0.", 0) == 0) flat.insert(flat.end(), vals.begin(), vals.end());
    });

    auto unpack = [&](const std::vector<double>& fl) {
        Tensor<double> f = f0;
        auto params = params0;
        std::copy_n(fl.begin(), f.v.size(), f.v.begin());
        std::size_t off = f.v.size();
        visit_params(params, [&](const std::string& name, const std::vector<int>&, std::vector<double>& vals) {
            if (name.rfind("block0.", 0) == 0) {
                std::copy_n(fl.begin() + std::ptrdiff_t(off), vals.size(), vals.begin());
                off += vals.size();
            }
        });
        return std::make_pair(f, params);
    };

    auto f = [&](const std::vector<double>& fl) {
        auto [fin, params] = unpack(fl);
        MambCache<double> cache;
        return weighted_sum(mamb_forward(fin, params.blocks[0], cfg, &cache), wts);
    };

    auto [fin, params] = unpack(flat);
    MambCache<double> cache;
    Tensor<double> out = mamb_forward(fin, params.blocks[0], cfg, &cache);
    Tensor<double> gin(1, 16, 6, 6);
    auto gparams = alloc_params<double>(cfg);
    mamb_backward(fin, params.blocks[0], cfg, cache, weights_as_grad(out, wts), gin, gparams.blocks[0]);

    std::vector<double> analytic(gin.v.begin(), gin.v.end());
    visit_params(gparams, [&](const std::string& name, const std::vector<int>&, const std::vector<double>& vals) {
        if (name.rfind("block0.", 0) == 0) analytic.insert(analytic.end(), vals.begin(), vals.end());
    });

    const auto rep = grad_check(f, flat, analytic);
    CHECK(rep.pass(1e-5));
}

TEST_CASE("mamb gradients across the pooling-statistic switches") {
    // one block, C=8, every stat pairing a configuration flag can select
    const std::pair<PoolStat, PoolStat> combos[] = {
        {PoolStat::avg, PoolStat::avg},     {PoolStat::max, PoolStat::var},
        {PoolStat::power, PoolStat::max},   {PoolStat::var, PoolStat::power},
        {PoolStat::stdvar, PoolStat::avg},  {PoolStat::avg, PoolStat::stdvar},
    };
    for (const auto& [cstat, istat] : combos) {
        NetworkConfig cfg = tiny_cfg(true, true, true, 1, 8, 4);
        cfg.csi_stat = cstat;
        cfg.icd_stat = istat;
        Rng rng(std::uint64_t(int(cstat)) * 31 + std::uint64_t(int(istat)) + 1);
        auto params0 = init_params<double>(cfg, 91);
        Tensor<double> f0 = random_tensor<double>(1, 8, 5, 5, rng);
        const auto wts = random_weights(f0.size(), rng);

        std::vector<double> flat(f0.v.begin(), f0.v.end());
        visit_params(params0, [&](const std::string& name, const std::vector<int>&, const std::vector<double>& vals) {
            if (name.rfind("block0.", 0) == 0) flat.insert(flat.end(), vals.begin(), vals.end());
        });
        auto unpack = [&](const std::vector<double>& fl) {
            Tensor<double> f = f0;
            auto params = params0;
            std::copy_n(fl.begin(), f.v.size(), f.v.begin());
            std::size_t off = f.v.size();
            visit_params(params, [&](const std::string& name, const std::vector<int>&, std::vector<double>& vals) {
                if (name.rfind("block0.", 0) == 0) {
                    std::copy_n(fl.begin() + std::ptrdiff_t(off), vals.size(), vals.begin());
                    off += vals.size();
                }
            });
            return std::make_pair(f, params);
        };
        auto f = [&](const std::vector<double>& fl) {
            auto [fin, params] = unpack(fl);
            MambCache<double> cache;
            return weighted_sum(mamb_forward(fin, params.blocks[0], cfg, &cache), wts);
        };
        auto [fin, params] = unpack(flat);
        MambCache<double> cache;
        Tensor<double> out = mamb_forward(fin, params.blocks[0], cfg, &cache);
        Tensor<double> gin(1, 8, 5, 5);
        auto gparams = alloc_params<double>(cfg);
        mamb_backward(fin, params.blocks[0], cfg, cache, weights_as_grad(out, wts), gin, gparams.blocks[0]);
        std::vector<double> analytic(gin.v.begin(), gin.v.end());
        visit_params(gparams, [&](const std::string& name, const std::vector<int>&, const std::vector<double>& vals) {
            if (name.rfind("block0.", 0) == 0) analytic.insert(analytic.end(), vals.begin(), vals.end());
        });
        const auto rep = grad_check(f, flat, analytic, 1e-5);
        INFO("csi_stat ", pool_stat_name(cstat), " icd_stat ", pool_stat_name(istat), " max rel ",
             rep.max_rel_err);
        CHECK(rep.pass(1e-5));
    }
}

TEST_CASE("network_forward: output shape law for all scales") {
    for (int scale : {2, 3, 4}) {
        NetworkConfig cfg = tiny_cfg(true, true, true, 1, 16, 16);
        cfg.scale = scale;
        auto params = init_params<float>(cfg, 20);
        Rng rng(21);
        Tensor<float> img = random_tensor<float>(1, 3, 7, 5, rng);
        Tensor<float> out = network_forward(img, params, cfg);
        CHECK(out.n == 1);
        CHECK(out.c == 3);
        CHECK(out.h == 7 * scale);
        CHECK(out.w == 5 * scale);
    }
}

TEST_CASE("network_forward: all-zero parameters give the recon-bias constant image") {
    NetworkConfig cfg = tiny_cfg(true, true, true, 2, 16, 16);
    auto params = alloc_params<float>(cfg);
    params.recon.b.v = {0.25f, -0.5f, 0.75f};
    Rng rng(22);
    Tensor<float> img = random_tensor<float>(1, 3, 6, 6, rng);
    Tensor<float> out = network_forward(img, params, cfg);
    for (int c = 0; c < 3; ++c) {
        for (std::int64_t i = 0; i < out.plane_size(); ++i) {
            CHECK(out.plane(0, c)[i] == params.recon.b.v[std::size_t(c)]);
        }
    }
}

TEST_CASE("network_forward requires 3 input channels and is deterministic") {
    NetworkConfig cfg = tiny_cfg(false, false, false, 1, 8, 4);
    auto params = init_params<float>(cfg, 23);
    Rng rng(24);
    Tensor<float> bad = random_tensor<float>(1, 4, 6, 6, rng);
    CHECK_THROWS_AS(network_forward(bad, params, cfg), Error);

    Tensor<float> img = random_tensor<float>(2, 3, 6, 6, rng);
    Tensor<float> a = network_forward(img, params, cfg);
    Tensor<float> b = network_forward(img, params, cfg);
    CHECK(std::memcmp(a.data(), b.data(), std::size_t(a.size()) * sizeof(float)) == 0);
}

TEST_CASE("full R2C8 x2 network gradient check at 64-bit") {
    NetworkConfig cfg = tiny_cfg(true, true, true, 2, 8, 4);
    Rng rng(30);
    auto params0 = init_params<double>(cfg, 31);
    Tensor<double> img0 = random_tensor<double>(1, 3, 8, 8, rng);
    Tensor<double> probe = network_forward(img0, params0, cfg);
    const auto wts = random_weights(probe.size(), rng);

    std::vector<double> flat(img0.v.begin(), img0.v.end());
    visit_params(params0, [&](const std::string&, const std::vector<int>&, const std::vector<double>& vals) {
        flat.insert(flat.end(), vals.begin(), vals.end());
    });

    auto unpack = [&](const std::vector<double>& fl) {
        Tensor<double> img = img0;
        auto params = params0;
        std::copy_n(fl.begin(), img.v.size(), img.v.begin());
        std::size_t off = img.v.size();
        visit_params(params, [&](const std::string&, const std::vector<int>&, std::vector<double>& vals) {
            std::copy_n(fl.begin() + std::ptrdiff_t(off), vals.size(), vals.begin());
            off += vals.size();
        });
        return std::make_pair(img, params);
    };

    auto f = [&](const std::vector<double>& fl) {
        auto [img, params] = unpack(fl);
        return weighted_sum(network_forward(img, params, cfg), wts);
    };

    auto [img, params] = unpack(flat);
    NetworkCache<double> cache;
    Tensor<double> out = network_forward(img, params, cfg, &cache);
    auto gparams = alloc_params<double>(cfg);
    Tensor<double> gimg(1, 3, 8, 8);
    network_backward(params, cfg, cache, weights_as_grad(out, wts), gparams, &gimg);

    std::vector<double> analytic(gimg.v.begin(), gimg.v.end());
    visit_params(gparams, [&](const std::string&, const std::vector<int>&, const std::vector<double>& vals) {
        analytic.insert(analytic.end(), vals.begin(), vals.end());
    });

    const auto rep = grad_check(f, flat, analytic, 1e-5);
    CHECK(rep.max_rel_err < 1e-5);
}

TEST_CASE("modulation map capture shapes") {
    NetworkConfig cfg = tiny_cfg(true, true, true, 3, 16, 16);
    auto params = init_params<float>(cfg, 40);
    Rng rng(41);
    Tensor<float> img = random_tensor<float>(1, 3, 9, 7, rng);
    ModulationMaps<float> maps;
    network_forward(img, params, cfg, nullptr, 1, &maps);
    CHECK(maps.csi.c == 16);
    CHECK(maps.icd.c == 16);
    CHECK(maps.csd.c == 16);
    CHECK(maps.csd.h == 9);
    CHECK(maps.csd.w == 7);
    CHECK(maps.gate.h == 9);
    CHECK(maps.gate.w == 7);
    for (std::int64_t i = 0; i < maps.gate.size(); ++i) {
        CHECK(maps.gate.v[std::size_t(i)] > 0.f);
        CHECK(maps.gate.v[std::size_t(i)] < 1.f);
    }
}

TEST_CASE("checkpoint round trip is bit exact with the documented layout") {
    NetworkConfig cfg = tiny_cfg(true, true, true, 2, 16, 16);
    Model<float> model;
    model.cfg = cfg;
    model.rgb_mean = {0.4488f, 0.4371f, 0.4040f};
    model.params = init_params<float>(cfg, 55);

    const std::string dir = make_temp_dir("ckpt");
    const std::string path = dir + "/model.mamn";
    save_checkpoint(model, path);

    // header layout: magic, version u32 LE, manifest length u64 LE
    std::ifstream f(path, std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    REQUIRE(bytes.size() > 16);
    CHECK(bytes[0] == 'M');
    CHECK(bytes[1] == 'A');
    CHECK(bytes[2] == 'M');
    CHECK(bytes[3] == 'N');
    CHECK(bytes[4] == 1);
    CHECK(bytes[5] == 0);
    CHECK(bytes[6] == 0);
    CHECK(bytes[7] == 0);
    std::uint64_t mlen = 0;
    for (int i = 15; i >= 8; --i) mlen = (mlen << 8) | bytes[std::size_t(i)];
    const std::int64_t total = count_params(cfg);
    CHECK(bytes.size() == 16 + mlen + std::size_t(total) * 4);

    Model<float> loaded = load_checkpoint(path);
    CHECK(loaded.cfg.blocks == cfg.blocks);
    CHECK(loaded.cfg.channels == cfg.channels);
    CHECK(loaded.cfg.scale == cfg.scale);
    CHECK(loaded.cfg.csi == cfg.csi);
    CHECK(loaded.cfg.icd == cfg.icd);
    CHECK(loaded.cfg.csd == cfg.csd);
    CHECK(loaded.cfg.reduction == cfg.reduction);
    CHECK(loaded.rgb_mean == model.rgb_mean);

    bool identical = true;
    std::vector<const std::vector<float>*> lt;
    visit_params(loaded.params, [&](const std::string&, const std::vector<int>&, const std::vector<float>& vals) {
        lt.push_back(&vals);
    });
    std::size_t ti = 0;
    visit_params(model.params, [&](const std::string&, const std::vector<int>&, const std::vector<float>& vals) {
        if (std::memcmp(vals.data(), lt[ti]->data(), vals.size() * sizeof(float)) != 0) identical = false;
        ++ti;
    });
    CHECK(identical);
}

TEST_CASE("checkpoint distinct load errors") {
    NetworkConfig cfg = tiny_cfg(false, false, false, 1, 8, 4);
    Model<float> model;
    model.cfg = cfg;
    model.params = init_params<float>(cfg, 60);
    const std::string dir = make_temp_dir("ckpt_err");
    const std::string path = dir + "/m.mamn";
    save_checkpoint(model, path);

    auto read_all = [&]() {
        std::ifstream f(path, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    };
    auto write_all = [&](const std::string& p, const std::string& content) {
        std::ofstream f(p, std::ios::binary | std::ios::trunc);
        f.write(content.data(), std::streamsize(content.size()));
    };
    const std::string good = read_all();

    // missing file
    try {
        load_checkpoint(dir + "/missing.mamn");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::not_found);
    }

    // bad magic
    std::string bad = good;
    bad[0] = 'X';
    write_all(dir + "/bad_magic.mamn", bad);
    try {
        load_checkpoint(dir + "/bad_magic.mamn");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::bad_magic);
    }

    // unsupported version
    bad = good;
    bad[4] = 9;
    write_all(dir + "/bad_ver.mamn", bad);
    try {
        load_checkpoint(dir + "/bad_ver.mamn");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::bad_version);
    }

    // truncated payload
    bad = good.substr(0, good.size() - 5);
    write_all(dir + "/short.mamn", bad);
    try {
        load_checkpoint(dir + "/short.mamn");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::length_mismatch);
    }

    // trailing garbage is also a length mismatch
    bad = good + "xx";
    write_all(dir + "/long.mamn", bad);
    try {
        load_checkpoint(dir + "/long.mamn");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::length_mismatch);
    }

    // tampered manifest shape
    bad = good;
    const auto at = bad.find("tensor head.weight 8 3 3 3");
    REQUIRE(at != std::string::npos);
    bad[at + 19] = '9'; // 8 -> 9 output channels
    write_all(dir + "/shape.mamn", bad);
    try {
        load_checkpoint(dir + "/shape.mamn");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::shape_mismatch);
    }
}

TEST_CASE("count_params agrees with the serialized manifest") {
    for (auto [icd, csd] : {std::pair{false, false}, {true, false}, {false, true}, {true, true}}) {
        NetworkConfig cfg = tiny_cfg(true, icd, csd, 3, 16, 4);
        cfg.scale = 3;
        Model<float> model;
        model.cfg = cfg;
        model.params = init_params<float>(cfg, 70);
        const std::string manifest = checkpoint_manifest(model);

        // brute-force: sum dim products over the manifest's tensor lines
        std::int64_t total = 0;
        std::istringstream lines(manifest);
        std::string line;
        while (std::getline(lines, line)) {
            if (line.rfind("tensor ", 0) != 0) continue;
            std::istringstream toks(line.substr(7));
            std::string name;
            toks >> name;
            std::int64_t prod = 1;
            int d;
            while (toks >> d) prod *= d;
            total += prod;
        }
        CHECK(total == count_params(cfg));
    }
}
