#include "core/metrics.hpp"

#include <cmath>
#include <limits>

#include "core/error.hpp"

namespace mamsr {

YImage rgb_to_y(const Image& img) {
    YImage y(img.width, img.height);
    for (int j = 0; j < img.height; ++j) {
        for (int i = 0; i < img.width; ++i) {
            const float* p = img.px(i, j);
            y.v[std::size_t(std::int64_t(j) * img.width + i)] =
                16.f + 65.481f * p[0] + 128.553f * p[1] + 24.966f * p[2];
        }
    }
    return y;
}

namespace {

struct Region {
    int x0, y0, w, h;
};

Region shaved_region(const YImage& a, const YImage& b, int shave, int min_dim, const char* who) {
    check_shape(a.width == b.width && a.height == b.height, std::string(who) + ": image sizes differ");
    check_arg(shave >= 0, std::string(who) + ": shave must be >= 0");
    const int w = a.width - 2 * shave;
    const int h = a.height - 2 * shave;
    check_arg(w >= min_dim && h >= min_dim,
              std::string(who) + ": region after shaving is too small (" + std::to_string(w) + "x" +
                  std::to_string(h) + ")");
    return {shave, shave, w, h};
}

} // namespace

double psnr(const YImage& a, const YImage& b, int shave) {
    const Region r = shaved_region(a, b, shave, 1, "psnr");
    double mse = 0.0;
    for (int y = 0; y < r.h; ++y) {
        const float* pa = a.v.data() + std::int64_t(y + r.y0) * a.width + r.x0;
        const float* pb = b.v.data() + std::int64_t(y + r.y0) * b.width + r.x0;
        for (int x = 0; x < r.w; ++x) {
            const double d = double(pa[x]) - double(pb[x]);
            mse += d * d;
        }
    }
    mse /= double(r.w) * double(r.h);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

namespace {

constexpr int kWin = 11;

std::vector<double> gaussian_window() {
    std::vector<double> w(kWin);
    const double sigma = 1.5;
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        const double d = i - (kWin - 1) / 2.0;
        w[std::size_t(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += w[std::size_t(i)];
    }
    for (auto& x : w) x /= sum;
    return w;
}

// separable valid-mode filtering: (w, h) -> (w - 10, h - 10)
std::vector<double> filter_valid(const std::vector<double>& in, int w, int h, const std::vector<double>& k) {
    const int ow = w - kWin + 1;
    std::vector<double> tmp(std::size_t(std::int64_t(ow) * h));
    for (int y = 0; y < h; ++y) {
        const double* row = in.data() + std::int64_t(y) * w;
        double* dst = tmp.data() + std::int64_t(y) * ow;
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < kWin; ++i) acc += k[std::size_t(i)] * row[x + i];
            dst[x] = acc;
        }
    }
    const int oh = h - kWin + 1;
    std::vector<double> out(std::size_t(std::int64_t(ow) * oh));
    for (int y = 0; y < oh; ++y) {
        double* dst = out.data() + std::int64_t(y) * ow;
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < kWin; ++i) acc += k[std::size_t(i)] * tmp[std::size_t(std::int64_t(y + i) * ow + x)];
            dst[x] = acc;
        }
    }
    return out;
}

} // namespace

double ssim(const YImage& a, const YImage& b, int shave) {
    const Region r = shaved_region(a, b, shave, kWin, "ssim");
    const int w = r.w, h = r.h;
    const std::size_t npix = std::size_t(std::int64_t(w) * h);

    std::vector<double> pa(npix), pb(npix), paa(npix), pbb(npix), pab(npix);
    for (int y = 0; y < h; ++y) {
        const float* ra = a.v.data() + std::int64_t(y + r.y0) * a.width + r.x0;
        const float* rb = b.v.data() + std::int64_t(y + r.y0) * b.width + r.x0;
        for (int x = 0; x < w; ++x) {
            const double va = ra[x], vb = rb[x];
            const std::size_t i = std::size_t(std::int64_t(y) * w + x);
            pa[i] = va;
            pb[i] = vb;
            paa[i] = va * va;
            pbb[i] = vb * vb;
            pab[i] = va * vb;
        }
    }

    const auto win = gaussian_window();
    const auto mu_a = filter_valid(pa, w, h, win);
    const auto mu_b = filter_valid(pb, w, h, win);
    const auto m_aa = filter_valid(paa, w, h, win);
    const auto m_bb = filter_valid(pbb, w, h, win);
    const auto m_ab = filter_valid(pab, w, h, win);

    constexpr double L = 255.0;
    constexpr double c1 = (0.01 * L) * (0.01 * L);
    constexpr double c2 = (0.03 * L) * (0.03 * L);

    double total = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a[i], mb = mu_b[i];
        const double va = m_aa[i] - ma * ma;
        const double vb = m_bb[i] - mb * mb;
        const double cov = m_ab[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    return total / double(mu_a.size());
}

} // namespace mamsr
