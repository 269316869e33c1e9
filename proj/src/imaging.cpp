#include "nadir/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace nadir::imaging {

namespace {

float clamp255(double v) {
    return static_cast<float>(std::min(255.0, std::max(0.0, v)));
}

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

void check_nonempty(const Frame& f, const char* op) {
    if (f.width <= 0 || f.height <= 0 || f.data.size() != static_cast<size_t>(f.width) * f.height)
        throw std::invalid_argument(std::string(op) + ": malformed frame");
}

std::vector<double> gaussian_kernel(double sigma) {
    int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[i + radius] = w;
        sum += w;
    }
    for (double& w : k) w /= sum;
    return k;
}

}  // namespace

float Frame::at_clamped(int x, int y) const {
    x = clampi(x, 0, width - 1);
    y = clampi(y, 0, height - 1);
    return at(x, y);
}

Frame to_grayscale(const RgbFrame& rgb) {
    if (rgb.width <= 0 || rgb.height <= 0 ||
        rgb.data.size() != static_cast<size_t>(rgb.width) * rgb.height * 3)
        throw std::invalid_argument("to_grayscale: channel dimensions mismatch");
    Frame out(rgb.width, rgb.height);
    for (size_t i = 0; i < out.size(); ++i) {
        const float* px = &rgb.data[i * 3];
        double y = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
        out.data[i] = clamp255(std::round(y));
    }
    return out;
}

Frame gaussian_blur(const Frame& f, double sigma) {
    check_nonempty(f, "gaussian_blur");
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_blur: sigma must be positive");
    auto k = gaussian_kernel(sigma);
    int radius = (static_cast<int>(k.size()) - 1) / 2;

    Frame tmp(f.width, f.height);
    tmp.timestamp_index = f.timestamp_index;
    tmp.fps = f.fps;
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += k[i + radius] * f.at_clamped(x + i, y);
            tmp.at(x, y) = static_cast<float>(acc);
        }
    Frame out = tmp;
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += k[i + radius] * tmp.at_clamped(x, y + i);
            out.at(x, y) = static_cast<float>(acc);
        }
    return out;
}

Frame median_filter(const Frame& f, int window) {
    check_nonempty(f, "median_filter");
    if (window < 3 || window % 2 == 0)
        throw std::invalid_argument("median_filter: window must be odd and >= 3");
    int radius = window / 2;
    Frame out(f.width, f.height);
    out.timestamp_index = f.timestamp_index;
    out.fps = f.fps;
    std::vector<float> buf(static_cast<size_t>(window) * window);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            size_t n = 0;
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx)
                    buf[n++] = f.at_clamped(x + dx, y + dy);
            auto mid = buf.begin() + n / 2;
            std::nth_element(buf.begin(), mid, buf.begin() + n);
            out.at(x, y) = *mid;
        }
    return out;
}

Frame denoise(const Frame& f, const DenoiseSpec& spec) {
    return spec.kind == DenoiseSpec::Kind::gaussian ? gaussian_blur(f, spec.sigma)
                                                    : median_filter(f, spec.window);
}

namespace {

std::array<int64_t, 256> histogram256(const Frame& f) {
    std::array<int64_t, 256> h{};
    for (float v : f.data) {
        int b = clampi(static_cast<int>(std::lround(v)), 0, 255);
        h[b]++;
    }
    return h;
}

}  // namespace

int otsu_threshold(const Frame& f) {
    check_nonempty(f, "otsu_threshold");
    auto h = histogram256(f);
    int distinct = 0;
    for (int64_t c : h) distinct += (c > 0);
    if (distinct < 2) throw std::invalid_argument("otsu_threshold: constant frame");

    const double total = static_cast<double>(f.size());
    double total_mean = 0.0;
    for (int i = 0; i < 256; ++i) total_mean += i * static_cast<double>(h[i]);
    total_mean /= total;

    // class 0 holds intensities < t
    double c0 = 0.0, m0 = 0.0;
    double best_var = -1.0;
    int best_t = 0;
    for (int t = 0; t < 256; ++t) {
        if (t > 0) {
            c0 += static_cast<double>(h[t - 1]);
            m0 += (t - 1) * static_cast<double>(h[t - 1]);
        }
        double w0 = c0 / total;
        double w1 = 1.0 - w0;
        if (w0 <= 0.0 || w1 <= 0.0) continue;
        double mu0 = m0 / c0;
        double mu1 = (total_mean * total - m0) / (total - c0);
        double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var + 1e-12) {
            best_var = var;
            best_t = t;
        }
    }
    return best_t;
}

Frame apply_threshold(const Frame& f, int t) {
    check_nonempty(f, "apply_threshold");
    Frame out(f.width, f.height);
    out.timestamp_index = f.timestamp_index;
    out.fps = f.fps;
    for (size_t i = 0; i < f.size(); ++i)
        out.data[i] = std::lround(f.data[i]) >= t ? 255.0f : 0.0f;
    return out;
}

Frame adaptive_threshold(const Frame& f, int window, double c) {
    check_nonempty(f, "adaptive_threshold");
    if (window < 3 || window % 2 == 0)
        throw std::invalid_argument("adaptive_threshold: window must be odd and >= 3");
    int radius = window / 2;
    Frame out(f.width, f.height);
    out.timestamp_index = f.timestamp_index;
    out.fps = f.fps;
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            double sum = 0.0;
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx)
                    sum += f.at_clamped(x + dx, y + dy);
            double mean = sum / (window * window);
            out.at(x, y) = f.at(x, y) > mean - c ? 255.0f : 0.0f;
        }
    return out;
}

namespace {

// Per-tile mapping: clipped histogram, uniform redistribution, then the
// plain equalization lut round(255 * cdf / n). A tile with a single occupied
// bin keeps the identity mapping.
std::array<float, 256> tile_lut(const std::array<double, 256>& hist, double npix, double clip_limit) {
    std::array<float, 256> lut;
    int occupied = 0;
    for (double v : hist) occupied += (v > 0.0);
    if (occupied <= 1) {
        for (int i = 0; i < 256; ++i) lut[i] = static_cast<float>(i);
        return lut;
    }
    std::array<double, 256> h = hist;
    double clip = clip_limit * npix / 256.0;
    double excess = 0.0;
    for (double& v : h) {
        if (v > clip) {
            excess += v - clip;
            v = clip;
        }
    }
    double add = excess / 256.0;
    double cdf = 0.0;
    for (int i = 0; i < 256; ++i) {
        cdf += h[i] + add;
        lut[i] = static_cast<float>(std::round(255.0 * cdf / npix));
    }
    return lut;
}

}  // namespace

Frame clahe(const Frame& f, int tile_rows, int tile_cols, double clip_limit) {
    check_nonempty(f, "clahe");
    if (tile_rows <= 0 || tile_cols <= 0) throw std::invalid_argument("clahe: zero-sized tiles");
    if (clip_limit < 1.0) throw std::invalid_argument("clahe: clip_limit must be >= 1");

    const int th = (f.height + tile_rows - 1) / tile_rows;
    const int tw = (f.width + tile_cols - 1) / tile_cols;
    const double npix = static_cast<double>(th) * tw;

    std::vector<std::array<float, 256>> luts(static_cast<size_t>(tile_rows) * tile_cols);
    for (int r = 0; r < tile_rows; ++r)
        for (int c = 0; c < tile_cols; ++c) {
            std::array<double, 256> hist{};
            for (int y = r * th; y < (r + 1) * th; ++y)
                for (int x = c * tw; x < (c + 1) * tw; ++x) {
                    // remainder tiles extend past the frame; replicate edges
                    float v = f.at_clamped(x, y);
                    hist[clampi(static_cast<int>(std::lround(v)), 0, 255)] += 1.0;
                }
            luts[static_cast<size_t>(r) * tile_cols + c] = tile_lut(hist, npix, clip_limit);
        }

    Frame out(f.width, f.height);
    out.timestamp_index = f.timestamp_index;
    out.fps = f.fps;
    for (int y = 0; y < f.height; ++y) {
        double ry = (y - (th - 1) / 2.0) / th;
        int rf = static_cast<int>(std::floor(ry));
        double fy = ry - rf;
        int r0 = clampi(rf, 0, tile_rows - 1);
        int r1 = clampi(rf + 1, 0, tile_rows - 1);
        for (int x = 0; x < f.width; ++x) {
            double cx = (x - (tw - 1) / 2.0) / tw;
            int cf = static_cast<int>(std::floor(cx));
            double fx = cx - cf;
            int c0 = clampi(cf, 0, tile_cols - 1);
            int c1 = clampi(cf + 1, 0, tile_cols - 1);
            int bin = clampi(static_cast<int>(std::lround(f.at(x, y))), 0, 255);
            double v00 = luts[static_cast<size_t>(r0) * tile_cols + c0][bin];
            double v01 = luts[static_cast<size_t>(r0) * tile_cols + c1][bin];
            double v10 = luts[static_cast<size_t>(r1) * tile_cols + c0][bin];
            double v11 = luts[static_cast<size_t>(r1) * tile_cols + c1][bin];
            double v = (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
            out.at(x, y) = clamp255(v);
        }
    }
    return out;
}

namespace {

float bilinear_clamped(const Frame& f, double x, double y) {
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    double fx = x - x0, fy = y - y0;
    double v00 = f.at_clamped(x0, y0);
    double v01 = f.at_clamped(x0 + 1, y0);
    double v10 = f.at_clamped(x0, y0 + 1);
    double v11 = f.at_clamped(x0 + 1, y0 + 1);
    return static_cast<float>((1 - fy) * ((1 - fx) * v00 + fx * v01) +
                              fy * ((1 - fx) * v10 + fx * v11));
}

}  // namespace

Pyramid build_pyramid(const Frame& f, int levels, double scale_factor) {
    check_nonempty(f, "build_pyramid");
    if (levels < 1) throw std::invalid_argument("build_pyramid: levels must be >= 1");
    if (!(scale_factor > 0.0 && scale_factor < 1.0))
        throw std::invalid_argument("build_pyramid: scale_factor must be in (0, 1)");

    Pyramid p;
    p.scale_factor = scale_factor;
    p.levels.push_back(f);
    double sigma = std::max(0.3, 0.8 * std::sqrt(1.0 / (scale_factor * scale_factor) - 1.0));
    for (int k = 1; k < levels; ++k) {
        const Frame& prev = p.levels.back();
        int w = static_cast<int>(std::floor(prev.width * scale_factor));
        int h = static_cast<int>(std::floor(prev.height * scale_factor));
        if (w < 1 || h < 1)
            throw std::invalid_argument("build_pyramid: level dimensions reached zero");
        Frame smoothed = gaussian_blur(prev, sigma);
        Frame lvl(w, h);
        lvl.timestamp_index = f.timestamp_index;
        lvl.fps = f.fps;
        double inv_fx = static_cast<double>(prev.width) / w;
        double inv_fy = static_cast<double>(prev.height) / h;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double sx = (x + 0.5) * inv_fx - 0.5;
                double sy = (y + 0.5) * inv_fy - 0.5;
                lvl.at(x, y) = bilinear_clamped(smoothed, sx, sy);
            }
        p.levels.push_back(std::move(lvl));
    }
    return p;
}

}  // namespace nadir::imaging
