#pragma once

#include <string>
#include <vector>

namespace nadir::imaging {

/// Single-channel intensity raster. Values live in [0, 255]; storage is
/// float so that filter chains do not accumulate quantization error.
struct Frame {
    int width = 0;
    int height = 0;
    std::vector<float> data;  // row-major, width * height
    int timestamp_index = 0;
    double fps = 25.0;

    Frame() = default;
    Frame(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    float& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

    // edge-replicated access
    float at_clamped(int x, int y) const;

    size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
};

/// Interleaved 3-channel raster, channel order R, G, B.
struct RgbFrame {
    int width = 0;
    int height = 0;
    std::vector<float> data;  // width * height * 3
};

struct Pyramid {
    std::vector<Frame> levels;  // level 0 is the source frame
    double scale_factor = 0.8;

    // effective per-axis scale of level k relative to level 0
    double scale_x(int k) const { return static_cast<double>(levels[k].width) / levels[0].width; }
    double scale_y(int k) const { return static_cast<double>(levels[k].height) / levels[0].height; }
};

struct DenoiseSpec {
    enum class Kind { gaussian, median } kind = Kind::gaussian;
    double sigma = 1.0;  // gaussian
    int window = 3;      // median, odd and >= 3
};

/// BT.601 luma: round(0.299 R + 0.587 G + 0.114 B), clamped to [0, 255].
Frame to_grayscale(const RgbFrame& rgb);

Frame gaussian_blur(const Frame& f, double sigma);
Frame median_filter(const Frame& f, int window);
Frame denoise(const Frame& f, const DenoiseSpec& spec);

/// Exhaustive maximization of between-class variance over the 256 candidate
/// thresholds; pixels < t form class 0. Ties resolve to the smallest t.
/// Throws on a constant frame.
int otsu_threshold(const Frame& f);

/// Binarize: v >= t maps to 255, else 0.
Frame apply_threshold(const Frame& f, int t);

/// Local mean threshold: v > mean(window) - c selects foreground.
Frame adaptive_threshold(const Frame& f, int window, double c);

/// Contrast-limited adaptive histogram equalization with bilinear blending
/// between per-tile mappings. Tiles covering a single intensity keep the
/// identity mapping.
Frame clahe(const Frame& f, int tile_rows, int tile_cols, double clip_limit);

/// Gaussian smoothing followed by bilinear resampling per level.
Pyramid build_pyramid(const Frame& f, int levels, double scale_factor);

}  // namespace nadir::imaging

namespace nadir::pgm {

/// Binary 8-bit PGM (P5).
imaging::Frame read(const std::string& path);
void write(const std::string& path, const imaging::Frame& f);

std::string frame_filename(int index);

/// Loads frame_%06d.pgm files from a directory, starting at index 0 and
/// stopping at the first gap.
std::vector<imaging::Frame> load_frame_dir(const std::string& dir, double fps);

}  // namespace nadir::pgm
