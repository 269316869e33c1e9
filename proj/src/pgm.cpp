#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "nadir/imaging.hpp"

namespace nadir::pgm {

namespace {

// skips whitespace and '#' comment lines between header tokens
int next_header_int(std::istream& in, const std::string& path) {
    while (true) {
        int c = in.peek();
        if (c == EOF) throw std::runtime_error("pgm: truncated header in " + path);
        if (std::isspace(c)) {
            in.get();
            continue;
        }
        if (c == '#') {
            std::string line;
            std::getline(in, line);
            continue;
        }
        break;
    }
    int v = 0;
    if (!(in >> v)) throw std::runtime_error("pgm: bad header in " + path);
    return v;
}

}  // namespace

imaging::Frame read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("pgm: cannot open " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '5') throw std::runtime_error("pgm: not a P5 file: " + path);
    int w = next_header_int(in, path);
    int h = next_header_int(in, path);
    int maxval = next_header_int(in, path);
    if (w <= 0 || h <= 0) throw std::runtime_error("pgm: bad dimensions in " + path);
    if (maxval <= 0 || maxval > 255) throw std::runtime_error("pgm: unsupported maxval in " + path);
    in.get();  // single whitespace after maxval

    imaging::Frame f(w, h);
    std::vector<unsigned char> raw(static_cast<size_t>(w) * h);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw std::runtime_error("pgm: truncated raster in " + path);
    for (size_t i = 0; i < raw.size(); ++i) f.data[i] = static_cast<float>(raw[i]);
    return f;
}

void write(const std::string& path, const imaging::Frame& f) {
    if (f.width <= 0 || f.height <= 0 ||
        f.data.size() != static_cast<size_t>(f.width) * f.height)
        throw std::invalid_argument("pgm: malformed frame");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("pgm: cannot write " + path);
    out << "P5\n" << f.width << " " << f.height << "\n255\n";
    std::vector<unsigned char> raw(f.size());
    for (size_t i = 0; i < f.size(); ++i) {
        double v = std::round(f.data[i]);
        raw[i] = static_cast<unsigned char>(std::min(255.0, std::max(0.0, v)));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw std::runtime_error("pgm: write failed for " + path);
}

std::string frame_filename(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06d.pgm", index);
    return buf;
}

std::vector<imaging::Frame> load_frame_dir(const std::string& dir, double fps) {
    if (!(fps > 0.0)) throw std::invalid_argument("load_frame_dir: fps must be positive");
    if (!std::filesystem::is_directory(dir))
        throw std::runtime_error("load_frame_dir: no such directory: " + dir);
    std::vector<imaging::Frame> frames;
    for (int i = 0;; ++i) {
        std::filesystem::path p = std::filesystem::path(dir) / frame_filename(i);
        if (!std::filesystem::exists(p)) break;
        imaging::Frame f = read(p.string());
        f.timestamp_index = i;
        f.fps = fps;
        frames.push_back(std::move(f));
    }
    if (frames.empty()) throw std::runtime_error("load_frame_dir: no frames found in " + dir);
    return frames;
}

}  // namespace nadir::pgm
