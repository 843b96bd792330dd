#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace colorxfer {

enum class ColorSpace { RGB, LAlphaBeta, Lab, YIQ };

inline const char* to_string(ColorSpace s) {
    switch (s) {
        case ColorSpace::RGB: return "RGB";
        case ColorSpace::LAlphaBeta: return "lalphabeta";
        case ColorSpace::Lab: return "Lab";
        case ColorSpace::YIQ: return "YIQ";
    }
    return "?";
}

/// Planar 3-channel floating point image. RGB data lives in [0,1];
/// other spaces are unbounded. Planes are row-major, width*height each.
class ImagePlanar {
public:
    ImagePlanar() = default;
    ImagePlanar(int width, int height, ColorSpace space)
        : width_(width), height_(height), space_(space) {
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("ImagePlanar: non-positive dimensions");
        for (auto& p : planes_) p.assign(pixel_count(), 0.0);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t pixel_count() const {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }
    ColorSpace space() const { return space_; }
    void set_space(ColorSpace s) { space_ = s; }

    std::vector<double>& plane(int c) { return planes_[static_cast<std::size_t>(c)]; }
    const std::vector<double>& plane(int c) const { return planes_[static_cast<std::size_t>(c)]; }

    double at(int c, int x, int y) const {
        return planes_[static_cast<std::size_t>(c)][index(x, y)];
    }
    double& at(int c, int x, int y) {
        return planes_[static_cast<std::size_t>(c)][index(x, y)];
    }
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    bool all_finite() const {
        for (const auto& p : planes_)
            for (double v : p)
                if (!std::isfinite(v)) return false;
        return true;
    }

    void require_space(ColorSpace s, const std::string& where) const {
        if (space_ != s)
            throw std::invalid_argument(where + ": expected " + to_string(s) +
                                        " image, got " + to_string(space_));
    }

private:
    int width_ = 0;
    int height_ = 0;
    ColorSpace space_ = ColorSpace::RGB;
    std::vector<double> planes_[3];
};

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace colorxfer
