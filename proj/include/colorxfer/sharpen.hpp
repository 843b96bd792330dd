#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "colorxfer/image.hpp"

namespace colorxfer {

namespace detail {

inline std::vector<double> gaussian_kernel(double sigma) {
    // Truncate at 3 sigma; the dropped tail is under 1% of the mass.
    const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
        k[static_cast<std::size_t>(i + r)] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

inline int reflect(int i, int n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
    return std::clamp(i, 0, n - 1);
}

inline void convolve_plane(const std::vector<double>& in, std::vector<double>& out,
                           int w, int h, const std::vector<double>& kernel, bool horizontal) {
    const int r = static_cast<int>(kernel.size()) / 2;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) {
                const int xx = horizontal ? reflect(x + k, w) : x;
                const int yy = horizontal ? y : reflect(y + k, h);
                acc += kernel[static_cast<std::size_t>(k + r)] *
                       in[static_cast<std::size_t>(yy) * static_cast<std::size_t>(w) +
                          static_cast<std::size_t>(xx)];
            }
            out[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                static_cast<std::size_t>(x)] = acc;
        }
    }
}

}  // namespace detail

inline ImagePlanar gaussian_blur(const ImagePlanar& img, double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("gaussian_blur: sigma must be positive");
    const auto kernel = detail::gaussian_kernel(sigma);
    ImagePlanar out(img.width(), img.height(), img.space());
    std::vector<double> tmp(img.pixel_count());
    for (int c = 0; c < 3; ++c) {
        detail::convolve_plane(img.plane(c), tmp, img.width(), img.height(), kernel, true);
        detail::convolve_plane(tmp, out.plane(c), img.width(), img.height(), kernel, false);
    }
    return out;
}

/// Unsharp mask: out = img + amount * (img - blur(img, radius)), clamped.
inline ImagePlanar sharpen(const ImagePlanar& img, double radius, double amount) {
    img.require_space(ColorSpace::RGB, "sharpen");
    if (radius <= 0.0) throw std::invalid_argument("sharpen: radius must be positive");
    if (amount < 0.0) throw std::invalid_argument("sharpen: amount must be non-negative");
    ImagePlanar blurred = gaussian_blur(img, radius);
    ImagePlanar out(img.width(), img.height(), ColorSpace::RGB);
    const std::size_t n = img.pixel_count();
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < n; ++i)
            out.plane(c)[i] =
                clamp01(img.plane(c)[i] + amount * (img.plane(c)[i] - blurred.plane(c)[i]));
    return out;
}

}  // namespace colorxfer
