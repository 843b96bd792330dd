#pragma once

#include <cstdio>
#include <filesystem>
#include <unistd.h>
#include <random>
#include <string>
#include <vector>

#include "colorxfer/image.hpp"

namespace testsupport {

inline std::filesystem::path tmp_dir() {
    static const std::filesystem::path dir = [] {
        auto d = std::filesystem::temp_directory_path() /
                 ("colorxfer_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(d);
        return d;
    }();
    return dir;
}

inline std::string tmp_path(const std::string& name) { return (tmp_dir() / name).string(); }

inline colorxfer::ImagePlanar random_rgb_image(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    colorxfer::ImagePlanar img(w, h, colorxfer::ColorSpace::RGB);
    for (int c = 0; c < 3; ++c)
        for (double& v : img.plane(c)) v = uni(rng);
    return img;
}

/// Gaussian-colored noise clipped to [0,1]; distinct palettes come from
/// distinct per-channel means and sigmas.
inline colorxfer::ImagePlanar gaussian_noise_image(int w, int h, std::uint64_t seed,
                                                   const double (&mean)[3],
                                                   const double (&sigma)[3]) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    colorxfer::ImagePlanar img(w, h, colorxfer::ColorSpace::RGB);
    for (int c = 0; c < 3; ++c)
        for (double& v : img.plane(c))
            v = colorxfer::clamp01(mean[c] + sigma[c] * gauss(rng));
    return img;
}

inline std::vector<char> read_bytes(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) return {};
    std::fseek(f, 0, SEEK_END);
    const long n = std::ftell(f);
    std::fseek(f, 0, SEEK_SET);
    std::vector<char> buf(static_cast<std::size_t>(n));
    const std::size_t got = std::fread(buf.data(), 1, buf.size(), f);
    std::fclose(f);
    buf.resize(got);
    return buf;
}

}  // namespace testsupport
