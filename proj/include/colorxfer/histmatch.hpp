#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "colorxfer/colorspace.hpp"
#include "colorxfer/image.hpp"
#include "colorxfer/stats.hpp"

namespace colorxfer {

struct EqualizationMap {
    std::array<std::uint8_t, kBinCount> map{};
    bool degenerate = false;  // constant plane, identity map returned
};

/// h(v) = round((cdf(v) - cdf_min) / (N - cdf_min) * 255) with count-level
/// cdf and cdf_min the smallest non-zero cdf value.
inline EqualizationMap equalization_map(const Histogram& hist) {
    EqualizationMap em;
    std::int64_t acc = 0;
    std::int64_t cdf_min = 0;
    std::array<std::int64_t, kBinCount> cdf_counts{};
    for (int i = 0; i < kBinCount; ++i) {
        acc += hist.counts[static_cast<std::size_t>(i)];
        cdf_counts[static_cast<std::size_t>(i)] = acc;
        if (cdf_min == 0 && acc > 0) cdf_min = acc;
    }
    const std::int64_t denom = hist.total - cdf_min;
    if (denom <= 0) {
        for (int i = 0; i < kBinCount; ++i)
            em.map[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
        em.degenerate = true;
        return em;
    }
    for (int i = 0; i < kBinCount; ++i) {
        const double v = static_cast<double>(cdf_counts[static_cast<std::size_t>(i)] - cdf_min) /
                         static_cast<double>(denom) * (kBinCount - 1);
        em.map[static_cast<std::size_t>(i)] =
            static_cast<std::uint8_t>(std::lround(std::max(v, 0.0)));
    }
    return em;
}

inline std::vector<double> apply_intensity_map(const std::vector<double>& plane,
                                               const EqualizationMap& em) {
    std::vector<double> out(plane.size());
    for (std::size_t i = 0; i < plane.size(); ++i)
        out[i] = em.map[static_cast<std::size_t>(intensity_bin(plane[i]))] / 255.0;
    return out;
}

inline std::pair<std::vector<double>, EqualizationMap> equalize_channel(
    const std::vector<double>& plane) {
    if (plane.empty()) throw std::invalid_argument("equalize_channel: empty plane");
    const EqualizationMap em = equalization_map(histogram(plane));
    return {apply_intensity_map(plane, em), em};
}

inline ImagePlanar equalize(const ImagePlanar& img) {
    img.require_space(ColorSpace::RGB, "equalize");
    ImagePlanar out(img.width(), img.height(), ColorSpace::RGB);
    for (int c = 0; c < 3; ++c) out.plane(c) = equalize_channel(img.plane(c)).first;
    return out;
}

namespace detail {

// Byte-level quantile map t(u) = G^-1(F(u)): the smallest reference level
// whose cdf reaches the source cdf at u. Non-decreasing by construction.
inline std::array<std::uint8_t, kBinCount> match_map(const Cdf& f, const Cdf& g) {
    std::array<std::uint8_t, kBinCount> map{};
    int j = 0;
    for (int i = 0; i < kBinCount; ++i) {
        while (j < kBinCount - 1 &&
               g.values[static_cast<std::size_t>(j)] < f.values[static_cast<std::size_t>(i)])
            ++j;
        map[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(j);
    }
    return map;
}

}  // namespace detail

/// Per-channel cdf matching of the source image to the reference image.
inline ImagePlanar match_histogram(const ImagePlanar& source, const ImagePlanar& reference) {
    source.require_space(ColorSpace::RGB, "match_histogram");
    reference.require_space(ColorSpace::RGB, "match_histogram");
    ImagePlanar out(source.width(), source.height(), ColorSpace::RGB);
    for (int c = 0; c < 3; ++c) {
        const Cdf f = cdf(histogram(source.plane(c)));
        const Cdf g = cdf(histogram(reference.plane(c)));
        const auto map = detail::match_map(f, g);
        const std::vector<double>& in = source.plane(c);
        std::vector<double>& o = out.plane(c);
        for (std::size_t i = 0; i < in.size(); ++i)
            o[i] = map[static_cast<std::size_t>(intensity_bin(in[i]))] / 255.0;
    }
    return out;
}

struct LuminanceTransferResult {
    ImagePlanar image;
    bool flat_luminance = false;  // sigma_S was 0, shift-only applied
};

enum class LuminanceSpace { Lab, YIQ };

/// Moment-matches the style image's luminance channel to the content image's
/// and keeps the style chroma channels untouched.
inline LuminanceTransferResult luminance_transfer(const ImagePlanar& style,
                                                  const ImagePlanar& content,
                                                  LuminanceSpace space = LuminanceSpace::Lab) {
    style.require_space(ColorSpace::RGB, "luminance_transfer");
    content.require_space(ColorSpace::RGB, "luminance_transfer");
    ImagePlanar s = space == LuminanceSpace::Lab ? rgb_to_lab(style) : rgb_to_yiq(style);
    const ImagePlanar c = space == LuminanceSpace::Lab ? rgb_to_lab(content) : rgb_to_yiq(content);

    auto moments = [](const std::vector<double>& p, double& mu, double& sd) {
        mu = 0.0;
        for (double v : p) mu += v;
        mu /= static_cast<double>(p.size());
        double var = 0.0;
        for (double v : p) var += (v - mu) * (v - mu);
        sd = std::sqrt(var / static_cast<double>(p.size()));
    };
    double mu_s, sd_s, mu_c, sd_c;
    moments(s.plane(0), mu_s, sd_s);
    moments(c.plane(0), mu_c, sd_c);

    LuminanceTransferResult result{ImagePlanar(style.width(), style.height(), ColorSpace::RGB)};
    const double ratio = sd_s > 0.0 ? sd_c / sd_s : 1.0;
    result.flat_luminance = sd_s <= 0.0;
    for (double& v : s.plane(0)) v = ratio * (v - mu_s) + mu_c;
    result.image = space == LuminanceSpace::Lab ? lab_to_rgb(s) : yiq_to_rgb(s);
    return result;
}

}  // namespace colorxfer
