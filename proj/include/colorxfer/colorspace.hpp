#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "colorxfer/image.hpp"

namespace colorxfer {

/// 3x3 linear color transform with an optional offset.
struct ColorMatrix3 {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    Eigen::Vector3d offset = Eigen::Vector3d::Zero();

    ColorMatrix3 inverse() const {
        ColorMatrix3 r;
        r.m = m.inverse();
        r.offset = -r.m * offset;
        return r;
    }
};

namespace colormatrix {

// Reinhard et al.'s published RGB <-> LMS and lalphabeta decorrelation
// matrices. Inverses are computed numerically from the forward matrices so
// that forward/inverse chains compose to identity.
inline const Eigen::Matrix3d& rgb_to_lms() {
    static const Eigen::Matrix3d m = (Eigen::Matrix3d() <<
        0.3811, 0.5783, 0.0402,
        0.1967, 0.7244, 0.0782,
        0.0241, 0.1288, 0.8444).finished();
    return m;
}

inline const Eigen::Matrix3d& lms_to_rgb() {
    static const Eigen::Matrix3d m = rgb_to_lms().inverse();
    return m;
}

inline const Eigen::Matrix3d& loglms_to_lalphabeta() {
    static const Eigen::Matrix3d m = [] {
        Eigen::Matrix3d scale = Eigen::Vector3d(1.0 / std::sqrt(3.0),
                                                1.0 / std::sqrt(6.0),
                                                1.0 / std::sqrt(2.0)).asDiagonal();
        Eigen::Matrix3d mix;
        mix << 1, 1, 1,
               1, 1, -2,
               1, -1, 0;
        return Eigen::Matrix3d(scale * mix);
    }();
    return m;
}

inline const Eigen::Matrix3d& lalphabeta_to_loglms() {
    static const Eigen::Matrix3d m = loglms_to_lalphabeta().inverse();
    return m;
}

// Linear sRGB -> XYZ (D65).
inline const Eigen::Matrix3d& rgb_to_xyz() {
    static const Eigen::Matrix3d m = (Eigen::Matrix3d() <<
        0.4124564, 0.3575761, 0.1804375,
        0.2126729, 0.7151522, 0.0721750,
        0.0193339, 0.1191920, 0.9503041).finished();
    return m;
}

inline const Eigen::Matrix3d& xyz_to_rgb() {
    static const Eigen::Matrix3d m = rgb_to_xyz().inverse();
    return m;
}

inline const Eigen::Matrix3d& rgb_to_yiq() {
    static const Eigen::Matrix3d m = (Eigen::Matrix3d() <<
        0.299, 0.587, 0.114,
        0.595716, -0.274453, -0.321263,
        0.211456, -0.522591, 0.311135).finished();
    return m;
}

inline const Eigen::Matrix3d& yiq_to_rgb() {
    static const Eigen::Matrix3d m = rgb_to_yiq().inverse();
    return m;
}

}  // namespace colormatrix

namespace detail {

// Floor before log10 so zero channels stay finite.
constexpr double kLogFloor = 1e-6;

inline ImagePlanar apply_matrix(const ImagePlanar& in, const Eigen::Matrix3d& m,
                                ColorSpace out_space) {
    ImagePlanar out(in.width(), in.height(), out_space);
    const std::size_t n = in.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d v(in.plane(0)[i], in.plane(1)[i], in.plane(2)[i]);
        const Eigen::Vector3d w = m * v;
        out.plane(0)[i] = w[0];
        out.plane(1)[i] = w[1];
        out.plane(2)[i] = w[2];
    }
    return out;
}

}  // namespace detail

inline ImagePlanar rgb_to_lalphabeta(const ImagePlanar& img) {
    img.require_space(ColorSpace::RGB, "rgb_to_lalphabeta");
    ImagePlanar lms = detail::apply_matrix(img, colormatrix::rgb_to_lms(), ColorSpace::RGB);
    for (int c = 0; c < 3; ++c)
        for (double& v : lms.plane(c))
            v = std::log10(std::max(v, detail::kLogFloor));
    return detail::apply_matrix(lms, colormatrix::loglms_to_lalphabeta(),
                                ColorSpace::LAlphaBeta);
}

inline ImagePlanar lalphabeta_to_rgb(const ImagePlanar& img) {
    img.require_space(ColorSpace::LAlphaBeta, "lalphabeta_to_rgb");
    ImagePlanar loglms =
        detail::apply_matrix(img, colormatrix::lalphabeta_to_loglms(), ColorSpace::RGB);
    for (int c = 0; c < 3; ++c)
        for (double& v : loglms.plane(c)) v = std::pow(10.0, v);
    return detail::apply_matrix(loglms, colormatrix::lms_to_rgb(), ColorSpace::RGB);
}

namespace detail {

constexpr double kLabDelta = 6.0 / 29.0;
inline const Eigen::Vector3d& d65_white() {
    static const Eigen::Vector3d w(0.95047, 1.0, 1.08883);
    return w;
}

inline double lab_f(double t) {
    const double d3 = kLabDelta * kLabDelta * kLabDelta;
    return t > d3 ? std::cbrt(t) : t / (3.0 * kLabDelta * kLabDelta) + 4.0 / 29.0;
}

inline double lab_f_inv(double t) {
    return t > kLabDelta ? t * t * t : 3.0 * kLabDelta * kLabDelta * (t - 4.0 / 29.0);
}

}  // namespace detail

/// D65 CIELAB on linear RGB values.
inline ImagePlanar rgb_to_lab(const ImagePlanar& img) {
    img.require_space(ColorSpace::RGB, "rgb_to_lab");
    ImagePlanar out(img.width(), img.height(), ColorSpace::Lab);
    const std::size_t n = img.pixel_count();
    const Eigen::Vector3d& wp = detail::d65_white();
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d rgb(img.plane(0)[i], img.plane(1)[i], img.plane(2)[i]);
        const Eigen::Vector3d xyz = colormatrix::rgb_to_xyz() * rgb;
        const double fx = detail::lab_f(xyz[0] / wp[0]);
        const double fy = detail::lab_f(xyz[1] / wp[1]);
        const double fz = detail::lab_f(xyz[2] / wp[2]);
        out.plane(0)[i] = 116.0 * fy - 16.0;
        out.plane(1)[i] = 500.0 * (fx - fy);
        out.plane(2)[i] = 200.0 * (fy - fz);
    }
    return out;
}

inline ImagePlanar lab_to_rgb(const ImagePlanar& img) {
    img.require_space(ColorSpace::Lab, "lab_to_rgb");
    ImagePlanar out(img.width(), img.height(), ColorSpace::RGB);
    const std::size_t n = img.pixel_count();
    const Eigen::Vector3d& wp = detail::d65_white();
    for (std::size_t i = 0; i < n; ++i) {
        const double L = img.plane(0)[i];
        const double a = img.plane(1)[i];
        const double b = img.plane(2)[i];
        const double fy = (L + 16.0) / 116.0;
        const double fx = fy + a / 500.0;
        const double fz = fy - b / 200.0;
        const Eigen::Vector3d xyz(wp[0] * detail::lab_f_inv(fx),
                                  wp[1] * detail::lab_f_inv(fy),
                                  wp[2] * detail::lab_f_inv(fz));
        const Eigen::Vector3d rgb = colormatrix::xyz_to_rgb() * xyz;
        out.plane(0)[i] = rgb[0];
        out.plane(1)[i] = rgb[1];
        out.plane(2)[i] = rgb[2];
    }
    return out;
}

inline ImagePlanar rgb_to_yiq(const ImagePlanar& img) {
    img.require_space(ColorSpace::RGB, "rgb_to_yiq");
    return detail::apply_matrix(img, colormatrix::rgb_to_yiq(), ColorSpace::YIQ);
}

inline ImagePlanar yiq_to_rgb(const ImagePlanar& img) {
    img.require_space(ColorSpace::YIQ, "yiq_to_rgb");
    return detail::apply_matrix(img, colormatrix::yiq_to_rgb(), ColorSpace::RGB);
}

}  // namespace colorxfer
