#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "colorxfer/colorspace.hpp"
#include "colorxfer/image.hpp"

namespace colorxfer {

struct DegenerateInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ChannelStats {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    std::size_t n = 0;
};

struct AffineColorMap {
    Eigen::Matrix3d a = Eigen::Matrix3d::Identity();
    Eigen::Vector3d b = Eigen::Vector3d::Zero();
};

enum class AffineMethod { Cholesky, Sqrt, MKL };

/// Population (divide-by-N) mean and covariance of the pixel colors.
inline ChannelStats channel_stats(const ImagePlanar& img) {
    const std::size_t n = img.pixel_count();
    if (n == 0) throw std::invalid_argument("channel_stats: empty image");
    ChannelStats s;
    s.n = n;
    for (std::size_t i = 0; i < n; ++i)
        s.mean += Eigen::Vector3d(img.plane(0)[i], img.plane(1)[i], img.plane(2)[i]);
    s.mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d d =
            Eigen::Vector3d(img.plane(0)[i], img.plane(1)[i], img.plane(2)[i]) - s.mean;
        s.cov += d * d.transpose();
    }
    s.cov /= static_cast<double>(n);
    s.cov = 0.5 * (s.cov + s.cov.transpose().eval());
    return s;
}

namespace detail {

inline Eigen::Matrix3d spd_sqrt(const Eigen::Matrix3d& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
    Eigen::Vector3d ev = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

inline Eigen::Matrix3d spd_inv_sqrt(const Eigen::Matrix3d& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
    Eigen::Vector3d ev = es.eigenvalues();
    Eigen::Vector3d inv;
    for (int i = 0; i < 3; ++i) inv[i] = 1.0 / std::sqrt(ev[i]);
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

// Ridge only when a covariance is near singular, so well-conditioned inputs
// keep the exact A*Sigma_S*A' = Sigma_C property.
inline Eigen::Matrix3d regularize(const Eigen::Matrix3d& cov, const char* role) {
    const double tr = cov.trace();
    if (!(tr > 0.0)) {
        int flat = 0;
        cov.diagonal().minCoeff(&flat);
        throw DegenerateInputError(std::string("matched_affine: singular ") + role +
                                   " covariance (flat channel " + std::to_string(flat) + ")");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    if (es.eigenvalues().minCoeff() > 1e-9 * tr) return cov;
    Eigen::Matrix3d ridged = cov + (1e-8 * tr / 3.0) * Eigen::Matrix3d::Identity();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es2(ridged);
    if (es2.eigenvalues().minCoeff() <= 0.0) {
        int flat = 0;
        cov.diagonal().minCoeff(&flat);
        throw DegenerateInputError(std::string("matched_affine: singular ") + role +
                                   " covariance (flat channel " + std::to_string(flat) + ")");
    }
    return ridged;
}

}  // namespace detail

/// Affine map x -> A x + b with A Sigma_S A' = Sigma_C and b = mu_C - A mu_S.
inline AffineColorMap matched_affine(const ChannelStats& source, const ChannelStats& target,
                                     AffineMethod method) {
    const Eigen::Matrix3d cov_s = detail::regularize(source.cov, "source");
    const Eigen::Matrix3d cov_t = detail::regularize(target.cov, "target");
    AffineColorMap map;
    switch (method) {
        case AffineMethod::Cholesky: {
            Eigen::LLT<Eigen::Matrix3d> llt_s(cov_s), llt_t(cov_t);
            if (llt_s.info() != Eigen::Success || llt_t.info() != Eigen::Success)
                throw DegenerateInputError("matched_affine: Cholesky factorization failed");
            const Eigen::Matrix3d l_s = llt_s.matrixL();
            const Eigen::Matrix3d l_t = llt_t.matrixL();
            map.a = l_t * l_s.inverse();
            break;
        }
        case AffineMethod::Sqrt:
            map.a = detail::spd_sqrt(cov_t) * detail::spd_inv_sqrt(cov_s);
            break;
        case AffineMethod::MKL: {
            // Unique symmetric positive-definite solution of A Sigma_S A' = Sigma_C.
            const Eigen::Matrix3d s_half = detail::spd_sqrt(cov_s);
            const Eigen::Matrix3d s_inv_half = detail::spd_inv_sqrt(cov_s);
            const Eigen::Matrix3d inner = detail::spd_sqrt(s_half * cov_t * s_half);
            map.a = s_inv_half * inner * s_inv_half;
            map.a = 0.5 * (map.a + map.a.transpose().eval());
            break;
        }
    }
    map.b = target.mean - map.a * source.mean;
    return map;
}

inline ImagePlanar apply_affine(const ImagePlanar& img, const AffineColorMap& map) {
    img.require_space(ColorSpace::RGB, "apply_affine");
    ImagePlanar out(img.width(), img.height(), ColorSpace::RGB);
    const std::size_t n = img.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d v =
            map.a * Eigen::Vector3d(img.plane(0)[i], img.plane(1)[i], img.plane(2)[i]) + map.b;
        out.plane(0)[i] = v[0];
        out.plane(1)[i] = v[1];
        out.plane(2)[i] = v[2];
    }
    return out;
}

namespace detail {

inline void moments(const std::vector<double>& plane, double& mean, double& sigma) {
    mean = 0.0;
    for (double v : plane) mean += v;
    mean /= static_cast<double>(plane.size());
    double var = 0.0;
    for (double v : plane) var += (v - mean) * (v - mean);
    var /= static_cast<double>(plane.size());
    sigma = std::sqrt(var);
}

}  // namespace detail

/// Reinhard global transfer: per-channel mean/std matching in lalphabeta.
/// Flat source channels pass through shifted (ratio forced to 1).
inline ImagePlanar reinhard_transfer(const ImagePlanar& source, const ImagePlanar& target) {
    source.require_space(ColorSpace::RGB, "reinhard_transfer");
    target.require_space(ColorSpace::RGB, "reinhard_transfer");
    ImagePlanar src = rgb_to_lalphabeta(source);
    const ImagePlanar tgt = rgb_to_lalphabeta(target);
    for (int c = 0; c < 3; ++c) {
        double mu_s, sd_s, mu_t, sd_t;
        detail::moments(src.plane(c), mu_s, sd_s);
        detail::moments(tgt.plane(c), mu_t, sd_t);
        const double ratio = sd_s > 0.0 ? sd_t / sd_s : 1.0;
        for (double& v : src.plane(c)) v = ratio * (v - mu_s) + mu_t;
    }
    return lalphabeta_to_rgb(src);
}

}  // namespace colorxfer
