#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "colorxfer/image.hpp"
#include "colorxfer/stats.hpp"

namespace colorxfer {

/// Discretized monotone map t(u) = G^-1(F(u)) with linear interpolation.
class LookupTable1D {
public:
    LookupTable1D(std::vector<double> knots, std::vector<double> values)
        : knots_(std::move(knots)), values_(std::move(values)) {
        if (knots_.size() != values_.size() || knots_.size() < 2)
            throw std::invalid_argument("LookupTable1D: need matching knots/values");
        // Monotone by construction of the quantile map; enforce against
        // floating point wiggle.
        for (std::size_t i = 1; i < values_.size(); ++i)
            values_[i] = std::max(values_[i], values_[i - 1]);
    }

    double operator()(double u) const {
        if (u <= knots_.front()) return values_.front();
        if (u >= knots_.back()) return values_.back();
        const auto it = std::upper_bound(knots_.begin(), knots_.end(), u);
        const std::size_t j = static_cast<std::size_t>(it - knots_.begin());
        const double t = (u - knots_[j - 1]) / (knots_[j] - knots_[j - 1]);
        return values_[j - 1] + t * (values_[j] - values_[j - 1]);
    }

    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> knots_;
    std::vector<double> values_;
};

constexpr int kPdfTransferKnots = 300;

namespace detail {

inline std::vector<double> empirical_cdf_at(const std::vector<double>& sorted,
                                            const std::vector<double>& knots) {
    std::vector<double> cdf(knots.size());
    for (std::size_t k = 0; k < knots.size(); ++k) {
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), knots[k]);
        cdf[k] = static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
    }
    return cdf;
}

inline double invert_cdf(const std::vector<double>& knots, const std::vector<double>& cdf,
                         double alpha) {
    // inf{u | G(u) >= alpha}, linearized between knots.
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), alpha);
    if (it == cdf.begin()) return knots.front();
    if (it == cdf.end()) return knots.back();
    const std::size_t j = static_cast<std::size_t>(it - cdf.begin());
    const double dg = cdf[j] - cdf[j - 1];
    if (dg <= 0.0) return knots[j];
    const double t = (alpha - cdf[j - 1]) / dg;
    return knots[j - 1] + t * (knots[j] - knots[j - 1]);
}

}  // namespace detail

/// 1-D pdf transfer between two sample sets via quantile mapping on a shared
/// discrete grid spanning both ranges.
inline LookupTable1D pdf_transfer_1d(const std::vector<double>& source,
                                     const std::vector<double>& target,
                                     int knot_count = kPdfTransferKnots) {
    if (source.empty() || target.empty())
        throw std::invalid_argument("pdf_transfer_1d: empty sample set");
    auto [s_lo, s_hi] = std::minmax_element(source.begin(), source.end());
    auto [t_lo, t_hi] = std::minmax_element(target.begin(), target.end());
    double lo = std::min(*s_lo, *t_lo);
    double hi = std::max(*s_hi, *t_hi);
    const double pad = 1e-6 * (hi - lo) + 1e-9;
    lo -= pad;
    hi += pad;

    std::vector<double> knots(static_cast<std::size_t>(knot_count));
    for (int k = 0; k < knot_count; ++k)
        knots[static_cast<std::size_t>(k)] =
            lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(knot_count - 1);

    std::vector<double> src_sorted = source;
    std::vector<double> tgt_sorted = target;
    std::sort(src_sorted.begin(), src_sorted.end());
    std::sort(tgt_sorted.begin(), tgt_sorted.end());
    const std::vector<double> f = detail::empirical_cdf_at(src_sorted, knots);
    const std::vector<double> g = detail::empirical_cdf_at(tgt_sorted, knots);

    std::vector<double> values(knots.size());
    for (std::size_t k = 0; k < knots.size(); ++k)
        values[k] = detail::invert_cdf(knots, g, f[k]);
    return LookupTable1D(std::move(knots), std::move(values));
}

/// Deterministic random orthogonal basis: QR of a seeded Gaussian 3x3 draw,
/// sign-fixed so the R factor has a non-negative diagonal.
inline Eigen::Matrix3d random_rotation(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = gauss(rng);
    Eigen::HouseholderQR<Eigen::Matrix3d> qr(m);
    Eigen::Matrix3d q = qr.householderQ();
    const Eigen::Matrix3d r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int c = 0; c < 3; ++c)
        if (r(c, c) < 0.0) q.col(c) = -q.col(c);
    return q.transpose();  // rows are the projection axes
}

struct IdtTrace {
    std::vector<double> kl;  // iterations + 1 entries, first is the initial state
    int iterations = 0;
    std::uint64_t seed = 0;
};

namespace detail {

// 1-D KDE KL between two point clouds along a fixed axis, after mapping the
// combined range to [0,1]. Samples are binned so the cost is O(grid * bins).
inline double axis_kde_kl(const std::vector<double>& current, const std::vector<double>& target) {
    auto [c_lo, c_hi] = std::minmax_element(current.begin(), current.end());
    auto [t_lo, t_hi] = std::minmax_element(target.begin(), target.end());
    const double lo = std::min(*c_lo, *t_lo);
    const double hi = std::max(*c_hi, *t_hi);
    const double span = hi - lo;
    if (span <= 0.0) return 0.0;
    auto binned = [&](const std::vector<double>& xs, std::vector<double>& centers,
                      std::vector<double>& weights) {
        std::vector<double> counts(kBinCount, 0.0);
        for (double x : xs) {
            const int b = std::min(static_cast<int>((x - lo) / span * kBinCount), kBinCount - 1);
            counts[static_cast<std::size_t>(b)] += 1.0;
        }
        for (int i = 0; i < kBinCount; ++i)
            if (counts[static_cast<std::size_t>(i)] > 0.0) {
                centers.push_back((i + 0.5) / kBinCount);
                weights.push_back(counts[static_cast<std::size_t>(i)]);
            }
    };
    std::vector<double> cc, cw, tc, tw;
    binned(current, cc, cw);
    binned(target, tc, tw);
    const double h = silverman_bandwidth(tc, tw);
    const DensityEstimate p = kde_epanechnikov(cc, h, kDefaultGridSize, cw);
    const DensityEstimate q = kde_epanechnikov(tc, h, kDefaultGridSize, tw);
    return kl_divergence(p, q);
}

inline double probe_kl(const std::vector<double> (&cur)[3], const std::vector<double> (&tgt)[3]) {
    double acc = 0.0;
    for (int c = 0; c < 3; ++c) acc += axis_kde_kl(cur[c], tgt[c]);
    return acc / 3.0;
}

}  // namespace detail

/// Iterative distribution transfer on raw pixel clouds. Returns the displaced
/// source cloud and the per-iteration KL trace (measured on the fixed R/G/B
/// axes so successive entries are comparable).
inline IdtTrace idt_samples(std::vector<double> (&src)[3], const std::vector<double> (&tgt)[3],
                            int iterations, std::uint64_t seed) {
    if (iterations < 1) throw std::invalid_argument("idt: iterations must be >= 1");
    const std::size_t n = src[0].size();
    IdtTrace trace;
    trace.iterations = iterations;
    trace.seed = seed;
    trace.kl.push_back(detail::probe_kl(src, tgt));

    std::vector<double> proj_src(n), proj_tgt(tgt[0].size());
    for (int it = 0; it < iterations; ++it) {
        const Eigen::Matrix3d basis = random_rotation(seed, static_cast<std::uint64_t>(it));
        for (int axis = 0; axis < 3; ++axis) {
            const Eigen::Vector3d e = basis.row(axis);
            for (std::size_t i = 0; i < n; ++i)
                proj_src[i] = e[0] * src[0][i] + e[1] * src[1][i] + e[2] * src[2][i];
            for (std::size_t i = 0; i < proj_tgt.size(); ++i)
                proj_tgt[i] = e[0] * tgt[0][i] + e[1] * tgt[1][i] + e[2] * tgt[2][i];
            const LookupTable1D map = pdf_transfer_1d(proj_src, proj_tgt);
            for (std::size_t i = 0; i < n; ++i) {
                const double d = map(proj_src[i]) - proj_src[i];
                src[0][i] += d * e[0];
                src[1][i] += d * e[1];
                src[2][i] += d * e[2];
            }
        }
        trace.kl.push_back(detail::probe_kl(src, tgt));
    }
    return trace;
}

inline std::pair<ImagePlanar, IdtTrace> idt(const ImagePlanar& source, const ImagePlanar& target,
                                            int iterations, std::uint64_t seed) {
    source.require_space(ColorSpace::RGB, "idt");
    target.require_space(ColorSpace::RGB, "idt");
    std::vector<double> src[3] = {source.plane(0), source.plane(1), source.plane(2)};
    const std::vector<double> tgt[3] = {target.plane(0), target.plane(1), target.plane(2)};
    IdtTrace trace = idt_samples(src, tgt, iterations, seed);
    ImagePlanar out(source.width(), source.height(), ColorSpace::RGB);
    for (int c = 0; c < 3; ++c) out.plane(c) = std::move(src[c]);
    return {std::move(out), std::move(trace)};
}

inline void write_trace_csv(const std::string& path, const IdtTrace& trace) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "iteration,kl\n";
    out.precision(12);
    for (std::size_t i = 0; i < trace.kl.size(); ++i) out << i << ',' << trace.kl[i] << '\n';
}

}  // namespace colorxfer
