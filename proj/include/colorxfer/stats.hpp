#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "colorxfer/image.hpp"

namespace colorxfer {

constexpr int kBinCount = 256;
constexpr int kDefaultGridSize = 256;
// Density floor applied before renormalization; keeps every KL finite.
constexpr double kDensityFloor = 1e-10;

struct Histogram {
    std::vector<std::int64_t> counts = std::vector<std::int64_t>(kBinCount, 0);
    std::int64_t total = 0;
};

struct Cdf {
    std::vector<double> values = std::vector<double>(kBinCount, 0.0);
};

struct DensityEstimate {
    std::vector<double> grid;
    std::vector<double> density;
    double bandwidth = 0.0;
    double floored_fraction = 0.0;  // share of grid points raised to the floor
};

struct BandwidthParams {
    double h0 = 0.0;     // 0 means "use Silverman's rule"
    double lambda = 0.0; // 0 means "use the geometric mean of pilot densities"
};

inline int intensity_bin(double v) {
    return std::min(static_cast<int>(std::floor(v * kBinCount)), kBinCount - 1);
}

inline Histogram histogram(const std::vector<double>& plane) {
    if (plane.empty()) throw std::invalid_argument("histogram: empty plane");
    Histogram h;
    for (double v : plane) ++h.counts[static_cast<std::size_t>(intensity_bin(v))];
    h.total = static_cast<std::int64_t>(plane.size());
    return h;
}

inline Cdf cdf(const Histogram& h) {
    if (h.total <= 0) throw std::invalid_argument("cdf: histogram has no samples");
    Cdf c;
    std::int64_t acc = 0;
    for (int i = 0; i < kBinCount; ++i) {
        acc += h.counts[static_cast<std::size_t>(i)];
        c.values[static_cast<std::size_t>(i)] =
            static_cast<double>(acc) / static_cast<double>(h.total);
    }
    return c;
}

inline double epanechnikov(double u) {
    return (u > -1.0 && u < 1.0) ? 0.75 * (1.0 - u * u) : 0.0;
}

inline double trapezoid(const std::vector<double>& grid, const std::vector<double>& f) {
    double acc = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i)
        acc += 0.5 * (f[i] + f[i - 1]) * (grid[i] - grid[i - 1]);
    return acc;
}

inline std::vector<double> linspace01(int n) {
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        g[static_cast<std::size_t>(i)] = static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
}

/// Floors the density at kDensityFloor and renormalizes it to integrate to 1.
inline void finalize_density(DensityEstimate& d) {
    std::size_t floored = 0;
    for (double& v : d.density) {
        if (v < kDensityFloor) {
            v = kDensityFloor;
            ++floored;
        }
    }
    d.floored_fraction = d.density.empty()
                             ? 0.0
                             : static_cast<double>(floored) / static_cast<double>(d.density.size());
    const double z = trapezoid(d.grid, d.density);
    if (z > 0.0)
        for (double& v : d.density) v /= z;
}

/// Raw kernel-sum evaluation (1/(W h)) * sum_i w_i K((x - s_i)/h), no floor.
inline double kde_eval(const std::vector<double>& samples, const std::vector<double>& weights,
                       double h, double x) {
    double acc = 0.0;
    double wsum = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        acc += w * epanechnikov((x - samples[i]) / h);
        wsum += w;
    }
    return wsum > 0.0 ? acc / (wsum * h) : 0.0;
}

namespace detail {

inline double weighted_quantile(std::vector<std::pair<double, double>> sw, double q) {
    std::sort(sw.begin(), sw.end());
    double total = 0.0;
    for (const auto& p : sw) total += p.second;
    double acc = 0.0;
    for (const auto& p : sw) {
        acc += p.second;
        if (acc >= q * total) return p.first;
    }
    return sw.back().first;
}

}  // namespace detail

/// Silverman's rule-of-thumb bandwidth, with a floor of one intensity level.
inline double silverman_bandwidth(const std::vector<double>& samples,
                                  const std::vector<double>& weights = {}) {
    const std::size_t n = samples.size();
    if (n == 0) throw std::invalid_argument("silverman_bandwidth: no samples");
    double wsum = 0.0, mean = 0.0;
    std::vector<std::pair<double, double>> sw(n);
    double neff_num = 0.0, neff_den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        sw[i] = {samples[i], w};
        wsum += w;
        mean += w * samples[i];
        neff_num += w;
        neff_den += w * w;
    }
    mean /= wsum;
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += sw[i].second * (sw[i].first - mean) * (sw[i].first - mean);
    var /= wsum;
    const double sigma = std::sqrt(var);
    const double iqr = detail::weighted_quantile(sw, 0.75) - detail::weighted_quantile(sw, 0.25);
    double a = sigma;
    if (iqr > 0.0) a = std::min(a, iqr / 1.34);
    const double neff = neff_den > 0.0 ? neff_num * neff_num / neff_den : 1.0;
    double h = 0.9 * a * std::pow(neff, -0.2);
    return std::max(h, 1.0 / kBinCount);
}

inline DensityEstimate kde_epanechnikov(const std::vector<double>& samples, double h,
                                        int grid_size = kDefaultGridSize,
                                        const std::vector<double>& weights = {}) {
    if (samples.empty()) throw std::invalid_argument("kde_epanechnikov: no samples");
    if (h <= 0.0) throw std::invalid_argument("kde_epanechnikov: bandwidth must be positive");
    DensityEstimate d;
    d.grid = linspace01(grid_size);
    d.density.resize(d.grid.size());
    d.bandwidth = h;
    for (std::size_t k = 0; k < d.grid.size(); ++k)
        d.density[k] = kde_eval(samples, weights, h, d.grid[k]);
    finalize_density(d);
    return d;
}

/// Per-channel KDE of an image plane. Above 100k pixels the samples are the
/// 256 histogram bin centers weighted by counts, which is identical at 8-bit
/// resolution and O(grid * bins).
inline DensityEstimate density_of_plane(const std::vector<double>& plane,
                                        int grid_size = kDefaultGridSize, double h = 0.0) {
    if (plane.size() > 100000) {
        Histogram hist = histogram(plane);
        std::vector<double> centers, weights;
        for (int i = 0; i < kBinCount; ++i) {
            if (hist.counts[static_cast<std::size_t>(i)] > 0) {
                centers.push_back((i + 0.5) / kBinCount);
                weights.push_back(static_cast<double>(hist.counts[static_cast<std::size_t>(i)]));
            }
        }
        if (h <= 0.0) h = silverman_bandwidth(centers, weights);
        return kde_epanechnikov(centers, h, grid_size, weights);
    }
    if (h <= 0.0) h = silverman_bandwidth(plane);
    return kde_epanechnikov(plane, h, grid_size);
}

/// Comaniciu-style adaptive bandwidths h_i = h0 * sqrt(lambda / f(s_i)) from a
/// fixed-bandwidth pilot estimate.
inline std::vector<double> variable_bandwidth(const std::vector<double>& samples,
                                              BandwidthParams params) {
    if (samples.empty()) throw std::invalid_argument("variable_bandwidth: no samples");
    const double h0 = params.h0 > 0.0 ? params.h0 : silverman_bandwidth(samples);
    std::vector<double> pilot(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        pilot[i] = std::max(kde_eval(samples, {}, h0, samples[i]), kDensityFloor);
    double lambda = params.lambda;
    if (lambda <= 0.0) {
        double logsum = 0.0;
        for (double f : pilot) logsum += std::log(f);
        lambda = std::exp(logsum / static_cast<double>(pilot.size()));
    }
    std::vector<double> h(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        h[i] = h0 * std::sqrt(lambda / pilot[i]);
    return h;
}

inline double kl_divergence(const DensityEstimate& p, const DensityEstimate& q) {
    if (p.grid.size() != q.grid.size())
        throw std::invalid_argument("kl_divergence: mismatched grids");
    std::vector<double> integrand(p.grid.size());
    for (std::size_t i = 0; i < p.grid.size(); ++i)
        integrand[i] = p.density[i] * std::log(p.density[i] / q.density[i]);
    return trapezoid(p.grid, integrand);
}

/// Ratio-of-kernel-sums KL estimator with adaptive per-sample bandwidths.
inline double kl_sample_epanechnikov(const std::vector<double>& u,
                                     const std::vector<double>& v,
                                     BandwidthParams params = {}) {
    if (u.empty() || v.empty())
        throw std::invalid_argument("kl_sample_epanechnikov: empty sample set");
    const std::vector<double> h = variable_bandwidth(u, params);
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        double num = 0.0, den = 0.0;
        for (double uj : u) num += epanechnikov((u[i] - uj) / h[i]);
        for (double vj : v) den += epanechnikov((u[i] - vj) / h[i]);
        num /= static_cast<double>(u.size());
        den /= static_cast<double>(v.size());
        acc += std::log(std::max(num, kDensityFloor) / std::max(den, kDensityFloor));
    }
    return acc / static_cast<double>(u.size());
}

inline void write_histogram_csv(const std::string& path, const Histogram& r,
                                const Histogram& g, const Histogram& b) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "bin,r,g,b\n";
    for (int i = 0; i < kBinCount; ++i)
        out << i << ',' << r.counts[static_cast<std::size_t>(i)] << ','
            << g.counts[static_cast<std::size_t>(i)] << ','
            << b.counts[static_cast<std::size_t>(i)] << '\n';
}

inline void write_density_csv(const std::string& path, const DensityEstimate& r,
                              const DensityEstimate& g, const DensityEstimate& b) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "x,r,g,b\n";
    out.precision(12);
    for (std::size_t i = 0; i < r.grid.size(); ++i)
        out << r.grid[i] << ',' << r.density[i] << ',' << g.density[i] << ','
            << b.density[i] << '\n';
}

}  // namespace colorxfer
