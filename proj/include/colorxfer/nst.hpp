#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "colorxfer/image.hpp"

namespace colorxfer::nst {

struct FeatureMap {
    std::string layer;
    Eigen::MatrixXd data;  // filters x positions

    Eigen::Index filters() const { return data.rows(); }
    Eigen::Index positions() const { return data.cols(); }
};

struct LossWeights {
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 0.0;
    int kappa = 2;
    std::vector<double> layer_weights;  // defaults to 0.2 per layer when empty
};

struct FeatureParseError : std::runtime_error {
    int line;
    FeatureParseError(const std::string& msg, int line_no)
        : std::runtime_error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
};

/// Reads the `layer,N,M` header plus N rows of M comma-separated reals.
inline FeatureMap read_feature_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open feature file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw FeatureParseError("missing header", 1);
    std::istringstream header(line);
    FeatureMap fm;
    std::string n_str, m_str;
    if (!std::getline(header, fm.layer, ',') || !std::getline(header, n_str, ',') ||
        !std::getline(header, m_str, ','))
        throw FeatureParseError("header must be layer,N,M", 1);
    int n = 0, m = 0;
    try {
        n = std::stoi(n_str);
        m = std::stoi(m_str);
    } catch (const std::exception&) {
        throw FeatureParseError("non-numeric dimensions in header", 1);
    }
    if (n < 1 || m < 1) throw FeatureParseError("dimensions must be >= 1", 1);
    fm.data.resize(n, m);
    for (int r = 0; r < n; ++r) {
        if (!std::getline(in, line)) throw FeatureParseError("missing data row", r + 2);
        std::istringstream row(line);
        std::string cell;
        for (int c = 0; c < m; ++c) {
            if (!std::getline(row, cell, ','))
                throw FeatureParseError("too few values in row", r + 2);
            try {
                fm.data(r, c) = std::stod(cell);
            } catch (const std::exception&) {
                throw FeatureParseError("non-numeric value", r + 2);
            }
        }
    }
    return fm;
}

inline void write_feature_map(const std::string& path, const FeatureMap& fm) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << fm.layer << ',' << fm.filters() << ',' << fm.positions() << '\n';
    out.precision(12);
    for (Eigen::Index r = 0; r < fm.filters(); ++r) {
        for (Eigen::Index c = 0; c < fm.positions(); ++c)
            out << fm.data(r, c) << (c + 1 < fm.positions() ? "," : "");
        out << '\n';
    }
}

/// (1/2) sum of squared entry differences between the generated and content
/// feature maps. The double sum runs over all N x M entries.
inline double content_loss(const Eigen::MatrixXd& f, const Eigen::MatrixXd& p) {
    if (f.rows() != p.rows() || f.cols() != p.cols())
        throw std::invalid_argument("content_loss: shape mismatch");
    return 0.5 * (f - p).squaredNorm();
}

inline Eigen::MatrixXd gram(const Eigen::MatrixXd& f) { return f * f.transpose(); }

inline double style_layer_loss(const Eigen::MatrixXd& g, const Eigen::MatrixXd& a,
                               Eigen::Index n_l, Eigen::Index m_l) {
    if (g.rows() != a.rows() || g.cols() != a.cols())
        throw std::invalid_argument("style_layer_loss: shape mismatch");
    const double scale = 4.0 * static_cast<double>(n_l) * static_cast<double>(n_l) *
                         static_cast<double>(m_l) * static_cast<double>(m_l);
    return (g - a).squaredNorm() / scale;
}

struct StyleLayer {
    Eigen::MatrixXd g;
    Eigen::MatrixXd a;
    Eigen::Index n_l;
    Eigen::Index m_l;
};

inline double style_loss(const std::vector<StyleLayer>& layers, const std::vector<double>& w) {
    if (layers.size() != w.size())
        throw std::invalid_argument("style_loss: layer/weight length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < layers.size(); ++i)
        acc += w[i] * style_layer_loss(layers[i].g, layers[i].a, layers[i].n_l, layers[i].m_l);
    return acc;
}

/// Forward-difference total variation; neighbors outside the image are
/// excluded from the sum.
inline double total_variation_loss(const ImagePlanar& img, double gamma, int kappa) {
    if (kappa != 1 && kappa != 2)
        throw std::invalid_argument("total_variation_loss: kappa must be 1 or 2");
    double acc = 0.0;
    const int w = img.width(), h = img.height();
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double v = img.at(c, x, y);
                if (y + 1 < h) {
                    const double d = std::abs(img.at(c, x, y + 1) - v);
                    acc += kappa == 2 ? d * d : d;
                }
                if (x + 1 < w) {
                    const double d = std::abs(img.at(c, x + 1, y) - v);
                    acc += kappa == 2 ? d * d : d;
                }
            }
    return gamma * acc;
}

inline double total_loss(double content, double style, double tv, const LossWeights& w) {
    return w.alpha * content + w.beta * style + tv;
}

inline Eigen::MatrixXd content_loss_gradient(const Eigen::MatrixXd& f, const Eigen::MatrixXd& p) {
    if (f.rows() != p.rows() || f.cols() != p.cols())
        throw std::invalid_argument("content_loss_gradient: shape mismatch");
    return f - p;
}

/// dE_l/dF = (1/(N^2 M^2)) (G - A) F, using the symmetry of G - A.
inline Eigen::MatrixXd style_layer_loss_gradient(const Eigen::MatrixXd& f,
                                                 const Eigen::MatrixXd& a) {
    const double n_l = static_cast<double>(f.rows());
    const double m_l = static_cast<double>(f.cols());
    const Eigen::MatrixXd g = gram(f);
    return (g - a) * f / (n_l * n_l * m_l * m_l);
}

/// Adjoint of the forward differences. kappa = 2 only; the kappa = 1
/// subgradient at 0 is taken as 0.
inline ImagePlanar total_variation_gradient(const ImagePlanar& img, double gamma, int kappa) {
    if (kappa != 1 && kappa != 2)
        throw std::invalid_argument("total_variation_gradient: kappa must be 1 or 2");
    ImagePlanar grad(img.width(), img.height(), img.space());
    const int w = img.width(), h = img.height();
    auto dterm = [kappa](double d) {
        if (kappa == 2) return 2.0 * d;
        return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    };
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double g = 0.0;
                const double v = img.at(c, x, y);
                if (y + 1 < h) g -= dterm(img.at(c, x, y + 1) - v);
                if (x + 1 < w) g -= dterm(img.at(c, x + 1, y) - v);
                if (y > 0) g += dterm(v - img.at(c, x, y - 1));
                if (x > 0) g += dterm(v - img.at(c, x - 1, y));
                grad.at(c, x, y) = gamma * g;
            }
    return grad;
}

}  // namespace colorxfer::nst
