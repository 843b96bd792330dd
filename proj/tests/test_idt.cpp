#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "colorxfer/idt.hpp"
#include "test_support.hpp"

using namespace colorxfer;
namespace ts = testsupport;

namespace {

std::vector<double> uniform_samples(std::size_t n, double lo, double hi, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(lo, hi);
    std::vector<double> out(n);
    for (double& v : out) v = uni(rng);
    return out;
}

std::vector<double> gaussian_samples(std::size_t n, double mu, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(mu, sigma);
    std::vector<double> out(n);
    for (double& v : out) v = gauss(rng);
    return out;
}

}  // namespace

TEST_CASE("lookup table: interpolation and clamping") {
    const LookupTable1D lut({0.0, 1.0, 2.0}, {0.0, 10.0, 20.0});
    CHECK(lut(0.5) == doctest::Approx(5.0));
    CHECK(lut(1.25) == doctest::Approx(12.5));
    CHECK(lut(-3.0) == doctest::Approx(0.0));   // clamp below
    CHECK(lut(9.0) == doctest::Approx(20.0));   // clamp above
    CHECK_THROWS_AS(LookupTable1D({0.0}, {0.0}), std::invalid_argument);
}

TEST_CASE("lookup table enforces monotone values") {
    const LookupTable1D lut({0.0, 1.0, 2.0}, {0.0, 5.0, 4.0});
    CHECK(lut.values()[2] == doctest::Approx(5.0));
}

TEST_CASE("pdf transfer: target equals source gives near-identity") {
    const std::vector<double> s = uniform_samples(5000, 0.2, 0.8, 1);
    const LookupTable1D lut = pdf_transfer_1d(s, s);
    const double step = (lut.knots().back() - lut.knots().front()) / (kPdfTransferKnots - 1);
    for (double u : {0.25, 0.4, 0.55, 0.7})
        CHECK(std::abs(lut(u) - u) < 2.0 * step);
}

TEST_CASE("pdf transfer: shifted uniform recovers the shift") {
    const std::vector<double> s = uniform_samples(20000, 0.0, 1.0, 2);
    const std::vector<double> t = uniform_samples(20000, 2.0, 3.0, 3);
    const LookupTable1D lut = pdf_transfer_1d(s, t);
    for (double u = 0.1; u < 0.95; u += 0.1)
        CHECK(lut(u) == doctest::Approx(u + 2.0).epsilon(0.02));
}

TEST_CASE("pdf transfer: gaussian-to-gaussian matches the affine quantile map") {
    // N(0,1) -> N(5,2): exact map is t(u) = 2u + 5.
    const std::vector<double> s = gaussian_samples(100000, 0.0, 1.0, 4);
    const std::vector<double> t = gaussian_samples(100000, 5.0, 2.0, 5);
    const LookupTable1D lut = pdf_transfer_1d(s, t);
    for (double u = -2.0; u <= 2.0; u += 0.25)
        CHECK(std::abs(lut(u) - (2.0 * u + 5.0)) < 0.1);
}

TEST_CASE("pdf transfer output is monotone on random inputs") {
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<std::uint64_t> seed(0, 1u << 20);
    for (int trial = 0; trial < 10; ++trial) {
        const auto s = gaussian_samples(500, 0.4, 0.2, seed(rng));
        const auto t = uniform_samples(700, -1.0, 2.0, seed(rng));
        const LookupTable1D lut = pdf_transfer_1d(s, t);
        double prev = lut(lut.knots().front());
        for (double u = lut.knots().front(); u <= lut.knots().back();
             u += (lut.knots().back() - lut.knots().front()) / 997.0) {
            const double v = lut(u);
            CHECK(v >= prev - 1e-12);
            prev = v;
        }
    }
}

TEST_CASE("pdf transfer: one axis transfer matches the target marginal") {
    const std::vector<double> s = gaussian_samples(20000, 0.3, 0.05, 7);
    std::vector<double> t = gaussian_samples(20000, 0.6, 0.1, 8);
    for (double& v : t) v = clamp01(v);
    const LookupTable1D lut = pdf_transfer_1d(s, t);
    std::vector<double> mapped(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) mapped[i] = lut(s[i]);
    CHECK(detail::axis_kde_kl(mapped, t) < 0.02);
}

TEST_CASE("pdf transfer rejects empty input") {
    CHECK_THROWS_AS(pdf_transfer_1d({}, {0.5}), std::invalid_argument);
    CHECK_THROWS_AS(pdf_transfer_1d({0.5}, {}), std::invalid_argument);
}

TEST_CASE("random rotation: deterministic, orthogonal, distinct per index") {
    const Eigen::Matrix3d a = random_rotation(42, 0);
    const Eigen::Matrix3d b = random_rotation(42, 0);
    CHECK((a - b).norm() == 0.0);

    for (std::uint64_t i = 0; i < 10; ++i) {
        const Eigen::Matrix3d q = random_rotation(42, i);
        CHECK((q * q.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-12);
        CHECK((q.transpose() * q - Eigen::Matrix3d::Identity()).norm() < 1e-12);
    }

    CHECK((random_rotation(42, 0) - random_rotation(42, 1)).norm() > 1e-3);
    CHECK((random_rotation(42, 0) - random_rotation(43, 0)).norm() > 1e-3);
}

TEST_CASE("idt: target equal to source stays put") {
    const ImagePlanar img = ts::random_rgb_image(40, 40, 11);
    const auto [out, trace] = idt(img, img, 5, 42);
    // Each knot grid spans the shared range; the mapped value can move by at
    // most a couple of grid steps when the distributions already coincide.
    double max_dev = 0.0;
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < img.pixel_count(); ++i)
            max_dev = std::max(max_dev, std::abs(out.plane(c)[i] - img.plane(c)[i]));
    CHECK(max_dev < 2.0 * (1.0 / (kPdfTransferKnots - 1)) * 5 * 3);
    CHECK(trace.kl.size() == 6);
    for (double kl : trace.kl) CHECK(kl < 0.01);
}

TEST_CASE("idt: kl trace decreases toward a distinct target palette") {
    const ImagePlanar source = ts::gaussian_noise_image(60, 60, 21, {0.3, 0.4, 0.5}, {0.06, 0.05, 0.08});
    const ImagePlanar target = ts::gaussian_noise_image(60, 60, 22, {0.7, 0.5, 0.3}, {0.05, 0.09, 0.04});
    const auto [out, trace] = idt(source, target, 15, 7);
    CHECK(trace.kl.size() == 16);
    CHECK(trace.kl.back() < trace.kl.front() / 5.0);
    CHECK(trace.kl.back() < 0.05);
    CHECK(out.all_finite());
}

TEST_CASE("idt is bit-identical for a fixed seed") {
    const ImagePlanar source = ts::random_rgb_image(32, 32, 31);
    const ImagePlanar target = ts::gaussian_noise_image(32, 32, 32, {0.6, 0.3, 0.4}, {0.1, 0.05, 0.07});
    const auto [a, ta] = idt(source, target, 8, 123);
    const auto [b, tb] = idt(source, target, 8, 123);
    for (int c = 0; c < 3; ++c) CHECK(a.plane(c) == b.plane(c));
    CHECK(ta.kl == tb.kl);

    const auto [d, td] = idt(source, target, 8, 124);
    bool differs = false;
    for (int c = 0; c < 3; ++c)
        if (a.plane(c) != d.plane(c)) differs = true;
    CHECK(differs);
}

TEST_CASE("idt: collinear 1-D embedded clouds still converge") {
    // All samples on the gray axis; rotations project it to a line each time.
    const std::size_t n = 4000;
    std::vector<double> src[3], tgt[3];
    const auto s1 = gaussian_samples(n, 0.3, 0.05, 41);
    const auto t1 = gaussian_samples(n, 0.7, 0.08, 43);
    for (int c = 0; c < 3; ++c) {
        src[c] = s1;
        tgt[c] = t1;
    }
    const IdtTrace trace = idt_samples(src, tgt, 10, 9);
    CHECK(trace.kl.back() < 0.05);
    for (int c = 0; c < 3; ++c)
        for (double v : src[c]) CHECK(std::isfinite(v));
}

TEST_CASE("idt validates iteration count") {
    std::vector<double> src[3] = {{0.1}, {0.2}, {0.3}};
    const std::vector<double> tgt[3] = {{0.4}, {0.5}, {0.6}};
    CHECK_THROWS_AS(idt_samples(src, tgt, 0, 1), std::invalid_argument);
}

TEST_CASE("trace csv export") {
    IdtTrace trace;
    trace.kl = {0.5, 0.2, 0.1};
    trace.iterations = 2;
    const std::string path = ts::tmp_path("trace.csv");
    write_trace_csv(path, trace);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "iteration,kl");
    std::getline(in, line);
    CHECK(line.rfind("0,0.5", 0) == 0);
    int rows = 1;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 3);
}
