#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "colorxfer/histmatch.hpp"
#include "colorxfer/idt.hpp"
#include "colorxfer/image.hpp"
#include "colorxfer/image_io.hpp"
#include "colorxfer/linear.hpp"
#include "colorxfer/regrain.hpp"
#include "colorxfer/sharpen.hpp"
#include "colorxfer/stats.hpp"

namespace colorxfer {

/// The eight compared transfer methods, in report order.
inline const std::vector<std::string>& method_registry() {
    static const std::vector<std::string> ids = {"reinhard", "idt",       "idt_regrain",
                                                 "mkl",      "luminance", "histmatch",
                                                 "cholesky", "pca"};
    return ids;
}

inline bool is_known_method(const std::string& id) {
    for (const auto& m : method_registry())
        if (m == id) return true;
    return false;
}

struct TransferReport {
    std::string id;
    std::array<double, 3> kl{0.0, 0.0, 0.0};
    std::vector<std::string> flags;
    double wall_time_s = 0.0;
    std::string output_path;
    bool failed = false;
};

struct SuiteConfig {
    std::uint64_t seed = 42;
    int idt_iterations = 20;
    SolverConfig solver;
    bool sharpen_before_eval = false;
    double sharpen_radius = 1.0;
    double sharpen_amount = 0.8;
    bool record_wall_time = true;  // off for byte-reproducible reports
    std::string output_dir = ".";
    bool export_csv = false;
};

/// Runs one registered method: recolors `source` toward `target`'s palette.
inline ImagePlanar run_method(const std::string& id, const ImagePlanar& source,
                              const ImagePlanar& target, const SuiteConfig& cfg,
                              std::vector<std::string>* flags = nullptr) {
    if (id == "reinhard") return reinhard_transfer(source, target);
    if (id == "idt") return idt(source, target, cfg.idt_iterations, cfg.seed).first;
    if (id == "idt_regrain") {
        ImagePlanar mapped = idt(source, target, cfg.idt_iterations, cfg.seed).first;
        RegrainResult r = regrain(source, mapped, cfg.solver);
        if (!r.converged && flags) flags->push_back("regrain_not_converged");
        return std::move(r.image);
    }
    if (id == "luminance") {
        LuminanceTransferResult r = luminance_transfer(source, target, LuminanceSpace::Lab);
        if (r.flat_luminance && flags) flags->push_back("flat_luminance");
        return std::move(r.image);
    }
    if (id == "histmatch") return match_histogram(source, target);
    AffineMethod method;
    if (id == "mkl")
        method = AffineMethod::MKL;
    else if (id == "cholesky")
        method = AffineMethod::Cholesky;
    else if (id == "pca")
        method = AffineMethod::Sqrt;
    else
        throw std::invalid_argument("unknown method: " + id);
    return apply_affine(source, matched_affine(channel_stats(source), channel_stats(target), method));
}

namespace detail {

// Quantize like save_image so the reported KL matches a recomputation from
// the saved PNG.
inline ImagePlanar quantized(const ImagePlanar& img) {
    ImagePlanar out(img.width(), img.height(), ColorSpace::RGB);
    for (int c = 0; c < 3; ++c) {
        const auto& in = img.plane(c);
        auto& o = out.plane(c);
        for (std::size_t i = 0; i < in.size(); ++i)
            o[i] = std::lround(clamp01(in[i]) * 255.0) / 255.0;
    }
    return out;
}

}  // namespace detail

/// Runs each requested method on (source -> target palette), evaluates
/// per-channel KDE KL against the reference image, and saves output PNGs
/// under cfg.output_dir. Individual method failures are recorded in the
/// report; the suite continues.
inline std::vector<TransferReport> run_suite(const ImagePlanar& source, const ImagePlanar& target,
                                             const ImagePlanar& reference,
                                             const std::vector<std::string>& methods,
                                             const SuiteConfig& cfg) {
    if (methods.empty()) throw std::invalid_argument("run_suite: no methods requested");
    static const char* kChannel = "rgb";

    std::array<DensityEstimate, 3> ref_density;
    for (int c = 0; c < 3; ++c) ref_density[static_cast<std::size_t>(c)] =
        density_of_plane(reference.plane(c));

    std::vector<TransferReport> reports;
    for (const auto& id : methods) {
        TransferReport rep;
        rep.id = id;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            ImagePlanar out = run_method(id, source, target, cfg, &rep.flags);
            if (cfg.sharpen_before_eval) {
                ImagePlanar clamped = out;
                for (int c = 0; c < 3; ++c)
                    for (double& v : clamped.plane(c)) v = clamp01(v);
                out = sharpen(clamped, cfg.sharpen_radius, cfg.sharpen_amount);
            }
            rep.output_path = cfg.output_dir + "/" + id + ".png";
            save_image(out, rep.output_path);
            const ImagePlanar q = detail::quantized(out);
            std::array<DensityEstimate, 3> out_density;
            for (int c = 0; c < 3; ++c) {
                auto& d = out_density[static_cast<std::size_t>(c)];
                d = density_of_plane(q.plane(c));
                rep.kl[static_cast<std::size_t>(c)] =
                    kl_divergence(ref_density[static_cast<std::size_t>(c)], d);
                if (d.floored_fraction > 0.01 ||
                    ref_density[static_cast<std::size_t>(c)].floored_fraction > 0.01)
                    rep.flags.push_back(std::string("kl_floor_active_") + kChannel[c]);
            }
            if (cfg.export_csv) {
                write_histogram_csv(cfg.output_dir + "/" + id + "_hist.csv",
                                    histogram(q.plane(0)), histogram(q.plane(1)),
                                    histogram(q.plane(2)));
                write_density_csv(cfg.output_dir + "/" + id + "_density.csv", out_density[0],
                                  out_density[1], out_density[2]);
            }
        } catch (const std::exception& e) {
            rep.failed = true;
            rep.flags.push_back(std::string("error: ") + e.what());
        }
        if (cfg.record_wall_time) {
            const auto t1 = std::chrono::steady_clock::now();
            rep.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
        }
        reports.push_back(std::move(rep));
    }
    return reports;
}

inline void export_report(const std::vector<TransferReport>& reports, const std::string& source,
                          const std::string& target, const std::string& reference,
                          std::uint64_t seed, const std::string& path) {
    nlohmann::ordered_json j;
    j["source"] = source;
    j["target"] = target;
    j["reference"] = reference;
    j["seed"] = seed;
    j["methods"] = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json m;
        m["id"] = r.id;
        m["kl"] = {{"r", r.kl[0]}, {"g", r.kl[1]}, {"b", r.kl[2]}};
        m["flags"] = r.flags;
        m["wall_time_s"] = r.wall_time_s;
        m["output"] = r.output_path;
        j["methods"].push_back(std::move(m));
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
}

}  // namespace colorxfer
