// Command-line front door for the color-transfer toolkit.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "colorxfer/histmatch.hpp"
#include "colorxfer/idt.hpp"
#include "colorxfer/image_io.hpp"
#include "colorxfer/linear.hpp"
#include "colorxfer/nst.hpp"
#include "colorxfer/regrain.hpp"
#include "colorxfer/report.hpp"
#include "colorxfer/sharpen.hpp"
#include "colorxfer/stats.hpp"

namespace cx = colorxfer;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

bool verbose_logging() {
    const char* v = std::getenv("COLORXFER_LOG");
    return v != nullptr && std::string(v) != "0" && std::string(v) != "quiet";
}

void echo_config(const std::string& line) {
    std::cerr << "config: " << line << '\n';
}

int require_readable(const std::vector<std::string>& paths) {
    for (const auto& p : paths) {
        if (!std::filesystem::exists(p)) {
            std::cerr << "error: no such file: " << p << '\n';
            return kExitUsage;
        }
    }
    return kExitOk;
}

struct TransferArgs {
    std::string source, target, output = "out.png";
    std::string method = "reinhard";
    std::uint64_t seed = 42;
    int iterations = 20;
    bool with_regrain = false;
    cx::SolverConfig solver;
    double sharpen_radius = 0.0;
    double sharpen_amount = 0.8;
    std::string trace_csv;
};

int run_transfer(const TransferArgs& a) {
    if (!cx::is_known_method(a.method)) {
        std::cerr << "error: unknown method '" << a.method << "'; known methods:";
        for (const auto& m : cx::method_registry()) std::cerr << ' ' << m;
        std::cerr << '\n';
        return kExitUsage;
    }
    if (int rc = require_readable({a.source, a.target}); rc != kExitOk) return rc;
    echo_config("subcommand=transfer source=" + a.source + " target=" + a.target +
                " method=" + a.method + " seed=" + std::to_string(a.seed) +
                " iterations=" + std::to_string(a.iterations) +
                " regrain=" + (a.with_regrain ? "1" : "0") + " output=" + a.output);
    const cx::ImagePlanar source = cx::load_image(a.source);
    const cx::ImagePlanar target = cx::load_image(a.target);

    cx::ImagePlanar out(1, 1, cx::ColorSpace::RGB);
    if (a.method == "idt") {
        auto [mapped, trace] = cx::idt(source, target, a.iterations, a.seed);
        if (!a.trace_csv.empty()) cx::write_trace_csv(a.trace_csv, trace);
        out = std::move(mapped);
        if (a.with_regrain) {
            cx::RegrainResult r = cx::regrain(source, out, a.solver);
            if (!r.converged)
                std::cerr << "warning: regrain did not converge (residual " << r.residual
                          << ")\n";
            out = std::move(r.image);
        }
    } else {
        cx::SuiteConfig cfg;
        cfg.seed = a.seed;
        cfg.idt_iterations = a.iterations;
        cfg.solver = a.solver;
        out = cx::run_method(a.method, source, target, cfg);
        if (a.with_regrain && a.method != "idt_regrain") {
            cx::RegrainResult r = cx::regrain(source, out, a.solver);
            out = std::move(r.image);
        }
    }
    if (a.sharpen_radius > 0.0) {
        for (int c = 0; c < 3; ++c)
            for (double& v : out.plane(c)) v = cx::clamp01(v);
        out = cx::sharpen(out, a.sharpen_radius, a.sharpen_amount);
    }
    cx::save_image(out, a.output);
    if (verbose_logging()) std::cerr << "wrote " << a.output << '\n';
    return kExitOk;
}

struct EvaluateArgs {
    std::string source, target, reference;
    std::vector<std::string> methods;
    std::string report = "report.json";
    std::string output_dir = ".";
    std::uint64_t seed = 42;
    int iterations = 20;
    bool strict = false;
    bool sharpen = false;
    double sharpen_radius = 1.0;
    double sharpen_amount = 0.8;
    bool no_timing = false;
    bool csv = false;
};

int run_evaluate(const EvaluateArgs& a) {
    std::vector<std::string> methods = a.methods.empty() ? cx::method_registry() : a.methods;
    for (const auto& m : methods)
        if (!cx::is_known_method(m)) {
            std::cerr << "error: unknown method '" << m << "'\n";
            return kExitUsage;
        }
    if (int rc = require_readable({a.source, a.target, a.reference}); rc != kExitOk) return rc;
    std::string method_list;
    for (const auto& m : methods) method_list += (method_list.empty() ? "" : ",") + m;
    echo_config("subcommand=evaluate source=" + a.source + " target=" + a.target +
                " reference=" + a.reference + " methods=" + method_list +
                " seed=" + std::to_string(a.seed) +
                " iterations=" + std::to_string(a.iterations) + " report=" + a.report);

    std::filesystem::create_directories(a.output_dir);
    cx::SuiteConfig cfg;
    cfg.seed = a.seed;
    cfg.idt_iterations = a.iterations;
    cfg.sharpen_before_eval = a.sharpen;
    cfg.sharpen_radius = a.sharpen_radius;
    cfg.sharpen_amount = a.sharpen_amount;
    cfg.record_wall_time = !a.no_timing;
    cfg.output_dir = a.output_dir;
    cfg.export_csv = a.csv;

    const auto reports = cx::run_suite(cx::load_image(a.source), cx::load_image(a.target),
                                       cx::load_image(a.reference), methods, cfg);
    cx::export_report(reports, a.source, a.target, a.reference, a.seed, a.report);
    bool any_failed = false;
    for (const auto& r : reports)
        if (r.failed) {
            any_failed = true;
            std::cerr << "method " << r.id << " failed: "
                      << (r.flags.empty() ? "unknown" : r.flags.back()) << '\n';
        }
    return (any_failed && a.strict) ? kExitRuntime : kExitOk;
}

struct HistogramArgs {
    std::string image;
    std::string output = "histogram.csv";
    bool kde = false;
};

int run_histogram(const HistogramArgs& a) {
    if (int rc = require_readable({a.image}); rc != kExitOk) return rc;
    echo_config("subcommand=histogram image=" + a.image + " kde=" + (a.kde ? "1" : "0") +
                " output=" + a.output);
    const cx::ImagePlanar img = cx::load_image(a.image);
    if (a.kde) {
        cx::write_density_csv(a.output, cx::density_of_plane(img.plane(0)),
                              cx::density_of_plane(img.plane(1)),
                              cx::density_of_plane(img.plane(2)));
    } else {
        cx::write_histogram_csv(a.output, cx::histogram(img.plane(0)),
                                cx::histogram(img.plane(1)), cx::histogram(img.plane(2)));
    }
    return kExitOk;
}

int run_equalize(const std::string& image, const std::string& output) {
    if (int rc = require_readable({image}); rc != kExitOk) return rc;
    echo_config("subcommand=equalize image=" + image + " output=" + output);
    cx::save_image(cx::equalize(cx::load_image(image)), output);
    return kExitOk;
}

struct RegrainArgs {
    std::string original, mapped, output = "out.png";
    cx::SolverConfig solver;
};

int run_regrain(const RegrainArgs& a) {
    if (int rc = require_readable({a.original, a.mapped}); rc != kExitOk) return rc;
    echo_config("subcommand=regrain original=" + a.original + " mapped=" + a.mapped +
                " output=" + a.output);
    cx::RegrainResult r =
        cx::regrain(cx::load_image(a.original), cx::load_image(a.mapped), a.solver);
    if (!r.converged)
        std::cerr << "warning: not converged after " << r.sweeps << " sweeps (residual "
                  << r.residual << ")\n";
    cx::save_image(r.image, a.output);
    return kExitOk;
}

struct NstLossArgs {
    std::string generated;  // F
    std::string content;    // P
    std::vector<std::string> style_generated;
    std::vector<std::string> style_reference;
    std::vector<double> layer_weights;
    std::string image;
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 0.0;
    int kappa = 2;
};

int run_nstloss(const NstLossArgs& a) {
    if (a.style_generated.size() != a.style_reference.size()) {
        std::cerr << "error: --style-gen and --style-ref must be given in matching pairs\n";
        return kExitUsage;
    }
    nlohmann::ordered_json j;
    double content = 0.0, style = 0.0, tv = 0.0;
    try {
        if (!a.generated.empty() && !a.content.empty()) {
            const auto f = cx::nst::read_feature_map(a.generated);
            const auto p = cx::nst::read_feature_map(a.content);
            content = cx::nst::content_loss(f.data, p.data);
        }
        std::vector<cx::nst::StyleLayer> layers;
        for (std::size_t i = 0; i < a.style_generated.size(); ++i) {
            const auto f = cx::nst::read_feature_map(a.style_generated[i]);
            const auto s = cx::nst::read_feature_map(a.style_reference[i]);
            if (f.filters() != s.filters())
                throw std::invalid_argument("style layer filter counts differ");
            layers.push_back({cx::nst::gram(f.data), cx::nst::gram(s.data), f.filters(),
                              f.positions()});
        }
        std::vector<double> w = a.layer_weights;
        if (w.empty()) w.assign(layers.size(), 0.2);  // Gatys' per-layer style weight
        if (!layers.empty()) style = cx::nst::style_loss(layers, w);
        if (!a.image.empty()) {
            if (int rc = require_readable({a.image}); rc != kExitOk) return rc;
            tv = cx::nst::total_variation_loss(cx::load_image(a.image), a.gamma, a.kappa);
        }
    } catch (const cx::nst::FeatureParseError& e) {
        std::cerr << "error: malformed feature file: " << e.what() << '\n';
        return kExitUsage;
    }
    cx::nst::LossWeights lw;
    lw.alpha = a.alpha;
    lw.beta = a.beta;
    lw.gamma = a.gamma;
    lw.kappa = a.kappa;
    j["content"] = content;
    j["style"] = style;
    j["total_variation"] = tv;
    j["total"] = cx::nst::total_loss(content, style, tv, lw);
    std::cout << j.dump(2) << std::endl;
    return kExitOk;
}

void add_solver_flags(CLI::App* cmd, cx::SolverConfig& solver) {
    cmd->add_option("--sor-omega", solver.omega, "SOR relaxation factor in (0,2)")
        ->check(CLI::Range(1e-9, 2.0 - 1e-9));
    cmd->add_option("--solver-tolerance", solver.tolerance, "relative residual target")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--max-sweeps", solver.max_sweeps, "sweep budget")->check(CLI::PositiveNumber);
    cmd->add_option("--levels", solver.levels, "multigrid depth (1 = plain SOR)")
        ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"colorxfer: global color transfer, evaluation, and loss tools"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key = value config file; command line overrides");
    // Let `--config` (and any future app-level flag) appear after the
    // subcommand name as well as before it.
    app.fallthrough();

    TransferArgs ta;
    auto* transfer = app.add_subcommand("transfer", "recolor SOURCE from TARGET's palette");
    transfer->add_option("source", ta.source, "image to recolor")->required();
    transfer->add_option("target", ta.target, "palette image")->required();
    transfer->add_option("-o,--output", ta.output, "output PNG");
    transfer->add_option("--method", ta.method, "one of the registered methods");
    transfer->add_option("--seed", ta.seed, "rotation seed for idt");
    transfer->add_option("--iterations", ta.iterations, "idt iterations")
        ->check(CLI::PositiveNumber);
    transfer->add_flag("--regrain", ta.with_regrain, "apply gradient-preserving post-process");
    transfer->add_option("--sharpen-radius", ta.sharpen_radius, "unsharp mask radius (0 = off)");
    transfer->add_option("--sharpen-amount", ta.sharpen_amount, "unsharp mask amount");
    transfer->add_option("--trace", ta.trace_csv, "write idt KL trace CSV here");
    add_solver_flags(transfer, ta.solver);

    EvaluateArgs ea;
    auto* evaluate = app.add_subcommand("evaluate", "run the method suite and report KL");
    evaluate->add_option("source", ea.source, "image to recolor")->required();
    evaluate->add_option("target", ea.target, "palette image")->required();
    evaluate->add_option("reference", ea.reference, "KL reference image")->required();
    evaluate->add_option("--methods", ea.methods, "subset of methods (default: all)")
        ->delimiter(',');
    evaluate->add_option("--report", ea.report, "JSON report path");
    evaluate->add_option("-o,--output-dir", ea.output_dir, "directory for output PNGs");
    evaluate->add_option("--seed", ea.seed, "rotation seed for idt");
    evaluate->add_option("--iterations", ea.iterations, "idt iterations")
        ->check(CLI::PositiveNumber);
    evaluate->add_flag("--strict", ea.strict, "exit 3 if any method fails");
    evaluate->add_flag("--sharpen", ea.sharpen, "sharpen outputs before evaluation");
    evaluate->add_option("--sharpen-radius", ea.sharpen_radius, "");
    evaluate->add_option("--sharpen-amount", ea.sharpen_amount, "");
    evaluate->add_flag("--no-timing", ea.no_timing, "zero wall times for reproducible reports");
    evaluate->add_flag("--csv", ea.csv, "also export per-method histogram/density CSVs");

    HistogramArgs ha;
    auto* histogram = app.add_subcommand("histogram", "export per-channel histogram or KDE CSV");
    histogram->add_option("image", ha.image)->required();
    histogram->add_option("-o,--output", ha.output, "CSV path");
    histogram->add_flag("--kde", ha.kde, "export the kernel density estimate instead");

    std::string eq_image, eq_output = "out.png";
    auto* equalize = app.add_subcommand("equalize", "per-channel histogram equalization");
    equalize->add_option("image", eq_image)->required();
    equalize->add_option("-o,--output", eq_output, "output PNG");

    RegrainArgs ra;
    auto* regrain = app.add_subcommand("regrain", "restore ORIGINAL's gradient field in MAPPED");
    regrain->add_option("original", ra.original)->required();
    regrain->add_option("mapped", ra.mapped)->required();
    regrain->add_option("-o,--output", ra.output, "output PNG");
    add_solver_flags(regrain, ra.solver);

    NstLossArgs na;
    auto* nstloss = app.add_subcommand("nstloss", "style-transfer loss algebra on feature files");
    nstloss->add_option("--generated", na.generated, "generated feature map (layer,N,M CSV)");
    nstloss->add_option("--content", na.content, "content feature map");
    nstloss->add_option("--style-gen", na.style_generated, "generated style feature maps");
    nstloss->add_option("--style-ref", na.style_reference, "reference style feature maps");
    nstloss->add_option("--layer-weights", na.layer_weights, "per-layer style weights");
    nstloss->add_option("--image", na.image, "image for total-variation loss");
    nstloss->add_option("--alpha", na.alpha, "content weight");
    nstloss->add_option("--beta", na.beta, "style weight");
    nstloss->add_option("--gamma", na.gamma, "total-variation weight");
    nstloss->add_option("--kappa", na.kappa, "total-variation exponent")->check(CLI::Range(1, 2));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (app.got_subcommand(transfer)) return run_transfer(ta);
        if (app.got_subcommand(evaluate)) return run_evaluate(ea);
        if (app.got_subcommand(histogram)) return run_histogram(ha);
        if (app.got_subcommand(equalize)) return run_equalize(eq_image, eq_output);
        if (app.got_subcommand(regrain)) return run_regrain(ra);
        if (app.got_subcommand(nstloss)) return run_nstloss(na);
    } catch (const cx::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const cx::FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
