#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "colorxfer/image_io.hpp"
#include "colorxfer/nst.hpp"
#include "test_support.hpp"

namespace ts = testsupport;
namespace fs = std::filesystem;

namespace {

const std::string kCli = COLORXFER_CLI_PATH;

int run(const std::string& args, const std::string& stdout_file = "/dev/null") {
    const std::string cmd = kCli + " " + args + " >" + stdout_file + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string fixture_png(const std::string& name, std::uint64_t seed) {
    const std::string path = ts::tmp_path(name);
    if (!fs::exists(path)) colorxfer::save_image(ts::random_rgb_image(32, 32, seed), path);
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("transfer: default method writes the output file") {
    const std::string src = fixture_png("cli_src.png", 1);
    const std::string tgt = fixture_png("cli_tgt.png", 2);
    const std::string out = ts::tmp_path("cli_out.png");
    CHECK(run("transfer " + src + " " + tgt + " -o " + out) == 0);
    CHECK(fs::exists(out));
    CHECK(colorxfer::load_image(out).all_finite());
}

TEST_CASE("transfer: every registered method succeeds") {
    const std::string src = fixture_png("cli_src.png", 1);
    const std::string tgt = fixture_png("cli_tgt.png", 2);
    for (const char* m : {"reinhard", "idt", "idt_regrain", "mkl", "luminance", "histmatch",
                          "cholesky", "pca"}) {
        const std::string out = ts::tmp_path(std::string("cli_m_") + m + ".png");
        CHECK(run("transfer " + src + " " + tgt + " --method " + m +
                  " --iterations 3 -o " + out) == 0);
        CHECK(fs::exists(out));
    }
}

TEST_CASE("transfer: usage errors exit 2") {
    const std::string src = fixture_png("cli_src.png", 1);
    const std::string tgt = fixture_png("cli_tgt.png", 2);
    CHECK(run("transfer " + src + " " + tgt + " --method sobel") == 2);
    CHECK(run("transfer " + ts::tmp_path("nope.png") + " " + tgt) == 2);
    CHECK(run("transfer " + src) == 2);        // missing positional
    CHECK(run("recolorize " + src + " " + tgt) == 2);  // unknown subcommand
}

TEST_CASE("transfer: idt with a fixed seed is byte-identical") {
    const std::string src = fixture_png("cli_src.png", 1);
    const std::string tgt = fixture_png("cli_tgt.png", 2);
    const std::string out1 = ts::tmp_path("cli_idt1.png");
    const std::string out2 = ts::tmp_path("cli_idt2.png");
    const std::string out3 = ts::tmp_path("cli_idt3.png");
    const std::string base = "transfer " + src + " " + tgt + " --method idt --iterations 5 ";
    CHECK(run(base + "--seed 7 -o " + out1) == 0);
    CHECK(run(base + "--seed 7 -o " + out2) == 0);
    CHECK(run(base + "--seed 8 -o " + out3) == 0);
    CHECK(ts::read_bytes(out1) == ts::read_bytes(out2));
    CHECK(ts::read_bytes(out1) != ts::read_bytes(out3));
}

TEST_CASE("transfer: idt trace CSV is written") {
    const std::string src = fixture_png("cli_src.png", 1);
    const std::string tgt = fixture_png("cli_tgt.png", 2);
    const std::string trace = ts::tmp_path("cli_trace.csv");
    CHECK(run("transfer " + src + " " + tgt + " --method idt --iterations 4 --trace " + trace +
              " -o " + ts::tmp_path("cli_traced.png")) == 0);
    const std::string body = slurp(trace);
    CHECK(body.rfind("iteration,kl", 0) == 0);
    // header + initial state + 4 iterations
    CHECK(std::count(body.begin(), body.end(), '\n') == 6);
}

TEST_CASE("evaluate: default suite reports all eight methods") {
    const std::string src = fixture_png("cli_src.png", 1);
    const std::string tgt = fixture_png("cli_tgt.png", 2);
    const std::string report = ts::tmp_path("cli_report.json");
    const std::string dir = ts::tmp_path("cli_eval");
    CHECK(run("evaluate " + src + " " + tgt + " " + tgt + " --iterations 3 --report " + report +
              " -o " + dir) == 0);
    const nlohmann::json j = nlohmann::json::parse(slurp(report));
    CHECK(j["methods"].size() == 8);
    CHECK(j["seed"] == 42);
    for (const auto& m : j["methods"]) {
        CHECK(m.contains("kl"));
        CHECK(m["kl"].contains("r"));
        CHECK(fs::exists(m["output"].get<std::string>()));
    }
}

TEST_CASE("evaluate: method subset and unknown method") {
    const std::string src = fixture_png("cli_src.png", 1);
    const std::string tgt = fixture_png("cli_tgt.png", 2);
    const std::string report = ts::tmp_path("cli_subset.json");
    CHECK(run("evaluate " + src + " " + tgt + " " + tgt + " --methods histmatch --report " +
              report + " -o " + ts::tmp_path("cli_eval_sub")) == 0);
    const nlohmann::json j = nlohmann::json::parse(slurp(report));
    CHECK(j["methods"].size() == 1);
    CHECK(j["methods"][0]["id"] == "histmatch");

    CHECK(run("evaluate " + src + " " + tgt + " " + tgt + " --methods wavelet") == 2);
}

TEST_CASE("evaluate: --no-timing reports are byte-identical across runs") {
    const std::string src = fixture_png("cli_src.png", 1);
    const std::string tgt = fixture_png("cli_tgt.png", 2);
    const std::string r1 = ts::tmp_path("cli_rep1.json");
    const std::string r2 = ts::tmp_path("cli_rep2.json");
    const std::string base = "evaluate " + src + " " + tgt + " " + tgt +
                             " --methods idt,histmatch --iterations 3 --seed 11 --no-timing ";
    CHECK(run(base + "--report " + r1 + " -o " + ts::tmp_path("cli_rt1")) == 0);
    CHECK(run(base + "--report " + r2 + " -o " + ts::tmp_path("cli_rt2")) == 0);
    std::string a = slurp(r1), b = slurp(r2);
    // The reports reference different output dirs; compare with paths erased.
    const auto strip = [](std::string s, const std::string& what) {
        for (std::size_t p; (p = s.find(what)) != std::string::npos;) s.erase(p, what.size());
        return s;
    };
    a = strip(a, "cli_rt1");
    b = strip(b, "cli_rt2");
    CHECK(a == b);
}

TEST_CASE("histogram subcommand writes histogram and kde CSVs") {
    const std::string img = fixture_png("cli_src.png", 1);
    const std::string hist = ts::tmp_path("cli_hist.csv");
    const std::string dens = ts::tmp_path("cli_dens.csv");
    CHECK(run("histogram " + img + " -o " + hist) == 0);
    CHECK(slurp(hist).rfind("bin,r,g,b", 0) == 0);
    CHECK(run("histogram " + img + " --kde -o " + dens) == 0);
    CHECK(slurp(dens).rfind("x,r,g,b", 0) == 0);
}

TEST_CASE("equalize is idempotent within one byte level") {
    const std::string img = fixture_png("cli_eq_in.png", 21);
    const std::string once = ts::tmp_path("cli_eq1.png");
    const std::string twice = ts::tmp_path("cli_eq2.png");
    CHECK(run("equalize " + img + " -o " + once) == 0);
    CHECK(run("equalize " + once + " -o " + twice) == 0);
    const colorxfer::ImagePlanar a = colorxfer::load_image(once);
    const colorxfer::ImagePlanar b = colorxfer::load_image(twice);
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < a.pixel_count(); ++i)
            CHECK(std::abs(a.plane(c)[i] - b.plane(c)[i]) * 255.0 <= 1.0 + 1e-9);
}

TEST_CASE("regrain subcommand runs end to end") {
    const std::string orig = fixture_png("cli_src.png", 1);
    const std::string mapped = fixture_png("cli_tgt.png", 2);
    const std::string out = ts::tmp_path("cli_regrain.png");
    CHECK(run("regrain " + orig + " " + mapped + " -o " + out) == 0);
    CHECK(fs::exists(out));
}

TEST_CASE("nstloss: matching features give total 0") {
    colorxfer::nst::FeatureMap fm;
    fm.layer = "conv4_2";
    fm.data = Eigen::MatrixXd::Random(3, 4);
    const std::string f = ts::tmp_path("cli_f.csv");
    colorxfer::nst::write_feature_map(f, fm);

    const std::string json_out = ts::tmp_path("cli_nst.json");
    CHECK(run("nstloss --generated " + f + " --content " + f + " --style-gen " + f +
              " --style-ref " + f, json_out) == 0);
    const nlohmann::json j = nlohmann::json::parse(slurp(json_out));
    CHECK(j["content"].get<double>() == doctest::Approx(0.0));
    CHECK(j["style"].get<double>() == doctest::Approx(0.0));
    CHECK(j["total"].get<double>() == doctest::Approx(0.0));
}

TEST_CASE("nstloss: known content loss and malformed input") {
    colorxfer::nst::FeatureMap f, p;
    f.layer = p.layer = "conv4_2";
    f.data = Eigen::MatrixXd::Zero(1, 2);
    p.data = Eigen::MatrixXd::Zero(1, 2);
    f.data(0, 0) = 1.0;
    const std::string fp = ts::tmp_path("cli_f2.csv");
    const std::string pp = ts::tmp_path("cli_p2.csv");
    colorxfer::nst::write_feature_map(fp, f);
    colorxfer::nst::write_feature_map(pp, p);

    const std::string json_out = ts::tmp_path("cli_nst2.json");
    CHECK(run("nstloss --generated " + fp + " --content " + pp, json_out) == 0);
    const nlohmann::json j = nlohmann::json::parse(slurp(json_out));
    CHECK(j["content"].get<double>() == doctest::Approx(0.5));
    CHECK(j["total"].get<double>() == doctest::Approx(0.5));

    const std::string bad = ts::tmp_path("cli_bad.csv");
    std::ofstream(bad) << "conv1_1,2,2\n1,2\n";
    CHECK(run("nstloss --generated " + bad + " --content " + bad) == 2);
}

TEST_CASE("config file sets defaults and the command line overrides them") {
    const std::string src = fixture_png("cli_src.png", 1);
    const std::string tgt = fixture_png("cli_tgt.png", 2);
    const std::string conf = ts::tmp_path("cli_conf.ini");
    std::ofstream(conf) << "[transfer]\nmethod=histmatch\n";
    const std::string out = ts::tmp_path("cli_conf_out.png");
    CHECK(run("transfer " + src + " " + tgt + " --config " + conf + " -o " + out) == 0);
    CHECK(fs::exists(out));
    // Command line wins over the file.
    CHECK(run("transfer " + src + " " + tgt + " --config " + conf + " --method mkl -o " + out) ==
          0);
}
