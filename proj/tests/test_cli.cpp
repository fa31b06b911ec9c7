#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bfdreg/experiments.hpp"
#include "bfdreg/io.hpp"
#include "bfdreg/rng.hpp"

using namespace bfdreg;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream os(p);
    os << text;
}

std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string caught_message(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

#ifdef BFDREG_CLI_PATH
int run_cli(const std::string& args) {
    const std::string cmd = std::string(BFDREG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}
#endif

}  // namespace

TEST_CASE("config files parse into experiment settings") {
    fs::path dir = fresh_dir("bfdreg_cfg_parse");
    fs::path cfg_path = dir / "exp.conf";
    write_file(cfg_path,
               "# full schema exercise\n"
               "[experiment]\n"
               "operator = diagonal\n"
               "seed = 11\n"
               "C = 1.5\n"
               "alpha_rule = sqrt\n"
               "delta_grid = 1e-1, 1e-2\n"
               "methods = bfd, syn\n"
               "expect = none\n"
               "compare_delta = 0.05\n"
               "compare_repeats = 2\n"
               "[frame]\n"
               "kind = onb\n"
               "family = db4\n"
               "levels = 3\n"
               "width = 32\n"
               "height = 32\n"
               "[phantom]\n"
               "kind = sparse_frame\n"
               "n_atoms = 4\n"
               "scales = -1, 0\n"
               "support_kappa_min = 0.25\n"
               "[weights]\n"
               "c = 0.5\n"
               "gamma = 1.0\n"
               "[diagonal]\n"
               "kappa_min = 0.3\n"
               "kappa_max = 0.9\n"
               "kappa_zeros = 2\n"
               "[solver]\n"
               "max_iters = 777\n"
               "tol = 1e-9\n"
               "accel = fista\n");
    ExperimentConfig cfg = parse_config(cfg_path.string());
    CHECK(cfg.op == OperatorKind::diagonal);
    CHECK(cfg.seed == 11);
    CHECK(cfg.C == 1.5);
    CHECK(cfg.alpha_rule == AlphaRule::sqrt);
    REQUIRE(cfg.delta_grid.size() == 2);
    CHECK(cfg.delta_grid[1] == 1e-2);
    CHECK(cfg.method_bfd);
    CHECK(cfg.method_syn);
    CHECK_FALSE(cfg.method_ana);
    CHECK(cfg.compare_delta == 0.05);
    CHECK(cfg.compare_repeats == 2);
    CHECK(cfg.frame.kind == FrameKind::orthonormal_wavelet);
    CHECK(cfg.frame.family == WaveletFamily::daubechies4);
    CHECK(cfg.frame.levels == 3);
    CHECK(cfg.frame.width == 32);
    CHECK(cfg.phantom.kind == PhantomKind::sparse_frame);
    CHECK(cfg.phantom.n_atoms == 4);
    REQUIRE(cfg.phantom.scales.size() == 2);
    CHECK(cfg.phantom.scales[0] == -1);
    CHECK(cfg.phantom.support_kappa_min == 0.25);
    CHECK(cfg.weights.c == 0.5);
    CHECK(cfg.weights.gamma == 1.0);
    CHECK(cfg.kappa_min == 0.3);
    CHECK(cfg.kappa_max == 0.9);
    CHECK(cfg.kappa_zeros == 2);
    CHECK(cfg.solver.max_iters == 777);
    CHECK(cfg.solver.tol == 1e-9);
    CHECK(cfg.solver.accel == Acceleration::fista);
    fs::remove_all(dir);
}

TEST_CASE("config parser reports the offending line") {
    fs::path dir = fresh_dir("bfdreg_cfg_diag");
    auto expect_error = [&](const char* name, const std::string& text, const std::string& line_tag,
                            const std::string& phrase) {
        fs::path p = dir / name;
        write_file(p, text);
        std::string msg = caught_message([&] { (void)parse_config(p.string()); });
        CHECK(msg.find(p.string()) != std::string::npos);
        CHECK(msg.find(line_tag) != std::string::npos);
        CHECK(msg.find(phrase) != std::string::npos);
    };
    expect_error("unknown_key.conf", "[experiment]\noperator = radon\nbogus = 1\n", ":3:",
                 "unknown key");
    expect_error("no_section.conf", "x = 1\n", ":1:", "before any [section]");
    expect_error("bad_number.conf", "[experiment]\nseed = abc\n", ":2:", "expected a number");
    expect_error("no_equals.conf", "[experiment]\noperator\n", ":2:", "key=value");
    expect_error("open_section.conf", "[frame\n", ":1:", "unterminated");
    expect_error("bad_enum.conf", "[experiment]\noperator = sonar\n", ":2:",
                 "radon|wave|diagonal");
    CHECK_THROWS_AS((void)parse_config((dir / "missing.conf").string()), std::runtime_error);
    fs::remove_all(dir);
}

TEST_CASE("phantoms are deterministic in the seed") {
    ExperimentConfig cfg = default_config();
    BfdSystem sys = build_system(cfg);
    Phantom a = make_phantom(cfg.phantom, sys, 5);
    Phantom b = make_phantom(cfg.phantom, sys, 5);
    REQUIRE(a.x.size() == b.x.size());
    for (std::size_t i = 0; i < a.x.size(); ++i) CHECK(a.x.values[i] == b.x.values[i]);

    Phantom c = make_phantom(cfg.phantom, sys, 6);
    double diff = 0;
    for (std::size_t i = 0; i < a.x.size(); ++i)
        diff = std::max(diff, std::abs(a.x.values[i] - c.x.values[i]));
    CHECK(diff > 0.0);
}

TEST_CASE("noise injection hits the requested level exactly") {
    ExperimentConfig cfg = default_config();
    cfg.op = OperatorKind::radon;
    cfg.frame.width = cfg.frame.height = 32;
    cfg.frame.spacing = 2.0 / 32;
    cfg.n_angles = 45;
    BfdSystem sys = build_system(cfg);
    Sinogram y = sys.radon.make_sinogram();
    Rng rng(23);
    for (auto& v : y.values) v = rng.gaussian();

    for (double delta : {1e-1, 1e-3, 1e-6}) {
        Sinogram noisy = add_noise(y, delta, 99);
        axpy(-1.0, y, noisy);
        CHECK(norm(noisy) == doctest::Approx(delta).epsilon(1e-12));
    }
    Sinogram clean = add_noise(y, 0.0, 99);
    axpy(-1.0, y, clean);
    CHECK(norm(clean) == 0.0);
    CHECK_THROWS_AS(add_noise(y, -1e-3, 99), std::invalid_argument);

    Image img(16, 16, 0.125);
    for (auto& v : img.values) v = rng.gaussian();
    Image noisy_img = add_noise_image(img, 0.37, 4);
    axpy(-1.0, img, noisy_img);
    CHECK(norm(noisy_img) == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("slope fit recovers exact power laws") {
    std::vector<double> deltas = {1e-1, 1e-2, 1e-3, 1e-4};
    std::vector<double> lin(deltas.size()), root(deltas.size());
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        lin[i] = 3.0 * deltas[i];
        root[i] = 2.0 * std::sqrt(deltas[i]);
    }
    CHECK(slope_fit(deltas, lin) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(slope_fit(deltas, root) == doctest::Approx(0.5).epsilon(1e-10));

    // zero-noise rows carry no log-log information and are skipped
    std::vector<double> with_zero = {1e-1, 0.0, 1e-3};
    std::vector<double> errs = {3e-1, 0.0, 3e-3};
    CHECK(slope_fit(with_zero, errs) == doctest::Approx(1.0).epsilon(1e-10));

    CHECK_THROWS_AS(slope_fit({1e-1}, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(slope_fit({1e-1, 0.0}, {1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(slope_fit({1e-1, 1e-1}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("rate sweep writes a reparsable deterministic table") {
    ExperimentConfig cfg = default_config();
    cfg.kappa_min = 0.5;
    cfg.delta_grid = {1e-1, 1e-2, 1e-3, 0.0};
    cfg.seed = 7;
    fs::path d1 = fresh_dir("bfdreg_rates_a"), d2 = fresh_dir("bfdreg_rates_b");

    cfg.out_dir = d1.string();
    RatesResult r1 = run_rates(cfg);
    cfg.out_dir = d2.string();
    RatesResult r2 = run_rates(cfg);

    CHECK(r1.slope == doctest::Approx(1.0).epsilon(5e-2));
    REQUIRE(r1.rows.size() == 4);
    // the noiseless row is reconstructed exactly
    CHECK(r1.rows.back().err_bfd < 1e-12);
    for (std::size_t i = 0; i + 2 < r1.rows.size(); ++i)
        CHECK(r1.rows[i + 1].err_bfd < r1.rows[i].err_bfd);

    // identical config + seed => byte-identical table
    CHECK(read_file(r1.csv_path) == read_file(r2.csv_path));
    CHECK(fs::exists(r1.plot_path));

    CsvTable t = read_csv(r1.csv_path);
    REQUIRE(t.header.size() == 3);
    CHECK(t.header[0] == "delta");
    CHECK(t.header[1] == "alpha");
    CHECK(t.header[2] == "err_bfd");
    REQUIRE(t.rows.size() == r1.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        CHECK(std::strtod(t.rows[i][0].c_str(), nullptr) == r1.rows[i].delta);
        CHECK(std::strtod(t.rows[i][2].c_str(), nullptr) == r1.rows[i].err_bfd);
    }
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("rate sweep refuses phantoms without sparse coefficients") {
    ExperimentConfig cfg = default_config();
    cfg.phantom.kind = PhantomKind::smooth_disk;
    cfg.out_dir = (fs::temp_directory_path() / "bfdreg_rates_refuse").string();
    std::string msg = caught_message([&] { (void)run_rates(cfg); });
    CHECK(msg.find("not sparse") != std::string::npos);
    CHECK(msg.find("support") != std::string::npos);
}

TEST_CASE("reconstruction run writes arrays and a summary") {
    ExperimentConfig cfg = default_config();
    cfg.kappa_min = 0.5;
    fs::path dir = fresh_dir("bfdreg_recon");
    cfg.out_dir = dir.string();
    ReconstructResult r = run_reconstruct(cfg);
    CHECK(std::isfinite(r.err_bfd));
    CHECK(fs::exists(dir / "x_true.bfda"));
    CHECK(fs::exists(dir / "x_bfd.bfda"));
    CHECK(fs::exists(dir / "data.bfda"));

    Image x_true = load_image((dir / "x_true.bfda").string(), cfg.frame.spacing);
    Image x_bfd = load_image((dir / "x_bfd.bfda").string(), cfg.frame.spacing);
    axpy(-1.0, x_bfd, x_true);
    CHECK(norm(x_true) == doctest::Approx(r.err_bfd).epsilon(1e-12));

    CsvTable t = read_csv((dir / "reconstruct.csv").string());
    REQUIRE(t.rows.size() == 4);
    CHECK(t.rows[2][0] == "err_bfd");
    CHECK(std::strtod(t.rows[2][1].c_str(), nullptr) == doctest::Approx(r.err_bfd).epsilon(1e-15));
    fs::remove_all(dir);
}

TEST_CASE("self test flags an injected defect") {
    ExperimentConfig cfg = default_config();
    std::ostringstream clean, broken;
    CHECK(selftest(cfg, false, clean) == 0);
    CHECK(clean.str().find("ok   ") != std::string::npos);
    CHECK(clean.str().find("FAIL") == std::string::npos);

    CHECK(selftest(cfg, true, broken) > 0);
    CHECK(broken.str().find("FAIL") != std::string::npos);
}

TEST_CASE("direct estimate outpaces the iterative route on the projection problem") {
    // the direct estimator is one filtered backprojection plus thresholding; the
    // iterative route pays a projection pair per step -- ordinal comparison only
    ExperimentConfig cfg = default_config();
    cfg.op = OperatorKind::radon;
    cfg.frame.kind = FrameKind::orthonormal_wavelet;
    cfg.frame.family = WaveletFamily::daubechies4;
    cfg.frame.levels = 4;
    cfg.frame.width = cfg.frame.height = 128;
    cfg.frame.spacing = 2.0 / 128;
    cfg.n_angles = 180;
    cfg.phantom.kind = PhantomKind::sparse_frame;
    cfg.phantom.n_atoms = 10;
    cfg.phantom.scales = {-1, 0};
    cfg.phantom.support_kappa_min = 0.0;
    cfg.method_syn = true;
    cfg.method_ana = false;
    cfg.expect = "none";
    cfg.compare_delta = 1e-2;
    cfg.compare_repeats = 1;
    cfg.solver.step = 0.078;  // 0.95 / ||A W||^2 measured once; skips the power method
    cfg.solver.max_iters = 6;
    cfg.solver.tol = 1e-12;
    cfg.seed = 7;
    fs::path dir = fresh_dir("bfdreg_timing");
    cfg.out_dir = dir.string();
    CompareResult r = run_compare(cfg);
    CHECK(r.wall_ms_bfd > 0.0);
    CHECK(r.wall_ms_bfd < r.wall_ms_syn);
    CHECK(fs::exists(r.report_path));
    fs::remove_all(dir);
}

#ifdef BFDREG_CLI_PATH

TEST_CASE("command line front end reports usage, success, and failure") {
    CHECK(run_cli("") == 2);
    CHECK(run_cli("selftest") == 0);
    CHECK(run_cli("selftest --inject-bug") == 1);
    CHECK(run_cli("rates --config /nonexistent/exp.conf") == 2);
    CHECK(run_cli("--operator sonar selftest") == 2);
}

TEST_CASE("command line rate sweep honors config, output, and seed flags") {
    fs::path dir = fresh_dir("bfdreg_cli_rates");
    fs::path cfg_path = dir / "exp.conf";
    write_file(cfg_path,
               "[experiment]\n"
               "operator = diagonal\n"
               "delta_grid = 1e-1, 1e-2, 1e-3\n"
               "methods = bfd\n"
               "[diagonal]\n"
               "kappa_min = 0.5\n"
               "kappa_max = 1.0\n");
    const std::string out = (dir / "out").string();
    CHECK(run_cli("rates --config " + cfg_path.string() + " --out " + out + " --seed 7") == 0);
    CHECK(fs::exists(fs::path(out) / "rates.csv"));
    CHECK(fs::exists(fs::path(out) / "rates.pgm"));
    fs::remove_all(dir);
}

TEST_CASE("command line compare exits nonzero when the expectation fails") {
    // an orthonormal configuration is equivalent, so expecting distinct must fail
    fs::path dir = fresh_dir("bfdreg_cli_cmp");
    fs::path cfg_path = dir / "exp.conf";
    write_file(cfg_path,
               "[experiment]\n"
               "operator = diagonal\n"
               "methods = bfd, syn\n"
               "expect = distinct\n"
               "compare_delta = 1e-2\n"
               "compare_repeats = 1\n"
               "[frame]\n"
               "kind = identity\n"
               "width = 16\n"
               "height = 16\n"
               "[diagonal]\n"
               "kappa_min = 1.0\n"
               "kappa_max = 1.0\n"
               "[solver]\n"
               "max_iters = 2000\n"
               "tol = 1e-12\n");
    const std::string out = (dir / "out").string();
    CHECK(run_cli("compare --config " + cfg_path.string() + " --out " + out) == 1);
    fs::remove_all(dir);
}

#endif  // BFDREG_CLI_PATH
