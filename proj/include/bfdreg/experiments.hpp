#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bfdreg/bfd.hpp"
#include "bfdreg/core.hpp"
#include "bfdreg/l1reg.hpp"

// Experiment drivers behind the command-line tool: phantom generation, exact
// noise injection, the noise-level sweep that exhibits the linear convergence
// rate, and the estimator comparison harness.

namespace bfdreg {

enum class PhantomKind { sparse_frame, smooth_disk, shepp_like };

struct PhantomSpec {
    PhantomKind kind = PhantomKind::smooth_disk;
    int n_atoms = 10;
    // sparse_frame placement restrictions: allowed scales (empty = all) where
    // -1 stands for the approximation band, and a lower bound on |kappa| at
    // the atom (0 keeps only the "kappa nonzero" requirement)
    std::vector<int> scales;
    double support_kappa_min = 0.0;
    double radius = 0.8;  // smooth_disk support radius
};

struct Phantom {
    Image x;
    CoeffSeq xi;          // frame coefficients of x (exact for sparse_frame)
};
Phantom make_phantom(const PhantomSpec& ps, const BfdSystem& sys, std::uint64_t seed);

// y + delta * z / ||z||_Y with z i.i.d. standard normal: the perturbation has
// Y-norm exactly delta.
Sinogram add_noise(const Sinogram& y, double delta, std::uint64_t seed);
Image add_noise_image(const Image& y, double delta, std::uint64_t seed);

// Least-squares slope of log(err) against log(delta).
double slope_fit(const std::vector<double>& deltas, const std::vector<double>& errs);

enum class AlphaRule { linear, sqrt };  // alpha = C*delta  or  alpha = C*sqrt(delta)

struct ExperimentConfig {
    // [experiment]
    OperatorKind op = OperatorKind::diagonal;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    double C = 2.0;
    AlphaRule alpha_rule = AlphaRule::linear;
    std::vector<double> delta_grid = {1e-1, 1e-2, 1e-3, 1e-4};
    bool method_bfd = true, method_syn = false, method_ana = false;
    std::string expect = "none";  // none | equivalent | distinct
    double equiv_tol = 1e-6;
    double distinct_factor = 10.0;
    double compare_delta = 1e-2;
    int compare_repeats = 3;

    // [frame]
    FrameSpec frame;

    // [phantom]
    PhantomSpec phantom;

    // [weights]
    WeightRule weights;
    double d_min = 1e-12;

    // [radon]
    int n_angles = 360;
    int n_offsets = 0;       // 0 = default 2*width
    double offset_spacing = 0.0;

    // [wave]
    int nt = 0;              // 0 = default 4*ny
    double dt = 0.0;

    // [diagonal]
    double kappa_min = 0.05, kappa_max = 1.0;
    int kappa_zeros = 0;     // zero entries injected at the end of the mask

    // [solver]
    SolverConfig solver;

    // internal test hook: perturb kappa so the decomposition identity breaks
    bool inject_bug = false;
};

// Plain-text What=Value config with [section] headers; throws
// std::runtime_error with a line diagnostic on malformed input.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig default_config();

BfdSystem build_system(const ExperimentConfig& cfg);

struct RatesRow {
    double delta = 0.0;
    double alpha = 0.0;
    double err_bfd = 0.0;
    std::optional<double> err_syn, err_ana;
    int iters_syn = 0, iters_ana = 0;
};

struct RatesResult {
    std::vector<RatesRow> rows;
    double slope = 0.0;           // over rows with delta > 0
    RateConditions conditions;
    std::string csv_path, plot_path;
};

// Verifies the source conditions first and refuses (std::runtime_error naming
// the failed condition) if they do not hold.  Per-row noise seeds are derived
// as mix_seed(seed, row index).  The CSV holds only deterministic columns.
RatesResult run_rates(const ExperimentConfig& cfg);

struct CompareResult {
    double dist_bfd_syn = 0.0, dist_bfd_ana = 0.0, dist_syn_ana = 0.0;
    double wall_ms_bfd = 0.0, wall_ms_syn = 0.0, wall_ms_ana = 0.0;  // medians
    int iters_syn = 0, iters_ana = 0;
    bool expectation_met = true;
    std::string report_path;
};
CompareResult run_compare(const ExperimentConfig& cfg);

// One reconstruction at cfg.compare_delta; writes arrays and a summary CSV.
struct ReconstructResult {
    double err_bfd = 0.0;
    std::string out_dir;
};
ReconstructResult run_reconstruct(const ExperimentConfig& cfg);

// Invariant self-checks printed as a table; returns the number of failures.
// inject_bug flips the sign of one kappa entry to prove the decomposition
// check actually bites.
int selftest(const ExperimentConfig& cfg, bool inject_bug, std::ostream& out);

// Log-log scatter/polyline plot rendered to a binary PGM (P5) image.
void render_loglog_pgm(const std::string& path, const std::vector<double>& xs,
                       const std::vector<double>& ys, int width = 640, int height = 480);

}  // namespace bfdreg
