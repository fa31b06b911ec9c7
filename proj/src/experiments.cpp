#include "bfdreg/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "bfdreg/io.hpp"
#include "bfdreg/rng.hpp"

namespace bfdreg {

namespace {

// seed streams, fixed so runs are reproducible given [experiment] seed
constexpr std::uint64_t kSeedPhantom = 11;
constexpr std::uint64_t kSeedMask = 22;
constexpr std::uint64_t kSeedRatesRow = 1000;  // + row index
constexpr std::uint64_t kSeedCompare = 2000;
constexpr std::uint64_t kSeedReconstruct = 3000;

double fraction_outside(const Image& x, double radius) {
    double outside = 0.0, total = 0.0;
    for (int iy = 0; iy < x.height; ++iy)
        for (int ix = 0; ix < x.width; ++ix) {
            const double cx = -1.0 + (ix + 0.5) * x.spacing;
            const double cy = -1.0 + (iy + 0.5) * x.spacing;
            const double v2 = x.at(ix, iy) * x.at(ix, iy);
            total += v2;
            if (cx * cx + cy * cy > radius * radius) outside += v2;
        }
    return total > 0.0 ? outside / total : 0.0;
}

double alpha_for(const ExperimentConfig& cfg, double delta) {
    return cfg.alpha_rule == AlphaRule::linear ? cfg.C * delta : cfg.C * std::sqrt(delta);
}

Image image_diff(const Image& a, const Image& b) {
    Image d = a;
    axpy(-1.0, b, d);
    return d;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

}  // namespace

Phantom make_phantom(const PhantomSpec& ps, const BfdSystem& sys, std::uint64_t seed) {
    const FrameSpec& f = sys.frame;
    Phantom ph;
    Rng rng(seed);

    if (ps.kind == PhantomKind::sparse_frame) {
        if (ps.n_atoms < 1) throw std::invalid_argument("make_phantom: n_atoms must be >= 1");
        std::vector<std::size_t> pool;
        for (std::size_t i = 0; i < f.lambda_count(); ++i) {
            const LambdaIndex lam = lambda_at(f, i);
            if (!ps.scales.empty()) {
                const int tag = lam.beta == Band::Approx ? -1 : lam.j;
                if (std::find(ps.scales.begin(), ps.scales.end(), tag) == ps.scales.end())
                    continue;
            }
            if (sys.kappa[i] == 0.0 || std::abs(sys.kappa[i]) < ps.support_kappa_min) continue;
            pool.push_back(i);
        }
        CoeffSeq xi;
        xi.frame_id = f.id();
        xi.entries.assign(f.lambda_count(), 0.0);
        CoeffSeq unit = xi;
        int placed = 0;
        while (placed < ps.n_atoms) {
            if (pool.empty())
                throw std::runtime_error(
                    "make_phantom: not enough frame atoms satisfy the support constraints");
            const std::size_t slot = rng.next_below(pool.size());
            const std::size_t idx = pool[slot];
            pool[slot] = pool.back();
            pool.pop_back();
            if (xi.entries[idx] != 0.0) continue;
            if (sys.op == OperatorKind::radon) {
                // the inversion formula needs supp(x) inside the unit disk
                unit.entries[idx] = 1.0;
                const Image atom = synthesis(f, unit);
                unit.entries[idx] = 0.0;
                if (fraction_outside(atom, 0.9) > 1e-12) continue;
            }
            const double amp = (rng.next_u64() & 1 ? 1.0 : -1.0) * rng.uniform(0.5, 1.5);
            xi.entries[idx] = amp;
            ++placed;
        }
        ph.xi = xi;
        ph.x = synthesis(f, xi);
        return ph;
    }

    Image x(f.width, f.height, f.spacing);
    const bool slab = sys.op == OperatorKind::wave;
    const double Ly = slab ? f.height * f.spacing : 2.0;
    const double cy0 = slab ? 0.5 * Ly : 0.0;
    const double half_extent = slab ? 0.5 * std::min(2.0, Ly) : 1.0;

    if (ps.kind == PhantomKind::smooth_disk) {
        if (!(ps.radius > 0.0 && ps.radius < 1.0))
            throw std::invalid_argument("make_phantom: radius must lie in (0,1)");
        const double R = ps.radius * half_extent;
        for (int iy = 0; iy < x.height; ++iy)
            for (int ix = 0; ix < x.width; ++ix) {
                const double cx = -1.0 + (ix + 0.5) * x.spacing;
                const double cy = slab ? (iy + 0.5) * x.spacing - cy0 : -1.0 + (iy + 0.5) * x.spacing;
                const double r2 = (cx * cx + cy * cy) / (R * R);
                x.at(ix, iy) = r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0;
            }
    } else {  // shepp_like: a few constant-intensity ellipses
        struct El {
            double cx, cy, a, b, deg, v;
        };
        const El els[] = {
            {0.0, 0.0, 0.65, 0.85, 0.0, 1.0},    {0.0, 0.0, 0.58, 0.77, 0.0, -0.8},
            {0.20, 0.0, 0.10, 0.30, -18.0, -0.2}, {-0.20, 0.0, 0.14, 0.36, 18.0, -0.2},
            {0.0, 0.32, 0.19, 0.19, 0.0, 0.3},   {0.0, -0.35, 0.08, 0.08, 0.0, 0.3},
        };
        for (int iy = 0; iy < x.height; ++iy)
            for (int ix = 0; ix < x.width; ++ix) {
                const double cx = -1.0 + (ix + 0.5) * x.spacing;
                const double cy = slab ? ((iy + 0.5) * x.spacing - cy0) / half_extent
                                       : -1.0 + (iy + 0.5) * x.spacing;
                double v = 0.0;
                for (const El& e : els) {
                    const double th = e.deg * 3.14159265358979323846 / 180.0;
                    const double dx = cx - e.cx, dy = cy - e.cy;
                    const double px = std::cos(th) * dx + std::sin(th) * dy;
                    const double py = -std::sin(th) * dx + std::cos(th) * dy;
                    if (px * px / (e.a * e.a) + py * py / (e.b * e.b) <= 1.0) v += e.v;
                }
                x.at(ix, iy) = v;
            }
    }
    ph.x = x;
    ph.xi = analysis(f, x);
    return ph;
}

Sinogram add_noise(const Sinogram& y, double delta, std::uint64_t seed) {
    if (!(delta >= 0.0)) throw std::invalid_argument("add_noise: delta must be >= 0");
    if (delta == 0.0) return y;
    Rng rng(seed);
    Sinogram z = y;
    for (double& v : z.values) v = rng.gaussian();
    const double nz = norm(z);
    if (nz == 0.0) return y;
    Sinogram out = y;
    axpy(delta / nz, z, out);
    return out;
}

Image add_noise_image(const Image& y, double delta, std::uint64_t seed) {
    if (!(delta >= 0.0)) throw std::invalid_argument("add_noise: delta must be >= 0");
    if (delta == 0.0) return y;
    Rng rng(seed);
    Image z = y;
    for (double& v : z.values) v = rng.gaussian();
    const double nz = norm(z);
    if (nz == 0.0) return y;
    Image out = y;
    axpy(delta / nz, z, out);
    return out;
}

double slope_fit(const std::vector<double>& deltas, const std::vector<double>& errs) {
    if (deltas.size() != errs.size()) throw std::invalid_argument("slope_fit: size mismatch");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < deltas.size(); ++i)
        if (deltas[i] > 0.0 && errs[i] > 0.0) {
            lx.push_back(std::log(deltas[i]));
            ly.push_back(std::log(errs[i]));
        }
    if (lx.size() < 2)
        throw std::invalid_argument("slope_fit: need at least two positive (delta, err) pairs");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= lx.size();
    my /= lx.size();
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("slope_fit: all deltas equal");
    return sxy / sxx;
}

// ---------------------------------------------------------------------------
// configuration

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_line(const std::string& path, int line, const std::string& why) {
    std::ostringstream os;
    os << path << ":" << line << ": " << why;
    throw std::runtime_error(os.str());
}

double parse_num(const std::string& path, int line, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) bad_line(path, line, "trailing characters in number '" + v + "'");
        return x;
    } catch (const std::logic_error&) {
        bad_line(path, line, "expected a number, got '" + v + "'");
    }
}

std::vector<std::string> split_commas(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(v);
    while (std::getline(is, cur, ',')) out.push_back(trim(cur));
    return out;
}

}  // namespace

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.frame.kind = FrameKind::identity;
    cfg.frame.width = cfg.frame.height = 32;
    cfg.frame.spacing = 2.0 / 32;
    cfg.phantom.kind = PhantomKind::sparse_frame;
    cfg.phantom.n_atoms = 6;
    cfg.phantom.support_kappa_min = 0.5;
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open config");
    ExperimentConfig cfg = default_config();
    cfg.frame.spacing = 0.0;  // 0 = derive from grid later
    std::string section, line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') bad_line(path, ln, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) bad_line(path, ln, "expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty()) bad_line(path, ln, "empty key or value");
        auto num = [&] { return parse_num(path, ln, val); };
        auto intval = [&] {
            const double x = parse_num(path, ln, val);
            if (x != std::floor(x)) bad_line(path, ln, "expected an integer");
            return static_cast<int>(x);
        };

        if (section == "experiment") {
            if (key == "operator") {
                if (val == "radon") cfg.op = OperatorKind::radon;
                else if (val == "wave") cfg.op = OperatorKind::wave;
                else if (val == "diagonal") cfg.op = OperatorKind::diagonal;
                else bad_line(path, ln, "operator must be radon|wave|diagonal");
            } else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(num());
            else if (key == "out_dir") cfg.out_dir = val;
            else if (key == "C") cfg.C = num();
            else if (key == "alpha_rule") {
                if (val == "linear") cfg.alpha_rule = AlphaRule::linear;
                else if (val == "sqrt") cfg.alpha_rule = AlphaRule::sqrt;
                else bad_line(path, ln, "alpha_rule must be linear|sqrt");
            } else if (key == "delta_grid") {
                cfg.delta_grid.clear();
                for (const std::string& tok : split_commas(val))
                    cfg.delta_grid.push_back(parse_num(path, ln, tok));
            } else if (key == "methods") {
                cfg.method_bfd = cfg.method_syn = cfg.method_ana = false;
                for (const std::string& tok : split_commas(val)) {
                    if (tok == "bfd") cfg.method_bfd = true;
                    else if (tok == "syn") cfg.method_syn = true;
                    else if (tok == "ana") cfg.method_ana = true;
                    else bad_line(path, ln, "methods must list bfd|syn|ana");
                }
            } else if (key == "expect") {
                if (val != "none" && val != "equivalent" && val != "distinct")
                    bad_line(path, ln, "expect must be none|equivalent|distinct");
                cfg.expect = val;
            } else if (key == "equiv_tol") cfg.equiv_tol = num();
            else if (key == "distinct_factor") cfg.distinct_factor = num();
            else if (key == "compare_delta") cfg.compare_delta = num();
            else if (key == "compare_repeats") cfg.compare_repeats = intval();
            else bad_line(path, ln, "unknown key '" + key + "' in [experiment]");
        } else if (section == "frame") {
            if (key == "kind") {
                if (val == "onb") cfg.frame.kind = FrameKind::orthonormal_wavelet;
                else if (val == "ti") cfg.frame.kind = FrameKind::ti_parseval_wavelet;
                else if (val == "identity") cfg.frame.kind = FrameKind::identity;
                else bad_line(path, ln, "frame kind must be onb|ti|identity");
            } else if (key == "family") {
                if (val == "haar") cfg.frame.family = WaveletFamily::haar;
                else if (val == "db4") cfg.frame.family = WaveletFamily::daubechies4;
                else bad_line(path, ln, "family must be haar|db4");
            } else if (key == "levels") cfg.frame.levels = intval();
            else if (key == "width") cfg.frame.width = intval();
            else if (key == "height") cfg.frame.height = intval();
            else if (key == "spacing") cfg.frame.spacing = num();
            else bad_line(path, ln, "unknown key '" + key + "' in [frame]");
        } else if (section == "phantom") {
            if (key == "kind") {
                if (val == "sparse_frame") cfg.phantom.kind = PhantomKind::sparse_frame;
                else if (val == "smooth_disk") cfg.phantom.kind = PhantomKind::smooth_disk;
                else if (val == "shepp_like") cfg.phantom.kind = PhantomKind::shepp_like;
                else bad_line(path, ln, "phantom kind must be sparse_frame|smooth_disk|shepp_like");
            } else if (key == "n_atoms") cfg.phantom.n_atoms = intval();
            else if (key == "scales") {
                cfg.phantom.scales.clear();
                for (const std::string& tok : split_commas(val))
                    cfg.phantom.scales.push_back(
                        static_cast<int>(parse_num(path, ln, tok)));
            } else if (key == "support_kappa_min") cfg.phantom.support_kappa_min = num();
            else if (key == "radius") cfg.phantom.radius = num();
            else bad_line(path, ln, "unknown key '" + key + "' in [phantom]");
        } else if (section == "weights") {
            if (key == "c") cfg.weights.c = num();
            else if (key == "gamma") cfg.weights.gamma = num();
            else if (key == "d_min") cfg.d_min = num();
            else bad_line(path, ln, "unknown key '" + key + "' in [weights]");
        } else if (section == "radon") {
            if (key == "n_angles") cfg.n_angles = intval();
            else if (key == "n_offsets") cfg.n_offsets = intval();
            else if (key == "offset_spacing") cfg.offset_spacing = num();
            else bad_line(path, ln, "unknown key '" + key + "' in [radon]");
        } else if (section == "wave") {
            if (key == "nt") cfg.nt = intval();
            else if (key == "dt") cfg.dt = num();
            else bad_line(path, ln, "unknown key '" + key + "' in [wave]");
        } else if (section == "diagonal") {
            if (key == "kappa_min") cfg.kappa_min = num();
            else if (key == "kappa_max") cfg.kappa_max = num();
            else if (key == "kappa_zeros") cfg.kappa_zeros = intval();
            else bad_line(path, ln, "unknown key '" + key + "' in [diagonal]");
        } else if (section == "solver") {
            if (key == "max_iters") cfg.solver.max_iters = intval();
            else if (key == "tol") cfg.solver.tol = num();
            else if (key == "step") cfg.solver.step = num();
            else if (key == "accel") {
                if (val == "none") cfg.solver.accel = Acceleration::none;
                else if (val == "fista") cfg.solver.accel = Acceleration::fista;
                else bad_line(path, ln, "accel must be none|fista");
            } else if (key == "trace") cfg.solver.trace_path = val;
            else bad_line(path, ln, "unknown key '" + key + "' in [solver]");
        } else {
            bad_line(path, ln, section.empty() ? "key before any [section]"
                                               : "unknown section [" + section + "]");
        }
    }
    return cfg;
}

BfdSystem build_system(const ExperimentConfig& cfg) {
    FrameSpec f = cfg.frame;
    if (f.spacing == 0.0) f.spacing = 2.0 / f.width;
    f.validate();
    const Weights d = make_weights(f, cfg.weights);
    d.validate(cfg.d_min);

    BfdSystem sys;
    switch (cfg.op) {
        case OperatorKind::radon: {
            RadonGeometry g;
            g.n_angles = cfg.n_angles;
            g.n_offsets = cfg.n_offsets > 0 ? cfg.n_offsets : 2 * f.width;
            g.offset_spacing = cfg.offset_spacing > 0.0 ? cfg.offset_spacing : f.spacing;
            sys = make_radon_bfd(g, f, d);
            break;
        }
        case OperatorKind::wave: {
            WaveGeometry g;
            g.nx = f.width;
            g.ny = f.height;
            g.spacing = f.spacing;
            g.nt = cfg.nt > 0 ? cfg.nt : 4 * f.height;
            g.dt = cfg.dt > 0.0 ? cfg.dt : 0.5 * f.spacing;
            sys = make_wave_bfd(g, f, d);
            break;
        }
        case OperatorKind::diagonal: {
            if (!(cfg.kappa_min > 0.0 && cfg.kappa_max >= cfg.kappa_min))
                throw std::runtime_error("build_system: need 0 < kappa_min <= kappa_max");
            const std::size_t n = static_cast<std::size_t>(f.width) * f.height;
            if (cfg.kappa_zeros < 0 || static_cast<std::size_t>(cfg.kappa_zeros) > n)
                throw std::runtime_error("build_system: kappa_zeros out of range");
            Rng rng(mix_seed(cfg.seed, kSeedMask));
            std::vector<double> mask(n);
            const double la = std::log(cfg.kappa_min), lb = std::log(cfg.kappa_max);
            for (double& m : mask) m = std::exp(rng.uniform(la, lb));
            for (int i = 0; i < cfg.kappa_zeros; ++i) mask[n - 1 - i] = 0.0;
            sys = make_diagonal_bfd(mask, f, d);
            break;
        }
    }
    if (cfg.inject_bug && !sys.kappa.empty()) sys.kappa[sys.kappa.size() / 2] *= -1.0;
    return sys;
}

// ---------------------------------------------------------------------------
// drivers

namespace {

struct Problem {
    BfdSystem sys;
    Phantom ph;
    // data containers for the two range shapes
    Sinogram y0_sino;
    Image y0_img;
    bool diag = false;

    Image estimate(double delta, std::uint64_t seed, double alpha) const {
        if (diag)
            return bfd_estimate_diag(sys, add_noise_image(y0_img, delta, seed), alpha);
        return bfd_estimate(sys, add_noise(y0_sino, delta, seed), alpha);
    }
    std::vector<double> noisy_flat(double delta, std::uint64_t seed) const {
        if (diag) return add_noise_image(y0_img, delta, seed).values;
        return add_noise(y0_sino, delta, seed).values;
    }
};

Problem make_problem(const ExperimentConfig& cfg) {
    Problem p;
    p.sys = build_system(cfg);
    p.ph = make_phantom(cfg.phantom, p.sys, mix_seed(cfg.seed, kSeedPhantom));
    p.diag = cfg.op == OperatorKind::diagonal;
    if (p.diag)
        p.y0_img = apply_forward_diag(p.sys, p.ph.x);
    else
        p.y0_sino = apply_forward(p.sys, p.ph.x);
    return p;
}

Image coeffs_to_image(const FrameSpec& f, const std::vector<double>& entries) {
    CoeffSeq xi;
    xi.frame_id = f.id();
    xi.entries = entries;
    return synthesis(f, xi);
}

Image flat_to_image(const FrameSpec& f, const std::vector<double>& v) {
    Image x(f.width, f.height, f.spacing);
    x.values = v;
    return x;
}

}  // namespace

RatesResult run_rates(const ExperimentConfig& cfg) {
    Problem p = make_problem(cfg);
    RatesResult res;
    res.conditions = check_rate_conditions(p.sys, p.ph.x);
    if (!res.conditions.sparse) {
        std::ostringstream os;
        os << "rate sweep refused: analysis coefficients of the phantom are not sparse "
           << "(support " << res.conditions.support_size << " of "
           << p.sys.lambda_count() << ")";
        throw std::runtime_error(os.str());
    }
    if (!res.conditions.kappa_nonzero)
        throw std::runtime_error(
            "rate sweep refused: kappa vanishes on the phantom support, the reconstruction "
            "cannot identify those coefficients");
    if (cfg.delta_grid.empty()) throw std::runtime_error("rate sweep: empty delta grid");

    const LinOp aw = cfg.method_syn ? synthesis_linop(p.sys) : LinOp{};
    const LinOp a = cfg.method_ana ? forward_linop(p.sys) : LinOp{};

    for (std::size_t k = 0; k < cfg.delta_grid.size(); ++k) {
        const double delta = cfg.delta_grid[k];
        if (!(delta >= 0.0)) throw std::runtime_error("rate sweep: deltas must be >= 0");
        RatesRow row;
        row.delta = delta;
        row.alpha = alpha_for(cfg, delta);
        const std::uint64_t sd = mix_seed(cfg.seed, kSeedRatesRow + k);
        const Image xb = p.estimate(delta, sd, row.alpha);
        row.err_bfd = norm(image_diff(xb, p.ph.x));
        if (cfg.method_syn) {
            const SolverResult r =
                synthesis_l1(aw, p.noisy_flat(delta, sd), row.alpha, p.sys.d, cfg.solver);
            row.err_syn = norm(image_diff(coeffs_to_image(p.sys.frame, r.x), p.ph.x));
            row.iters_syn = r.iters;
        }
        if (cfg.method_ana) {
            const SolverResult r = analysis_l1(a, p.sys.frame, p.noisy_flat(delta, sd),
                                               row.alpha, p.sys.d, cfg.solver);
            row.err_ana = norm(image_diff(flat_to_image(p.sys.frame, r.x), p.ph.x));
            row.iters_ana = r.iters;
        }
        res.rows.push_back(row);
    }

    // delta = 0 rows are noiseless baselines; the slope and the log-log plot use
    // only rows where both coordinates are positive.
    std::vector<double> deltas, errs;
    for (const RatesRow& r : res.rows)
        if (r.delta > 0.0 && r.err_bfd > 0.0) {
            deltas.push_back(r.delta);
            errs.push_back(r.err_bfd);
        }
    res.slope = slope_fit(deltas, errs);

    std::filesystem::create_directories(cfg.out_dir);
    CsvTable t;
    t.header = {"delta", "alpha", "err_bfd"};
    if (cfg.method_syn) {
        t.header.push_back("err_syn");
        t.header.push_back("iters_syn");
    }
    if (cfg.method_ana) {
        t.header.push_back("err_ana");
        t.header.push_back("iters_ana");
    }
    for (const RatesRow& r : res.rows) {
        std::vector<std::string> row = {csv_format_double(r.delta), csv_format_double(r.alpha),
                                        csv_format_double(r.err_bfd)};
        if (cfg.method_syn) {
            row.push_back(csv_format_double(*r.err_syn));
            row.push_back(std::to_string(r.iters_syn));
        }
        if (cfg.method_ana) {
            row.push_back(csv_format_double(*r.err_ana));
            row.push_back(std::to_string(r.iters_ana));
        }
        t.rows.push_back(std::move(row));
    }
    res.csv_path = cfg.out_dir + "/rates.csv";
    write_csv(res.csv_path, t);
    res.plot_path = cfg.out_dir + "/rates.pgm";
    if (!deltas.empty()) render_loglog_pgm(res.plot_path, deltas, errs);
    return res;
}

CompareResult run_compare(const ExperimentConfig& cfg) {
    Problem p = make_problem(cfg);
    CompareResult res;
    const double delta = cfg.compare_delta;
    const double alpha = alpha_for(cfg, delta);
    const std::uint64_t sd = mix_seed(cfg.seed, kSeedCompare);
    const std::vector<double> yflat = p.noisy_flat(delta, sd);
    const int reps = std::max(1, cfg.compare_repeats);

    Image x_bfd(p.sys.frame.width, p.sys.frame.height, p.sys.frame.spacing);
    {
        std::vector<double> ms;
        for (int r = 0; r < reps; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            x_bfd = p.estimate(delta, sd, alpha);
            const auto t1 = std::chrono::steady_clock::now();
            ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        res.wall_ms_bfd = median_of(ms);
    }

    Image x_syn = x_bfd, x_ana = x_bfd;
    if (cfg.method_syn) {
        const LinOp aw = synthesis_linop(p.sys);
        std::vector<double> ms;
        SolverResult r;
        for (int i = 0; i < reps; ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            r = synthesis_l1(aw, yflat, alpha, p.sys.d, cfg.solver);
            const auto t1 = std::chrono::steady_clock::now();
            ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        res.wall_ms_syn = median_of(ms);
        res.iters_syn = r.iters;
        x_syn = coeffs_to_image(p.sys.frame, r.x);
        res.dist_bfd_syn = norm(image_diff(x_bfd, x_syn));
    }
    if (cfg.method_ana) {
        const LinOp a = forward_linop(p.sys);
        std::vector<double> ms;
        SolverResult r;
        for (int i = 0; i < reps; ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            r = analysis_l1(a, p.sys.frame, yflat, alpha, p.sys.d, cfg.solver);
            const auto t1 = std::chrono::steady_clock::now();
            ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        res.wall_ms_ana = median_of(ms);
        res.iters_ana = r.iters;
        x_ana = flat_to_image(p.sys.frame, r.x);
        res.dist_bfd_ana = norm(image_diff(x_bfd, x_ana));
        if (cfg.method_syn) res.dist_syn_ana = norm(image_diff(x_syn, x_ana));
    }

    double dmax = 0.0;
    if (cfg.method_syn) dmax = std::max(dmax, res.dist_bfd_syn);
    if (cfg.method_ana) dmax = std::max(dmax, res.dist_bfd_ana);
    if (cfg.method_syn && cfg.method_ana) dmax = std::max(dmax, res.dist_syn_ana);
    if (cfg.expect == "equivalent")
        res.expectation_met = dmax <= cfg.equiv_tol;
    else if (cfg.expect == "distinct")
        res.expectation_met = dmax >= cfg.distinct_factor * cfg.equiv_tol;
    else
        res.expectation_met = true;

    std::filesystem::create_directories(cfg.out_dir);
    CsvTable t;
    t.header = {"metric", "value"};
    auto kv = [&](const std::string& k, const std::string& v) { t.rows.push_back({k, v}); };
    kv("delta", csv_format_double(delta));
    kv("alpha", csv_format_double(alpha));
    kv("wall_ms_bfd", csv_format_double(res.wall_ms_bfd));
    if (cfg.method_syn) {
        kv("dist_bfd_syn", csv_format_double(res.dist_bfd_syn));
        kv("wall_ms_syn", csv_format_double(res.wall_ms_syn));
        kv("iters_syn", std::to_string(res.iters_syn));
    }
    if (cfg.method_ana) {
        kv("dist_bfd_ana", csv_format_double(res.dist_bfd_ana));
        kv("wall_ms_ana", csv_format_double(res.wall_ms_ana));
        kv("iters_ana", std::to_string(res.iters_ana));
    }
    if (cfg.method_syn && cfg.method_ana)
        kv("dist_syn_ana", csv_format_double(res.dist_syn_ana));
    kv("expect", cfg.expect);
    kv("expectation_met", res.expectation_met ? "1" : "0");
    res.report_path = cfg.out_dir + "/compare.csv";
    write_csv(res.report_path, t);
    return res;
}

ReconstructResult run_reconstruct(const ExperimentConfig& cfg) {
    Problem p = make_problem(cfg);
    const double delta = cfg.compare_delta;
    const double alpha = alpha_for(cfg, delta);
    const std::uint64_t sd = mix_seed(cfg.seed, kSeedReconstruct);

    std::filesystem::create_directories(cfg.out_dir);
    ReconstructResult res;
    res.out_dir = cfg.out_dir;
    const Image xb = p.estimate(delta, sd, alpha);
    res.err_bfd = norm(image_diff(xb, p.ph.x));

    save_image(cfg.out_dir + "/x_true.bfda", p.ph.x);
    save_image(cfg.out_dir + "/x_bfd.bfda", xb);
    if (p.diag)
        save_image(cfg.out_dir + "/data.bfda", add_noise_image(p.y0_img, delta, sd));
    else
        save_sinogram(cfg.out_dir + "/data.bfda", add_noise(p.y0_sino, delta, sd));

    CsvTable t;
    t.header = {"metric", "value"};
    t.rows.push_back({"delta", csv_format_double(delta)});
    t.rows.push_back({"alpha", csv_format_double(alpha)});
    t.rows.push_back({"err_bfd", csv_format_double(res.err_bfd)});
    t.rows.push_back({"x_norm", csv_format_double(norm(p.ph.x))});
    write_csv(cfg.out_dir + "/reconstruct.csv", t);
    return res;
}

int selftest(const ExperimentConfig& cfg, bool inject_bug, std::ostream& out) {
    ExperimentConfig c = cfg;
    c.inject_bug = cfg.inject_bug || inject_bug;
    int failures = 0;
    auto check = [&](const char* name, double measured, double tol) {
        const bool ok = measured <= tol;
        if (!ok) ++failures;
        out << (ok ? "ok   " : "FAIL ") << name << "  measured=" << measured
            << "  tol=" << tol << "\n";
    };

    const BfdSystem sys = build_system(c);
    const FrameSpec& f = sys.frame;
    Rng rng(mix_seed(c.seed, 7));

    {  // frame is Parseval and self-dual
        Image x(f.width, f.height, f.spacing);
        for (double& v : x.values) v = rng.gaussian();
        const CoeffSeq xi = analysis(f, x);
        check("frame_parseval", std::abs(norm(xi) - norm(x)) / norm(x), 1e-10);
        const Image back = synthesis(f, xi);
        check("frame_reconstruction", norm(image_diff(back, x)) / norm(x), 1e-10);
        check("frame_adjointness", adjoint_check(f, 3, mix_seed(c.seed, 8)), 1e-10);
    }

    {  // forward/adjoint exact pairing
        const LinOp a = forward_linop(sys);
        Rng r2(mix_seed(c.seed, 9));
        std::vector<double> x(a.domain_size), y(a.range_size);
        for (double& v : x) v = r2.gaussian();
        for (double& v : y) v = r2.gaussian();
        const std::vector<double> ax = a.apply(x);
        const std::vector<double> aty = a.apply_adjoint(y);
        double lhs = 0.0, rhs = 0.0, nx = 0.0, ny = 0.0;
        for (std::size_t i = 0; i < ax.size(); ++i) lhs += ax[i] * y[i];
        for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * aty[i];
        for (double v : x) nx += v * v;
        for (double v : y) ny += v * v;
        lhs *= a.range_measure;
        rhs *= a.domain_measure;
        const double den = std::sqrt(nx * a.domain_measure) * std::sqrt(ny * a.range_measure);
        check("operator_adjointness", std::abs(lhs - rhs) / den, 1e-10);
    }

    {  // the decomposition identity the estimator rests on; the injected bug
       // flips one kappa sign and must trip this check
        const double tol = c.op == OperatorKind::radon ? 5e-2 : 1e-8;
        const D3Report rep = validate_bfd(sys, 2, mix_seed(c.seed, 10));
        check("decomposition_identity", rep.max_residual, tol);
    }

    {  // alpha = 0 degenerates to the reproducing formula
        const Phantom ph = make_phantom(c.phantom, sys, mix_seed(c.seed, 11));
        if (c.op == OperatorKind::diagonal) {
            const Image y = apply_forward_diag(sys, ph.x);
            check("estimate_alpha0_reproduces",
                  norm(image_diff(bfd_estimate_diag(sys, y, 0.0), reproduce_diag(sys, y))),
                  1e-12);
        } else {
            const Sinogram y = apply_forward(sys, ph.x);
            check("estimate_alpha0_reproduces",
                  norm(image_diff(bfd_estimate(sys, y, 0.0), reproduce(sys, y))), 1e-12);
        }
    }

    {  // closed form for pointwise multipliers against the iterative solver
        const std::vector<double> kappa = {1.0, 0.5, 0.25, 0.8, 0.05};
        const std::vector<double> eta = {1.0, 0.4, -0.9, 0.02, 0.3};
        Weights d;
        d.entries = {1.0, 1.0, 0.7, 1.3, 1.0};
        const double alpha = 0.1;
        LinOp op;
        op.domain_size = op.range_size = kappa.size();
        op.apply = [kappa](const std::vector<double>& v) {
            std::vector<double> o(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) o[i] = kappa[i] * v[i];
            return o;
        };
        op.apply_adjoint = op.apply;
        SolverConfig sc;
        sc.max_iters = 20000;
        sc.tol = 1e-14;
        const SolverResult ista = synthesis_l1(op, eta, alpha, d, sc);
        const std::vector<double> closed = diag_closed_form(kappa, eta, alpha, d);
        double dist = 0.0;
        for (std::size_t i = 0; i < closed.size(); ++i)
            dist = std::max(dist, std::abs(closed[i] - ista.x[i]));
        check("multiplier_closed_form_vs_ista", dist, 1e-8);
    }

    return failures;
}

void render_loglog_pgm(const std::string& path, const std::vector<double>& xs,
                       const std::vector<double>& ys, int width, int height) {
    if (xs.size() != ys.size() || xs.empty())
        throw std::invalid_argument("render_loglog_pgm: need matching nonempty series");
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
            throw std::invalid_argument("render_loglog_pgm: log axes need positive values");
    std::vector<unsigned char> pix(static_cast<std::size_t>(width) * height, 255);
    auto put = [&](int x, int y, unsigned char v) {
        if (x >= 0 && x < width && y >= 0 && y < height)
            pix[static_cast<std::size_t>(y) * width + x] = v;
    };
    const int mL = 48, mR = 16, mT = 16, mB = 36;
    double lx0 = std::log10(xs[0]), lx1 = lx0, ly0 = std::log10(ys[0]), ly1 = ly0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        lx0 = std::min(lx0, std::log10(xs[i]));
        lx1 = std::max(lx1, std::log10(xs[i]));
        ly0 = std::min(ly0, std::log10(ys[i]));
        ly1 = std::max(ly1, std::log10(ys[i]));
    }
    if (lx1 - lx0 < 1e-9) lx1 = lx0 + 1.0;
    if (ly1 - ly0 < 1e-9) ly1 = ly0 + 1.0;
    const double padx = 0.05 * (lx1 - lx0), pady = 0.05 * (ly1 - ly0);
    lx0 -= padx;
    lx1 += padx;
    ly0 -= pady;
    ly1 += pady;
    auto px = [&](double lx) {
        return mL + static_cast<int>((lx - lx0) / (lx1 - lx0) * (width - mL - mR) + 0.5);
    };
    auto py = [&](double ly) {
        return height - mB -
               static_cast<int>((ly - ly0) / (ly1 - ly0) * (height - mT - mB) + 0.5);
    };
    // frame box
    for (int x = mL; x <= width - mR; ++x) {
        put(x, mT, 0);
        put(x, height - mB, 0);
    }
    for (int y = mT; y <= height - mB; ++y) {
        put(mL, y, 0);
        put(width - mR, y, 0);
    }
    // decade grid lines
    for (int d = static_cast<int>(std::ceil(lx0)); d <= static_cast<int>(std::floor(lx1)); ++d)
        for (int y = mT; y <= height - mB; ++y) put(px(d), y, 200);
    for (int d = static_cast<int>(std::ceil(ly0)); d <= static_cast<int>(std::floor(ly1)); ++d)
        for (int x = mL; x <= width - mR; ++x) put(x, py(d), 200);
    // polyline with square markers
    auto line = [&](int x0, int y0, int x1, int y1) {
        const int steps = std::max(std::abs(x1 - x0), std::abs(y1 - y0));
        for (int s = 0; s <= steps; ++s) {
            const double t = steps == 0 ? 0.0 : static_cast<double>(s) / steps;
            put(static_cast<int>(x0 + t * (x1 - x0) + 0.5),
                static_cast<int>(y0 + t * (y1 - y0) + 0.5), 0);
        }
    };
    std::vector<std::pair<int, int>> pts;
    for (std::size_t i = 0; i < xs.size(); ++i)
        pts.emplace_back(px(std::log10(xs[i])), py(std::log10(ys[i])));
    std::sort(pts.begin(), pts.end());
    for (std::size_t i = 1; i < pts.size(); ++i)
        line(pts[i - 1].first, pts[i - 1].second, pts[i].first, pts[i].second);
    for (const auto& [x, y] : pts)
        for (int dy = -2; dy <= 2; ++dy)
            for (int dx = -2; dx <= 2; ++dx) put(x + dx, y + dy, 0);

    std::ofstream outf(path, std::ios::binary);
    if (!outf) throw std::runtime_error(path + ": cannot open for writing");
    outf << "P5\n" << width << " " << height << "\n255\n";
    outf.write(reinterpret_cast<const char*>(pix.data()), static_cast<std::streamsize>(pix.size()));
    if (!outf) throw std::runtime_error(path + ": write failed");
}

}  // namespace bfdreg
