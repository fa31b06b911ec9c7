#include "bfdreg/l1reg.hpp"

#include <algorithm>
#include <cmath>

#include "bfdreg/io.hpp"
#include "bfdreg/rng.hpp"

namespace bfdreg {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double nrm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

Image to_image(const FrameSpec& f, const std::vector<double>& v) {
    Image x(f.width, f.height, f.spacing);
    x.values = v;
    return x;
}

void check_sizes(const LinOp& op, const std::vector<double>& y, const Weights& d,
                 std::size_t dsize, double alpha) {
    if (y.size() != op.range_size) throw std::invalid_argument("solver: data size mismatch");
    if (d.size() != dsize) throw std::invalid_argument("solver: weight count mismatch");
    if (!(alpha >= 0.0)) throw std::invalid_argument("solver: alpha must be >= 0");
}

struct TraceWriter {
    CsvTable table;
    std::string path;
    explicit TraceWriter(const std::string& p) : path(p) {
        if (!path.empty()) table.header = {"iter", "objective", "fp_residual"};
    }
    void row(int iter, double obj, double res) {
        if (path.empty()) return;
        table.rows.push_back({csv_format_double(iter), csv_format_double(obj),
                              csv_format_double(res)});
    }
    void flush() const {
        if (!path.empty()) write_csv(path, table);
    }
};

}  // namespace

LinOp forward_linop(const BfdSystem& sys) {
    LinOp op;
    const FrameSpec f = sys.frame;
    op.domain_size = static_cast<std::size_t>(f.width) * f.height;
    op.domain_measure = f.spacing * f.spacing;
    switch (sys.op) {
        case OperatorKind::radon: {
            const RadonGeometry g = sys.radon;
            const Sinogram proto = g.make_sinogram();
            op.range_size = proto.size();
            op.range_measure = proto.row_spacing * proto.offset_spacing;
            op.apply = [g, f](const std::vector<double>& v) {
                Image x(f.width, f.height, f.spacing);
                x.values = v;
                return radon_forward(g, x).values;
            };
            op.apply_adjoint = [g, f, proto](const std::vector<double>& v) {
                Sinogram s = proto;
                s.values = v;
                return radon_adjoint(g, s, f.width, f.height, f.spacing).values;
            };
            break;
        }
        case OperatorKind::wave: {
            auto wop = sys.wop;
            const WaveGeometry g = sys.wave;
            op.range_size = static_cast<std::size_t>(g.nx) * g.nt;
            op.range_measure = g.spacing * g.dt;
            op.apply = [wop, f](const std::vector<double>& v) {
                Image x(f.width, f.height, f.spacing);
                x.values = v;
                return wop->forward(x).values;
            };
            op.apply_adjoint = [wop, g](const std::vector<double>& v) {
                Sinogram s(g.nx, g.nt, g.dt, g.spacing);
                s.values = v;
                return wop->adjoint(s).values;
            };
            break;
        }
        case OperatorKind::diagonal: {
            op.range_size = op.domain_size;
            op.range_measure = op.domain_measure;
            const std::vector<double> mask = sys.mask;
            auto mul = [mask](const std::vector<double>& v) {
                std::vector<double> out(v.size());
                for (std::size_t i = 0; i < v.size(); ++i) out[i] = mask[i] * v[i];
                return out;
            };
            op.apply = mul;
            op.apply_adjoint = mul;
            break;
        }
    }
    return op;
}

LinOp synthesis_linop(const BfdSystem& sys) {
    const LinOp a = forward_linop(sys);
    const FrameSpec f = sys.frame;
    LinOp op;
    op.domain_size = f.lambda_count();
    op.domain_measure = 1.0;
    op.range_size = a.range_size;
    op.range_measure = a.range_measure;
    op.apply = [a, f](const std::vector<double>& v) {
        CoeffSeq xi;
        xi.frame_id = f.id();
        xi.entries = v;
        return a.apply(synthesis(f, xi).values);
    };
    op.apply_adjoint = [a, f](const std::vector<double>& v) {
        return analysis(f, to_image(f, a.apply_adjoint(v))).entries;
    };
    return op;
}

OperatorNormEstimate power_method(const LinOp& op, int iters, std::uint64_t seed) {
    if (iters < 1) throw std::invalid_argument("power_method: iters must be >= 1");
    Rng rng(seed);
    std::vector<double> v(op.domain_size);
    for (double& e : v) e = rng.gaussian();
    const double n0 = nrm(v);
    for (double& e : v) e /= n0;
    OperatorNormEstimate est;
    for (int k = 0; k < iters; ++k) {
        // <K*K v, v> / <v, v> equals ||Kv||_Y^2 / ||v||_X^2; measures cancel
        const std::vector<double> u = op.apply_adjoint(op.apply(v));
        const double vv = dot(v, v);
        const double val = std::sqrt(std::max(0.0, dot(u, v) / vv));
        est.rel_change = std::abs(val - est.value) / std::max(val, 1e-300);
        est.value = val;
        est.iters = k + 1;
        const double un = nrm(u);
        if (un < 1e-300) return est;  // operator annihilated the probe
        v = u;
        for (double& e : v) e /= un;
    }
    return est;
}

namespace {

double auto_step(const LinOp& k, double requested) {
    if (requested > 0.0) return requested;
    const double L = power_method(k).value;
    if (L < 1e-150) return -1.0;  // zero operator: minimizer is 0
    return 0.95 / (L * L);
}

}  // namespace

SolverResult synthesis_l1(const LinOp& aw, const std::vector<double>& y, double alpha,
                          const Weights& d, const SolverConfig& cfg) {
    check_sizes(aw, y, d, aw.domain_size, alpha);
    SolverResult res;
    res.x.assign(aw.domain_size, 0.0);
    const double t = auto_step(aw, cfg.step);
    if (t < 0.0) {
        res.converged = true;
        res.objective = objective_synthesis(aw, y, res.x, alpha, d);
        return res;
    }
    TraceWriter trace(cfg.trace_path);
    std::vector<double> xi(aw.domain_size, 0.0), xi_prev(xi), z(xi);
    double tk = 1.0;
    const bool fista = cfg.accel == Acceleration::fista;
    for (int it = 0; it < cfg.max_iters; ++it) {
        const std::vector<double>& anchor = fista ? z : xi;
        std::vector<double> r = aw.apply(anchor);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
        const std::vector<double> grad = aw.apply_adjoint(r);
        std::vector<double> next(anchor.size());
        for (std::size_t i = 0; i < next.size(); ++i)
            next[i] = soft(anchor[i] - t * grad[i], t * alpha * d.entries[i]);
        // fixed-point residual at the anchor point
        double diff2 = 0.0;
        for (std::size_t i = 0; i < next.size(); ++i) {
            const double dd = next[i] - anchor[i];
            diff2 += dd * dd;
        }
        res.fp_residual = std::sqrt(diff2) / std::max(1.0, nrm(anchor));
        res.iters = it + 1;
        xi_prev.swap(xi);
        xi = std::move(next);
        if (fista) {
            const double tnext = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
            z = xi;
            const double mom = (tk - 1.0) / tnext;
            for (std::size_t i = 0; i < z.size(); ++i) z[i] += mom * (xi[i] - xi_prev[i]);
            tk = tnext;
        }
        if (!trace.path.empty())
            trace.row(res.iters, objective_synthesis(aw, y, xi, alpha, d), res.fp_residual);
        if (res.fp_residual <= cfg.tol) {
            res.converged = true;
            break;
        }
    }
    res.x = xi;
    res.objective = objective_synthesis(aw, y, res.x, alpha, d);
    trace.flush();
    return res;
}

SolverResult analysis_l1(const LinOp& a, const FrameSpec& frame, const std::vector<double>& y,
                         double alpha, const Weights& d, const SolverConfig& cfg) {
    check_sizes(a, y, d, frame.lambda_count(), alpha);
    if (a.domain_size != static_cast<std::size_t>(frame.width) * frame.height)
        throw std::invalid_argument("analysis_l1: operator domain does not match frame grid");
    SolverResult res;
    res.x.assign(a.domain_size, 0.0);
    const double L = cfg.step > 0.0 ? 0.0 : power_method(a).value;
    double tau, sigma;
    if (cfg.step > 0.0) {
        tau = sigma = cfg.step;
    } else {
        // sigma = tau with tau^2 + tau L^2/2 = 0.95 < 1, which satisfies the
        // primal-dual step condition 1/tau >= sigma ||U||^2 + L^2/2 (||U|| = 1)
        const double half = 0.5 * L * L;
        tau = sigma = 0.5 * (-half + std::sqrt(half * half + 4.0 * 0.95));
    }
    TraceWriter trace(cfg.trace_path);
    std::vector<double> x(a.domain_size, 0.0), s(frame.lambda_count(), 0.0);
    for (int it = 0; it < cfg.max_iters; ++it) {
        std::vector<double> r = a.apply(x);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
        const std::vector<double> grad = a.apply_adjoint(r);
        CoeffSeq sc;
        sc.frame_id = frame.id();
        sc.entries = s;
        const std::vector<double> us = synthesis(frame, sc).values;
        std::vector<double> xn(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) xn[i] = x[i] - tau * (grad[i] + us[i]);
        Image probe(frame.width, frame.height, frame.spacing);
        for (std::size_t i = 0; i < x.size(); ++i) probe.values[i] = 2.0 * xn[i] - x[i];
        const std::vector<double> ux = analysis(frame, probe).entries;
        std::vector<double> sn(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double cap = alpha * d.entries[i];
            sn[i] = std::clamp(s[i] + sigma * ux[i], -cap, cap);
        }
        double dx = 0.0, ds = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double e = xn[i] - x[i];
            dx += e * e;
        }
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double e = sn[i] - s[i];
            ds += e * e;
        }
        res.fp_residual = std::max(std::sqrt(dx) / std::max(1.0, nrm(x)),
                                   std::sqrt(ds) / std::max(1.0, nrm(s)));
        res.iters = it + 1;
        x.swap(xn);
        s.swap(sn);
        if (!trace.path.empty())
            trace.row(res.iters, objective_analysis(a, frame, y, x, alpha, d), res.fp_residual);
        if (res.fp_residual <= cfg.tol) {
            res.converged = true;
            break;
        }
    }
    res.x = x;
    res.objective = objective_analysis(a, frame, y, res.x, alpha, d);
    trace.flush();
    return res;
}

std::vector<double> diag_closed_form(const std::vector<double>& kappa,
                                     const std::vector<double>& eta, double alpha,
                                     const Weights& d) {
    if (kappa.size() != eta.size() || d.size() != eta.size())
        throw std::invalid_argument("diag_closed_form: size mismatch");
    if (!(alpha >= 0.0)) throw std::invalid_argument("diag_closed_form: alpha must be >= 0");
    std::vector<double> xi(eta.size());
    for (std::size_t i = 0; i < eta.size(); ++i)
        xi[i] = kappa[i] != 0.0
                    ? soft(eta[i], alpha * d.entries[i] / std::abs(kappa[i])) / kappa[i]
                    : 0.0;
    return xi;
}

double objective_synthesis(const LinOp& aw, const std::vector<double>& y,
                           const std::vector<double>& xi, double alpha, const Weights& d) {
    std::vector<double> r = aw.apply(xi);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
    double pen = 0.0;
    for (std::size_t i = 0; i < xi.size(); ++i) pen += d.entries[i] * std::abs(xi[i]);
    return 0.5 * aw.range_measure * dot(r, r) + alpha * pen;
}

double objective_analysis(const LinOp& a, const FrameSpec& frame, const std::vector<double>& y,
                          const std::vector<double>& x, double alpha, const Weights& d) {
    std::vector<double> r = a.apply(x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
    const std::vector<double> xi = analysis(frame, to_image(frame, x)).entries;
    double pen = 0.0;
    for (std::size_t i = 0; i < xi.size(); ++i) pen += d.entries[i] * std::abs(xi[i]);
    return 0.5 * a.range_measure * dot(r, r) + alpha * pen;
}

double objective_diag(const std::vector<double>& kappa, const std::vector<double>& eta,
                      const std::vector<double>& xi, double alpha, const Weights& d) {
    double fid = 0.0, pen = 0.0;
    for (std::size_t i = 0; i < eta.size(); ++i) {
        const double r = kappa[i] * xi[i] - eta[i];
        fid += r * r;
        pen += d.entries[i] * std::abs(xi[i]);
    }
    return 0.5 * fid + alpha * pen;
}

}  // namespace bfdreg
