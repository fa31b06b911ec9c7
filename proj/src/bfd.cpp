#include "bfdreg/bfd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bfdreg/rng.hpp"

namespace bfdreg {

namespace {

// smallest positive weight accepted as "bounded away from zero"
constexpr double kWeightFloor = std::numeric_limits<double>::denorm_min();

std::vector<double> scale_kappa(const FrameSpec& f) {
    const std::vector<int> js = scales_of(f);
    std::vector<double> kappa(js.size());
    for (std::size_t i = 0; i < js.size(); ++i) kappa[i] = std::exp2(-0.5 * js[i]);
    return kappa;
}

CoeffSeq mpi_coeffs(const BfdSystem& sys, const CoeffSeq& eta) {
    CoeffSeq xi = eta;
    for (std::size_t i = 0; i < xi.entries.size(); ++i)
        xi.entries[i] = sys.kappa[i] != 0.0 ? xi.entries[i] / sys.kappa[i] : 0.0;
    return xi;
}

Image divide_by_mask(const BfdSystem& sys, const Image& y) {
    Image out = y;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] /= sys.mask[i];
    return out;
}

}  // namespace

Weights make_weights(const FrameSpec& f, const WeightRule& rule) {
    if (!(rule.c > 0.0)) throw std::invalid_argument("make_weights: c must be positive");
    const std::vector<int> js = scales_of(f);
    Weights d;
    d.entries.resize(js.size());
    for (std::size_t i = 0; i < js.size(); ++i)
        d.entries[i] = rule.c * std::exp2(rule.gamma * js[i]);
    d.validate(kWeightFloor);
    return d;
}

BfdSystem make_radon_bfd(const RadonGeometry& g, const FrameSpec& f, const Weights& d) {
    g.validate();
    f.validate();
    if (d.size() != f.lambda_count())
        throw std::invalid_argument("make_radon_bfd: weight count mismatch");
    d.validate(kWeightFloor);
    BfdSystem sys;
    sys.op = OperatorKind::radon;
    sys.frame = f;
    sys.radon = g;
    sys.kappa = scale_kappa(f);
    sys.d = d;
    return sys;
}

BfdSystem make_wave_bfd(const WaveGeometry& g, const FrameSpec& f, const Weights& d) {
    g.validate();
    f.validate();
    if (f.width != g.nx || f.height != g.ny || f.spacing != g.spacing)
        throw std::invalid_argument("make_wave_bfd: frame grid does not match geometry");
    if (d.size() != f.lambda_count())
        throw std::invalid_argument("make_wave_bfd: weight count mismatch");
    d.validate(kWeightFloor);
    BfdSystem sys;
    sys.op = OperatorKind::wave;
    sys.frame = f;
    sys.wave = g;
    // the trace operator is a partial isometry; with u = A^*A w and v = A w
    // the identity A^* v = kappa u holds exactly at kappa = 1
    sys.wop = wave_operator(g);
    sys.kappa.assign(f.lambda_count(), 1.0);
    sys.d = d;
    return sys;
}

BfdSystem make_diagonal_bfd(const std::vector<double>& mask, const FrameSpec& f,
                            const Weights& d) {
    f.validate();
    const std::size_t n = static_cast<std::size_t>(f.width) * f.height;
    if (mask.size() != n) throw std::invalid_argument("make_diagonal_bfd: mask size mismatch");
    if (d.size() != f.lambda_count())
        throw std::invalid_argument("make_diagonal_bfd: weight count mismatch");
    d.validate(kWeightFloor);
    for (double m : mask)
        if (!std::isfinite(m)) throw std::invalid_argument("make_diagonal_bfd: non-finite mask");
    BfdSystem sys;
    sys.op = OperatorKind::diagonal;
    sys.frame = f;
    sys.mask = mask;
    sys.d = d;
    if (f.kind == FrameKind::identity) {
        sys.kappa = mask;  // zeros allowed: they become kappa zeros
        return sys;
    }
    // v_lambda = kappa_lambda A^{-1} u_lambda needs every atom materialized to
    // normalize; keep that honest by restricting to small grids
    if (n > 4096)
        throw std::invalid_argument(
            "make_diagonal_bfd: non-identity frames are limited to grids of at most 4096 pixels");
    for (double m : mask)
        if (m == 0.0)
            throw std::invalid_argument(
                "make_diagonal_bfd: non-identity frames need a nonvanishing mask");
    const std::size_t count = f.lambda_count();
    sys.kappa.resize(count);
    CoeffSeq unit;
    unit.frame_id = f.id();
    unit.entries.assign(count, 0.0);
    for (std::size_t i = 0; i < count; ++i) {
        unit.entries[i] = 1.0;
        Image atom = synthesis(f, unit);
        unit.entries[i] = 0.0;
        for (std::size_t p = 0; p < n; ++p) atom.values[p] /= mask[p];
        const double nrm = norm(atom);
        if (!(nrm > 0.0))
            throw std::invalid_argument("make_diagonal_bfd: frame atom vanished under the mask");
        sys.kappa[i] = 1.0 / nrm;
    }
    return sys;
}

Sinogram apply_forward(const BfdSystem& sys, const Image& x) {
    switch (sys.op) {
        case OperatorKind::radon:
            return radon_forward(sys.radon, x);
        case OperatorKind::wave:
            return sys.wop->forward(x);
        default:
            throw std::invalid_argument("apply_forward: diagonal systems produce image data");
    }
}

Image apply_forward_diag(const BfdSystem& sys, const Image& x) {
    if (sys.op != OperatorKind::diagonal)
        throw std::invalid_argument("apply_forward_diag: system is not diagonal");
    if (x.width != sys.frame.width || x.height != sys.frame.height)
        throw std::invalid_argument("apply_forward_diag: shape mismatch");
    Image out = x;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] *= sys.mask[i];
    return out;
}

CoeffSeq bfd_coefficients(const BfdSystem& sys, const Sinogram& y) {
    switch (sys.op) {
        case OperatorKind::radon: {
            const Image rec = fbp(sys.radon, y, sys.frame.width, sys.frame.height,
                                  sys.frame.spacing);
            CoeffSeq eta = analysis(sys.frame, rec);
            for (std::size_t i = 0; i < eta.entries.size(); ++i) eta.entries[i] *= sys.kappa[i];
            return eta;
        }
        case OperatorKind::wave:
            return analysis(sys.frame, sys.wop->adjoint(y));
        default:
            throw std::invalid_argument("bfd_coefficients: diagonal systems take image data");
    }
}

CoeffSeq bfd_coefficients_diag(const BfdSystem& sys, const Image& y) {
    if (sys.op != OperatorKind::diagonal)
        throw std::invalid_argument("bfd_coefficients_diag: system is not diagonal");
    if (sys.frame.kind == FrameKind::identity) return analysis(sys.frame, y);
    CoeffSeq eta = analysis(sys.frame, divide_by_mask(sys, y));
    for (std::size_t i = 0; i < eta.entries.size(); ++i) eta.entries[i] *= sys.kappa[i];
    return eta;
}

Image reproduce(const BfdSystem& sys, const Sinogram& y) {
    Image out = synthesis(sys.frame, mpi_coeffs(sys, bfd_coefficients(sys, y)));
    // wave: the u-system is the projected frame, so synthesis ends in its span
    if (sys.op == OperatorKind::wave) out = sys.wop->project_visible(out);
    return out;
}

Image reproduce_diag(const BfdSystem& sys, const Image& y) {
    return synthesis(sys.frame, mpi_coeffs(sys, bfd_coefficients_diag(sys, y)));
}

double soft(double x, double t) {
    const double m = std::abs(x) - t;
    return m > 0.0 ? (x < 0.0 ? -m : m) : 0.0;
}

CoeffSeq soft_vec(const CoeffSeq& xi, const std::vector<double>& thresholds) {
    if (thresholds.size() != xi.entries.size())
        throw std::invalid_argument("soft_vec: threshold count mismatch");
    CoeffSeq out = xi;
    for (std::size_t i = 0; i < out.entries.size(); ++i) {
        if (!(thresholds[i] >= 0.0))
            throw std::invalid_argument("soft_vec: thresholds must be >= 0");
        out.entries[i] = soft(out.entries[i], thresholds[i]);
    }
    return out;
}

namespace {

Image estimate_from_eta(const BfdSystem& sys, CoeffSeq eta, double alpha) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("bfd_estimate: alpha must be >= 0");
    for (std::size_t i = 0; i < eta.entries.size(); ++i)
        eta.entries[i] = soft(eta.entries[i], alpha * sys.d.entries[i]);
    Image out = synthesis(sys.frame, mpi_coeffs(sys, eta));
    if (sys.op == OperatorKind::wave) out = sys.wop->project_visible(out);
    return out;
}

}  // namespace

Image bfd_estimate(const BfdSystem& sys, const Sinogram& y, double alpha) {
    return estimate_from_eta(sys, bfd_coefficients(sys, y), alpha);
}

Image bfd_estimate_diag(const BfdSystem& sys, const Image& y, double alpha) {
    return estimate_from_eta(sys, bfd_coefficients_diag(sys, y), alpha);
}

D3Report validate_bfd(const BfdSystem& sys, int probes, std::uint64_t seed, int max_scale) {
    if (probes < 1) throw std::invalid_argument("validate_bfd: probes must be >= 1");
    const FrameSpec& f = sys.frame;
    if (max_scale < 0)
        max_scale = sys.op == OperatorKind::radon ? std::min(3, f.levels - 1)
                                                  : f.levels;  // everything
    const std::vector<int> js = scales_of(f);
    Rng rng(seed);
    D3Report rep;
    rep.probes = probes;
    for (int p = 0; p < probes; ++p) {
        Image x(f.width, f.height, f.spacing);
        for (double& v : x.values) v = rng.gaussian();
        if (sys.op == OperatorKind::radon) {
            // keep probes inside the reliable region of the inversion formula
            for (int iy = 0; iy < x.height; ++iy)
                for (int ix = 0; ix < x.width; ++ix) {
                    const double cx = -1.0 + (ix + 0.5) * x.spacing;
                    const double cy = -1.0 + (iy + 0.5) * x.spacing;
                    if (cx * cx + cy * cy > 0.9025) x.at(ix, iy) = 0.0;
                }
        }
        const double nx = norm(x);
        if (nx == 0.0) continue;
        for (double& v : x.values) v /= nx;

        CoeffSeq lhs;
        if (sys.op == OperatorKind::diagonal)
            lhs = bfd_coefficients_diag(sys, apply_forward_diag(sys, x));
        else
            lhs = bfd_coefficients(sys, apply_forward(sys, x));
        // wave: <u_lambda, x> = <w_lambda, P x> through the spectral projector,
        // while the lhs went through the time-domain forward/adjoint pair
        const CoeffSeq rhs =
            analysis(f, sys.op == OperatorKind::wave ? sys.wop->project_visible(x) : x);
        for (std::size_t i = 0; i < lhs.entries.size(); ++i) {
            if (js[i] > max_scale) continue;
            const double r = std::abs(lhs.entries[i] - sys.kappa[i] * rhs.entries[i]);
            rep.max_residual = std::max(rep.max_residual, r);
        }
    }
    return rep;
}

RateConditions check_rate_conditions(const BfdSystem& sys, const Image& x_plus,
                                     std::optional<double> tol, double sparse_cap) {
    const CoeffSeq xi = analysis(
        sys.frame, sys.op == OperatorKind::wave ? sys.wop->project_visible(x_plus) : x_plus);
    double amax = 0.0;
    for (double v : xi.entries) amax = std::max(amax, std::abs(v));
    RateConditions rc;
    rc.tol = tol.value_or(1e-8 * amax);
    const std::vector<std::size_t> supp = support_indices(xi, rc.tol);
    rc.support_size = supp.size();
    rc.sparse = supp.size() <= static_cast<std::size_t>(sparse_cap * xi.entries.size());
    rc.kappa_nonzero = true;
    std::vector<char> on(xi.entries.size(), 0);
    for (std::size_t i : supp) {
        on[i] = 1;
        if (sys.kappa[i] == 0.0) rc.kappa_nonzero = false;
    }
    rc.t_off = 0.0;
    for (std::size_t i = 0; i < xi.entries.size(); ++i)
        if (!on[i]) rc.t_off = std::max(rc.t_off, std::abs(sys.kappa[i]));
    return rc;
}

}  // namespace bfdreg
