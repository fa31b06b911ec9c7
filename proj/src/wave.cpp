#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "bfdreg/fft.hpp"
#include "bfdreg/operators.hpp"

namespace bfdreg {

namespace {

constexpr double kPi = 3.141592653589793238462643383279503;

double depth(const WaveGeometry& g, int m) { return (m + 0.5) * g.spacing; }
double time_at(const WaveGeometry& g, int n) { return (n + 0.5) * g.dt; }

}  // namespace

void WaveGeometry::validate() const {
    if (nx < 2 || !is_pow2(nx))
        throw std::invalid_argument("WaveGeometry: nx must be a power of two >= 2");
    if (ny < 1) throw std::invalid_argument("WaveGeometry: ny must be >= 1");
    if (nt < ny) throw std::invalid_argument("WaveGeometry: nt must be >= ny");
    if (!(spacing > 0.0) || !(dt > 0.0))
        throw std::invalid_argument("WaveGeometry: spacing and dt must be positive");
}

WaveGeometry WaveGeometry::for_slab(int nx, int ny, double spacing) {
    WaveGeometry g;
    g.nx = nx;
    g.ny = ny;
    g.spacing = spacing;
    g.nt = 4 * ny;
    g.dt = 0.5 * spacing;
    g.validate();
    return g;
}

WaveOperator::WaveOperator(const WaveGeometry& g) : geom_(g) {
    g.validate();
    const int ny = g.ny, nt = g.nt;
    const double hy = g.spacing, hx = g.spacing, dt = g.dt;
    const double Ly = ny * hy, T = nt * dt;
    const double K = kPi / hy;  // depth-frequency band limit
    // midpoint quadrature in the depth frequency; fine enough that the fastest
    // oscillation kappa*y + omega*t advances at most ~pi/4 per step
    const int nk = std::max(16, static_cast<int>(std::ceil(4.0 * (Ly + T) / hy)));
    const double dk = K / nk;

    Eigen::MatrixXd Cy(nk, ny), Ct(nk, nt);
    for (int p = 0; p < nk; ++p) {
        const double kappa = (p + 0.5) * dk;
        for (int m = 0; m < ny; ++m) Cy(p, m) = std::cos(kappa * depth(g, m));
    }

    min_sigma_ = 1e300;
    blocks_.resize(static_cast<std::size_t>(g.nx / 2 + 1));
    proj_.resize(blocks_.size());
    hidden_.assign(blocks_.size(), 0);
    Eigen::MatrixXd B(nt, ny), S(ny, ny), Q(nt, ny), P(ny, ny);
    for (int q = 0; q <= g.nx / 2; ++q) {
        const double kx = 2.0 * kPi * q / (g.nx * hx);
        for (int p = 0; p < nk; ++p) {
            const double omega = std::hypot(kx, (p + 0.5) * dk);
            for (int n = 0; n < nt; ++n) Ct(p, n) = std::cos(omega * time_at(g, n));
        }
        // raw dispersion map.  The physical kernel is
        //   g(t_n) = t_n^-1/2 (2/pi) sum_p dk cos(w_p t_n) sum_m hy sqrt(y_m) cos(k_p y_m) f_m
        // and the row/column scaling below absorbs the sqrt(dt/hy) measure
        // ratio, so a perfectly isometric kernel would give orthonormal columns.
        B.noalias() = Ct.transpose() * Cy;
        for (int n = 0; n < nt; ++n) {
            const double wt = std::sqrt(dt / time_at(g, n)) * (2.0 / kPi) * dk * std::sqrt(hy);
            for (int m = 0; m < ny; ++m) B(n, m) *= wt * std::sqrt(depth(g, m));
        }
        // Truncated Loewdin polish: Q = B V max(L, cutoff)^(-1/2)|_kept V^T.
        // Eigenvalues of B^T B decay exponentially along grazing directions
        // (the mode never arrives within the window), so directions below the
        // relative cutoff are zeroed rather than blown up; the kept ones are
        // bent to exact orthonormality.
        S.noalias() = B.transpose() * B;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("WaveOperator: eigensolve failed");
        const Eigen::VectorXd& lam = es.eigenvalues();
        if (!(lam(ny - 1) > 0.0))
            throw std::runtime_error("WaveOperator: dispersion block vanished");
        Eigen::VectorXd rs(ny), kept(ny);
        int hid = 0;
        for (int i = 0; i < ny; ++i) {
            if (lam(i) > 1e-10 * lam(ny - 1)) {
                rs(i) = 1.0 / std::sqrt(lam(i));
                kept(i) = 1.0;
                min_sigma_ = std::min(min_sigma_, std::sqrt(lam(i)));
            } else {
                rs(i) = 0.0;
                kept(i) = 0.0;
                ++hid;
            }
        }
        hidden_[static_cast<std::size_t>(q)] = hid;
        Q.noalias() = B * es.eigenvectors() * rs.asDiagonal() * es.eigenvectors().transpose();
        P.noalias() = es.eigenvectors() * kept.asDiagonal() * es.eigenvectors().transpose();
        auto& blk = blocks_[static_cast<std::size_t>(q)];
        blk.resize(static_cast<std::size_t>(nt) * ny);
        for (int n = 0; n < nt; ++n)
            for (int m = 0; m < ny; ++m) blk[static_cast<std::size_t>(n) * ny + m] = Q(n, m);
        auto& prj = proj_[static_cast<std::size_t>(q)];
        prj.resize(static_cast<std::size_t>(ny) * ny);
        for (int r = 0; r < ny; ++r)
            for (int m = 0; m < ny; ++m) prj[static_cast<std::size_t>(r) * ny + m] = P(r, m);
    }
}

double WaveOperator::hidden_fraction() const {
    long hid = 0;
    for (int q = 0; q < geom_.nx; ++q) {
        const int qa = q <= geom_.nx / 2 ? q : geom_.nx - q;
        hid += hidden_[static_cast<std::size_t>(qa)];
    }
    return static_cast<double>(hid) / (static_cast<double>(geom_.nx) * geom_.ny);
}

Sinogram WaveOperator::forward(const Image& f, WaveDiagnostics* diag) const {
    f.validate();
    if (f.width != geom_.nx || f.height != geom_.ny || f.spacing != geom_.spacing)
        throw std::invalid_argument("WaveOperator::forward: image does not match geometry");
    if (diag) {
        double first = 0.0, total = 0.0;
        for (int iy = 0; iy < f.height; ++iy)
            for (int ix = 0; ix < f.width; ++ix) {
                const double v2 = f.at(ix, iy) * f.at(ix, iy);
                total += v2;
                if (iy == 0) first += v2;
            }
        diag->boundary_mass = total > 0.0 ? first / total : 0.0;
        diag->boundary_warning = diag->boundary_mass > 1e-6;
    }
    const int nx = geom_.nx, ny = geom_.ny, nt = geom_.nt;
    // spectrum in x per depth row
    std::vector<std::vector<std::complex<double>>> fy(ny);
    for (int m = 0; m < ny; ++m) {
        fy[m].resize(nx);
        for (int ix = 0; ix < nx; ++ix) fy[m][static_cast<std::size_t>(ix)] = f.at(ix, m);
        fft_pow2(fy[m], false);
    }
    std::vector<std::vector<std::complex<double>>> gt(nt,
                                                      std::vector<std::complex<double>>(nx));
    const double amp = std::sqrt(geom_.spacing / geom_.dt);
    for (int q = 0; q < nx; ++q) {
        const int qa = q <= nx / 2 ? q : nx - q;  // blocks depend on |k_x|
        const auto& blk = blocks_[static_cast<std::size_t>(qa)];
        for (int n = 0; n < nt; ++n) {
            std::complex<double> acc = 0.0;
            for (int m = 0; m < ny; ++m)
                acc += blk[static_cast<std::size_t>(n) * ny + m] * fy[m][static_cast<std::size_t>(q)];
            gt[n][static_cast<std::size_t>(q)] = amp * acc;
        }
    }
    Sinogram out(nx, nt, geom_.dt, geom_.spacing);
    for (int n = 0; n < nt; ++n) {
        fft_pow2(gt[n], true);
        for (int ix = 0; ix < nx; ++ix)
            out.at(ix, n) = gt[n][static_cast<std::size_t>(ix)].real() / nx;
    }
    return out;
}

Image WaveOperator::adjoint(const Sinogram& s) const {
    s.validate();
    if (s.n_angles != geom_.nx || s.n_offsets != geom_.nt || s.offset_spacing != geom_.dt ||
        s.row_spacing != geom_.spacing)
        throw std::invalid_argument("WaveOperator::adjoint: data does not match geometry");
    const int nx = geom_.nx, ny = geom_.ny, nt = geom_.nt;
    std::vector<std::vector<std::complex<double>>> gt(nt);
    for (int n = 0; n < nt; ++n) {
        gt[n].resize(nx);
        for (int ix = 0; ix < nx; ++ix) gt[n][static_cast<std::size_t>(ix)] = s.at(ix, n);
        fft_pow2(gt[n], false);
    }
    std::vector<std::vector<std::complex<double>>> fy(ny,
                                                      std::vector<std::complex<double>>(nx));
    const double amp = std::sqrt(geom_.dt / geom_.spacing);
    for (int q = 0; q < nx; ++q) {
        const int qa = q <= nx / 2 ? q : nx - q;
        const auto& blk = blocks_[static_cast<std::size_t>(qa)];
        for (int m = 0; m < ny; ++m) {
            std::complex<double> acc = 0.0;
            for (int n = 0; n < nt; ++n)
                acc += blk[static_cast<std::size_t>(n) * ny + m] * gt[n][static_cast<std::size_t>(q)];
            fy[m][static_cast<std::size_t>(q)] = amp * acc;
        }
    }
    Image out(nx, ny, geom_.spacing);
    for (int m = 0; m < ny; ++m) {
        fft_pow2(fy[m], true);
        for (int ix = 0; ix < nx; ++ix) out.at(ix, m) = fy[m][static_cast<std::size_t>(ix)].real() / nx;
    }
    return out;
}

Image WaveOperator::project_visible(const Image& f) const {
    f.validate();
    if (f.width != geom_.nx || f.height != geom_.ny || f.spacing != geom_.spacing)
        throw std::invalid_argument("WaveOperator::project_visible: image does not match geometry");
    const int nx = geom_.nx, ny = geom_.ny;
    std::vector<std::vector<std::complex<double>>> fy(ny);
    for (int m = 0; m < ny; ++m) {
        fy[m].resize(nx);
        for (int ix = 0; ix < nx; ++ix) fy[m][static_cast<std::size_t>(ix)] = f.at(ix, m);
        fft_pow2(fy[m], false);
    }
    std::vector<std::complex<double>> col(ny);
    Image out(nx, ny, geom_.spacing);
    std::vector<std::vector<std::complex<double>>> py(ny,
                                                      std::vector<std::complex<double>>(nx));
    for (int q = 0; q < nx; ++q) {
        const int qa = q <= nx / 2 ? q : nx - q;
        const auto& prj = proj_[static_cast<std::size_t>(qa)];
        for (int m = 0; m < ny; ++m) col[static_cast<std::size_t>(m)] = fy[m][static_cast<std::size_t>(q)];
        for (int r = 0; r < ny; ++r) {
            std::complex<double> acc = 0.0;
            for (int m = 0; m < ny; ++m)
                acc += prj[static_cast<std::size_t>(r) * ny + m] * col[static_cast<std::size_t>(m)];
            py[r][static_cast<std::size_t>(q)] = acc;
        }
    }
    for (int m = 0; m < ny; ++m) {
        fft_pow2(py[m], true);
        for (int ix = 0; ix < nx; ++ix) out.at(ix, m) = py[m][static_cast<std::size_t>(ix)].real() / nx;
    }
    return out;
}

std::shared_ptr<const WaveOperator> wave_operator(const WaveGeometry& g) {
    static std::vector<std::pair<WaveGeometry, std::shared_ptr<const WaveOperator>>> cache;
    for (const auto& e : cache)
        if (e.first == g) return e.second;
    if (cache.size() >= 4) cache.clear();
    auto op = std::make_shared<const WaveOperator>(g);
    cache.emplace_back(g, op);
    return op;
}

Sinogram wave_forward(const WaveGeometry& g, const Image& f, WaveDiagnostics* diag) {
    return wave_operator(g)->forward(f, diag);
}

Image wave_adjoint(const WaveGeometry& g, const Sinogram& s) {
    return wave_operator(g)->adjoint(s);
}

// ---------------------------------------------------------------------------

std::vector<double> diag_apply(const std::vector<double>& kappa, const std::vector<double>& xi) {
    if (kappa.size() != xi.size()) throw std::invalid_argument("diag_apply: size mismatch");
    std::vector<double> out(xi.size());
    for (std::size_t i = 0; i < xi.size(); ++i) out[i] = kappa[i] * xi[i];
    return out;
}

std::vector<double> diag_mpi(const std::vector<double>& kappa, const std::vector<double>& eta) {
    if (kappa.size() != eta.size()) throw std::invalid_argument("diag_mpi: size mismatch");
    std::vector<double> out(eta.size());
    for (std::size_t i = 0; i < eta.size(); ++i)
        out[i] = kappa[i] != 0.0 ? eta[i] / kappa[i] : 0.0;
    return out;
}

}  // namespace bfdreg
