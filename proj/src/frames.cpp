#include "bfdreg/frames.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bfdreg/rng.hpp"

namespace bfdreg {

namespace {

// Orthonormal filter pairs, sqrt(2)-normalized, g_k = (-1)^k h_{F-1-k}.
void get_filters(WaveletFamily fam, std::vector<double>& h, std::vector<double>& g) {
    if (fam == WaveletFamily::haar) {
        const double s = 1.0 / std::sqrt(2.0);
        h = {s, s};
    } else {
        const double r3 = std::sqrt(3.0);
        const double n = 4.0 * std::sqrt(2.0);
        h = {(1.0 + r3) / n, (3.0 + r3) / n, (3.0 - r3) / n, (1.0 - r3) / n};
    }
    const std::size_t F = h.size();
    g.resize(F);
    for (std::size_t k = 0; k < F; ++k)
        g[k] = ((k & 1) ? -1.0 : 1.0) * h[F - 1 - k];
}

int ilog2(int n) {
    int l = 0;
    while ((1 << l) < n) ++l;
    return l;
}

// One decimated analysis step on a length-n periodic signal (n even).
void dwt_step(const std::vector<double>& x, int n, const std::vector<double>& h,
              const std::vector<double>& g, std::vector<double>& out) {
    const int F = static_cast<int>(h.size());
    const int half = n / 2;
    for (int k = 0; k < half; ++k) {
        double a = 0.0, d = 0.0;
        for (int t = 0; t < F; ++t) {
            double v = x[(2 * k + t) % n];
            a += h[t] * v;
            d += g[t] * v;
        }
        out[k] = a;
        out[half + k] = d;
    }
}

// Transpose of dwt_step (equals the inverse; the filters are orthonormal).
void idwt_step(const std::vector<double>& in, int n, const std::vector<double>& h,
               const std::vector<double>& g, std::vector<double>& x) {
    const int F = static_cast<int>(h.size());
    const int half = n / 2;
    std::fill(x.begin(), x.begin() + n, 0.0);
    for (int k = 0; k < half; ++k) {
        const double a = in[k], d = in[half + k];
        for (int t = 0; t < F; ++t)
            x[(2 * k + t) % n] += h[t] * a + g[t] * d;
    }
}

// Band blocks in enumeration order with their location in the packed DWT
// buffer (orthonormal) or their plane index (translation-invariant).
struct BandBlock {
    int j;
    Band beta;
    int x0, y0;  // packed-buffer origin (orthonormal kind)
    int plane;   // plane index (translation-invariant kind)
    int bw, bh;
    std::size_t offset;  // flat enumeration offset
};

std::vector<BandBlock> layout_of(const FrameSpec& f) {
    std::vector<BandBlock> blocks;
    std::size_t off = 0;
    if (f.kind == FrameKind::identity) {
        blocks.push_back({0, Band::Approx, 0, 0, 0, f.width, f.height, 0});
        return blocks;
    }
    const bool onb = f.kind == FrameKind::orthonormal_wavelet;
    int plane = 0;
    for (int j = 0; j < f.levels; ++j) {
        const int l = f.levels - j;  // cascade level
        const int bw = onb ? f.width >> l : f.width;
        const int bh = onb ? f.height >> l : f.height;
        const Band detail[3] = {Band::LH, Band::HL, Band::HH};
        const int dx[3] = {0, bw, bw};
        const int dy[3] = {bh, 0, bh};
        for (int b = 0; b < 3; ++b) {
            blocks.push_back({j, detail[b], dx[b], dy[b], plane++, bw, bh, off});
            off += static_cast<std::size_t>(bw) * bh;
        }
        if (j == 0) {
            blocks.push_back({0, Band::Approx, 0, 0, plane++, bw, bh, off});
            off += static_cast<std::size_t>(bw) * bh;
        }
    }
    return blocks;
}

}  // namespace

void FrameSpec::validate() const {
    if (width < 2 || height < 2 || !is_pow2(width) || !is_pow2(height))
        throw std::invalid_argument("FrameSpec: grid must be powers of two >= 2");
    if (!(spacing > 0.0)) throw std::invalid_argument("FrameSpec: spacing must be positive");
    if (kind == FrameKind::identity) return;
    const int max_levels = std::min(ilog2(width), ilog2(height));
    if (levels < 1 || levels > max_levels)
        throw std::invalid_argument("FrameSpec: levels must be in [1, log2(min(width,height))]");
}

std::string FrameSpec::id() const {
    std::ostringstream os;
    switch (kind) {
        case FrameKind::orthonormal_wavelet: os << "onb"; break;
        case FrameKind::ti_parseval_wavelet: os << "ti"; break;
        case FrameKind::identity: os << "id"; break;
    }
    if (kind != FrameKind::identity) {
        os << (family == WaveletFamily::haar ? ":haar" : ":db4");
        os << ":L" << levels;
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, ":%dx%d:h%.17g", width, height, spacing);
    os << buf;
    return os.str();
}

std::size_t FrameSpec::lambda_count() const {
    const std::size_t n = static_cast<std::size_t>(width) * height;
    if (kind == FrameKind::ti_parseval_wavelet) return (3u * levels + 1u) * n;
    return n;
}

CoeffSeq analysis(const FrameSpec& f, const Image& x) {
    f.validate();
    if (x.width != f.width || x.height != f.height)
        throw std::invalid_argument("analysis: image does not match frame grid");
    CoeffSeq xi;
    xi.frame_id = f.id();
    const double h = f.spacing;
    const int W = f.width, H = f.height;

    if (f.kind == FrameKind::identity) {
        xi.entries.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) xi.entries[i] = h * x.values[i];
        return xi;
    }

    std::vector<double> hf, gf;
    get_filters(f.family, hf, gf);

    if (f.kind == FrameKind::orthonormal_wavelet) {
        std::vector<double> buf(x.values);
        for (double& v : buf) v *= h;
        std::vector<double> line(std::max(W, H)), out(std::max(W, H));
        int w = W, hh = H;
        for (int l = 1; l <= f.levels; ++l) {
            for (int iy = 0; iy < hh; ++iy) {  // rows
                for (int ix = 0; ix < w; ++ix) line[ix] = buf[static_cast<std::size_t>(iy) * W + ix];
                dwt_step(line, w, hf, gf, out);
                for (int ix = 0; ix < w; ++ix) buf[static_cast<std::size_t>(iy) * W + ix] = out[ix];
            }
            for (int ix = 0; ix < w; ++ix) {  // columns
                for (int iy = 0; iy < hh; ++iy) line[iy] = buf[static_cast<std::size_t>(iy) * W + ix];
                dwt_step(line, hh, hf, gf, out);
                for (int iy = 0; iy < hh; ++iy) buf[static_cast<std::size_t>(iy) * W + ix] = out[iy];
            }
            w /= 2;
            hh /= 2;
        }
        xi.entries.resize(f.lambda_count());
        for (const auto& b : layout_of(f))
            for (int ky = 0; ky < b.bh; ++ky)
                for (int kx = 0; kx < b.bw; ++kx)
                    xi.entries[b.offset + static_cast<std::size_t>(ky) * b.bw + kx] =
                        buf[static_cast<std::size_t>(b.y0 + ky) * W + (b.x0 + kx)];
        return xi;
    }

    // translation-invariant: a-trous cascade, detail planes at cascade level l
    // scaled by 2^-l and the approximation by 2^-levels (Parseval)
    const std::size_t n = static_cast<std::size_t>(W) * H;
    xi.entries.resize(f.lambda_count());
    std::vector<double> ll(x.values);
    for (double& v : ll) v *= h;
    std::vector<double> lo(n), hi(n), tmp_lolo(n), tmp_lohi(n), tmp_hilo(n), tmp_hihi(n);
    const auto blocks = layout_of(f);
    auto plane_offset = [&](int j, Band beta) {
        for (const auto& b : blocks)
            if (b.j == j && b.beta == beta) return b.offset;
        throw std::logic_error("analysis: band not found");
    };
    const int F = static_cast<int>(hf.size());
    for (int l = 1; l <= f.levels; ++l) {
        const int s = 1 << (l - 1);
        for (int iy = 0; iy < H; ++iy)  // rows: x-direction filters
            for (int ix = 0; ix < W; ++ix) {
                double a = 0.0, d = 0.0;
                for (int t = 0; t < F; ++t) {
                    double v = ll[static_cast<std::size_t>(iy) * W + ((ix + t * s) & (W - 1))];
                    a += hf[t] * v;
                    d += gf[t] * v;
                }
                lo[static_cast<std::size_t>(iy) * W + ix] = a;
                hi[static_cast<std::size_t>(iy) * W + ix] = d;
            }
        for (int iy = 0; iy < H; ++iy)  // columns: y-direction filters
            for (int ix = 0; ix < W; ++ix) {
                double alo = 0.0, dlo = 0.0, ahi = 0.0, dhi = 0.0;
                for (int t = 0; t < F; ++t) {
                    const std::size_t row = static_cast<std::size_t>((iy + t * s) & (H - 1)) * W;
                    alo += hf[t] * lo[row + ix];
                    dlo += gf[t] * lo[row + ix];
                    ahi += hf[t] * hi[row + ix];
                    dhi += gf[t] * hi[row + ix];
                }
                const std::size_t p = static_cast<std::size_t>(iy) * W + ix;
                tmp_lolo[p] = alo;
                tmp_lohi[p] = dlo;
                tmp_hilo[p] = ahi;
                tmp_hihi[p] = dhi;
            }
        const double scale = std::ldexp(1.0, -l);
        const int j = f.levels - l;
        const std::size_t oLH = plane_offset(j, Band::LH), oHL = plane_offset(j, Band::HL),
                          oHH = plane_offset(j, Band::HH);
        for (std::size_t p = 0; p < n; ++p) {
            xi.entries[oLH + p] = scale * tmp_lohi[p];
            xi.entries[oHL + p] = scale * tmp_hilo[p];
            xi.entries[oHH + p] = scale * tmp_hihi[p];
        }
        ll.swap(tmp_lolo);
    }
    const double ascale = std::ldexp(1.0, -f.levels);
    const std::size_t oA = plane_offset(0, Band::Approx);
    for (std::size_t p = 0; p < n; ++p) xi.entries[oA + p] = ascale * ll[p];
    return xi;
}

Image synthesis(const FrameSpec& f, const CoeffSeq& xi) {
    f.validate();
    if (xi.frame_id != f.id())
        throw std::invalid_argument("synthesis: coefficients belong to a different frame");
    if (xi.entries.size() != f.lambda_count())
        throw std::invalid_argument("synthesis: coefficient count mismatch");
    Image x(f.width, f.height, f.spacing);
    const double h = f.spacing;
    const int W = f.width, H = f.height;

    if (f.kind == FrameKind::identity) {
        for (std::size_t i = 0; i < x.size(); ++i) x.values[i] = xi.entries[i] / h;
        return x;
    }

    std::vector<double> hf, gf;
    get_filters(f.family, hf, gf);

    if (f.kind == FrameKind::orthonormal_wavelet) {
        std::vector<double> buf(static_cast<std::size_t>(W) * H, 0.0);
        for (const auto& b : layout_of(f))
            for (int ky = 0; ky < b.bh; ++ky)
                for (int kx = 0; kx < b.bw; ++kx)
                    buf[static_cast<std::size_t>(b.y0 + ky) * W + (b.x0 + kx)] =
                        xi.entries[b.offset + static_cast<std::size_t>(ky) * b.bw + kx];
        std::vector<double> line(std::max(W, H)), out(std::max(W, H));
        for (int l = f.levels; l >= 1; --l) {
            const int w = W >> (l - 1), hh = H >> (l - 1);
            for (int ix = 0; ix < w; ++ix) {  // columns first (reverse of analysis)
                for (int iy = 0; iy < hh; ++iy) line[iy] = buf[static_cast<std::size_t>(iy) * W + ix];
                idwt_step(line, hh, hf, gf, out);
                for (int iy = 0; iy < hh; ++iy) buf[static_cast<std::size_t>(iy) * W + ix] = out[iy];
            }
            for (int iy = 0; iy < hh; ++iy) {
                for (int ix = 0; ix < w; ++ix) line[ix] = buf[static_cast<std::size_t>(iy) * W + ix];
                idwt_step(line, w, hf, gf, out);
                for (int ix = 0; ix < w; ++ix) buf[static_cast<std::size_t>(iy) * W + ix] = out[ix];
            }
        }
        for (std::size_t i = 0; i < x.size(); ++i) x.values[i] = buf[i] / h;
        return x;
    }

    // translation-invariant adjoint: transposed correlations, same scales
    const std::size_t n = static_cast<std::size_t>(W) * H;
    const auto blocks = layout_of(f);
    auto plane_offset = [&](int j, Band beta) {
        for (const auto& b : blocks)
            if (b.j == j && b.beta == beta) return b.offset;
        throw std::logic_error("synthesis: band not found");
    };
    const int F = static_cast<int>(hf.size());
    std::vector<double> acc(n), tlo(n), thi(n), col_lo(n), col_hi(n);
    {
        const double ascale = std::ldexp(1.0, -f.levels);
        const std::size_t oA = plane_offset(0, Band::Approx);
        for (std::size_t p = 0; p < n; ++p) acc[p] = ascale * xi.entries[oA + p];
    }
    for (int l = f.levels; l >= 1; --l) {
        const int s = 1 << (l - 1);
        const double scale = std::ldexp(1.0, -l);
        const int j = f.levels - l;
        const std::size_t oLH = plane_offset(j, Band::LH), oHL = plane_offset(j, Band::HL),
                          oHH = plane_offset(j, Band::HH);
        // transposed column filters: z -> sum_t f[t] z[(iy - t s) mod H]
        for (int iy = 0; iy < H; ++iy)
            for (int ix = 0; ix < W; ++ix) {
                double vlo = 0.0, vhi = 0.0;
                for (int t = 0; t < F; ++t) {
                    const std::size_t row = static_cast<std::size_t>((iy - t * s) & (H - 1)) * W;
                    vlo += hf[t] * acc[row + ix] + gf[t] * scale * xi.entries[oLH + row + ix];
                    vhi += hf[t] * scale * xi.entries[oHL + row + ix] +
                           gf[t] * scale * xi.entries[oHH + row + ix];
                }
                col_lo[static_cast<std::size_t>(iy) * W + ix] = vlo;
                col_hi[static_cast<std::size_t>(iy) * W + ix] = vhi;
            }
        // transposed row filters
        for (int iy = 0; iy < H; ++iy)
            for (int ix = 0; ix < W; ++ix) {
                double v = 0.0;
                for (int t = 0; t < F; ++t) {
                    const int col = (ix - t * s) & (W - 1);
                    v += hf[t] * col_lo[static_cast<std::size_t>(iy) * W + col] +
                         gf[t] * col_hi[static_cast<std::size_t>(iy) * W + col];
                }
                tlo[static_cast<std::size_t>(iy) * W + ix] = v;
            }
        acc.swap(tlo);
    }
    for (std::size_t i = 0; i < n; ++i) x.values[i] = acc[i] / h;
    return x;
}

LambdaIndex lambda_at(const FrameSpec& f, std::size_t index) {
    if (index >= f.lambda_count()) throw std::out_of_range("lambda_at: index out of range");
    for (const auto& b : layout_of(f)) {
        const std::size_t count = static_cast<std::size_t>(b.bw) * b.bh;
        if (index < b.offset + count) {
            const std::size_t local = index - b.offset;
            LambdaIndex lam;
            lam.j = b.j;
            lam.beta = b.beta;
            lam.kx = static_cast<int>(local % b.bw);
            lam.ky = static_cast<int>(local / b.bw);
            return lam;
        }
    }
    throw std::logic_error("lambda_at: enumeration gap");
}

std::size_t index_of(const FrameSpec& f, const LambdaIndex& lam) {
    for (const auto& b : layout_of(f)) {
        if (b.j != lam.j || b.beta != lam.beta) continue;
        if (lam.kx < 0 || lam.kx >= b.bw || lam.ky < 0 || lam.ky >= b.bh)
            throw std::out_of_range("index_of: translation out of range");
        return b.offset + static_cast<std::size_t>(lam.ky) * b.bw + lam.kx;
    }
    throw std::out_of_range("index_of: no such band");
}

std::vector<int> scales_of(const FrameSpec& f) {
    std::vector<int> js(f.lambda_count());
    for (const auto& b : layout_of(f)) {
        const std::size_t count = static_cast<std::size_t>(b.bw) * b.bh;
        for (std::size_t i = 0; i < count; ++i) js[b.offset + i] = b.j;
    }
    return js;
}

FrameBounds frame_bounds(const FrameSpec& f) {
    f.validate();
    return FrameBounds{1.0, 1.0};  // orthonormal basis or Parseval frame
}

double adjoint_check(const FrameSpec& f, int trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("adjoint_check: trials must be >= 1");
    f.validate();
    Rng rng(seed);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        Image x(f.width, f.height, f.spacing);
        for (double& v : x.values) v = rng.gaussian();
        CoeffSeq xi;
        xi.frame_id = f.id();
        xi.entries.resize(f.lambda_count());
        for (double& v : xi.entries) v = rng.gaussian();
        const double lhs = inner_product(analysis(f, x), xi);
        const double rhs = inner_product(x, synthesis(f, xi));
        const double den = norm(x) * norm(xi);
        worst = std::max(worst, std::abs(lhs - rhs) / (den > 0 ? den : 1.0));
    }
    return worst;
}

}  // namespace bfdreg
