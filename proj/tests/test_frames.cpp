#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bfdreg/core.hpp"
#include "bfdreg/frames.hpp"
#include "bfdreg/rng.hpp"

using namespace bfdreg;

namespace {

Image random_image(int w, int h, double sp, std::uint64_t seed) {
    Image x(w, h, sp);
    Rng rng(seed);
    for (double& v : x.values) v = rng.gaussian();
    return x;
}

FrameSpec make_spec(FrameKind kind, WaveletFamily fam, int levels, int n, double sp) {
    FrameSpec f;
    f.kind = kind;
    f.family = fam;
    f.levels = levels;
    f.width = f.height = n;
    f.spacing = sp;
    return f;
}

}  // namespace

// One fully hand-computed case pins every convention at once: band order
// LH, HL, HH, Approx at the coarsest scale, row-then-column filtering, and
// the h * (transform) coefficient scaling.
TEST_CASE("haar 2x2 single level matches the hand computation") {
    FrameSpec f = make_spec(FrameKind::orthonormal_wavelet, WaveletFamily::haar, 1, 2, 1.0);
    Image x(2, 2, 1.0);
    // rows (a,b; c,d) = (1,2; 3,4)
    x.values = {1, 2, 3, 4};
    const CoeffSeq xi = analysis(f, x);
    REQUIRE(xi.entries.size() == 4);
    CHECK(xi.entries[0] == doctest::Approx(-2.0).epsilon(1e-14));  // LH = (a+b-c-d)/2
    CHECK(xi.entries[1] == doctest::Approx(-1.0).epsilon(1e-14));  // HL = (a-b+c-d)/2
    CHECK(xi.entries[2] == doctest::Approx(0.0).epsilon(1e-14));   // HH = (a-b-c+d)/2
    CHECK(xi.entries[3] == doctest::Approx(5.0).epsilon(1e-14));   // Approx = (a+b+c+d)/2

    const Image back = synthesis(f, xi);
    for (int i = 0; i < 4; ++i)
        CHECK(back.values[i] == doctest::Approx(x.values[i]).epsilon(1e-14));

    // with spacing 0.5 every coefficient carries the measure factor
    FrameSpec fh = f;
    fh.spacing = 0.5;
    Image xh = x;
    xh.spacing = 0.5;
    const CoeffSeq xih = analysis(fh, xh);
    for (int i = 0; i < 4; ++i)
        CHECK(xih.entries[i] == doctest::Approx(0.5 * xi.entries[i]).epsilon(1e-14));
}

TEST_CASE("orthonormal wavelet atoms form an orthonormal set (brute force gram)") {
    for (const WaveletFamily fam : {WaveletFamily::haar, WaveletFamily::daubechies4}) {
        FrameSpec f = make_spec(FrameKind::orthonormal_wavelet, fam, 2, 8, 0.25);
        const std::size_t n = f.lambda_count();
        REQUIRE(n == 64);
        std::vector<Image> atoms;
        CoeffSeq unit;
        unit.frame_id = f.id();
        unit.entries.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            unit.entries[i] = 1.0;
            atoms.push_back(synthesis(f, unit));
            unit.entries[i] = 0.0;
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) {
                const double g = inner_product(atoms[i], atoms[j]);
                CHECK(std::abs(g - (i == j ? 1.0 : 0.0)) < 1e-12);
            }
    }
}

TEST_CASE("orthonormal transform is an isometry and inverts exactly") {
    for (const WaveletFamily fam : {WaveletFamily::haar, WaveletFamily::daubechies4}) {
        FrameSpec f = make_spec(FrameKind::orthonormal_wavelet, fam, 3, 16, 0.125);
        const Image x = random_image(16, 16, 0.125, 0xabc);
        const CoeffSeq xi = analysis(f, x);
        CHECK(std::abs(norm(xi) - norm(x)) <= 1e-10 * norm(x));
        const Image back = synthesis(f, xi);
        Image diff = back;
        axpy(-1.0, x, diff);
        CHECK(norm(diff) <= 1e-10 * norm(x));
    }
}

TEST_CASE("translation-invariant system is Parseval and self-dual") {
    for (const WaveletFamily fam : {WaveletFamily::haar, WaveletFamily::daubechies4}) {
        FrameSpec f = make_spec(FrameKind::ti_parseval_wavelet, fam, 3, 16, 0.125);
        REQUIRE(f.lambda_count() == 10u * 256u);  // (3 levels * 3 bands + 1) planes
        const Image x = random_image(16, 16, 0.125, 0xdef);
        const CoeffSeq xi = analysis(f, x);
        CHECK(std::abs(norm(xi) - norm(x)) <= 1e-10 * norm(x));  // A = B = 1
        const Image back = synthesis(f, xi);
        Image diff = back;
        axpy(-1.0, x, diff);
        CHECK(norm(diff) <= 1e-10 * norm(x));

        const FrameBounds fb = frame_bounds(f);
        CHECK(fb.lower == 1.0);
        CHECK(fb.upper == 1.0);
    }
}

// Direct circular-convolution oracle for the undecimated transform: level-1
// details are plain filter products scaled by 1/2, the level-L approximation
// is the twice-dilated lowpass cascade scaled by 2^-L.
TEST_CASE("translation-invariant haar coefficients match direct convolutions") {
    const int n = 8;
    const double h = 0.25;
    FrameSpec f = make_spec(FrameKind::ti_parseval_wavelet, WaveletFamily::haar, 2, n, h);
    const Image x = random_image(n, n, h, 0x11);
    const CoeffSeq xi = analysis(f, x);

    auto X = [&](int ix, int iy) { return x.at(ix & (n - 1), iy & (n - 1)); };
    const std::size_t plane = static_cast<std::size_t>(n) * n;

    // enumeration: j=0 -> LH,HL,HH,Approx (cascade level 2), j=1 -> LH,HL,HH (level 1)
    for (int ky = 0; ky < n; ++ky)
        for (int kx = 0; kx < n; ++kx) {
            const double lh1 =
                h * 0.5 * 0.5 * ((X(kx, ky) + X(kx + 1, ky)) - (X(kx, ky + 1) + X(kx + 1, ky + 1)));
            LambdaIndex lam;
            lam.j = 1;
            lam.beta = Band::LH;
            lam.kx = kx;
            lam.ky = ky;
            const std::size_t idx = index_of(f, lam);
            CHECK(idx >= 4 * plane);  // finest scale sits after the coarse planes
            CHECK(xi.entries[idx] == doctest::Approx(lh1).epsilon(1e-12));
        }

    auto ll1 = [&](int p, int q) {
        return 0.5 * (X(p, q) + X(p + 1, q) + X(p, q + 1) + X(p + 1, q + 1));
    };
    for (int q = 0; q < n; q += 3)
        for (int p = 0; p < n; p += 3) {
            const double ll2 = 0.5 * (ll1(p, q) + ll1(p + 2, q) + ll1(p, q + 2) + ll1(p + 2, q + 2));
            LambdaIndex lam;
            lam.j = 0;
            lam.beta = Band::Approx;
            lam.kx = p;
            lam.ky = q;
            CHECK(xi.entries[index_of(f, lam)] == doctest::Approx(h * 0.25 * ll2).epsilon(1e-12));
        }
}

TEST_CASE("identity frame scales pixels by the cell width") {
    FrameSpec f = make_spec(FrameKind::identity, WaveletFamily::haar, 1, 4, 0.5);
    CHECK(f.lambda_count() == 16);
    const Image x = random_image(4, 4, 0.5, 0x22);
    const CoeffSeq xi = analysis(f, x);
    for (std::size_t i = 0; i < 16; ++i)
        CHECK(xi.entries[i] == doctest::Approx(0.5 * x.values[i]).epsilon(1e-15));
    const Image back = synthesis(f, xi);
    for (std::size_t i = 0; i < 16; ++i)
        CHECK(back.values[i] == doctest::Approx(x.values[i]).epsilon(1e-13));

    const LambdaIndex lam = lambda_at(f, 6);
    CHECK(lam.j == 0);
    CHECK(lam.beta == Band::Approx);
    CHECK(lam.kx == 2);
    CHECK(lam.ky == 1);
}

TEST_CASE("enumeration round-trips and is scale-major from the coarsest band") {
    for (const FrameKind kind :
         {FrameKind::orthonormal_wavelet, FrameKind::ti_parseval_wavelet, FrameKind::identity}) {
        FrameSpec f = make_spec(kind, WaveletFamily::daubechies4, 3, 16, 0.125);
        int last_j = 0;
        for (std::size_t i = 0; i < f.lambda_count(); ++i) {
            const LambdaIndex lam = lambda_at(f, i);
            CHECK(index_of(f, lam) == i);
            CHECK(lam.j >= last_j);  // scale-major, coarse to fine
            last_j = lam.j;
        }
        const std::vector<int> js = scales_of(f);
        REQUIRE(js.size() == f.lambda_count());
        for (std::size_t i = 0; i < js.size(); ++i) CHECK(js[i] == lambda_at(f, i).j);
        CHECK_THROWS_AS(lambda_at(f, f.lambda_count()), std::out_of_range);
    }

    // the four coarsest-band blocks come in LH, HL, HH, Approx order
    FrameSpec f = make_spec(FrameKind::orthonormal_wavelet, WaveletFamily::haar, 2, 8, 0.25);
    CHECK(lambda_at(f, 0).beta == Band::LH);
    CHECK(lambda_at(f, 4).beta == Band::HL);
    CHECK(lambda_at(f, 8).beta == Band::HH);
    CHECK(lambda_at(f, 12).beta == Band::Approx);
    CHECK(lambda_at(f, 16).beta == Band::LH);
    CHECK(lambda_at(f, 16).j == 1);

    LambdaIndex bad;
    bad.j = 5;
    bad.beta = Band::LH;
    CHECK_THROWS_AS(index_of(f, bad), std::out_of_range);
    bad.j = 1;
    bad.kx = 99;
    CHECK_THROWS_AS(index_of(f, bad), std::out_of_range);
}

TEST_CASE("frame ids separate kinds, families, grids and levels") {
    const FrameSpec a = make_spec(FrameKind::orthonormal_wavelet, WaveletFamily::haar, 2, 8, 0.25);
    FrameSpec b = a;
    b.family = WaveletFamily::daubechies4;
    FrameSpec c = a;
    c.levels = 3;
    FrameSpec d = a;
    d.kind = FrameKind::ti_parseval_wavelet;
    FrameSpec e = a;
    e.spacing = 0.5;
    CHECK(a.id() != b.id());
    CHECK(a.id() != c.id());
    CHECK(a.id() != d.id());
    CHECK(a.id() != e.id());
    CHECK(a.id() == make_spec(FrameKind::orthonormal_wavelet, WaveletFamily::haar, 2, 8, 0.25).id());
}

TEST_CASE("analysis and synthesis reject mismatched inputs") {
    const FrameSpec f = make_spec(FrameKind::orthonormal_wavelet, WaveletFamily::haar, 2, 8, 0.25);
    CHECK_THROWS_AS(analysis(f, Image(4, 4, 0.25)), std::invalid_argument);

    CoeffSeq xi;
    xi.frame_id = "not-this-frame";
    xi.entries.assign(f.lambda_count(), 0.0);
    CHECK_THROWS_AS(synthesis(f, xi), std::invalid_argument);
    xi.frame_id = f.id();
    xi.entries.pop_back();
    CHECK_THROWS_AS(synthesis(f, xi), std::invalid_argument);

    FrameSpec bad = f;
    bad.levels = 4;  // 8x8 supports at most 3
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.levels = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("analysis adjoint agrees with synthesis") {
    for (const FrameKind kind :
         {FrameKind::orthonormal_wavelet, FrameKind::ti_parseval_wavelet, FrameKind::identity}) {
        FrameSpec f = make_spec(kind, WaveletFamily::daubechies4, 2, 8, 0.25);
        CHECK(adjoint_check(f, 5) <= 1e-12);
    }
    const FrameSpec f = make_spec(FrameKind::orthonormal_wavelet, WaveletFamily::haar, 1, 4, 0.5);
    CHECK_THROWS_AS(adjoint_check(f, 0), std::invalid_argument);
}
