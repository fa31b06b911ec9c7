#pragma once

#include <string>
#include <vector>

#include "bfdreg/core.hpp"

// Wavelet frames over images.
//
// Three kinds:
//  * orthonormal_wavelet: periodic 2-D Mallat DWT (Haar or Daubechies-4),
//    an orthonormal basis; analysis and synthesis are mutually inverse.
//  * ti_parseval_wavelet: the undecimated (a-trous) version with detail
//    bands at cascade level l scaled by 2^-l and the approximation by
//    2^-levels.  With orthonormal filters this makes the system a Parseval
//    frame (frame bounds A = B = 1), hence self-dual.
//  * identity: the normalized pixel basis; handy for problems posed directly
//    on coefficient space.
//
// Coefficients are taken with respect to the measure-weighted image inner
// product, i.e. analysis of x returns spacing * (transform of pixel values),
// so Parseval holds against norm(Image) rather than the plain vector norm.
//
// Index enumeration (frame_id-stable, serialization relies on it):
// scale-major from the coarsest band, within a scale the bands in the order
// LH, HL, HH (and Approx appended at j = 0), row-major translations inside a
// band.  j = 0 is the coarsest decomposition scale, j = levels-1 the finest;
// band LH means lowpass in x and highpass in y.

namespace bfdreg {

enum class FrameKind { orthonormal_wavelet, ti_parseval_wavelet, identity };
enum class WaveletFamily { haar, daubechies4 };

struct FrameSpec {
    FrameKind kind = FrameKind::orthonormal_wavelet;
    WaveletFamily family = WaveletFamily::haar;
    int levels = 1;   // ignored for identity
    int width = 0;
    int height = 0;
    double spacing = 0.0;

    // throws std::invalid_argument if the grid/levels combination is illegal
    void validate() const;
    std::string id() const;
    std::size_t lambda_count() const;
};

// U* x: frame analysis.
CoeffSeq analysis(const FrameSpec& f, const Image& x);
// Synthesis with the canonical dual frame; for all kinds here the dual frame
// coincides with the frame itself (orthonormal or Parseval), so this is the
// adjoint of analysis and satisfies synthesis(analysis(x)) == x.
Image synthesis(const FrameSpec& f, const CoeffSeq& xi);

// The frames here are self-dual; these aliases keep call sites readable when
// the dual system is meant.
inline CoeffSeq dual_analysis(const FrameSpec& f, const Image& x) { return analysis(f, x); }
inline Image dual_synthesis(const FrameSpec& f, const CoeffSeq& xi) { return synthesis(f, xi); }

// Enumeration helpers.
LambdaIndex lambda_at(const FrameSpec& f, std::size_t index);
std::size_t index_of(const FrameSpec& f, const LambdaIndex& lam);
// scale j of every enumerated coefficient, in order (cheap, computed once)
std::vector<int> scales_of(const FrameSpec& f);

struct FrameBounds {
    double lower = 1.0;
    double upper = 1.0;
};
FrameBounds frame_bounds(const FrameSpec& f);

// max over `trials` random images of
// |<U* x, xi> - <x, U xi>| / (norm(x) * norm(xi)); trials must be >= 1.
double adjoint_check(const FrameSpec& f, int trials, std::uint64_t seed = 0x5eed);

}  // namespace bfdreg
