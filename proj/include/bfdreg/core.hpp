#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

// Core value types shared by every other component: pixel images on the
// square [-1,1]^2, sampled line-integral data, frame coefficient sequences,
// and threshold weights.  All norms and inner products below are weighted by
// the cell measure of the underlying grid so that discrete quantities track
// their continuum counterparts as the grids are refined.

namespace bfdreg {

bool is_pow2(int n);

// Square-pixel image. Pixel (ix, iy) has center
//   x = -1 + (ix + 1/2) * spacing,  y depends on context:
// for Radon work the domain is [-1,1]^2 (y = -1 + (iy+1/2)*spacing),
// for the wave slab y = (iy + 1/2) * spacing > 0.
// Width and height must be powers of two; the wavelet transforms need that.
struct Image {
    int width = 0;
    int height = 0;
    double spacing = 0.0;
    std::vector<double> values;  // row-major, values[iy*width + ix]

    Image() = default;
    Image(int w, int h, double sp);

    double& at(int ix, int iy) { return values[static_cast<std::size_t>(iy) * width + ix]; }
    double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * width + ix]; }
    std::size_t size() const { return values.size(); }
    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && spacing == o.spacing;
    }
    // throws std::invalid_argument on non-finite entries or bad metadata
    void validate() const;
};

// Sampled data of a 2-D linear operator whose range is a function of
// (row, column) on a uniform grid.  For the Radon transform rows are angles
// on [0,pi) and columns are signed line offsets; `row_spacing` is the data
// measure per stored row (2*pi/n_angles: a stored angle stands for the
// antipodal pair on the full circle, which makes the classical filtered
// backprojection constants hold verbatim).  For the wave trace rows are
// boundary x-samples and columns are time samples.
struct Sinogram {
    int n_angles = 0;        // rows
    int n_offsets = 0;       // columns
    double offset_spacing = 0.0;
    double row_spacing = 0.0;
    std::vector<double> values;  // row-major, values[row*n_offsets + col]

    Sinogram() = default;
    Sinogram(int rows, int cols, double col_sp, double row_sp);

    double& at(int row, int col) { return values[static_cast<std::size_t>(row) * n_offsets + col]; }
    double at(int row, int col) const { return values[static_cast<std::size_t>(row) * n_offsets + col]; }
    std::size_t size() const { return values.size(); }
    bool same_shape(const Sinogram& o) const {
        return n_angles == o.n_angles && n_offsets == o.n_offsets &&
               offset_spacing == o.offset_spacing && row_spacing == o.row_spacing;
    }
    void validate() const;
};

// Frame index: scale j >= 0 (0 = coarsest band of the decomposition, larger
// j = finer), integer translation k = (kx, ky), and band tag beta.
// The approximation band carries j = 0 together with the coarsest details.
enum class Band : int { LH = 0, HL = 1, HH = 2, Approx = 3 };

struct LambdaIndex {
    int j = 0;
    int kx = 0;
    int ky = 0;
    Band beta = Band::Approx;

    bool operator==(const LambdaIndex& o) const {
        return j == o.j && kx == o.kx && ky == o.ky && beta == o.beta;
    }
};

// Coefficient sequence over an enumerated frame index set.  `frame_id` names
// the frame the entries belong to; mixing sequences from different frames is
// a contract violation and is rejected by the operations that combine them.
struct CoeffSeq {
    std::string frame_id;
    std::vector<double> entries;

    std::size_t size() const { return entries.size(); }
};

// Per-coefficient threshold weights d_lambda.  Must be strictly positive and
// bounded away from zero for the regularization theory to apply.
struct Weights {
    std::vector<double> entries;

    std::size_t size() const { return entries.size(); }
    // throws if any entry < d_min or non-finite
    void validate(double d_min) const;
};

// Measure-weighted inner products.  Shape mismatches throw.
double inner_product(const Image& a, const Image& b);
double inner_product(const Sinogram& a, const Sinogram& b);
double inner_product(const CoeffSeq& a, const CoeffSeq& b);

double norm(const Image& a);
double norm(const Sinogram& a);
double norm(const CoeffSeq& a);

// sum_lambda d_lambda * |xi_lambda|.  Returns +inf if the sum overflows;
// that sentinel is the only non-finite value this function may produce.
double weighted_l1_norm(const CoeffSeq& xi, const Weights& d);

// Positions lambda with |xi_lambda| > tol (strict).  Mapping a position back
// to a LambdaIndex is the frame's job (frames::lambda_at).
std::vector<std::size_t> support_indices(const CoeffSeq& xi, double tol);

// In-place linear combinations used throughout; shapes must agree.
void axpy(double a, const Image& x, Image& y);
void axpy(double a, const Sinogram& x, Sinogram& y);
void axpy(double a, const CoeffSeq& x, CoeffSeq& y);

}  // namespace bfdreg
