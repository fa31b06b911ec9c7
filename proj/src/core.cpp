#include "bfdreg/core.hpp"

#include <cmath>
#include <limits>

namespace bfdreg {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

Image::Image(int w, int h, double sp) : width(w), height(h), spacing(sp) {
    if (w < 2 || h < 2 || !is_pow2(w) || !is_pow2(h))
        throw std::invalid_argument("Image: width and height must be powers of two >= 2");
    if (!(sp > 0.0) || !std::isfinite(sp))
        throw std::invalid_argument("Image: spacing must be positive and finite");
    values.assign(static_cast<std::size_t>(w) * h, 0.0);
}

void Image::validate() const {
    if (width < 2 || height < 2 || !is_pow2(width) || !is_pow2(height))
        throw std::invalid_argument("Image: width and height must be powers of two >= 2");
    if (!(spacing > 0.0) || !std::isfinite(spacing))
        throw std::invalid_argument("Image: spacing must be positive and finite");
    if (values.size() != static_cast<std::size_t>(width) * height)
        throw std::invalid_argument("Image: value count does not match width*height");
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("Image: non-finite value");
}

Sinogram::Sinogram(int rows, int cols, double col_sp, double row_sp)
    : n_angles(rows), n_offsets(cols), offset_spacing(col_sp), row_spacing(row_sp) {
    if (rows < 1 || cols < 1)
        throw std::invalid_argument("Sinogram: empty grid");
    if (!(col_sp > 0.0) || !(row_sp > 0.0))
        throw std::invalid_argument("Sinogram: spacings must be positive");
    values.assign(static_cast<std::size_t>(rows) * cols, 0.0);
}

void Sinogram::validate() const {
    if (n_angles < 1 || n_offsets < 1)
        throw std::invalid_argument("Sinogram: empty grid");
    if (!(offset_spacing > 0.0) || !(row_spacing > 0.0))
        throw std::invalid_argument("Sinogram: spacings must be positive");
    if (values.size() != static_cast<std::size_t>(n_angles) * n_offsets)
        throw std::invalid_argument("Sinogram: value count mismatch");
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("Sinogram: non-finite value");
}

void Weights::validate(double d_min) const {
    for (double w : entries) {
        if (!std::isfinite(w)) throw std::invalid_argument("Weights: non-finite entry");
        if (w < d_min) throw std::invalid_argument("Weights: entry below d_min");
    }
}

namespace {
double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}
}  // namespace

double inner_product(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("inner_product: image shape mismatch");
    return a.spacing * a.spacing * dot(a.values, b.values);
}

double inner_product(const Sinogram& a, const Sinogram& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("inner_product: sinogram shape mismatch");
    return a.row_spacing * a.offset_spacing * dot(a.values, b.values);
}

double inner_product(const CoeffSeq& a, const CoeffSeq& b) {
    if (a.frame_id != b.frame_id || a.entries.size() != b.entries.size())
        throw std::invalid_argument("inner_product: coefficient sequences from different frames");
    return dot(a.entries, b.entries);
}

double norm(const Image& a) { return std::sqrt(inner_product(a, a)); }
double norm(const Sinogram& a) { return std::sqrt(inner_product(a, a)); }
double norm(const CoeffSeq& a) { return std::sqrt(inner_product(a, a)); }

double weighted_l1_norm(const CoeffSeq& xi, const Weights& d) {
    if (xi.entries.size() != d.entries.size())
        throw std::invalid_argument("weighted_l1_norm: weight count mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < d.entries.size(); ++i)
        s += d.entries[i] * std::abs(xi.entries[i]);
    // overflow is the one sanctioned way to be non-finite here
    return s;
}

std::vector<std::size_t> support_indices(const CoeffSeq& xi, double tol) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < xi.entries.size(); ++i)
        if (std::abs(xi.entries[i]) > tol) out.push_back(i);
    return out;
}

void axpy(double a, const Image& x, Image& y) {
    if (!x.same_shape(y)) throw std::invalid_argument("axpy: image shape mismatch");
    for (std::size_t i = 0; i < x.values.size(); ++i) y.values[i] += a * x.values[i];
}

void axpy(double a, const Sinogram& x, Sinogram& y) {
    if (!x.same_shape(y)) throw std::invalid_argument("axpy: sinogram shape mismatch");
    for (std::size_t i = 0; i < x.values.size(); ++i) y.values[i] += a * x.values[i];
}

void axpy(double a, const CoeffSeq& x, CoeffSeq& y) {
    if (x.frame_id != y.frame_id || x.entries.size() != y.entries.size())
        throw std::invalid_argument("axpy: coefficient frame mismatch");
    for (std::size_t i = 0; i < x.entries.size(); ++i) y.entries[i] += a * x.entries[i];
}

}  // namespace bfdreg
