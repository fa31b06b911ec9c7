#pragma once

#include <memory>
#include <vector>

#include "bfdreg/core.hpp"

// Forward operators: the 2-D Radon transform with its Riesz-filtered
// backprojection inverse, and the wave-equation boundary-trace operator in
// its frequency-domain (dispersion-relation) realization.

namespace bfdreg {

// ---------------------------------------------------------------------------
// Radon transform
//
// Images live on [-1,1]^2 and are expected to be supported in the inscribed
// unit disk; mass outside the disk is integrated as-is and reported through
// the optional diagnostics struct.  Angles theta_i = i*pi/n_angles
// parameterize lines ( x = s*theta + t*theta_perp ); each stored angle stands
// for the antipodal pair on the full circle, so the data-space measure per
// row is 2*pi/n_angles.  Offsets are symmetric about zero:
// s_m = (m - (n_offsets-1)/2) * offset_spacing.
// Line integrals are computed with bilinear interpolation at midpoint samples
// spaced spacing/2 along the ray; the adjoint is the exact transpose of that
// quadrature with the data/image measure ratio applied.

struct RadonGeometry {
    int n_angles = 0;
    int n_offsets = 0;          // must be a power of two (offset-direction FFTs)
    double offset_spacing = 0.0;

    void validate() const;      // also checks offset coverage >= [-1,1]
    double angle(int i) const;
    double offset(int m) const;
    Sinogram make_sinogram() const;

    // default geometry for a width x width image: n_offsets = 2*width at the
    // image pixel pitch, covering about [-2,2] so the offset-periodic ramp
    // filter has room to decay
    static RadonGeometry for_image(int width, double spacing, int n_angles);
};

struct RadonDiagnostics {
    double mass_outside_disk = 0.0;  // fraction of squared image mass outside the unit disk
    bool support_warning = false;
};

Sinogram radon_forward(const RadonGeometry& g, const Image& f,
                       RadonDiagnostics* diag = nullptr);
Image radon_adjoint(const RadonGeometry& g, const Sinogram& s, int width, int height,
                    double spacing);

// Riesz potential I^(-alpha): per-angle Fourier multiplier |omega|^alpha in
// the offset variable, zero frequency mapped to zero.  alpha > -1.
Sinogram riesz_potential(const Sinogram& s, double alpha);

// Filtered backprojection (4*pi)^-1 * R^* I^-1, the left inverse of the
// Radon transform on disk-supported functions.
Image fbp(const RadonGeometry& g, const Sinogram& s, int width, int height, double spacing);

// Fractional Laplacian (-Delta)^(alpha/2) as a 2-D periodic Fourier
// multiplier |k|^alpha, zero mode mapped to zero.
Image fractional_laplacian(const Image& f, double alpha);

// Relative commutation residual
//   || I^-alpha R f - R (-Delta)^(alpha/2) f || / || I^-alpha R f ||.
double commutation_check(const RadonGeometry& g, const Image& f, double alpha);

// ---------------------------------------------------------------------------
// Wave-equation boundary trace
//
// Initial-value problem on the half-space slab y in (0, Ly): d_tt u = Lap u,
// u(.,0) = y^(1/2) f, d_t u(.,0) = 0; the datum is the weighted boundary
// trace (A f)(x,t) = t^(-1/2) u(x,0,t), an isometry of the weighted L^2
// spaces when the trace is recorded for all time.  Realized per x-frequency
// k_x as a dense map from depth profiles to time profiles built from the
// exact free-space dispersion relation omega = sqrt(k_x^2 + k_y^2); each
// frequency block is then polished to the nearest matrix with orthonormal
// columns on the directions the finite recording window can actually see.
// Modes with k_y << k_x graze along the boundary and reach the detector
// after t = T; their singular values decay exponentially, so the polish
// truncates them (relative cutoff 1e-10) instead of amplifying noise.  The
// result is a partial isometry: A^*A is an exact orthogonal projector onto
// the visible modes, and ||Af|| = ||f|| on its range.  Grids are
// cell-centered: y_m = (m+1/2)*spacing, t_n = (n+1/2)*dt, so the t^(-1/2)
// weight never hits t = 0.

struct WaveGeometry {
    int nx = 0;        // boundary samples (power of two, FFT in x)
    int ny = 0;        // depth samples
    double spacing = 0.0;
    int nt = 0;        // time samples, nt >= ny
    double dt = 0.0;

    void validate() const;
    bool operator==(const WaveGeometry& o) const {
        return nx == o.nx && ny == o.ny && spacing == o.spacing && nt == o.nt && dt == o.dt;
    }

    // nt = 4*ny, dt = spacing/2: the time window covers twice the slab depth
    static WaveGeometry for_slab(int nx, int ny, double spacing);
};

struct WaveDiagnostics {
    double boundary_mass = 0.0;  // fraction of squared mass in the first depth row
    bool boundary_warning = false;
};

class WaveOperator {
  public:
    explicit WaveOperator(const WaveGeometry& g);

    const WaveGeometry& geometry() const { return geom_; }
    // smallest raw singular value among the directions the polish kept; a
    // diagnostic for how much orthogonalization had to bend the dispersion map
    double min_singular_value() const { return min_sigma_; }
    // fraction of depth-profile directions truncated as invisible (grazing
    // modes that do not reach the detector within the recording window)
    double hidden_fraction() const;

    Sinogram forward(const Image& f, WaveDiagnostics* diag = nullptr) const;
    Image adjoint(const Sinogram& s) const;
    // Orthogonal projection onto the visible modes, applied spectrally from
    // the stored eigenbasis; equals adjoint(forward(.)) up to roundoff but
    // goes through none of the time-domain pipeline.
    Image project_visible(const Image& f) const;

  private:
    WaveGeometry geom_;
    double min_sigma_ = 0.0;
    // per |k_x| block: the nt x ny partial-isometry factor (Q^T Q = the
    // visible-mode projector), the ny x ny projector itself, and the number
    // of truncated directions
    std::vector<std::vector<double>> blocks_;
    std::vector<std::vector<double>> proj_;
    std::vector<int> hidden_;
};

// Shared-geometry cache; building a WaveOperator is the expensive part.
std::shared_ptr<const WaveOperator> wave_operator(const WaveGeometry& g);

Sinogram wave_forward(const WaveGeometry& g, const Image& f, WaveDiagnostics* diag = nullptr);
Image wave_adjoint(const WaveGeometry& g, const Sinogram& s);

// ---------------------------------------------------------------------------
// Pointwise multipliers on coefficient space

// (kappa_lambda * xi_lambda)
std::vector<double> diag_apply(const std::vector<double>& kappa, const std::vector<double>& xi);
// Moore-Penrose inverse action: eta_lambda / kappa_lambda where kappa != 0, else 0
std::vector<double> diag_mpi(const std::vector<double>& kappa, const std::vector<double>& eta);

}  // namespace bfdreg
