#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "bfdreg/bfd.hpp"
#include "bfdreg/core.hpp"

// Variational l1 regularization for comparison against the direct BFD
// estimator: synthesis form (coefficients through the frame synthesis, solved
// with ISTA/FISTA) and analysis form (penalty on U^* x, solved with a
// primal-dual scheme), plus the closed form for pointwise multiplication
// operators.

namespace bfdreg {

// Flat-vector view of a linear operator between measure-weighted spaces.
// apply/apply_adjoint must be exact transposes of each other with respect to
// sum(a_i b_i) * measure on each side.
struct LinOp {
    std::size_t domain_size = 0;
    std::size_t range_size = 0;
    double domain_measure = 1.0;  // inner-product weight per entry
    double range_measure = 1.0;
    std::function<std::vector<double>(const std::vector<double>&)> apply;
    std::function<std::vector<double>(const std::vector<double>&)> apply_adjoint;
};

// A and A composed with frame synthesis W, as flat operators.
LinOp forward_linop(const BfdSystem& sys);         // X -> Y
LinOp synthesis_linop(const BfdSystem& sys);       // coeff -> Y  (A o W)

struct OperatorNormEstimate {
    double value = 0.0;      // estimate of ||K||
    int iters = 0;
    double rel_change = 0.0; // last relative Rayleigh-quotient change
};
OperatorNormEstimate power_method(const LinOp& op, int iters = 50,
                                  std::uint64_t seed = 0x9e37);

enum class Acceleration { none, fista };

struct SolverConfig {
    int max_iters = 500;
    double tol = 1e-10;          // fixed-point residual target (relative)
    double step = 0.0;           // 0 = auto: 0.95 / ||K||^2 via power method
    Acceleration accel = Acceleration::none;
    std::string trace_path;      // when set, (iter, objective, residual) CSV
};

struct SolverResult {
    std::vector<double> x;       // minimizer in the solver's native variable
    int iters = 0;
    bool converged = false;
    // ||v - T(v)|| / max(1, ||v||) where T is one iteration map applied at the
    // last anchor point v (the iterate for ISTA, the extrapolated point for
    // FISTA, max of primal/dual relative changes for the primal-dual scheme)
    double fp_residual = 0.0;
    double objective = 0.0;
};

// min_xi 1/2 || (A W) xi - y ||_Y^2 + alpha * sum d |xi|   (proximal gradient)
SolverResult synthesis_l1(const LinOp& aw, const std::vector<double>& y, double alpha,
                          const Weights& d, const SolverConfig& cfg);

// min_x 1/2 || A x - y ||_Y^2 + alpha * sum d |(U^* x)|    (primal-dual)
// Returns x in the flat X layout of `a`.
SolverResult analysis_l1(const LinOp& a, const FrameSpec& frame,
                         const std::vector<double>& y, double alpha, const Weights& d,
                         const SolverConfig& cfg);

// Exact minimizer of 1/2 || kappa .* xi - eta ||^2 + alpha * sum d |xi|:
// per coordinate soft(eta, alpha d / |kappa|) / kappa where kappa != 0, else 0.
// (Thresholding the raw coefficients at alpha*d and then dividing is NOT the
// minimizer when |kappa| != 1; see the regression test with the ISTA oracle.)
std::vector<double> diag_closed_form(const std::vector<double>& kappa,
                                     const std::vector<double>& eta, double alpha,
                                     const Weights& d);

double objective_synthesis(const LinOp& aw, const std::vector<double>& y,
                           const std::vector<double>& xi, double alpha, const Weights& d);
double objective_analysis(const LinOp& a, const FrameSpec& frame,
                          const std::vector<double>& y, const std::vector<double>& x,
                          double alpha, const Weights& d);
double objective_diag(const std::vector<double>& kappa, const std::vector<double>& eta,
                      const std::vector<double>& xi, double alpha, const Weights& d);

}  // namespace bfdreg
