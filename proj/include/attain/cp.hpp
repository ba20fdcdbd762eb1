#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "attain/hypermatrix.hpp"

namespace attain {

enum class SolveStatus { Converged, MaxIter, Diverging };

const char* solve_status_name(SolveStatus s);

enum class InitKind { RandomGaussian, Given };

struct SolveOptions {
    int max_iter = 5000;
    double tol_rel_change = 1e-10;   // stop when the relative residual moves less than this
    double tol_residual = 1e-12;     // stop outright below this relative residual
    double kappa_threshold = 1e2;    // divergence flag level for kappa
    int restarts = 5;
    std::uint64_t seed = 0;
    InitKind init = InitKind::RandomGaussian;
};

/// Weighted sum of rank-one terms: sum_i weights[i] * u_{1,i} (x)...(x) u_{d,i}
/// with unit-norm factor columns and nonnegative weights; any scalar phase is
/// carried by the mode-1 column. Real field keeps every imaginary part zero.
struct CpDecomposition {
    Field field = Field::Real;
    std::vector<std::size_t> shape;
    std::size_t rank = 0;
    std::vector<double> weights;               // length rank, each >= 0
    std::vector<Eigen::MatrixXcd> factors;     // per mode, shape[j] x rank

    Hypermatrix reconstruct() const;
    void validate() const;
};

/// Per-iteration traces of the winning restart plus the stop verdict.
/// residuals[t] is the relative (masked, where applicable) residual after
/// sweep t; kappa[t] = sum_i |weights_i| / norm of the iterate, the diagnostic
/// that blows up exactly when rank-one terms grow and cancel.
struct SolveReport {
    SolveStatus status = SolveStatus::MaxIter;
    int iterations = 0;
    int restart_id = 0;
    std::uint64_t seed = 0;
    std::vector<double> residuals;
    std::vector<double> kappa;
    std::vector<double> restart_residuals;  // final residual of every restart
    bool regularized = false;
    std::vector<std::string> flags;

    double final_residual() const { return residuals.empty() ? 1.0 : residuals.back(); }
    double final_kappa() const { return kappa.empty() ? 1.0 : kappa.back(); }
};

struct Diagnostics {
    double kappa = 1.0;
    std::vector<double> term_norms;
    double reconstruction_norm = 0.0;
    bool degenerate = false;                   // reconstruction numerically zero
    std::optional<double> relative_residual;   // set when a reference is given
};

/// Conditioning report for an existing decomposition; with a reference tensor
/// also evaluates the relative residual against it.
Diagnostics diagnose(const CpDecomposition& decomp, const Hypermatrix* reference = nullptr);

}  // namespace attain
