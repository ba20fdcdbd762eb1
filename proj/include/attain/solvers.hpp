#pragma once

#include <variant>

#include "attain/cp.hpp"
#include "attain/tensor_ops.hpp"

namespace attain {

/// Observation set for completion problems: zero-based multi-indices,
/// duplicate-free. CLI and file formats address entries 1-based.
struct Mask {
    std::vector<std::vector<std::size_t>> indices;

    void validate(const std::vector<std::size_t>& shape) const;
    std::vector<std::size_t> linear_indices(const Hypermatrix& a) const;
};

struct CpResult {
    CpDecomposition decomposition;
    SolveReport report;
};

/// Alternating least squares for a rank-r fit, normal equations per mode with
/// conjugated Khatri-Rao products over the complex field. Restarts draw
/// independent seeded inits; the best final residual wins. `init` supplies
/// restart 0 when options.init == Given.
CpResult cp_als(const Hypermatrix& a, std::size_t rank, const SolveOptions& options,
                const CpDecomposition* init = nullptr);

/// Symmetric rank-r fit for a symmetric input: each iteration runs one
/// unconstrained sweep, phase-aligns and averages the mode factors per term,
/// refits the weights by least squares, and accepts the iterate only if the
/// residual does not increase. All modes of the result share one factor
/// matrix across modes (per-term phases pushed in by d-th roots).
CpResult symmetric_approx(const Hypermatrix& a, std::size_t rank, const SolveOptions& options);

/// Rank-r fit of the observed entries only: per mode, every factor row is the
/// least-squares solution over the observations hitting that row. Rows with
/// no support keep their previous value under the regularizer and are
/// flagged. Residual traces are masked residuals.
CpResult masked_cp_als(const Hypermatrix& a, const Mask& mask, std::size_t rank,
                       const SolveOptions& options);

/// Fixed support (indices) or free support of a given cardinality.
using SparsityTarget = std::variant<Mask, std::size_t>;

struct SplrResult {
    CpDecomposition low_rank;
    Hypermatrix sparse;
    Hypermatrix sum;  // reconstruction(low_rank) + sparse, the contractual object
    SolveReport report;
};

/// Sparse-plus-low-rank split by block coordinate descent: the sparse step
/// restricts the current residual to the support (fixed pattern) or to its
/// top-k magnitude entries, ties broken by lowest linear index; the low-rank
/// step is a warm-started cp_als on the de-sparsified tensor. The objective
/// |A - B - C| never increases. The sum B + C is the object the problem
/// determines; the split itself need not be unique.
SplrResult splr_solve(const Hypermatrix& a, std::size_t rank, const SparsityTarget& target,
                      const SolveOptions& options);

/// Requested multilinear ranks, one tuple per block.
struct BlockSpec {
    std::vector<std::vector<std::size_t>> blocks;

    void validate(const std::vector<std::size_t>& shape) const;
};

struct BlockTermResult {
    std::vector<Hypermatrix> blocks;
    SolveReport report;
};

/// Sum of fixed-multilinear-rank blocks by block coordinate descent. Each
/// block update truncates the deflated residual via HOSVD plus a fixed number
/// of alternating subspace sweeps; a candidate is accepted only if the
/// objective does not increase, which keeps the per-cycle trace monotone
/// despite the truncation being only quasi-optimal.
BlockTermResult block_term_solve(const Hypermatrix& a, const BlockSpec& spec,
                                 const SolveOptions& options);

/// Best multilinear-rank-(ranks) approximation of a single tensor via HOSVD
/// refined by `sweeps` alternating passes. Exposed for tests and block init.
Hypermatrix truncate_multilinear(const Hypermatrix& a, const std::vector<std::size_t>& ranks,
                                 int sweeps = 2);

/// Shared seeded factor init so that distinct solvers given the same seed
/// start from identical factors.
std::vector<Eigen::MatrixXcd> random_factors(const std::vector<std::size_t>& shape,
                                             std::size_t rank, Field field, std::uint64_t seed,
                                             int restart);

}  // namespace attain
