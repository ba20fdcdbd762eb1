#pragma once

#include <Eigen/Dense>
#include <vector>

#include "attain/hypermatrix.hpp"
#include "attain/permutation.hpp"

namespace attain {

/// Multilinear ranks: rank of each mode unfolding, with the relative singular
/// value cutoff that produced them.
struct MultilinearRank {
    std::vector<std::size_t> ranks;
    double tolerance = kRankRelTol;

    std::size_t max() const;
    std::size_t min() const;
    bool operator==(const MultilinearRank& o) const { return ranks == o.ranks; }
};

/// Rank-one tensor v_1 (x) ... (x) v_d from order-1 operands; entry
/// (i_1,...,i_d) = v_1[i_1] * ... * v_d[i_d]. All operands share one field.
Hypermatrix outer(const std::vector<Hypermatrix>& vectors);

/// Tensor product A (x) B with shape concat(shape(A), shape(B)).
Hypermatrix tensor_product(const Hypermatrix& a, const Hypermatrix& b);

/// Reindexed tensor: acting by pi sends the rank-one v_1 (x) ... (x) v_d to
/// v_{pi(1)} (x) ... (x) v_{pi(d)}. Requires equal mode extents whenever pi
/// moves one mode onto another of a different extent.
Hypermatrix permute_modes(const Hypermatrix& a, const Permutation& pi);

/// (1/d!) sum of all mode permutations. Cubical tensors only; order <= 8.
Hypermatrix symmetrize(const Hypermatrix& a);

/// (1/d!) signed sum of all mode permutations. Cubical tensors only; order <= 8.
Hypermatrix alternate(const Hypermatrix& a);

/// Frobenius pairing sum_i a_i * conj(b_i): linear in the first argument,
/// conjugate-linear in the second. Fields and shapes must match.
Cx inner(const Hypermatrix& a, const Hypermatrix& b);

/// Mode-k unfolding: rows indexed by i_k, columns by the remaining indices in
/// row-major order (modes ascending with k removed, last fastest). Column c
/// of unfold(outer(v_1..v_d), k) equals v_k scaled by the c-th entry of
/// kron(v_1, ..., v_{k-1}, v_{k+1}, ..., v_d).
Eigen::MatrixXcd unfold(const Hypermatrix& a, std::size_t mode);

/// Inverse of unfold for the given shape/mode.
Hypermatrix refold(const Eigen::MatrixXcd& m, const std::vector<std::size_t>& shape,
                   std::size_t mode, Field field);

/// Contraction of mode k with a matrix: unfold(result, k) = m * unfold(a, k).
/// m must have cols == shape[k]; result extent in mode k becomes m.rows().
Hypermatrix mode_product(const Hypermatrix& a, const Eigen::MatrixXcd& m, std::size_t mode);

/// Ranks of all unfoldings; singular values below tol * sigma_max count as zero.
MultilinearRank mrank(const Hypermatrix& a, double tol = kRankRelTol);

/// Flat row-major view as an Eigen column vector.
Eigen::VectorXcd to_eigen(const Hypermatrix& a);
Hypermatrix from_eigen(const Eigen::VectorXcd& v, const std::vector<std::size_t>& shape,
                       Field field);

}  // namespace attain
