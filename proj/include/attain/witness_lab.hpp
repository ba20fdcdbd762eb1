#pragma once

#include <vector>

#include "attain/hypermatrix.hpp"
#include "attain/tensor_ops.hpp"

namespace attain {

/// Rank classification of a 2x2x2 hypermatrix. delta is the degree-4
/// hyperdeterminant value (imaginary part zero for real input). For real
/// input, rank_over_field is the rank over the reals and complex_rank the
/// rank after promotion; for complex input the two coincide. border_rank is
/// the border rank over the tensor's own field.
struct RankCertificate {
    std::vector<std::size_t> shape;
    Cx delta = Cx(0.0, 0.0);
    double delta_threshold = 0.0;  // |delta| at or below this counts as zero
    MultilinearRank mrank;
    std::size_t rank_over_field = 0;
    std::size_t complex_rank = 0;
    std::size_t border_rank = 0;
};

/// Tangent-type witness f1 (x) f0 (x) f0 + f0 (x) f1 (x) f0 + f0 (x) f0 (x) f1
/// for independent f0, f1 in a 2-dimensional space: border rank 2, rank 3
/// over both fields. Throws if {f0, f1} is numerically dependent.
Hypermatrix dsl_tangent_witness(const Hypermatrix& f0, const Hypermatrix& f1);

/// Open-set witness
///   (f0+f1) (x) f1 (x) f1 + (f0-f1) (x) f0 (x) f0 + f1 (x) (f0+f1) (x) (f0-f1)
/// for independent f0, f1: negative hyperdeterminant, real rank 3, complex
/// rank 2. Tensors of this form fill an open set, so real best rank-2
/// approximation failures have positive volume. Real input only.
Hypermatrix dsl_open_witness(const Hypermatrix& f0, const Hypermatrix& f1);

/// Cayley hyperdeterminant of a 2x2x2 hypermatrix (degree 4; scales as
/// lambda^4 and is invariant under mode permutations). Sign convention over
/// the reals: positive on rank-2, negative on rank-3, zero on the boundary.
Cx hyperdeterminant(const Hypermatrix& a);

/// Independent evaluation used as the test oracle: discriminant of the slice
/// pencil det(A0 + t A1) minus 4 det(A0) det(A1); algebraically identical to
/// the expanded polynomial but computed from 2x2 determinants only.
Cx hyperdeterminant_pencil_oracle(const Hypermatrix& a);

/// Decision table on (mrank, sign of delta); |delta| <= 1e-10 * norm^4
/// counts as zero. Real input: delta > 0 gives real and complex rank 2;
/// delta < 0 gives real rank 3, complex rank 2; delta = 0 at full mrank
/// gives rank 3 over both fields with border rank 2. Deficient mrank falls
/// back to the matrix rules (rank = largest mrank entry). Complex input uses
/// delta != 0 vs delta = 0 only.
RankCertificate classify_2x2x2(const Hypermatrix& a, double mrank_tol = kRankRelTol);

}  // namespace attain
