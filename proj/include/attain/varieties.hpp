#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "attain/hypermatrix.hpp"

namespace attain {

/// Combining operation inside a factor group: Sym builds the symmetrized
/// product of the group's vectors, Alt the antisymmetrized (wedge) product,
/// both with the 1/arity! coefficient of the permutation average.
enum class GroupOp { Sym, Alt };

struct GroupSpec {
    GroupOp op = GroupOp::Sym;
    std::size_t arity = 1;  // vectors combined inside the group
    std::size_t power = 1;  // tensor-power copies of the group block
};

/// Shape of a structured rank-one point: a tensor product, over groups, of
/// `power` copies of each group's Sym/Alt product of `arity` vectors, all
/// drawn from one ambient space of dimension ambient_dim. The flat tensor
/// order is sum_i arity_i * power_i.
///
/// Instances of the classical families:
///   - product of order-1 power-1 groups: plain multi-factor products,
///   - one Sym group, arity 1, power d: symmetric powers of a single vector,
///   - one Sym group, arity d, power 1: symmetrized products of d vectors,
///   - one Alt group, arity k, power 1: wedge products of k vectors,
/// and mixed powers give the composed families.
struct StructuredSpec {
    std::vector<GroupSpec> groups;
    std::size_t ambient_dim = 0;

    std::size_t tensor_order() const;
    std::vector<std::size_t> tensor_shape() const;
    void validate() const;
};

/// Base point vectors plus one perturbation vector per slot; layout is
/// [group][slot within group], each an ambient_dim vector.
struct TangentWitness {
    StructuredSpec spec;
    Field field = Field::Complex;
    std::vector<std::vector<Eigen::VectorXcd>> base;
    std::vector<std::vector<Eigen::VectorXcd>> perturb;
};

/// Outcome of the rank-two sufficient condition check for a tangent witness.
/// `holds` reports the algebraic condition; `hypothesis_in_range` separately
/// reports whether every nontrivial structural parameter (group count, arity,
/// power) is >= 3 and the flat order is >= 3, the regime the condition is
/// stated for. The condition itself is evaluated for any parameters.
struct ConditionReport {
    bool holds = false;
    bool hypothesis_in_range = false;
    std::string rule;
    std::string reason;
};

/// The structured rank-one tensor for the given base vectors.
Hypermatrix structured_point(const StructuredSpec& spec, Field field,
                             const std::vector<std::vector<Eigen::VectorXcd>>& base);

/// Derivative at t = 0 of t -> structured_point(spec, base + t * perturb):
/// the sum over groups, power copies, and slots of the point with one slot's
/// base vector replaced by its perturbation. Classical tangent normal forms
/// are positive integer multiples of single group terms of this sum, so the
/// span is the same; this normalization is the one the difference quotient
/// (point(base + t*perturb) - point(base)) / t converges to linearly in t.
Hypermatrix structured_tangent(const TangentWitness& witness);

/// Checks the genericity condition under which the tangent vector is a
/// border-rank-two tensor of rank strictly greater than two. Rules applied:
///   - every-group-Alt: per group, the wedge of all base and perturbation
///     vectors of that group must not vanish;
///   - all groups Sym with arity 1 and power 1 (plain multi-factor product):
///     per slot, {base, perturbation} must be linearly independent;
///   - any other Sym group content: the projective classes of all Sym-slot
///     base and perturbation vectors must be pairwise distinct.
/// Numerical thresholds use the shared relative tolerance kRankRelTol.
ConditionReport sufficient_condition(const TangentWitness& witness);

/// Group block product: Sym/Alt average of outer(vectors). Exposed for tests.
Hypermatrix group_product(GroupOp op, Field field, const std::vector<Eigen::VectorXcd>& vectors);

}  // namespace attain
