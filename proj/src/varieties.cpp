#include "attain/varieties.hpp"

#include <Eigen/SVD>
#include <sstream>
#include <stdexcept>

#include "attain/tensor_ops.hpp"

namespace attain {

namespace {

Hypermatrix vector_to_hm(const Eigen::VectorXcd& v, Field field) {
    std::vector<Cx> data(v.data(), v.data() + v.size());
    if (field == Field::Real) {
        for (Cx& z : data) {
            if (z.imag() != 0.0) {
                throw std::invalid_argument("real witness has a complex vector entry");
            }
        }
    }
    return Hypermatrix::from_data({static_cast<std::size_t>(v.size())}, field, std::move(data));
}

void check_vectors(const StructuredSpec& spec, Field field,
                   const std::vector<std::vector<Eigen::VectorXcd>>& vecs, const char* what) {
    if (vecs.size() != spec.groups.size()) {
        throw std::invalid_argument(std::string(what) + ": expected one vector list per group");
    }
    for (std::size_t i = 0; i < vecs.size(); ++i) {
        if (vecs[i].size() != spec.groups[i].arity) {
            throw std::invalid_argument(std::string(what) + ": group " + std::to_string(i) +
                                        " needs " + std::to_string(spec.groups[i].arity) +
                                        " vectors, got " + std::to_string(vecs[i].size()));
        }
        for (const auto& v : vecs[i]) {
            if (static_cast<std::size_t>(v.size()) != spec.ambient_dim) {
                throw std::invalid_argument(std::string(what) + ": vector length " +
                                            std::to_string(v.size()) + " does not match ambient_dim " +
                                            std::to_string(spec.ambient_dim));
            }
            for (Eigen::Index k = 0; k < v.size(); ++k) {
                if (!is_finite(v(k))) {
                    throw std::invalid_argument(std::string(what) + ": entries must be finite");
                }
                if (field == Field::Real && v(k).imag() != 0.0) {
                    throw std::invalid_argument(std::string(what) +
                                                ": real witness has a complex entry");
                }
            }
        }
    }
}

/// Block product of one group with the slot at position `replace_slot`
/// substituted by `w` (no substitution when replace_slot == arity).
Hypermatrix group_block(const GroupSpec& g, Field field,
                        const std::vector<Eigen::VectorXcd>& vecs, std::size_t replace_slot,
                        const Eigen::VectorXcd* w) {
    std::vector<Eigen::VectorXcd> slots = vecs;
    if (replace_slot < slots.size()) slots[replace_slot] = *w;
    return group_product(g.op, field, slots);
}

}  // namespace

std::size_t StructuredSpec::tensor_order() const {
    std::size_t order = 0;
    for (const GroupSpec& g : groups) order += g.arity * g.power;
    return order;
}

std::vector<std::size_t> StructuredSpec::tensor_shape() const {
    return std::vector<std::size_t>(tensor_order(), ambient_dim);
}

void StructuredSpec::validate() const {
    if (groups.empty()) throw std::invalid_argument("structured spec needs at least one group");
    if (ambient_dim == 0) throw std::invalid_argument("structured spec needs ambient_dim >= 1");
    for (const GroupSpec& g : groups) {
        if (g.arity == 0 || g.power == 0) {
            throw std::invalid_argument("group arity and power must be >= 1");
        }
        if (g.op == GroupOp::Alt && g.arity > ambient_dim) {
            throw std::invalid_argument("alternating group arity exceeds ambient_dim");
        }
    }
    if (tensor_order() > 12) {
        throw std::invalid_argument("structured spec tensor order exceeds the supported limit of 12");
    }
}

Hypermatrix group_product(GroupOp op, Field field, const std::vector<Eigen::VectorXcd>& vectors) {
    std::vector<Hypermatrix> ops;
    ops.reserve(vectors.size());
    for (const auto& v : vectors) ops.push_back(vector_to_hm(v, field));
    Hypermatrix raw = outer(ops);
    if (vectors.size() == 1) return raw;
    return op == GroupOp::Sym ? symmetrize(raw) : alternate(raw);
}

Hypermatrix structured_point(const StructuredSpec& spec, Field field,
                             const std::vector<std::vector<Eigen::VectorXcd>>& base) {
    spec.validate();
    check_vectors(spec, field, base, "structured_point base");
    Hypermatrix acc;
    bool first = true;
    for (std::size_t i = 0; i < spec.groups.size(); ++i) {
        Hypermatrix block = group_product(spec.groups[i].op, field, base[i]);
        for (std::size_t c = 0; c < spec.groups[i].power; ++c) {
            acc = first ? block : tensor_product(acc, block);
            first = false;
        }
    }
    return acc;
}

Hypermatrix structured_tangent(const TangentWitness& witness) {
    const StructuredSpec& spec = witness.spec;
    spec.validate();
    check_vectors(spec, witness.field, witness.base, "structured_tangent base");
    check_vectors(spec, witness.field, witness.perturb, "structured_tangent perturb");

    // Unperturbed block per group, reused in every summand.
    std::vector<Hypermatrix> blocks;
    blocks.reserve(spec.groups.size());
    for (std::size_t i = 0; i < spec.groups.size(); ++i) {
        blocks.push_back(group_product(spec.groups[i].op, witness.field, witness.base[i]));
    }

    Hypermatrix tangent(spec.tensor_shape(), witness.field);
    for (std::size_t i = 0; i < spec.groups.size(); ++i) {
        const GroupSpec& g = spec.groups[i];
        // Derivative of the group block: one slot replaced at a time.
        Hypermatrix dblock(blocks[i].shape(), witness.field);
        for (std::size_t j = 0; j < g.arity; ++j) {
            dblock += group_block(g, witness.field, witness.base[i], j, &witness.perturb[i][j]);
        }
        // Product rule across the power copies of group i.
        for (std::size_t c = 0; c < g.power; ++c) {
            Hypermatrix term;
            bool first = true;
            for (std::size_t l = 0; l < spec.groups.size(); ++l) {
                for (std::size_t cc = 0; cc < spec.groups[l].power; ++cc) {
                    const Hypermatrix& piece =
                        (l == i && cc == c) ? dblock : blocks[l];
                    term = first ? piece : tensor_product(term, piece);
                    first = false;
                }
            }
            tangent += term;
        }
    }
    return tangent;
}

namespace {

double unit_overlap(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 1.0;  // degenerate pair counts as dependent
    return std::abs(a.dot(b)) / (na * nb);
}

bool projectively_distinct(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    return unit_overlap(a, b) < 1.0 - kRankRelTol;
}

bool wedge_nonzero(const std::vector<Eigen::VectorXcd>& columns, std::size_t dim) {
    if (columns.size() > dim) return false;
    Eigen::MatrixXcd m(dim, columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) m.col(static_cast<Eigen::Index>(c)) = columns[c];
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return false;
    return sv(sv.size() - 1) > kRankRelTol * sv(0);
}

}  // namespace

ConditionReport sufficient_condition(const TangentWitness& witness) {
    const StructuredSpec& spec = witness.spec;
    spec.validate();
    check_vectors(spec, witness.field, witness.base, "sufficient_condition base");
    check_vectors(spec, witness.field, witness.perturb, "sufficient_condition perturb");

    ConditionReport report;

    // Stated regime: every structural parameter that is nontrivial (group
    // count, arity, power > 1) must be >= 3, and the flat order must be >= 3.
    report.hypothesis_in_range = spec.tensor_order() >= 3;
    if (spec.groups.size() > 1 && spec.groups.size() < 3) report.hypothesis_in_range = false;
    for (const GroupSpec& g : spec.groups) {
        if (g.arity > 1 && g.arity < 3) report.hypothesis_in_range = false;
        if (g.power > 1 && g.power < 3) report.hypothesis_in_range = false;
    }

    bool all_sym = true;
    bool all_alt = true;
    bool plain_product = true;  // every group Sym, arity 1, power 1
    for (const GroupSpec& g : spec.groups) {
        if (g.op != GroupOp::Sym) all_sym = false;
        if (g.op != GroupOp::Alt) all_alt = false;
        if (g.op != GroupOp::Sym || g.arity != 1 || g.power != 1) plain_product = false;
    }

    std::ostringstream why;
    bool holds = true;

    if (plain_product) {
        report.rule = "slotwise-independence";
        for (std::size_t i = 0; i < spec.groups.size(); ++i) {
            if (!projectively_distinct(witness.base[i][0], witness.perturb[i][0])) {
                holds = false;
                why << "base and perturbation of group " << i << " are linearly dependent; ";
            }
        }
    } else if (all_alt) {
        report.rule = "per-group-wedge";
        for (std::size_t i = 0; i < spec.groups.size(); ++i) {
            std::vector<Eigen::VectorXcd> cols = witness.base[i];
            cols.insert(cols.end(), witness.perturb[i].begin(), witness.perturb[i].end());
            if (!wedge_nonzero(cols, spec.ambient_dim)) {
                holds = false;
                why << "wedge of base and perturbation vectors of group " << i << " vanishes; ";
            }
        }
    } else {
        // Any Sym content beyond a plain product compares projective classes
        // across all Sym slots; Alt groups in a mixed spec keep their wedge rule.
        report.rule = all_sym ? "projective-distinctness" : "mixed-groupwise";
        std::vector<std::pair<std::string, const Eigen::VectorXcd*>> classes;
        for (std::size_t i = 0; i < spec.groups.size(); ++i) {
            const GroupSpec& g = spec.groups[i];
            if (g.op == GroupOp::Alt) {
                std::vector<Eigen::VectorXcd> cols = witness.base[i];
                cols.insert(cols.end(), witness.perturb[i].begin(), witness.perturb[i].end());
                if (!wedge_nonzero(cols, spec.ambient_dim)) {
                    holds = false;
                    why << "wedge of base and perturbation vectors of group " << i << " vanishes; ";
                }
                continue;
            }
            for (std::size_t j = 0; j < g.arity; ++j) {
                classes.emplace_back("v[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                                     &witness.base[i][j]);
                classes.emplace_back("w[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                                     &witness.perturb[i][j]);
            }
        }
        for (std::size_t a = 0; a < classes.size(); ++a) {
            for (std::size_t b = a + 1; b < classes.size(); ++b) {
                if (!projectively_distinct(*classes[a].second, *classes[b].second)) {
                    holds = false;
                    why << "projective classes of " << classes[a].first << " and "
                        << classes[b].first << " coincide; ";
                }
            }
        }
    }

    report.holds = holds;
    report.reason = holds ? "condition satisfied under rule " + report.rule : why.str();
    return report;
}

}  // namespace attain
