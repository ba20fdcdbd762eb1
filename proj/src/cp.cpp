#include "attain/cp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "attain/tensor_ops.hpp"

namespace attain {

const char* solve_status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::MaxIter: return "max_iter";
        case SolveStatus::Diverging: return "diverging";
    }
    return "unknown";
}

void CpDecomposition::validate() const {
    if (shape.empty()) throw std::invalid_argument("cp decomposition: empty shape");
    if (weights.size() != rank) throw std::invalid_argument("cp decomposition: weight count != rank");
    if (factors.size() != shape.size()) {
        throw std::invalid_argument("cp decomposition: one factor matrix per mode required");
    }
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw std::invalid_argument("cp decomposition: weights must be finite and >= 0");
        }
    }
    for (std::size_t j = 0; j < factors.size(); ++j) {
        if (static_cast<std::size_t>(factors[j].rows()) != shape[j] ||
            static_cast<std::size_t>(factors[j].cols()) != rank) {
            throw std::invalid_argument("cp decomposition: factor shape mismatch in mode " +
                                        std::to_string(j));
        }
        if (field == Field::Real && factors[j].imag().cwiseAbs().maxCoeff() != 0.0) {
            throw std::invalid_argument("cp decomposition: real field with complex factors");
        }
    }
}

Hypermatrix CpDecomposition::reconstruct() const {
    validate();
    Hypermatrix out(shape, field);
    const std::size_t d = shape.size();
    std::vector<std::size_t> idx(d, 0);
    const std::size_t total = out.size();
    for (std::size_t linear = 0; linear < total; ++linear) {
        std::size_t rem = linear;
        for (std::size_t k = d; k-- > 0;) {
            idx[k] = rem % shape[k];
            rem /= shape[k];
        }
        Cx s(0.0, 0.0);
        for (std::size_t i = 0; i < rank; ++i) {
            Cx p(weights[i], 0.0);
            for (std::size_t j = 0; j < d; ++j) {
                p *= factors[j](static_cast<Eigen::Index>(idx[j]), static_cast<Eigen::Index>(i));
            }
            s += p;
        }
        out[linear] = s;
    }
    return out;
}

Diagnostics diagnose(const CpDecomposition& decomp, const Hypermatrix* reference) {
    decomp.validate();
    Diagnostics diag;
    diag.term_norms.resize(decomp.rank);
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < decomp.rank; ++i) {
        double t = decomp.weights[i];
        for (const auto& f : decomp.factors) t *= f.col(static_cast<Eigen::Index>(i)).norm();
        diag.term_norms[i] = t;
        weight_sum += t;
    }
    const Hypermatrix b = decomp.reconstruct();
    diag.reconstruction_norm = b.norm();
    if (diag.reconstruction_norm <= 0.0) {
        diag.degenerate = true;
        diag.kappa = weight_sum == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    } else {
        diag.kappa = weight_sum / diag.reconstruction_norm;
    }
    if (reference != nullptr) {
        if (reference->field() != decomp.field) {
            throw std::invalid_argument("diagnose: reference field differs from decomposition");
        }
        Hypermatrix r = *reference;
        r -= b;
        const double denom = reference->norm();
        diag.relative_residual = denom > 0.0 ? r.norm() / denom : r.norm();
    }
    return diag;
}

}  // namespace attain
