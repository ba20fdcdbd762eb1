#include "attain/tensor_ops.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace attain {

std::size_t MultilinearRank::max() const {
    return *std::max_element(ranks.begin(), ranks.end());
}

std::size_t MultilinearRank::min() const {
    return *std::min_element(ranks.begin(), ranks.end());
}

Hypermatrix outer(const std::vector<Hypermatrix>& vectors) {
    if (vectors.empty()) throw std::invalid_argument("outer: no operands");
    const Field field = vectors.front().field();
    std::vector<std::size_t> shape;
    shape.reserve(vectors.size());
    for (const Hypermatrix& v : vectors) {
        if (v.order() != 1) throw std::invalid_argument("outer: operands must have order 1");
        if (v.field() != field) {
            throw std::invalid_argument("outer: mixed fields; promote() the real operands first");
        }
        shape.push_back(v.shape()[0]);
    }
    Hypermatrix out(shape, field);
    const std::size_t total = out.size();
    for (std::size_t linear = 0; linear < total; ++linear) {
        Cx p(1.0, 0.0);
        std::size_t rem = linear;
        for (std::size_t k = shape.size(); k-- > 0;) {
            p *= vectors[k][rem % shape[k]];
            rem /= shape[k];
        }
        out[linear] = p;
    }
    return out;
}

Hypermatrix tensor_product(const Hypermatrix& a, const Hypermatrix& b) {
    if (a.field() != b.field()) {
        throw std::invalid_argument("tensor_product: mixed fields; promote() the real operand first");
    }
    std::vector<std::size_t> shape = a.shape();
    shape.insert(shape.end(), b.shape().begin(), b.shape().end());
    Hypermatrix out(std::move(shape), a.field());
    const std::size_t nb = b.size();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Cx ai = a[i];
        for (std::size_t j = 0; j < nb; ++j) out[i * nb + j] = ai * b[j];
    }
    return out;
}

Hypermatrix permute_modes(const Hypermatrix& a, const Permutation& pi) {
    const std::size_t d = a.order();
    if (pi.size() != d) throw std::invalid_argument("permute_modes: permutation order mismatch");
    std::vector<std::size_t> out_shape(d);
    for (std::size_t j = 0; j < d; ++j) out_shape[j] = a.shape()[pi.image(j)];
    const Permutation inv = pi.inverse();
    Hypermatrix out(out_shape, a.field());
    std::vector<std::size_t> y(d), x(d);
    const std::size_t total = out.size();
    for (std::size_t linear = 0; linear < total; ++linear) {
        std::size_t rem = linear;
        for (std::size_t k = d; k-- > 0;) {
            y[k] = rem % out_shape[k];
            rem /= out_shape[k];
        }
        for (std::size_t k = 0; k < d; ++k) x[k] = y[inv.image(k)];
        out[linear] = a.at(x);
    }
    return out;
}

namespace {

constexpr std::size_t kMaxPermutationOrder = 8;

void require_cubical(const Hypermatrix& a, const char* op) {
    for (std::size_t n : a.shape()) {
        if (n != a.shape()[0]) {
            throw std::invalid_argument(std::string(op) + ": requires equal mode extents, got " +
                                        shape_to_string(a.shape()));
        }
    }
}

Hypermatrix signed_permutation_average(const Hypermatrix& a, bool use_sign) {
    const char* op = use_sign ? "alternate" : "symmetrize";
    require_cubical(a, op);
    const std::size_t d = a.order();
    if (d > kMaxPermutationOrder) {
        throw std::invalid_argument(std::string(op) + ": order " + std::to_string(d) +
                                    " exceeds the permutation-sum limit of " +
                                    std::to_string(kMaxPermutationOrder));
    }
    std::vector<std::size_t> images(d);
    std::iota(images.begin(), images.end(), std::size_t{0});
    Hypermatrix acc(a.shape(), a.field());
    std::size_t count = 0;
    do {
        Permutation pi(images);
        Hypermatrix term = permute_modes(a, pi);
        if (use_sign && pi.sign() < 0) {
            acc -= term;
        } else {
            acc += term;
        }
        ++count;
    } while (std::next_permutation(images.begin(), images.end()));
    acc *= 1.0 / static_cast<double>(count);
    return acc;
}

}  // namespace

Hypermatrix symmetrize(const Hypermatrix& a) { return signed_permutation_average(a, false); }

Hypermatrix alternate(const Hypermatrix& a) { return signed_permutation_average(a, true); }

Cx inner(const Hypermatrix& a, const Hypermatrix& b) {
    if (a.field() != b.field()) {
        throw std::invalid_argument("inner: mixed fields; promote() the real operand first");
    }
    if (a.shape() != b.shape()) {
        throw std::invalid_argument("inner: shape mismatch " + shape_to_string(a.shape()) +
                                    " vs " + shape_to_string(b.shape()));
    }
    Cx s(0.0, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * std::conj(b[i]);
    return s;
}

Eigen::MatrixXcd unfold(const Hypermatrix& a, std::size_t mode) {
    const std::size_t d = a.order();
    if (mode >= d) throw std::invalid_argument("unfold: mode out of range");
    const std::size_t rows = a.shape()[mode];
    const std::size_t cols = a.size() / rows;

    // Row-major strides, then the stride decomposition of the column index.
    std::vector<std::size_t> stride(d, 1);
    for (std::size_t k = d - 1; k-- > 0;) stride[k] = stride[k + 1] * a.shape()[k + 1];

    Eigen::MatrixXcd m(rows, cols);
    for (std::size_t c = 0; c < cols; ++c) {
        std::size_t rem = c;
        std::size_t base = 0;
        for (std::size_t k = d; k-- > 0;) {
            if (k == mode) continue;
            const std::size_t ik = rem % a.shape()[k];
            rem /= a.shape()[k];
            base += ik * stride[k];
        }
        for (std::size_t r = 0; r < rows; ++r) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                a[base + r * stride[mode]];
        }
    }
    return m;
}

Hypermatrix refold(const Eigen::MatrixXcd& m, const std::vector<std::size_t>& shape,
                   std::size_t mode, Field field) {
    const std::size_t d = shape.size();
    if (mode >= d) throw std::invalid_argument("refold: mode out of range");
    std::size_t total = 1;
    for (std::size_t n : shape) total *= n;
    const std::size_t rows = shape[mode];
    const std::size_t cols = total / rows;
    if (static_cast<std::size_t>(m.rows()) != rows || static_cast<std::size_t>(m.cols()) != cols) {
        throw std::invalid_argument("refold: matrix dimensions do not match shape/mode");
    }
    std::vector<std::size_t> stride(d, 1);
    for (std::size_t k = d - 1; k-- > 0;) stride[k] = stride[k + 1] * shape[k + 1];

    Hypermatrix out(shape, field);
    for (std::size_t c = 0; c < cols; ++c) {
        std::size_t rem = c;
        std::size_t base = 0;
        for (std::size_t k = d; k-- > 0;) {
            if (k == mode) continue;
            const std::size_t ik = rem % shape[k];
            rem /= shape[k];
            base += ik * stride[k];
        }
        for (std::size_t r = 0; r < rows; ++r) {
            out[base + r * stride[mode]] =
                m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        }
    }
    return out;
}

Hypermatrix mode_product(const Hypermatrix& a, const Eigen::MatrixXcd& m, std::size_t mode) {
    if (mode >= a.order()) throw std::invalid_argument("mode_product: mode out of range");
    if (static_cast<std::size_t>(m.cols()) != a.shape()[mode]) {
        throw std::invalid_argument("mode_product: matrix cols must equal the mode extent");
    }
    Eigen::MatrixXcd u = m * unfold(a, mode);
    std::vector<std::size_t> shape = a.shape();
    shape[mode] = static_cast<std::size_t>(m.rows());
    return refold(u, shape, mode, a.field());
}

MultilinearRank mrank(const Hypermatrix& a, double tol) {
    if (!(tol >= 0.0) || tol >= 1.0) throw std::invalid_argument("mrank: tol must lie in [0, 1)");
    MultilinearRank result;
    result.tolerance = tol;
    result.ranks.resize(a.order());
    for (std::size_t k = 0; k < a.order(); ++k) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(unfold(a, k));
        const auto& sv = svd.singularValues();
        const double cutoff = sv.size() > 0 ? tol * sv(0) : 0.0;
        std::size_t r = 0;
        for (Eigen::Index i = 0; i < sv.size(); ++i) {
            if (sv(i) > cutoff && sv(i) > 0.0) ++r;
        }
        result.ranks[k] = r;
    }
    return result;
}

Eigen::VectorXcd to_eigen(const Hypermatrix& a) {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i];
    return v;
}

Hypermatrix from_eigen(const Eigen::VectorXcd& v, const std::vector<std::size_t>& shape,
                       Field field) {
    std::vector<Cx> data(v.data(), v.data() + v.size());
    return Hypermatrix::from_data(shape, field, std::move(data));
}

}  // namespace attain
