#include "attain/witness_lab.hpp"

#include <stdexcept>

namespace attain {

namespace {

constexpr double kDeltaZeroRelTol = 1e-10;

void require_pair(const Hypermatrix& f0, const Hypermatrix& f1, const char* what) {
    if (f0.order() != 1 || f1.order() != 1 || f0.shape()[0] != 2 || f1.shape()[0] != 2) {
        throw std::invalid_argument(std::string(what) + ": f0, f1 must be vectors of length 2");
    }
    if (f0.field() != f1.field()) {
        throw std::invalid_argument(std::string(what) + ": f0, f1 must share a field");
    }
    // 2x2 determinant as the independence test.
    const Cx det = f0[0] * f1[1] - f0[1] * f1[0];
    const double scale = f0.norm() * f1.norm();
    if (scale == 0.0 || std::abs(det) <= kRankRelTol * scale) {
        throw std::invalid_argument(std::string(what) + ": {f0, f1} is linearly dependent");
    }
}

void require_2x2x2(const Hypermatrix& a, const char* what) {
    if (a.shape() != std::vector<std::size_t>{2, 2, 2}) {
        throw std::invalid_argument(std::string(what) + ": expected shape (2, 2, 2), got " +
                                    shape_to_string(a.shape()));
    }
}

Cx det2(Cx a, Cx b, Cx c, Cx d) { return a * d - b * c; }

}  // namespace

Hypermatrix dsl_tangent_witness(const Hypermatrix& f0, const Hypermatrix& f1) {
    require_pair(f0, f1, "dsl_tangent_witness");
    Hypermatrix t = outer({f1, f0, f0});
    t += outer({f0, f1, f0});
    t += outer({f0, f0, f1});
    return t;
}

Hypermatrix dsl_open_witness(const Hypermatrix& f0, const Hypermatrix& f1) {
    require_pair(f0, f1, "dsl_open_witness");
    if (f0.field() != Field::Real) {
        throw std::invalid_argument("dsl_open_witness: witness family is real; pass real f0, f1");
    }
    const Hypermatrix sum = f0 + f1;
    Hypermatrix diff = f0;
    diff -= f1;
    Hypermatrix t = outer({sum, f1, f1});
    t += outer({diff, f0, f0});
    t += outer({f1, sum, diff});
    return t;
}

Cx hyperdeterminant(const Hypermatrix& a) {
    require_2x2x2(a, "hyperdeterminant");
    // Entry a(i,j,k) sits at linear position 4i + 2j + k.
    const Cx a000 = a[0], a001 = a[1], a010 = a[2], a011 = a[3];
    const Cx a100 = a[4], a101 = a[5], a110 = a[6], a111 = a[7];
    Cx delta = a000 * a000 * a111 * a111 + a001 * a001 * a110 * a110 +
               a010 * a010 * a101 * a101 + a011 * a011 * a100 * a100;
    delta -= 2.0 * (a000 * a001 * a110 * a111 + a000 * a010 * a101 * a111 +
                    a000 * a011 * a100 * a111 + a001 * a010 * a101 * a110 +
                    a001 * a011 * a100 * a110 + a010 * a011 * a100 * a101);
    delta += 4.0 * (a000 * a011 * a101 * a110 + a001 * a010 * a100 * a111);
    return delta;
}

Cx hyperdeterminant_pencil_oracle(const Hypermatrix& a) {
    require_2x2x2(a, "hyperdeterminant_pencil_oracle");
    const Cx a000 = a[0], a001 = a[1], a010 = a[2], a011 = a[3];
    const Cx a100 = a[4], a101 = a[5], a110 = a[6], a111 = a[7];
    // Slices along mode 1: A0 = a(0,.,.), A1 = a(1,.,.).
    const Cx d0 = det2(a000, a001, a010, a011);
    const Cx d1 = det2(a100, a101, a110, a111);
    const Cx dsum = det2(a000 + a100, a001 + a101, a010 + a110, a011 + a111);
    const Cx q = dsum - d0 - d1;  // middle coefficient of det(A0 + t A1)
    return q * q - 4.0 * d0 * d1;
}

RankCertificate classify_2x2x2(const Hypermatrix& a, double mrank_tol) {
    require_2x2x2(a, "classify_2x2x2");
    RankCertificate cert;
    cert.shape = a.shape();
    cert.mrank = mrank(a, mrank_tol);
    cert.delta = hyperdeterminant(a);
    const double n = a.norm();
    cert.delta_threshold = kDeltaZeroRelTol * n * n * n * n;

    const std::size_t mr_max = cert.mrank.max();
    const std::size_t mr_min = cert.mrank.min();

    if (mr_max == 0) {
        cert.rank_over_field = cert.complex_rank = cert.border_rank = 0;
        return cert;
    }
    if (mr_min < 2) {
        // A matrix in disguise: some mode has a 1-dimensional fiber space.
        cert.rank_over_field = cert.complex_rank = cert.border_rank = mr_max;
        return cert;
    }

    const bool delta_zero = std::abs(cert.delta) <= cert.delta_threshold;
    cert.border_rank = 2;
    if (delta_zero) {
        cert.rank_over_field = cert.complex_rank = 3;
    } else if (a.field() == Field::Real && cert.delta.real() < 0.0) {
        cert.rank_over_field = 3;
        cert.complex_rank = 2;
    } else {
        cert.rank_over_field = cert.complex_rank = 2;
    }
    return cert;
}

}  // namespace attain
