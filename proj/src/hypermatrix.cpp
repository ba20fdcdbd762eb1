#include "attain/hypermatrix.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace attain {

namespace {

std::size_t checked_total(const std::vector<std::size_t>& shape) {
    if (shape.empty()) throw std::invalid_argument("hypermatrix order must be >= 1");
    std::size_t total = 1;
    for (std::size_t n : shape) {
        if (n == 0) throw std::invalid_argument("hypermatrix extents must be >= 1");
        if (total > SIZE_MAX / n) throw std::invalid_argument("hypermatrix size overflow");
        total *= n;
    }
    return total;
}

}  // namespace

Hypermatrix::Hypermatrix(std::vector<std::size_t> shape, Field field)
    : shape_(std::move(shape)), field_(field), data_(checked_total(shape_), Cx(0.0, 0.0)) {}

Hypermatrix Hypermatrix::from_data(std::vector<std::size_t> shape, Field field,
                                   std::vector<Cx> data) {
    const std::size_t total = checked_total(shape);
    if (data.size() != total) {
        throw std::invalid_argument("hypermatrix data length " + std::to_string(data.size()) +
                                    " does not match shape " + shape_to_string(shape));
    }
    for (const Cx& z : data) {
        if (!is_finite(z)) throw std::invalid_argument("hypermatrix entries must be finite");
        if (field == Field::Real && z.imag() != 0.0) {
            throw std::invalid_argument("real hypermatrix has a nonzero imaginary part");
        }
    }
    Hypermatrix h;
    h.shape_ = std::move(shape);
    h.field_ = field;
    h.data_ = std::move(data);
    return h;
}

std::size_t Hypermatrix::linear_index(std::span<const std::size_t> idx) const {
    if (idx.size() != shape_.size()) {
        throw std::invalid_argument("index order " + std::to_string(idx.size()) +
                                    " does not match hypermatrix order " +
                                    std::to_string(shape_.size()));
    }
    std::size_t linear = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] >= shape_[k]) {
            throw std::out_of_range("index " + std::to_string(idx[k]) + " out of range for mode " +
                                    std::to_string(k) + " of extent " + std::to_string(shape_[k]));
        }
        linear = linear * shape_[k] + idx[k];
    }
    return linear;
}

std::vector<std::size_t> Hypermatrix::multi_index(std::size_t linear) const {
    if (linear >= data_.size()) throw std::out_of_range("linear index out of range");
    std::vector<std::size_t> idx(shape_.size());
    for (std::size_t k = shape_.size(); k-- > 0;) {
        idx[k] = linear % shape_[k];
        linear /= shape_[k];
    }
    return idx;
}

double Hypermatrix::norm() const {
    double s = 0.0;
    for (const Cx& z : data_) s += std::norm(z);
    return std::sqrt(s);
}

double Hypermatrix::max_abs() const {
    double m = 0.0;
    for (const Cx& z : data_) m = std::max(m, std::abs(z));
    return m;
}

Hypermatrix Hypermatrix::promote() const {
    Hypermatrix h(*this);
    h.field_ = Field::Complex;
    return h;
}

void Hypermatrix::require_same_layout(const Hypermatrix& other, const char* op) const {
    if (field_ != other.field_) {
        throw std::invalid_argument(std::string(op) + ": mixed fields (" + field_name(field_) +
                                    " vs " + field_name(other.field_) +
                                    "); promote() the real operand first");
    }
    if (shape_ != other.shape_) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    shape_to_string(shape_) + " vs " +
                                    shape_to_string(other.shape_));
    }
}

Hypermatrix& Hypermatrix::operator+=(const Hypermatrix& other) {
    require_same_layout(other, "add");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Hypermatrix& Hypermatrix::operator-=(const Hypermatrix& other) {
    require_same_layout(other, "subtract");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Hypermatrix& Hypermatrix::operator*=(double s) {
    for (Cx& z : data_) z *= s;
    return *this;
}

Hypermatrix& Hypermatrix::scale(Cx s) {
    if (field_ == Field::Real && s.imag() != 0.0) {
        throw std::invalid_argument("complex scalar on a real hypermatrix; promote() first");
    }
    for (Cx& z : data_) z *= s;
    return *this;
}

Hypermatrix Hypermatrix::vector(std::vector<double> entries) {
    std::vector<Cx> data(entries.begin(), entries.end());
    return from_data({entries.size()}, Field::Real, std::move(data));
}

Hypermatrix Hypermatrix::vector(std::vector<Cx> entries) {
    // taking size() before the move: argument evaluation order is unspecified
    const std::size_t n = entries.size();
    return from_data({n}, Field::Complex, std::move(entries));
}

double max_abs_diff(const Hypermatrix& a, const Hypermatrix& b) {
    if (a.shape() != b.shape()) throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

std::string shape_to_string(std::span<const std::size_t> shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t k = 0; k < shape.size(); ++k) {
        if (k) os << ", ";
        os << shape[k];
    }
    os << ')';
    return os.str();
}

}  // namespace attain
