#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "attain/fields.hpp"

namespace attain {

/// Dense order-d array over Real or Complex scalars.
///
/// Storage is a contiguous row-major buffer: the entry at zero-based index
/// (i_1, ..., i_d) sits at linear position
///     ((i_1 * n_2 + i_2) * n_3 + i_3) * ... + i_d,
/// i.e. the last index varies fastest. CLI documentation and file formats
/// address entries 1-based; this class is zero-based throughout.
///
/// Entries are stored as (re, im) pairs for both fields. A Real hypermatrix
/// keeps every imaginary part exactly zero; that invariant is validated on
/// construction from external data and preserved by all operations. Binary
/// operations require matching fields; promote() is the only way to move a
/// Real hypermatrix to Complex.
class Hypermatrix {
public:
    Hypermatrix() = default;

    /// Zero-filled hypermatrix. Every extent must be >= 1, order >= 1.
    Hypermatrix(std::vector<std::size_t> shape, Field field);

    /// Takes ownership of a row-major buffer; validates length, finiteness,
    /// and (for Real) vanishing imaginary parts.
    static Hypermatrix from_data(std::vector<std::size_t> shape, Field field,
                                 std::vector<Cx> data);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t order() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    Field field() const { return field_; }

    Cx& operator[](std::size_t linear) { return data_[linear]; }
    Cx operator[](std::size_t linear) const { return data_[linear]; }
    std::span<const Cx> data() const { return data_; }
    std::span<Cx> data() { return data_; }

    std::size_t linear_index(std::span<const std::size_t> idx) const;
    std::vector<std::size_t> multi_index(std::size_t linear) const;

    Cx at(std::span<const std::size_t> idx) const { return data_[linear_index(idx)]; }
    Cx& at(std::span<const std::size_t> idx) { return data_[linear_index(idx)]; }

    double norm() const;
    double max_abs() const;

    /// Explicit Real -> Complex promotion; identity on Complex input.
    Hypermatrix promote() const;

    Hypermatrix& operator+=(const Hypermatrix& other);
    Hypermatrix& operator-=(const Hypermatrix& other);
    Hypermatrix& operator*=(double s);

    /// Complex scalar multiple; requires a Complex hypermatrix.
    Hypermatrix& scale(Cx s);

    friend Hypermatrix operator+(Hypermatrix a, const Hypermatrix& b) { return a += b; }
    friend Hypermatrix operator-(Hypermatrix a, const Hypermatrix& b) { return a -= b; }
    friend Hypermatrix operator*(double s, Hypermatrix a) { return a *= s; }

    /// Order-1 convenience constructors.
    static Hypermatrix vector(std::vector<double> entries);
    static Hypermatrix vector(std::vector<Cx> entries);

private:
    void require_same_layout(const Hypermatrix& other, const char* op) const;

    std::vector<std::size_t> shape_;
    Field field_ = Field::Real;
    std::vector<Cx> data_;
};

/// Largest absolute entry difference; shapes and fields must match.
double max_abs_diff(const Hypermatrix& a, const Hypermatrix& b);

std::string shape_to_string(std::span<const std::size_t> shape);

}  // namespace attain
