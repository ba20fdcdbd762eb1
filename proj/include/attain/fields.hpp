#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace attain {

using Cx = std::complex<double>;

/// Scalar field a tensor lives over. Real data is never promoted silently;
/// promotion to Complex is an explicit operation on the owning object.
enum class Field { Real, Complex };

inline const char* field_name(Field f) {
    return f == Field::Real ? "real" : "complex";
}

inline Field field_from_name(const std::string& s) {
    if (s == "real") return Field::Real;
    if (s == "complex") return Field::Complex;
    throw std::invalid_argument("unknown field '" + s + "' (expected \"real\" or \"complex\")");
}

/// Relative tolerance shared by rank decisions (mrank cutoff, projective
/// distinctness, wedge nonvanishing).
inline constexpr double kRankRelTol = 1e-9;

inline bool is_finite(Cx z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
}

}  // namespace attain
