#pragma once

#include <cstddef>
#include <vector>

namespace attain {

/// Permutation of {0, ..., d-1}, stored as the image list (image(i) = pi(i)).
class Permutation {
public:
    explicit Permutation(std::vector<std::size_t> images);

    static Permutation identity(std::size_t d);
    static Permutation transposition(std::size_t d, std::size_t i, std::size_t j);

    std::size_t size() const { return images_.size(); }
    std::size_t image(std::size_t i) const { return images_[i]; }
    const std::vector<std::size_t>& images() const { return images_; }

    /// +1 for even, -1 for odd.
    int sign() const;

    Permutation inverse() const;

    /// Permutation whose tensor action equals acting by *this first, then by
    /// `next`: permute(permute(A, p), q) == permute(A, p.then(q)).
    Permutation then(const Permutation& next) const;

    bool operator==(const Permutation& other) const { return images_ == other.images_; }

private:
    std::vector<std::size_t> images_;
};

}  // namespace attain
