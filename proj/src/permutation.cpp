#include "attain/permutation.hpp"

#include <stdexcept>
#include <string>

namespace attain {

Permutation::Permutation(std::vector<std::size_t> images) : images_(std::move(images)) {
    if (images_.empty()) throw std::invalid_argument("permutation of empty index set");
    std::vector<bool> seen(images_.size(), false);
    for (std::size_t v : images_) {
        if (v >= images_.size() || seen[v]) {
            throw std::invalid_argument("permutation image list is not a bijection");
        }
        seen[v] = true;
    }
}

Permutation Permutation::identity(std::size_t d) {
    std::vector<std::size_t> im(d);
    for (std::size_t i = 0; i < d; ++i) im[i] = i;
    return Permutation(std::move(im));
}

Permutation Permutation::transposition(std::size_t d, std::size_t i, std::size_t j) {
    if (i >= d || j >= d) throw std::invalid_argument("transposition index out of range");
    std::vector<std::size_t> im(d);
    for (std::size_t k = 0; k < d; ++k) im[k] = k;
    std::swap(im[i], im[j]);
    return Permutation(std::move(im));
}

int Permutation::sign() const {
    std::vector<bool> seen(images_.size(), false);
    int sgn = 1;
    for (std::size_t i = 0; i < images_.size(); ++i) {
        if (seen[i]) continue;
        std::size_t len = 0;
        for (std::size_t j = i; !seen[j]; j = images_[j]) {
            seen[j] = true;
            ++len;
        }
        if (len % 2 == 0) sgn = -sgn;
    }
    return sgn;
}

Permutation Permutation::inverse() const {
    std::vector<std::size_t> im(images_.size());
    for (std::size_t i = 0; i < images_.size(); ++i) im[images_[i]] = i;
    return Permutation(std::move(im));
}

Permutation Permutation::then(const Permutation& next) const {
    if (next.size() != size()) throw std::invalid_argument("permutation size mismatch");
    std::vector<std::size_t> im(images_.size());
    for (std::size_t j = 0; j < images_.size(); ++j) im[j] = images_[next.images_[j]];
    return Permutation(std::move(im));
}

}  // namespace attain
