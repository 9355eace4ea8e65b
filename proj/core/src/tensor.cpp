#include "bmtf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bmtf {

Tensor3::Tensor3(Index n, Index d, Index l, double fill) : n_(n), d_(d), l_(l) {
    if (n < 1 || d < 1 || l < 1)
        throw std::invalid_argument("Tensor3 extents must all be >= 1");
    data_.assign(static_cast<std::size_t>(n * d * l), fill);
}

bool Tensor3::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

MaskedTensor3::MaskedTensor3(Tensor3 values)
    : values_(std::move(values)), observed_(static_cast<std::size_t>(values_.size()), 1) {}

MaskedTensor3::MaskedTensor3(Tensor3 values, std::vector<std::uint8_t> observed)
    : values_(std::move(values)), observed_(std::move(observed)) {
    if (static_cast<Index>(observed_.size()) != values_.size())
        throw std::invalid_argument("mask size does not match tensor size");
}

Index MaskedTensor3::observed_count() const {
    return std::accumulate(observed_.begin(), observed_.end(), Index{0},
                           [](Index acc, std::uint8_t b) { return acc + (b != 0); });
}

Tensor3 MaskedTensor3::zero_filled() const {
    Tensor3 out = values_;
    auto dst = out.values();
    for (std::size_t i = 0; i < dst.size(); ++i)
        if (!observed_[i]) dst[i] = 0.0;
    return out;
}

}  // namespace bmtf
