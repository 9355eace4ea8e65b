#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace bmtf {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/**
 * Dense N x D x L array of reals. A matrix is the L == 1 case.
 *
 * Storage is slab-major: slab l is a column-major N x D block, so each slab
 * can be viewed as an Eigen matrix without copying.
 */
class Tensor3 {
  public:
    Tensor3() = default;
    Tensor3(Index n, Index d, Index l, double fill = 0.0);

    Index samples() const { return n_; }
    Index features() const { return d_; }
    Index slabs() const { return l_; }
    Index size() const { return n_ * d_ * l_; }
    bool is_matrix() const { return l_ == 1; }

    double& operator()(Index n, Index d, Index l) { return data_[offset(n, d, l)]; }
    double operator()(Index n, Index d, Index l) const { return data_[offset(n, d, l)]; }

    Eigen::Map<Matrix> slab(Index l) { return {data_.data() + l * n_ * d_, n_, d_}; }
    Eigen::Map<const Matrix> slab(Index l) const { return {data_.data() + l * n_ * d_, n_, d_}; }

    /// N x (D*L) view; column d + D*l holds fiber (d, l).
    Eigen::Map<Matrix> unfolded() { return {data_.data(), n_, d_ * l_}; }
    Eigen::Map<const Matrix> unfolded() const { return {data_.data(), n_, d_ * l_}; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    bool same_shape(const Tensor3& other) const {
        return n_ == other.n_ && d_ == other.d_ && l_ == other.l_;
    }
    bool all_finite() const;

    friend bool operator==(const Tensor3&, const Tensor3&) = default;

  private:
    Index offset(Index n, Index d, Index l) const { return n + n_ * (d + d_ * l); }

    Index n_ = 0;
    Index d_ = 0;
    Index l_ = 0;
    std::vector<double> data_;
};

/// Tensor plus an observation mask; masked entries never enter a likelihood.
class MaskedTensor3 {
  public:
    MaskedTensor3() = default;
    /// Fully observed.
    explicit MaskedTensor3(Tensor3 values);
    MaskedTensor3(Tensor3 values, std::vector<std::uint8_t> observed);

    const Tensor3& values() const { return values_; }
    Tensor3& values() { return values_; }

    Index samples() const { return values_.samples(); }
    Index features() const { return values_.features(); }
    Index slabs() const { return values_.slabs(); }
    bool is_matrix() const { return values_.is_matrix(); }

    bool observed(Index n, Index d, Index l) const {
        return observed_[n + samples() * (d + features() * l)] != 0;
    }
    void set_observed(Index n, Index d, Index l, bool on) {
        observed_[n + samples() * (d + features() * l)] = on ? 1 : 0;
    }
    std::span<const std::uint8_t> mask() const { return observed_; }

    Index observed_count() const;
    bool fully_observed() const { return observed_count() == values_.size(); }

    /// Copy with every masked entry set to zero.
    Tensor3 zero_filled() const;

    friend bool operator==(const MaskedTensor3&, const MaskedTensor3&) = default;

  private:
    Tensor3 values_;
    std::vector<std::uint8_t> observed_;
};

}  // namespace bmtf
