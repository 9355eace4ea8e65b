#pragma once

#include "bmtf/collection.hpp"
#include "bmtf/random.hpp"

#include <optional>
#include <vector>

namespace bmtf {

/// Sampler-side copy of one view: masked entries zeroed, mask as 0/1 reals.
struct PreparedView {
    Tensor3 x;
    std::optional<Tensor3> mask;  // empty when fully observed
    std::vector<Index> slab_observed;
    Index observed = 0;
    double observed_variance = 1.0;

    Index samples() const { return x.samples(); }
    Index features() const { return x.features(); }
    Index slabs() const { return x.slabs(); }
    bool is_matrix() const { return x.is_matrix(); }
    bool fully_observed() const { return !mask.has_value(); }
    bool slab_fully_observed(Index l) const { return slab_observed[l] == samples() * features(); }
};

/// Rows sharing one observation pattern across all views.
struct RowClass {
    std::vector<Index> rows;
    Index representative = 0;
    std::vector<bool> view_full;  // representative row fully observed in view t
};

/**
 * Immutable sampler input built once per collection: zero-filled values,
 * masks, U-group layout, and the grouping of rows by mask pattern so that
 * the latent-row precision is factorized once per pattern.
 */
class PreparedCollection {
  public:
    explicit PreparedCollection(const Collection& c);

    Index samples() const { return n_; }
    Index view_count() const { return static_cast<Index>(views_.size()); }
    const PreparedView& view(Index t) const { return views_[t]; }
    const std::vector<PreparedView>& views() const { return views_; }
    const std::vector<RowClass>& row_classes() const { return row_classes_; }
    const std::vector<std::vector<Index>>& groups() const { return groups_; }
    Index group_count() const { return static_cast<Index>(groups_.size()); }
    /// -1 for matrix views.
    Index group_of(Index t) const { return group_of_view_[t]; }
    const std::vector<Index>& group_of_view() const { return group_of_view_; }

    /// Replaces the observed values of a view, keeping its mask.
    void set_values(Index t, const Tensor3& x);

  private:
    Index n_ = 0;
    std::vector<PreparedView> views_;
    std::vector<RowClass> row_classes_;
    std::vector<std::vector<Index>> groups_;
    std::vector<Index> group_of_view_;
};

/**
 * Per-view slab loadings: loadings[t][l] is the D_t x K matrix mapping a
 * latent row to slab l of view t, with noise precision tau[t][l].
 */
struct SlabLoadings {
    std::vector<std::vector<Matrix>> loadings;
    std::vector<Vector> tau;
};

/**
 * Redraws every row of z from its Gaussian full conditional
 * precision  prior * I + sum_t sum_l tau_tl W_tl' W_tl  (observed (d, l) only),
 * linear term sum_t sum_l tau_tl W_tl' x_n,:,l.
 */
void sample_latent_rows(const PreparedCollection& data, const SlabLoadings& params, Matrix& z,
                        RngStream& rng, double prior_precision = 1.0);

/// Stacks slab loadings into a (D*L) x K matrix, row d + D*l = W_l row d.
Matrix stack_loadings(const std::vector<Matrix>& slabs);

}  // namespace bmtf
