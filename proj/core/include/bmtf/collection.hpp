#pragma once

#include "bmtf/tensor.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bmtf {

struct View {
    std::string name;
    MaskedTensor3 data;
};

/**
 * Views coupled on the sample mode. Tensor views listed together in one
 * third-mode group share a single U matrix; a tensor view in no group gets
 * its own. Matrix views never carry U.
 */
struct Collection {
    std::vector<View> views;
    std::vector<std::vector<Index>> third_mode_groups;

    Index view_count() const { return static_cast<Index>(views.size()); }
    Index samples() const { return views.empty() ? 0 : views.front().data.samples(); }

    /// Declared groups followed by a singleton group for each ungrouped tensor view.
    std::vector<std::vector<Index>> u_groups() const;
    /// Index into u_groups() for each view, or -1 for matrices.
    std::vector<Index> u_group_of_view() const;
};

/// Every broken invariant, one message per problem. Empty means valid.
std::vector<std::string> validate_collection(const Collection& c);

/// Like validate_collection but ignores views without observed entries,
/// which samplers accept (prior recovery).
std::vector<std::string> structural_violations(const Collection& c);

/// Throws std::invalid_argument listing structural violations.
void require_valid_structure(const Collection& c);

/// The L slabs of a view, each as an N x D x 1 masked matrix.
std::vector<MaskedTensor3> unfold_to_matrices(const MaskedTensor3& v);

/// Inverse of unfold_to_matrices.
MaskedTensor3 stack_slabs(const std::vector<MaskedTensor3>& slabs);

/// Collection in which every tensor view is replaced by its slabs, in order.
/// `origin[i]` receives the source view of output view i.
Collection unfold_collection(const Collection& c, std::vector<Index>* origin = nullptr);

}  // namespace bmtf
