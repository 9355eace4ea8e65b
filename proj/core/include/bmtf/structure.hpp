#pragma once

#include "bmtf/mtf.hpp"
#include "bmtf/rmtf.hpp"
#include "bmtf/samples.hpp"

#include <vector>

namespace bmtf {

/// Components classified by the views they are active in.
struct ComponentCounts {
    double shared = 0.0;
    std::vector<double> specific;  // per view
    double empty = 0.0;
};

/// Per-view activity of one snapshot, T x K, in [0, 1]. A tensor view of
/// the relaxed model counts the fraction of its slabs the component is
/// active in.
Matrix view_activity(const MtfState& s);
Matrix view_activity(const RmtfState& s);

/// Collapses activity over derived views onto their source views: row o is
/// the mean of the rows i with origin[i] == o (each derived view is one
/// slab, so this is again a fraction of active slabs).
Matrix fold_activity(const Matrix& activity, const std::vector<Index>& origin, Index source_views);

/// Elementwise mean of T x K activity matrices.
Matrix mean_activity(const std::vector<Matrix>& snapshots);

/// Active where mean > threshold; shared in >= 2 views, specific in 1, empty in 0.
ComponentCounts component_structure(const Matrix& mean_activity, double threshold = 0.5);

template <typename State>
ComponentCounts component_structure(const PosteriorSamples<State>& samples, double threshold = 0.5) {
    std::vector<Matrix> h;
    for (const auto& s : samples.snapshots) h.push_back(view_activity(s));
    return component_structure(mean_activity(h), threshold);
}

/// Elementwise average of counts (e.g. over chains or repetitions).
ComponentCounts average_counts(const std::vector<ComponentCounts>& counts);

/// Posterior mean of V for a view.
Matrix posterior_mean_loading(const PosteriorSamples<MtfState>& samples, Index view);
/// Posterior mean of the slab-averaged W for a view.
Matrix posterior_mean_loading(const PosteriorSamples<RmtfState>& samples, Index view);
/// Posterior mean of V (tensor views of the relaxed model; zero for matrices).
Matrix posterior_mean_v(const PosteriorSamples<RmtfState>& samples, Index view);

/// Pearson correlation; throws std::invalid_argument if `a` has zero variance,
/// returns 0 if only `b` does.
double pearson(const Vector& a, const Vector& b);

/**
 * For each true loading vector, the largest |corr| with any column of any
 * candidate matrix. Sign is ignored because loadings are identified only up
 * to sign.
 */
std::vector<double> match_components(const std::vector<Vector>& truth,
                                     const std::vector<Matrix>& candidates);

}  // namespace bmtf
