#pragma once

#include "bmtf/collection.hpp"

#include <utility>
#include <vector>

namespace bmtf {

/// Per-view, per-(feature, slab) centering and scaling: x' = (x - center) / scale.
struct PreprocessTransform {
    std::vector<Matrix> center;  // D x L per view
    std::vector<Matrix> scale;   // D x L per view, all > 0

    bool compatible_with(const Collection& c) const;
};

/// How the scale of a tensor feature is pooled.
enum class ScaleGranularity {
    /// One scale per feature, pooled over samples and slabs. Dividing a
    /// trilinear tensor by a per-feature constant keeps it trilinear.
    feature,
    /// One scale per (feature, slab) fiber.
    fiber,
};

/**
 * Centers every (view, feature, slab) fiber over its observed samples and
 * scales to unit unbiased variance at the requested granularity (the
 * pooled variance subtracts one degree of freedom per fiber mean).
 *
 * Throws std::invalid_argument for a fiber with fewer than two observed
 * entries or a constant fiber (feature, under ScaleGranularity::feature);
 * the message names it.
 */
std::pair<Collection, PreprocessTransform> center_and_normalize(
    const Collection& c, ScaleGranularity granularity = ScaleGranularity::feature);
Collection apply_transform(const PreprocessTransform& t, const Collection& c);
Collection inverse_transform(const PreprocessTransform& t, const Collection& c);

/// In-place inverse on a single view's values (e.g. predictions).
void inverse_transform_view(const PreprocessTransform& t, Index view, Tensor3& values);
/// Scale-only inverse, for standard deviations.
void inverse_scale_view(const PreprocessTransform& t, Index view, Tensor3& values);

/// Feature loadings of `view` mapped back to original units: row d is
/// multiplied by the scale of (d, slab), or by its mean over slabs when
/// slab < 0.
Matrix unscale_loadings(const PreprocessTransform& t, Index view, const Matrix& v, Index slab = -1);

/// Identity transform shaped for c.
PreprocessTransform identity_transform(const Collection& c);

}  // namespace bmtf
