#include "bmtf/preprocess.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bmtf {

namespace {

void check_shapes(const PreprocessTransform& t, const Collection& c) {
    if (!t.compatible_with(c))
        throw std::invalid_argument("preprocess transform does not match collection shapes");
}

}  // namespace

bool PreprocessTransform::compatible_with(const Collection& c) const {
    if (center.size() != c.views.size() || scale.size() != c.views.size()) return false;
    for (std::size_t t = 0; t < c.views.size(); ++t) {
        const auto& v = c.views[t].data;
        if (center[t].rows() != v.features() || center[t].cols() != v.slabs()) return false;
        if (scale[t].rows() != v.features() || scale[t].cols() != v.slabs()) return false;
        if (!(scale[t].array() > 0.0).all()) return false;
    }
    return true;
}

std::pair<Collection, PreprocessTransform> center_and_normalize(const Collection& c,
                                                                ScaleGranularity granularity) {
    PreprocessTransform tr;
    for (Index t = 0; t < c.view_count(); ++t) {
        const auto& v = c.views[t].data;
        Matrix center(v.features(), v.slabs());
        Matrix ss(v.features(), v.slabs());
        Matrix count(v.features(), v.slabs());
        for (Index l = 0; l < v.slabs(); ++l) {
            for (Index d = 0; d < v.features(); ++d) {
                Index n_obs = 0;
                double mean = 0.0;
                for (Index n = 0; n < v.samples(); ++n) {
                    if (!v.observed(n, d, l)) continue;
                    ++n_obs;
                    mean += (v.values()(n, d, l) - mean) / static_cast<double>(n_obs);
                }
                double fiber_ss = 0.0;
                for (Index n = 0; n < v.samples(); ++n)
                    if (v.observed(n, d, l)) fiber_ss += std::pow(v.values()(n, d, l) - mean, 2);
                if (n_obs < 2 || (granularity == ScaleGranularity::fiber && !(fiber_ss > 0.0))) {
                    std::ostringstream msg;
                    msg << (n_obs < 2 ? "fewer than two observed entries" : "constant fiber")
                        << " at view " << t << " feature " << d << " slab " << l;
                    throw std::invalid_argument(msg.str());
                }
                center(d, l) = mean;
                ss(d, l) = fiber_ss;
                count(d, l) = static_cast<double>(n_obs);
            }
        }
        Matrix scale(v.features(), v.slabs());
        if (granularity == ScaleGranularity::fiber) {
            scale = (ss.array() / (count.array() - 1.0)).sqrt();
        } else {
            for (Index d = 0; d < v.features(); ++d) {
                // Pooled within-fiber variance; one degree of freedom is spent per fiber mean.
                const double pooled = ss.row(d).sum() / (count.row(d).sum() - static_cast<double>(v.slabs()));
                if (!(pooled > 0.0)) {
                    std::ostringstream msg;
                    msg << "constant feature at view " << t << " feature " << d;
                    throw std::invalid_argument(msg.str());
                }
                scale.row(d).setConstant(std::sqrt(pooled));
            }
        }
        tr.center.push_back(std::move(center));
        tr.scale.push_back(std::move(scale));
    }
    return {apply_transform(tr, c), tr};
}

Collection apply_transform(const PreprocessTransform& t, const Collection& c) {
    check_shapes(t, c);
    Collection out = c;
    for (Index v = 0; v < out.view_count(); ++v) {
        auto& x = out.views[v].data.values();
        for (Index l = 0; l < x.slabs(); ++l) {
            auto s = x.slab(l);
            s.rowwise() -= t.center[v].col(l).transpose();
            s.array().rowwise() /= t.scale[v].col(l).transpose().array();
        }
    }
    return out;
}

Collection inverse_transform(const PreprocessTransform& t, const Collection& c) {
    check_shapes(t, c);
    Collection out = c;
    for (Index v = 0; v < out.view_count(); ++v) inverse_transform_view(t, v, out.views[v].data.values());
    return out;
}

void inverse_transform_view(const PreprocessTransform& t, Index view, Tensor3& values) {
    for (Index l = 0; l < values.slabs(); ++l) {
        auto s = values.slab(l);
        s.array().rowwise() *= t.scale[view].col(l).transpose().array();
        s.rowwise() += t.center[view].col(l).transpose();
    }
}

void inverse_scale_view(const PreprocessTransform& t, Index view, Tensor3& values) {
    for (Index l = 0; l < values.slabs(); ++l)
        values.slab(l).array().rowwise() *= t.scale[view].col(l).transpose().array();
}

Matrix unscale_loadings(const PreprocessTransform& t, Index view, const Matrix& v, Index slab) {
    const Matrix& scale = t.scale[view];
    if (v.rows() != scale.rows()) throw std::invalid_argument("unscale_loadings: feature count mismatch");
    const Vector s = slab >= 0 ? Vector(scale.col(slab)) : Vector(scale.rowwise().mean());
    return s.asDiagonal() * v;
}

PreprocessTransform identity_transform(const Collection& c) {
    PreprocessTransform tr;
    for (const auto& v : c.views) {
        tr.center.push_back(Matrix::Zero(v.data.features(), v.data.slabs()));
        tr.scale.push_back(Matrix::Ones(v.data.features(), v.data.slabs()));
    }
    return tr;
}

}  // namespace bmtf
