#include "bmtf/prepared.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace bmtf {

PreparedCollection::PreparedCollection(const Collection& c) {
    require_valid_structure(c);
    n_ = c.samples();
    groups_ = c.u_groups();
    group_of_view_ = c.u_group_of_view();

    for (const auto& view : c.views) {
        const auto& src = view.data;
        PreparedView pv;
        pv.x = src.zero_filled();
        pv.observed = src.observed_count();
        pv.slab_observed.assign(static_cast<std::size_t>(src.slabs()), 0);
        const Index per_slab = src.samples() * src.features();
        for (Index i = 0; i < src.values().size(); ++i)
            if (src.mask()[static_cast<std::size_t>(i)]) ++pv.slab_observed[i / per_slab];
        if (pv.observed != src.values().size()) {
            Tensor3 m(src.samples(), src.features(), src.slabs());
            auto dst = m.values();
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src.mask()[i] ? 1.0 : 0.0;
            pv.mask = std::move(m);
        }
        if (pv.observed > 1) {
            const auto x = pv.x.unfolded();
            const double count = static_cast<double>(pv.observed);
            const double mean = x.sum() / count;
            double ss = x.squaredNorm() - count * mean * mean;
            pv.observed_variance = std::max(ss / (count - 1.0), 1e-12);
        }
        views_.push_back(std::move(pv));
    }

    // Group rows by their joint observation pattern.
    std::unordered_map<std::string, Index> class_of_key;
    std::string key;
    for (Index n = 0; n < n_; ++n) {
        key.clear();
        for (const auto& view : c.views) {
            const auto& src = view.data;
            for (Index l = 0; l < src.slabs(); ++l)
                for (Index d = 0; d < src.features(); ++d)
                    key.push_back(src.observed(n, d, l) ? '1' : '0');
        }
        auto [it, inserted] = class_of_key.try_emplace(key, static_cast<Index>(row_classes_.size()));
        if (inserted) {
            RowClass rc;
            rc.representative = n;
            for (const auto& view : c.views) {
                const auto& src = view.data;
                bool full = true;
                for (Index l = 0; l < src.slabs() && full; ++l)
                    for (Index d = 0; d < src.features() && full; ++d) full = src.observed(n, d, l);
                rc.view_full.push_back(full);
            }
            row_classes_.push_back(std::move(rc));
        }
        row_classes_[it->second].rows.push_back(n);
    }
}

void PreparedCollection::set_values(Index t, const Tensor3& x) {
    auto& pv = views_[t];
    if (!x.same_shape(pv.x)) throw std::invalid_argument("set_values: shape mismatch");
    pv.x = x;
    if (pv.mask) pv.x.unfolded().array() *= pv.mask->unfolded().array();
}

Matrix stack_loadings(const std::vector<Matrix>& slabs) {
    const Index d = slabs.front().rows(), k = slabs.front().cols();
    Matrix out(d * static_cast<Index>(slabs.size()), k);
    for (std::size_t l = 0; l < slabs.size(); ++l) out.middleRows(static_cast<Index>(l) * d, d) = slabs[l];
    return out;
}

void sample_latent_rows(const PreparedCollection& data, const SlabLoadings& params, Matrix& z,
                        RngStream& rng, double prior_precision) {
    const Index k = z.cols();
    const Index n = data.samples();

    Matrix h = Matrix::Zero(n, k);
    std::vector<Matrix> full_gram(static_cast<std::size_t>(data.view_count()));
    std::vector<Matrix> weighted(static_cast<std::size_t>(data.view_count()));
    for (Index t = 0; t < data.view_count(); ++t) {
        const auto& pv = data.view(t);
        const auto& slabs = params.loadings[t];
        const Vector& tau = params.tau[t];
        Matrix w = stack_loadings(slabs);
        Matrix tw = w;
        for (Index l = 0; l < pv.slabs(); ++l)
            tw.middleRows(l * pv.features(), pv.features()) *= tau[l];
        h.noalias() += pv.x.unfolded() * tw;
        full_gram[t] = w.transpose() * tw;
        weighted[t] = std::move(w);
    }

    for (const auto& rc : data.row_classes()) {
        Matrix precision = Matrix::Identity(k, k) * prior_precision;
        for (Index t = 0; t < data.view_count(); ++t) {
            if (rc.view_full[t]) {
                precision += full_gram[t];
                continue;
            }
            const auto& pv = data.view(t);
            const auto mask = pv.mask->unfolded();
            const Matrix& w = weighted[t];
            const Vector& tau = params.tau[t];
            Index count = 0;
            for (Index j = 0; j < w.rows(); ++j) count += mask(rc.representative, j) != 0.0;
            Matrix a(count, k);
            for (Index j = 0, i = 0; j < w.rows(); ++j)
                if (mask(rc.representative, j) != 0.0)
                    a.row(i++) = w.row(j) * std::sqrt(tau[j / pv.features()]);
            precision.noalias() += a.transpose() * a;
        }
        const auto factor = factor_with_jitter(precision);
        if (rc.rows.size() == static_cast<std::size_t>(n)) {
            z = factor.draw_rows(h, rng);
        } else {
            Matrix hr(static_cast<Index>(rc.rows.size()), k);
            for (std::size_t i = 0; i < rc.rows.size(); ++i) hr.row(static_cast<Index>(i)) = h.row(rc.rows[i]);
            const Matrix drawn = factor.draw_rows(hr, rng);
            for (std::size_t i = 0; i < rc.rows.size(); ++i) z.row(rc.rows[i]) = drawn.row(static_cast<Index>(i));
        }
    }
}

}  // namespace bmtf
