#include "bmtf/structure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bmtf {

Matrix view_activity(const MtfState& s) { return s.h.cast<double>(); }

Matrix view_activity(const RmtfState& s) {
    Matrix out(s.view_count(), s.components());
    for (Index t = 0; t < s.view_count(); ++t) out.row(t) = s.h[t].cast<double>().colwise().mean();
    return out;
}

Matrix fold_activity(const Matrix& activity, const std::vector<Index>& origin, Index source_views) {
    if (static_cast<Index>(origin.size()) != activity.rows())
        throw std::invalid_argument("fold_activity: origin size does not match views");
    Matrix out = Matrix::Zero(source_views, activity.cols());
    Vector members = Vector::Zero(source_views);
    for (Index i = 0; i < activity.rows(); ++i) {
        const Index o = origin[static_cast<std::size_t>(i)];
        if (o < 0 || o >= source_views) throw std::invalid_argument("fold_activity: origin out of range");
        out.row(o) += activity.row(i);
        members[o] += 1.0;
    }
    for (Index o = 0; o < source_views; ++o) {
        if (members[o] == 0.0) throw std::invalid_argument("fold_activity: source view without derived views");
        out.row(o) /= members[o];
    }
    return out;
}

Matrix mean_activity(const std::vector<Matrix>& snapshots) {
    if (snapshots.empty()) throw std::invalid_argument("mean_activity: no snapshots");
    Matrix out = Matrix::Zero(snapshots.front().rows(), snapshots.front().cols());
    for (const auto& h : snapshots) out += h;
    return out / static_cast<double>(snapshots.size());
}

ComponentCounts component_structure(const Matrix& mean_activity, double threshold) {
    ComponentCounts out;
    out.specific.assign(static_cast<std::size_t>(mean_activity.rows()), 0.0);
    for (Index k = 0; k < mean_activity.cols(); ++k) {
        Index active = 0, last = -1;
        for (Index t = 0; t < mean_activity.rows(); ++t)
            if (mean_activity(t, k) > threshold) {
                ++active;
                last = t;
            }
        if (active == 0)
            out.empty += 1.0;
        else if (active == 1)
            out.specific[static_cast<std::size_t>(last)] += 1.0;
        else
            out.shared += 1.0;
    }
    return out;
}

ComponentCounts average_counts(const std::vector<ComponentCounts>& counts) {
    if (counts.empty()) throw std::invalid_argument("average_counts: empty input");
    ComponentCounts out;
    out.specific.assign(counts.front().specific.size(), 0.0);
    for (const auto& c : counts) {
        out.shared += c.shared;
        out.empty += c.empty;
        for (std::size_t t = 0; t < out.specific.size(); ++t) out.specific[t] += c.specific.at(t);
    }
    const double n = static_cast<double>(counts.size());
    out.shared /= n;
    out.empty /= n;
    for (double& x : out.specific) x /= n;
    return out;
}

Matrix posterior_mean_loading(const PosteriorSamples<MtfState>& samples, Index view) {
    if (samples.snapshots.empty()) throw std::invalid_argument("posterior_mean_loading: no snapshots");
    Matrix out = Matrix::Zero(samples.snapshots.front().v[view].rows(),
                              samples.snapshots.front().components());
    for (const auto& s : samples.snapshots) out += s.v[view];
    return out / static_cast<double>(samples.snapshots.size());
}

Matrix posterior_mean_loading(const PosteriorSamples<RmtfState>& samples, Index view) {
    if (samples.snapshots.empty()) throw std::invalid_argument("posterior_mean_loading: no snapshots");
    Matrix out = Matrix::Zero(samples.snapshots.front().v[view].rows(),
                              samples.snapshots.front().components());
    for (const auto& s : samples.snapshots) out += s.mean_loading(view);
    return out / static_cast<double>(samples.snapshots.size());
}

Matrix posterior_mean_v(const PosteriorSamples<RmtfState>& samples, Index view) {
    if (samples.snapshots.empty()) throw std::invalid_argument("posterior_mean_v: no snapshots");
    Matrix out = Matrix::Zero(samples.snapshots.front().v[view].rows(),
                              samples.snapshots.front().components());
    for (const auto& s : samples.snapshots) out += s.v[view];
    return out / static_cast<double>(samples.snapshots.size());
}

double pearson(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("pearson: length mismatch");
    const Vector ca = a.array() - a.mean();
    const Vector cb = b.array() - b.mean();
    const double na = ca.norm(), nb = cb.norm();
    if (na == 0.0) throw std::invalid_argument("pearson: zero-variance reference vector");
    if (nb == 0.0) return 0.0;
    return ca.dot(cb) / (na * nb);
}

std::vector<double> match_components(const std::vector<Vector>& truth,
                                     const std::vector<Matrix>& candidates) {
    std::vector<double> out;
    out.reserve(truth.size());
    for (const auto& t : truth) {
        double best = 0.0;
        for (const auto& m : candidates) {
            if (m.rows() != t.size()) throw std::invalid_argument("match_components: length mismatch");
            for (Index k = 0; k < m.cols(); ++k) best = std::max(best, std::abs(pearson(t, m.col(k))));
        }
        out.push_back(best);
    }
    return out;
}

}  // namespace bmtf
