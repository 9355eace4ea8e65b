#include "bmtf/collection.hpp"

#include <set>
#include <sstream>
#include <stdexcept>

namespace bmtf {

std::vector<std::vector<Index>> Collection::u_groups() const {
    std::vector<std::vector<Index>> groups = third_mode_groups;
    std::set<Index> grouped;
    for (const auto& g : groups) grouped.insert(g.begin(), g.end());
    for (Index t = 0; t < view_count(); ++t)
        if (!views[t].data.is_matrix() && !grouped.contains(t)) groups.push_back({t});
    return groups;
}

std::vector<Index> Collection::u_group_of_view() const {
    std::vector<Index> out(views.size(), -1);
    const auto groups = u_groups();
    for (Index g = 0; g < static_cast<Index>(groups.size()); ++g)
        for (Index t : groups[g])
            if (t >= 0 && t < view_count()) out[t] = g;
    return out;
}

std::vector<std::string> structural_violations(const Collection& c) {
    std::vector<std::string> out;
    if (c.views.empty()) {
        out.emplace_back("collection has no views");
        return out;
    }
    const Index n = c.views.front().data.samples();
    for (Index t = 0; t < c.view_count(); ++t) {
        const auto& v = c.views[t].data;
        if (v.samples() < 1 || v.features() < 1 || v.slabs() < 1) {
            out.push_back("empty extent view " + std::to_string(t));
            continue;
        }
        if (v.samples() != n) {
            std::ostringstream msg;
            msg << "first-mode mismatch view " << t << " (N=" << v.samples() << ", expected " << n
                << ")";
            out.push_back(msg.str());
        }
        if (!v.values().all_finite()) out.push_back("non-finite value in view " + std::to_string(t));
    }
    std::set<Index> seen;
    for (std::size_t g = 0; g < c.third_mode_groups.size(); ++g) {
        const auto& group = c.third_mode_groups[g];
        if (group.empty()) out.push_back("empty U-group " + std::to_string(g));
        Index slabs = -1;
        for (Index t : group) {
            if (t < 0 || t >= c.view_count()) {
                out.push_back("U-group " + std::to_string(g) + " names unknown view " +
                              std::to_string(t));
                continue;
            }
            if (!seen.insert(t).second)
                out.push_back("view " + std::to_string(t) + " appears in more than one U-group");
            const auto& v = c.views[t].data;
            if (v.is_matrix()) {
                out.push_back("matrix in U-group: view " + std::to_string(t) + " in group " +
                              std::to_string(g));
                continue;
            }
            if (slabs < 0)
                slabs = v.slabs();
            else if (v.slabs() != slabs)
                out.push_back("third-mode mismatch in U-group " + std::to_string(g) + " view " +
                              std::to_string(t));
        }
    }
    return out;
}

std::vector<std::string> validate_collection(const Collection& c) {
    auto out = structural_violations(c);
    for (Index t = 0; t < c.view_count(); ++t)
        if (c.views[t].data.observed_count() == 0)
            out.push_back("no observed entries in view " + std::to_string(t));
    return out;
}

void require_valid_structure(const Collection& c) {
    const auto problems = structural_violations(c);
    if (problems.empty()) return;
    std::string msg = "invalid collection:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw std::invalid_argument(msg);
}

std::vector<MaskedTensor3> unfold_to_matrices(const MaskedTensor3& v) {
    std::vector<MaskedTensor3> out;
    out.reserve(static_cast<std::size_t>(v.slabs()));
    const Index n = v.samples(), d = v.features();
    for (Index l = 0; l < v.slabs(); ++l) {
        Tensor3 slab(n, d, 1);
        slab.slab(0) = v.values().slab(l);
        const auto mask = v.mask().subspan(static_cast<std::size_t>(l * n * d),
                                           static_cast<std::size_t>(n * d));
        out.emplace_back(std::move(slab), std::vector<std::uint8_t>(mask.begin(), mask.end()));
    }
    return out;
}

MaskedTensor3 stack_slabs(const std::vector<MaskedTensor3>& slabs) {
    if (slabs.empty()) throw std::invalid_argument("stack_slabs: no slabs");
    const Index n = slabs.front().samples(), d = slabs.front().features();
    const Index l = static_cast<Index>(slabs.size());
    Tensor3 values(n, d, l);
    std::vector<std::uint8_t> mask;
    mask.reserve(static_cast<std::size_t>(n * d * l));
    for (Index i = 0; i < l; ++i) {
        const auto& s = slabs[i];
        if (s.samples() != n || s.features() != d || !s.is_matrix())
            throw std::invalid_argument("stack_slabs: slab shapes differ");
        values.slab(i) = s.values().slab(0);
        mask.insert(mask.end(), s.mask().begin(), s.mask().end());
    }
    return {std::move(values), std::move(mask)};
}

Collection unfold_collection(const Collection& c, std::vector<Index>* origin) {
    Collection out;
    if (origin) origin->clear();
    for (Index t = 0; t < c.view_count(); ++t) {
        const auto& v = c.views[t];
        if (v.data.is_matrix()) {
            out.views.push_back(v);
            if (origin) origin->push_back(t);
            continue;
        }
        auto slabs = unfold_to_matrices(v.data);
        for (std::size_t l = 0; l < slabs.size(); ++l) {
            out.views.push_back({v.name + "[" + std::to_string(l) + "]", std::move(slabs[l])});
            if (origin) origin->push_back(t);
        }
    }
    return out;
}

}  // namespace bmtf
