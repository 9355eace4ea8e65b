#include "bmtf/fit.hpp"

#include "bmtf/structure.hpp"

#include <algorithm>
#include <stdexcept>

namespace bmtf {

namespace {

constexpr std::uint64_t kPredictionStream = 0x70726564;  // stage-2 draws never share a chain's stream

/// Concatenates per-slab tensors of derived views back into their source views.
std::vector<Tensor3> fold_tensors(const std::vector<Tensor3>& parts, const std::vector<Index>& origin,
                                  Index sources) {
    std::vector<Tensor3> out;
    for (Index o = 0; o < sources; ++o) {
        std::vector<const Tensor3*> members;
        for (std::size_t i = 0; i < parts.size(); ++i)
            if (origin[i] == o) members.push_back(&parts[i]);
        const Tensor3& first = *members.front();
        Tensor3 t(first.samples(), first.features(), static_cast<Index>(members.size()));
        auto dst = t.values();
        std::size_t pos = 0;
        for (const Tensor3* m : members) {
            std::copy(m->values().begin(), m->values().end(), dst.begin() + static_cast<std::ptrdiff_t>(pos));
            pos += m->values().size();
        }
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<std::vector<std::uint8_t>> fold_masks(const std::vector<std::vector<std::uint8_t>>& parts,
                                                  const std::vector<Index>& origin, Index sources) {
    std::vector<std::vector<std::uint8_t>> out(static_cast<std::size_t>(sources));
    for (std::size_t i = 0; i < parts.size(); ++i) {
        auto& dst = out[static_cast<std::size_t>(origin[i])];
        dst.insert(dst.end(), parts[i].begin(), parts[i].end());
    }
    return out;
}

}  // namespace

std::string to_string(ModelKind m) {
    switch (m) {
        case ModelKind::mtf: return "mtf";
        case ModelKind::rmtf: return "rmtf";
        case ModelKind::gfa: return "gfa";
    }
    return "mtf";
}

ModelKind model_from_string(const std::string& s) {
    if (s == "mtf") return ModelKind::mtf;
    if (s == "rmtf") return ModelKind::rmtf;
    if (s == "gfa") return ModelKind::gfa;
    throw std::invalid_argument("unknown model '" + s + "' (expected mtf, rmtf or gfa)");
}

Index FitResult::chain_count() const {
    return static_cast<Index>(model == ModelKind::rmtf ? rmtf_chains.size() : mtf_chains.size());
}

std::vector<SlabLoadings> FitResult::frozen() const {
    std::vector<SlabLoadings> out;
    for (const auto& chain : mtf_chains)
        for (const auto& s : chain.snapshots) out.push_back(slab_parameters(s));
    for (const auto& chain : rmtf_chains)
        for (const auto& s : chain.snapshots) out.push_back(slab_parameters(s));
    return out;
}

std::vector<std::vector<Matrix>> FitResult::source_activity() const {
    std::vector<std::vector<Matrix>> out;
    const auto sources = static_cast<Index>(source_views.size());
    for (const auto& chain : mtf_chains) {
        out.emplace_back();
        for (const auto& s : chain.snapshots)
            out.back().push_back(fold_activity(view_activity(s), view_origin, sources));
    }
    for (const auto& chain : rmtf_chains) {
        out.emplace_back();
        for (const auto& s : chain.snapshots)
            out.back().push_back(fold_activity(view_activity(s), view_origin, sources));
    }
    return out;
}

std::vector<Matrix> FitResult::original_loadings(Index chain, Index source_view) const {
    if (chain < 0 || chain >= chain_count()) throw std::out_of_range("original_loadings: no such chain");
    std::vector<Matrix> out;
    Index slab = 0;
    for (std::size_t i = 0; i < view_origin.size(); ++i) {
        if (view_origin[i] != source_view) continue;
        const auto t = static_cast<Index>(i);
        const Matrix v = model == ModelKind::rmtf ? posterior_mean_loading(rmtf_chains[chain], t)
                                                  : posterior_mean_loading(mtf_chains[chain], t);
        out.push_back(unscale_loadings(transform, source_view, v, model == ModelKind::gfa ? slab++ : -1));
    }
    return out;
}

FitResult fit_model(const Collection& c, ModelKind model, const HyperParams& hp, std::uint64_t seed,
                    const FitOptions& options) {
    require_valid_structure(c);
    hp.validate();
    FitResult out;
    out.model = model;
    out.hp = hp;
    out.seed = seed;
    out.samples = c.samples();
    for (const auto& v : c.views) out.source_views.push_back(v.name);
    out.source_groups = c.third_mode_groups;

    Collection prepared = c;
    if (options.normalize) {
        auto [normalized, transform] = center_and_normalize(c, options.granularity);
        prepared = std::move(normalized);
        out.transform = std::move(transform);
    } else {
        out.transform = identity_transform(c);
    }

    if (model == ModelKind::gfa) {
        prepared = unfold_collection(prepared, &out.view_origin);
    } else {
        out.view_origin.resize(static_cast<std::size_t>(c.view_count()));
        for (Index t = 0; t < c.view_count(); ++t) out.view_origin[static_cast<std::size_t>(t)] = t;
    }
    const auto group_of = prepared.u_group_of_view();
    for (Index t = 0; t < prepared.view_count(); ++t) {
        const auto& v = prepared.views[t];
        out.fitted_views.push_back({v.name, v.data.features(), v.data.slabs(), group_of[t]});
    }

    if (model == ModelKind::rmtf)
        out.rmtf_chains = rmtf_run_chains(prepared, hp, seed, options.jobs);
    else
        out.mtf_chains = run_chains(prepared, hp, seed, options.jobs);
    return out;
}

FitPrediction predict_fit(const FitResult& fit, const Collection& test, const Stage2Options& options,
                          std::uint64_t seed) {
    const auto sources = static_cast<Index>(fit.source_views.size());
    if (test.view_count() != sources)
        throw IncompatibleInput("test collection has " + std::to_string(test.view_count()) +
                                " views, the fit has " + std::to_string(sources));
    if (!fit.transform.compatible_with(test))
        throw IncompatibleInput("test view shapes do not match the fitted views");
    if (test.third_mode_groups != fit.source_groups)
        throw IncompatibleInput("test third-mode grouping differs from the fitted grouping");

    Collection prepared = apply_transform(fit.transform, test);
    if (fit.model == ModelKind::gfa) prepared = unfold_collection(prepared);

    RngStream rng(seed, kPredictionStream);
    Prediction p = two_stage_predict(prepared, fit.frozen(), options, rng);
    if (fit.model == ModelKind::gfa) {
        p.mean = fold_tensors(p.mean, fit.view_origin, sources);
        p.stddev = fold_tensors(p.stddev, fit.view_origin, sources);
        p.targets = fold_masks(p.targets, fit.view_origin, sources);
    }

    FitPrediction out;
    out.preprocessed = p;
    for (Index t = 0; t < sources; ++t) {
        inverse_transform_view(fit.transform, t, p.mean[t]);
        inverse_scale_view(fit.transform, t, p.stddev[t]);
    }
    out.original = std::move(p);
    return out;
}

}  // namespace bmtf
