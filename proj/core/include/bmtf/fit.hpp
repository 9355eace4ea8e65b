#pragma once

#include "bmtf/collection.hpp"
#include "bmtf/hyperparams.hpp"
#include "bmtf/mtf.hpp"
#include "bmtf/predict.hpp"
#include "bmtf/preprocess.hpp"
#include "bmtf/rmtf.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bmtf {

/// gfa fits the trilinear sampler to the collection with every tensor split into its slabs.
enum class ModelKind { mtf, rmtf, gfa };

std::string to_string(ModelKind m);
ModelKind model_from_string(const std::string& s);

/// Shape of one view as the sampler saw it.
struct FittedView {
    std::string name;
    Index features = 0;
    Index slabs = 1;
    Index group = -1;
};

/// Everything a fit produces: settings, preprocessing, and per-chain samples.
struct FitResult {
    ModelKind model = ModelKind::mtf;
    HyperParams hp;
    std::uint64_t seed = 0;
    Index samples = 0;

    std::vector<std::string> source_views;
    std::vector<std::vector<Index>> source_groups;
    /// Preprocessing of the source collection.
    PreprocessTransform transform;

    std::vector<FittedView> fitted_views;
    /// Source view of each fitted view (identity unless gfa).
    std::vector<Index> view_origin;

    std::vector<PosteriorSamples<MtfState>> mtf_chains;   // mtf and gfa
    std::vector<PosteriorSamples<RmtfState>> rmtf_chains;  // rmtf

    Index chain_count() const;
    /// Frozen slab loadings of every snapshot of every chain, chain-major.
    std::vector<SlabLoadings> frozen() const;
    /// Per-chain view activity of each snapshot folded onto the source views.
    std::vector<std::vector<Matrix>> source_activity() const;
    /// Posterior mean feature loadings of a source view in original units,
    /// one matrix per fitted view derived from it (a single one unless gfa).
    /// rMTF uses the slab-averaged loadings.
    std::vector<Matrix> original_loadings(Index chain, Index source_view) const;
};

struct FitOptions {
    /// Center and unit-normalize every fiber before fitting.
    bool normalize = true;
    ScaleGranularity granularity = ScaleGranularity::feature;
    Index jobs = 1;
};

FitResult fit_model(const Collection& c, ModelKind model, const HyperParams& hp, std::uint64_t seed,
                    const FitOptions& options = {});

/// Predictions for the masked entries of `test` in original units and in
/// the preprocessed space the model was fitted in.
struct FitPrediction {
    Prediction original;
    Prediction preprocessed;
};

/// Throws IncompatibleInput when the test views do not match the fit.
FitPrediction predict_fit(const FitResult& fit, const Collection& test, const Stage2Options& options,
                          std::uint64_t seed);

}  // namespace bmtf
