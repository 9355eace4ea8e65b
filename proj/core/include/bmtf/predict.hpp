#pragma once

#include "bmtf/collection.hpp"
#include "bmtf/prepared.hpp"
#include "bmtf/random.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bmtf {

/// Raised when frozen parameters and a test collection do not fit together.
class IncompatibleInput : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

struct Stage2Options {
    /// Latent draws discarded per frozen snapshot. With the loadings frozen
    /// the latent rows are conditionally independent of the targets, so each
    /// draw is already exact and no burn-in is needed.
    Index burn_in = 0;
    /// Latent draws averaged per frozen snapshot.
    Index samples = 10;
};

/// Predictive mean and standard deviation for every masked entry of a test collection.
struct Prediction {
    std::vector<Tensor3> mean;
    std::vector<Tensor3> stddev;
    /// Per view, 1 where the entry was masked in the test input (a target).
    std::vector<std::vector<std::uint8_t>> targets;

    Index target_count() const;
};

/// Throws IncompatibleInput unless each test view matches the loadings' D, L and K.
void check_compatible(const Collection& test, const SlabLoadings& frozen);

/**
 * For every frozen parameter set, draws the test latent rows from their
 * conditional given the observed test entries and averages the implied
 * means of the masked entries. The reported std combines the spread of
 * those means with the average noise variance.
 */
Prediction two_stage_predict(const Collection& test, const std::vector<SlabLoadings>& frozen,
                             const Stage2Options& options, RngStream& rng);

/// Mean squared / root-mean-squared error over entries with mask == 1.
double mse(const Tensor3& pred, const Tensor3& truth, std::span<const std::uint8_t> mask);
double rmse(const Tensor3& pred, const Tensor3& truth, std::span<const std::uint8_t> mask);

/// Errors over all targets of a prediction against a truth collection.
double prediction_mse(const Prediction& p, const Collection& truth);
inline double prediction_rmse(const Prediction& p, const Collection& truth) {
    return std::sqrt(prediction_mse(p, truth));
}

/**
 * Writes one row per target (view, sample, feature, slab, predicted,
 * posterior_std[, truth]) followed by `#summary,<key>,<value>` lines for
 * the entries of `summary` and, with a truth collection, RMSE, MSE and
 * n_targets.
 */
void write_prediction_report(const std::filesystem::path& path, const Prediction& p,
                             const Collection* truth,
                             const std::map<std::string, std::string>& summary = {});

/// The `#summary` entries of a report.
std::map<std::string, std::string> read_prediction_summary(const std::filesystem::path& path);

}  // namespace bmtf
