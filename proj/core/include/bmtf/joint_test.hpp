#pragma once

#include "bmtf/hyperparams.hpp"
#include "bmtf/random.hpp"

#include <string>
#include <vector>

namespace bmtf {

enum class JointModel { mtf, rmtf };

/**
 * Sampler validation by comparing two ways of drawing from the joint
 * distribution of parameters and data:
 *  - forward: parameters from the prior, data from the likelihood;
 *  - Gibbs: alternate one sampler sweep given the data with a fresh data
 *    draw given the parameters.
 * Both chains have the joint as their stationary law, so the means of any
 * statistic agree unless a conditional update is wrong.
 */
struct JointTestConfig {
    JointModel model = JointModel::mtf;
    Index N = 4, D = 3, L = 2;
    /// Include a matrix view next to the tensor view.
    bool include_matrix = true;
    /// Mask a few fixed entries so the missing-data paths are exercised.
    bool with_missing = false;
    Index iterations = 200000;
    double alpha = 0.005;
    HyperParams hp = default_hyperparams();

    /// K = 2, fixed noise prior and shapes large enough for every tested
    /// second moment to have finite variance.
    static HyperParams default_hyperparams();
};

struct JointTestResult {
    std::vector<std::string> names;
    std::vector<double> forward_mean;
    std::vector<double> gibbs_mean;
    std::vector<double> z;
    /// Two-sided Bonferroni-corrected critical |z|.
    double critical = 0.0;

    double max_abs_z() const;
    bool passed() const { return max_abs_z() < critical; }
    /// |z| of the named statistic; throws if absent.
    double z_of(const std::string& name) const;
};

JointTestResult joint_distribution_test(const JointTestConfig& config, RngStream& rng);

/// Inverse of the standard normal CDF.
double normal_quantile(double p);

}  // namespace bmtf
