#pragma once

#include "bmtf/tensor.hpp"

#include <string>

namespace bmtf {

/// How the noise precision prior is chosen.
enum class TauPrior {
    /// a_tau as given, b_tau = a_tau * var_t / (1 + snr) so that the prior
    /// mean noise variance is var_t / (1 + snr), var_t the observed
    /// per-element variance of view t.
    snr,
    /// a_tau, b_tau used as given for every view.
    fixed,
    /// As snr, but a_tau is a confidence c and the shape is c * n_t / 2
    /// with n_t the observed entries of view t (of one slab, for per-slab
    /// noise), so the prior weighs like c times the data.
    snr_scaled,
};

/// Scope of the slab-similarity precision in the relaxed model.
enum class LambdaMode { global, per_component, per_slab };

/**
 * Deliberate sampler defects used to check that the joint-distribution
 * test has power. Never set outside tests.
 */
enum class Fault {
    none,
    tau_rate_halved,        // tau rate uses RSS/4 instead of RSS/2
    spike_without_occam,    // H log-odds drops the 0.5*log(alpha/(alpha+s)) terms
    z_prior_doubled,        // latent rows get prior precision 2I instead of I
    lambda_rate_doubled,    // lambda rate uses sum (w-uv)^2 instead of half of it
};

struct HyperParams {
    Index K = 10;

    double a_pi = 1.0, b_pi = 1.0;
    double a_alpha = 1e-3, b_alpha = 1e-3;

    TauPrior tau_prior = TauPrior::snr_scaled;
    double a_tau = 1.0, b_tau = 1.0;  // b_tau ignored unless TauPrior::fixed
    double snr = 1.0;

    // Relaxed model only.
    double a_lambda = 1.0, b_lambda = 1.0;
    double a_beta = 1e-3, b_beta = 1e-3;
    LambdaMode lambda_mode = LambdaMode::global;

    // Chain schedule.
    Index burn_in = 3000;
    Index n_samples = 40;
    Index thin = 10;
    Index n_chains = 7;
    /// Leading sweeps (never more than burn_in) that keep every indicator
    /// at 1 and the ARD precisions at their initial value while the rest
    /// settles. Without it a view whose signal is weak next to a large
    /// tensor sheds its components in the first sweep, and an inactive ARD
    /// precision drawn from a vague prior almost never lets them back.
    Index indicator_warmup = 10;
    /// Follow every collapsed indicator draw of an ARD-governed column with
    /// a joint Metropolis-Hastings jump on indicator, column and
    /// precisions (see ard_jump). Elementwise precisions fitted to a weak
    /// column make its spike draw favour staying on, so without the jump
    /// noise-fitting components linger for thousands of sweeps.
    bool ard_jump = true;

    Fault fault = Fault::none;

    /// a_pi = 1e-3, b_pi = 1e3 and an SNR-1 noise prior ten times as
    /// confident as the data (a_tau = 10 under TauPrior::snr_scaled).
    static HyperParams strong_regularization();

    /// Throws std::invalid_argument on a non-positive parameter or K < 1.
    void validate() const;
};

std::string to_string(TauPrior p);
std::string to_string(LambdaMode m);
std::string to_string(Fault f);
TauPrior tau_prior_from_string(const std::string& s);
LambdaMode lambda_mode_from_string(const std::string& s);
Fault fault_from_string(const std::string& s);

}  // namespace bmtf
