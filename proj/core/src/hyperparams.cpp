#include "bmtf/hyperparams.hpp"

#include <cmath>
#include <stdexcept>

namespace bmtf {

HyperParams HyperParams::strong_regularization() {
    HyperParams hp;
    hp.a_pi = 1e-3;
    hp.b_pi = 1e3;
    hp.a_tau = 10.0;
    return hp;
}

void HyperParams::validate() const {
    if (K < 1) throw std::invalid_argument("K must be at least 1");
    auto positive = [](double x, const char* name) {
        if (!(x > 0.0) || !std::isfinite(x))
            throw std::invalid_argument(std::string(name) + " must be positive and finite");
    };
    positive(a_pi, "a_pi");
    positive(b_pi, "b_pi");
    positive(a_alpha, "a_alpha");
    positive(b_alpha, "b_alpha");
    positive(a_tau, "a_tau");
    if (tau_prior == TauPrior::fixed) positive(b_tau, "b_tau");
    positive(snr, "snr");
    positive(a_lambda, "a_lambda");
    positive(b_lambda, "b_lambda");
    positive(a_beta, "a_beta");
    positive(b_beta, "b_beta");
    if (burn_in < 0) throw std::invalid_argument("burn_in must be non-negative");
    if (indicator_warmup < 0) throw std::invalid_argument("indicator_warmup must be non-negative");
    if (n_samples < 1) throw std::invalid_argument("n_samples must be at least 1");
    if (thin < 1) throw std::invalid_argument("thin must be at least 1");
    if (n_chains < 1) throw std::invalid_argument("n_chains must be at least 1");
}

std::string to_string(TauPrior p) {
    switch (p) {
        case TauPrior::snr: return "snr";
        case TauPrior::fixed: return "fixed";
        case TauPrior::snr_scaled: return "snr_scaled";
    }
    return "snr";
}

std::string to_string(LambdaMode m) {
    switch (m) {
        case LambdaMode::global: return "global";
        case LambdaMode::per_component: return "per_component";
        case LambdaMode::per_slab: return "per_slab";
    }
    return "global";
}

std::string to_string(Fault f) {
    switch (f) {
        case Fault::none: return "none";
        case Fault::tau_rate_halved: return "tau_rate_halved";
        case Fault::spike_without_occam: return "spike_without_occam";
        case Fault::z_prior_doubled: return "z_prior_doubled";
        case Fault::lambda_rate_doubled: return "lambda_rate_doubled";
    }
    return "none";
}

TauPrior tau_prior_from_string(const std::string& s) {
    if (s == "snr") return TauPrior::snr;
    if (s == "fixed") return TauPrior::fixed;
    if (s == "snr_scaled") return TauPrior::snr_scaled;
    throw std::invalid_argument("unknown tau prior '" + s + "'");
}

LambdaMode lambda_mode_from_string(const std::string& s) {
    if (s == "global") return LambdaMode::global;
    if (s == "per_component") return LambdaMode::per_component;
    if (s == "per_slab") return LambdaMode::per_slab;
    throw std::invalid_argument("unknown lambda mode '" + s + "'");
}

Fault fault_from_string(const std::string& s) {
    for (Fault f : {Fault::none, Fault::tau_rate_halved, Fault::spike_without_occam,
                    Fault::z_prior_doubled, Fault::lambda_rate_doubled})
        if (to_string(f) == s) return f;
    throw std::invalid_argument("unknown fault '" + s + "'");
}

}  // namespace bmtf
