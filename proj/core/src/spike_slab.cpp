#include "bmtf/spike_slab.hpp"

#include <cmath>

namespace bmtf {

double logit(double p) { return std::log(p) - std::log1p(-p); }

namespace {

double log_gamma_pdf(double x, double shape, double rate) {
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

constexpr double kProposalShape = 2.0;

double proposal_rate(double precision, double linear, double prior_rate) {
    const double v_hat = precision > 0.0 ? linear / precision : 0.0;
    return kProposalShape * (v_hat * v_hat + prior_rate);
}

/// Collapsed log evidence of one active coordinate relative to the spike.
double log_evidence(double rho, double precision, double linear, bool occam) {
    const double post = rho + precision;
    return (occam ? 0.5 * (std::log(rho) - std::log(post)) : 0.0) + 0.5 * linear * linear / post;
}

}  // namespace

double spike_slab_log_odds(double logit_pi, const SlabColumnInputs& in, bool occam) {
    double log_odds = logit_pi;
    const Index d = in.precision.size();
    for (Index i = 0; i < d; ++i) {
        const double rho = in.prior_precision[i];
        const double p = in.precision[i];
        const double h = in.linear[i];
        const double post = rho + p;
        if (occam) log_odds += 0.5 * (std::log(rho) - std::log(post));
        if (in.prior_mean) {
            // (h + rho mu)^2 / post - rho mu^2 with the rho^2 mu^2 terms cancelled
            // analytically; a far-off prior mean would otherwise give inf - inf.
            const double mu = (*in.prior_mean)[i];
            log_odds += 0.5 * (h * h + 2.0 * h * rho * mu - p * rho * mu * mu) / post;
        } else {
            log_odds += 0.5 * h * h / post;
        }
    }
    return log_odds;
}

int draw_spike_slab_column(double logit_pi, const SlabColumnInputs& in, Vector& column,
                           RngStream& rng, bool occam) {
    const int active = draw_bernoulli_logodds(spike_slab_log_odds(logit_pi, in, occam), rng);
    if (!active) {
        column.setZero(in.precision.size());
        return 0;
    }
    draw_slab_column(in, column, rng);
    return 1;
}

void draw_slab_column(const SlabColumnInputs& in, Vector& column, RngStream& rng) {
    const Index d = in.precision.size();
    column.resize(d);
    for (Index i = 0; i < d; ++i) {
        const double rho = in.prior_precision[i];
        const double post = rho + in.precision[i];
        double b = in.linear[i];
        if (in.prior_mean) b += rho * (*in.prior_mean)[i];
        column[i] = b / post + rng.normal() / std::sqrt(post);
    }
}

int ard_jump(double logit_pi, const SlabColumnInputs& in, ArdPrior prior, int active, Vector& precisions,
             Vector& column, RngStream& rng, bool occam) {
    const Index d = in.precision.size();
    // log of p(active state) q(inactive state) / (p(inactive state) q(active state)),
    // accumulated for whichever precisions belong to the active side.
    auto log_ratio_on = [&](const Vector& rho) {
        double r = logit_pi;
        for (Index i = 0; i < d; ++i) {
            r += log_evidence(rho[i], in.precision[i], in.linear[i], occam);
            r += log_gamma_pdf(rho[i], prior.shape, prior.rate);
            r -= log_gamma_pdf(rho[i], kProposalShape, proposal_rate(in.precision[i], in.linear[i], prior.rate));
        }
        return r;
    };

    if (active) {
        const double log_accept = -log_ratio_on(precisions);
        if (std::log(rng.uniform()) >= log_accept) return 1;
        for (Index i = 0; i < d; ++i) precisions[i] = draw_gamma(prior.shape, prior.rate, rng);
        column.setZero(d);
        return 0;
    }

    Vector proposed(d);
    for (Index i = 0; i < d; ++i)
        proposed[i] = draw_gamma(kProposalShape, proposal_rate(in.precision[i], in.linear[i], prior.rate), rng);
    if (std::log(rng.uniform()) >= log_ratio_on(proposed)) return 0;
    precisions = proposed;
    draw_slab_column(in, column, rng);
    return 1;
}

}  // namespace bmtf
