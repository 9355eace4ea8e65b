#pragma once

#include "bmtf/random.hpp"

namespace bmtf {

/**
 * Inputs for the collapsed spike-and-slab update of one loading column.
 *
 * Coordinate d has Gaussian likelihood exp(-precision_d w^2 / 2 + linear_d w)
 * and slab prior N(prior_mean_d, 1 / prior_precision_d); the spike is an
 * exact zero. An empty prior_mean means zero-mean slabs.
 */
struct SlabColumnInputs {
    const Vector& precision;
    const Vector& linear;
    const Vector& prior_precision;
    const Vector* prior_mean = nullptr;
};

/// log P(active | rest) - log P(inactive | rest), the column integrated out.
double spike_slab_log_odds(double logit_pi, const SlabColumnInputs& in, bool occam = true);

/**
 * Draws the activity indicator with the column marginalized, then the column
 * given the indicator. Writes exact zeros when inactive. Returns the indicator.
 */
int draw_spike_slab_column(double logit_pi, const SlabColumnInputs& in, Vector& column,
                           RngStream& rng, bool occam = true);

/// Draws the column from its slab posterior, as if the indicator were 1.
void draw_slab_column(const SlabColumnInputs& in, Vector& column, RngStream& rng);

/// Gamma(shape, rate) prior of the per-coordinate slab precisions.
struct ArdPrior {
    double shape;
    double rate;
};

/**
 * Metropolis-Hastings jump on (indicator, column, slab precisions) jointly,
 * for zero-mean slabs with their own per-coordinate precisions.
 *
 * Switching off proposes precisions from the prior; switching on proposes
 * them from Gamma(2, 2 (v_hat^2 + rate)) with v_hat = linear / precision,
 * then the column from its slab posterior. Both proposals depend only on
 * the rest of the state, so the move leaves p(indicator, column,
 * precisions | rest) invariant. The collapsed Gibbs draw conditions on the
 * precisions, and once they have adapted to a column fitted to noise it
 * almost never switches that column off; this move does.
 *
 * `in.prior_precision` must alias `precisions`. Returns the new indicator.
 */
int ard_jump(double logit_pi, const SlabColumnInputs& in, ArdPrior prior, int active, Vector& precisions,
             Vector& column, RngStream& rng, bool occam = true);

/// log(p / (1 - p)), +-infinity at the endpoints.
double logit(double p);

}  // namespace bmtf
