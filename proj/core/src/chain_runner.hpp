#pragma once

#include "bmtf/hyperparams.hpp"
#include "bmtf/random.hpp"
#include "bmtf/samples.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <sstream>

namespace bmtf::detail {

/// Runs one chain of any sampler exposing init_state/set_state/sweep/log_joint/training_mse.
template <typename Sampler>
auto run_sampler_chain(Sampler& sampler, Index samples, const HyperParams& hp, RngStream& rng) {
    using State = std::decay_t<decltype(sampler.state())>;
    PosteriorSamples<State> out;
    out.chain = static_cast<Index>(rng.stream_id());
    if (samples < hp.K) {
        std::ostringstream msg;
        msg << "N=" << samples << " is smaller than K=" << hp.K;
        out.warnings.push_back(msg.str());
    }
    sampler.set_state(sampler.init_state(rng));
    const Index sweeps = total_sweeps(hp.burn_in, hp.n_samples, hp.thin);
    out.trace_sweeps.reserve(static_cast<std::size_t>(sweeps));
    out.log_joint.reserve(static_cast<std::size_t>(sweeps));
    out.mse.reserve(static_cast<std::size_t>(sweeps));
    const Index warmup = std::min(hp.indicator_warmup, hp.burn_in);
    for (Index sweep = 1; sweep <= sweeps; ++sweep) {
        sampler.set_warmup(sweep <= warmup);
        try {
            // Random initial loadings are uncorrelated with the data, so a Z
            // draw given them lands near zero and the Z/loading scale takes
            // hundreds of sweeps to recover. Fitting the loadings to the
            // prior draw of Z first avoids that.
            sampler.sweep(rng, sweep > 1);
        } catch (const NumericError& e) {
            std::ostringstream msg;
            msg << "chain " << out.chain << " sweep " << sweep << ": " << e.what();
            throw NumericError(msg.str(), e.leading_minor());
        }
        out.trace_sweeps.push_back(sweep);
        out.log_joint.push_back(sampler.log_joint());
        const Vector mse = sampler.training_mse();
        out.mse.emplace_back(mse.data(), mse.data() + mse.size());
        if (is_snapshot_sweep(sweep, hp.burn_in, hp.thin)) {
            out.snapshots.push_back(sampler.state());
            out.snapshot_sweeps.push_back(sweep);
        }
    }
    return out;
}

}  // namespace bmtf::detail
