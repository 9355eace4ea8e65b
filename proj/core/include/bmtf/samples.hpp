#pragma once

#include "bmtf/tensor.hpp"

#include <string>
#include <vector>

namespace bmtf {

/// Thinned post-burn-in snapshots of one chain plus per-sweep traces.
template <typename State>
struct PosteriorSamples {
    Index chain = 0;
    std::vector<State> snapshots;
    std::vector<Index> snapshot_sweeps;

    std::vector<Index> trace_sweeps;
    std::vector<double> log_joint;
    std::vector<std::vector<double>> mse;  // [sweep][view]

    std::vector<std::string> warnings;

    std::vector<double> mse_trace(Index view) const {
        std::vector<double> out;
        out.reserve(mse.size());
        for (const auto& row : mse) out.push_back(row[view]);
        return out;
    }
};

/// True when `sweep` (1-based) is a snapshot sweep under the schedule.
inline bool is_snapshot_sweep(Index sweep, Index burn_in, Index thin) {
    return sweep > burn_in && (sweep - burn_in) % thin == 0;
}

inline Index total_sweeps(Index burn_in, Index n_samples, Index thin) {
    return burn_in + n_samples * thin;
}

}  // namespace bmtf
