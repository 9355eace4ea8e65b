#pragma once

#include "bmtf/collection.hpp"
#include "bmtf/hyperparams.hpp"
#include "bmtf/prepared.hpp"
#include "bmtf/random.hpp"
#include "bmtf/samples.hpp"

#include <utility>
#include <vector>

namespace bmtf {

using IndicatorMatrix = Eigen::MatrixXi;

/**
 * Latent variables of the trilinear model for one chain.
 *
 * x_ndl ~ N(sum_k z_nk v_dk u_lk, 1/tau_t); columns of v[t] with h(t, k) == 0
 * are exactly zero. Matrix views have no U (u == 1).
 */
struct MtfState {
    Matrix z;                      // N x K
    std::vector<Matrix> v;         // per view, D_t x K
    std::vector<Matrix> u;         // per U-group, L_g x K
    IndicatorMatrix h;             // T x K
    Vector pi;                     // K
    std::vector<Matrix> alpha;     // per view, D_t x K
    Vector tau;                    // T
    std::vector<Index> group_of_view;  // -1 for matrices

    Index components() const { return z.cols(); }
    Index view_count() const { return static_cast<Index>(v.size()); }

    /// U for view t; a 1 x K row of ones for matrices.
    Matrix u_of_view(Index t) const;
    /// W_l = V diag(u_l) for every slab of view t.
    std::vector<Matrix> slab_loadings(Index t) const;
};

/// Sum_k z_k o v_k o u_k for view t (third factor 1 for matrices).
Tensor3 reconstruct_mean(const MtfState& s, Index view);

/// Resolved Gamma(a, b) noise prior for each view.
std::vector<std::pair<double, double>> resolve_tau_priors(const PreparedCollection& data,
                                                          const HyperParams& hp, bool per_slab = false);

/**
 * Gibbs sampler for the trilinear model. Owns a prepared copy of the data,
 * the current state, and per-view residual tensors (masked entries zero)
 * that are refreshed after every block that moves many components at once.
 */
class MtfSampler {
  public:
    MtfSampler(const Collection& c, HyperParams hp);

    const PreparedCollection& data() const { return data_; }
    const HyperParams& hyper() const { return hp_; }
    const std::vector<std::pair<double, double>>& tau_priors() const { return tau_prior_; }

    /// Z, U ~ N(0,1); H = 1; pi from its prior; alpha = K and
    /// V ~ N(0, 1/K); tau at the prior mean a/b.
    MtfState init_state(RngStream& rng) const;
    void set_state(MtfState s);
    const MtfState& state() const { return s_; }

    void update_z(RngStream& rng);
    void update_vh(Index view, RngStream& rng);
    void update_u(Index group, RngStream& rng);
    void update_hypers(RngStream& rng);
    /// While set, indicators stay at 1, columns come from the slab and the
    /// ARD precisions keep their current values.
    void set_warmup(bool on) { warmup_ = on; }

    /// One full scan, z -> (v, h) per view -> u per group -> hypers.
    /// update_latent = false skips Z, which a chain does on
    /// its first sweep so the loadings are fitted to the prior draw of Z.
    void sweep(RngStream& rng, bool update_latent = true);

    double log_joint() const;
    /// RSS / |observed| per view (0 for a view without observations).
    Vector training_mse() const;

    /// Replaces a view's observed values (joint-distribution testing).
    void set_observations(Index view, const Tensor3& x);

  private:
    bool warmup_ = false;
    void refresh_residual(Index view) const;
    void ensure_residuals() const;
    double rss(Index view) const;

    PreparedCollection data_;
    HyperParams hp_;
    std::vector<std::pair<double, double>> tau_prior_;
    MtfState s_;
    mutable std::vector<Tensor3> residual_;
    mutable std::vector<bool> stale_;
};

MtfState init_state(const Collection& c, const HyperParams& hp, RngStream& rng);

/// One chain under hp's schedule; snapshots at sweeps burn_in + j * thin.
PosteriorSamples<MtfState> run_chain(const Collection& c, const HyperParams& hp, RngStream& rng);

/// hp.n_chains chains with streams (seed, 0..n-1), up to `jobs` at a time.
std::vector<PosteriorSamples<MtfState>> run_chains(const Collection& c, const HyperParams& hp,
                                                   std::uint64_t seed, Index jobs = 1);

/// Log joint density of all model terms for a state and collection.
double log_joint(const MtfState& s, const Collection& c, const HyperParams& hp);

/// Draws a full state from the prior (tau prior must be fixed).
MtfState sample_prior_state(const PreparedCollection& data, const HyperParams& hp, RngStream& rng);

/// Draws view data from the likelihood given a state.
Tensor3 sample_view_data(const MtfState& s, Index view, Index slabs, RngStream& rng);

}  // namespace bmtf
