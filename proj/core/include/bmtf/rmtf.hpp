#pragma once

#include "bmtf/collection.hpp"
#include "bmtf/hyperparams.hpp"
#include "bmtf/mtf.hpp"
#include "bmtf/prepared.hpp"
#include "bmtf/random.hpp"
#include "bmtf/samples.hpp"

#include <utility>
#include <vector>

namespace bmtf {

struct SlabColumnInputs;

/**
 * Latent variables of the relaxed model for one chain.
 *
 * Slab l of view t has its own D_t x K loading matrix w[t][l] and noise
 * precision tau[t][l]. For tensor views an active column w[t][l].col(k) has
 * prior N(u_lk v_:k, 1/lambda); for matrix views N(0, diag(1/alpha)).
 * Inactive columns (h[t](l, k) == 0) are exactly zero.
 */
struct RmtfState {
    Matrix z;                                 // N x K
    std::vector<std::vector<Matrix>> w;       // [t][l], D_t x K
    std::vector<Matrix> v;                    // per view D_t x K, zero for matrices
    std::vector<Matrix> u;                    // per U-group, L_g x K
    std::vector<IndicatorMatrix> h;           // per view, L_t x K
    Vector pi;                                // K
    std::vector<Matrix> alpha;                // per view; D_t x K for matrices, empty for tensors
    std::vector<Matrix> beta;                 // per view; D_t x K for tensors, empty for matrices
    Vector lambda;                            // size depends on lambda_mode
    std::vector<Vector> tau;                  // per view, L_t
    std::vector<Index> group_of_view;         // -1 for matrices
    LambdaMode lambda_mode = LambdaMode::global;
    std::vector<Index> lambda_offset;         // per view; start of its slabs under per_slab, -1 for matrices

    Index components() const { return z.cols(); }
    Index view_count() const { return static_cast<Index>(w.size()); }
    bool is_tensor_view(Index t) const { return group_of_view[t] >= 0; }
    /// Position in `lambda` governing w[t][l].col(k).
    Index lambda_index(Index t, Index l, Index k) const;
    /// Mean of w[t][l] over slabs, the per-view loading summary.
    Matrix mean_loading(Index t) const;
};

/// Z * W_l' for every slab of view t.
Tensor3 reconstruct_mean(const RmtfState& s, Index view);

/// Number of lambda values needed for a collection under a mode.
Index lambda_count(const PreparedCollection& data, LambdaMode mode, Index k);

/**
 * Gibbs sampler for the relaxed model. Sweep order:
 * z -> (w, h) per view and slab -> v per tensor view -> u per group ->
 * lambda, beta, alpha, tau, pi.
 */
class RmtfSampler {
  public:
    RmtfSampler(const Collection& c, HyperParams hp);

    const PreparedCollection& data() const { return data_; }
    const HyperParams& hyper() const { return hp_; }

    /// Z, U ~ N(0,1); H = 1; pi from its prior; lambda, alpha and beta
    /// equal to K; V ~ N(0, 1/K); W near V diag(u_l) for tensors and
    /// N(0, 1/K) for matrices; tau at a/b.
    RmtfState init_state(RngStream& rng) const;
    void set_state(RmtfState s);
    const RmtfState& state() const { return s_; }

    void update_z(RngStream& rng);
    void update_wh(Index view, RngStream& rng);
    void update_v(Index view, RngStream& rng);
    void update_u(Index group, RngStream& rng);
    void update_hypers(RngStream& rng);
    /// While set, indicators stay at 1, columns come from the slab and the
    /// ARD precisions keep their current values.
    void set_warmup(bool on) { warmup_ = on; }

    /// One full scan. update_latent = false skips Z, which a chain does on
    /// its first sweep so the loadings are fitted to the prior draw of Z.
    void sweep(RngStream& rng, bool update_latent = true);

    double log_joint() const;
    /// RSS / |observed| per view.
    Vector training_mse() const;

    void set_observations(Index view, const Tensor3& x);

  private:
    bool warmup_ = false;
    int draw_column(const SlabColumnInputs& in, Index k, Vector& column, RngStream& rng, bool occam) const;
    void refresh_residual(Index view) const;
    double rss(Index view, Index slab) const;

    PreparedCollection data_;
    HyperParams hp_;
    std::vector<std::pair<double, double>> tau_prior_;
    RmtfState s_;
    mutable std::vector<Tensor3> residual_;
    mutable std::vector<bool> stale_;
};

RmtfState rmtf_init(const Collection& c, const HyperParams& hp, RngStream& rng);
PosteriorSamples<RmtfState> rmtf_run_chain(const Collection& c, const HyperParams& hp,
                                           RngStream& rng);
std::vector<PosteriorSamples<RmtfState>> rmtf_run_chains(const Collection& c,
                                                         const HyperParams& hp,
                                                         std::uint64_t seed, Index jobs = 1);

/// Embeds a trilinear state: w[t][l] = V diag(u_l), per-slab tau = view tau.
RmtfState embed_trilinear(const MtfState& s, const HyperParams& hp, double lambda);

/// Full prior draw (tau prior must be fixed).
RmtfState rmtf_sample_prior_state(const PreparedCollection& data, const HyperParams& hp,
                                  RngStream& rng);
Tensor3 rmtf_sample_view_data(const RmtfState& s, Index view, RngStream& rng);

/// Stage-2 parameters (slab loadings and noise) of a state.
SlabLoadings slab_parameters(const MtfState& s);
SlabLoadings slab_parameters(const RmtfState& s);

}  // namespace bmtf
