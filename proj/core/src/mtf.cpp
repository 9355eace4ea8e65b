#include "bmtf/mtf.hpp"

#include "bmtf/spike_slab.hpp"
#include "chain_runner.hpp"

#include <cmath>
#include <stdexcept>

namespace bmtf {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double log_gamma_density(double x, double shape, double rate) {
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double log_beta_density(double x, double a, double b) {
    return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(x) +
           (b - 1.0) * std::log1p(-x);
}

}  // namespace

Matrix MtfState::u_of_view(Index t) const {
    const Index g = group_of_view[t];
    if (g < 0) return Matrix::Ones(1, components());
    return u[g];
}

std::vector<Matrix> MtfState::slab_loadings(Index t) const {
    const Matrix ut = u_of_view(t);
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(ut.rows()));
    for (Index l = 0; l < ut.rows(); ++l) out.push_back(v[t] * ut.row(l).asDiagonal());
    return out;
}

Tensor3 reconstruct_mean(const MtfState& s, Index view) {
    const Matrix ut = s.u_of_view(view);
    Tensor3 out(s.z.rows(), s.v[view].rows(), ut.rows());
    out.unfolded().noalias() = s.z * stack_loadings(s.slab_loadings(view)).transpose();
    return out;
}

std::vector<std::pair<double, double>> resolve_tau_priors(const PreparedCollection& data,
                                                          const HyperParams& hp, bool per_slab) {
    std::vector<std::pair<double, double>> out;
    for (const auto& pv : data.views()) {
        double a = hp.a_tau;
        switch (hp.tau_prior) {
            case TauPrior::fixed:
                out.emplace_back(hp.a_tau, hp.b_tau);
                continue;
            case TauPrior::snr_scaled: {
                double n = static_cast<double>(pv.observed);
                if (per_slab) n /= static_cast<double>(pv.slabs());
                a = hp.a_tau * 0.5 * n;
                break;
            }
            case TauPrior::snr: break;
        }
        out.emplace_back(a, a * pv.observed_variance / (1.0 + hp.snr));
    }
    return out;
}

MtfSampler::MtfSampler(const Collection& c, HyperParams hp) : data_(c), hp_(std::move(hp)) {
    hp_.validate();
    tau_prior_ = resolve_tau_priors(data_, hp_);
}

MtfState MtfSampler::init_state(RngStream& rng) const {
    const Index k = hp_.K;
    const Index views = data_.view_count();
    MtfState s;
    s.group_of_view = data_.group_of_view();
    s.z = rng.normal_matrix(data_.samples(), k);
    for (const auto& group : data_.groups())
        s.u.push_back(rng.normal_matrix(data_.view(group.front()).slabs(), k));
    s.h = IndicatorMatrix::Ones(views, k);
    s.pi.resize(k);
    for (Index i = 0; i < k; ++i) s.pi[i] = draw_beta(hp_.a_pi, hp_.b_pi, rng);
    // Precision K gives the initial reconstruction unit variance per entry,
    // matching normalized data. The vague prior mean would inflate it by
    // orders of magnitude and collapse the first Z draw towards zero.
    const auto alpha0 = static_cast<double>(k);
    s.tau.resize(views);
    for (Index t = 0; t < views; ++t) {
        const Index d = data_.view(t).features();
        s.alpha.push_back(Matrix::Constant(d, k, alpha0));
        s.v.push_back(rng.normal_matrix(d, k) / std::sqrt(alpha0));
        s.tau[t] = tau_prior_[t].first / tau_prior_[t].second;
    }
    return s;
}

void MtfSampler::set_state(MtfState s) {
    if (s.view_count() != data_.view_count() || s.z.rows() != data_.samples())
        throw std::invalid_argument("MtfSampler::set_state: state does not match data");
    s_ = std::move(s);
    residual_.assign(static_cast<std::size_t>(data_.view_count()), Tensor3{});
    stale_.assign(static_cast<std::size_t>(data_.view_count()), true);
}

void MtfSampler::set_observations(Index view, const Tensor3& x) {
    data_.set_values(view, x);
    stale_[view] = true;
}

void MtfSampler::refresh_residual(Index t) const {
    const auto& pv = data_.view(t);
    Tensor3& r = residual_[t];
    r = pv.x;
    std::vector<Index> active;
    for (Index k = 0; k < s_.components(); ++k)
        if (s_.h(t, k)) active.push_back(k);
    if (!active.empty()) {
        const Matrix ut = s_.u_of_view(t);
        const Index d = pv.features();
        Matrix za(s_.z.rows(), static_cast<Index>(active.size()));
        Matrix wa(d * pv.slabs(), static_cast<Index>(active.size()));
        for (std::size_t j = 0; j < active.size(); ++j) {
            const Index k = active[j];
            za.col(static_cast<Index>(j)) = s_.z.col(k);
            for (Index l = 0; l < pv.slabs(); ++l)
                wa.col(static_cast<Index>(j)).segment(l * d, d) = s_.v[t].col(k) * ut(l, k);
        }
        r.unfolded().noalias() -= za * wa.transpose();
        if (pv.mask) r.unfolded().array() *= pv.mask->unfolded().array();
    }
    stale_[t] = false;
}

void MtfSampler::ensure_residuals() const {
    for (Index t = 0; t < data_.view_count(); ++t)
        if (stale_[t]) refresh_residual(t);
}

double MtfSampler::rss(Index t) const {
    if (stale_[t]) refresh_residual(t);
    return residual_[t].unfolded().squaredNorm();
}

void MtfSampler::update_z(RngStream& rng) {
    SlabLoadings params;
    for (Index t = 0; t < data_.view_count(); ++t) {
        params.loadings.push_back(s_.slab_loadings(t));
        params.tau.push_back(Vector::Constant(data_.view(t).slabs(), s_.tau[t]));
    }
    const double prior = hp_.fault == Fault::z_prior_doubled ? 2.0 : 1.0;
    sample_latent_rows(data_, params, s_.z, rng, prior);
    std::fill(stale_.begin(), stale_.end(), true);
}

void MtfSampler::update_vh(Index t, RngStream& rng) {
    if (stale_[t]) refresh_residual(t);
    const auto& pv = data_.view(t);
    const Index d = pv.features(), slabs = pv.slabs();
    const double tau = s_.tau[t];
    const Matrix ut = s_.u_of_view(t);
    auto r = residual_[t].unfolded();
    Matrix& v = s_.v[t];
    const bool occam = hp_.fault != Fault::spike_without_occam;

    Vector s(d), m(d), column(d), zsq, rz;
    for (Index k = 0; k < s_.components(); ++k) {
        const auto zk = s_.z.col(k);
        const Vector uk = ut.col(k);
        if (pv.fully_observed()) {
            s.setConstant(tau * zk.squaredNorm() * uk.squaredNorm());
        } else {
            zsq = zk.array().square();
            const Vector per_fiber = pv.mask->unfolded().transpose() * zsq;
            s = tau * (Eigen::Map<const Matrix>(per_fiber.data(), d, slabs) *
                       uk.array().square().matrix());
        }
        rz.noalias() = r.transpose() * zk;
        m.noalias() = tau * (Eigen::Map<const Matrix>(rz.data(), d, slabs) * uk);
        m += v.col(k).cwiseProduct(s);

        Vector alpha = s_.alpha[t].col(k);
        SlabColumnInputs in{s, m, alpha};
        if (warmup_) {
            draw_slab_column(in, column, rng);
            s_.h(t, k) = 1;
        } else {
            const double lp = logit(s_.pi[k]);
            const int on = draw_spike_slab_column(lp, in, column, rng, occam);
            s_.h(t, k) = on;
            if (hp_.ard_jump) {
                s_.h(t, k) = ard_jump(lp, in, {hp_.a_alpha, hp_.b_alpha}, on, alpha, column, rng, occam);
                s_.alpha[t].col(k) = alpha;
            }
        }

        const Vector delta = column - v.col(k);
        if (delta.squaredNorm() > 0.0) {
            const Matrix c = delta * uk.transpose();
            r.noalias() -= zk * Eigen::Map<const Vector>(c.data(), d * slabs).transpose();
            if (pv.mask) r.array() *= pv.mask->unfolded().array();
        }
        v.col(k) = column;
    }
}

void MtfSampler::update_u(Index g, RngStream& rng) {
    const auto& members = data_.groups()[g];
    const Index k = s_.components();
    Matrix& u = s_.u[g];
    const Index slabs = u.rows();
    const Matrix ztz = s_.z.transpose() * s_.z;

    Matrix h = Matrix::Zero(slabs, k);
    bool all_full = true;
    for (Index t : members) {
        const auto& pv = data_.view(t);
        const Matrix y = pv.x.unfolded().transpose() * s_.z;  // (D*L) x K
        const Index d = pv.features();
        for (Index l = 0; l < slabs; ++l)
            h.row(l) += s_.tau[t] *
                        (y.middleRows(l * d, d).array() * s_.v[t].array()).colwise().sum().matrix();
        all_full = all_full && pv.fully_observed();
    }

    if (all_full) {
        Matrix precision = Matrix::Identity(k, k);
        for (Index t : members)
            precision += s_.tau[t] * ztz.cwiseProduct(s_.v[t].transpose() * s_.v[t]);
        u = factor_with_jitter(precision).draw_rows(h, rng);
    } else {
        for (Index l = 0; l < slabs; ++l) {
            Matrix precision = Matrix::Identity(k, k);
            for (Index t : members) {
                const auto& pv = data_.view(t);
                const Matrix& v = s_.v[t];
                if (pv.slab_fully_observed(l)) {
                    precision += s_.tau[t] * ztz.cwiseProduct(v.transpose() * v);
                    continue;
                }
                const auto mask = pv.mask->slab(l);
                for (Index d = 0; d < pv.features(); ++d) {
                    if (v.row(d).isZero(0.0)) continue;
                    const Matrix zm = s_.z.array().colwise() * mask.col(d).array();
                    const Matrix szz = zm.transpose() * s_.z;
                    precision += s_.tau[t] * szz.cwiseProduct(v.row(d).transpose() * v.row(d));
                }
            }
            u.row(l) = factor_with_jitter(precision).draw(h.row(l).transpose(), rng).transpose();
        }
    }
    for (Index t : members) stale_[t] = true;
}

void MtfSampler::update_hypers(RngStream& rng) {
    ensure_residuals();
    const Index k = s_.components();
    const Index views = data_.view_count();
    for (Index i = 0; i < k; ++i) {
        const double on = s_.h.col(i).sum();
        s_.pi[i] = draw_beta(hp_.a_pi + on, hp_.b_pi + static_cast<double>(views) - on, rng);
    }
    for (Index t = 0; t < views && !warmup_; ++t) {
        Matrix& alpha = s_.alpha[t];
        for (Index i = 0; i < k; ++i) {
            const bool on = s_.h(t, i) != 0;
            for (Index d = 0; d < alpha.rows(); ++d) {
                const double vd = s_.v[t](d, i);
                alpha(d, i) = on ? draw_gamma(hp_.a_alpha + 0.5, hp_.b_alpha + 0.5 * vd * vd, rng)
                                 : draw_gamma(hp_.a_alpha, hp_.b_alpha, rng);
            }
        }
    }
    for (Index t = 0; t < views; ++t) {
        const double half_rss = (hp_.fault == Fault::tau_rate_halved ? 0.25 : 0.5) * rss(t);
        const auto [a, b] = tau_prior_[t];
        s_.tau[t] = draw_gamma(a + 0.5 * static_cast<double>(data_.view(t).observed), b + half_rss, rng);
    }
}

void MtfSampler::sweep(RngStream& rng, bool update_latent) {
    if (update_latent) update_z(rng);
    for (Index t = 0; t < data_.view_count(); ++t) update_vh(t, rng);
    for (Index g = 0; g < data_.group_count(); ++g) update_u(g, rng);
    update_hypers(rng);
}

double MtfSampler::log_joint() const {
    const Index k = s_.components();
    double lj = 0.0;
    for (Index t = 0; t < data_.view_count(); ++t) {
        const double obs = static_cast<double>(data_.view(t).observed);
        const double tau = s_.tau[t];
        lj += 0.5 * obs * (std::log(tau) - kLog2Pi) - 0.5 * tau * rss(t);
        const auto [a, b] = tau_prior_[t];
        lj += log_gamma_density(tau, a, b);
    }
    lj += -0.5 * s_.z.squaredNorm() - 0.5 * static_cast<double>(s_.z.size()) * kLog2Pi;
    for (const auto& u : s_.u) lj += -0.5 * u.squaredNorm() - 0.5 * static_cast<double>(u.size()) * kLog2Pi;
    for (Index i = 0; i < k; ++i) {
        const double p = s_.pi[i];
        lj += log_beta_density(p, hp_.a_pi, hp_.b_pi);
        for (Index t = 0; t < data_.view_count(); ++t)
            lj += s_.h(t, i) ? std::log(p) : std::log1p(-p);
    }
    for (Index t = 0; t < data_.view_count(); ++t) {
        const Matrix& alpha = s_.alpha[t];
        for (Index i = 0; i < k; ++i) {
            for (Index d = 0; d < alpha.rows(); ++d) {
                const double a = alpha(d, i);
                lj += log_gamma_density(a, hp_.a_alpha, hp_.b_alpha);
                if (s_.h(t, i)) {
                    const double vd = s_.v[t](d, i);
                    lj += 0.5 * (std::log(a) - kLog2Pi) - 0.5 * a * vd * vd;
                }
            }
        }
    }
    return lj;
}

Vector MtfSampler::training_mse() const {
    Vector out(data_.view_count());
    for (Index t = 0; t < data_.view_count(); ++t) {
        const Index obs = data_.view(t).observed;
        out[t] = obs > 0 ? rss(t) / static_cast<double>(obs) : 0.0;
    }
    return out;
}

MtfState init_state(const Collection& c, const HyperParams& hp, RngStream& rng) {
    return MtfSampler(c, hp).init_state(rng);
}

PosteriorSamples<MtfState> run_chain(const Collection& c, const HyperParams& hp, RngStream& rng) {
    MtfSampler sampler(c, hp);
    return detail::run_sampler_chain(sampler, c.samples(), hp, rng);
}

std::vector<PosteriorSamples<MtfState>> run_chains(const Collection& c, const HyperParams& hp,
                                                   std::uint64_t seed, Index jobs) {
    std::vector<PosteriorSamples<MtfState>> out(static_cast<std::size_t>(hp.n_chains));
    detail::parallel_for(hp.n_chains, jobs, [&](Index i) {
        RngStream rng(seed, static_cast<std::uint64_t>(i));
        out[static_cast<std::size_t>(i)] = run_chain(c, hp, rng);
    });
    return out;
}

double log_joint(const MtfState& s, const Collection& c, const HyperParams& hp) {
    MtfSampler sampler(c, hp);
    sampler.set_state(s);
    return sampler.log_joint();
}

MtfState sample_prior_state(const PreparedCollection& data, const HyperParams& hp, RngStream& rng) {
    const auto priors = resolve_tau_priors(data, hp);
    const Index k = hp.K;
    const Index views = data.view_count();
    MtfState s;
    s.group_of_view = data.group_of_view();
    s.pi.resize(k);
    for (Index i = 0; i < k; ++i) s.pi[i] = draw_beta(hp.a_pi, hp.b_pi, rng);
    s.h.resize(views, k);
    for (Index t = 0; t < views; ++t)
        for (Index i = 0; i < k; ++i) s.h(t, i) = draw_bernoulli_logodds(logit(s.pi[i]), rng);
    s.tau.resize(views);
    for (Index t = 0; t < views; ++t) {
        const Index d = data.view(t).features();
        Matrix alpha(d, k), v = Matrix::Zero(d, k);
        for (Index i = 0; i < k; ++i)
            for (Index j = 0; j < d; ++j) {
                alpha(j, i) = draw_gamma(hp.a_alpha, hp.b_alpha, rng);
                if (s.h(t, i)) v(j, i) = rng.normal() / std::sqrt(alpha(j, i));
            }
        s.alpha.push_back(std::move(alpha));
        s.v.push_back(std::move(v));
        s.tau[t] = draw_gamma(priors[t].first, priors[t].second, rng);
    }
    s.z = rng.normal_matrix(data.samples(), k);
    for (const auto& group : data.groups())
        s.u.push_back(rng.normal_matrix(data.view(group.front()).slabs(), k));
    return s;
}

Tensor3 sample_view_data(const MtfState& s, Index view, Index slabs, RngStream& rng) {
    Tensor3 x = reconstruct_mean(s, view);
    if (x.slabs() != slabs) throw std::invalid_argument("sample_view_data: slab count mismatch");
    const double sd = 1.0 / std::sqrt(s.tau[view]);
    for (double& e : x.values()) e += sd * rng.normal();
    return x;
}

}  // namespace bmtf
