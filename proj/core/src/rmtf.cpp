#include "bmtf/rmtf.hpp"

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

double log_normal_sum(double squared_deviation_sum, double precision, double count) {
    return 0.5 * count * (std::log(precision) - kLog2Pi) - 0.5 * precision * squared_deviation_sum;
}

std::vector<Index> lambda_offsets(const PreparedCollection& data) {
    std::vector<Index> out;
    Index next = 0;
    for (Index t = 0; t < data.view_count(); ++t) {
        if (data.group_of(t) < 0) {
            out.push_back(-1);
        } else {
            out.push_back(next);
            next += data.view(t).slabs();
        }
    }
    return out;
}

}  // namespace

Index RmtfState::lambda_index(Index t, Index l, Index k) const {
    switch (lambda_mode) {
        case LambdaMode::global: return 0;
        case LambdaMode::per_component: return k;
        case LambdaMode::per_slab: return lambda_offset[t] + l;
    }
    return 0;
}

Matrix RmtfState::mean_loading(Index t) const {
    Matrix out = Matrix::Zero(w[t].front().rows(), components());
    for (const auto& wl : w[t]) out += wl;
    return out / static_cast<double>(w[t].size());
}

Tensor3 reconstruct_mean(const RmtfState& s, Index view) {
    const auto& w = s.w[view];
    Tensor3 out(s.z.rows(), w.front().rows(), static_cast<Index>(w.size()));
    out.unfolded().noalias() = s.z * stack_loadings(w).transpose();
    return out;
}

Index lambda_count(const PreparedCollection& data, LambdaMode mode, Index k) {
    switch (mode) {
        case LambdaMode::global: return 1;
        case LambdaMode::per_component: return k;
        case LambdaMode::per_slab: {
            Index n = 0;
            for (Index t = 0; t < data.view_count(); ++t)
                if (data.group_of(t) >= 0) n += data.view(t).slabs();
            return n;
        }
    }
    return 1;
}

RmtfSampler::RmtfSampler(const Collection& c, HyperParams hp) : data_(c), hp_(std::move(hp)) {
    hp_.validate();
    tau_prior_ = resolve_tau_priors(data_, hp_, true);
}

RmtfState RmtfSampler::init_state(RngStream& rng) const {
    const Index k = hp_.K;
    RmtfState s;
    s.group_of_view = data_.group_of_view();
    s.lambda_mode = hp_.lambda_mode;
    s.lambda_offset = lambda_offsets(data_);
    s.z = rng.normal_matrix(data_.samples(), k);
    for (const auto& group : data_.groups())
        s.u.push_back(rng.normal_matrix(data_.view(group.front()).slabs(), k));
    s.pi.resize(k);
    for (Index i = 0; i < k; ++i) s.pi[i] = draw_beta(hp_.a_pi, hp_.b_pi, rng);
    // A prior draw of lambda can be tiny, which leaves the slabs free of the
    // trilinear structure at the start; begin tied to it instead.
    s.lambda = Vector::Constant(lambda_count(data_, hp_.lambda_mode, k), static_cast<double>(k));

    for (Index t = 0; t < data_.view_count(); ++t) {
        const auto& pv = data_.view(t);
        const Index d = pv.features(), slabs = pv.slabs();
        s.h.push_back(IndicatorMatrix::Ones(slabs, k));
        s.tau.push_back(Vector::Constant(slabs, tau_prior_[t].first / tau_prior_[t].second));
        std::vector<Matrix> w;
        if (s.is_tensor_view(t)) {
            // Precision K as in the trilinear sampler; the slab deviations get
            // the same factor so they start small next to the trilinear part.
            const auto beta0 = static_cast<double>(k);
            s.beta.push_back(Matrix::Constant(d, k, beta0));
            s.alpha.emplace_back();
            s.v.push_back(rng.normal_matrix(d, k) / std::sqrt(beta0));
            const Matrix& u = s.u[s.group_of_view[t]];
            for (Index l = 0; l < slabs; ++l) {
                Matrix wl = s.v[t] * u.row(l).asDiagonal();
                for (Index i = 0; i < k; ++i)
                    for (Index j = 0; j < d; ++j)
                        wl(j, i) += rng.normal() / std::sqrt(beta0 * s.lambda[s.lambda_index(t, l, i)]);
                w.push_back(std::move(wl));
            }
        } else {
            const auto alpha0 = static_cast<double>(k);
            s.alpha.push_back(Matrix::Constant(d, k, alpha0));
            s.beta.emplace_back();
            s.v.push_back(Matrix::Zero(d, k));
            w.push_back(rng.normal_matrix(d, k) / std::sqrt(alpha0));
        }
        s.w.push_back(std::move(w));
    }
    return s;
}

void RmtfSampler::set_state(RmtfState s) {
    if (s.view_count() != data_.view_count() || s.z.rows() != data_.samples())
        throw std::invalid_argument("RmtfSampler::set_state: state does not match data");
    s_ = std::move(s);
    residual_.assign(static_cast<std::size_t>(data_.view_count()), Tensor3{});
    stale_.assign(static_cast<std::size_t>(data_.view_count()), true);
}

void RmtfSampler::set_observations(Index view, const Tensor3& x) {
    data_.set_values(view, x);
    stale_[view] = true;
}

void RmtfSampler::refresh_residual(Index t) const {
    const auto& pv = data_.view(t);
    Tensor3& r = residual_[t];
    r = pv.x;
    r.unfolded().noalias() -= s_.z * stack_loadings(s_.w[t]).transpose();
    if (pv.mask) r.unfolded().array() *= pv.mask->unfolded().array();
    stale_[t] = false;
}

double RmtfSampler::rss(Index t, Index l) const {
    if (stale_[t]) refresh_residual(t);
    return residual_[t].slab(l).squaredNorm();
}

void RmtfSampler::update_z(RngStream& rng) {
    const double prior = hp_.fault == Fault::z_prior_doubled ? 2.0 : 1.0;
    sample_latent_rows(data_, slab_parameters(s_), s_.z, rng, prior);
    std::fill(stale_.begin(), stale_.end(), true);
}

int RmtfSampler::draw_column(const SlabColumnInputs& in, Index k, Vector& column, RngStream& rng,
                             bool occam) const {
    if (warmup_) {
        draw_slab_column(in, column, rng);
        return 1;
    }
    return draw_spike_slab_column(logit(s_.pi[k]), in, column, rng, occam);
}

void RmtfSampler::update_wh(Index t, RngStream& rng) {
    if (stale_[t]) refresh_residual(t);
    const auto& pv = data_.view(t);
    const Index d = pv.features();
    const bool tensor = s_.is_tensor_view(t);
    const bool occam = hp_.fault != Fault::spike_without_occam;

    Vector s(d), m(d), column(d), rho(d), mu(d), zsq;
    for (Index l = 0; l < pv.slabs(); ++l) {
        auto r = residual_[t].slab(l);
        Matrix& w = s_.w[t][l];
        const double tau = s_.tau[t][l];
        for (Index k = 0; k < s_.components(); ++k) {
            const auto zk = s_.z.col(k);
            if (pv.slab_fully_observed(l)) {
                s.setConstant(tau * zk.squaredNorm());
            } else {
                zsq = zk.array().square();
                s.noalias() = tau * (pv.mask->slab(l).transpose() * zsq);
            }
            m.noalias() = tau * (r.transpose() * zk);
            m += w.col(k).cwiseProduct(s);

            int active = 0;
            if (tensor) {
                rho.setConstant(s_.lambda[s_.lambda_index(t, l, k)]);
                mu = s_.v[t].col(k) * s_.u[s_.group_of_view[t]](l, k);
                SlabColumnInputs in{s, m, rho, &mu};
                active = draw_column(in, k, column, rng, occam);
            } else {
                rho = s_.alpha[t].col(k);
                SlabColumnInputs in{s, m, rho};
                active = draw_column(in, k, column, rng, occam);
                if (!warmup_ && hp_.ard_jump) {
                    active = ard_jump(logit(s_.pi[k]), in, {hp_.a_alpha, hp_.b_alpha}, active, rho, column, rng,
                                      occam);
                    s_.alpha[t].col(k) = rho;
                }
            }
            s_.h[t](l, k) = active;

            const Vector delta = column - w.col(k);
            if (delta.squaredNorm() > 0.0) {
                r.noalias() -= zk * delta.transpose();
                if (pv.mask) r.array() *= pv.mask->slab(l).array();
            }
            w.col(k) = column;
        }
    }
}

void RmtfSampler::update_v(Index t, RngStream& rng) {
    if (!s_.is_tensor_view(t)) return;
    const Matrix& u = s_.u[s_.group_of_view[t]];
    Matrix& v = s_.v[t];
    const Index d = v.rows();
    for (Index k = 0; k < s_.components(); ++k) {
        double prec_shift = 0.0;
        Vector lin = Vector::Zero(d);
        for (Index l = 0; l < u.rows(); ++l) {
            if (!s_.h[t](l, k)) continue;
            const double lam = s_.lambda[s_.lambda_index(t, l, k)];
            prec_shift += lam * u(l, k) * u(l, k);
            lin += lam * u(l, k) * s_.w[t][l].col(k);
        }
        for (Index j = 0; j < d; ++j) {
            const double prec = s_.beta[t](j, k) + prec_shift;
            v(j, k) = lin[j] / prec + rng.normal() / std::sqrt(prec);
        }
    }
}

void RmtfSampler::update_u(Index g, RngStream& rng) {
    const auto& members = data_.groups()[g];
    Matrix& u = s_.u[g];
    for (Index k = 0; k < s_.components(); ++k) {
        for (Index l = 0; l < u.rows(); ++l) {
            double prec = 1.0, lin = 0.0;
            for (Index t : members) {
                if (!s_.h[t](l, k)) continue;
                const double lam = s_.lambda[s_.lambda_index(t, l, k)];
                const auto vk = s_.v[t].col(k);
                prec += lam * vk.squaredNorm();
                lin += lam * vk.dot(s_.w[t][l].col(k));
            }
            u(l, k) = lin / prec + rng.normal() / std::sqrt(prec);
        }
    }
}

void RmtfSampler::update_hypers(RngStream& rng) {
    const Index k = s_.components();
    const Index views = data_.view_count();

    Vector shape = Vector::Constant(s_.lambda.size(), hp_.a_lambda);
    Vector rate = Vector::Constant(s_.lambda.size(), hp_.b_lambda);
    const double rate_factor = hp_.fault == Fault::lambda_rate_doubled ? 1.0 : 0.5;
    for (Index t = 0; t < views; ++t) {
        if (!s_.is_tensor_view(t)) continue;
        const Matrix& u = s_.u[s_.group_of_view[t]];
        const Index d = s_.v[t].rows();
        for (Index l = 0; l < u.rows(); ++l)
            for (Index i = 0; i < k; ++i) {
                if (!s_.h[t](l, i)) continue;
                const Index idx = s_.lambda_index(t, l, i);
                shape[idx] += 0.5 * static_cast<double>(d);
                rate[idx] += rate_factor * (s_.w[t][l].col(i) - s_.v[t].col(i) * u(l, i)).squaredNorm();
            }
    }
    for (Index i = 0; i < s_.lambda.size(); ++i) s_.lambda[i] = draw_gamma(shape[i], rate[i], rng);

    for (Index t = 0; t < views && !warmup_; ++t) {
        if (s_.is_tensor_view(t)) {
            Matrix& beta = s_.beta[t];
            for (Index i = 0; i < k; ++i)
                for (Index j = 0; j < beta.rows(); ++j) {
                    // A component off in every slab leaves v to its vague prior,
                    // where |v| wanders without bound; keep the rate finite.
                    const double vj = s_.v[t](j, i);
                    const double half_sq = std::min(0.5 * vj * vj, 0.5 * std::numeric_limits<double>::max());
                    beta(j, i) = draw_gamma(hp_.a_beta + 0.5, hp_.b_beta + half_sq, rng);
                }
        } else {
            Matrix& alpha = s_.alpha[t];
            for (Index i = 0; i < k; ++i) {
                const bool on = s_.h[t](0, i) != 0;
                for (Index j = 0; j < alpha.rows(); ++j) {
                    const double wj = s_.w[t][0](j, i);
                    alpha(j, i) = on ? draw_gamma(hp_.a_alpha + 0.5, hp_.b_alpha + 0.5 * wj * wj, rng)
                                     : draw_gamma(hp_.a_alpha, hp_.b_alpha, rng);
                }
            }
        }
    }

    const double rss_factor = hp_.fault == Fault::tau_rate_halved ? 0.25 : 0.5;
    Index total_slabs = 0;
    for (Index t = 0; t < views; ++t) {
        const auto& pv = data_.view(t);
        const auto [a, b] = tau_prior_[t];
        for (Index l = 0; l < pv.slabs(); ++l)
            s_.tau[t][l] = draw_gamma(a + 0.5 * static_cast<double>(pv.slab_observed[l]),
                                      b + rss_factor * rss(t, l), rng);
        total_slabs += pv.slabs();
    }

    for (Index i = 0; i < k; ++i) {
        double on = 0.0;
        for (Index t = 0; t < views; ++t) on += s_.h[t].col(i).sum();
        s_.pi[i] = draw_beta(hp_.a_pi + on, hp_.b_pi + static_cast<double>(total_slabs) - on, rng);
    }
}

void RmtfSampler::sweep(RngStream& rng, bool update_latent) {
    if (update_latent) update_z(rng);
    for (Index t = 0; t < data_.view_count(); ++t) update_wh(t, rng);
    for (Index t = 0; t < data_.view_count(); ++t) update_v(t, rng);
    for (Index g = 0; g < data_.group_count(); ++g) update_u(g, rng);
    update_hypers(rng);
}

double RmtfSampler::log_joint() const {
    const Index k = s_.components();
    double lj = 0.0;
    for (Index t = 0; t < data_.view_count(); ++t) {
        const auto& pv = data_.view(t);
        const auto [a, b] = tau_prior_[t];
        for (Index l = 0; l < pv.slabs(); ++l) {
            const double tau = s_.tau[t][l];
            lj += log_normal_sum(rss(t, l), tau, static_cast<double>(pv.slab_observed[l]));
            lj += log_gamma_density(tau, a, b);
        }
    }
    lj += log_normal_sum(s_.z.squaredNorm(), 1.0, static_cast<double>(s_.z.size()));
    for (const auto& u : s_.u) lj += log_normal_sum(u.squaredNorm(), 1.0, static_cast<double>(u.size()));
    for (Index i = 0; i < k; ++i) {
        const double p = s_.pi[i];
        lj += std::lgamma(hp_.a_pi + hp_.b_pi) - std::lgamma(hp_.a_pi) - std::lgamma(hp_.b_pi) +
              (hp_.a_pi - 1.0) * std::log(p) + (hp_.b_pi - 1.0) * std::log1p(-p);
        for (Index t = 0; t < data_.view_count(); ++t)
            for (Index l = 0; l < s_.h[t].rows(); ++l) lj += s_.h[t](l, i) ? std::log(p) : std::log1p(-p);
    }
    for (Index i = 0; i < s_.lambda.size(); ++i)
        lj += log_gamma_density(s_.lambda[i], hp_.a_lambda, hp_.b_lambda);
    for (Index t = 0; t < data_.view_count(); ++t) {
        const Index d = s_.v[t].rows();
        if (s_.is_tensor_view(t)) {
            const Matrix& u = s_.u[s_.group_of_view[t]];
            for (Index i = 0; i < k; ++i) {
                for (Index j = 0; j < d; ++j) {
                    const double beta = s_.beta[t](j, i);
                    lj += log_gamma_density(beta, hp_.a_beta, hp_.b_beta);
                    lj += log_normal_sum(s_.v[t](j, i) * s_.v[t](j, i), beta, 1.0);
                }
                for (Index l = 0; l < u.rows(); ++l) {
                    if (!s_.h[t](l, i)) continue;
                    const double dev = (s_.w[t][l].col(i) - s_.v[t].col(i) * u(l, i)).squaredNorm();
                    lj += log_normal_sum(dev, s_.lambda[s_.lambda_index(t, l, i)], static_cast<double>(d));
                }
            }
        } else {
            for (Index i = 0; i < k; ++i)
                for (Index j = 0; j < d; ++j) {
                    const double alpha = s_.alpha[t](j, i);
                    lj += log_gamma_density(alpha, hp_.a_alpha, hp_.b_alpha);
                    if (s_.h[t](0, i)) {
                        const double wj = s_.w[t][0](j, i);
                        lj += log_normal_sum(wj * wj, alpha, 1.0);
                    }
                }
        }
    }
    return lj;
}

Vector RmtfSampler::training_mse() const {
    Vector out(data_.view_count());
    for (Index t = 0; t < data_.view_count(); ++t) {
        double total = 0.0;
        for (Index l = 0; l < data_.view(t).slabs(); ++l) total += rss(t, l);
        const Index obs = data_.view(t).observed;
        out[t] = obs > 0 ? total / static_cast<double>(obs) : 0.0;
    }
    return out;
}

RmtfState rmtf_init(const Collection& c, const HyperParams& hp, RngStream& rng) {
    return RmtfSampler(c, hp).init_state(rng);
}

PosteriorSamples<RmtfState> rmtf_run_chain(const Collection& c, const HyperParams& hp,
                                           RngStream& rng) {
    RmtfSampler sampler(c, hp);
    return detail::run_sampler_chain(sampler, c.samples(), hp, rng);
}

std::vector<PosteriorSamples<RmtfState>> rmtf_run_chains(const Collection& c,
                                                         const HyperParams& hp,
                                                         std::uint64_t seed, Index jobs) {
    std::vector<PosteriorSamples<RmtfState>> out(static_cast<std::size_t>(hp.n_chains));
    detail::parallel_for(hp.n_chains, jobs, [&](Index i) {
        RngStream rng(seed, static_cast<std::uint64_t>(i));
        out[static_cast<std::size_t>(i)] = rmtf_run_chain(c, hp, rng);
    });
    return out;
}

RmtfState embed_trilinear(const MtfState& m, const HyperParams& hp, double lambda) {
    const Index k = m.components();
    RmtfState s;
    s.z = m.z;
    s.u = m.u;
    s.pi = m.pi;
    s.group_of_view = m.group_of_view;
    s.lambda_mode = hp.lambda_mode;
    Index next = 0;
    for (Index t = 0; t < m.view_count(); ++t) {
        const bool tensor = m.group_of_view[t] >= 0;
        const std::vector<Matrix> slabs = m.slab_loadings(t);
        const Index d = m.v[t].rows();
        const auto slab_count = static_cast<Index>(slabs.size());
        s.w.push_back(slabs);
        s.h.push_back(m.h.row(t).replicate(slab_count, 1));
        s.tau.push_back(Vector::Constant(slab_count, m.tau[t]));
        s.v.push_back(tensor ? m.v[t] : Matrix::Zero(d, k));
        s.alpha.push_back(tensor ? Matrix() : m.alpha[t]);
        s.beta.push_back(tensor ? Matrix::Constant(d, k, hp.a_beta / hp.b_beta) : Matrix());
        s.lambda_offset.push_back(tensor ? next : -1);
        if (tensor) next += slab_count;
    }
    const Index n_lambda = hp.lambda_mode == LambdaMode::global       ? 1
                           : hp.lambda_mode == LambdaMode::per_component ? k
                                                                        : next;
    s.lambda = Vector::Constant(n_lambda, lambda);
    return s;
}

RmtfState rmtf_sample_prior_state(const PreparedCollection& data, const HyperParams& hp,
                                  RngStream& rng) {
    const auto priors = resolve_tau_priors(data, hp, true);
    const Index k = hp.K;
    RmtfState s;
    s.group_of_view = data.group_of_view();
    s.lambda_mode = hp.lambda_mode;
    s.lambda_offset = lambda_offsets(data);
    s.pi.resize(k);
    for (Index i = 0; i < k; ++i) s.pi[i] = draw_beta(hp.a_pi, hp.b_pi, rng);
    s.lambda.resize(lambda_count(data, hp.lambda_mode, k));
    for (Index i = 0; i < s.lambda.size(); ++i) s.lambda[i] = draw_gamma(hp.a_lambda, hp.b_lambda, rng);
    s.z = rng.normal_matrix(data.samples(), k);
    for (const auto& group : data.groups())
        s.u.push_back(rng.normal_matrix(data.view(group.front()).slabs(), k));

    for (Index t = 0; t < data.view_count(); ++t) {
        const auto& pv = data.view(t);
        const Index d = pv.features(), slabs = pv.slabs();
        IndicatorMatrix h(slabs, k);
        for (Index l = 0; l < slabs; ++l)
            for (Index i = 0; i < k; ++i) h(l, i) = draw_bernoulli_logodds(logit(s.pi[i]), rng);
        Vector tau(slabs);
        for (Index l = 0; l < slabs; ++l) tau[l] = draw_gamma(priors[t].first, priors[t].second, rng);
        std::vector<Matrix> w;
        if (s.is_tensor_view(t)) {
            Matrix beta(d, k), v(d, k);
            for (Index i = 0; i < k; ++i)
                for (Index j = 0; j < d; ++j) {
                    beta(j, i) = draw_gamma(hp.a_beta, hp.b_beta, rng);
                    v(j, i) = rng.normal() / std::sqrt(beta(j, i));
                }
            const Matrix& u = s.u[s.group_of_view[t]];
            for (Index l = 0; l < slabs; ++l) {
                Matrix wl = Matrix::Zero(d, k);
                for (Index i = 0; i < k; ++i) {
                    if (!h(l, i)) continue;
                    const double sd = 1.0 / std::sqrt(s.lambda[s.lambda_index(t, l, i)]);
                    for (Index j = 0; j < d; ++j) wl(j, i) = u(l, i) * v(j, i) + sd * rng.normal();
                }
                w.push_back(std::move(wl));
            }
            s.beta.push_back(std::move(beta));
            s.alpha.emplace_back();
            s.v.push_back(std::move(v));
        } else {
            Matrix alpha(d, k), wl = Matrix::Zero(d, k);
            for (Index i = 0; i < k; ++i)
                for (Index j = 0; j < d; ++j) {
                    alpha(j, i) = draw_gamma(hp.a_alpha, hp.b_alpha, rng);
                    if (h(0, i)) wl(j, i) = rng.normal() / std::sqrt(alpha(j, i));
                }
            w.push_back(std::move(wl));
            s.alpha.push_back(std::move(alpha));
            s.beta.emplace_back();
            s.v.push_back(Matrix::Zero(d, k));
        }
        s.w.push_back(std::move(w));
        s.h.push_back(std::move(h));
        s.tau.push_back(std::move(tau));
    }
    return s;
}

Tensor3 rmtf_sample_view_data(const RmtfState& s, Index view, RngStream& rng) {
    Tensor3 x = reconstruct_mean(s, view);
    for (Index l = 0; l < x.slabs(); ++l) {
        const double sd = 1.0 / std::sqrt(s.tau[view][l]);
        auto slab = x.slab(l);
        for (Index j = 0; j < slab.cols(); ++j)
            for (Index i = 0; i < slab.rows(); ++i) slab(i, j) += sd * rng.normal();
    }
    return x;
}

SlabLoadings slab_parameters(const MtfState& s) {
    SlabLoadings out;
    for (Index t = 0; t < s.view_count(); ++t) {
        out.loadings.push_back(s.slab_loadings(t));
        out.tau.push_back(Vector::Constant(static_cast<Index>(out.loadings.back().size()), s.tau[t]));
    }
    return out;
}

SlabLoadings slab_parameters(const RmtfState& s) {
    SlabLoadings out;
    out.loadings = s.w;
    out.tau = s.tau;
    return out;
}

}  // namespace bmtf
