#include "bmtf/joint_test.hpp"

#include "bmtf/mtf.hpp"
#include "bmtf/rmtf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bmtf {

namespace {

Collection test_collection(const JointTestConfig& cfg) {
    Collection c;
    if (cfg.include_matrix) c.views.push_back({"matrix", MaskedTensor3(Tensor3(cfg.N, cfg.D, 1))});
    c.views.push_back({"tensor", MaskedTensor3(Tensor3(cfg.N, cfg.D, cfg.L))});
    c.third_mode_groups = {{c.view_count() - 1}};
    if (cfg.with_missing) {
        auto& tensor = c.views.back().data;
        for (Index d = 0; d < cfg.D; ++d) tensor.set_observed(1 % cfg.N, d, cfg.L - 1, false);
        tensor.set_observed(2 % cfg.N, cfg.D - 1, 0, false);
        if (cfg.include_matrix) c.views.front().data.set_observed(0, 0, 0, false);
    }
    return c;
}

/// Mean and mean square of a matrix's entries.
void moments(const Matrix& m, std::vector<double>& out) {
    if (m.size() == 0) {
        out.push_back(0.0);
        out.push_back(0.0);
        return;
    }
    out.push_back(m.mean());
    out.push_back(m.squaredNorm() / static_cast<double>(m.size()));
}

void data_moments(const PreparedCollection& data, const std::vector<Tensor3>& x, std::vector<double>& out) {
    for (Index t = 0; t < data.view_count(); ++t) {
        const auto& pv = data.view(t);
        Matrix xu = x[t].unfolded();
        if (pv.mask) xu.array() *= pv.mask->unfolded().array();
        const double n = static_cast<double>(pv.observed);
        out.push_back(xu.sum() / n);
        out.push_back(xu.squaredNorm() / n);
    }
}

std::vector<std::string> names_for(const JointTestConfig& cfg, const PreparedCollection& data) {
    std::vector<std::string> n{"z_mean", "z_sq"};
    for (Index t = 0; t < data.view_count(); ++t) {
        const std::string s = std::to_string(t);
        if (cfg.model == JointModel::mtf) {
            n.insert(n.end(), {"v" + s + "_mean", "v" + s + "_sq", "h" + s + "_mean", "alpha" + s + "_mean",
                               "tau" + s + "_mean", "tau" + s + "_sq"});
        } else {
            n.insert(n.end(), {"w" + s + "_mean", "w" + s + "_sq", "h" + s + "_mean", "tau" + s + "_mean",
                               "tau" + s + "_sq"});
            if (data.group_of(t) >= 0)
                n.insert(n.end(), {"v" + s + "_mean", "v" + s + "_sq", "beta" + s + "_mean"});
            else
                n.push_back("alpha" + s + "_mean");
        }
    }
    for (Index g = 0; g < data.group_count(); ++g) {
        n.push_back("u" + std::to_string(g) + "_mean");
        n.push_back("u" + std::to_string(g) + "_sq");
    }
    n.insert(n.end(), {"pi_mean", "pi_sq"});
    if (cfg.model == JointModel::rmtf) n.insert(n.end(), {"lambda_mean", "lambda_sq"});
    for (Index t = 0; t < data.view_count(); ++t) {
        n.push_back("x" + std::to_string(t) + "_mean");
        n.push_back("x" + std::to_string(t) + "_sq");
    }
    return n;
}

std::vector<double> statistics(const MtfState& s, const PreparedCollection& data, const std::vector<Tensor3>& x) {
    std::vector<double> out;
    moments(s.z, out);
    for (Index t = 0; t < s.view_count(); ++t) {
        moments(s.v[t], out);
        out.push_back(s.h.row(t).cast<double>().mean());
        out.push_back(s.alpha[t].mean());
        out.push_back(s.tau[t]);
        out.push_back(s.tau[t] * s.tau[t]);
    }
    for (const auto& u : s.u) moments(u, out);
    moments(s.pi, out);
    data_moments(data, x, out);
    return out;
}

std::vector<double> statistics(const RmtfState& s, const PreparedCollection& data, const std::vector<Tensor3>& x) {
    std::vector<double> out;
    moments(s.z, out);
    for (Index t = 0; t < s.view_count(); ++t) {
        moments(stack_loadings(s.w[t]), out);
        out.push_back(s.h[t].cast<double>().mean());
        out.push_back(s.tau[t].mean());
        out.push_back(s.tau[t].squaredNorm() / static_cast<double>(s.tau[t].size()));
        if (s.is_tensor_view(t)) {
            moments(s.v[t], out);
            out.push_back(s.beta[t].mean());
        } else {
            out.push_back(s.alpha[t].mean());
        }
    }
    for (const auto& u : s.u) moments(u, out);
    moments(s.pi, out);
    moments(s.lambda, out);
    data_moments(data, x, out);
    return out;
}

MtfState prior_state(const MtfSampler& sampler, RngStream& rng) {
    return sample_prior_state(sampler.data(), sampler.hyper(), rng);
}
RmtfState prior_state(const RmtfSampler& sampler, RngStream& rng) {
    return rmtf_sample_prior_state(sampler.data(), sampler.hyper(), rng);
}

std::vector<Tensor3> draw_data(const MtfState& s, const PreparedCollection& data, RngStream& rng) {
    std::vector<Tensor3> x;
    for (Index t = 0; t < data.view_count(); ++t) x.push_back(sample_view_data(s, t, data.view(t).slabs(), rng));
    return x;
}
std::vector<Tensor3> draw_data(const RmtfState& s, const PreparedCollection& data, RngStream& rng) {
    std::vector<Tensor3> x;
    for (Index t = 0; t < data.view_count(); ++t) x.push_back(rmtf_sample_view_data(s, t, rng));
    return x;
}

template <typename Sampler>
JointTestResult run_test(const JointTestConfig& cfg, Sampler& sampler, RngStream& rng) {
    const PreparedCollection& data = sampler.data();
    JointTestResult result;
    result.names = names_for(cfg, data);
    const std::size_t m = result.names.size();
    const Index n = cfg.iterations;

    // Forward draws: independent, plain sample variance.
    std::vector<double> f_sum(m, 0.0), f_sq(m, 0.0);
    for (Index i = 0; i < n; ++i) {
        const auto s = prior_state(sampler, rng);
        const auto x = draw_data(s, data, rng);
        const auto g = statistics(s, data, x);
        for (std::size_t j = 0; j < m; ++j) {
            f_sum[j] += g[j];
            f_sq[j] += g[j] * g[j];
        }
    }

    // Gibbs chain: autocorrelated, batch-means variance.
    const auto batches = static_cast<Index>(std::floor(std::sqrt(static_cast<double>(n))));
    const Index batch_size = n / batches;
    std::vector<std::vector<double>> batch_sum(m, std::vector<double>(static_cast<std::size_t>(batches), 0.0));
    {
        auto s = prior_state(sampler, rng);
        auto x = draw_data(s, data, rng);
        sampler.set_state(std::move(s));
        for (Index t = 0; t < data.view_count(); ++t) sampler.set_observations(t, x[t]);
        for (Index i = 0; i < batches * batch_size; ++i) {
            sampler.sweep(rng);
            x = draw_data(sampler.state(), data, rng);
            const auto g = statistics(sampler.state(), data, x);
            for (std::size_t j = 0; j < m; ++j) batch_sum[j][static_cast<std::size_t>(i / batch_size)] += g[j];
            for (Index t = 0; t < data.view_count(); ++t) sampler.set_observations(t, x[t]);
        }
    }

    const double nf = static_cast<double>(n);
    for (std::size_t j = 0; j < m; ++j) {
        const double fm = f_sum[j] / nf;
        const double fvar = std::max(f_sq[j] / nf - fm * fm, 0.0) * nf / (nf - 1.0) / nf;
        double gm = 0.0;
        for (double b : batch_sum[j]) gm += b / static_cast<double>(batch_size);
        gm /= static_cast<double>(batches);
        double ss = 0.0;
        for (double b : batch_sum[j]) {
            const double d = b / static_cast<double>(batch_size) - gm;
            ss += d * d;
        }
        const double gvar = ss / static_cast<double>(batches - 1) / static_cast<double>(batches);
        const double se = std::sqrt(fvar + gvar);
        result.forward_mean.push_back(fm);
        result.gibbs_mean.push_back(gm);
        result.z.push_back(se > 0.0 ? (gm - fm) / se : 0.0);
    }
    result.critical = normal_quantile(1.0 - cfg.alpha / (2.0 * static_cast<double>(m)));
    return result;
}

}  // namespace

HyperParams JointTestConfig::default_hyperparams() {
    HyperParams hp;
    hp.K = 2;
    hp.a_pi = 2.0;
    hp.b_pi = 2.0;
    hp.a_alpha = 4.0;
    hp.b_alpha = 4.0;
    hp.tau_prior = TauPrior::fixed;
    hp.a_tau = 5.0;
    hp.b_tau = 5.0;
    hp.a_lambda = 4.0;
    hp.b_lambda = 4.0;
    hp.a_beta = 4.0;
    hp.b_beta = 4.0;
    return hp;
}

double JointTestResult::max_abs_z() const {
    double m = 0.0;
    for (double v : z) m = std::max(m, std::abs(v));
    return m;
}

double JointTestResult::z_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return std::abs(z[i]);
    throw std::invalid_argument("no statistic named '" + name + "'");
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

JointTestResult joint_distribution_test(const JointTestConfig& cfg, RngStream& rng) {
    if (cfg.iterations < 100) throw std::invalid_argument("joint_distribution_test: need at least 100 iterations");
    if (cfg.hp.tau_prior != TauPrior::fixed)
        throw std::invalid_argument("joint_distribution_test: the noise prior must be fixed");
    const Collection c = test_collection(cfg);
    if (cfg.model == JointModel::mtf) {
        MtfSampler sampler(c, cfg.hp);
        return run_test(cfg, sampler, rng);
    }
    RmtfSampler sampler(c, cfg.hp);
    return run_test(cfg, sampler, rng);
}

}  // namespace bmtf
