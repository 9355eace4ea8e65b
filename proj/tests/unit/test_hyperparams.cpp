#include "bmtf/hyperparams.hpp"
#include "bmtf/mtf.hpp"

#include <gtest/gtest.h>

namespace bmtf {
namespace {

TEST(HyperParams, DefaultsValidate) { EXPECT_NO_THROW(HyperParams{}.validate()); }

TEST(HyperParams, RejectsBadValues) {
    auto bad = [](auto mutate) {
        HyperParams hp;
        mutate(hp);
        EXPECT_THROW(hp.validate(), std::invalid_argument);
    };
    bad([](HyperParams& h) { h.K = 0; });
    bad([](HyperParams& h) { h.a_alpha = 0.0; });
    bad([](HyperParams& h) { h.b_lambda = -1.0; });
    bad([](HyperParams& h) { h.thin = 0; });
    bad([](HyperParams& h) { h.indicator_warmup = -1; });
    bad([](HyperParams& h) {
        h.tau_prior = TauPrior::fixed;
        h.b_tau = 0.0;
    });
}

TEST(HyperParams, StrongRegularization) {
    const auto hp = HyperParams::strong_regularization();
    EXPECT_DOUBLE_EQ(hp.a_pi, 1e-3);
    EXPECT_DOUBLE_EQ(hp.b_pi, 1e3);
    EXPECT_DOUBLE_EQ(hp.a_tau, 10.0);
}

TEST(HyperParams, StringRoundTrips) {
    for (auto p : {TauPrior::snr, TauPrior::fixed, TauPrior::snr_scaled})
        EXPECT_EQ(tau_prior_from_string(to_string(p)), p);
    for (auto m : {LambdaMode::global, LambdaMode::per_component, LambdaMode::per_slab})
        EXPECT_EQ(lambda_mode_from_string(to_string(m)), m);
    for (auto f : {Fault::none, Fault::tau_rate_halved, Fault::spike_without_occam, Fault::z_prior_doubled,
                   Fault::lambda_rate_doubled})
        EXPECT_EQ(fault_from_string(to_string(f)), f);
    EXPECT_THROW(tau_prior_from_string("loud"), std::invalid_argument);
}

Collection two_views() {
    Tensor3 m(5, 2, 1), t(5, 2, 4);
    for (Index i = 0; i < m.size(); ++i) m.values()[i] = static_cast<double>(i % 7);
    for (Index i = 0; i < t.size(); ++i) t.values()[i] = 0.5 * static_cast<double>((3 * i) % 11);
    Collection c;
    c.views.push_back({"m", MaskedTensor3(m)});
    c.views.push_back({"t", MaskedTensor3(t)});
    c.views[1].data.set_observed(0, 0, 0, false);
    return c;
}

/// Unbiased variance of the observed entries, computed directly.
double observed_variance(const MaskedTensor3& v) {
    double s = 0.0, n = 0.0;
    for (Index l = 0; l < v.slabs(); ++l)
        for (Index d = 0; d < v.features(); ++d)
            for (Index i = 0; i < v.samples(); ++i)
                if (v.observed(i, d, l)) {
                    s += v.values()(i, d, l);
                    n += 1.0;
                }
    const double mean = s / n;
    double ss = 0.0;
    for (Index l = 0; l < v.slabs(); ++l)
        for (Index d = 0; d < v.features(); ++d)
            for (Index i = 0; i < v.samples(); ++i)
                if (v.observed(i, d, l)) ss += (v.values()(i, d, l) - mean) * (v.values()(i, d, l) - mean);
    return ss / (n - 1.0);
}

TEST(ResolveTauPriors, AllThreeModes) {
    const Collection c = two_views();
    const PreparedCollection data(c);
    const double var1 = observed_variance(c.views[1].data);

    HyperParams hp;
    hp.snr = 3.0;
    hp.a_tau = 2.0;
    hp.b_tau = 0.7;

    hp.tau_prior = TauPrior::fixed;
    auto p = resolve_tau_priors(data, hp);
    EXPECT_DOUBLE_EQ(p[1].first, 2.0);
    EXPECT_DOUBLE_EQ(p[1].second, 0.7);

    hp.tau_prior = TauPrior::snr;
    p = resolve_tau_priors(data, hp);
    EXPECT_DOUBLE_EQ(p[1].first, 2.0);
    EXPECT_NEAR(p[1].second, 2.0 * var1 / 4.0, 1e-12);
    // Prior mean noise variance b/a is var / (1 + snr).
    EXPECT_NEAR(p[1].second / p[1].first, var1 / 4.0, 1e-12);

    hp.tau_prior = TauPrior::snr_scaled;
    p = resolve_tau_priors(data, hp);
    const double n1 = 5 * 2 * 4 - 1;
    EXPECT_NEAR(p[1].first, 2.0 * n1 / 2.0, 1e-12);
    EXPECT_NEAR(p[1].second / p[1].first, var1 / 4.0, 1e-12);
    p = resolve_tau_priors(data, hp, true);
    EXPECT_NEAR(p[1].first, 2.0 * n1 / 4.0 / 2.0, 1e-12);
    EXPECT_NEAR(p[0].first, 2.0 * 10.0 / 2.0, 1e-12);
}

}  // namespace
}  // namespace bmtf
