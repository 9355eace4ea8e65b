#include "bmtf/fit.hpp"
#include "bmtf/predict.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

namespace bmtf {
namespace {

namespace fs = std::filesystem;

TEST(Rmse, ConstantOffsetGivesItsMagnitude) {
    Tensor3 truth(3, 2, 2), pred(3, 2, 2);
    RngStream r(1);
    for (Index i = 0; i < truth.size(); ++i) {
        truth.values()[i] = r.normal();
        pred.values()[i] = truth.values()[i] - 0.75;
    }
    std::vector<std::uint8_t> mask(12, 0);
    mask[1] = mask[5] = mask[11] = 1;
    EXPECT_NEAR(rmse(pred, truth, mask), 0.75, 1e-12);
    EXPECT_NEAR(mse(pred, truth, mask), 0.5625, 1e-12);
    EXPECT_THROW(mse(pred, truth, std::vector<std::uint8_t>(12, 0)), std::invalid_argument);
}

/// Rank-1 matrix + tensor pair without noise; slab 0 of the test tensor is masked.
struct RankOne {
    Collection train, test, test_truth;
};

RankOne rank_one(Index n_train, Index n_test) {
    RngStream r(2);
    const Vector v1 = r.normal_vector(4), v2 = r.normal_vector(5), u = r.normal_vector(6);
    auto make = [&](Index n) {
        const Vector z = r.normal_vector(n);
        Tensor3 m(n, 4, 1), t(n, 5, 6);
        for (Index i = 0; i < n; ++i) {
            for (Index d = 0; d < 4; ++d) m(i, d, 0) = 2.0 + z[i] * v1[d];
            for (Index l = 0; l < 6; ++l)
                for (Index d = 0; d < 5; ++d) t(i, d, l) = -1.0 + z[i] * v2[d] * u[l];
        }
        Collection c;
        c.views.push_back({"m", MaskedTensor3(m)});
        c.views.push_back({"t", MaskedTensor3(t)});
        return c;
    };
    RankOne out;
    out.train = make(n_train);
    out.test_truth = make(n_test);
    out.test = out.test_truth;
    for (Index i = 0; i < n_test; ++i)
        for (Index d = 0; d < 5; ++d) out.test.views[1].data.set_observed(i, d, 0, false);
    return out;
}

HyperParams schedule() {
    HyperParams hp;
    hp.K = 3;
    hp.burn_in = 150;
    hp.n_samples = 10;
    hp.thin = 2;
    hp.n_chains = 1;
    return hp;
}

TEST(PredictFit, NoiseFreeRankOneRecoversMaskedSlab) {
    const RankOne d = rank_one(40, 25);
    for (ModelKind m : {ModelKind::mtf, ModelKind::rmtf}) {
        const FitResult fit = fit_model(d.train, m, schedule(), 3);
        const FitPrediction p = predict_fit(fit, d.test, Stage2Options{}, 4);
        EXPECT_EQ(p.original.target_count(), 25 * 5);
        EXPECT_LT(prediction_rmse(p.original, d.test_truth), 0.05) << to_string(m);
    }
}

TEST(PredictFit, FullyMaskedTestRowsFallBackToTheTrainingMean) {
    const RankOne d = rank_one(40, 10);
    const FitResult fit = fit_model(d.train, ModelKind::mtf, schedule(), 5);
    Collection test = d.test_truth;
    for (auto& v : test.views)
        for (Index l = 0; l < v.data.slabs(); ++l)
            for (Index f = 0; f < v.data.features(); ++f)
                for (Index i = 0; i < v.data.samples(); ++i) v.data.set_observed(i, f, l, false);
    const FitPrediction p = predict_fit(fit, test, Stage2Options{}, 6);
    // With nothing observed the latent rows follow their prior, whose mean is zero.
    for (const auto& t : p.preprocessed.mean)
        for (double x : t.values()) EXPECT_LT(std::abs(x), 0.5);
    for (Index d = 0; d < 5; ++d)
        EXPECT_NEAR(p.original.mean[1](0, d, 2), fit.transform.center[1](d, 2), 0.5 * fit.transform.scale[1](d, 2));
    for (double s : p.original.stddev[1].values()) EXPECT_GT(s, 0.0);
}

TEST(PredictFit, ShapeMismatchIsIncompatible) {
    const RankOne d = rank_one(20, 5);
    const FitResult fit = fit_model(d.train, ModelKind::mtf, schedule(), 7);
    Collection wrong = d.test;
    wrong.views.pop_back();
    EXPECT_THROW(predict_fit(fit, wrong, Stage2Options{}, 8), IncompatibleInput);
    Collection narrow;
    narrow.views.push_back(d.test.views[0]);
    narrow.views.push_back({"t", MaskedTensor3(Tensor3(5, 4, 6, 1.0))});
    EXPECT_THROW(predict_fit(fit, narrow, Stage2Options{}, 8), IncompatibleInput);
}

TEST(PredictionReport, TruthColumnAndSummary) {
    const RankOne d = rank_one(20, 4);
    const FitResult fit = fit_model(d.train, ModelKind::mtf, schedule(), 9);
    const FitPrediction p = predict_fit(fit, d.test, Stage2Options{}, 10);
    const fs::path dir = fs::temp_directory_path() / "bmtf_predict_report";
    fs::create_directories(dir);
    write_prediction_report(dir / "with.csv", p.original, &d.test_truth, {{"model", "mtf"}});
    write_prediction_report(dir / "without.csv", p.original, nullptr);
    const auto s = read_prediction_summary(dir / "with.csv");
    EXPECT_EQ(s.at("model"), "mtf");
    EXPECT_EQ(s.at("n_targets"), "20");
    EXPECT_NEAR(std::stod(s.at("RMSE")), prediction_rmse(p.original, d.test_truth), 1e-12);
    const auto t = read_prediction_summary(dir / "without.csv");
    EXPECT_EQ(t.count("RMSE"), 0u);
    std::ifstream f(dir / "without.csv");
    std::string header;
    std::getline(f, header);
    EXPECT_EQ(header, "view,sample,feature,slab,predicted,posterior_std");
    fs::remove_all(dir);
}

TEST(SampleLatentRows, MatchesGaussianConditional) {
    // One matrix view, one latent dimension: z | x ~ N(tau w'x / (1 + tau w'w), 1 / (1 + tau w'w)).
    Tensor3 x(1, 3, 1);
    x(0, 0, 0) = 1.0;
    x(0, 1, 0) = -0.5;
    x(0, 2, 0) = 2.0;
    Collection c;
    c.views.push_back({"m", MaskedTensor3(x)});
    const PreparedCollection data(c);
    SlabLoadings params;
    Matrix w(3, 1);
    w << 0.5, 1.0, -0.3;
    params.loadings = {{w}};
    params.tau = {Vector::Constant(1, 2.0)};
    const double prec = 1.0 + 2.0 * w.squaredNorm();
    const double mean = 2.0 * (w.col(0).dot(Vector(x.unfolded().row(0).transpose()))) / prec;
    RngStream r(11);
    Matrix z(1, 1);
    const int n = 100000;
    double s = 0.0, ss = 0.0;
    for (int i = 0; i < n; ++i) {
        sample_latent_rows(data, params, z, r);
        s += z(0, 0);
        ss += z(0, 0) * z(0, 0);
    }
    const double m = s / n;
    EXPECT_NEAR(m, mean, 5.0 / std::sqrt(prec * n));
    EXPECT_NEAR(ss / n - m * m, 1.0 / prec, 0.01);
}

}  // namespace
}  // namespace bmtf
