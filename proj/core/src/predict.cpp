#include "bmtf/predict.hpp"

#include "bmtf/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace bmtf {

Index Prediction::target_count() const {
    Index n = 0;
    for (const auto& t : targets)
        for (auto m : t) n += m;
    return n;
}

void check_compatible(const Collection& test, const SlabLoadings& frozen) {
    if (static_cast<Index>(frozen.loadings.size()) != test.view_count())
        throw IncompatibleInput("test collection has " + std::to_string(test.view_count()) +
                                " views, model has " + std::to_string(frozen.loadings.size()));
    for (Index t = 0; t < test.view_count(); ++t) {
        const auto& v = test.views[t].data;
        const auto& w = frozen.loadings[t];
        if (static_cast<Index>(w.size()) != v.slabs() || w.front().rows() != v.features())
            throw IncompatibleInput("view " + std::to_string(t) + " (" + test.views[t].name +
                                    ") has shape D=" + std::to_string(v.features()) +
                                    " L=" + std::to_string(v.slabs()) + ", model expects D=" +
                                    std::to_string(w.front().rows()) +
                                    " L=" + std::to_string(w.size()));
    }
}

Prediction two_stage_predict(const Collection& test, const std::vector<SlabLoadings>& frozen,
                             const Stage2Options& options, RngStream& rng) {
    if (frozen.empty()) throw std::invalid_argument("two_stage_predict: no frozen parameters");
    if (options.samples < 1 || options.burn_in < 0)
        throw std::invalid_argument("two_stage_predict: invalid stage-2 schedule");
    for (const auto& f : frozen) check_compatible(test, f);

    Prediction out;
    const Index views = test.view_count();
    for (const auto& view : test.views) {
        const auto& src = view.data;
        std::vector<std::uint8_t> target(src.mask().size());
        for (std::size_t i = 0; i < target.size(); ++i) target[i] = src.mask()[i] ? 0 : 1;
        out.targets.push_back(std::move(target));
        out.mean.emplace_back(src.samples(), src.features(), src.slabs());
        out.stddev.emplace_back(src.samples(), src.features(), src.slabs());
    }
    if (out.target_count() == 0) throw std::invalid_argument("two_stage_predict: no masked target entries");

    const PreparedCollection data(test);
    const Index k = frozen.front().loadings.front().front().cols();
    Matrix z = Matrix::Zero(data.samples(), k);
    std::vector<Tensor3> sum_sq = out.mean;
    std::vector<Vector> noise_var(static_cast<std::size_t>(views));
    for (Index t = 0; t < views; ++t) noise_var[t] = Vector::Zero(test.views[t].data.slabs());

    Index draws = 0;
    for (const auto& params : frozen) {
        if (params.loadings.front().front().cols() != k)
            throw IncompatibleInput("frozen parameter sets disagree on K");
        for (Index i = 0; i < options.burn_in; ++i) sample_latent_rows(data, params, z, rng);
        for (Index t = 0; t < views; ++t) noise_var[t] += params.tau[t].cwiseInverse();
        for (Index i = 0; i < options.samples; ++i) {
            sample_latent_rows(data, params, z, rng);
            for (Index t = 0; t < views; ++t) {
                const Matrix m = z * stack_loadings(params.loadings[t]).transpose();
                out.mean[t].unfolded() += m;
                sum_sq[t].unfolded() += m.cwiseProduct(m);
            }
            ++draws;
        }
    }
    const double n = static_cast<double>(draws);
    const double n_sets = static_cast<double>(frozen.size());
    for (Index t = 0; t < views; ++t) {
        auto mean = out.mean[t].unfolded();
        mean /= n;
        auto sd = out.stddev[t].unfolded();
        sd = (sum_sq[t].unfolded() / n - mean.cwiseProduct(mean)).cwiseMax(0.0);
        const Index d = out.mean[t].features();
        for (Index l = 0; l < out.mean[t].slabs(); ++l)
            sd.middleCols(l * d, d).array() += noise_var[t][l] / n_sets;
        sd = sd.cwiseSqrt();
    }
    return out;
}

double mse(const Tensor3& pred, const Tensor3& truth, std::span<const std::uint8_t> mask) {
    if (!pred.same_shape(truth) || static_cast<Index>(mask.size()) != pred.size())
        throw std::invalid_argument("mse: shape mismatch");
    double total = 0.0;
    Index count = 0;
    const auto p = pred.values();
    const auto q = truth.values();
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) {
            const double e = p[i] - q[i];
            total += e * e;
            ++count;
        }
    if (count == 0) throw std::invalid_argument("mse: empty mask");
    return total / static_cast<double>(count);
}

double rmse(const Tensor3& pred, const Tensor3& truth, std::span<const std::uint8_t> mask) {
    return std::sqrt(mse(pred, truth, mask));
}

double prediction_mse(const Prediction& p, const Collection& truth) {
    if (truth.view_count() != static_cast<Index>(p.mean.size()))
        throw std::invalid_argument("prediction_mse: view count mismatch");
    double total = 0.0;
    Index count = 0;
    for (std::size_t t = 0; t < p.mean.size(); ++t) {
        const Tensor3& ref = truth.views[t].data.values();
        if (!ref.same_shape(p.mean[t])) throw std::invalid_argument("prediction_mse: shape mismatch");
        const auto pv = p.mean[t].values();
        const auto rv = ref.values();
        for (std::size_t i = 0; i < pv.size(); ++i)
            if (p.targets[t][i]) {
                const double e = pv[i] - rv[i];
                total += e * e;
                ++count;
            }
    }
    if (count == 0) throw std::invalid_argument("prediction_mse: no targets");
    return total / static_cast<double>(count);
}

void write_prediction_report(const std::filesystem::path& path, const Prediction& p,
                             const Collection* truth,
                             const std::map<std::string, std::string>& summary) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "view,sample,feature,slab,predicted,posterior_std";
    if (truth) out << ",truth";
    out << '\n';
    for (std::size_t t = 0; t < p.mean.size(); ++t) {
        const Tensor3& m = p.mean[t];
        for (Index l = 0; l < m.slabs(); ++l)
            for (Index d = 0; d < m.features(); ++d)
                for (Index n = 0; n < m.samples(); ++n) {
                    const Index i = n + m.samples() * (d + m.features() * l);
                    if (!p.targets[t][static_cast<std::size_t>(i)]) continue;
                    out << t << ',' << n << ',' << d << ',' << l << ',' << format_double(m(n, d, l))
                        << ',' << format_double(p.stddev[t](n, d, l));
                    if (truth) out << ',' << format_double(truth->views[t].data.values()(n, d, l));
                    out << '\n';
                }
    }
    for (const auto& [key, value] : summary) out << "#summary," << key << ',' << value << '\n';
    if (truth) {
        const double e = prediction_mse(p, *truth);
        out << "#summary,RMSE," << format_double(std::sqrt(e)) << '\n';
        out << "#summary,MSE," << format_double(e) << '\n';
    }
    out << "#summary,n_targets," << p.target_count() << '\n';
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::map<std::string, std::string> read_prediction_summary(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::map<std::string, std::string> out;
    std::string line;
    const std::string prefix = "#summary,";
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.rfind(prefix, 0) != 0) continue;
        const std::string rest = line.substr(prefix.size());
        const auto comma = rest.find(',');
        if (comma == std::string::npos) continue;
        out[rest.substr(0, comma)] = rest.substr(comma + 1);
    }
    return out;
}

}  // namespace bmtf
