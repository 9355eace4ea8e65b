// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
// Every stochastic check uses fixed seeds: repetition r simulates with seed r
// and fits with seed r. Fits use K = 15, one chain, 1000 burn-in sweeps and
// 20 snapshots thinned by 5.
//
//   bmtf_acceptance [--reps R] [--only 1,2,...]
//
// --reps lowers the repetition count for a quick local look; the registered
// ctest uses the default of 30.

#include "bmtf/fit.hpp"
#include "bmtf/joint_test.hpp"
#include "bmtf/predict.hpp"
#include "bmtf/preprocess.hpp"
#include "bmtf/rmtf.hpp"
#include "bmtf/simulate.hpp"
#include "bmtf/structure.hpp"
#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace bmtf;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void verdict(const std::string& id, bool pass, const std::string& detail) {
    std::printf("[%s] %-4s %s\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

double mean(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / x.size(); }

double sd(const std::vector<double>& x) {
    if (x.size() < 2) return 0.0;
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / (x.size() - 1));
}

class Stopwatch {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

HyperParams evaluation_schedule() {
    HyperParams hp;
    hp.K = 15;
    hp.burn_in = 1000;
    hp.n_samples = 20;
    hp.thin = 5;
    hp.n_chains = 1;
    return hp;
}

// ------------------------------------------------------------ spike exactness

struct SpikeAudit {
    long snapshots = 0;
    long inactive_columns = 0;
    long violations = 0;

    void check(const FitResult& fit) {
        for (const auto& chain : fit.mtf_chains)
            for (const auto& s : chain.snapshots) {
                ++snapshots;
                for (Index t = 0; t < s.view_count(); ++t)
                    for (Index k = 0; k < s.components(); ++k)
                        if (!s.h(t, k)) {
                            ++inactive_columns;
                            if (!(s.v[t].col(k).array() == 0.0).all()) ++violations;
                        }
            }
        for (const auto& chain : fit.rmtf_chains)
            for (const auto& s : chain.snapshots) {
                ++snapshots;
                for (Index t = 0; t < s.view_count(); ++t)
                    for (Index l = 0; l < s.h[t].rows(); ++l)
                        for (Index k = 0; k < s.components(); ++k)
                            if (!s.h[t](l, k)) {
                                ++inactive_columns;
                                if (!(s.w[t][l].col(k).array() == 0.0).all()) ++violations;
                            }
            }
    }
};

SpikeAudit g_spikes;

FitResult audited_fit(const Collection& c, ModelKind m, const HyperParams& hp, std::uint64_t seed,
                      const FitOptions& options = {}) {
    FitResult fit = fit_model(c, m, hp, seed, options);
    g_spikes.check(fit);
    return fit;
}

ComponentCounts structure_of(const FitResult& fit) {
    std::vector<ComponentCounts> per_chain;
    for (const auto& chain : fit.source_activity()) per_chain.push_back(component_structure(mean_activity(chain)));
    return average_counts(per_chain);
}

double tensor_match(const FitResult& fit, const SimTruth& truth) {
    std::vector<double> per_chain;
    for (Index c = 0; c < fit.chain_count(); ++c) {
        const auto m = match_components(truth.tensor_specific_loadings(), fit.original_loadings(c, 1));
        per_chain.push_back(mean(m));
    }
    return mean(per_chain);
}

// ----------------------------------------------------------------- criterion 1

void criterion_1() {
    Stopwatch clock;
    struct Case {
        std::string label;
        JointModel model;
        bool missing;
        Fault fault;
    };
    const std::vector<Case> clean = {
        {"mtf", JointModel::mtf, false, Fault::none},
        {"mtf+missing", JointModel::mtf, true, Fault::none},
        {"rmtf", JointModel::rmtf, false, Fault::none},
        {"rmtf+missing", JointModel::rmtf, true, Fault::none},
    };
    const std::vector<Case> faulty = {
        {"tau_rate_halved/mtf", JointModel::mtf, false, Fault::tau_rate_halved},
        {"spike_without_occam/mtf", JointModel::mtf, false, Fault::spike_without_occam},
        {"z_prior_doubled/mtf", JointModel::mtf, false, Fault::z_prior_doubled},
        {"lambda_rate_doubled/rmtf", JointModel::rmtf, false, Fault::lambda_rate_doubled},
    };
    auto run = [](const Case& c) {
        JointTestConfig cfg;
        cfg.model = c.model;
        cfg.with_missing = c.missing;
        cfg.iterations = 200000;
        cfg.hp.fault = c.fault;
        RngStream rng(42, 0);
        return joint_distribution_test(cfg, rng);
    };
    for (const auto& c : clean) {
        const auto r = run(c);
        verdict("1", r.passed(),
                fmt("joint test %-24s max|z| = %.2f < critical %.2f", c.label.c_str(), r.max_abs_z(), r.critical));
    }
    for (const auto& c : faulty) {
        const auto r = run(c);
        verdict("1", !r.passed(),
                fmt("joint test %-24s detected: max|z| = %.2f >= critical %.2f", c.label.c_str(), r.max_abs_z(),
                    r.critical));
    }
    verdict("1", clock.seconds() < 15 * 60, fmt("joint tests took %.1f s (budget 900 s)", clock.seconds()));
}

// ------------------------------------------------------------ criteria 2 and 3

void criteria_2_3(int reps) {
    Stopwatch clock;
    std::vector<double> shared, matrix, tensor, gfa_shared, mtf_match, gfa_match;
    for (int r = 1; r <= reps; ++r) {
        SimSpec spec;
        spec.scenario = Scenario::cp;
        spec.seed = static_cast<std::uint64_t>(r);
        const SimulatedData sim = simulate(spec);
        const FitResult mtf = audited_fit(sim.train, ModelKind::mtf, evaluation_schedule(), spec.seed);
        const FitResult gfa = audited_fit(sim.train, ModelKind::gfa, evaluation_schedule(), spec.seed);
        const ComponentCounts m = structure_of(mtf), g = structure_of(gfa);
        shared.push_back(m.shared);
        matrix.push_back(m.specific[0]);
        tensor.push_back(m.specific[1]);
        gfa_shared.push_back(g.shared);
        mtf_match.push_back(tensor_match(mtf, sim.truth));
        gfa_match.push_back(tensor_match(gfa, sim.truth));
        std::printf("       cp rep %2d: mtf shared %.0f matrix %.0f tensor %.0f match %.5f | gfa shared %.0f match %.5f\n",
                    r, m.shared, m.specific[0], m.specific[1], mtf_match.back(), g.shared, gfa_match.back());
        std::fflush(stdout);
    }
    const double ones = static_cast<double>(std::count(shared.begin(), shared.end(), 1.0)) / reps;
    verdict("2", ones >= 0.9, fmt("CP: MTF shared count = 1 in %.1f%% of %d reps (need >= 90%%)", 100 * ones, reps));
    verdict("2", mean(tensor) >= 7.5 && mean(tensor) <= 9.0,
            fmt("CP: MTF tensor-specific mean %.2f (sd %.2f) in [7.5, 9.0]", mean(tensor), sd(tensor)));
    verdict("2", mean(matrix) >= 2.0 && mean(matrix) <= 4.5,
            fmt("CP: MTF matrix-specific mean %.2f (sd %.2f) in [2.0, 4.5]", mean(matrix), sd(matrix)));
    verdict("2", mean(gfa_shared) >= 1.5,
            fmt("CP: GFA shared mean %.2f (sd %.2f) >= 1.5", mean(gfa_shared), sd(gfa_shared)));
    verdict("2", clock.seconds() < 2 * 3600, fmt("CP runs took %.0f s (budget 7200 s)", clock.seconds()));
    verdict("3", mean(mtf_match) >= 0.999, fmt("CP: MTF tensor-specific match %.5f >= 0.999", mean(mtf_match)));
    verdict("3", mean(gfa_match) >= 0.99, fmt("CP: GFA tensor-specific match %.5f >= 0.99", mean(gfa_match)));
}

// ----------------------------------------------------------------- criterion 4

void criterion_4(int reps) {
    std::vector<double> mtf_shared, rmtf_matrix;
    for (int r = 1; r <= reps; ++r) {
        SimSpec spec;
        spec.scenario = Scenario::relaxed_cp;
        spec.seed = static_cast<std::uint64_t>(r);
        const SimulatedData sim = simulate(spec);
        const ComponentCounts m = structure_of(audited_fit(sim.train, ModelKind::mtf, evaluation_schedule(), spec.seed));
        const ComponentCounts x =
            structure_of(audited_fit(sim.train, ModelKind::rmtf, evaluation_schedule(), spec.seed));
        mtf_shared.push_back(m.shared);
        rmtf_matrix.push_back(x.specific[0]);
        std::printf("       relaxed rep %2d: mtf shared %.0f matrix %.0f tensor %.0f | rmtf shared %.0f matrix %.0f tensor %.0f\n",
                    r, m.shared, m.specific[0], m.specific[1], x.shared, x.specific[0], x.specific[1]);
        std::fflush(stdout);
    }
    verdict("4", mean(mtf_shared) >= 1.6 && mean(mtf_shared) <= 2.4,
            fmt("relaxed CP: MTF shared mean %.2f (sd %.2f) in [1.6, 2.4]", mean(mtf_shared), sd(mtf_shared)));
    verdict("4", mean(rmtf_matrix) >= 1.3 && mean(rmtf_matrix) <= 2.6,
            fmt("relaxed CP: rMTF matrix-specific mean %.2f (sd %.2f) in [1.3, 2.6]", mean(rmtf_matrix),
                sd(rmtf_matrix)));
}

// ----------------------------------------------------------------- criterion 5

struct ContinuumRow {
    double mtf = 0, gfa = 0, rmtf = 0, null = 0;
};

ContinuumRow continuum_at(double rho, int reps) {
    std::vector<double> e[4];
    for (int r = 1; r <= reps; ++r) {
        SimSpec spec = SimSpec::continuum_defaults();
        spec.rho = rho;
        spec.seed = static_cast<std::uint64_t>(r);
        const SimulatedData sim = simulate(spec);
        const ModelKind models[3] = {ModelKind::mtf, ModelKind::gfa, ModelKind::rmtf};
        Prediction last;
        for (int m = 0; m < 3; ++m) {
            const FitResult fit = audited_fit(sim.train, models[m], evaluation_schedule(), spec.seed);
            last = predict_fit(fit, *sim.test, Stage2Options{}, spec.seed).original;
            e[m].push_back(prediction_rmse(last, *sim.test_truth));
        }
        // Null predictor: zero, the generating mean of every entry.
        for (auto& t : last.mean) t.unfolded().setZero();
        e[3].push_back(prediction_rmse(last, *sim.test_truth));
    }
    const ContinuumRow row{mean(e[0]), mean(e[1]), mean(e[2]), mean(e[3])};
    std::printf("       continuum rho %.2f (%d reps): mtf %.3f gfa %.3f rmtf %.3f null %.3f\n", rho, reps, row.mtf,
                row.gfa, row.rmtf, row.null);
    std::fflush(stdout);
    return row;
}

void criterion_5(int reps) {
    std::map<double, ContinuumRow> rows;
    for (double rho : {1.0, 0.0, 0.55, 0.6, 0.65, 0.7}) rows[rho] = continuum_at(rho, reps);
    const ContinuumRow& one = rows.at(1.0);
    const ContinuumRow& zero = rows.at(0.0);
    verdict("5", one.mtf < one.gfa, fmt("rho=1: MTF RMSE %.3f < GFA RMSE %.3f", one.mtf, one.gfa));
    verdict("5", one.mtf <= 1.4, fmt("rho=1: MTF RMSE %.3f <= 1.4", one.mtf));
    verdict("5", zero.gfa < zero.mtf, fmt("rho=0: GFA RMSE %.3f < MTF RMSE %.3f", zero.gfa, zero.mtf));
    for (const auto& [rho, row] : rows)
        verdict("5", std::abs(row.null - 3.0) <= 0.15, fmt("rho=%.2f: null RMSE %.3f in 3.0 +- 0.15", rho, row.null));
    for (double rho : {0.55, 0.6, 0.65, 0.7}) {
        const ContinuumRow& row = rows.at(rho);
        const double bound = std::min(row.mtf, row.gfa) + 0.05;
        verdict("5", row.rmtf <= bound,
                fmt("rho=%.2f: rMTF RMSE %.3f <= min(MTF %.3f, GFA %.3f) + 0.05", rho, row.rmtf, row.mtf, row.gfa));
    }
}

// ----------------------------------------------------------------- criterion 6

void criterion_6_lambda_limit() {
    SimSpec spec = SimSpec::continuum_defaults();
    spec.rho = 1.0;
    spec.seed = 7;
    spec.D1 = 10;
    spec.D2 = 8;
    spec.L = 5;
    spec.n_test = 20;
    const SimulatedData sim = simulate(spec);
    HyperParams hp = evaluation_schedule();
    hp.burn_in = 200;
    hp.n_samples = 1;
    const FitResult fit = audited_fit(sim.train, ModelKind::mtf, hp, 7);
    MtfState m = fit.mtf_chains[0].snapshots.back();

    // The relaxed model at lambda -> infinity: one Gibbs draw of every tensor
    // slab loading from the embedded trilinear state. Matrix views are not
    // tied by lambda, so they keep the shared values.
    RmtfSampler relaxed(sim.train, hp);
    relaxed.set_state(embed_trilinear(m, hp, 1e20));
    RngStream draw(8);
    for (Index t = 0; t < relaxed.state().view_count(); ++t)
        if (relaxed.state().is_tensor_view(t)) relaxed.update_wh(t, draw);

    const SlabLoadings tri = slab_parameters(m), rel = slab_parameters(relaxed.state());
    // Preprocess the test inputs the way the fit did, then predict on both parameter sets with one stream.
    const Collection test = apply_transform(fit.transform, *sim.test);
    RngStream ra(9), rb(9);
    const Prediction a = two_stage_predict(test, {tri}, Stage2Options{}, ra);
    const Prediction b = two_stage_predict(test, {rel}, Stage2Options{}, rb);
    double worst = 0.0;
    for (std::size_t t = 0; t < a.mean.size(); ++t)
        worst = std::max(worst, (a.mean[t].unfolded() - b.mean[t].unfolded()).lpNorm<Eigen::Infinity>());
    verdict("6", worst <= 1e-6, fmt("lambda->inf rMTF vs MTF predictions: max |diff| = %.2e <= 1e-6", worst));
}

void criterion_6_gfa_path() {
    RngStream r(10);
    Collection c;
    for (int t = 0; t < 3; ++t) {
        Tensor3 m(40, 6, 1);
        for (double& x : m.values()) x = r.normal();
        c.views.push_back({"m" + std::to_string(t), MaskedTensor3(m)});
    }
    HyperParams hp = evaluation_schedule();
    hp.K = 5;
    hp.burn_in = 100;
    hp.n_chains = 2;
    const FitResult gfa = audited_fit(c, ModelKind::gfa, hp, 11);
    const FitResult mtf = audited_fit(c, ModelKind::mtf, hp, 11);
    bool same = gfa.mtf_chains.size() == mtf.mtf_chains.size();
    for (std::size_t ch = 0; same && ch < gfa.mtf_chains.size(); ++ch) {
        const auto& a = gfa.mtf_chains[ch];
        const auto& b = mtf.mtf_chains[ch];
        same = a.log_joint == b.log_joint && a.snapshots.size() == b.snapshots.size();
        for (std::size_t i = 0; same && i < a.snapshots.size(); ++i)
            same = a.snapshots[i].z == b.snapshots[i].z && a.snapshots[i].v == b.snapshots[i].v &&
                   a.snapshots[i].h == b.snapshots[i].h && a.snapshots[i].tau == b.snapshots[i].tau;
    }
    verdict("6", same, "all-matrices collection: MTF and GFA chains bit-identical (traces and snapshots)");
}

// ----------------------------------------------------------------- criterion 7

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "bmtf");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    if (code != 0) std::cerr << err.str();
    return code;
}

void criterion_7() {
    const fs::path root = fs::temp_directory_path() / "bmtf_acceptance_determinism";
    fs::remove_all(root);
    bool ok = cli({"simulate", "--scenario", "relaxed_cp", "--n", "60", "--d1", "12", "--d2", "10", "--l", "6",
                   "--seed", "3", "--out", (root / "sim").string()}) == 0;
    for (const std::string model : {"mtf", "rmtf", "gfa"}) {
        std::map<std::string, std::string> files[2];
        for (int run = 0; run < 2; ++run) {
            const fs::path out = root / (model + std::to_string(run));
            ok = ok && cli({"fit", (root / "sim").string(), "--out", out.string(), "--model", model, "--k", "6",
                            "--chains", "3", "--burnin", "50", "--samples", "10", "--thin", "2", "--seed", "5",
                            "--jobs", run == 0 ? "1" : "3"}) == 0;
            if (fs::exists(out))
                for (const auto& e : fs::recursive_directory_iterator(out))
                    if (e.is_regular_file()) files[run][fs::relative(e.path(), out).string()] = slurp(e.path());
        }
        verdict("7", ok && !files[0].empty() && files[0] == files[1],
                fmt("fit --model %s with a fixed seed: %zu archive files byte-identical across two runs",
                    model.c_str(), files[0].size()));
    }
    fs::remove_all(root);
}

}  // namespace

int main(int argc, char** argv) {
    int reps = 30;
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--reps" && i + 1 < argc) {
            reps = std::atoi(argv[++i]);
        } else if (a == "--only" && i + 1 < argc) {
            std::stringstream s(argv[++i]);
            for (std::string tok; std::getline(s, tok, ',');) only.insert(std::atoi(tok.c_str()));
        } else {
            std::fprintf(stderr, "usage: %s [--reps R] [--only 1,2,...]\n", argv[0]);
            return 2;
        }
    }
    if (reps < 1) {
        std::fprintf(stderr, "--reps must be positive\n");
        return 2;
    }
    auto want = [&](int c) { return only.empty() || only.count(c) > 0; };
    std::printf("acceptance: %d repetitions per stochastic criterion\n", reps);
    Stopwatch clock;

    if (want(1)) criterion_1();
    if (want(2) || want(3)) criteria_2_3(reps);
    if (want(4)) criterion_4(reps);
    if (want(5)) criterion_5(reps);
    if (want(6)) {
        criterion_6_lambda_limit();
        criterion_6_gfa_path();
        verdict("6", g_spikes.violations == 0 && g_spikes.snapshots > 0,
                fmt("spike exactness: %ld inactive columns across %ld stored snapshots, %ld nonzero",
                    g_spikes.inactive_columns, g_spikes.snapshots, g_spikes.violations));
    }
    if (want(7)) criterion_7();

    std::printf("acceptance: %d failing check(s), %.0f s\n", g_failures, clock.seconds());
    return g_failures == 0 ? 0 : 1;
}
