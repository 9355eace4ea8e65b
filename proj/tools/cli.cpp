#include "cli.hpp"

#include "bmtf/archive.hpp"
#include "bmtf/diagnostics.hpp"
#include "bmtf/fit.hpp"
#include "bmtf/io.hpp"
#include "bmtf/predict.hpp"
#include "bmtf/simulate.hpp"
#include "bmtf/structure.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bmtf::cli {

namespace fs = std::filesystem;

namespace {

/// A failure that maps to the usage/validation exit code.
class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

bool is_collection(const fs::path& dir) { return fs::exists(dir / "manifest.json"); }
bool is_archive(const fs::path& dir) { return fs::exists(dir / "run.json"); }

/// Repetition subdirectories (rep_*) of a batch directory, sorted by name.
std::vector<fs::path> repetitions(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory() && e.path().filename().string().rfind("rep_", 0) == 0) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::string rep_name(Index r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "rep_%03ld", static_cast<long>(r));
    return buf;
}

/// A collection directory, or a simulation directory holding one under train/.
fs::path training_collection(const fs::path& p) {
    if (is_collection(p)) return p;
    if (is_collection(p / "train")) return p / "train";
    throw std::runtime_error("no collection at " + p.string());
}

double mean_of(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

double sd_of(const std::vector<double>& x) {
    if (x.size() < 2) return 0.0;
    const double m = mean_of(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    SimSpec spec;
    std::string scenario = "cp";
    Index reps = 0;
    std::string out;
};

void write_simulation(const fs::path& dir, const SimulatedData& sim, const SimSpec& spec) {
    Metadata meta{{"scenario", to_string(spec.scenario)},
                  {"seed", std::to_string(spec.seed)},
                  {"rho", format_double(spec.rho)}};
    write_collection(dir / "train", sim.train, meta);
    write_truth(dir / "truth", sim.truth);
    if (sim.test) write_collection(dir / "test", *sim.test, meta);
    if (sim.test_truth) write_collection(dir / "test_truth", *sim.test_truth, meta);
}

std::string describe(const Collection& c) {
    std::ostringstream s;
    for (Index t = 0; t < c.view_count(); ++t) {
        const auto& d = c.views[t].data;
        s << (t ? ", " : "") << c.views[t].name << " (" << d.samples() << ',' << d.features() << ',' << d.slabs()
          << ')';
    }
    return s.str();
}

int cmd_simulate(SimulateArgs& a, bool n_given, std::ostream& out) {
    a.spec.scenario = scenario_from_string(a.scenario);
    if (a.spec.scenario == Scenario::continuum && !n_given) a.spec.N = SimSpec::continuum_defaults().N;
    try {
        a.spec.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const fs::path root(a.out);
    const Index reps = std::max<Index>(a.reps, 1);
    for (Index r = 1; r <= reps; ++r) {
        SimSpec spec = a.spec;
        spec.seed = a.spec.seed + static_cast<std::uint64_t>(r - 1);
        const fs::path dir = a.reps > 0 ? root / rep_name(r) : root;
        const auto sim = simulate(spec);
        write_simulation(dir, sim, spec);
        out << "simulated " << to_string(spec.scenario) << " seed=" << spec.seed << ": " << describe(sim.train)
            << " -> " << dir.string() << '\n';
    }
    return ok;
}

// --------------------------------------------------------------------- fit

struct FitArgs {
    std::string input;
    std::string out;
    std::string model = "mtf";
    std::string preset = "default";
    std::string scale = "feature";
    std::string lambda_mode = "global";
    Index k = 10;
    Index chains = 7;
    std::optional<Index> burnin;
    Index samples = 40;
    Index thin = 10;
    Index warmup = 10;
    bool ard_jump = true;
    std::uint64_t seed = 1;
    Index jobs = 1;
};

HyperParams hyperparams_for(const FitArgs& a) {
    HyperParams hp;
    if (a.preset == "strong-reg") hp = HyperParams::strong_regularization();
    hp.K = a.k;
    hp.n_chains = a.chains;
    hp.burn_in = a.burnin.value_or(a.preset == "strong-reg" ? 5000 : 3000);
    hp.n_samples = a.samples;
    hp.thin = a.thin;
    hp.indicator_warmup = a.warmup;
    hp.ard_jump = a.ard_jump;
    hp.lambda_mode = lambda_mode_from_string(a.lambda_mode);
    try {
        hp.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return hp;
}

void fit_one(const fs::path& input, const fs::path& dir, const FitArgs& a, const HyperParams& hp, std::ostream& out) {
    const Collection c = read_collection(training_collection(input));
    FitOptions options;
    options.jobs = std::max<Index>(a.jobs, 1);
    options.granularity = a.scale == "fiber" ? ScaleGranularity::fiber : ScaleGranularity::feature;
    FitResult fit;
    try {
        fit = fit_model(c, model_from_string(a.model), hp, a.seed, options);
    } catch (const NumericError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    write_archive(dir, fit);
    const RunReport report = summarize_run(fit);
    {
        std::ofstream f(dir / "diagnostics.txt");
        write_report(f, report, fit.source_views);
        if (!f) throw std::runtime_error("cannot write " + (dir / "diagnostics.txt").string());
    }
    out << "fit " << a.model << " K=" << hp.K << " chains=" << hp.n_chains << ": shared "
        << format_double(report.structure.shared);
    for (std::size_t t = 0; t < report.structure.specific.size(); ++t)
        out << ", " << fit.source_views[t] << " " << format_double(report.structure.specific[t]);
    out << ", empty " << format_double(report.structure.empty) << " -> " << dir.string() << '\n';
    for (const auto& flag : report.flags) out << "  " << flag << '\n';
}

int cmd_fit(const FitArgs& a, std::ostream& out) {
    const HyperParams hp = hyperparams_for(a);
    const fs::path input(a.input), root(a.out);
    const auto reps = repetitions(input);
    if (reps.empty()) {
        fit_one(input, root, a, hp, out);
        return ok;
    }
    for (const auto& rep : reps) fit_one(rep, root / rep.filename(), a, hp, out);
    return ok;
}

// ----------------------------------------------------------------- predict

struct PredictArgs {
    std::string archive;
    std::string test;
    std::string truth;
    std::string out;
    std::uint64_t seed = 1;
    Index stage2_samples = 10;
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
    const fs::path archive(a.archive);
    if (!is_archive(archive)) throw std::runtime_error("no posterior archive at " + archive.string());
    const FitResult fit = read_archive(archive);

    fs::path test_dir(a.test), truth_dir(a.truth);
    if (!is_collection(test_dir) && is_collection(test_dir / "test")) {
        if (truth_dir.empty() && is_collection(test_dir / "test_truth")) truth_dir = test_dir / "test_truth";
        test_dir /= "test";
    }
    Metadata meta;
    const Collection test = read_collection(test_dir, &meta);
    std::optional<Collection> truth;
    if (!truth_dir.empty()) truth = read_collection(truth_dir);

    Stage2Options options;
    options.samples = a.stage2_samples;
    FitPrediction p;
    try {
        p = predict_fit(fit, test, options, a.seed);
    } catch (const IncompatibleInput& e) {
        throw UsageError(e.what());
    }

    std::map<std::string, std::string> summary{{"model", to_string(fit.model)}};
    if (auto it = meta.find("rho"); it != meta.end()) summary["rho"] = it->second;
    if (truth)
        summary["RMSE_preprocessed"] =
            format_double(prediction_rmse(p.preprocessed, apply_transform(fit.transform, *truth)));
    write_prediction_report(a.out, p.original, truth ? &*truth : nullptr, summary);

    if (truth) out << "RMSE " << format_double(prediction_rmse(p.original, *truth)) << '\n';
    else out << "predicted " << p.original.target_count() << " entries (no truth given)\n";
    return ok;
}

// ---------------------------------------------------------------- diagnose

int cmd_diagnose(const std::string& archive, double threshold, const std::string& file, std::ostream& out) {
    if (!is_archive(archive)) throw std::runtime_error("no posterior archive at " + archive);
    const FitResult fit = read_archive(archive);
    const RunReport r = summarize_run(fit, threshold);
    write_report(out, r, fit.source_views);
    if (!file.empty()) {
        std::ofstream f(file);
        write_report(f, r, fit.source_views);
        if (!f) throw std::runtime_error("cannot write " + file);
    }
    // Scripts branch on the status: a raised flag means the chains need another look.
    return r.converged() ? ok : runtime_failure;
}

// ------------------------------------------------------------------ report

struct ReportArgs {
    std::vector<std::string> archives;
    std::vector<std::string> predictions;
    std::string truth;
    bool allow_mixed = false;
    double threshold = 0.5;
};

/// Truth for an archive: <truth>/<rep_name>/truth for batch archives, else <truth>/truth.
std::optional<SimTruth> truth_for(const fs::path& archive, const std::string& truth_root) {
    if (truth_root.empty()) return std::nullopt;
    const fs::path root(truth_root);
    const std::string name = archive.filename().string();
    for (const fs::path& p : {root / name / "truth", root / "truth", root})
        if (fs::exists(p / "truth.json")) return read_truth(p);
    throw std::runtime_error("no truth for " + archive.string() + " under " + truth_root);
}

struct StructureRow {
    std::string archive;
    std::string model;
    std::vector<double> values;  // shared, specific..., empty, [match]
};

void print_stats(std::ostream& out, const std::string& label, const std::string& model,
                 const std::vector<StructureRow>& rows) {
    const std::size_t cols = rows.front().values.size();
    for (const char* stat : {"mean", "std"}) {
        out << '#' << stat << ',' << label << ',' << model;
        for (std::size_t j = 0; j < cols; ++j) {
            std::vector<double> x;
            for (const auto& r : rows) x.push_back(r.values[j]);
            out << ',' << format_double(std::string(stat) == "mean" ? mean_of(x) : sd_of(x));
        }
        out << '\n';
    }
}

int cmd_report(const ReportArgs& a, std::ostream& out) {
    std::vector<fs::path> archives;
    for (const auto& p : a.archives) {
        if (is_archive(p)) {
            archives.emplace_back(p);
            continue;
        }
        const auto reps = repetitions(p);
        if (reps.empty()) throw std::runtime_error("neither an archive nor a batch directory: " + p);
        for (const auto& r : reps)
            if (is_archive(r)) archives.push_back(r);
    }

    if (!archives.empty()) {
        std::vector<StructureRow> rows;
        std::vector<std::string> views;
        for (const auto& dir : archives) {
            const FitResult fit = read_archive(dir);
            if (views.empty()) views = fit.source_views;
            if (fit.source_views != views) throw UsageError("archives have different views: " + dir.string());
            StructureRow row{dir.string(), to_string(fit.model), {}};
            const RunReport r = summarize_run(fit, a.threshold);
            row.values.push_back(r.structure.shared);
            for (double s : r.structure.specific) row.values.push_back(s);
            row.values.push_back(r.structure.empty);
            if (const auto truth = truth_for(dir, a.truth)) {
                const auto loadings = truth->tensor_specific_loadings();
                std::vector<double> per_chain;
                for (Index c = 0; c < fit.chain_count(); ++c) {
                    const auto m = match_components(loadings, fit.original_loadings(c, 1));
                    per_chain.push_back(mean_of(m));
                }
                row.values.push_back(mean_of(per_chain));
            }
            rows.push_back(std::move(row));
        }
        std::map<std::string, std::vector<StructureRow>> by_model;
        for (const auto& r : rows) by_model[r.model].push_back(r);
        if (by_model.size() > 1 && !a.allow_mixed)
            throw UsageError("archives mix models; pass --allow-mixed to tabulate them together");
        const bool with_match = !a.truth.empty();

        out << "archive,model,shared";
        for (const auto& v : views) out << ",specific_" << v;
        out << ",empty" << (with_match ? ",match" : "") << '\n';
        for (const auto& r : rows) {
            out << r.archive << ',' << r.model;
            for (double v : r.values) out << ',' << format_double(v);
            out << '\n';
        }
        for (const auto& [model, group] : by_model) print_stats(out, "all", model, group);
    }

    if (!a.predictions.empty()) {
        // rho -> model -> RMSE values
        std::map<double, std::map<std::string, std::vector<double>>> table;
        for (const auto& p : a.predictions) {
            const auto s = read_prediction_summary(p);
            const auto rho = s.find("rho"), model = s.find("model"), rmse = s.find("RMSE");
            if (rho == s.end() || model == s.end() || rmse == s.end())
                throw std::runtime_error(p + " lacks rho, model or RMSE in its summary");
            table[parse_double(rho->second)][model->second].push_back(parse_double(rmse->second));
        }
        if (!archives.empty()) out << '\n';
        out << "rho,model,n,rmse_mean,rmse_std\n";
        for (const auto& [rho, models] : table)
            for (const auto& [model, values] : models)
                out << format_double(rho) << ',' << model << ',' << values.size() << ',' << format_double(mean_of(values))
                    << ',' << format_double(sd_of(values)) << '\n';
    }
    if (archives.empty() && a.predictions.empty()) throw UsageError("report needs archives or --predictions");
    return ok;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bayesian matrix-tensor factorization: simulate, fit, predict, diagnose, report"};
    app.name("bmtf");
    app.require_subcommand(1);
    app.set_config("--config", "", "Read flags from a TOML file ([fit], [simulate], ... sections)");

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Generate a synthetic matrix + tensor collection with its truth");
    s->add_option("--scenario", sim.scenario, "cp, relaxed_cp or continuum")
        ->check(CLI::IsMember({"cp", "relaxed_cp", "continuum"}))
        ->capture_default_str();
    s->add_option("--seed", sim.spec.seed)->capture_default_str();
    s->add_option("--rho", sim.spec.rho, "Trilinear share of the continuum signal")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    auto* n_opt = s->add_option("--n", sim.spec.N, "Training samples (15 for continuum, else 300)");
    s->add_option("--d1", sim.spec.D1)->capture_default_str();
    s->add_option("--d2", sim.spec.D2)->capture_default_str();
    s->add_option("--l", sim.spec.L)->capture_default_str();
    s->add_option("--k-shared", sim.spec.k_shared)->capture_default_str();
    s->add_option("--k-matrix", sim.spec.k_matrix)->capture_default_str();
    s->add_option("--k-tensor", sim.spec.k_tensor)->capture_default_str();
    s->add_option("--signal-var", sim.spec.signal_var)->capture_default_str();
    s->add_option("--noise-var", sim.spec.noise_var)->capture_default_str();
    s->add_option("--n-test", sim.spec.n_test)->capture_default_str();
    s->add_option("--reps", sim.reps, "Write rep_001.. subdirectories with consecutive seeds")
        ->check(CLI::NonNegativeNumber);
    s->add_option("--out", sim.out, "Output directory")->required();

    FitArgs fa;
    auto* f = app.add_subcommand("fit", "Run the Gibbs sampler on a collection and write a posterior archive");
    f->add_option("input", fa.input, "Collection, simulation or batch directory")->required();
    f->add_option("--out", fa.out, "Archive directory (or batch root)")->required();
    f->add_option("--model", fa.model)->check(CLI::IsMember({"mtf", "rmtf", "gfa"}))->capture_default_str();
    f->add_option("--k", fa.k, "Number of components")->check(CLI::PositiveNumber)->capture_default_str();
    f->add_option("--chains", fa.chains)->check(CLI::PositiveNumber)->capture_default_str();
    f->add_option("--burnin", fa.burnin, "Burn-in sweeps (default 3000, 5000 with strong-reg)")
        ->check(CLI::NonNegativeNumber);
    f->add_option("--samples", fa.samples)->check(CLI::PositiveNumber)->capture_default_str();
    f->add_option("--thin", fa.thin)->check(CLI::PositiveNumber)->capture_default_str();
    f->add_option("--seed", fa.seed)->capture_default_str();
    f->add_option("--preset", fa.preset)->check(CLI::IsMember({"default", "strong-reg"}))->capture_default_str();
    f->add_option("--scale", fa.scale, "Tensor scaling: one per feature or per (feature, slab)")
        ->check(CLI::IsMember({"feature", "fiber"}))
        ->capture_default_str();
    f->add_option("--lambda-mode", fa.lambda_mode)
        ->check(CLI::IsMember({"global", "per_component", "per_slab"}))
        ->capture_default_str();
    f->add_option("--warmup", fa.warmup, "Sweeps with all indicators held on")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    f->add_option("--ard-jump", fa.ard_jump, "Joint indicator/precision move after each spike draw")
        ->capture_default_str();
    f->add_option("--jobs", fa.jobs, "Chains run in parallel")
        ->envname("BMTF_JOBS")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    PredictArgs pa;
    auto* p = app.add_subcommand("predict", "Predict the masked entries of a test collection");
    p->add_option("archive", pa.archive)->required();
    p->add_option("test", pa.test, "Test collection, or a simulation directory with test/")->required();
    p->add_option("--truth", pa.truth, "Fully observed test collection for RMSE");
    p->add_option("--out", pa.out, "Prediction report file")->required();
    p->add_option("--seed", pa.seed)->capture_default_str();
    p->add_option("--stage2-samples", pa.stage2_samples, "Latent draws per posterior sample")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    std::string diag_archive, diag_out;
    double diag_threshold = 0.5;
    auto* d = app.add_subcommand("diagnose", "Convergence and component-structure summary of an archive (status 1 if any check is flagged)");
    d->add_option("archive", diag_archive)->required();
    d->add_option("--threshold", diag_threshold, "Activity above which a component counts as on")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    d->add_option("--out", diag_out, "Also write the summary to this file");

    ReportArgs ra;
    auto* r = app.add_subcommand("report", "Component-structure, match and RMSE-vs-rho tables");
    r->add_option("archives", ra.archives, "Archives or batch directories of archives");
    r->add_option("--predictions", ra.predictions, "Prediction report files for the RMSE table");
    r->add_option("--truth", ra.truth, "Simulation directory (or batch root) for component matching");
    r->add_flag("--allow-mixed", ra.allow_mixed, "Tabulate archives of different models together");
    r->add_option("--threshold", ra.threshold)->check(CLI::Range(0.0, 1.0))->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : usage_error;
    }

    try {
        if (*s) return cmd_simulate(sim, n_opt->count() > 0, out);
        if (*f) return cmd_fit(fa, out);
        if (*p) return cmd_predict(pa, out);
        if (*d) return cmd_diagnose(diag_archive, diag_threshold, diag_out, out);
        return cmd_report(ra, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return runtime_failure;
    }
}

}  // namespace bmtf::cli
