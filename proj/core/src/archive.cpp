#include "bmtf/archive.hpp"

#include "bmtf/io.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bmtf {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

json hyper_to_json(const HyperParams& hp) {
    json j;
    j["K"] = hp.K;
    j["a_pi"] = format_double(hp.a_pi);
    j["b_pi"] = format_double(hp.b_pi);
    j["a_alpha"] = format_double(hp.a_alpha);
    j["b_alpha"] = format_double(hp.b_alpha);
    j["tau_prior"] = to_string(hp.tau_prior);
    j["a_tau"] = format_double(hp.a_tau);
    j["b_tau"] = format_double(hp.b_tau);
    j["snr"] = format_double(hp.snr);
    j["a_lambda"] = format_double(hp.a_lambda);
    j["b_lambda"] = format_double(hp.b_lambda);
    j["a_beta"] = format_double(hp.a_beta);
    j["b_beta"] = format_double(hp.b_beta);
    j["lambda_mode"] = to_string(hp.lambda_mode);
    j["burn_in"] = hp.burn_in;
    j["n_samples"] = hp.n_samples;
    j["thin"] = hp.thin;
    j["n_chains"] = hp.n_chains;
    j["indicator_warmup"] = hp.indicator_warmup;
    j["ard_jump"] = hp.ard_jump;
    j["fault"] = to_string(hp.fault);
    return j;
}

HyperParams hyper_from_json(const json& j) {
    HyperParams hp;
    auto real = [&](const char* key) { return parse_double(j.at(key).get<std::string>()); };
    hp.K = j.at("K");
    hp.a_pi = real("a_pi");
    hp.b_pi = real("b_pi");
    hp.a_alpha = real("a_alpha");
    hp.b_alpha = real("b_alpha");
    hp.tau_prior = tau_prior_from_string(j.at("tau_prior"));
    hp.a_tau = real("a_tau");
    hp.b_tau = real("b_tau");
    hp.snr = real("snr");
    hp.a_lambda = real("a_lambda");
    hp.b_lambda = real("b_lambda");
    hp.a_beta = real("a_beta");
    hp.b_beta = real("b_beta");
    hp.lambda_mode = lambda_mode_from_string(j.at("lambda_mode"));
    hp.burn_in = j.at("burn_in");
    hp.n_samples = j.at("n_samples");
    hp.thin = j.at("thin");
    hp.n_chains = j.at("n_chains");
    hp.indicator_warmup = j.at("indicator_warmup");
    hp.ard_jump = j.at("ard_jump");
    hp.fault = fault_from_string(j.at("fault"));
    return hp;
}

/// Appends snapshot,param,block,a,b,c,value rows.
class RowWriter {
  public:
    explicit RowWriter(std::string& out) : out_(out) {}
    void set_snapshot(Index s) { snapshot_ = std::to_string(s); }

    void put(const char* param, Index block, Index a, Index b, Index c, double value) {
        out_ += snapshot_;
        out_ += ',';
        out_ += param;
        for (Index i : {block, a, b, c}) {
            out_ += ',';
            out_ += std::to_string(i);
        }
        out_ += ',';
        out_ += format_double(value);
        out_ += '\n';
    }
    void matrix(const char* param, Index block, const Matrix& m) {
        for (Index j = 0; j < m.cols(); ++j)
            for (Index i = 0; i < m.rows(); ++i) put(param, block, i, j, 0, m(i, j));
    }
    void vector(const char* param, Index block, const Vector& v) {
        for (Index i = 0; i < v.size(); ++i) put(param, block, i, 0, 0, v[i]);
    }

  private:
    std::string& out_;
    std::string snapshot_;
};

void write_state(RowWriter& w, const MtfState& s) {
    w.matrix("z", 0, s.z);
    for (Index t = 0; t < s.view_count(); ++t) w.matrix("v", t, s.v[t]);
    for (std::size_t g = 0; g < s.u.size(); ++g) w.matrix("u", static_cast<Index>(g), s.u[g]);
    w.matrix("h", 0, s.h.cast<double>());
    w.vector("pi", 0, s.pi);
    for (Index t = 0; t < s.view_count(); ++t) w.matrix("alpha", t, s.alpha[t]);
    w.vector("tau", 0, s.tau);
}

void write_state(RowWriter& w, const RmtfState& s) {
    w.matrix("z", 0, s.z);
    for (Index t = 0; t < s.view_count(); ++t) {
        for (std::size_t l = 0; l < s.w[t].size(); ++l) {
            const Matrix& m = s.w[t][l];
            for (Index k = 0; k < m.cols(); ++k)
                for (Index d = 0; d < m.rows(); ++d) w.put("w", t, static_cast<Index>(l), d, k, m(d, k));
        }
    }
    for (Index t = 0; t < s.view_count(); ++t)
        if (s.is_tensor_view(t)) w.matrix("v", t, s.v[t]);
    for (std::size_t g = 0; g < s.u.size(); ++g) w.matrix("u", static_cast<Index>(g), s.u[g]);
    for (Index t = 0; t < s.view_count(); ++t) w.matrix("h", t, s.h[t].cast<double>());
    w.vector("pi", 0, s.pi);
    for (Index t = 0; t < s.view_count(); ++t) {
        if (s.is_tensor_view(t))
            w.matrix("beta", t, s.beta[t]);
        else
            w.matrix("alpha", t, s.alpha[t]);
    }
    w.vector("lambda", 0, s.lambda);
    for (Index t = 0; t < s.view_count(); ++t) w.vector("tau", t, s.tau[t]);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

template <typename State>
void write_chain(const fs::path& dir, const PosteriorSamples<State>& chain) {
    fs::create_directories(dir);
    std::string text = "snapshot,param,block,a,b,c,value\n";
    RowWriter w(text);
    for (std::size_t i = 0; i < chain.snapshots.size(); ++i) {
        w.set_snapshot(static_cast<Index>(i));
        write_state(w, chain.snapshots[i]);
    }
    write_text(dir / "snapshots.csv", text);

    text = "sweep,log_joint";
    const std::size_t views = chain.mse.empty() ? 0 : chain.mse.front().size();
    for (std::size_t t = 0; t < views; ++t) text += ",mse_view_" + std::to_string(t);
    text += '\n';
    for (std::size_t i = 0; i < chain.trace_sweeps.size(); ++i) {
        text += std::to_string(chain.trace_sweeps[i]);
        text += ',';
        text += format_double(chain.log_joint[i]);
        for (double m : chain.mse[i]) {
            text += ',';
            text += format_double(m);
        }
        text += '\n';
    }
    write_text(dir / "trace.csv", text);
}

struct Layout {
    Index n = 0, k = 0;
    std::vector<FittedView> views;
    std::vector<Index> group_slabs;
    std::vector<Index> group_of_view;
};

Layout layout_of(const FitResult& fit) {
    Layout out;
    out.n = fit.samples;
    out.k = fit.hp.K;
    out.views = fit.fitted_views;
    for (const auto& v : out.views) {
        out.group_of_view.push_back(v.group);
        if (v.group >= 0) {
            if (static_cast<Index>(out.group_slabs.size()) <= v.group)
                out.group_slabs.resize(static_cast<std::size_t>(v.group) + 1, 0);
            out.group_slabs[static_cast<std::size_t>(v.group)] = v.slabs;
        }
    }
    return out;
}

MtfState empty_mtf(const Layout& lay) {
    MtfState s;
    s.group_of_view = lay.group_of_view;
    s.z = Matrix::Zero(lay.n, lay.k);
    for (Index l : lay.group_slabs) s.u.push_back(Matrix::Zero(l, lay.k));
    s.h = IndicatorMatrix::Zero(static_cast<Index>(lay.views.size()), lay.k);
    s.pi = Vector::Zero(lay.k);
    s.tau = Vector::Zero(static_cast<Index>(lay.views.size()));
    for (const auto& v : lay.views) {
        s.v.push_back(Matrix::Zero(v.features, lay.k));
        s.alpha.push_back(Matrix::Zero(v.features, lay.k));
    }
    return s;
}

RmtfState empty_rmtf(const Layout& lay, LambdaMode mode) {
    RmtfState s;
    s.group_of_view = lay.group_of_view;
    s.lambda_mode = mode;
    s.z = Matrix::Zero(lay.n, lay.k);
    for (Index l : lay.group_slabs) s.u.push_back(Matrix::Zero(l, lay.k));
    s.pi = Vector::Zero(lay.k);
    Index next = 0;
    for (const auto& v : lay.views) {
        const bool tensor = v.group >= 0;
        s.w.emplace_back(static_cast<std::size_t>(v.slabs), Matrix::Zero(v.features, lay.k));
        s.v.push_back(Matrix::Zero(v.features, lay.k));
        s.h.push_back(IndicatorMatrix::Zero(v.slabs, lay.k));
        s.alpha.push_back(tensor ? Matrix() : Matrix::Zero(v.features, lay.k));
        s.beta.push_back(tensor ? Matrix::Zero(v.features, lay.k) : Matrix());
        s.tau.push_back(Vector::Zero(v.slabs));
        s.lambda_offset.push_back(tensor ? next : -1);
        if (tensor) next += v.slabs;
    }
    const Index n_lambda = mode == LambdaMode::global ? 1 : mode == LambdaMode::per_component ? lay.k : next;
    s.lambda = Vector::Zero(n_lambda);
    return s;
}

struct Row {
    Index snapshot, block, a, b, c;
    std::string param;
    double value;
};

void assign(MtfState& s, const Row& r) {
    const auto t = static_cast<std::size_t>(r.block);
    if (r.param == "z") s.z(r.a, r.b) = r.value;
    else if (r.param == "v") s.v.at(t)(r.a, r.b) = r.value;
    else if (r.param == "u") s.u.at(t)(r.a, r.b) = r.value;
    else if (r.param == "h") s.h(r.a, r.b) = static_cast<int>(r.value);
    else if (r.param == "pi") s.pi(r.a) = r.value;
    else if (r.param == "alpha") s.alpha.at(t)(r.a, r.b) = r.value;
    else if (r.param == "tau") s.tau(r.a) = r.value;
    else throw std::runtime_error("unknown snapshot parameter '" + r.param + "'");
}

void assign(RmtfState& s, const Row& r) {
    const auto t = static_cast<std::size_t>(r.block);
    if (r.param == "z") s.z(r.a, r.b) = r.value;
    else if (r.param == "w") s.w.at(t).at(static_cast<std::size_t>(r.a))(r.b, r.c) = r.value;
    else if (r.param == "v") s.v.at(t)(r.a, r.b) = r.value;
    else if (r.param == "u") s.u.at(t)(r.a, r.b) = r.value;
    else if (r.param == "h") s.h.at(t)(r.a, r.b) = static_cast<int>(r.value);
    else if (r.param == "pi") s.pi(r.a) = r.value;
    else if (r.param == "alpha") s.alpha.at(t)(r.a, r.b) = r.value;
    else if (r.param == "beta") s.beta.at(t)(r.a, r.b) = r.value;
    else if (r.param == "lambda") s.lambda(r.a) = r.value;
    else if (r.param == "tau") s.tau.at(t)(r.a) = r.value;
    else throw std::runtime_error("unknown snapshot parameter '" + r.param + "'");
}

template <typename State>
PosteriorSamples<State> read_chain(const fs::path& dir, Index chain, const State& skeleton,
                                   const std::vector<Index>& snapshot_sweeps) {
    PosteriorSamples<State> out;
    out.chain = chain;
    out.snapshot_sweeps = snapshot_sweeps;
    out.snapshots.assign(snapshot_sweeps.size(), skeleton);

    const CsvTable snaps = read_csv(dir / "snapshots.csv");
    const Index cs = snaps.column("snapshot"), cp = snaps.column("param"), cb = snaps.column("block"),
                ca = snaps.column("a"), cbb = snaps.column("b"), cc = snaps.column("c"),
                cv = snaps.column("value");
    for (const auto& f : snaps.rows) {
        Row r{std::stoll(f[cs]), std::stoll(f[cb]), std::stoll(f[ca]), std::stoll(f[cbb]),
              std::stoll(f[cc]), f[cp], parse_double(f[cv])};
        assign(out.snapshots.at(static_cast<std::size_t>(r.snapshot)), r);
    }

    const CsvTable trace = read_csv(dir / "trace.csv");
    const Index sweep_col = trace.column("sweep"), lj_col = trace.column("log_joint");
    for (const auto& f : trace.rows) {
        out.trace_sweeps.push_back(std::stoll(f[sweep_col]));
        out.log_joint.push_back(parse_double(f[lj_col]));
        std::vector<double> mse;
        for (std::size_t i = 2; i < f.size(); ++i) mse.push_back(parse_double(f[i]));
        out.mse.push_back(std::move(mse));
    }
    return out;
}

template <typename State>
json chain_json(const PosteriorSamples<State>& c) {
    json j;
    j["chain"] = c.chain;
    j["snapshot_sweeps"] = c.snapshot_sweeps;
    j["warnings"] = c.warnings;
    return j;
}

}  // namespace

void write_archive(const fs::path& dir, const FitResult& fit) {
    fs::create_directories(dir);
    json run;
    run["format"] = "bmtf-archive";
    run["version"] = 1;
    run["model"] = to_string(fit.model);
    run["seed"] = std::to_string(fit.seed);
    run["samples"] = fit.samples;
    run["hyperparameters"] = hyper_to_json(fit.hp);
    run["source_views"] = fit.source_views;
    run["source_groups"] = fit.source_groups;
    run["view_origin"] = fit.view_origin;
    run["fitted_views"] = json::array();
    for (const auto& v : fit.fitted_views)
        run["fitted_views"].push_back(
            {{"name", v.name}, {"features", v.features}, {"slabs", v.slabs}, {"group", v.group}});
    run["chains"] = json::array();
    for (const auto& c : fit.mtf_chains) run["chains"].push_back(chain_json(c));
    for (const auto& c : fit.rmtf_chains) run["chains"].push_back(chain_json(c));
    write_text(dir / "run.json", run.dump(2) + "\n");

    std::string text = "view,feature,slab,center,scale\n";
    for (std::size_t t = 0; t < fit.transform.center.size(); ++t) {
        const Matrix& c = fit.transform.center[t];
        const Matrix& s = fit.transform.scale[t];
        for (Index l = 0; l < c.cols(); ++l)
            for (Index d = 0; d < c.rows(); ++d)
                text += std::to_string(t) + ',' + std::to_string(d) + ',' + std::to_string(l) + ',' +
                        format_double(c(d, l)) + ',' + format_double(s(d, l)) + '\n';
    }
    write_text(dir / "transform.csv", text);

    for (const auto& c : fit.mtf_chains) write_chain(dir / ("chain_" + std::to_string(c.chain)), c);
    for (const auto& c : fit.rmtf_chains) write_chain(dir / ("chain_" + std::to_string(c.chain)), c);
}

FitResult read_archive(const fs::path& dir) {
    std::ifstream in(dir / "run.json");
    if (!in) throw std::runtime_error("cannot open archive " + dir.string());
    const json run = json::parse(in);
    if (run.value("format", "") != "bmtf-archive") throw std::runtime_error("not a posterior archive: " + dir.string());

    FitResult fit;
    fit.model = model_from_string(run.at("model"));
    fit.seed = std::stoull(run.at("seed").get<std::string>());
    fit.samples = run.at("samples");
    fit.hp = hyper_from_json(run.at("hyperparameters"));
    fit.source_views = run.at("source_views").get<std::vector<std::string>>();
    fit.source_groups = run.at("source_groups").get<std::vector<std::vector<Index>>>();
    fit.view_origin = run.at("view_origin").get<std::vector<Index>>();
    for (const auto& v : run.at("fitted_views"))
        fit.fitted_views.push_back({v.at("name"), v.at("features"), v.at("slabs"), v.at("group")});

    // Transform shapes follow the source views.
    const CsvTable tr = read_csv(dir / "transform.csv");
    const Index cvw = tr.column("view"), cf = tr.column("feature"), cl = tr.column("slab"),
                cc = tr.column("center"), cs = tr.column("scale");
    std::vector<Index> dims_d(fit.source_views.size(), 0), dims_l(fit.source_views.size(), 0);
    for (const auto& r : tr.rows) {
        const auto t = static_cast<std::size_t>(std::stoll(r[cvw]));
        dims_d.at(t) = std::max(dims_d[t], static_cast<Index>(std::stoll(r[cf])) + 1);
        dims_l.at(t) = std::max(dims_l[t], static_cast<Index>(std::stoll(r[cl])) + 1);
    }
    for (std::size_t t = 0; t < dims_d.size(); ++t) {
        fit.transform.center.push_back(Matrix::Zero(dims_d[t], dims_l[t]));
        fit.transform.scale.push_back(Matrix::Ones(dims_d[t], dims_l[t]));
    }
    for (const auto& r : tr.rows) {
        const auto t = static_cast<std::size_t>(std::stoll(r[cvw]));
        const Index d = std::stoll(r[cf]), l = std::stoll(r[cl]);
        fit.transform.center[t](d, l) = parse_double(r[cc]);
        fit.transform.scale[t](d, l) = parse_double(r[cs]);
    }

    const Layout lay = layout_of(fit);
    for (const auto& c : run.at("chains")) {
        const Index id = c.at("chain");
        const auto sweeps = c.at("snapshot_sweeps").get<std::vector<Index>>();
        const fs::path cdir = dir / ("chain_" + std::to_string(id));
        if (fit.model == ModelKind::rmtf) {
            fit.rmtf_chains.push_back(read_chain(cdir, id, empty_rmtf(lay, fit.hp.lambda_mode), sweeps));
            fit.rmtf_chains.back().warnings = c.at("warnings").get<std::vector<std::string>>();
        } else {
            fit.mtf_chains.push_back(read_chain(cdir, id, empty_mtf(lay), sweeps));
            fit.mtf_chains.back().warnings = c.at("warnings").get<std::vector<std::string>>();
        }
    }
    return fit;
}

}  // namespace bmtf
