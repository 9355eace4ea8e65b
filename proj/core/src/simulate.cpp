#include "bmtf/simulate.hpp"

#include "bmtf/io.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace bmtf {

namespace {

using json = nlohmann::json;

/// H pattern: row 0 matrix, row 1 tensor.
IndicatorMatrix activity_pattern(const SimSpec& spec) {
    const Index k = spec.components();
    IndicatorMatrix h = IndicatorMatrix::Zero(2, k);
    for (Index i = 0; i < k; ++i) {
        const bool shared = i < spec.k_shared;
        const bool matrix = !shared && i < spec.k_shared + spec.k_matrix;
        h(0, i) = shared || matrix;
        h(1, i) = shared || !matrix;
    }
    return h;
}

/// Normal loadings with inactive columns zeroed and the first shared column a sine.
Matrix draw_loadings(Index d, const IndicatorMatrix& h, Index view, const SimSpec& spec, RngStream& rng) {
    Matrix v = rng.normal_matrix(d, h.cols());
    for (Index i = 0; i < h.cols(); ++i)
        if (!h(view, i)) v.col(i).setZero();
    if (spec.k_shared > 0) v.col(0) = standardized_sine(d);
    return v;
}

/// Mean over rows of sum_k w_dk^2: the per-element variance w implies for unit-variance z.
double loading_power(const Matrix& w) { return w.squaredNorm() / static_cast<double>(w.rows()); }

void scale_to_power(Matrix& w, double target) {
    const double p = loading_power(w);
    if (p > 0.0) w *= std::sqrt(target / p);
}

Tensor3 noise_tensor(Index n, Index d, Index l, double var, RngStream& rng) {
    Tensor3 e(n, d, l);
    const double sd = std::sqrt(var);
    for (double& x : e.values()) x = sd * rng.normal();
    return e;
}

Tensor3 signal(const Matrix& z, const std::vector<Matrix>& slabs) {
    Tensor3 x(z.rows(), slabs.front().rows(), static_cast<Index>(slabs.size()));
    x.unfolded().noalias() = z * stack_loadings(slabs).transpose();
    return x;
}

Collection make_pair_collection(Tensor3 matrix, Tensor3 tensor) {
    Collection c;
    c.views.push_back({"matrix", MaskedTensor3(std::move(matrix))});
    c.views.push_back({"tensor", MaskedTensor3(std::move(tensor))});
    c.third_mode_groups = {{1}};
    return c;
}

/// Shared part of the CP and relaxed generators; `distort` alters tensor slab loadings.
template <typename Distort>
SimulatedData gen_trilinear(const SimSpec& spec, Distort distort) {
    spec.validate();
    RngStream rng(spec.seed, 0);
    SimTruth truth;
    truth.h = activity_pattern(spec);
    const Index k = spec.components();
    truth.z = rng.normal_matrix(spec.N, k);
    truth.v.push_back(draw_loadings(spec.D1, truth.h, 0, spec, rng));
    truth.v.push_back(draw_loadings(spec.D2, truth.h, 1, spec, rng));
    truth.u = rng.normal_matrix(spec.L, k);
    for (Index i = 0; i < k; ++i)
        if (!truth.h(1, i)) truth.u.col(i).setZero();

    truth.slab_loadings.push_back({truth.v[0]});
    std::vector<Matrix> slabs;
    for (Index l = 0; l < spec.L; ++l) slabs.push_back(truth.v[1] * truth.u.row(l).asDiagonal());
    distort(truth, slabs);
    truth.slab_loadings.push_back(slabs);

    truth.noise.push_back(noise_tensor(spec.N, spec.D1, 1, spec.noise_var, rng));
    truth.noise.push_back(noise_tensor(spec.N, spec.D2, spec.L, spec.noise_var, rng));
    Tensor3 xm = signal(truth.z, truth.slab_loadings[0]);
    Tensor3 xt = signal(truth.z, truth.slab_loadings[1]);
    xm.unfolded() += truth.noise[0].unfolded();
    xt.unfolded() += truth.noise[1].unfolded();

    SimulatedData out;
    out.train = make_pair_collection(std::move(xm), std::move(xt));
    out.truth = std::move(truth);
    return out;
}

}  // namespace

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::cp: return "cp";
        case Scenario::relaxed_cp: return "relaxed_cp";
        case Scenario::continuum: return "continuum";
    }
    return "cp";
}

Scenario scenario_from_string(const std::string& s) {
    if (s == "cp") return Scenario::cp;
    if (s == "relaxed_cp") return Scenario::relaxed_cp;
    if (s == "continuum") return Scenario::continuum;
    throw std::invalid_argument("unknown scenario '" + s + "' (expected cp, relaxed_cp or continuum)");
}

SimSpec SimSpec::continuum_defaults() {
    SimSpec s;
    s.scenario = Scenario::continuum;
    s.N = 15;
    return s;
}

void SimSpec::validate() const {
    if (N < 1 || D1 < 1 || D2 < 1 || L < 1) throw std::invalid_argument("SimSpec: sizes must be positive");
    if (k_shared < 0 || k_matrix < 0 || k_tensor < 0)
        throw std::invalid_argument("SimSpec: component counts must be non-negative");
    if (components() < 1) throw std::invalid_argument("SimSpec: at least one component is required");
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("SimSpec: rho must lie in [0, 1]");
    if (!(signal_var > 0.0) || !(noise_var >= 0.0))
        throw std::invalid_argument("SimSpec: signal_var must be positive and noise_var non-negative");
    if (scenario == Scenario::relaxed_cp && L < 2)
        throw std::invalid_argument("SimSpec: the relaxed scenario needs L >= 2");
    if (scenario == Scenario::continuum && n_test < 1)
        throw std::invalid_argument("SimSpec: n_test must be positive");
}

std::vector<Vector> SimTruth::tensor_specific_loadings() const {
    std::vector<Vector> out;
    for (Index i = 0; i < h.cols(); ++i)
        if (h(1, i) && !h(0, i)) out.push_back(v[1].col(i));
    return out;
}

Vector standardized_sine(Index d) {
    Vector s(d);
    for (Index i = 0; i < d; ++i)
        s[i] = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(d));
    s.array() -= s.mean();
    const double sd = std::sqrt(s.squaredNorm() / static_cast<double>(d));
    if (sd > 0.0) s /= sd;
    return s;
}

Vector signed_power(const Vector& v, double p) {
    return v.unaryExpr([p](double x) { return std::copysign(std::pow(std::abs(x), p), x); });
}

std::vector<double> distortion_powers(Index L) {
    std::vector<double> p;
    if (L >= 1) p.push_back(0.5);
    if (L >= 2) p.push_back(1.5);
    const Index rest = L - 2;
    for (Index i = 0; i < rest; ++i)
        p.push_back(rest == 1 ? 1.0 : 0.3 + 1.4 * static_cast<double>(i) / static_cast<double>(rest - 1));
    return p;
}

SimulatedData gen_cp(const SimSpec& spec) {
    return gen_trilinear(spec, [](SimTruth&, std::vector<Matrix>&) {});
}

SimulatedData gen_relaxed_cp(const SimSpec& spec) {
    return gen_trilinear(spec, [&spec](SimTruth& truth, std::vector<Matrix>& slabs) {
        truth.powers = distortion_powers(spec.L);
        for (Index i = 0; i < spec.k_shared; ++i)
            for (Index l = 0; l < spec.L; ++l)
                slabs[l].col(i) = signed_power(truth.v[1].col(i), truth.powers[l]) * truth.u(l, i);
    });
}

SimulatedData gen_continuum(const SimSpec& spec) {
    spec.validate();
    if (spec.scenario != Scenario::continuum)
        throw std::invalid_argument("gen_continuum: scenario must be continuum");
    RngStream rng(spec.seed, 0);
    const Index k = spec.components();
    SimTruth truth;
    truth.rho = spec.rho;
    truth.h = activity_pattern(spec);
    truth.z = rng.normal_matrix(spec.N, k);
    truth.z_test = rng.normal_matrix(spec.n_test, k);

    Matrix vm = draw_loadings(spec.D1, truth.h, 0, spec, rng);
    scale_to_power(vm, spec.signal_var);
    truth.v.push_back(vm);
    truth.v.push_back(draw_loadings(spec.D2, truth.h, 1, spec, rng));
    truth.u = rng.normal_matrix(spec.L, k);
    for (Index i = 0; i < k; ++i)
        if (!truth.h(1, i)) truth.u.col(i).setZero();

    // Each slab is normalized separately; rescaling a slab only rescales u_l,
    // so the rho = 1 end stays exactly trilinear.
    std::vector<Matrix> slabs;
    for (Index l = 0; l < spec.L; ++l) {
        Matrix tri = truth.v[1] * truth.u.row(l).asDiagonal();
        Matrix bi = rng.normal_matrix(spec.D2, k);
        for (Index i = 0; i < k; ++i)
            if (!truth.h(1, i)) bi.col(i).setZero();
        scale_to_power(tri, 1.0);
        scale_to_power(bi, 1.0);
        Matrix blend = spec.rho * tri + (1.0 - spec.rho) * bi;
        scale_to_power(blend, spec.signal_var);
        slabs.push_back(std::move(blend));
    }
    truth.slab_loadings = {{vm}, slabs};

    truth.noise.push_back(noise_tensor(spec.N, spec.D1, 1, spec.noise_var, rng));
    truth.noise.push_back(noise_tensor(spec.N, spec.D2, spec.L, spec.noise_var, rng));
    Tensor3 xm = signal(truth.z, truth.slab_loadings[0]);
    Tensor3 xt = signal(truth.z, truth.slab_loadings[1]);
    xm.unfolded() += truth.noise[0].unfolded();
    xt.unfolded() += truth.noise[1].unfolded();

    Tensor3 tm = signal(truth.z_test, truth.slab_loadings[0]);
    Tensor3 tt = signal(truth.z_test, truth.slab_loadings[1]);
    tm.unfolded() += noise_tensor(spec.n_test, spec.D1, 1, spec.noise_var, rng).unfolded();
    tt.unfolded() += noise_tensor(spec.n_test, spec.D2, spec.L, spec.noise_var, rng).unfolded();

    SimulatedData out;
    out.train = make_pair_collection(std::move(xm), std::move(xt));
    out.test_truth = make_pair_collection(tm, tt);
    std::vector<std::uint8_t> observed(static_cast<std::size_t>(tt.size()), 1);
    for (Index d = 0; d < spec.D2; ++d)
        for (Index n = 0; n < spec.n_test; ++n) observed[static_cast<std::size_t>(n + spec.n_test * d)] = 0;
    Collection test;
    test.views.push_back({"matrix", MaskedTensor3(std::move(tm))});
    test.views.push_back({"tensor", MaskedTensor3(std::move(tt), std::move(observed))});
    test.third_mode_groups = {{1}};
    out.test = std::move(test);
    out.truth = std::move(truth);
    return out;
}

SimulatedData simulate(const SimSpec& spec) {
    switch (spec.scenario) {
        case Scenario::cp: return gen_cp(spec);
        case Scenario::relaxed_cp: return gen_relaxed_cp(spec);
        case Scenario::continuum: return gen_continuum(spec);
    }
    throw std::invalid_argument("simulate: unknown scenario");
}

void write_truth(const std::filesystem::path& dir, const SimTruth& truth) {
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["format"] = "bmtf-truth";
    manifest["version"] = 1;
    manifest["N"] = truth.z.rows();
    manifest["K"] = truth.z.cols();
    manifest["n_test"] = truth.z_test.rows();
    manifest["features"] = json::array();
    manifest["slabs"] = json::array();
    for (std::size_t t = 0; t < truth.v.size(); ++t) {
        manifest["features"].push_back(truth.v[t].rows());
        manifest["slabs"].push_back(truth.slab_loadings[t].size());
    }
    manifest["rho"] = format_double(truth.rho);
    {
        std::ofstream m(dir / "truth.json", std::ios::binary);
        m << manifest.dump(2) << '\n';
        if (!m) throw std::runtime_error("failed writing " + (dir / "truth.json").string());
    }

    std::ofstream out(dir / "truth.csv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + (dir / "truth.csv").string());
    out << "param,block,a,b,c,value\n";
    auto put = [&](const char* name, Index block, Index a, Index b, Index c, double value) {
        out << name << ',' << block << ',' << a << ',' << b << ',' << c << ',' << format_double(value) << '\n';
    };
    auto put_matrix = [&](const char* name, Index block, const Matrix& m) {
        for (Index j = 0; j < m.cols(); ++j)
            for (Index i = 0; i < m.rows(); ++i) put(name, block, i, j, 0, m(i, j));
    };
    put_matrix("z", 0, truth.z);
    put_matrix("z_test", 0, truth.z_test);
    for (std::size_t t = 0; t < truth.v.size(); ++t) put_matrix("v", static_cast<Index>(t), truth.v[t]);
    put_matrix("u", 0, truth.u);
    put_matrix("h", 0, truth.h.cast<double>());
    for (std::size_t t = 0; t < truth.slab_loadings.size(); ++t)
        for (std::size_t l = 0; l < truth.slab_loadings[t].size(); ++l) {
            const Matrix& w = truth.slab_loadings[t][l];
            for (Index j = 0; j < w.cols(); ++j)
                for (Index i = 0; i < w.rows(); ++i)
                    put("w", static_cast<Index>(t), static_cast<Index>(l), i, j, w(i, j));
        }
    for (std::size_t l = 0; l < truth.powers.size(); ++l) put("power", 0, static_cast<Index>(l), 0, 0, truth.powers[l]);
    if (!out) throw std::runtime_error("failed writing " + (dir / "truth.csv").string());
}

SimTruth read_truth(const std::filesystem::path& dir) {
    std::ifstream m(dir / "truth.json");
    if (!m) throw std::runtime_error("cannot open " + (dir / "truth.json").string());
    const json manifest = json::parse(m);
    if (manifest.value("format", "") != "bmtf-truth") throw std::runtime_error("not a truth archive: " + dir.string());
    const Index n = manifest["N"], k = manifest["K"], n_test = manifest["n_test"];
    SimTruth truth;
    truth.rho = parse_double(manifest["rho"].get<std::string>());
    truth.z = Matrix::Zero(n, k);
    truth.z_test = Matrix::Zero(n_test, k);
    Index slabs_tensor = 1;
    for (std::size_t t = 0; t < manifest["features"].size(); ++t) {
        const Index d = manifest["features"][t], l = manifest["slabs"][t];
        truth.v.push_back(Matrix::Zero(d, k));
        truth.slab_loadings.emplace_back(static_cast<std::size_t>(l), Matrix::Zero(d, k));
        slabs_tensor = std::max(slabs_tensor, l);
    }
    truth.u = Matrix::Zero(slabs_tensor, k);
    truth.h = IndicatorMatrix::Zero(static_cast<Index>(truth.v.size()), k);

    const CsvTable table = read_csv(dir / "truth.csv");
    const Index cp = table.column("param"), cb = table.column("block"), ca = table.column("a"),
                cbb = table.column("b"), cc = table.column("c"), cv = table.column("value");
    for (const auto& row : table.rows) {
        const std::string& p = row[cp];
        const Index block = std::stoll(row[cb]), a = std::stoll(row[ca]), b = std::stoll(row[cbb]),
                    c = std::stoll(row[cc]);
        const double value = parse_double(row[cv]);
        if (p == "z") truth.z(a, b) = value;
        else if (p == "z_test") truth.z_test(a, b) = value;
        else if (p == "v") truth.v.at(static_cast<std::size_t>(block))(a, b) = value;
        else if (p == "u") truth.u(a, b) = value;
        else if (p == "h") truth.h(a, b) = static_cast<int>(value);
        else if (p == "w") truth.slab_loadings.at(static_cast<std::size_t>(block)).at(static_cast<std::size_t>(a))(b, c) = value;
        else if (p == "power") {
            if (truth.powers.size() <= static_cast<std::size_t>(a)) truth.powers.resize(static_cast<std::size_t>(a) + 1);
            truth.powers[static_cast<std::size_t>(a)] = value;
        } else throw std::runtime_error("unknown truth parameter '" + p + "'");
    }
    return truth;
}

}  // namespace bmtf
