#include "bmtf/diagnostics.hpp"

#include "bmtf/io.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace bmtf {

namespace {

double mean_of(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

}  // namespace

double batch_means_variance(std::span<const double> x) {
    const auto n = static_cast<Index>(x.size());
    const auto batches = static_cast<Index>(std::floor(std::sqrt(static_cast<double>(n))));
    if (batches < 2) throw std::invalid_argument("batch_means_variance: need at least 4 values");
    const Index size = n / batches;
    std::vector<double> means;
    means.reserve(static_cast<std::size_t>(batches));
    for (Index b = 0; b < batches; ++b) means.push_back(mean_of(x.subspan(static_cast<std::size_t>(b * size), static_cast<std::size_t>(size))));
    const double m = mean_of(means);
    double ss = 0.0;
    for (double v : means) ss += (v - m) * (v - m);
    // Var(batch mean) / batches estimates Var(overall mean).
    return ss / static_cast<double>(batches - 1) / static_cast<double>(batches);
}

double geweke_z(std::span<const double> trace, double first_frac, double last_frac) {
    if (trace.size() < 100) throw std::invalid_argument("geweke_z: trace shorter than 100");
    if (!(first_frac > 0.0) || !(last_frac > 0.0) || first_frac + last_frac > 1.0)
        throw std::invalid_argument("geweke_z: need 0 < first_frac, last_frac and first_frac + last_frac <= 1");
    const std::size_t n = trace.size();
    const auto n_first = static_cast<std::size_t>(std::floor(first_frac * static_cast<double>(n)));
    const auto n_last = static_cast<std::size_t>(std::floor(last_frac * static_cast<double>(n)));
    const auto a = trace.first(n_first);
    const auto b = trace.last(n_last);
    const double var = batch_means_variance(a) + batch_means_variance(b);
    if (!(var > 0.0)) throw std::invalid_argument("geweke_z: zero variance");
    return (mean_of(a) - mean_of(b)) / std::sqrt(var);
}

double effective_cardinality(const ComponentCounts& counts, Index k) {
    return static_cast<double>(k) - counts.empty;
}

RunReport summarize_run(const FitResult& fit, double threshold) {
    RunReport out;
    out.model = to_string(fit.model);
    out.components = fit.hp.K;

    auto check_traces = [&](Index chain, const auto& samples) {
        std::vector<std::size_t> kept;
        for (std::size_t i = 0; i < samples.trace_sweeps.size(); ++i)
            if (samples.trace_sweeps[i] > fit.hp.burn_in) kept.push_back(i);
        const std::size_t views = samples.mse.empty() ? 0 : samples.mse.front().size();
        for (std::size_t t = 0; t < views; ++t) {
            TraceCheck c;
            c.chain = chain;
            c.trace = "mse_view_" + std::to_string(t);
            std::vector<double> x;
            for (std::size_t i : kept) x.push_back(samples.mse[i][t]);
            if (x.size() < 100) {
                c.flagged = true;
                c.note = "only " + std::to_string(x.size()) + " post-burn-in sweeps";
            } else {
                try {
                    c.z = geweke_z(x);
                    c.flagged = std::abs(*c.z) > 2.0;
                } catch (const std::invalid_argument& e) {
                    c.flagged = true;
                    c.note = e.what();
                }
            }
            if (c.flagged) {
                std::ostringstream msg;
                msg << "chain " << chain << " " << c.trace << ": ";
                if (c.z) msg << "|z| = " << std::abs(*c.z) << " > 2";
                else msg << c.note;
                out.flags.push_back(msg.str());
            }
            out.traces.push_back(std::move(c));
        }
    };
    for (const auto& c : fit.mtf_chains) check_traces(c.chain, c);
    for (const auto& c : fit.rmtf_chains) check_traces(c.chain, c);

    for (const auto& chain : fit.source_activity())
        if (!chain.empty()) out.chain_structure.push_back(component_structure(mean_activity(chain), threshold));
    if (!out.chain_structure.empty()) {
        out.structure = average_counts(out.chain_structure);
        out.effective_cardinality = effective_cardinality(out.structure, fit.hp.K);
    }

    if (!fit.rmtf_chains.empty()) {
        double sum = 0.0;
        Index count = 0;
        for (const auto& c : fit.rmtf_chains)
            for (const auto& s : c.snapshots) {
                sum += s.lambda.sum();
                count += s.lambda.size();
            }
        if (count > 0) out.lambda_mean = sum / static_cast<double>(count);
    }
    for (const auto& c : fit.mtf_chains)
        for (const auto& w : c.warnings) out.flags.push_back("chain " + std::to_string(c.chain) + " warning: " + w);
    for (const auto& c : fit.rmtf_chains)
        for (const auto& w : c.warnings) out.flags.push_back("chain " + std::to_string(c.chain) + " warning: " + w);
    return out;
}

void write_report(std::ostream& out, const RunReport& r, const std::vector<std::string>& view_names) {
    out << "model: " << r.model << '\n';
    out << "components: " << r.components << '\n';
    out << "shared: " << format_double(r.structure.shared) << '\n';
    for (std::size_t t = 0; t < r.structure.specific.size(); ++t) {
        const std::string name = t < view_names.size() ? view_names[t] : std::to_string(t);
        out << "specific[" << name << "]: " << format_double(r.structure.specific[t]) << '\n';
    }
    out << "empty: " << format_double(r.structure.empty) << '\n';
    out << "effective_cardinality: " << format_double(r.effective_cardinality) << '\n';
    if (r.lambda_mean) out << "lambda_mean: " << format_double(*r.lambda_mean) << '\n';
    for (const auto& c : r.traces) {
        out << "geweke chain=" << c.chain << " trace=" << c.trace << " z=";
        if (c.z) out << format_double(*c.z);
        else out << "NA";
        out << " flagged=" << (c.flagged ? "yes" : "no");
        if (!c.note.empty()) out << " note=\"" << c.note << '"';
        out << '\n';
    }
    out << "flags: " << r.flags.size() << '\n';
    for (const auto& f : r.flags) out << "flag: " << f << '\n';
}

}  // namespace bmtf
