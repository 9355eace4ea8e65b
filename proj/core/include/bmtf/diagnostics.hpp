#pragma once

#include "bmtf/fit.hpp"
#include "bmtf/structure.hpp"

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace bmtf {

/**
 * Variance of the sample mean of a (possibly autocorrelated) sequence,
 * estimated from floor(sqrt(n)) non-overlapping batch means. Trailing
 * elements that do not fill a batch are dropped.
 */
double batch_means_variance(std::span<const double> x);

/**
 * Geweke convergence z-score comparing the mean of the first `first_frac`
 * of a trace with the mean of the last `last_frac`, each with a batch-means
 * variance. Throws std::invalid_argument for traces shorter than 100,
 * invalid fractions, or zero variance in both segments.
 */
double geweke_z(std::span<const double> trace, double first_frac = 0.1, double last_frac = 0.5);

struct TraceCheck {
    Index chain = 0;
    std::string trace;  // e.g. "mse_view_0"
    std::optional<double> z;
    bool flagged = false;
    std::string note;
};

struct RunReport {
    std::string model;
    Index components = 0;
    std::vector<TraceCheck> traces;
    std::vector<ComponentCounts> chain_structure;
    ComponentCounts structure;  // mean over chains
    double effective_cardinality = 0.0;
    std::optional<double> lambda_mean;
    std::vector<std::string> flags;

    bool converged() const { return flags.empty(); }
};

/// K minus the number of empty components.
double effective_cardinality(const ComponentCounts& counts, Index k);

/**
 * Geweke z for each chain's per-view training-MSE trace after burn-in
 * (flagged when |z| > 2 or when fewer than 100 sweeps remain), component
 * structure per chain and averaged, effective cardinality, and the
 * posterior mean of lambda for relaxed fits.
 */
RunReport summarize_run(const FitResult& fit, double threshold = 0.5);

/// Plain `key: value` text, one trace per line.
void write_report(std::ostream& out, const RunReport& report, const std::vector<std::string>& view_names);

}  // namespace bmtf
