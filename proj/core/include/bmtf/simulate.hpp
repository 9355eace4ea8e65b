#pragma once

#include "bmtf/collection.hpp"
#include "bmtf/mtf.hpp"
#include "bmtf/random.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bmtf {

enum class Scenario { cp, relaxed_cp, continuum };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

/**
 * Sizes and scales of a synthetic matrix + tensor pair. Component order in
 * the truth is shared first, then matrix-specific, then tensor-specific.
 */
struct SimSpec {
    Scenario scenario = Scenario::cp;
    Index N = 300;
    Index D1 = 50;  // matrix features
    Index D2 = 50;  // tensor features
    Index L = 30;   // tensor slabs
    Index k_shared = 1;
    Index k_matrix = 2;
    Index k_tensor = 8;
    /// Continuum only: 1 is fully trilinear, 0 fully bilinear.
    double rho = 1.0;
    /// Continuum only: per-element variance of the noiseless signal.
    double signal_var = 8.0;
    double noise_var = 1.0;
    /// Continuum only: size of the held-out test set.
    Index n_test = 100;
    std::uint64_t seed = 1;

    /// The continuum defaults: N = 15 training samples, 100 test samples.
    static SimSpec continuum_defaults();
    /// Throws std::invalid_argument for negative counts, rho outside [0, 1],
    /// non-positive sizes or variances, or L < 2 for the relaxed scenario.
    void validate() const;
    Index components() const { return k_shared + k_matrix + k_tensor; }
};

/// Ground truth behind a simulated collection (view 0 matrix, view 1 tensor).
struct SimTruth {
    Matrix z;                               // N x K
    std::vector<Matrix> v;                  // per view, D x K
    Matrix u;                               // L x K (tensor view)
    IndicatorMatrix h;                      // 2 x K
    std::vector<std::vector<Matrix>> slab_loadings;  // [view][slab], D x K
    std::vector<Tensor3> noise;             // per view
    std::vector<double> powers;             // relaxed scenario: exponent per slab
    Matrix z_test;                          // continuum: n_test x K
    double rho = 1.0;

    /// Tensor-specific columns of the tensor view's V.
    std::vector<Vector> tensor_specific_loadings() const;
};

struct SimulatedData {
    Collection train;
    SimTruth truth;
    /// Continuum only: test inputs with slab 0 of the tensor masked, and
    /// the same test samples fully observed.
    std::optional<Collection> test;
    std::optional<Collection> test_truth;
};

/// sin(2 pi d / D) for d = 0..D-1, standardized to mean 0 and variance 1.
Vector standardized_sine(Index d);
/// |v|^p sign(v) elementwise.
Vector signed_power(const Vector& v, double p);
/// p_1 = 0.5, p_2 = 1.5, then L - 2 values evenly spaced on [0.3, 1.7].
std::vector<double> distortion_powers(Index L);

SimulatedData gen_cp(const SimSpec& spec);
SimulatedData gen_relaxed_cp(const SimSpec& spec);
SimulatedData gen_continuum(const SimSpec& spec);
/// Dispatches on spec.scenario.
SimulatedData simulate(const SimSpec& spec);

/// Truth as long-format CSV (param,block,a,b,c,value) plus a small manifest.
void write_truth(const std::filesystem::path& dir, const SimTruth& truth);
SimTruth read_truth(const std::filesystem::path& dir);

}  // namespace bmtf
