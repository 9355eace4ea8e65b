#pragma once

#include "bmtf/tensor.hpp"

#include <Eigen/Cholesky>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace bmtf {

/// Raised when a precision matrix cannot be factorized.
class NumericError : public std::runtime_error {
  public:
    NumericError(const std::string& what, Index leading_minor)
        : std::runtime_error(what), leading_minor_(leading_minor) {}
    /// 0-based index of the first non-positive pivot, or -1 if unknown.
    Index leading_minor() const { return leading_minor_; }

  private:
    Index leading_minor_;
};

/**
 * Seeded random stream owned by one chain. Identical (seed, stream_id) pairs
 * give identical sequences; the engine is std::mt19937_64 and every variate
 * transform is implemented here, so sequences do not depend on the standard
 * library's distribution classes.
 */
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    /// Uniform on the open interval (0, 1).
    double uniform();
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }
    Vector normal_vector(Index n);
    Matrix normal_matrix(Index rows, Index cols);

    std::uint64_t next_u64() { return engine_(); }

  private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/**
 * Gamma(shape, rate): density proportional to x^(shape-1) exp(-rate x),
 * mean shape / rate. Results are clamped below at the smallest normal
 * double so the draw is always strictly positive.
 */
double draw_gamma(double shape, double rate, RngStream& rng);

/// Beta(a, b) with mean a / (a + b).
double draw_beta(double a, double b, RngStream& rng);

/// 1 with probability logistic(log_odds); +-infinity are deterministic.
int draw_bernoulli_logodds(double log_odds, RngStream& rng);

/// log(1 + exp(x)) without overflow.
double log1p_exp(double x);

/**
 * Cholesky factor of a Gaussian precision matrix. Draws from
 * N(P^-1 h, P^-1) use the factor only; the inverse is never formed.
 */
class GaussianPrecision {
  public:
    /// Throws NumericError if `precision` is not symmetric positive definite.
    explicit GaussianPrecision(const Matrix& precision);

    Index dim() const { return llt_.rows(); }
    Vector mean(const Vector& h) const { return llt_.solve(h); }
    Vector draw(const Vector& h, RngStream& rng) const;
    /// Row i of the result is a draw with linear term row i of `h`.
    Matrix draw_rows(const Matrix& h, RngStream& rng) const;
    Matrix covariance() const;

  private:
    Eigen::LLT<Matrix> llt_;
};

/// Factorizes `precision`, retrying once with 1e-8 * trace / K added to the
/// diagonal before giving up.
GaussianPrecision factor_with_jitter(const Matrix& precision);

Vector draw_mvn_precision(const Vector& h, const Matrix& precision, RngStream& rng);

}  // namespace bmtf
