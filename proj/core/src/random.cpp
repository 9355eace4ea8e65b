#include "bmtf/random.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace bmtf {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr double kMinPositive = std::numeric_limits<double>::min();

// First non-positive pivot of an unpivoted Cholesky, or -1.
Index failing_pivot(const Matrix& a) {
    const Index k = a.rows();
    Matrix l = Matrix::Zero(k, k);
    for (Index j = 0; j < k; ++j) {
        double diag = a(j, j) - l.row(j).head(j).squaredNorm();
        if (!(diag > 0.0)) return j;
        l(j, j) = std::sqrt(diag);
        for (Index i = j + 1; i < k; ++i)
            l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
    return -1;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id),
      engine_(splitmix64(seed ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL))) {}

double RngStream::uniform() {
    // 53 random bits, shifted off zero.
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

Vector RngStream::normal_vector(Index n) {
    Vector out(n);
    for (Index i = 0; i < n; ++i) out[i] = normal();
    return out;
}

Matrix RngStream::normal_matrix(Index rows, Index cols) {
    Matrix out(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) out(i, j) = normal();
    return out;
}

double draw_gamma(double shape, double rate, RngStream& rng) {
    if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate)) {
        std::ostringstream msg;
        msg << "draw_gamma: shape and rate must be positive and finite (shape=" << shape
            << ", rate=" << rate << ")";
        throw std::invalid_argument(msg.str());
    }
    // Marsaglia & Tsang; shape < 1 is boosted by U^(1/shape), applied in log space.
    const double a = shape < 1.0 ? shape + 1.0 : shape;
    const double d = a - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    double g;
    for (;;) {
        double x, v;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) {
            g = d * v;
            break;
        }
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
            g = d * v;
            break;
        }
    }
    double log_g = std::log(g);
    if (shape < 1.0) log_g += std::log(rng.uniform()) / shape;
    const double out = std::exp(log_g - std::log(rate));
    return out < kMinPositive ? kMinPositive : out;
}

double draw_beta(double a, double b, RngStream& rng) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("draw_beta: parameters must be positive");
    const double x = draw_gamma(a, 1.0, rng);
    const double y = draw_gamma(b, 1.0, rng);
    return x / (x + y);
}

double log1p_exp(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

int draw_bernoulli_logodds(double log_odds, RngStream& rng) {
    if (std::isnan(log_odds)) throw std::invalid_argument("draw_bernoulli_logodds: NaN log-odds");
    if (log_odds == std::numeric_limits<double>::infinity()) return 1;
    if (log_odds == -std::numeric_limits<double>::infinity()) return 0;
    const double p = log_odds >= 0.0 ? 1.0 / (1.0 + std::exp(-log_odds))
                                     : std::exp(log_odds) / (1.0 + std::exp(log_odds));
    return rng.uniform() < p ? 1 : 0;
}

GaussianPrecision::GaussianPrecision(const Matrix& precision) : llt_(precision) {
    if (llt_.info() != Eigen::Success || !llt_.matrixLLT().diagonal().allFinite()) {
        const Index pivot = failing_pivot(precision);
        std::ostringstream msg;
        msg << "precision matrix is not positive definite (leading minor " << pivot << ")";
        throw NumericError(msg.str(), pivot);
    }
}

Vector GaussianPrecision::draw(const Vector& h, RngStream& rng) const {
    Vector eps = rng.normal_vector(dim());
    return llt_.solve(h) + llt_.matrixU().solve(eps);
}

Matrix GaussianPrecision::draw_rows(const Matrix& h, RngStream& rng) const {
    Matrix eps = rng.normal_matrix(dim(), h.rows());
    Matrix out = llt_.solve(h.transpose());
    out += llt_.matrixU().solve(eps);
    return out.transpose();
}

Matrix GaussianPrecision::covariance() const {
    return llt_.solve(Matrix::Identity(dim(), dim()));
}

GaussianPrecision factor_with_jitter(const Matrix& precision) {
    try {
        return GaussianPrecision(precision);
    } catch (const NumericError&) {
        Matrix jittered = precision;
        const double k = static_cast<double>(precision.rows());
        jittered.diagonal().array() += 1e-8 * precision.trace() / k;
        return GaussianPrecision(jittered);
    }
}

Vector draw_mvn_precision(const Vector& h, const Matrix& precision, RngStream& rng) {
    return factor_with_jitter(precision).draw(h, rng);
}

}  // namespace bmtf
