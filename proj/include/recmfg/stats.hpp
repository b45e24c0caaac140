// Small statistics toolbox: moments with standard errors, quantiles,
// 1-Wasserstein distance between empirical samples, and least squares.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace recmfg {

struct SampleStats {
    std::size_t n = 0;
    double mean = 0.0;
    double variance = 0.0; // unbiased
    double se = 0.0;       // standard error of the mean
};

inline SampleStats sample_stats(std::span<const double> xs) {
    SampleStats s;
    s.n = xs.size();
    if (s.n == 0) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double x : xs) {
            const double d = x - s.mean;
            ss += d * d;
        }
        s.variance = ss / static_cast<double>(s.n - 1);
        s.se = std::sqrt(s.variance / static_cast<double>(s.n));
    }
    return s;
}

// Linear-interpolated empirical quantile, q in [0,1]. Sorts a copy.
inline double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) throw std::invalid_argument("quantile: empty sample");
    std::sort(xs.begin(), xs.end());
    const double pos = q * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return xs[lo] + frac * (xs[hi] - xs[lo]);
}

// W1 between two empirical measures: integral of |F^-1 - G^-1| over (0,1),
// evaluated exactly on the union of probability breakpoints. Sample sizes
// may differ.
inline double wasserstein1(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("wasserstein1: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double mass = 0.0, dist = 0.0;
    while (i < a.size() && j < b.size()) {
        const double next = std::min((i + 1) / na, (j + 1) / nb);
        dist += (next - mass) * std::abs(a[i] - b[j]);
        mass = next;
        if ((i + 1) / na <= next + 1e-15) ++i;
        if ((j + 1) / nb <= next + 1e-15) ++j;
    }
    return dist;
}

// Ordinary least squares via normal equations with a small ridge for
// degenerate designs. Features per row, column-major-free (row vector API).
class LeastSquares {
public:
    explicit LeastSquares(std::size_t n_features, double ridge = 1e-10)
        : nf_(n_features), ridge_(ridge), xtx_(n_features * n_features, 0.0),
          xty_(n_features, 0.0) {}

    void add(std::span<const double> row, double y) {
        if (row.size() != nf_) throw std::invalid_argument("LeastSquares: row size");
        for (std::size_t i = 0; i < nf_; ++i) {
            xty_[i] += row[i] * y;
            for (std::size_t j = i; j < nf_; ++j) xtx_[i * nf_ + j] += row[i] * row[j];
        }
        ++rows_;
    }

    std::size_t rows() const { return rows_; }

    // Solves (X'X + ridge*tr(X'X)/nf * I) beta = X'y by Cholesky.
    std::vector<double> solve() const {
        std::vector<double> m(xtx_);
        for (std::size_t i = 0; i < nf_; ++i)
            for (std::size_t j = 0; j < i; ++j) m[i * nf_ + j] = m[j * nf_ + i];
        double trace = 0.0;
        for (std::size_t i = 0; i < nf_; ++i) trace += m[i * nf_ + i];
        const double reg = ridge_ * std::max(trace / static_cast<double>(nf_), 1.0);
        for (std::size_t i = 0; i < nf_; ++i) m[i * nf_ + i] += reg;

        // Cholesky factorization in place: m = L L'.
        for (std::size_t i = 0; i < nf_; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double sum = m[i * nf_ + j];
                for (std::size_t k = 0; k < j; ++k) sum -= m[i * nf_ + k] * m[j * nf_ + k];
                if (i == j) {
                    if (sum <= 0.0) throw std::runtime_error("LeastSquares: not SPD");
                    m[i * nf_ + i] = std::sqrt(sum);
                } else {
                    m[i * nf_ + j] = sum / m[j * nf_ + j];
                }
            }
        }
        std::vector<double> beta(xty_);
        for (std::size_t i = 0; i < nf_; ++i) {
            for (std::size_t k = 0; k < i; ++k) beta[i] -= m[i * nf_ + k] * beta[k];
            beta[i] /= m[i * nf_ + i];
        }
        for (std::size_t ii = nf_; ii-- > 0;) {
            for (std::size_t k = ii + 1; k < nf_; ++k) beta[ii] -= m[k * nf_ + ii] * beta[k];
            beta[ii] /= m[ii * nf_ + ii];
        }
        return beta;
    }

private:
    std::size_t nf_;
    double ridge_;
    std::size_t rows_ = 0;
    std::vector<double> xtx_; // upper triangle filled
    std::vector<double> xty_;
};

// Slope of y against x by simple OLS (used for log-log rate estimates).
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("ols_slope: need matched samples, n >= 2");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace recmfg
