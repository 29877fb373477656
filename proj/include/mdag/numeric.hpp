#ifndef MDAG_NUMERIC_HPP
#define MDAG_NUMERIC_HPP

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"

namespace mdag {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/// Diagonal jitter added before the single refactorization retry.
inline constexpr double kJitter = 1e-9;

inline double log_sum_exp(std::span<const double> values) {
    double hi = kNegInf;
    for (double v : values) hi = std::max(hi, v);
    if (hi == kNegInf) return kNegInf;
    double acc = 0.0;
    for (double v : values) acc += std::exp(v - hi);
    return hi + std::log(acc);
}

/// log of the multivariate Gamma function Gamma_d(a).
inline double log_multivariate_gamma(double a, int d) {
    double out = 0.25 * d * (d - 1) * std::log(std::numbers::pi);
    for (int j = 1; j <= d; ++j) out += std::lgamma(a + 0.5 * (1 - j));
    return out;
}

inline double log_normal_pdf(double x, double mean, double variance) {
    const double z = x - mean;
    return -0.5 * (kLog2Pi + std::log(variance) + z * z / variance);
}

/// Cholesky factor of `a`, retried once with kJitter on the diagonal.
/// Throws `failure` when the retry also fails.
inline Eigen::LLT<Eigen::MatrixXd> factorize(const Eigen::MatrixXd& a, ErrorCode failure, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) return llt;
    Eigen::MatrixXd jittered = a;
    jittered.diagonal().array() += kJitter;
    llt.compute(jittered);
    if (llt.info() != Eigen::Success) throw Error(failure, what);
    return llt;
}

inline double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    const auto& l = llt.matrixLLT();
    double out = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) out += std::log(l(i, i));
    return 2.0 * out;
}

inline Eigen::VectorXd gather(const Eigen::VectorXd& v, std::span<const int> idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[idx[i]];
    return out;
}

inline Eigen::MatrixXd gather(const Eigen::MatrixXd& m, std::span<const int> rows, std::span<const int> cols) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c)
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(rows[r], cols[c]);
    return out;
}

inline Eigen::MatrixXd gather(const Eigen::MatrixXd& m, std::span<const int> idx) { return gather(m, idx, idx); }

inline double min_eigenvalue(const Eigen::MatrixXd& symmetric) {
    if (symmetric.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

}  // namespace mdag

#endif  // MDAG_NUMERIC_HPP
