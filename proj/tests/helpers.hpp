#ifndef MDAG_TEST_HELPERS_HPP
#define MDAG_TEST_HELPERS_HPP

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include <mdag/mdag.hpp>

namespace testutil {

inline mdag::DagStructure random_dag(int n, mdag::Rng& rng, double p = 0.5) {
    const auto order = mdag::draw_permutation(rng, static_cast<std::size_t>(n));
    std::vector<std::pair<int, int>> arcs;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            if (mdag::draw_uniform(rng, 0.0, 1.0) < p) arcs.emplace_back(static_cast<int>(order[a]), static_cast<int>(order[b]));
    return mdag::DagStructure::from_arcs(n, arcs);
}

inline mdag::GaussianDag random_gaussian_dag(const mdag::DagStructure& s, mdag::Rng& rng) {
    const int n = s.size();
    Eigen::VectorXd m(n), v(n);
    std::vector<Eigen::VectorXd> coef;
    for (int i = 0; i < n; ++i) {
        m[i] = mdag::draw_uniform(rng, -2.0, 2.0);
        v[i] = mdag::draw_uniform(rng, 0.3, 2.0);
        Eigen::VectorXd b(static_cast<Eigen::Index>(s.parents(i).size()));
        for (Eigen::Index j = 0; j < b.size(); ++j) b[j] = mdag::draw_uniform(rng, -1.0, 1.0);
        coef.push_back(b);
    }
    return {s, m, coef, v};
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, mdag::Rng& rng) {
    Eigen::MatrixXd out(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = mdag::draw_normal(rng);
    return out;
}

inline Eigen::MatrixXd random_spd(int n, mdag::Rng& rng) {
    const Eigen::MatrixXd a = random_matrix(n, n, rng);
    return a * a.transpose() + Eigen::MatrixXd::Identity(n, n);
}

inline double mvn_log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    const Eigen::VectorXd z = llt.matrixL().solve(x - mean);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < cov.rows(); ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    return -0.5 * (static_cast<double>(x.size()) * mdag::kLog2Pi + logdet + z.squaredNorm());
}

inline mdag::SuffStats stats_of(const Eigen::MatrixXd& x) {
    auto t = mdag::SuffStats::zero(static_cast<int>(x.cols()));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const Eigen::VectorXd row = x.row(r).transpose();
        t.count += 1.0;
        t.sum += row;
        t.sum_outer += row * row.transpose();
    }
    return t;
}

inline double phi(double x, double mean = 0.0, double var = 1.0) {
    return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * M_PI * var);
}

// Multivariate t predictive of a Normal-Wishart for one new case.
inline double predictive_log_density(const mdag::NormalWishartPrior& p, const Eigen::VectorXd& x) {
    const double d = static_cast<double>(x.size());
    const double dof = p.alpha - d + 1.0;
    const Eigen::MatrixXd scale = p.tau * (p.nu + 1.0) / (p.nu * dof);
    const Eigen::LLT<Eigen::MatrixXd> llt(scale);
    const Eigen::VectorXd z = llt.matrixL().solve(x - p.mu0);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < scale.rows(); ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    return std::lgamma((dof + d) / 2.0) - std::lgamma(dof / 2.0) - 0.5 * d * std::log(dof * M_PI) - 0.5 * logdet -
           0.5 * (dof + d) * std::log1p(z.squaredNorm() / dof);
}

// Single-case conjugate update in rank-one form.
inline mdag::NormalWishartPrior absorb(const mdag::NormalWishartPrior& p, const Eigen::VectorXd& x) {
    mdag::NormalWishartPrior out = p;
    const Eigen::VectorXd dev = x - p.mu0;
    out.tau = p.tau + (p.nu / (p.nu + 1.0)) * dev * dev.transpose();
    out.mu0 = (p.nu * p.mu0 + x) / (p.nu + 1.0);
    out.nu = p.nu + 1.0;
    out.alpha = p.alpha + 1.0;
    return out;
}

inline double sequential_oracle(mdag::NormalWishartPrior p, const Eigen::MatrixXd& x) {
    double out = 0.0;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const Eigen::VectorXd row = x.row(r).transpose();
        out += predictive_log_density(p, row);
        p = absorb(p, row);
    }
    return out;
}

inline mdag::NormalWishartPrior random_prior(int n, mdag::Rng& rng) {
    mdag::NormalWishartPrior p;
    p.nu = mdag::draw_uniform(rng, 0.5, 5.0);
    p.mu0 = random_matrix(n, 1, rng);
    p.alpha = n + 1 + mdag::draw_uniform(rng, 0.5, 6.0);
    p.tau = random_spd(n, rng);
    return p;
}

}  // namespace testutil

#endif
