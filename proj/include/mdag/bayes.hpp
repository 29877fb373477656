#ifndef MDAG_BAYES_HPP
#define MDAG_BAYES_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "data.hpp"
#include "error.hpp"
#include "model.hpp"
#include "numeric.hpp"
#include "random.hpp"
#include "stats.hpp"

namespace mdag {

/// Normal-Wishart over a Gaussian's mean and precision W:
/// mu | W ~ N(mu0, (nu W)^-1), W ~ Wishart(alpha, tau^-1), so tau plays
/// the role of a prior scatter matrix.
struct NormalWishartPrior {
    double nu = 1.0;
    Eigen::VectorXd mu0;
    double alpha = 1.0;
    Eigen::MatrixXd tau;

    int dims() const { return static_cast<int>(mu0.size()); }

    void validate() const {
        const int n = dims();
        if (tau.rows() != n || tau.cols() != n) throw Error(ErrorCode::DimensionMismatch, "tau must be n x n");
        if (!(nu > 0.0)) throw Error(ErrorCode::InvalidArgument, "nu must be positive");
        if (!(alpha > n - 1)) throw Error(ErrorCode::InvalidArgument, "alpha must exceed n - 1");
        if (!tau.isApprox(tau.transpose(), 1e-12)) throw Error(ErrorCode::InvalidArgument, "tau must be symmetric");
        Eigen::LLT<Eigen::MatrixXd> llt(tau);
        if (llt.info() != Eigen::Success) throw Error(ErrorCode::InvalidArgument, "tau must be positive definite");
    }

    /// Identity scatter with alpha = nu + n.
    static NormalWishartPrior diffuse(const Eigen::VectorXd& mean, double nu = 2.0) {
        const auto n = mean.size();
        return {nu, mean, nu + static_cast<double>(n), Eigen::MatrixXd::Identity(n, n)};
    }

    /// Prior from a prior network's mean and covariance: the predictive
    /// covariance of a new case equals `cov`.
    static NormalWishartPrior from_prior_network(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, double nu,
                                                 double alpha) {
        const double n = static_cast<double>(mean.size());
        if (!(alpha > n + 1)) throw Error(ErrorCode::InvalidArgument, "prior-network construction needs alpha > n + 1");
        return {nu, mean, alpha, cov * (nu * (alpha - n - 1.0) / (nu + 1.0))};
    }

    /// Marginal prior of a variable subset: sub-blocks, alpha lowered by the
    /// number of dropped variables.
    NormalWishartPrior restrict_to(std::span<const int> idx) const {
        return {nu, gather(mu0, idx), alpha - dims() + static_cast<double>(idx.size()), gather(tau, idx)};
    }
};

using NormalWishartPosterior = NormalWishartPrior;

struct DirichletPrior {
    Eigen::VectorXd alphas;

    int size() const { return static_cast<int>(alphas.size()); }

    /// 0.01 for the noise component (when present, index 0) and 0.99/k
    /// for each of the k Gaussian components; 1/k each without noise.
    static DirichletPrior standard(int k, bool noise) {
        Eigen::VectorXd a(k + (noise ? 1 : 0));
        if (noise) {
            a[0] = 0.01;
            a.tail(k).setConstant(0.99 / k);
        } else {
            a.setConstant(1.0 / k);
        }
        return {a};
    }

    Eigen::VectorXd mean() const { return alphas / alphas.sum(); }
};

/// Conjugate update with a possibly fractional count.
inline NormalWishartPosterior posterior_update(const NormalWishartPrior& prior, const SuffStats& t) {
    if (t.dims() != prior.dims()) throw Error(ErrorCode::DimensionMismatch, "statistics and prior dimensions differ");
    if (t.count < 0.0) throw Error(ErrorCode::NegativeCount, "negative case count");
    if (t.count == 0.0) return prior;

    const double n_cases = t.count;
    const Eigen::MatrixXd scatter = t.centered();
    const double scale = std::max(1.0, scatter.diagonal().cwiseAbs().maxCoeff());
    if (min_eigenvalue(scatter) < -1e-8 * scale)
        throw Error(ErrorCode::NonPsdScatter, "centered scatter is not positive semidefinite");

    const Eigen::VectorXd xbar = t.sum / n_cases;
    const Eigen::VectorXd dev = xbar - prior.mu0;
    NormalWishartPosterior post;
    post.nu = prior.nu + n_cases;
    post.alpha = prior.alpha + n_cases;
    post.mu0 = (prior.nu * prior.mu0 + t.sum) / post.nu;
    post.tau = prior.tau + scatter + (prior.nu * n_cases / post.nu) * dev * dev.transpose();
    post.tau = 0.5 * (post.tau + post.tau.transpose());
    return post;
}

/// Log marginal likelihood of the saturated Gaussian on variable subsets,
/// sharing one posterior across every subset queried.
class FamilyScorer {
public:
    FamilyScorer(const NormalWishartPrior& prior, const SuffStats& t)
        : m_prior(prior), m_post(posterior_update(prior, t)), m_count(t.count) {}

    double count() const { return m_count; }
    const NormalWishartPosterior& posterior() const { return m_post; }

    double operator()(std::span<const int> family) const {
        if (family.empty()) throw Error(ErrorCode::EmptyFamily, "family must contain at least one variable");
        if (m_count == 0.0) return 0.0;
        const double d = static_cast<double>(family.size());
        const double alpha = m_prior.alpha - m_prior.dims() + d;
        const double alpha_post = alpha + m_count;
        const auto tau = factorize(gather(m_prior.tau, family), ErrorCode::SingularParentBlock, "prior tau block is singular");
        const auto tau_post = factorize(gather(m_post.tau, family), ErrorCode::SingularParentBlock, "posterior tau block is singular");
        const int di = static_cast<int>(family.size());
        return -0.5 * m_count * d * std::log(std::numbers::pi) + 0.5 * d * std::log(m_prior.nu / m_post.nu) +
               log_multivariate_gamma(0.5 * alpha_post, di) - log_multivariate_gamma(0.5 * alpha, di) +
               0.5 * alpha * log_det(tau) - 0.5 * alpha_post * log_det(tau_post);
    }

    /// Family score of child given parents: log p(d^{child u Pa}) - log p(d^{Pa}).
    double local(int child, std::span<const int> parents) const {
        if (std::find(parents.begin(), parents.end(), child) != parents.end())
            throw Error(ErrorCode::ChildInParents, "child " + std::to_string(child) + " listed among its parents");
        std::vector<int> family(parents.begin(), parents.end());
        family.push_back(child);
        std::sort(family.begin(), family.end());
        const double joint = (*this)(family);
        return parents.empty() ? joint : joint - (*this)(parents);
    }

private:
    NormalWishartPrior m_prior;
    NormalWishartPosterior m_post;
    double m_count;
};

inline double family_marginal_loglik(const NormalWishartPrior& prior, const SuffStats& t, std::span<const int> family) {
    return FamilyScorer(prior, t)(family);
}

inline double local_score(const NormalWishartPrior& prior, const SuffStats& t, int child, std::span<const int> parents) {
    return FamilyScorer(prior, t).local(child, parents);
}

inline double dirichlet_log_marglik(const DirichletPrior& prior, const Eigen::VectorXd& counts) {
    if (counts.size() != prior.alphas.size()) throw Error(ErrorCode::DimensionMismatch, "count and hyperparameter lengths differ");
    double out = std::lgamma(prior.alphas.sum()) - std::lgamma(prior.alphas.sum() + counts.sum());
    for (Eigen::Index c = 0; c < counts.size(); ++c) {
        if (counts[c] < 0.0) throw Error(ErrorCode::NegativeCount, "negative component count");
        out += std::lgamma(prior.alphas[c] + counts[c]) - std::lgamma(prior.alphas[c]);
    }
    return out;
}

/// Posterior mode of the mixture weights, or the posterior mean when some
/// alpha + N - 1 is not positive.
inline Eigen::VectorXd dirichlet_map(const DirichletPrior& prior, const Eigen::VectorXd& counts) {
    const Eigen::VectorXd a = prior.alphas + counts;
    if ((a.array() - 1.0 > 0.0).all()) {
        const Eigen::VectorXd mode = a.array() - 1.0;
        return mode / mode.sum();
    }
    return a / a.sum();
}

/// Divisor turning a posterior scatter into the modal covariance.
inline double mode_divisor(const NormalWishartPosterior& post) { return post.alpha + post.dims() + 1.0; }

/// Regression of each node on its parents read off a scatter-like matrix
/// `cov` and mean `mean`; variances are schur complements over `divisor`.
inline GaussianDag regressions_from(const DagStructure& structure, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                    double divisor) {
    const int n = structure.size();
    Eigen::VectorXd intercept(n), variance(n);
    std::vector<Eigen::VectorXd> coef(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto& ps = structure.parents(i);
        if (ps.empty()) {
            coef[i].resize(0);
            intercept[i] = mean[i];
            variance[i] = std::max(cov(i, i) / divisor, 1e-12);
            continue;
        }
        const int child[] = {i};
        const auto llt = factorize(gather(cov, ps), ErrorCode::SingularParentBlock, "parent block is singular");
        const Eigen::VectorXd cross = gather(cov, ps, child).col(0);
        coef[i] = llt.solve(cross);
        intercept[i] = mean[i] - coef[i].dot(gather(mean, ps));
        variance[i] = std::max((cov(i, i) - cross.dot(coef[i])) / divisor, 1e-12);
    }
    return GaussianDag(structure, std::move(intercept), std::move(coef), std::move(variance));
}

/// MAP node regressions for `structure` given expected statistics.
inline GaussianDag map_parameters(const NormalWishartPrior& prior, const SuffStats& t, const DagStructure& structure) {
    if (structure.size() != prior.dims()) throw Error(ErrorCode::DimensionMismatch, "structure and prior dimensions differ");
    const auto post = posterior_update(prior, t);
    return regressions_from(structure, post.mu0, post.tau, mode_divisor(post));
}

/// Log posterior of the node regressions (up to a constant) that
/// map_parameters maximizes.
inline double map_objective(const NormalWishartPosterior& post, const GaussianDag& g) {
    const double divisor = mode_divisor(post);
    double out = 0.0;
    for (int i = 0; i < g.size(); ++i) {
        const auto& ps = g.structure().parents(i);
        const auto& b = g.coefficients(i);
        double quad = post.tau(i, i);
        double resid = post.mu0[i] - g.intercept()[i];
        for (std::size_t a = 0; a < ps.size(); ++a) {
            const double ba = b[static_cast<Eigen::Index>(a)];
            quad -= 2.0 * ba * post.tau(ps[a], i);
            resid -= ba * post.mu0[ps[a]];
            for (std::size_t c = 0; c < ps.size(); ++c) quad += ba * b[static_cast<Eigen::Index>(c)] * post.tau(ps[a], ps[c]);
        }
        quad += post.nu * resid * resid;
        const double v = g.variance()[i];
        out += -0.5 * divisor * std::log(v) - 0.5 * quad / v;
    }
    return out;
}

/// Linear-Gaussian parameters of `structure` reproducing the given joint
/// exactly when the structure can represent it.
inline GaussianDag gaussian_dag_from_moments(const DagStructure& structure, const GaussianMoments& joint) {
    return regressions_from(structure, joint.mean, joint.covariance, 1.0);
}

/// Normal-Wishart whose mode is the complete-case maximum-likelihood mean
/// and covariance, with nu = ess and alpha = ess + n + 1.
inline NormalWishartPrior data_informed_prior(const Dataset& data, double ess) {
    if (!(ess > 0.0)) throw Error(ErrorCode::InvalidArgument, "equivalent sample size must be positive");
    const auto n = data.dims();
    std::vector<Eigen::Index> rows;
    for (Eigen::Index r = 0; r < data.cases(); ++r)
        if (!data.values.row(r).hasNaN()) rows.push_back(r);
    if (static_cast<Eigen::Index>(rows.size()) < n + 2)
        throw Error(ErrorCode::InsufficientData, "need at least n + 2 complete cases, have " + std::to_string(rows.size()));
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    for (auto r : rows) mean += data.values.row(r).transpose();
    mean /= static_cast<double>(rows.size());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    for (auto r : rows) {
        const Eigen::VectorXd d = data.values.row(r).transpose() - mean;
        cov.noalias() += d * d.transpose();
    }
    cov /= static_cast<double>(rows.size());
    NormalWishartPrior out;
    out.nu = ess;
    out.mu0 = mean;
    out.alpha = ess + static_cast<double>(n) + 1.0;
    out.tau = cov * mode_divisor(out);
    return out;
}

/// One draw of (mean, covariance) from a Normal-Wishart (Bartlett construction).
inline GaussianMoments draw_parameters(const NormalWishartPrior& prior, Rng& rng) {
    const int n = prior.dims();
    const auto tau_llt = factorize(prior.tau, ErrorCode::SingularParentBlock, "tau is singular");
    const Eigen::MatrixXd scale = tau_llt.solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(scale).matrixL();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        a(i, i) = std::sqrt(draw_chi_squared(rng, prior.alpha - i));
        for (int j = 0; j < i; ++j) a(i, j) = draw_normal(rng);
    }
    const Eigen::MatrixXd la = l * a;
    const Eigen::MatrixXd precision = la * la.transpose();
    Eigen::MatrixXd cov = precision.llt().solve(Eigen::MatrixXd::Identity(n, n));
    cov = 0.5 * (cov + cov.transpose());
    const Eigen::MatrixXd mean_chol = Eigen::LLT<Eigen::MatrixXd>(cov / prior.nu).matrixL();
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = draw_normal(rng);
    return {prior.mu0 + mean_chol * z, cov};
}

}  // namespace mdag

#endif  // MDAG_BAYES_HPP
