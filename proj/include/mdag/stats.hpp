#ifndef MDAG_STATS_HPP
#define MDAG_STATS_HPP

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "data.hpp"
#include "error.hpp"
#include "model.hpp"
#include "numeric.hpp"

namespace mdag {

/// Expected case count, sum and sum of outer products for one mixture index.
struct SuffStats {
    double count = 0.0;
    Eigen::VectorXd sum;
    Eigen::MatrixXd sum_outer;

    static SuffStats zero(int n) { return {0.0, Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)}; }

    int dims() const { return static_cast<int>(sum.size()); }

    /// Scatter about the mean, S - R R^T / N.
    Eigen::MatrixXd centered() const {
        if (count <= 0.0) return Eigen::MatrixXd::Zero(dims(), dims());
        Eigen::MatrixXd out = sum_outer - sum * sum.transpose() / count;
        return 0.5 * (out + out.transpose());
    }

    SuffStats& operator+=(const SuffStats& other) {
        count += other.count;
        sum += other.sum;
        sum_outer += other.sum_outer;
        return *this;
    }

    /// Statistics restricted to a subset of the variables.
    SuffStats restrict_to(std::span<const int> idx) const { return {count, gather(sum, idx), gather(sum_outer, idx)}; }
};

/// Expected complete model sufficient statistics: one triple per mixture
/// index, in the model's mixture order. The noise triple only carries a count.
struct Ecmss {
    std::vector<SuffStats> triples;
    double total_cases = 0.0;

    static Ecmss zero(int mixture_size, int n) {
        Ecmss out;
        out.triples.assign(static_cast<std::size_t>(mixture_size), SuffStats::zero(n));
        return out;
    }

    int mixture_size() const { return static_cast<int>(triples.size()); }
    int dims() const { return triples.empty() ? 0 : triples.front().dims(); }

    Eigen::VectorXd counts() const {
        Eigen::VectorXd out(mixture_size());
        for (int c = 0; c < mixture_size(); ++c) out[c] = triples[c].count;
        return out;
    }
};

inline Ecmss merge(const Ecmss& a, const Ecmss& b) {
    if (a.mixture_size() != b.mixture_size() || a.dims() != b.dims())
        throw Error(ErrorCode::ShapeMismatch, "statistics have different component counts or dimensions");
    Ecmss out = a;
    for (int c = 0; c < out.mixture_size(); ++c) out.triples[c] += b.triples[c];
    out.total_cases += b.total_cases;
    return out;
}

/// Statistics of one complete case (x, c) among k mixture components.
inline Ecmss complete_case_stats(const Eigen::VectorXd& x, int component, int k) {
    if (component < 0 || component >= k)
        throw Error(ErrorCode::BadComponentIndex,
                    "component " + std::to_string(component) + " outside [0, " + std::to_string(k) + ")");
    const int n = static_cast<int>(x.size());
    Ecmss out = Ecmss::zero(k, n);
    out.triples[component] = {1.0, x, x * x.transpose()};
    out.total_cases = 1.0;
    return out;
}

/// Marginal over the observed coordinates and conditional of the missing
/// ones, for one Gaussian and one observation pattern.
class ObservedBlock {
public:
    ObservedBlock(const GaussianMoments& joint, std::vector<int> observed, std::vector<int> missing)
        : m_observed(std::move(observed)), m_missing(std::move(missing)) {
        m_mean_o = gather(joint.mean, m_observed);
        m_mean_m = gather(joint.mean, m_missing);
        const Eigen::MatrixXd cov_mm = gather(joint.covariance, m_missing);
        if (m_observed.empty()) {
            m_cond_cov = cov_mm;
            m_gain.resize(static_cast<Eigen::Index>(m_missing.size()), 0);
            return;
        }
        m_llt = factorize(gather(joint.covariance, m_observed), ErrorCode::SingularObservedBlock,
                          "observed covariance block is singular");
        m_log_norm = -0.5 * (static_cast<double>(m_observed.size()) * kLog2Pi + log_det(m_llt));
        const Eigen::MatrixXd cov_om = gather(joint.covariance, m_observed, m_missing);
        m_gain = m_llt.solve(cov_om).transpose();
        m_cond_cov = cov_mm - m_gain * cov_om;
        m_cond_cov = 0.5 * (m_cond_cov + m_cond_cov.transpose());
    }

    const std::vector<int>& observed() const { return m_observed; }
    const std::vector<int>& missing() const { return m_missing; }

    double log_density(const Eigen::VectorXd& x) const {
        if (m_observed.empty()) return 0.0;
        const Eigen::VectorXd z = gather(x, m_observed) - m_mean_o;
        const Eigen::VectorXd w = m_llt.matrixL().solve(z);
        return m_log_norm - 0.5 * w.squaredNorm();
    }

    Eigen::VectorXd conditional_mean(const Eigen::VectorXd& x) const {
        if (m_observed.empty()) return m_mean_m;
        return m_mean_m + m_gain * (gather(x, m_observed) - m_mean_o);
    }

    const Eigen::MatrixXd& conditional_covariance() const { return m_cond_cov; }

private:
    std::vector<int> m_observed;
    std::vector<int> m_missing;
    Eigen::VectorXd m_mean_o;
    Eigen::VectorXd m_mean_m;
    Eigen::LLT<Eigen::MatrixXd> m_llt;
    double m_log_norm = 0.0;
    Eigen::MatrixXd m_gain;
    Eigen::MatrixXd m_cond_cov;
};

/// Observation pattern of one case.
struct ObservationMask {
    std::string key;
    std::vector<int> observed;
    std::vector<int> missing;

    explicit ObservationMask(const Eigen::VectorXd& x) {
        key.resize(static_cast<std::size_t>(x.size()));
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            const bool obs = !std::isnan(x[j]);
            key[static_cast<std::size_t>(j)] = obs ? '1' : '0';
            (obs ? observed : missing).push_back(static_cast<int>(j));
        }
    }

    bool all_observed() const { return missing.empty(); }
    bool is_observed(Eigen::Index j) const { return key[static_cast<std::size_t>(j)] == '1'; }
};

/// Per-sweep cache of implied joints and observed-block factorizations,
/// keyed by observation pattern. Borrows the model; not thread-safe.
class SweepCache {
public:
    explicit SweepCache(const MdagModel& model) : m_model(&model) {
        for (const auto& g : model.components()) m_joints.push_back(to_multivariate_gaussian(g));
        m_blocks.resize(m_joints.size());
    }

    const MdagModel& model() const { return *m_model; }
    const GaussianMoments& joint(int component) const { return m_joints[component]; }

    const ObservedBlock& block(int component, const ObservationMask& mask) {
        auto& table = m_blocks[component];
        auto it = table.find(mask.key);
        if (it == table.end())
            it = table.emplace(mask.key, ObservedBlock(m_joints[component], mask.observed, mask.missing)).first;
        return it->second;
    }

    /// log p(observed part of x | Gaussian component c).
    double component_log_density(int component, const Eigen::VectorXd& x, const ObservationMask& mask) {
        if (mask.all_observed()) return mdag::component_log_density(m_model->components()[component], x);
        return block(component, mask).log_density(x);
    }

    /// log pi_c + log p(observed part | c) for every mixture index.
    std::vector<double> log_joint_terms(const Eigen::VectorXd& x, const ObservationMask& mask) {
        const auto& model = *m_model;
        std::vector<double> terms(static_cast<std::size_t>(model.mixture_size()), kNegInf);
        if (model.has_noise() && model.weights()[0] > 0.0)
            terms[0] = std::log(model.weights()[0]) +
                       model.noise()->log_density(x, [&](Eigen::Index j) { return mask.is_observed(j); });
        for (int c = 0; c < model.gaussian_count(); ++c) {
            const double w = model.weights()[c + model.offset()];
            if (w > 0.0) terms[static_cast<std::size_t>(c + model.offset())] = std::log(w) + component_log_density(c, x, mask);
        }
        return terms;
    }

private:
    const MdagModel* m_model;
    std::vector<GaussianMoments> m_joints;
    std::vector<std::unordered_map<std::string, ObservedBlock>> m_blocks;
};

inline void check_label(const MdagModel& model, int label) {
    if (label < -1 || label >= model.mixture_size())
        throw Error(ErrorCode::BadComponentIndex, "case label " + std::to_string(label) + " is not a mixture index");
}

inline Eigen::VectorXd normalize_log_terms(const std::vector<double>& terms) {
    const double total = log_sum_exp(terms);
    if (total == kNegInf)
        throw Error(ErrorCode::AllComponentsZeroDensity, "every mixture component assigns zero density to the case");
    Eigen::VectorXd out(static_cast<Eigen::Index>(terms.size()));
    for (std::size_t c = 0; c < terms.size(); ++c) out[static_cast<Eigen::Index>(c)] = std::exp(terms[c] - total);
    return out;
}

inline Eigen::VectorXd responsibilities(SweepCache& cache, const Eigen::VectorXd& y, const ObservationMask& mask,
                                        int label = -1) {
    const auto& model = cache.model();
    check_label(model, label);
    if (label >= 0) {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(model.mixture_size());
        out[label] = 1.0;
        return out;
    }
    return normalize_log_terms(cache.log_joint_terms(y, mask));
}

/// Posterior over mixture indices for a partially observed case (NaN = missing).
inline Eigen::VectorXd responsibilities(const MdagModel& model, const Eigen::VectorXd& y) {
    if (y.size() != model.dims()) throw Error(ErrorCode::DimensionMismatch, "case length differs from model dimension");
    SweepCache cache(model);
    return responsibilities(cache, y, ObservationMask(y));
}

struct ConditionalMoments {
    std::vector<int> missing;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

/// Mean and covariance of the missing coordinates of y given its observed ones.
inline ConditionalMoments conditional_moments(const GaussianDag& g, const Eigen::VectorXd& y) {
    if (y.size() != g.size()) throw Error(ErrorCode::DimensionMismatch, "case length differs from model dimension");
    ObservationMask mask(y);
    if (mask.all_observed()) return {{}, Eigen::VectorXd(0), Eigen::MatrixXd(0, 0)};
    ObservedBlock block(to_multivariate_gaussian(g), mask.observed, mask.missing);
    return {mask.missing, block.conditional_mean(y), block.conditional_covariance()};
}

/// Adds one case's expected complete statistics into `acc` and returns the
/// case's log likelihood (joint with its label when labeled).
inline double accumulate_case(SweepCache& cache, const Eigen::VectorXd& y, int label, Ecmss& acc) {
    const auto& model = cache.model();
    check_label(model, label);
    const ObservationMask mask(y);
    const auto terms = cache.log_joint_terms(y, mask);
    Eigen::VectorXd r;
    double loglik;
    if (label >= 0) {
        r = Eigen::VectorXd::Zero(model.mixture_size());
        r[label] = 1.0;
        loglik = terms[static_cast<std::size_t>(label)];
    } else {
        r = normalize_log_terms(terms);
        loglik = log_sum_exp(terms);
    }
    acc.total_cases += 1.0;
    if (model.has_noise()) acc.triples[0].count += r[0];
    Eigen::VectorXd xhat = y;
    for (int c = 0; c < model.gaussian_count(); ++c) {
        const int idx = c + model.offset();
        const double w = r[idx];
        if (w <= 0.0) continue;
        auto& t = acc.triples[static_cast<std::size_t>(idx)];
        t.count += w;
        if (mask.all_observed()) {
            t.sum.noalias() += w * y;
            t.sum_outer.noalias() += w * y * y.transpose();
            continue;
        }
        const auto& block = cache.block(c, mask);
        const Eigen::VectorXd cm = block.conditional_mean(y);
        for (std::size_t k = 0; k < mask.missing.size(); ++k) xhat[mask.missing[k]] = cm[static_cast<Eigen::Index>(k)];
        t.sum.noalias() += w * xhat;
        t.sum_outer.noalias() += w * xhat * xhat.transpose();
        const auto& cc = block.conditional_covariance();
        for (std::size_t a = 0; a < mask.missing.size(); ++a)
            for (std::size_t b = 0; b < mask.missing.size(); ++b)
                t.sum_outer(mask.missing[a], mask.missing[b]) += w * cc(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
    return loglik;
}

struct EStep {
    Ecmss stats;
    double loglik = 0.0;
};

/// One sweep producing both the expected statistics and the observed log likelihood.
inline EStep expectation(const Dataset& data, const MdagModel& model) {
    if (data.dims() != model.dims()) throw Error(ErrorCode::DimensionMismatch, "data dimension differs from model dimension");
    SweepCache cache(model);
    EStep out{Ecmss::zero(model.mixture_size(), model.dims()), 0.0};
    for (Eigen::Index r = 0; r < data.cases(); ++r)
        out.loglik += accumulate_case(cache, data.values.row(r).transpose(), data.label(r), out.stats);
    return out;
}

/// Expected complete model sufficient statistics of the data under the model.
/// Labeled cases contribute one-hot.
inline Ecmss ecmss(const Dataset& data, const MdagModel& model) { return expectation(data, model).stats; }

}  // namespace mdag

#endif  // MDAG_STATS_HPP
