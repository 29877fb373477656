#ifndef MDAG_SCORING_HPP
#define MDAG_SCORING_HPP

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "bayes.hpp"
#include "data.hpp"
#include "error.hpp"
#include "model.hpp"
#include "numeric.hpp"
#include "stats.hpp"

namespace mdag {

/// Parameter priors of one mixture: a Normal-Wishart per Gaussian
/// component and a Dirichlet over all mixture indices.
struct PriorSet {
    std::vector<NormalWishartPrior> components;
    DirichletPrior mixture;
};

struct ScoreBreakdown {
    double c_term = 0.0;
    double noise_term = 0.0;
    /// locals[c][i]: family score of node i in Gaussian component c.
    std::vector<std::vector<double>> locals;
    double total = 0.0;

    double sum_of_parts() const {
        double out = c_term + noise_term;
        for (const auto& comp : locals)
            for (double v : comp) out += v;
        return out;
    }
};

/// Summed family scores of one component structure.
inline double structure_score(const FamilyScorer& scorer, const DagStructure& s, std::vector<double>* per_node = nullptr) {
    double out = 0.0;
    for (int i = 0; i < s.size(); ++i) {
        const double v = scorer.local(i, s.parents(i));
        if (per_node) per_node->push_back(v);
        out += v;
    }
    return out;
}

/// Closed-form log marginal likelihood of the statistics treated as complete data.
inline ScoreBreakdown complete_model_score(const Ecmss& stats, const std::vector<DagStructure>& structures, const PriorSet& priors,
                                           const std::optional<NoiseComponent>& noise = std::nullopt) {
    const int offset = noise ? 1 : 0;
    if (stats.mixture_size() != static_cast<int>(structures.size()) + offset ||
        priors.components.size() != structures.size() || priors.mixture.size() != stats.mixture_size())
        throw Error(ErrorCode::ShapeMismatch, "statistics, structures and priors disagree on the component count");
    ScoreBreakdown out;
    out.c_term = dirichlet_log_marglik(priors.mixture, stats.counts());
    if (noise) out.noise_term = -stats.triples[0].count * noise->log_volume();
    for (std::size_t c = 0; c < structures.size(); ++c) {
        const FamilyScorer scorer(priors.components[c], stats.triples[c + static_cast<std::size_t>(offset)]);
        out.locals.emplace_back();
        structure_score(scorer, structures[c], &out.locals.back());
    }
    out.total = out.sum_of_parts();
    return out;
}

/// log p(observed part of the case [, label] | model).
inline double case_log_likelihood(SweepCache& cache, const Eigen::VectorXd& y, int label) {
    const auto& model = cache.model();
    check_label(model, label);
    const ObservationMask mask(y);
    if (label < 0) return log_sum_exp(cache.log_joint_terms(y, mask));
    const double w = model.weights()[label];
    if (model.has_noise() && label == 0)
        return std::log(w) + model.noise()->log_density(y, [&](Eigen::Index j) { return mask.is_observed(j); });
    return std::log(w) + cache.component_log_density(label - model.offset(), y, mask);
}

/// Sum over cases of the log density of each case's observed coordinates
/// (and label, when given). Missing coordinates are marginalized.
inline double observed_loglik(const Dataset& data, const MdagModel& model) {
    if (data.cases() == 0) return 0.0;
    if (data.dims() != model.dims()) throw Error(ErrorCode::DimensionMismatch, "data dimension differs from model dimension");
    SweepCache cache(model);
    double out = 0.0;
    for (Eigen::Index r = 0; r < data.cases(); ++r) out += case_log_likelihood(cache, data.values.row(r).transpose(), data.label(r));
    return out;
}

/// Complete-data log likelihood of one Gaussian DAG from (N, R, S) alone.
inline double component_completed_loglik(const GaussianDag& g, const SuffStats& t) {
    if (t.count == 0.0) return 0.0;
    const int n = g.size();
    double out = 0.0;
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) {
        // residual_i = w^T x - m_i with w = e_i - sum_p b_p e_p
        w.setZero();
        w[i] = 1.0;
        const auto& ps = g.structure().parents(i);
        for (std::size_t k = 0; k < ps.size(); ++k) w[ps[k]] -= g.coefficients(i)[static_cast<Eigen::Index>(k)];
        const double m = g.intercept()[i];
        const double sq = w.dot(t.sum_outer * w) - 2.0 * m * w.dot(t.sum) + t.count * m * m;
        const double v = g.variance()[i];
        out += -0.5 * t.count * (kLog2Pi + std::log(v)) - 0.5 * sq / v;
    }
    return out;
}

/// Complete-data log likelihood of the model on the completion summarized by `stats`.
inline double completed_loglik(const Ecmss& stats, const MdagModel& model) {
    if (stats.mixture_size() != model.mixture_size()) throw Error(ErrorCode::ShapeMismatch, "statistics and model disagree on the component count");
    double out = 0.0;
    for (int idx = 0; idx < model.mixture_size(); ++idx) {
        const double n_c = stats.triples[idx].count;
        if (n_c == 0.0) continue;
        out += n_c * std::log(model.weights()[idx]);
        if (model.has_noise() && idx == 0)
            out -= n_c * model.noise()->log_volume();
        else
            out += component_completed_loglik(model.components()[idx - model.offset()], stats.triples[idx]);
    }
    return out;
}

struct CheesemanStutzTerms {
    double complete_score = 0.0;
    double observed = 0.0;
    double completed = 0.0;
    double value() const { return complete_score + observed - completed; }
};

/// Cheeseman-Stutz approximation using the completion summarized by `stats`;
/// the model should hold the MAP parameters for those statistics.
inline CheesemanStutzTerms cheeseman_stutz_terms(const Dataset& data, const MdagModel& model, const PriorSet& priors,
                                                 const Ecmss& stats) {
    CheesemanStutzTerms out;
    out.complete_score = complete_model_score(stats, model.structures(), priors, model.noise()).total;
    out.observed = observed_loglik(data, model);
    out.completed = completed_loglik(stats, model);
    return out;
}

inline double cheeseman_stutz(const Dataset& data, const MdagModel& model, const PriorSet& priors, const Ecmss& stats) {
    return cheeseman_stutz_terms(data, model, priors, stats).value();
}

/// Mean log density per test case.
inline double predictive_score(const Dataset& test, const MdagModel& model) {
    if (test.cases() == 0) throw Error(ErrorCode::EmptyTestSet, "test set is empty");
    return observed_loglik(test.without_labels(), model) / static_cast<double>(test.cases());
}

}  // namespace mdag

#endif  // MDAG_SCORING_HPP
