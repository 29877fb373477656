#ifndef MDAG_ENGINE_HPP
#define MDAG_ENGINE_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bayes.hpp"
#include "data.hpp"
#include "error.hpp"
#include "model.hpp"
#include "random.hpp"
#include "scoring.hpp"
#include "search.hpp"
#include "stats.hpp"

namespace mdag {

/// Interleaving schedule ((EM)^k Ec S* M)*: k EM steps (or EM to
/// convergence when `em_steps` is empty), one ECMSS computation, structure
/// search to a local maximum, one M step; repeated when `repeat` is set.
struct Schedule {
    std::optional<int> em_steps = 10;
    bool repeat = true;

    static Schedule standard() { return {10, true}; }
    static Schedule full_em() { return {std::nullopt, true}; }

    static Schedule parse(std::string_view text) {
        std::string compact;
        for (char ch : text)
            if (!std::isspace(static_cast<unsigned char>(ch))) compact.push_back(ch);
        for (auto pos = compact.find("E_c"); pos != std::string::npos; pos = compact.find("E_c")) compact.replace(pos, 3, "Ec");
        static const std::regex grammar(R"(^\(\(EM\)(?:\^([0-9]+|\*)|(\*))EcS\*M\)(\*?)$)");
        std::smatch m;
        if (!std::regex_match(compact, m, grammar))
            throw Error(ErrorCode::ScheduleSyntax, "expected ((EM)^k Ec S* M)* with k a positive integer or *, got '" + std::string(text) + "'");
        Schedule out;
        out.repeat = m[3].length() > 0;
        if (m[2].matched || m[1].str() == "*") {
            out.em_steps.reset();
        } else {
            const int k = std::stoi(m[1].str());
            if (k < 1) throw Error(ErrorCode::ScheduleSyntax, "EM step count must be positive");
            out.em_steps = k;
        }
        return out;
    }

    std::string to_string() const {
        return "((EM)^" + (em_steps ? std::to_string(*em_steps) : std::string("*")) + " Ec S* M)" + (repeat ? "*" : "");
    }

    friend bool operator==(const Schedule&, const Schedule&) = default;
};

enum class WeightInit { Equal, PriorMean, DirichletDraw };
enum class Family { Mdag, Mdiag, Mfull };

inline const char* to_string(WeightInit w) {
    switch (w) {
        case WeightInit::Equal: return "equal";
        case WeightInit::PriorMean: return "prior-mean";
        case WeightInit::DirichletDraw: return "dirichlet-draw";
    }
    return "?";
}

inline const char* to_string(Family f) {
    switch (f) {
        case Family::Mdag: return "mdag";
        case Family::Mdiag: return "mdiag";
        case Family::Mfull: return "mfull";
    }
    return "?";
}

inline WeightInit parse_weight_init(std::string_view s) {
    if (s == "equal") return WeightInit::Equal;
    if (s == "prior-mean") return WeightInit::PriorMean;
    if (s == "dirichlet-draw") return WeightInit::DirichletDraw;
    throw Error(ErrorCode::InvalidConfig, "unknown weight-init mode '" + std::string(s) + "'");
}

inline Family parse_family(std::string_view s) {
    if (s == "mdag") return Family::Mdag;
    if (s == "mdiag") return Family::Mdiag;
    if (s == "mfull") return Family::Mfull;
    throw Error(ErrorCode::InvalidConfig, "unknown model family '" + std::string(s) + "'");
}

/// Normal-Wishart hyperparameters shared by every Gaussian component.
/// Unset mu0 means the observed column means; unset alpha means nu + n.
struct PriorConfig {
    double nu = 2.0;
    std::optional<Eigen::VectorXd> mu0;
    std::optional<double> alpha;
    double tau_scale = 1.0;
    double noise_alpha = 0.01;
    /// Total Dirichlet mass spread over the Gaussian components; unset
    /// means 0.99 with a noise component and 1 without.
    std::optional<double> gaussian_alpha_total;
};

struct FitConfig {
    int k = 1;
    std::optional<NoiseComponent> noise;
    PriorConfig prior;
    double ess = 200.0;
    double convergence_ratio = 1e-6;
    std::uint64_t seed = 0;
    Schedule schedule = Schedule::standard();
    WeightInit weight_init = WeightInit::Equal;
    int max_outer_iterations = 200;
    int max_em_steps = 1000;
    Family family = Family::Mdag;
    std::optional<int> max_parents;
    /// Record the Cheeseman-Stutz score after every accepted search move.
    bool trace_search_scores = false;

    void validate() const {
        if (k < 1) throw Error(ErrorCode::InvalidConfig, "k must be at least 1");
        if (!(ess > 0.0)) throw Error(ErrorCode::InvalidConfig, "ess must be positive");
        if (!(convergence_ratio > 0.0 && convergence_ratio < 1.0)) throw Error(ErrorCode::InvalidConfig, "convergence ratio must lie in (0, 1)");
        if (max_outer_iterations < 1) throw Error(ErrorCode::InvalidConfig, "max outer iterations must be positive");
        if (max_em_steps < 1) throw Error(ErrorCode::InvalidConfig, "max EM steps must be positive");
        if (max_parents && *max_parents < 0) throw Error(ErrorCode::InvalidConfig, "max parents must be nonnegative");
        if (!(prior.nu > 0.0)) throw Error(ErrorCode::InvalidConfig, "prior nu must be positive");
        if (!(prior.tau_scale > 0.0)) throw Error(ErrorCode::InvalidConfig, "prior tau scale must be positive");
        if (!(prior.noise_alpha > 0.0)) throw Error(ErrorCode::InvalidConfig, "noise alpha must be positive");
    }
};

inline Eigen::VectorXd observed_column_means(const Dataset& data) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(data.dims());
    for (Eigen::Index j = 0; j < data.dims(); ++j) {
        double sum = 0.0;
        Eigen::Index count = 0;
        for (Eigen::Index r = 0; r < data.cases(); ++r)
            if (data.observed(r, j)) {
                sum += data.values(r, j);
                ++count;
            }
        if (count > 0) out[j] = sum / static_cast<double>(count);
    }
    return out;
}

inline PriorSet resolve_priors(const Dataset& data, const FitConfig& config) {
    const auto n = data.dims();
    const auto& p = config.prior;
    NormalWishartPrior nw;
    nw.nu = p.nu;
    nw.mu0 = p.mu0 ? *p.mu0 : observed_column_means(data);
    if (nw.mu0.size() != n) throw Error(ErrorCode::InvalidConfig, "prior mean length differs from the variable count");
    nw.alpha = p.alpha ? *p.alpha : p.nu + static_cast<double>(n);
    nw.tau = p.tau_scale * Eigen::MatrixXd::Identity(n, n);
    nw.validate();

    const bool noise = config.noise.has_value();
    Eigen::VectorXd alphas(config.k + (noise ? 1 : 0));
    const double total = p.gaussian_alpha_total ? *p.gaussian_alpha_total : (noise ? 0.99 : 1.0);
    if (noise) alphas[0] = p.noise_alpha;
    alphas.tail(config.k).setConstant(total / config.k);
    return {std::vector<NormalWishartPrior>(static_cast<std::size_t>(config.k), nw), DirichletPrior{alphas}};
}

inline DagStructure family_structure(Family family, int n) {
    return family == Family::Mfull ? DagStructure::complete(n) : DagStructure(n);
}

/// Initial model: family-default structures, parameters drawn from the
/// data-informed conjugate prior, weights per the configured mode.
inline MdagModel initialize(const Dataset& data, const FitConfig& config) {
    config.validate();
    if (data.cases() == 0) throw Error(ErrorCode::InsufficientData, "data set is empty");
    const int n = static_cast<int>(data.dims());
    const auto init_prior = data_informed_prior(data, config.ess);
    std::vector<GaussianDag> comps;
    for (int c = 0; c < config.k; ++c) {
        auto rng = make_stream(config.seed, "init-parameters", static_cast<std::uint64_t>(c));
        comps.push_back(gaussian_dag_from_moments(family_structure(config.family, n), draw_parameters(init_prior, rng)));
    }
    const auto priors = resolve_priors(data, config);
    const auto& alphas = priors.mixture.alphas;
    const int offset = config.noise ? 1 : 0;
    Eigen::VectorXd weights(alphas.size());
    switch (config.weight_init) {
        case WeightInit::Equal:
            if (offset) weights[0] = alphas[0] / alphas.sum();
            weights.tail(config.k).setConstant((1.0 - (offset ? weights[0] : 0.0)) / config.k);
            break;
        case WeightInit::PriorMean: weights = priors.mixture.mean(); break;
        case WeightInit::DirichletDraw: {
            auto rng = make_stream(config.seed, "init-weights");
            weights = draw_dirichlet(rng, alphas);
            break;
        }
    }
    weights /= weights.sum();
    return MdagModel(weights, std::move(comps), config.noise);
}

/// MAP weights and component parameters for the given structures.
inline MdagModel maximization(const Ecmss& stats, const std::vector<DagStructure>& structures, const PriorSet& priors,
                              const std::optional<NoiseComponent>& noise) {
    const int offset = noise ? 1 : 0;
    std::vector<GaussianDag> comps;
    for (std::size_t c = 0; c < structures.size(); ++c)
        comps.push_back(map_parameters(priors.components[c], stats.triples[c + static_cast<std::size_t>(offset)], structures[c]));
    return MdagModel(dirichlet_map(priors.mixture, stats.counts()), std::move(comps), noise);
}

/// One EM step at fixed structures.
inline MdagModel em_step(const Dataset& data, const MdagModel& model, const PriorSet& priors) {
    const auto e = expectation(data, model);
    return maximization(e.stats, model.structures(), priors, model.noise());
}

/// EM stopping rule: the last improvement relative to the improvement since
/// initialization fell below `ratio`.
inline bool em_converged(double initial, double previous, double current, double ratio) {
    const double total = current - initial;
    if (!(total > 0.0)) return true;
    return (current - previous) / total < ratio;
}

struct EmRun {
    MdagModel model;
    /// Observed log likelihood of the initial model, then after every step.
    std::vector<double> loglik;
    int steps = 0;
    bool converged = false;
    std::vector<std::string> warnings;
};

struct EmOptions {
    /// Empty: run to convergence.
    std::optional<int> steps;
    double ratio = 1e-6;
    int max_steps = 1000;
};

inline EmRun run_em(const Dataset& data, const MdagModel& initial, const PriorSet& priors, const EmOptions& options) {
    EmRun out{initial, {}, 0, false, {}};
    auto e = expectation(data, out.model);
    out.loglik.push_back(e.loglik);
    const int budget = options.steps ? *options.steps : options.max_steps;
    std::vector<int> starving(static_cast<std::size_t>(out.model.mixture_size()), 0);
    std::vector<char> reported(starving.size(), 0);
    for (int t = 1; t <= budget; ++t) {
        for (std::size_t c = 0; c < starving.size(); ++c) {
            starving[c] = e.stats.triples[c].count < 1e-10 ? starving[c] + 1 : 0;
            if (starving[c] >= 3 && !reported[c]) {
                reported[c] = 1;
                out.warnings.push_back("ComponentCollapse: mixture component " + std::to_string(c) +
                                       " has had no expected cases for 3 EM steps; kept at its prior mode");
            }
        }
        out.model = maximization(e.stats, out.model.structures(), priors, out.model.noise());
        e = expectation(data, out.model);
        out.loglik.push_back(e.loglik);
        out.steps = t;
        if (!options.steps &&
            em_converged(out.loglik.front(), out.loglik[out.loglik.size() - 2], out.loglik.back(), options.ratio)) {
            out.converged = true;
            break;
        }
    }
    return out;
}

enum class Termination { StructureStable, ScoreNonincreasing, IterationCap };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::StructureStable: return "structure-stable";
        case Termination::ScoreNonincreasing: return "score-nonincreasing";
        case Termination::IterationCap: return "iteration-cap";
    }
    return "?";
}

struct OuterIteration {
    int em_steps = 0;
    bool forced_convergence = false;
    double observed_loglik = 0.0;
    /// Closed-form score of the searched structures on this iteration's ECMSS.
    double complete_score = 0.0;
    double cheeseman_stutz = 0.0;
    bool structure_changed = false;
    std::vector<DagStructure> structures;
    Ecmss stats;
};

struct FitResult {
    MdagModel model;
    PriorSet priors;
    std::vector<OuterIteration> trace;
    Termination termination = Termination::IterationCap;
    int best_iteration = -1;
    double cheeseman_stutz = -std::numeric_limits<double>::infinity();
    /// Complete-model ECMSS computations performed (one per outer iteration).
    int ecmss_computations = 0;
    /// Cheeseman-Stutz of every intermediate model visited by structure
    /// search, when requested in the config.
    std::vector<double> search_scores;
    std::vector<std::string> warnings;
};

namespace detail {

inline double intermediate_score(const Dataset& data, const Ecmss& stats, const std::vector<DagStructure>& structures,
                                 const PriorSet& priors, const std::optional<NoiseComponent>& noise) {
    const auto model = maximization(stats, structures, priors, noise);
    return cheeseman_stutz(data, model, priors, stats);
}

}  // namespace detail

/// Interleaved parameter and structure search for a fixed component count.
/// Returns the best iterate by Cheeseman-Stutz.
inline FitResult fit(const Dataset& data, const FitConfig& config) {
    config.validate();
    if (config.noise && config.noise->size() != data.dims())
        throw Error(ErrorCode::DimensionMismatch, "noise bounds length differs from the variable count");
    FitResult out;
    out.priors = resolve_priors(data, config);
    MdagModel model = initialize(data, config);
    const bool searching = config.family == Family::Mdag;
    const Schedule schedule = searching ? config.schedule : Schedule::full_em();

    SearchOptions search_options;
    search_options.max_parents = config.max_parents;

    bool forced = false;
    out.termination = Termination::IterationCap;
    for (int iter = 0; iter < config.max_outer_iterations; ++iter) {
        EmOptions em_options;
        em_options.steps = forced ? std::nullopt : schedule.em_steps;
        em_options.ratio = config.convergence_ratio;
        em_options.max_steps = config.max_em_steps;
        auto em = run_em(data, model, out.priors, em_options);
        for (auto& w : em.warnings) out.warnings.push_back(std::move(w));
        model = std::move(em.model);

        const Ecmss stats = ecmss(data, model);
        ++out.ecmss_computations;

        auto structures = model.structures();
        if (searching) {
            if (config.trace_search_scores)
                out.search_scores.push_back(detail::intermediate_score(data, stats, structures, out.priors, model.noise()));
            std::function<void(int, const DagStructure&, const MoveRecord&)> observer;
            auto visiting = structures;
            if (config.trace_search_scores)
                observer = [&](int c, const DagStructure& s, const MoveRecord&) {
                    visiting[static_cast<std::size_t>(c)] = s;
                    out.search_scores.push_back(detail::intermediate_score(data, stats, visiting, out.priors, model.noise()));
                };
            const auto results = search_all_components(stats, structures, out.priors.components, model.has_noise(),
                                                       search_options, observer);
            for (std::size_t c = 0; c < results.size(); ++c) structures[c] = results[c].structure;
        }
        const bool changed = structures != model.structures();
        MdagModel next = maximization(stats, structures, out.priors, model.noise());

        OuterIteration step;
        step.em_steps = em.steps;
        step.forced_convergence = forced;
        step.observed_loglik = observed_loglik(data, next);
        step.complete_score = complete_model_score(stats, structures, out.priors, next.noise()).total;
        step.cheeseman_stutz = step.complete_score + step.observed_loglik - completed_loglik(stats, next);
        step.structure_changed = changed;
        step.structures = structures;
        step.stats = stats;
        out.trace.push_back(step);

        if (out.best_iteration >= 0 && !(step.cheeseman_stutz > out.cheeseman_stutz)) {
            out.termination = Termination::ScoreNonincreasing;
            break;
        }
        out.best_iteration = iter;
        out.cheeseman_stutz = step.cheeseman_stutz;
        out.model = next;

        if (!changed) {
            if (forced || !schedule.em_steps) {
                out.termination = Termination::StructureStable;
                break;
            }
            forced = true;
        } else {
            forced = false;
        }
        if (!schedule.repeat) {
            out.termination = Termination::StructureStable;
            break;
        }
        model = std::move(next);
    }
    return out;
}

struct KReport {
    int k = 0;
    double cheeseman_stutz = 0.0;
    double observed_loglik = 0.0;
    Termination termination = Termination::IterationCap;
};

struct SelectKResult {
    FitResult best;
    int best_k = 0;
    std::vector<KReport> per_k;
};

/// Fits k = 1, 2, ... Gaussian components, stopping after the score falls on
/// two consecutive increments or at k_max, and keeps the best by Cheeseman-Stutz.
inline SelectKResult select_k(const Dataset& data, const FitConfig& base, int k_max) {
    if (k_max < 1) throw Error(ErrorCode::InvalidConfig, "k_max must be at least 1");
    SelectKResult out;
    int decreases = 0;
    double previous = -std::numeric_limits<double>::infinity();
    for (int k = 1; k <= k_max; ++k) {
        FitConfig config = base;
        config.k = k;
        auto result = fit(data, config);
        out.per_k.push_back({k, result.cheeseman_stutz, result.trace[static_cast<std::size_t>(result.best_iteration)].observed_loglik,
                             result.termination});
        if (out.best_k == 0 || result.cheeseman_stutz > out.best.cheeseman_stutz) {
            out.best_k = k;
            out.best = std::move(result);
        }
        const double cs = out.per_k.back().cheeseman_stutz;
        decreases = (k > 1 && cs < previous) ? decreases + 1 : 0;
        previous = cs;
        if (decreases >= 2) break;
    }
    return out;
}

}  // namespace mdag

#endif  // MDAG_ENGINE_HPP
