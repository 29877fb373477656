#ifndef MDAG_HARNESS_HPP
#define MDAG_HARNESS_HPP

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "data.hpp"
#include "engine.hpp"
#include "model.hpp"
#include "random.hpp"
#include "scoring.hpp"
#include "search.hpp"

namespace mdag {

struct GoldStandard {
    MdagModel model;
    std::vector<std::string> labels;
};

/// Knobs of the synthetic gold standard. Every node of component c has
/// unconditional mean `means[c]`; every arc coefficient and conditional
/// variance is shared.
struct GoldConfig {
    int variables = 5;
    std::vector<DagStructure> structures;
    std::vector<double> means;
    std::vector<std::string> labels;
    Eigen::VectorXd weights;
    double coefficient = 1.0;
    double variance = 1.0;

    static GoldConfig standard() {
        GoldConfig out;
        const auto collider_fanout = DagStructure::from_arcs(5, {{0, 2}, {1, 2}, {2, 3}, {2, 4}});
        const auto chain = DagStructure::from_arcs(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
        out.structures = {collider_fanout, chain, collider_fanout};
        out.means = {0.0, 0.0, 5.0};
        out.labels = {"COMP1", "COMP2", "COMP3"};
        out.weights = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
        return out;
    }
};

inline GoldStandard make_gold_standard(const GoldConfig& config) {
    if (config.structures.size() != config.means.size() || config.structures.size() != config.labels.size() ||
        config.weights.size() != static_cast<Eigen::Index>(config.structures.size()))
        throw Error(ErrorCode::InvalidConfig, "gold-standard component lists have different lengths");
    std::vector<GaussianDag> comps;
    for (std::size_t c = 0; c < config.structures.size(); ++c) {
        const auto& s = config.structures[c];
        const int n = s.size();
        std::vector<Eigen::VectorXd> coef;
        Eigen::VectorXd intercept(n);
        for (int i = 0; i < n; ++i) {
            const auto parents = static_cast<Eigen::Index>(s.parents(i).size());
            coef.push_back(Eigen::VectorXd::Constant(parents, config.coefficient));
            intercept[i] = config.means[c] * (1.0 - config.coefficient * static_cast<double>(parents));
        }
        comps.emplace_back(s, std::move(intercept), std::move(coef),
                           Eigen::VectorXd::Constant(n, config.variance));
    }
    return {MdagModel(config.weights, std::move(comps)), config.labels};
}

inline GoldStandard default_gold_standard() { return make_gold_standard(GoldConfig::standard()); }

inline const std::vector<Eigen::Index>& recovery_sizes() {
    static const std::vector<Eigen::Index> sizes{93, 186, 375, 750, 1500, 3000};
    return sizes;
}

/// `per_component` cases drawn from every gold component, shuffled, then
/// nested prefixes at the recovery sizes (smallest first). Labels are kept.
inline std::vector<Dataset> generate_recovery_data(const GoldStandard& gold, std::uint64_t seed, Eigen::Index per_component = 1000,
                                                   const std::vector<Eigen::Index>& sizes = recovery_sizes()) {
    const auto& model = gold.model;
    const int k = model.gaussian_count();
    Dataset full;
    full.names = default_names(model.dims());
    full.values.resize(per_component * k, model.dims());
    for (int c = 0; c < k; ++c) {
        const MdagModel single(Eigen::VectorXd::Ones(1), {model.components()[c]});
        auto rng = make_stream(seed, "recovery-component", static_cast<std::uint64_t>(c));
        const auto part = sample(single, per_component, rng);
        full.values.middleRows(c * per_component, per_component) = part.values;
        for (Eigen::Index r = 0; r < per_component; ++r) full.labels.push_back(c + model.offset());
    }
    auto rng = make_stream(seed, "recovery-shuffle");
    const auto order = draw_permutation(rng, static_cast<std::size_t>(full.cases()));
    std::vector<Dataset> out;
    for (auto size : sizes) {
        if (size > full.cases()) throw Error(ErrorCode::InvalidArgument, "requested subsample larger than the generated data");
        out.push_back(full.subset(std::vector<std::size_t>(order.begin(), order.begin() + size)));
    }
    return out;
}

struct ComponentMatch {
    /// Gaussian component index in the learned model, largest weight first.
    std::vector<int> learned;
    /// Gold component matched to each learned component.
    std::vector<int> gold;
    std::vector<int> differences;
    int total = 0;
};

/// Matches the (up to) `count` largest-weight learned components to gold
/// components, minimizing the summed structural difference. Ties keep the
/// first assignment in weight order.
inline ComponentMatch match_components(const MdagModel& learned, const MdagModel& gold, int count = 3) {
    std::vector<int> order(static_cast<std::size_t>(learned.gaussian_count()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return learned.weights()[a + learned.offset()] > learned.weights()[b + learned.offset()];
    });
    order.resize(static_cast<std::size_t>(std::min<int>(count, learned.gaussian_count())));

    const int g = gold.gaussian_count();
    std::vector<std::vector<int>> cost(order.size(), std::vector<int>(static_cast<std::size_t>(g)));
    for (std::size_t a = 0; a < order.size(); ++a)
        for (int b = 0; b < g; ++b)
            cost[a][b] = structural_difference(learned.components()[order[a]].structure(), gold.components()[b].structure());

    std::vector<int> perm(static_cast<std::size_t>(g));
    std::iota(perm.begin(), perm.end(), 0);
    ComponentMatch best;
    best.total = -1;
    do {
        int total = 0;
        for (std::size_t a = 0; a < order.size() && a < perm.size(); ++a) total += cost[a][perm[a]];
        if (best.total < 0 || total < best.total) {
            best.total = total;
            best.learned.assign(order.begin(), order.end());
            best.gold.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), perm.size())));
            best.differences.clear();
            for (std::size_t a = 0; a < best.gold.size(); ++a) best.differences.push_back(cost[a][best.gold[a]]);
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

inline double top_weight(const MdagModel& model, int count = 3) {
    std::vector<double> w;
    for (int c = 0; c < model.gaussian_count(); ++c) w.push_back(model.weights()[c + model.offset()]);
    std::sort(w.rbegin(), w.rend());
    double out = 0.0;
    for (std::size_t i = 0; i < w.size() && static_cast<int>(i) < count; ++i) out += w[i];
    return out;
}

struct RecoveryRow {
    Eigen::Index sample_size = 0;
    int k = 0;
    double top3_weight = 0.0;
    ComponentMatch match;
    double cheeseman_stutz = 0.0;
};

struct RecoveryReport {
    std::vector<RecoveryRow> rows;
};

struct RecoveryConfig {
    FitConfig fit;
    int k_max = 6;
    std::uint64_t data_seed = 0;
    std::vector<Eigen::Index> sizes = recovery_sizes();
};

inline RecoveryRow recovery_row(const Dataset& data, const GoldStandard& gold, const RecoveryConfig& config) {
    FitConfig fc = config.fit;
    fc.noise.reset();
    const auto sel = select_k(data.without_labels(), fc, config.k_max);
    const auto& model = sel.best.model;
    return {data.cases(), sel.best_k, top_weight(model), match_components(model, gold.model), sel.best.cheeseman_stutz};
}

/// Structure-recovery experiment over nested subsamples of gold-standard data.
inline RecoveryReport run_recovery(const GoldStandard& gold, const RecoveryConfig& config) {
    RecoveryReport out;
    const auto sets = generate_recovery_data(gold, config.data_seed, 1000, config.sizes);
    for (const auto& d : sets) out.rows.push_back(recovery_row(d, gold, config));
    return out;
}

/// Free parameters: mixture weights plus, per node, an intercept, one
/// coefficient per parent and a variance.
inline int parameter_count(const MdagModel& model) {
    int out = model.mixture_size() - 1;
    for (const auto& g : model.components())
        for (int i = 0; i < g.size(); ++i) out += 2 + static_cast<int>(g.structure().parents(i).size());
    return out;
}

struct FamilyScore {
    Family family = Family::Mdag;
    int k = 0;
    double predictive = 0.0;
    double cheeseman_stutz = 0.0;
    int parameters = 0;
    MdagModel model;
};

struct ComparisonReport {
    std::vector<FamilyScore> rows;

    const FamilyScore& at(Family f) const {
        for (const auto& r : rows)
            if (r.family == f) return r;
        throw Error(ErrorCode::InvalidArgument, "family missing from report");
    }
};

/// MDAG (full pipeline) against fixed empty (MDIAG) and fixed complete
/// (MFULL) component structures, each with its own component-count search.
inline ComparisonReport run_baseline_comparison(const Dataset& train, const Dataset& test, const FitConfig& config, int k_max) {
    ComparisonReport out;
    for (Family family : {Family::Mdag, Family::Mdiag, Family::Mfull}) {
        FitConfig fc = config;
        fc.family = family;
        const auto sel = select_k(train.without_labels(), fc, k_max);
        out.rows.push_back({family, sel.best_k, predictive_score(test, sel.best.model), sel.best.cheeseman_stutz,
                            parameter_count(sel.best.model), sel.best.model});
    }
    return out;
}

}  // namespace mdag

#endif  // MDAG_HARNESS_HPP
