#ifndef MDAG_MODEL_HPP
#define MDAG_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "data.hpp"
#include "error.hpp"
#include "numeric.hpp"
#include "random.hpp"

namespace mdag {

/// Checks the parent lists of an n-node graph. Returns the violation, or
/// nothing when the graph is a valid DAG.
inline std::optional<Error> check_structure(int n, const std::vector<std::vector<int>>& parents) {
    if (static_cast<int>(parents.size()) != n)
        return Error(ErrorCode::DimensionMismatch, "parent list count differs from node count");
    for (int i = 0; i < n; ++i) {
        auto sorted = parents[i];
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t k = 0; k < sorted.size(); ++k) {
            const int p = sorted[k];
            if (p < 0 || p >= n)
                return Error(ErrorCode::BadParentIndex,
                             "node " + std::to_string(i) + " has parent " + std::to_string(p));
            if (k > 0 && sorted[k - 1] == p)
                return Error(ErrorCode::BadParentIndex,
                             "node " + std::to_string(i) + " lists parent " + std::to_string(p) + " twice");
        }
    }

    // DFS along parent arcs; a grey node reached again closes a cycle.
    std::vector<int> color(static_cast<std::size_t>(n), 0);
    std::vector<int> stack_path;
    std::optional<Error> found;
    auto visit = [&](auto&& self, int v) -> bool {
        color[v] = 1;
        stack_path.push_back(v);
        for (int p : parents[v]) {
            if (color[p] == 1) {
                auto at = std::find(stack_path.begin(), stack_path.end(), p);
                std::ostringstream msg;
                msg << "cycle";
                // The path runs child -> parent, so print it reversed as arcs.
                std::vector<int> cyc(at, stack_path.end());
                std::reverse(cyc.begin(), cyc.end());
                for (int c : cyc) msg << ' ' << c << " ->";
                msg << ' ' << cyc.front();
                found = Error(ErrorCode::CycleDetected, msg.str());
                return true;
            }
            if (color[p] == 0 && self(self, p)) return true;
        }
        stack_path.pop_back();
        color[v] = 2;
        return false;
    };
    for (int i = 0; i < n; ++i)
        if (color[i] == 0 && visit(visit, i)) return found;
    return std::nullopt;
}

/// Acyclic parent-set list over n continuous variables. Parent lists are
/// kept sorted; the topological order is computed once at construction.
class DagStructure {
public:
    DagStructure() = default;

    explicit DagStructure(int n) : m_n(n), m_parents(static_cast<std::size_t>(n)) { compute_order(); }

    DagStructure(int n, std::vector<std::vector<int>> parents) : m_n(n), m_parents(std::move(parents)) {
        if (auto err = check_structure(n, m_parents)) throw *err;
        for (auto& ps : m_parents) std::sort(ps.begin(), ps.end());
        compute_order();
    }

    /// Every earlier index is a parent of every later one.
    static DagStructure complete(int n) {
        std::vector<std::vector<int>> parents(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < i; ++j) parents[i].push_back(j);
        return DagStructure(n, std::move(parents));
    }

    static DagStructure from_arcs(int n, const std::vector<std::pair<int, int>>& arcs) {
        std::vector<std::vector<int>> parents(static_cast<std::size_t>(n));
        for (auto [from, to] : arcs) {
            if (to < 0 || to >= n) throw Error(ErrorCode::BadParentIndex, "arc target out of range");
            parents[to].push_back(from);
        }
        return DagStructure(n, std::move(parents));
    }

    int size() const { return m_n; }
    const std::vector<int>& parents(int i) const { return m_parents[i]; }
    const std::vector<std::vector<int>>& parent_lists() const { return m_parents; }
    const std::vector<int>& topological_order() const { return m_order; }

    bool has_arc(int from, int to) const {
        const auto& ps = m_parents[to];
        return std::binary_search(ps.begin(), ps.end(), from);
    }

    std::size_t arc_count() const {
        std::size_t out = 0;
        for (const auto& ps : m_parents) out += ps.size();
        return out;
    }

    std::vector<std::pair<int, int>> arcs() const {
        std::vector<std::pair<int, int>> out;
        for (int i = 0; i < m_n; ++i)
            for (int p : m_parents[i]) out.emplace_back(p, i);
        return out;
    }

    /// True when a directed path from -> ... -> to exists, optionally
    /// ignoring one arc.
    bool reaches(int from, int to, std::optional<std::pair<int, int>> skip = std::nullopt) const {
        if (from == to) return true;
        // Walk backwards from `to` along parent arcs.
        std::vector<char> seen(static_cast<std::size_t>(m_n), 0);
        std::vector<int> stack{to};
        seen[to] = 1;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int p : m_parents[v]) {
                if (skip && skip->first == p && skip->second == v) continue;
                if (p == from) return true;
                if (!seen[p]) {
                    seen[p] = 1;
                    stack.push_back(p);
                }
            }
        }
        return false;
    }

    DagStructure with_parents(int node, std::vector<int> parents) const {
        auto lists = m_parents;
        lists[node] = std::move(parents);
        return DagStructure(m_n, std::move(lists));
    }

    friend bool operator==(const DagStructure& a, const DagStructure& b) {
        return a.m_n == b.m_n && a.m_parents == b.m_parents;
    }

private:
    void compute_order() {
        // Kahn's algorithm, smallest ready index first so the order is canonical.
        std::vector<int> pending(static_cast<std::size_t>(m_n));
        std::vector<std::vector<int>> children(static_cast<std::size_t>(m_n));
        for (int i = 0; i < m_n; ++i) {
            pending[i] = static_cast<int>(m_parents[i].size());
            for (int p : m_parents[i]) children[p].push_back(i);
        }
        std::vector<int> ready;
        for (int i = m_n - 1; i >= 0; --i)
            if (pending[i] == 0) ready.push_back(i);
        m_order.clear();
        while (!ready.empty()) {
            std::sort(ready.begin(), ready.end(), std::greater<>());
            const int v = ready.back();
            ready.pop_back();
            m_order.push_back(v);
            for (int c : children[v])
                if (--pending[c] == 0) ready.push_back(c);
        }
    }

    int m_n = 0;
    std::vector<std::vector<int>> m_parents;
    std::vector<int> m_order;
};

inline std::string to_string(const DagStructure& s) {
    std::ostringstream out;
    bool first = true;
    for (auto [from, to] : s.arcs()) {
        out << (first ? "" : " ") << from << "->" << to;
        first = false;
    }
    return first ? std::string("(empty)") : out.str();
}

/// Linear-Gaussian DAG: node i is intercept_i + coefficients_i . x_parents
/// plus Gaussian error of variance variance_i.
class GaussianDag {
public:
    GaussianDag() = default;

    GaussianDag(DagStructure structure, Eigen::VectorXd intercept, std::vector<Eigen::VectorXd> coefficients,
                Eigen::VectorXd variance)
        : m_structure(std::move(structure)),
          m_intercept(std::move(intercept)),
          m_coefficients(std::move(coefficients)),
          m_variance(std::move(variance)) {
        const int n = m_structure.size();
        if (m_intercept.size() != n || m_variance.size() != n || static_cast<int>(m_coefficients.size()) != n)
            throw Error(ErrorCode::DimensionMismatch, "parameter vectors must have one entry per node");
        for (int i = 0; i < n; ++i) {
            if (m_coefficients[i].size() != static_cast<Eigen::Index>(m_structure.parents(i).size()))
                throw Error(ErrorCode::DimensionMismatch,
                            "node " + std::to_string(i) + " coefficient count differs from parent count");
            if (!(m_variance[i] > 0.0) || !std::isfinite(m_variance[i]))
                throw Error(ErrorCode::InvalidArgument, "conditional variances must be positive");
        }
    }

    /// Standard-normal independent nodes over the given structure.
    static GaussianDag standard(const DagStructure& structure) {
        const int n = structure.size();
        std::vector<Eigen::VectorXd> coef;
        for (int i = 0; i < n; ++i) coef.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(structure.parents(i).size())));
        return GaussianDag(structure, Eigen::VectorXd::Zero(n), std::move(coef), Eigen::VectorXd::Ones(n));
    }

    int size() const { return m_structure.size(); }
    const DagStructure& structure() const { return m_structure; }
    const Eigen::VectorXd& intercept() const { return m_intercept; }
    const std::vector<Eigen::VectorXd>& coefficients() const { return m_coefficients; }
    const Eigen::VectorXd& coefficients(int i) const { return m_coefficients[i]; }
    const Eigen::VectorXd& variance() const { return m_variance; }

    double conditional_mean(int i, const Eigen::VectorXd& x) const {
        double mu = m_intercept[i];
        const auto& ps = m_structure.parents(i);
        for (std::size_t k = 0; k < ps.size(); ++k) mu += m_coefficients[i][static_cast<Eigen::Index>(k)] * x[ps[k]];
        return mu;
    }

private:
    DagStructure m_structure;
    Eigen::VectorXd m_intercept;
    std::vector<Eigen::VectorXd> m_coefficients;
    Eigen::VectorXd m_variance;
};

/// Fixed multivariate uniform over an axis-aligned box.
struct NoiseComponent {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    NoiseComponent() = default;
    NoiseComponent(Eigen::VectorXd lo, Eigen::VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
        if (lower.size() != upper.size()) throw Error(ErrorCode::DimensionMismatch, "noise bound lengths differ");
        for (Eigen::Index j = 0; j < lower.size(); ++j)
            if (!(upper[j] > lower[j])) throw Error(ErrorCode::InvalidArgument, "noise upper bound must exceed lower bound");
    }

    int size() const { return static_cast<int>(lower.size()); }

    /// Log density of the uniform restricted to the coordinates flagged in `use`.
    template <typename Mask>
    double log_density(const Eigen::VectorXd& x, const Mask& use) const {
        double out = 0.0;
        for (Eigen::Index j = 0; j < lower.size(); ++j) {
            if (!use(j)) continue;
            if (x[j] < lower[j] || x[j] > upper[j]) return kNegInf;
            out -= std::log(upper[j] - lower[j]);
        }
        return out;
    }

    double log_density(const Eigen::VectorXd& x) const {
        return log_density(x, [](Eigen::Index) { return true; });
    }

    double log_volume() const { return (upper - lower).array().log().sum(); }
};

/// Mixture of Gaussian DAG components plus an optional noise component.
/// Mixture index 0 is the noise component when present; Gaussian component
/// c then has mixture index c + 1.
class MdagModel {
public:
    MdagModel() = default;

    MdagModel(Eigen::VectorXd weights, std::vector<GaussianDag> components, std::optional<NoiseComponent> noise = {})
        : m_weights(std::move(weights)), m_components(std::move(components)), m_noise(std::move(noise)) {
        if (m_weights.size() != static_cast<Eigen::Index>(m_components.size() + (m_noise ? 1 : 0)))
            throw Error(ErrorCode::DimensionMismatch, "one weight per mixture component required");
        if (m_components.empty() && !m_noise) throw Error(ErrorCode::InvalidArgument, "model has no components");
        for (Eigen::Index c = 0; c < m_weights.size(); ++c)
            if (!(m_weights[c] >= 0.0)) throw Error(ErrorCode::InvalidArgument, "mixture weights must be nonnegative");
        if (std::abs(m_weights.sum() - 1.0) > 1e-12) throw Error(ErrorCode::InvalidArgument, "mixture weights must sum to one");
        const int n = dims();
        for (const auto& g : m_components)
            if (g.size() != n) throw Error(ErrorCode::DimensionMismatch, "components must share the variable count");
        if (m_noise && m_noise->size() != n) throw Error(ErrorCode::DimensionMismatch, "noise bounds length differs from variable count");
    }

    int dims() const { return m_components.empty() ? m_noise->size() : m_components.front().size(); }
    const Eigen::VectorXd& weights() const { return m_weights; }
    const std::vector<GaussianDag>& components() const { return m_components; }
    const std::optional<NoiseComponent>& noise() const { return m_noise; }
    bool has_noise() const { return m_noise.has_value(); }

    /// Mixture index of the first Gaussian component.
    int offset() const { return m_noise ? 1 : 0; }
    int gaussian_count() const { return static_cast<int>(m_components.size()); }
    int mixture_size() const { return static_cast<int>(m_weights.size()); }

    std::vector<DagStructure> structures() const {
        std::vector<DagStructure> out;
        for (const auto& g : m_components) out.push_back(g.structure());
        return out;
    }

private:
    Eigen::VectorXd m_weights;
    std::vector<GaussianDag> m_components;
    std::optional<NoiseComponent> m_noise;
};

inline double component_log_density(const GaussianDag& g, const Eigen::VectorXd& x) {
    if (x.size() != g.size())
        throw Error(ErrorCode::DimensionMismatch,
                    "point has " + std::to_string(x.size()) + " coordinates, model has " + std::to_string(g.size()));
    double out = 0.0;
    for (int i = 0; i < g.size(); ++i) out += log_normal_pdf(x[i], g.conditional_mean(i, x), g.variance()[i]);
    return out;
}

/// Log density of a fully observed point under the mixture.
inline double mdag_log_density(const MdagModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.dims())
        throw Error(ErrorCode::DimensionMismatch,
                    "point has " + std::to_string(x.size()) + " coordinates, model has " + std::to_string(model.dims()));
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(model.mixture_size()));
    if (model.has_noise()) terms.push_back(std::log(model.weights()[0]) + model.noise()->log_density(x));
    for (int c = 0; c < model.gaussian_count(); ++c) {
        const double w = model.weights()[c + model.offset()];
        terms.push_back(w > 0.0 ? std::log(w) + component_log_density(model.components()[c], x) : kNegInf);
    }
    const double out = log_sum_exp(terms);
    if (out == kNegInf && model.has_noise()) {
        bool gaussian_support = false;
        for (int c = 0; c < model.gaussian_count(); ++c) gaussian_support |= model.weights()[c + model.offset()] > 0.0;
        if (!gaussian_support) throw Error(ErrorCode::PointOutsideNoiseBounds, "point lies outside the noise box");
    }
    return out;
}

struct GaussianMoments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

/// Joint mean and covariance implied by a linear-Gaussian DAG, accumulated
/// along the topological order (equivalent to (I-B)^-1 V (I-B)^-T).
inline GaussianMoments to_multivariate_gaussian(const GaussianDag& g) {
    const int n = g.size();
    GaussianMoments out{Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)};
    const auto& order = g.structure().topological_order();
    for (std::size_t k = 0; k < order.size(); ++k) {
        const int i = order[k];
        const auto& ps = g.structure().parents(i);
        const auto& b = g.coefficients(i);
        out.mean[i] = g.intercept()[i];
        for (std::size_t p = 0; p < ps.size(); ++p) out.mean[i] += b[static_cast<Eigen::Index>(p)] * out.mean[ps[p]];
        for (std::size_t kk = 0; kk < k; ++kk) {
            const int j = order[kk];
            double cov = 0.0;
            for (std::size_t p = 0; p < ps.size(); ++p) cov += b[static_cast<Eigen::Index>(p)] * out.covariance(ps[p], j);
            out.covariance(i, j) = cov;
            out.covariance(j, i) = cov;
        }
        double var = g.variance()[i];
        for (std::size_t p = 0; p < ps.size(); ++p) var += b[static_cast<Eigen::Index>(p)] * out.covariance(ps[p], i);
        out.covariance(i, i) = var;
    }
    return out;
}

/// Ancestral sampling. Labels hold the mixture index of each case.
inline Dataset sample(const MdagModel& model, Eigen::Index count, Rng& rng) {
    const int n = model.dims();
    Dataset out;
    out.names = default_names(n);
    out.values.resize(count, n);
    out.labels.resize(static_cast<std::size_t>(count));
    Eigen::VectorXd x(n);
    for (Eigen::Index r = 0; r < count; ++r) {
        const int c = static_cast<int>(draw_categorical(rng, model.weights()));
        out.labels[static_cast<std::size_t>(r)] = c;
        if (model.has_noise() && c == 0) {
            for (int j = 0; j < n; ++j) x[j] = draw_uniform(rng, model.noise()->lower[j], model.noise()->upper[j]);
        } else {
            const auto& g = model.components()[c - model.offset()];
            for (int i : g.structure().topological_order())
                x[i] = g.conditional_mean(i, x) + std::sqrt(g.variance()[i]) * draw_normal(rng);
        }
        out.values.row(r) = x.transpose();
    }
    return out;
}

inline Dataset sample(const MdagModel& model, Eigen::Index count, std::uint64_t seed) {
    auto rng = make_stream(seed, "sample");
    return sample(model, count, rng);
}

}  // namespace mdag

#endif  // MDAG_MODEL_HPP
