#ifndef MDAG_SEARCH_HPP
#define MDAG_SEARCH_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bayes.hpp"
#include "error.hpp"
#include "model.hpp"
#include "scoring.hpp"
#include "stats.hpp"

namespace mdag {

/// Declaration order is the tie-break order among equal-gain moves.
enum class MoveKind { Delete, Reverse, Add };

inline const char* to_string(MoveKind kind) {
    switch (kind) {
        case MoveKind::Delete: return "delete";
        case MoveKind::Reverse: return "reverse";
        case MoveKind::Add: return "add";
    }
    return "?";
}

struct ArcMove {
    int component = 0;
    MoveKind kind = MoveKind::Add;
    int from = 0;
    int to = 0;

    friend bool operator==(const ArcMove&, const ArcMove&) = default;
};

inline bool move_order(const ArcMove& a, const ArcMove& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    if (a.to != b.to) return a.to < b.to;
    return a.from < b.from;
}

inline DagStructure apply_move(const DagStructure& s, const ArcMove& m) {
    auto parents = s.parent_lists();
    auto drop = [&](int child, int parent) {
        auto& ps = parents[child];
        ps.erase(std::remove(ps.begin(), ps.end(), parent), ps.end());
    };
    switch (m.kind) {
        case MoveKind::Delete: drop(m.to, m.from); break;
        case MoveKind::Add: parents[m.to].push_back(m.from); break;
        case MoveKind::Reverse:
            drop(m.to, m.from);
            parents[m.from].push_back(m.to);
            break;
    }
    return DagStructure(s.size(), std::move(parents));
}

/// All single-arc additions, deletions and reversals that keep the graph
/// acyclic (and within the parent cap), in tie-break order.
inline std::vector<ArcMove> neighbors(const DagStructure& s, std::optional<int> max_parents = std::nullopt, int component = 0) {
    const int n = s.size();
    auto room = [&](int child) { return !max_parents || static_cast<int>(s.parents(child).size()) < *max_parents; };
    std::vector<ArcMove> out;
    for (int to = 0; to < n; ++to)
        for (int from : s.parents(to)) out.push_back({component, MoveKind::Delete, from, to});
    for (int to = 0; to < n; ++to)
        for (int from : s.parents(to))
            if (room(from) && !s.reaches(from, to, std::pair{from, to})) out.push_back({component, MoveKind::Reverse, from, to});
    for (int to = 0; to < n; ++to) {
        if (!room(to)) continue;
        for (int from = 0; from < n; ++from)
            if (from != to && !s.has_arc(from, to) && !s.reaches(to, from)) out.push_back({component, MoveKind::Add, from, to});
    }
    std::sort(out.begin(), out.end(), move_order);
    return out;
}

struct SearchOptions {
    std::optional<int> max_parents;
    /// An accepted move must raise the score by more than this.
    double epsilon = 1e-9;
    std::size_t max_moves = 100000;
    /// Relative gap below which two gains count as equal.
    double tie_tolerance = 1e-9;
};

struct MoveRecord {
    ArcMove move;
    double gain = 0.0;
    /// Running total after the move, from delta updates only.
    double incremental_score = 0.0;
};

struct SearchResult {
    DagStructure structure;
    double score = 0.0;
    std::vector<MoveRecord> moves;
};

/// Called after each accepted move with the structure it produced.
using MoveObserver = std::function<void(const DagStructure&, const MoveRecord&)>;

/// Memoized family scores over one set of statistics.
class LocalScoreCache {
public:
    explicit LocalScoreCache(const FamilyScorer& scorer) : m_scorer(&scorer) {}

    double family(const std::vector<int>& sorted_family) {
        if (sorted_family.empty()) return 0.0;
        auto it = m_cache.find(sorted_family);
        if (it != m_cache.end()) return it->second;
        const double v = (*m_scorer)(sorted_family);
        m_cache.emplace(sorted_family, v);
        return v;
    }

    double local(int child, std::vector<int> parents) {
        std::sort(parents.begin(), parents.end());
        const double pa = family(parents);
        parents.insert(std::upper_bound(parents.begin(), parents.end(), child), child);
        return family(parents) - pa;
    }

private:
    const FamilyScorer* m_scorer;
    std::map<std::vector<int>, double> m_cache;
};

/// Hill climbing on the summed family scores: take the best-improving move
/// until none improves by more than epsilon. Only the families whose parent
/// sets change are rescored.
inline SearchResult greedy_component_search(const SuffStats& stats, const NormalWishartPrior& prior, const DagStructure& init,
                                            const SearchOptions& options = {}, const MoveObserver& observer = {},
                                            int component = 0) {
    if (init.size() != prior.dims()) throw Error(ErrorCode::DimensionMismatch, "structure and prior dimensions differ");
    const FamilyScorer scorer(prior, stats);
    LocalScoreCache cache(scorer);
    const int n = init.size();

    SearchResult out{init, 0.0, {}};
    std::vector<double> locals(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        locals[i] = cache.local(i, init.parents(i));
        out.score += locals[i];
    }

    auto without = [](std::vector<int> ps, int drop) {
        ps.erase(std::remove(ps.begin(), ps.end(), drop), ps.end());
        return ps;
    };
    auto with = [](std::vector<int> ps, int add) {
        ps.push_back(add);
        return ps;
    };

    while (out.moves.size() < options.max_moves) {
        const auto& s = out.structure;
        std::optional<ArcMove> best;
        double best_gain = 0.0;
        for (const auto& m : neighbors(s, options.max_parents, component)) {
            double gain = 0.0;
            switch (m.kind) {
                case MoveKind::Delete: gain = cache.local(m.to, without(s.parents(m.to), m.from)) - locals[m.to]; break;
                case MoveKind::Add: gain = cache.local(m.to, with(s.parents(m.to), m.from)) - locals[m.to]; break;
                case MoveKind::Reverse:
                    gain = cache.local(m.to, without(s.parents(m.to), m.from)) - locals[m.to] +
                           cache.local(m.from, with(s.parents(m.from), m.to)) - locals[m.from];
                    break;
            }
            // Score-equivalent alternatives differ only by round-off; treat
            // them as ties so the move order decides.
            if (!(gain > options.epsilon)) continue;
            if (!best || gain > best_gain + options.tie_tolerance * std::max(1.0, std::abs(best_gain))) {
                best_gain = gain;
                best = m;
            }
        }
        if (!best) break;

        out.structure = apply_move(s, *best);
        const double incremental = out.score + best_gain;
        locals[best->to] = cache.local(best->to, out.structure.parents(best->to));
        if (best->kind == MoveKind::Reverse) locals[best->from] = cache.local(best->from, out.structure.parents(best->from));
        // Re-sync the running total from the per-node terms.
        out.score = 0.0;
        for (double v : locals) out.score += v;
        out.moves.push_back({*best, best_gain, incremental});
        if (observer) observer(out.structure, out.moves.back());
    }
    return out;
}

/// Independent greedy search for every Gaussian component; the noise
/// triple (mixture index 0 when `has_noise`) is skipped.
inline std::vector<SearchResult> search_all_components(const Ecmss& stats, const std::vector<DagStructure>& structures,
                                                       const std::vector<NormalWishartPrior>& priors, bool has_noise,
                                                       const SearchOptions& options = {},
                                                       const std::function<void(int, const DagStructure&, const MoveRecord&)>& observer = {}) {
    const int offset = has_noise ? 1 : 0;
    if (stats.mixture_size() != static_cast<int>(structures.size()) + offset || priors.size() != structures.size())
        throw Error(ErrorCode::ShapeMismatch, "statistics, structures and priors disagree on the component count");
    std::vector<SearchResult> out;
    for (std::size_t c = 0; c < structures.size(); ++c) {
        MoveObserver obs;
        if (observer) obs = [&, c](const DagStructure& s, const MoveRecord& r) { observer(static_cast<int>(c), s, r); };
        out.push_back(greedy_component_search(stats.triples[c + static_cast<std::size_t>(offset)], priors[c], structures[c], options,
                                              obs, static_cast<int>(c)));
    }
    return out;
}

/// Completed partially directed graph of a Markov equivalence class.
class Cpdag {
public:
    explicit Cpdag(int n = 0) : m_n(n), m_marks(static_cast<std::size_t>(n * n), 0) {}

    int size() const { return m_n; }
    bool adjacent(int a, int b) const { return mark(a, b) || mark(b, a); }
    bool directed(int from, int to) const { return mark(from, to) && !mark(to, from); }
    bool undirected(int a, int b) const { return mark(a, b) && mark(b, a); }

    void set_undirected(int a, int b) { mark(a, b) = mark(b, a) = 1; }
    void orient(int from, int to) {
        mark(from, to) = 1;
        mark(to, from) = 0;
    }

    friend bool operator==(const Cpdag&, const Cpdag&) = default;

private:
    unsigned char mark(int a, int b) const { return m_marks[static_cast<std::size_t>(a * m_n + b)]; }
    unsigned char& mark(int a, int b) { return m_marks[static_cast<std::size_t>(a * m_n + b)]; }

    int m_n;
    std::vector<unsigned char> m_marks;
};

/// Keeps v-structure arcs directed, then propagates orientations with
/// Meek's rules 1-3 until nothing changes.
inline Cpdag to_cpdag(const DagStructure& s) {
    const int n = s.size();
    Cpdag g(n);
    for (auto [from, to] : s.arcs()) g.set_undirected(from, to);
    for (int z = 0; z < n; ++z) {
        const auto& ps = s.parents(z);
        for (std::size_t a = 0; a < ps.size(); ++a)
            for (std::size_t b = a + 1; b < ps.size(); ++b)
                if (!g.adjacent(ps[a], ps[b])) {
                    g.orient(ps[a], z);
                    g.orient(ps[b], z);
                }
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                if (a == b || !g.undirected(a, b)) continue;
                bool compel = false;
                for (int c = 0; c < n && !compel; ++c) {
                    if (c == a || c == b) continue;
                    // R1: c -> a - b, c and b nonadjacent.
                    if (g.directed(c, a) && !g.adjacent(c, b)) compel = true;
                    // R2: a -> c -> b with a - b.
                    if (g.directed(a, c) && g.directed(c, b)) compel = true;
                }
                // R3: a - c -> b and a - d -> b, c and d nonadjacent.
                for (int c = 0; c < n && !compel; ++c) {
                    if (c == a || c == b || !g.undirected(a, c) || !g.directed(c, b)) continue;
                    for (int d = c + 1; d < n && !compel; ++d)
                        if (d != a && d != b && g.undirected(a, d) && g.directed(d, b) && !g.adjacent(c, d)) compel = true;
                }
                if (compel) {
                    g.orient(a, b);
                    changed = true;
                }
            }
    }
    return g;
}

/// Arc difference modulo equivalence: Hamming distance between the two
/// equivalence-class graphs, one per vertex pair whose edge state differs.
inline int structural_difference(const DagStructure& learned, const DagStructure& gold) {
    if (learned.size() != gold.size()) throw Error(ErrorCode::DimensionMismatch, "structures have different node counts");
    const Cpdag a = to_cpdag(learned);
    const Cpdag b = to_cpdag(gold);
    int out = 0;
    for (int i = 0; i < a.size(); ++i)
        for (int j = i + 1; j < a.size(); ++j) {
            const bool same = a.adjacent(i, j) == b.adjacent(i, j) && a.directed(i, j) == b.directed(i, j) &&
                              a.directed(j, i) == b.directed(j, i);
            if (!same) ++out;
        }
    return out;
}

}  // namespace mdag

#endif  // MDAG_SEARCH_HPP
