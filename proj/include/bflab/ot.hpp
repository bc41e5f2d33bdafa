#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "bflab/error.hpp"

namespace bflab {

inline constexpr std::size_t kTransportSupportBudget = 2048;

/// Weighted points in R^dim, coordinates row-major.
struct WeightedPoints {
    int dim = 1;
    std::vector<double> coords;
    std::vector<double> weights;

    std::size_t size() const { return weights.size(); }
    const double* point(std::size_t i) const { return coords.data() + i * static_cast<std::size_t>(dim); }
    double mass() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
    void add(const std::vector<double>& z, double w) {
        require(static_cast<int>(z.size()) == dim, "point dimension mismatch");
        coords.insert(coords.end(), z.begin(), z.end());
        weights.push_back(w);
    }
};

struct TransportOptions {
    /// Period per axis; 0 (or an empty vector) means the axis is not periodic.
    std::vector<double> periods;
    std::size_t max_pivots = 0;  ///< 0 picks a cap proportional to the arc count
};

struct TransportResult {
    double distance = 0.0;  ///< W_2
    double cost = 0.0;      ///< W_2^2
    std::size_t pivots = 0;
};

namespace detail {

inline double squared_distance(const double* a, const double* b, int dim, const std::vector<double>& periods) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) {
        double d = a[k] - b[k];
        const double P = k < static_cast<int>(periods.size()) ? periods[k] : 0.0;
        if (P > 0.0) d -= P * std::round(d / P);
        s += d * d;
    }
    return s;
}

// Primal network simplex for the uncapacitated transportation problem on the
// complete bipartite graph, started from the artificial big-M basis and run
// with block-search pricing and the strongly feasible leaving-arc rule.
class TransportSimplex {
public:
    TransportSimplex(std::vector<double> supply, std::vector<double> demand, std::vector<double> cost)
        : m_(supply.size()), n_(demand.size()), cost_(std::move(cost)) {
        const std::size_t nodes = m_ + n_ + 1;
        root_ = static_cast<int>(m_ + n_);
        parent_.assign(nodes, -1);
        pred_.assign(nodes, -1);
        up_.assign(nodes, false);
        flow_.assign(nodes, 0.0);
        pot_.assign(nodes, 0.0);
        depth_.assign(nodes, 0);
        children_.assign(nodes, {});

        double cmax = 0.0;
        for (double c : cost_) cmax = std::max(cmax, c);
        art_ = (cmax + 1.0) * static_cast<double>(m_ + n_);
        eps_ = 1e-12 * std::max(cmax, 1e-300);

        for (std::size_t i = 0; i < m_; ++i) link(static_cast<int>(i), root_, artificial(i), true, supply[i], -art_);
        for (std::size_t j = 0; j < n_; ++j)
            link(static_cast<int>(m_ + j), root_, artificial(m_ + j), false, demand[j], art_);
    }

    // Returns the number of pivots; throws NumericalAbort past the cap.
    std::size_t solve(std::size_t cap) {
        const std::size_t arcs = m_ * n_;
        const std::size_t block = std::max<std::size_t>(std::size_t(std::sqrt(double(arcs))), 10);
        std::size_t next = 0, pivots = 0;
        while (true) {
            // Block search: scan from `next`, stop at the end of the first block
            // that contains an eligible arc and take its most negative one.
            std::size_t best = arcs, scanned = 0, inblock = 0;
            double best_rc = -eps_;
            while (scanned < arcs) {
                const double rc = reduced_cost(next);
                if (rc < best_rc) {
                    best_rc = rc;
                    best = next;
                }
                next = next + 1 == arcs ? 0 : next + 1;
                ++scanned;
                if (++inblock == block) {
                    if (best != arcs) break;
                    inblock = 0;
                }
            }
            if (best == arcs) break;
            pivot(best);
            if (++pivots > cap) throw NumericalAbort("transport simplex exceeded its pivot cap");
        }
        for (std::size_t v = 0; v < m_ + n_; ++v)
            if (pred_[v] >= static_cast<long>(arcs) && flow_[v] > 1e-12)
                throw NumericalAbort("transport simplex ended with artificial flow");
        return pivots;
    }

    double total_cost() const {
        const long arcs = static_cast<long>(m_ * n_);
        double s = 0.0;
        for (std::size_t v = 0; v < m_ + n_; ++v)
            if (pred_[v] >= 0 && pred_[v] < arcs) s += flow_[v] * cost_[static_cast<std::size_t>(pred_[v])];
        return s;
    }

private:
    std::size_t m_, n_;
    std::vector<double> cost_;
    int root_ = 0;
    double art_ = 1.0, eps_ = 0.0;
    // Tree: parent, id of the arc to the parent, whether that arc points up
    // (child -> parent), flow on it, node potentials, depth, children.
    std::vector<int> parent_;
    std::vector<long> pred_;
    std::vector<bool> up_;
    std::vector<double> flow_, pot_;
    std::vector<int> depth_;
    std::vector<std::vector<int>> children_;

    long artificial(std::size_t node) const { return static_cast<long>(m_ * n_ + node); }
    int src(std::size_t arc) const { return static_cast<int>(arc / n_); }
    int dst(std::size_t arc) const { return static_cast<int>(m_ + arc % n_); }

    double reduced_cost(std::size_t arc) const { return cost_[arc] + pot_[src(arc)] - pot_[dst(arc)]; }

    void link(int v, int p, long arc, bool up, double flow, double pot) {
        parent_[v] = p;
        pred_[v] = arc;
        up_[v] = up;
        flow_[v] = flow;
        pot_[v] = pot;
        depth_[v] = depth_[p] + 1;
        children_[p].push_back(v);
    }

    void detach(int v) {
        auto& c = children_[parent_[v]];
        c.erase(std::find(c.begin(), c.end(), v));
    }

    void pivot(std::size_t arc) {
        const int first = src(arc), second = dst(arc);
        const double rc = reduced_cost(arc);
        int a = first, b = second;
        while (a != b) {
            if (depth_[a] >= depth_[b]) a = parent_[a];
            else b = parent_[b];
        }
        const int join = a;

        // Pushing along first -> second -> join -> first: up arcs on the first
        // side and down arcs on the second side lose flow.
        double delta = std::numeric_limits<double>::infinity();
        int out = -1;
        bool out_first = true;
        for (int u = first; u != join; u = parent_[u])
            if (up_[u] && flow_[u] < delta) {
                delta = flow_[u];
                out = u;
                out_first = true;
            }
        for (int u = second; u != join; u = parent_[u])
            if (!up_[u] && flow_[u] <= delta) {
                delta = flow_[u];
                out = u;
                out_first = false;
            }
        if (out < 0) throw NumericalAbort("unbounded transport cycle");

        for (int u = first; u != join; u = parent_[u]) flow_[u] += up_[u] ? -delta : delta;
        for (int u = second; u != join; u = parent_[u]) flow_[u] += up_[u] ? delta : -delta;

        // Re-hang the subtree cut off by `out` below the other endpoint.
        const int stem = out_first ? first : second;
        const int anchor = out_first ? second : first;
        std::vector<int> path;
        for (int u = stem;; u = parent_[u]) {
            path.push_back(u);
            if (u == out) break;
        }
        std::vector<int> old_parent(path.size());
        std::vector<long> old_pred(path.size());
        std::vector<bool> old_up(path.size());
        std::vector<double> old_flow(path.size());
        for (std::size_t k = 0; k < path.size(); ++k) {
            old_parent[k] = parent_[path[k]];
            old_pred[k] = pred_[path[k]];
            old_up[k] = up_[path[k]];
            old_flow[k] = flow_[path[k]];
            detach(path[k]);
        }
        parent_[stem] = anchor;
        pred_[stem] = static_cast<long>(arc);
        up_[stem] = out_first;  // first -> second points toward the anchor iff stem == first
        flow_[stem] = delta;
        children_[anchor].push_back(stem);
        for (std::size_t k = 1; k < path.size(); ++k) {
            const int v = path[k];
            parent_[v] = path[k - 1];
            pred_[v] = old_pred[k - 1];
            up_[v] = !old_up[k - 1];
            flow_[v] = old_flow[k - 1];
            children_[path[k - 1]].push_back(v);
        }

        // Zero the entering arc's reduced cost by shifting the moved subtree.
        const double shift = out_first ? -rc : rc;
        std::vector<int> stack{stem};
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            pot_[v] += shift;
            depth_[v] = depth_[parent_[v]] + 1;
            for (int c : children_[v]) stack.push_back(c);
        }
    }
};

}  // namespace detail

/// Exact W_2 between two discrete probability measures with squared
/// Euclidean ground cost (minimum image on periodic axes).
inline TransportResult wasserstein2(const WeightedPoints& mu, const WeightedPoints& nu,
                                    const TransportOptions& opt = {}) {
    require(mu.dim == nu.dim, "measures live in different dimensions");
    require(mu.coords.size() == mu.size() * static_cast<std::size_t>(mu.dim) &&
                nu.coords.size() == nu.size() * static_cast<std::size_t>(nu.dim),
            "coordinate array does not match the weights");
    for (double w : mu.weights) require(w >= 0.0, "negative transport weight");
    for (double w : nu.weights) require(w >= 0.0, "negative transport weight");
    if (std::abs(mu.mass() - 1.0) > 1e-10 || std::abs(nu.mass() - 1.0) > 1e-10)
        throw InvalidArgument("transport needs two probability measures (mass 1 +- 1e-10)");
    if (mu.size() > kTransportSupportBudget || nu.size() > kTransportSupportBudget)
        throw BudgetExceeded("transport support exceeds 2048 points");

    std::vector<std::size_t> ia, ib;
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (mu.weights[i] > 0.0) ia.push_back(i);
    for (std::size_t j = 0; j < nu.size(); ++j)
        if (nu.weights[j] > 0.0) ib.push_back(j);
    require(!ia.empty() && !ib.empty(), "empty measure");

    std::vector<double> a(ia.size()), b(ib.size());
    for (std::size_t i = 0; i < ia.size(); ++i) a[i] = mu.weights[ia[i]];
    double mb = 0.0;
    for (std::size_t j = 0; j < ib.size(); ++j) mb += nu.weights[ib[j]];
    double ma = 0.0;
    for (double v : a) ma += v;
    // Exact mass balance for the simplex; the rescale is below 1e-10 relative.
    for (std::size_t j = 0; j < ib.size(); ++j) b[j] = nu.weights[ib[j]] * (ma / mb);

    std::vector<double> cost(ia.size() * ib.size());
    for (std::size_t i = 0; i < ia.size(); ++i)
        for (std::size_t j = 0; j < ib.size(); ++j)
            cost[i * ib.size() + j] =
                detail::squared_distance(mu.point(ia[i]), nu.point(ib[j]), mu.dim, opt.periods);

    TransportResult r;
    detail::TransportSimplex simplex(std::move(a), std::move(b), std::move(cost));
    const std::size_t cap = opt.max_pivots ? opt.max_pivots : 50 * (ia.size() * ib.size() + ia.size() + ib.size());
    r.pivots = simplex.solve(cap);
    r.cost = std::max(0.0, simplex.total_cost());
    r.distance = std::sqrt(r.cost);
    return r;
}

}  // namespace bflab
