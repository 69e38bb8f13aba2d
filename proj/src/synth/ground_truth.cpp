#include "censoring/synth/ground_truth.hpp"

#include "censoring/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

namespace censoring::synth {

using nn::Matrix;

GaussianPair gaussian_pair(double rho, std::size_t n, nn::RngStream& rng) {
    if (!(std::abs(rho) < 1.0)) throw ConfigError("gaussian_pair: |rho| must be < 1");
    GaussianPair out;
    out.a.resize(n);
    out.b.resize(n);
    const double c = std::sqrt(1.0 - rho * rho);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.normal();
        const double v = rng.normal();
        out.a[i] = u;
        out.b[i] = rho * u + c * v;
    }
    return out;
}

double closed_form_gaussian_mi(double rho) {
    if (!(std::abs(rho) < 1.0)) throw ConfigError("closed_form_gaussian_mi: |rho| must be < 1");
    return -0.5 * std::log1p(-rho * rho);
}

double entropy(std::span<const double> probabilities) {
    double h = 0.0;
    for (double p : probabilities) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

namespace {

void check_masses(std::span<const double> masses, const char* who) {
    double total = 0.0;
    for (double m : masses) {
        if (!(m >= 0.0)) throw ConfigError(std::string(who) + ": negative or non-finite mass");
        total += m;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ConfigError(std::string(who) + ": masses sum to " + std::to_string(total) + ", expected 1");
    }
}

struct Arc {
    std::size_t to;
    std::size_t rev;
    double cap;
    double cost;
};

class MinCostFlow {
public:
    explicit MinCostFlow(std::size_t nodes) : graph_(nodes) {}

    void add_arc(std::size_t from, std::size_t to, double cap, double cost) {
        graph_[from].push_back({to, graph_[to].size(), cap, cost});
        graph_[to].push_back({from, graph_[from].size() - 1, 0.0, -cost});
    }

    /// Successive shortest paths with Johnson potentials; all initial costs are non-negative.
    double solve(std::size_t source, std::size_t sink, double required) {
        constexpr double tiny = 1e-15;
        const std::size_t n = graph_.size();
        std::vector<double> potential(n, 0.0);
        std::vector<double> dist(n);
        std::vector<std::size_t> prev_node(n);
        std::vector<std::size_t> prev_arc(n);
        double flow = 0.0;
        double cost = 0.0;
        std::size_t guard = 0;
        const std::size_t max_rounds = 4 * n * n + 16;

        while (flow < required - 1e-12) {
            if (++guard > max_rounds) throw NumericError("brute_force_w1: min-cost flow failed to converge");
            std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
            dist[source] = 0.0;
            using Item = std::pair<double, std::size_t>;
            std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
            heap.push({0.0, source});
            while (!heap.empty()) {
                auto [d, u] = heap.top();
                heap.pop();
                if (d > dist[u]) continue;
                for (std::size_t k = 0; k < graph_[u].size(); ++k) {
                    const Arc& a = graph_[u][k];
                    if (a.cap <= tiny) continue;
                    const double reduced = std::max(0.0, a.cost + potential[u] - potential[a.to]);
                    if (dist[u] + reduced < dist[a.to]) {
                        dist[a.to] = dist[u] + reduced;
                        prev_node[a.to] = u;
                        prev_arc[a.to] = k;
                        heap.push({dist[a.to], a.to});
                    }
                }
            }
            if (!std::isfinite(dist[sink])) throw ConfigError("brute_force_w1: infeasible transport problem");
            for (std::size_t v = 0; v < n; ++v) {
                if (std::isfinite(dist[v])) potential[v] += dist[v];
            }
            double push = required - flow;
            for (std::size_t v = sink; v != source; v = prev_node[v]) {
                push = std::min(push, graph_[prev_node[v]][prev_arc[v]].cap);
            }
            for (std::size_t v = sink; v != source; v = prev_node[v]) {
                Arc& a = graph_[prev_node[v]][prev_arc[v]];
                a.cap -= push;
                graph_[v][a.rev].cap += push;
                cost += push * a.cost;
            }
            flow += push;
        }
        return cost;
    }

private:
    std::vector<std::vector<Arc>> graph_;
};

}  // namespace

double exact_discrete_mi(const Matrix& joint) {
    if (joint.empty()) throw ConfigError("exact_discrete_mi: empty table");
    check_masses(joint.data(), "exact_discrete_mi");
    std::vector<double> pa(joint.rows(), 0.0);
    std::vector<double> pb(joint.cols(), 0.0);
    for (std::size_t i = 0; i < joint.rows(); ++i) {
        for (std::size_t j = 0; j < joint.cols(); ++j) {
            pa[i] += joint(i, j);
            pb[j] += joint(i, j);
        }
    }
    double mi = 0.0;
    for (std::size_t i = 0; i < joint.rows(); ++i) {
        for (std::size_t j = 0; j < joint.cols(); ++j) {
            const double p = joint(i, j);
            if (p > 0.0) mi += p * std::log(p / (pa[i] * pb[j]));
        }
    }
    return std::max(mi, 0.0);
}

double brute_force_w1(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    const std::size_t n = mu.points.rows();
    const std::size_t m = nu.points.rows();
    if (n == 0 || m == 0) throw ConfigError("brute_force_w1: empty support");
    if (mu.masses.size() != n || nu.masses.size() != m) throw ConfigError("brute_force_w1: one mass per support point");
    if (mu.points.cols() != nu.points.cols()) {
        throw ConfigError("brute_force_w1: support dimensions differ " + mu.points.shape_string() + " vs " +
                          nu.points.shape_string());
    }
    check_masses(mu.masses, "brute_force_w1 (mu)");
    check_masses(nu.masses, "brute_force_w1 (nu)");

    const std::size_t source = n + m;
    const std::size_t sink = n + m + 1;
    MinCostFlow flow(n + m + 2);
    for (std::size_t i = 0; i < n; ++i) flow.add_arc(source, i, mu.masses[i], 0.0);
    for (std::size_t j = 0; j < m; ++j) flow.add_arc(n + j, sink, nu.masses[j], 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double dist = 0.0;
            for (std::size_t c = 0; c < mu.points.cols(); ++c) dist += std::abs(mu.points(i, c) - nu.points(j, c));
            flow.add_arc(i, n + j, 2.0, dist);
        }
    }
    double required = 0.0;
    for (double v : mu.masses) required += v;
    double available = 0.0;
    for (double v : nu.masses) available += v;
    return flow.solve(source, sink, std::min(required, available));
}

double sorted_sample_w1(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw ConfigError("sorted_sample_w1: samples must be nonempty and equal size");
    std::vector<double> sa(a.begin(), a.end());
    std::vector<double> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    double total = 0.0;
    for (std::size_t i = 0; i < sa.size(); ++i) total += std::abs(sa[i] - sb[i]);
    return total / static_cast<double>(sa.size());
}

}  // namespace censoring::synth
