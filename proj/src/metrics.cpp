#include "gael/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gael {

namespace {

// Dense co-occurrence counts between two labelings plus marginals.
struct Contingency {
    std::size_t ka = 0, kb = 0, n = 0;
    std::vector<double> cells;  // ka x kb
    std::vector<double> ra, rb; // row / column marginals
    double cell(std::size_t i, std::size_t j) const { return cells[i * kb + j]; }
};

Contingency contingency(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("labelings differ in length: " + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()));
    if (a.empty()) throw std::invalid_argument("labelings must be nonempty");
    int ma = 0, mb = 0;
    for (std::size_t s = 0; s < a.size(); ++s) {
        if (a[s] < 0 || b[s] < 0) throw std::invalid_argument("labels must be nonnegative");
        ma = std::max(ma, a[s]);
        mb = std::max(mb, b[s]);
    }
    Contingency c;
    c.ka = static_cast<std::size_t>(ma) + 1;
    c.kb = static_cast<std::size_t>(mb) + 1;
    c.n = a.size();
    c.cells.assign(c.ka * c.kb, 0.0);
    c.ra.assign(c.ka, 0.0);
    c.rb.assign(c.kb, 0.0);
    for (std::size_t s = 0; s < a.size(); ++s) {
        c.cells[static_cast<std::size_t>(a[s]) * c.kb + static_cast<std::size_t>(b[s])] += 1.0;
        c.ra[static_cast<std::size_t>(a[s])] += 1.0;
        c.rb[static_cast<std::size_t>(b[s])] += 1.0;
    }
    return c;
}

double entropy(const std::vector<double>& marginal, double n) {
    double h = 0.0;
    for (double cnt : marginal)
        if (cnt > 0.0) h -= (cnt / n) * std::log(cnt / n);
    return h;
}

// True when the two labelings induce the same partition: every cluster of
// one maps onto exactly one cluster of the other.
bool same_partition(const Contingency& c) {
    for (std::size_t i = 0; i < c.ka; ++i) {
        std::size_t nz = 0;
        for (std::size_t j = 0; j < c.kb; ++j) nz += c.cell(i, j) > 0.0 ? 1 : 0;
        if (nz > 1) return false;
    }
    for (std::size_t j = 0; j < c.kb; ++j) {
        std::size_t nz = 0;
        for (std::size_t i = 0; i < c.ka; ++i) nz += c.cell(i, j) > 0.0 ? 1 : 0;
        if (nz > 1) return false;
    }
    return true;
}

// O(n^3) shortest-augmenting-path assignment solver with row/column
// potentials; returns row -> column of one minimum-cost perfect matching.
std::vector<std::size_t> solve_assignment(const std::vector<double>& cost, std::size_t n) {
    const double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);  // 1-indexed matching
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            std::size_t i0 = p[j0], j1 = 0;
            double delta = kInf;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> assign(n, 0);
    for (std::size_t j = 1; j <= n; ++j)
        if (p[j] != 0) assign[p[j] - 1] = j - 1;
    return assign;
}

// Total cost of an assignment, summed in ascending row order so equal
// assignments always produce the identical double.
double assignment_total(const std::vector<double>& cost, std::size_t n,
                        const std::vector<std::size_t>& assign) {
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) total += cost[r * n + assign[r]];
    return total;
}

}  // namespace

double nmi(const std::vector<int>& a, const std::vector<int>& b) {
    Contingency c = contingency(a, b);
    double n = static_cast<double>(c.n);
    double ha = entropy(c.ra, n);
    double hb = entropy(c.rb, n);
    if (ha == 0.0 && hb == 0.0) return 1.0;  // two single-cluster partitions agree
    if (ha == 0.0 || hb == 0.0) return 0.0;
    double mi = 0.0;
    for (std::size_t i = 0; i < c.ka; ++i)
        for (std::size_t j = 0; j < c.kb; ++j) {
            double nij = c.cell(i, j);
            if (nij > 0.0) mi += (nij / n) * std::log(n * nij / (c.ra[i] * c.rb[j]));
        }
    return std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0);
}

double ari(const std::vector<int>& a, const std::vector<int>& b) {
    Contingency c = contingency(a, b);
    if (c.n < 2) throw std::invalid_argument("ari needs at least two samples");
    auto comb2 = [](double x) { return 0.5 * x * (x - 1.0); };
    double index = 0.0;
    for (double nij : c.cells) index += comb2(nij);
    double rows = 0.0, cols = 0.0;
    for (double cnt : c.ra) rows += comb2(cnt);
    for (double cnt : c.rb) cols += comb2(cnt);
    double expected = rows * cols / comb2(static_cast<double>(c.n));
    double max_index = 0.5 * (rows + cols);
    if (max_index == expected) return same_partition(c) ? 1.0 : 0.0;
    return (index - expected) / (max_index - expected);
}

std::vector<std::size_t> hungarian(const Tensor& cost) {
    if (cost.rank() != 2 || cost.rows() != cost.cols() || cost.rows() == 0)
        throw ShapeError("hungarian: cost must be a nonempty square matrix, got " +
                         cost.shape_str());
    if (!cost.all_finite()) throw std::invalid_argument("hungarian: cost must be finite");
    std::size_t n = cost.rows();
    const std::vector<double>& c = cost.data;

    // One optimal assignment fixes the target total; then pick columns row by
    // row, keeping the smallest column that still completes to that total.
    // This yields the lexicographically smallest minimizing permutation.
    double best_total = assignment_total(c, n, solve_assignment(c, n));

    std::vector<std::size_t> result(n, 0);
    std::vector<char> col_used(n, 0);
    double prefix = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        std::size_t m = n - r - 1;  // rows below r left to assign
        double chosen_total = std::numeric_limits<double>::infinity();
        std::size_t chosen_col = n;
        for (std::size_t cand = 0; cand < n; ++cand) {
            if (col_used[cand]) continue;
            double total = prefix + c[r * n + cand];
            if (m > 0) {
                // assignment on the remaining rows and columns
                std::vector<std::size_t> rows_left, cols_left;
                for (std::size_t rr = r + 1; rr < n; ++rr) rows_left.push_back(rr);
                for (std::size_t cc = 0; cc < n; ++cc)
                    if (!col_used[cc] && cc != cand) cols_left.push_back(cc);
                std::vector<double> sub(m * m);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < m; ++j)
                        sub[i * m + j] = c[rows_left[i] * n + cols_left[j]];
                auto sub_assign = solve_assignment(sub, m);
                for (std::size_t i = 0; i < m; ++i)
                    total += c[rows_left[i] * n + cols_left[sub_assign[i]]];
            }
            if (total < chosen_total) {
                chosen_total = total;
                chosen_col = cand;
            }
            if (total <= best_total) {  // smallest column preserving optimality
                chosen_total = total;
                chosen_col = cand;
                break;
            }
        }
        result[r] = chosen_col;
        col_used[chosen_col] = 1;
        prefix += c[r * n + chosen_col];
        best_total = std::min(best_total, chosen_total);
    }
    return result;
}

double acc(const std::vector<int>& pred, const std::vector<int>& truth) {
    Contingency c = contingency(pred, truth);
    std::size_t k = std::max(c.ka, c.kb);  // pad to a common label count
    Tensor neg = Tensor::zeros({k, k});
    for (std::size_t i = 0; i < c.ka; ++i)
        for (std::size_t j = 0; j < c.kb; ++j) neg.at(i, j) = -c.cell(i, j);
    auto assign = hungarian(neg);
    double matched = 0.0;
    for (std::size_t i = 0; i < c.ka; ++i)
        if (assign[i] < c.kb) matched += c.cell(i, assign[i]);
    return matched / static_cast<double>(c.n);
}

ModeMetrics mode_metrics(const Tensor& samples, const Tensor& centers, double sigma,
                         double min_frac) {
    if (samples.rank() != 2 || samples.rows() == 0)
        throw ShapeError("mode_metrics: samples must be a nonempty (n x d) matrix, got " +
                         samples.shape_str());
    if (centers.rank() != 2 || centers.rows() == 0 || centers.cols() != samples.cols())
        throw ShapeError("mode_metrics: centers must be (K x d) matching samples, got " +
                         centers.shape_str());
    if (!(sigma > 0.0)) throw std::invalid_argument("mode_metrics: sigma must be positive");
    if (min_frac < 0.0 || min_frac > 1.0)
        throw std::invalid_argument("mode_metrics: min_frac must lie in [0, 1]");

    std::size_t n = samples.rows(), k = centers.rows(), d = samples.cols();
    double radius2 = 9.0 * sigma * sigma;  // (3*sigma)^2
    std::vector<std::size_t> near(k, 0);
    std::size_t off = 0;
    for (std::size_t s = 0; s < n; ++s) {
        bool near_any = false;
        for (std::size_t c = 0; c < k; ++c) {
            double dist2 = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                double r = samples.at(s, i) - centers.at(c, i);
                dist2 += r * r;
            }
            if (dist2 <= radius2) {
                ++near[c];
                near_any = true;
            }
        }
        if (!near_any) ++off;
    }

    ModeMetrics out;
    double need = min_frac * static_cast<double>(n) / static_cast<double>(k);
    for (std::size_t c = 0; c < k; ++c)
        if (static_cast<double>(near[c]) >= need) ++out.modes_covered;
    out.off_manifold_frac = static_cast<double>(off) / static_cast<double>(n);
    return out;
}

}  // namespace gael
