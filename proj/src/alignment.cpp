#include "openima/alignment.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace openima {

namespace {

// O(n^3) potentials algorithm, minimizing; costs fit comfortably in
// long long for count matrices.
long long solve_min_cost(const std::vector<std::vector<long long>>& cost) {
    int n = static_cast<int>(cost.size());
    const long long INF = std::numeric_limits<long long>::max() / 4;
    std::vector<long long> u(n + 1), v(n + 1);
    std::vector<int> p(n + 1), way(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<long long> minv(n + 1, INF);
        std::vector<char> used(n + 1, false);
        do {
            used[j0] = true;
            int i0 = p[j0], j1 = 0;
            long long delta = INF;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                long long cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
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
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    long long total = 0;
    for (int j = 1; j <= n; ++j)
        if (p[j]) total += cost[p[j] - 1][j - 1];
    return total;
}

// Optimal total over the free rows/columns only (pads to square with
// zeros, so surplus rows may stay unassigned at zero gain).
long long best_total(const std::vector<std::vector<long long>>& counts,
                     const std::vector<int>& rows, const std::vector<int>& cols) {
    if (rows.empty()) return 0;
    int n = static_cast<int>(std::max(rows.size(), cols.size()));
    std::vector<std::vector<long long>> cost(n, std::vector<long long>(n, 0));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            cost[i][j] = -counts[rows[i]][cols[j]];
    return -solve_min_cost(cost);
}

}  // namespace

Assignment hungarian_max(const std::vector<std::vector<long long>>& counts) {
    if (counts.empty() || counts[0].empty())
        throw std::invalid_argument("hungarian: empty matrix");
    std::size_t nc = counts[0].size();
    for (const auto& row : counts) {
        if (row.size() != nc) throw std::invalid_argument("hungarian: ragged matrix");
        for (long long v : row)
            if (v < 0)
                throw std::invalid_argument("hungarian: negative entry " + std::to_string(v));
    }
    std::size_t nr = counts.size();

    std::vector<int> all_cols(nc);
    for (std::size_t j = 0; j < nc; ++j) all_cols[j] = static_cast<int>(j);
    std::vector<int> rest_rows(nr);
    for (std::size_t i = 0; i < nr; ++i) rest_rows[i] = static_cast<int>(i);

    long long best = best_total(counts, rest_rows, all_cols);

    // fix rows one at a time, trying columns in ascending order and
    // keeping the first choice that preserves the optimum; this yields
    // the lexicographically smallest optimal assignment
    Assignment out;
    out.row_to_col.assign(nr, -1);
    out.total = best;
    std::vector<int> free_cols = all_cols;
    long long fixed = 0;
    for (std::size_t r = 0; r < nr; ++r) {
        rest_rows.erase(rest_rows.begin());
        int chosen = -1;
        for (std::size_t ci = 0; ci < free_cols.size(); ++ci) {
            int c = free_cols[ci];
            std::vector<int> cols_left = free_cols;
            cols_left.erase(cols_left.begin() + ci);
            long long rest = best_total(counts, rest_rows, cols_left);
            if (fixed + counts[r][c] + rest == best) {
                chosen = c;
                fixed += counts[r][c];
                free_cols = std::move(cols_left);
                break;
            }
        }
        out.row_to_col[r] = chosen;  // -1 when leaving the row out is optimal
    }
    return out;
}

ClassAlignment fit_alignment(const std::vector<int>& clusters, const std::vector<int>& labels,
                             int k, int n_seen) {
    if (clusters.empty()) throw std::invalid_argument("alignment: empty labeled set");
    if (clusters.size() != labels.size())
        throw std::invalid_argument("alignment: cluster/label count mismatch");
    if (k < 1 || n_seen < 1) throw std::invalid_argument("alignment: bad k or n_seen");
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        if (clusters[i] < 0 || clusters[i] >= k)
            throw std::invalid_argument("alignment: cluster id out of range at " +
                                        std::to_string(i));
        if (labels[i] < 0 || labels[i] >= n_seen)
            throw std::invalid_argument("alignment: label out of seen range at " +
                                        std::to_string(i));
    }

    std::vector<std::vector<long long>> agree(n_seen, std::vector<long long>(k, 0));
    for (std::size_t i = 0; i < clusters.size(); ++i) ++agree[labels[i]][clusters[i]];
    Assignment assignment = hungarian_max(agree);

    ClassAlignment out;
    out.n_seen = n_seen;
    out.mapping.assign(k, -1);
    out.matched.assign(k, false);
    for (int c = 0; c < n_seen; ++c) {
        int cluster = assignment.row_to_col[c];
        if (cluster >= 0) {
            out.mapping[cluster] = c;
            out.matched[cluster] = true;
        }
    }
    int next_novel = n_seen;
    for (int cluster = 0; cluster < k; ++cluster)
        if (!out.matched[cluster]) out.mapping[cluster] = next_novel++;
    return out;
}

std::vector<int> predict(const ClassAlignment& alignment, const std::vector<int>& clusters) {
    std::vector<int> out(clusters.size());
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        int c = clusters[i];
        if (c < 0 || c >= static_cast<int>(alignment.mapping.size()))
            throw std::invalid_argument("predict: cluster id out of range");
        out[i] = alignment.mapping[c];
    }
    return out;
}

GroupAccuracy eval_accuracy(const std::vector<int>& y_true, const std::vector<int>& clusters,
                            const std::vector<bool>& is_seen, int n_classes, int k) {
    std::size_t n = y_true.size();
    if (clusters.size() != n || is_seen.size() != n)
        throw std::invalid_argument("eval: input sizes disagree");
    if (n == 0) throw std::invalid_argument("eval: empty test set");

    std::vector<std::vector<long long>> counts(n_classes, std::vector<long long>(k, 0));
    for (std::size_t i = 0; i < n; ++i) {
        if (y_true[i] < 0 || y_true[i] >= n_classes)
            throw std::invalid_argument("eval: true label out of range");
        if (clusters[i] < 0 || clusters[i] >= k)
            throw std::invalid_argument("eval: cluster id out of range");
        ++counts[y_true[i]][clusters[i]];
    }
    Assignment assignment = hungarian_max(counts);

    std::size_t right = 0, right_seen = 0, right_novel = 0, n_seen_pts = 0, n_novel_pts = 0;
    for (std::size_t i = 0; i < n; ++i) {
        bool ok = assignment.row_to_col[y_true[i]] == clusters[i];
        if (ok) ++right;
        if (is_seen[i]) {
            ++n_seen_pts;
            if (ok) ++right_seen;
        } else {
            ++n_novel_pts;
            if (ok) ++right_novel;
        }
    }
    GroupAccuracy acc;
    acc.all = static_cast<double>(right) / static_cast<double>(n);
    if (n_seen_pts > 0) acc.seen = static_cast<double>(right_seen) / n_seen_pts;
    if (n_novel_pts > 0) acc.novel = static_cast<double>(right_novel) / n_novel_pts;
    return acc;
}

}  // namespace openima
