#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "genmix/common.hpp"
#include "genmix/discriminator.hpp"
#include "genmix/matrix.hpp"
#include "genmix/rng.hpp"

namespace genmix {

// Hard ownership of every data point by exactly one component.
struct Assignment {
    std::vector<std::size_t> owner;
    std::size_t k = 0;
    std::int64_t generation = 0;
};

// Winner-take-all over the likelihood table: each point goes to the component
// with the highest estimated likelihood, lowest index on ties.
inline Assignment assign(const LikelihoodTable& table, std::int64_t generation) {
    const std::size_t n = table.values.rows();
    const std::size_t k = table.values.cols();
    if (n == 0 || k == 0) throw UsageError("assign: empty likelihood table");
    Assignment a;
    a.k = k;
    a.generation = generation;
    a.owner.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        double best_v = table.values(i, 0);
        if (!std::isfinite(best_v)) throw NumericError("assign: non-finite likelihood entry");
        for (std::size_t j = 1; j < k; ++j) {
            double v = table.values(i, j);
            if (!std::isfinite(v)) throw NumericError("assign: non-finite likelihood entry");
            if (v > best_v) {
                best_v = v;
                best = j;
            }
        }
        a.owner[i] = best;
    }
    return a;
}

// fraction of points each component owns
inline std::vector<double> mixing_weights(const Assignment& a) {
    if (a.owner.empty()) throw UsageError("mixing_weights: empty assignment");
    std::vector<double> w(a.k, 0.0);
    for (std::size_t o : a.owner) {
        if (o >= a.k) throw UsageError("mixing_weights: owner index out of range");
        w[o] += 1.0;
    }
    for (auto& v : w) v /= static_cast<double>(a.owner.size());
    return w;
}

inline Assignment uniform_init_split(std::size_t n, std::size_t k, Rng& rng) {
    if (k == 0) throw ConfigError("uniform_init_split: k must be positive");
    if (n < k) throw ConfigError("uniform_init_split: need at least one point per component");
    Assignment a;
    a.k = k;
    a.generation = 0;
    a.owner.resize(n);
    for (auto& o : a.owner) o = static_cast<std::size_t>(rng.below(k));
    return a;
}

// Per-component training lists. A component keeps the points it owns; one
// that owns fewer than min_points is topped up with the non-owned points it
// scores highest, so every component always has something to train on.
// Top-up points stay in their owner's list too.
inline std::vector<std::vector<std::size_t>> load_balance(const Assignment& a,
                                                          const LikelihoodTable& table,
                                                          std::size_t min_points) {
    const std::size_t n = a.owner.size();
    const std::size_t k = a.k;
    if (table.values.rows() != n || table.values.cols() != k)
        throw ConfigError("load_balance: table shape does not match assignment");
    if (min_points == 0) throw ConfigError("load_balance: min_points must be positive");
    if (min_points > n) throw ConfigError("load_balance: min_points exceeds dataset size");

    std::vector<std::vector<std::size_t>> lists(k);
    for (std::size_t i = 0; i < n; ++i) lists[a.owner[i]].push_back(i);

    std::vector<std::size_t> candidates;
    for (std::size_t j = 0; j < k; ++j) {
        if (lists[j].size() >= min_points) continue;
        std::size_t need = min_points - lists[j].size();
        candidates.clear();
        for (std::size_t i = 0; i < n; ++i)
            if (a.owner[i] != j) candidates.push_back(i);
        auto better = [&](std::size_t x, std::size_t y) {
            double vx = table.values(x, j), vy = table.values(y, j);
            if (vx != vy) return vx > vy;
            return x < y;
        };
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(need),
                          candidates.end(), better);
        lists[j].insert(lists[j].end(), candidates.begin(),
                        candidates.begin() + static_cast<std::ptrdiff_t>(need));
    }
    return lists;
}

// Soft table from squared distances to component centroids: softmax over
// components of -0.5 * ||x - mu_j||^2 per row. Rows sum to one (argmax is
// what the assignment step consumes); normalizers are unused here.
inline LikelihoodTable nearest_centroid_table(const Matrix& centroids, const Matrix& data) {
    const std::size_t k = centroids.rows();
    const std::size_t n = data.rows();
    if (k == 0 || n == 0) throw UsageError("nearest_centroid_table: empty input");
    if (centroids.cols() != data.cols())
        throw ConfigError("nearest_centroid_table: dimension mismatch");
    LikelihoodTable t;
    t.values.resize(n, k);
    t.normalizers.assign(k, 1.0);
    std::vector<double> score(k);
    for (std::size_t i = 0; i < n; ++i) {
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < k; ++j) {
            score[j] = -0.5 * squared_distance(data.row(i), centroids.row(j), data.cols());
            hi = std::max(hi, score[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            score[j] = std::exp(score[j] - hi);
            z += score[j];
        }
        for (std::size_t j = 0; j < k; ++j) t.values(i, j) = score[j] / z;
    }
    return t;
}

inline void write_assignment_csv(std::ostream& os, const Assignment& a) {
    os << "point_index,owner,generation\n";
    for (std::size_t i = 0; i < a.owner.size(); ++i)
        os << i << ',' << a.owner[i] << ',' << a.generation << '\n';
}

} // namespace genmix
