#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "genmix/common.hpp"
#include "genmix/matrix.hpp"

namespace genmix {

// Scott's rule for an isotropic Gaussian kernel: m^(-1/(d+4)) times the
// pooled per-dimension standard deviation (sqrt of the mean unbiased
// variance). Floored at 1e-6 so fully collapsed sample sets still evaluate
// to something finite instead of crashing the run.
inline double scott_bandwidth(const Matrix& samples) {
    const std::size_t m = samples.rows();
    const std::size_t d = samples.cols();
    if (m < 2 || d == 0) throw ConfigError("scott_bandwidth: need at least 2 samples");
    double var_sum = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < m; ++i) mean += samples(i, c);
        mean /= static_cast<double>(m);
        double ss = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double dev = samples(i, c) - mean;
            ss += dev * dev;
        }
        var_sum += ss / static_cast<double>(m - 1);
    }
    double sigma = std::sqrt(var_sum / static_cast<double>(d));
    double h = std::pow(static_cast<double>(m), -1.0 / (static_cast<double>(d) + 4.0)) * sigma;
    return std::max(h, 1e-6);
}

// Mean log density of eval_points under an isotropic Gaussian KDE fitted to
// `samples`. Summed in log space; the per-point inner sum uses the max-shift
// trick so narrow bandwidths cannot underflow to -inf unless truly degenerate.
inline double kde_log_likelihood(const Matrix& samples, const Matrix& eval_points, double h) {
    const std::size_t m = samples.rows();
    const std::size_t d = samples.cols();
    if (m == 0) throw ConfigError("kde: no samples");
    if (eval_points.rows() == 0) throw ConfigError("kde: no evaluation points");
    if (eval_points.cols() != d) throw ConfigError("kde: dimension mismatch");
    if (!(h > 0.0)) throw ConfigError("kde: bandwidth must be positive");

    const double inv2h2 = 1.0 / (2.0 * h * h);
    const double log_norm = -0.5 * static_cast<double>(d) * std::log(kTwoPi * h * h) -
                            std::log(static_cast<double>(m));
    double total = 0.0;
    std::vector<double> e(m);
    for (std::size_t i = 0; i < eval_points.rows(); ++i) {
        const double* x = eval_points.row(i);
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < m; ++s) {
            e[s] = -squared_distance(x, samples.row(s), d) * inv2h2;
            hi = std::max(hi, e[s]);
        }
        double acc = 0.0;
        for (std::size_t s = 0; s < m; ++s) acc += std::exp(e[s] - hi);
        total += hi + std::log(acc) + log_norm;
    }
    return total / static_cast<double>(eval_points.rows());
}

// Convex generators for f-divergences between categorical distributions.
enum class FGen { kl, reverse_kl, total_variation, js };

inline const char* fgen_name(FGen f) {
    switch (f) {
        case FGen::kl: return "kl";
        case FGen::reverse_kl: return "reverse_kl";
        case FGen::total_variation: return "total_variation";
        case FGen::js: return "js";
    }
    return "?";
}

namespace detail {

inline void check_distribution(const std::vector<double>& p, const char* what) {
    double s = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ConfigError(std::string(what) + ": entries must be finite and nonnegative");
        s += v;
    }
    if (std::fabs(s - 1.0) > 1e-9)
        throw ConfigError(std::string(what) + ": probabilities must sum to 1, got " +
                          std::to_string(s));
}

// x log(x / y) with the 0 log 0 = 0 convention; caller guards y = 0 < x
inline double xlogx_over(double x, double y) {
    if (x == 0.0) return 0.0;
    return x * std::log(x / y);
}

} // namespace detail

// D_f(Q || P) over a shared finite support. Zero-mass conventions follow the
// limits of the generators: kl is undefined when Q puts mass where P has
// none, reverse_kl when P puts mass where Q has none; total variation and
// js extend continuously to every zero pattern.
inline double f_divergence(const std::vector<double>& q, const std::vector<double>& p, FGen f) {
    if (q.size() != p.size() || q.empty())
        throw ConfigError("f_divergence: distributions must share a nonempty support");
    detail::check_distribution(q, "f_divergence: q");
    detail::check_distribution(p, "f_divergence: p");
    double acc = 0.0;
    switch (f) {
        case FGen::kl:
            for (std::size_t i = 0; i < q.size(); ++i) {
                if (q[i] > 0.0 && p[i] == 0.0)
                    throw DomainError("kl divergence undefined: q has mass where p has none");
                acc += detail::xlogx_over(q[i], p[i]);
            }
            return acc;
        case FGen::reverse_kl:
            for (std::size_t i = 0; i < q.size(); ++i) {
                if (p[i] > 0.0 && q[i] == 0.0)
                    throw DomainError("reverse kl undefined: p has mass where q has none");
                acc += detail::xlogx_over(p[i], q[i]);
            }
            return acc;
        case FGen::total_variation:
            for (std::size_t i = 0; i < q.size(); ++i) acc += std::fabs(q[i] - p[i]);
            return 0.5 * acc;
        case FGen::js:
            for (std::size_t i = 0; i < q.size(); ++i) {
                double mid = 0.5 * (q[i] + p[i]);
                if (mid == 0.0) continue;
                acc += 0.5 * detail::xlogx_over(q[i], mid) + 0.5 * detail::xlogx_over(p[i], mid);
            }
            return acc;
    }
    throw ConfigError("f_divergence: unknown generator");
}

struct MixtureBound {
    double mixture_divergence = 0.0;
    double weighted_sum = 0.0;
    double gap = 0.0;  // weighted_sum - mixture_divergence, nonnegative by convexity
};

// Compares D_f(sum_j a_j Q_j || sum_j a_j P_j) against sum_j a_j D_f(Q_j || P_j).
// Joint convexity of f-divergences makes the mixture side never larger.
inline MixtureBound mixture_bound_gap(const std::vector<std::vector<double>>& q,
                                      const std::vector<std::vector<double>>& p,
                                      const std::vector<double>& alpha, FGen f) {
    const std::size_t k = q.size();
    if (k == 0 || p.size() != k || alpha.size() != k)
        throw ConfigError("mixture_bound_gap: need matching q, p, alpha collections");
    const std::size_t s = q[0].size();
    double asum = 0.0;
    for (double a : alpha) {
        if (!(a >= 0.0)) throw ConfigError("mixture_bound_gap: weights must be nonnegative");
        asum += a;
    }
    if (std::fabs(asum - 1.0) > 1e-9)
        throw ConfigError("mixture_bound_gap: weights must sum to 1");
    std::vector<double> qm(s, 0.0), pm(s, 0.0);
    MixtureBound r;
    for (std::size_t j = 0; j < k; ++j) {
        if (q[j].size() != s || p[j].size() != s)
            throw ConfigError("mixture_bound_gap: all distributions must share one support");
        r.weighted_sum += alpha[j] * f_divergence(q[j], p[j], f);
        for (std::size_t i = 0; i < s; ++i) {
            qm[i] += alpha[j] * q[j][i];
            pm[i] += alpha[j] * p[j][i];
        }
    }
    r.mixture_divergence = f_divergence(qm, pm, f);
    r.gap = r.weighted_sum - r.mixture_divergence;
    return r;
}

// Classic batch k-means. Ties go to the lowest index; a cluster that loses
// all its points keeps its previous centroid. Iterates to a fixed point of
// the assignment (or max_iters), tracking the objective
// sum_i 0.5 * ||x_i - mu_owner(i)||^2, which may never increase.
struct LloydResult {
    Matrix centroids;
    std::vector<std::size_t> assignment;
    int iterations = 0;
    double objective = 0.0;
};

inline std::vector<std::size_t> nearest_assignment(const Matrix& centroids, const Matrix& data) {
    std::vector<std::size_t> owner(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) {
        std::size_t best = 0;
        double best_d = squared_distance(data.row(i), centroids.row(0), data.cols());
        for (std::size_t j = 1; j < centroids.rows(); ++j) {
            double dd = squared_distance(data.row(i), centroids.row(j), data.cols());
            if (dd < best_d) {
                best_d = dd;
                best = j;
            }
        }
        owner[i] = best;
    }
    return owner;
}

inline double kmeans_objective(const Matrix& data, const Matrix& centroids,
                               const std::vector<std::size_t>& owner) {
    double obj = 0.0;
    for (std::size_t i = 0; i < data.rows(); ++i)
        obj += 0.5 * squared_distance(data.row(i), centroids.row(owner[i]), data.cols());
    return obj;
}

inline LloydResult lloyd(const Matrix& data, Matrix centroids, int max_iters = 1000) {
    if (data.rows() == 0 || centroids.rows() == 0)
        throw ConfigError("lloyd: empty data or centroids");
    if (data.cols() != centroids.cols()) throw ConfigError("lloyd: dimension mismatch");
    const std::size_t k = centroids.rows();
    LloydResult r;
    r.assignment = nearest_assignment(centroids, data);
    double prev_obj = kmeans_objective(data, centroids, r.assignment);
    for (int it = 0; it < max_iters; ++it) {
        // update step: each nonempty cluster moves to the mean of its points
        std::vector<std::size_t> counts(k, 0);
        Matrix sums(k, data.cols(), 0.0);
        for (std::size_t i = 0; i < data.rows(); ++i) {
            counts[r.assignment[i]]++;
            const double* x = data.row(i);
            double* srow = sums.row(r.assignment[i]);
            for (std::size_t c = 0; c < data.cols(); ++c) srow[c] += x[c];
        }
        for (std::size_t j = 0; j < k; ++j)
            if (counts[j] > 0)
                for (std::size_t c = 0; c < data.cols(); ++c)
                    centroids(j, c) = sums(j, c) / static_cast<double>(counts[j]);
        auto next = nearest_assignment(centroids, data);
        double obj = kmeans_objective(data, centroids, next);
        if (obj > prev_obj + 1e-9)
            throw NumericError("lloyd: objective increased, which should be impossible");
        prev_obj = obj;
        r.iterations = it + 1;
        if (next == r.assignment) {
            r.assignment = std::move(next);
            break;
        }
        r.assignment = std::move(next);
    }
    r.centroids = std::move(centroids);
    r.objective = prev_obj;
    return r;
}

struct ClusterMetrics {
    double purity = 0.0;
    double ari = 0.0;
};

// Purity and adjusted Rand index of a predicted hard clustering against
// integer ground-truth labels.
inline ClusterMetrics cluster_metrics(const std::vector<std::size_t>& pred,
                                      const std::vector<int>& truth) {
    if (pred.size() != truth.size() || pred.empty())
        throw ConfigError("cluster_metrics: need matching nonempty labelings");
    const auto n = static_cast<double>(pred.size());
    std::map<std::pair<std::size_t, int>, double> joint;
    std::map<std::size_t, double> row;
    std::map<int, double> col;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        joint[{pred[i], truth[i]}] += 1.0;
        row[pred[i]] += 1.0;
        col[truth[i]] += 1.0;
    }
    ClusterMetrics m;
    {
        std::map<std::size_t, double> best;
        for (const auto& [key, cnt] : joint) best[key.first] = std::max(best[key.first], cnt);
        double s = 0.0;
        for (const auto& [_, v] : best) s += v;
        m.purity = s / n;
    }
    {
        auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
        double sum_joint = 0.0, sum_row = 0.0, sum_col = 0.0;
        for (const auto& [_, v] : joint) sum_joint += choose2(v);
        for (const auto& [_, v] : row) sum_row += choose2(v);
        for (const auto& [_, v] : col) sum_col += choose2(v);
        double total = choose2(n);
        double expected = sum_row * sum_col / total;
        double maxi = 0.5 * (sum_row + sum_col);
        double denom = maxi - expected;
        m.ari = denom == 0.0 ? 1.0 : (sum_joint - expected) / denom;
    }
    return m;
}

} // namespace genmix
