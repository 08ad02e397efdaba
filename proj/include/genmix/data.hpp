#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "genmix/common.hpp"
#include "genmix/matrix.hpp"
#include "genmix/rng.hpp"

namespace genmix {

struct Dataset {
    Matrix points;
    std::vector<int> labels;  // empty when unlabeled
    bool has_labels() const { return !labels.empty(); }
};

// Spherical Gaussian mixture, optionally warped by the quadratic skew below.
struct GmmSpec {
    Matrix means;                 // (modes, dim)
    double sigma2 = 0.25;
    std::vector<double> weights;  // empty means uniform
    bool skew = true;

    void validate() const {
        if (means.rows() == 0 || means.cols() == 0)
            throw ConfigError("gmm: need at least one mode of positive dimension");
        if (!(sigma2 > 0.0)) throw ConfigError("gmm: sigma2 must be positive");
        if (!weights.empty()) {
            if (weights.size() != means.rows())
                throw ConfigError("gmm: weights size must match mode count");
            for (double w : weights)
                if (!(w > 0.0)) throw ConfigError("gmm: weights must be positive");
        }
        if (skew && means.cols() < 2)
            throw ConfigError("gmm: the skew warp needs at least 2 dimensions");
    }
};

// x2 <- x2 + 0.04 * x1^2 - 4, a parabolic warp that bends the cloud while
// keeping x1 intact, so it is invertible given x1
inline void apply_skew(double* x) {
    x[1] += 0.04 * x[0] * x[0] - 4.0;
}

// Mode layouts for the bundled experiments: 3 and 5 modes evenly spaced on a
// circle of radius 5, 9 modes on a 3x3 grid with spacing 3. Spacings chosen
// so modes stay well separated (>= 6 sigma) while keeping the pooled spread
// small enough for a usable kernel bandwidth.
inline GmmSpec preset_modes(int modes) {
    GmmSpec g;
    g.sigma2 = 0.25;
    g.skew = true;
    if (modes == 3 || modes == 5) {
        const double r = 5.0;
        g.means.resize(static_cast<std::size_t>(modes), 2);
        for (int k = 0; k < modes; ++k) {
            double th = kTwoPi * k / modes;
            g.means(static_cast<std::size_t>(k), 0) = r * std::cos(th);
            g.means(static_cast<std::size_t>(k), 1) = r * std::sin(th);
        }
    } else if (modes == 9) {
        const double s = 3.0;
        g.means.resize(9, 2);
        int k = 0;
        for (int a = -1; a <= 1; ++a)
            for (int b = -1; b <= 1; ++b) {
                g.means(static_cast<std::size_t>(k), 0) = s * a;
                g.means(static_cast<std::size_t>(k), 1) = s * b;
                ++k;
            }
    } else {
        throw ConfigError("preset_modes: only 3, 5, and 9 mode layouts are bundled");
    }
    return g;
}

// Per point: one categorical draw for the mode, then dim normal draws.
inline Dataset generate_synthetic(const GmmSpec& g, std::size_t n, Rng& rng) {
    g.validate();
    const std::size_t modes = g.means.rows();
    const std::size_t dim = g.means.cols();
    std::vector<double> cum(modes);
    {
        double total = 0.0;
        if (g.weights.empty())
            total = static_cast<double>(modes);
        else
            for (double w : g.weights) total += w;
        double acc = 0.0;
        for (std::size_t k = 0; k < modes; ++k) {
            acc += g.weights.empty() ? 1.0 : g.weights[k];
            cum[k] = acc / total;
        }
        cum[modes - 1] = 1.0;
    }
    const double sigma = std::sqrt(g.sigma2);
    Dataset d;
    d.points.resize(n, dim);
    d.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double u = rng.uniform();
        std::size_t k = 0;
        while (cum[k] <= u) ++k;
        double* x = d.points.row(i);
        for (std::size_t c = 0; c < dim; ++c)
            x[c] = g.means(k, c) + sigma * rng.normal();
        if (g.skew) apply_skew(x);
        d.labels[i] = static_cast<int>(k);
    }
    return d;
}

// header x0,...,x{d-1}[,label]; 17 significant digits so doubles round-trip
inline void save_csv(std::ostream& os, const Dataset& d) {
    for (std::size_t c = 0; c < d.points.cols(); ++c) {
        if (c) os << ',';
        os << 'x' << c;
    }
    if (d.has_labels()) os << ",label";
    os << '\n';
    char buf[40];
    for (std::size_t i = 0; i < d.points.rows(); ++i) {
        for (std::size_t c = 0; c < d.points.cols(); ++c) {
            if (c) os << ',';
            std::snprintf(buf, sizeof buf, "%.17g", d.points(i, c));
            os << buf;
        }
        if (d.has_labels()) os << ',' << d.labels[i];
        os << '\n';
    }
}

inline void save_csv_file(const std::string& path, const Dataset& d) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("save_csv: cannot open " + path);
    save_csv(f, d);
    if (!f) throw ParseError("save_csv: write failed for " + path);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline double parse_double_field(const std::string& s, std::size_t lineno) {
    const char* p = s.c_str();
    char* end = nullptr;
    double v = std::strtod(p, &end);
    if (end == p || *end != '\0')
        throw ParseError("csv line " + std::to_string(lineno) + ": bad number '" + s + "'");
    return v;
}

} // namespace detail

inline Dataset load_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ParseError("csv: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = detail::split_csv_line(line);
    bool labeled = !header.empty() && header.back() == "label";
    std::size_t dim = header.size() - (labeled ? 1 : 0);
    if (dim == 0) throw ParseError("csv: no coordinate columns in header");
    for (std::size_t c = 0; c < dim; ++c)
        if (header[c] != "x" + std::to_string(c))
            throw ParseError("csv: expected header column x" + std::to_string(c) + ", got '" +
                             header[c] + "'");
    Dataset d;
    std::vector<double> values;
    std::vector<int> labels;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw ParseError("csv line " + std::to_string(lineno) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        for (std::size_t c = 0; c < dim; ++c)
            values.push_back(detail::parse_double_field(fields[c], lineno));
        if (labeled) {
            double lv = detail::parse_double_field(fields[dim], lineno);
            labels.push_back(static_cast<int>(lv));
        }
    }
    std::size_t rows = values.size() / dim;
    d.points.resize(rows, dim);
    std::copy(values.begin(), values.end(), d.points.data());
    d.labels = std::move(labels);
    return d;
}

inline Dataset load_csv_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("load_csv: cannot open " + path);
    return load_csv(f);
}

// Random split into train and eval parts; eval gets round(frac * n) points.
inline void holdout_split(const Dataset& all, double frac, Rng& rng, Dataset& train,
                          Dataset& eval) {
    const std::size_t n = all.points.rows();
    if (!(frac > 0.0 && frac < 1.0)) throw ConfigError("holdout_split: fraction must be in (0,1)");
    auto n_eval = static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
    if (n_eval == 0 || n_eval >= n)
        throw ConfigError("holdout_split: split leaves an empty part");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    rng.shuffle(idx);
    auto take = [&](std::size_t lo, std::size_t hi, Dataset& out) {
        out.points.resize(hi - lo, all.points.cols());
        out.labels.clear();
        for (std::size_t i = lo; i < hi; ++i) {
            const double* s = all.points.row(idx[i]);
            double* dst = out.points.row(i - lo);
            for (std::size_t c = 0; c < all.points.cols(); ++c) dst[c] = s[c];
            if (all.has_labels()) out.labels.push_back(all.labels[idx[i]]);
        }
    };
    take(0, n_eval, eval);
    take(n_eval, n, train);
}

} // namespace genmix
