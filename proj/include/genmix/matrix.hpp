#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "genmix/common.hpp"

namespace genmix {

// Dense row-major matrix of doubles. Deliberately minimal: the training loops
// index it directly rather than going through an expression layer.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    void resize(std::size_t rows, std::size_t cols) {
        rows_ = rows;
        cols_ = cols;
        data_.resize(rows * cols);
    }

    void fill(double v) {
        for (auto& x : data_) x = v;
    }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// rows of `src` selected by `idx`, written into `out` (resized as needed)
inline void gather_rows(const Matrix& src, const std::vector<std::size_t>& idx, Matrix& out) {
    out.resize(idx.size(), src.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const double* s = src.row(idx[k]);
        double* d = out.row(k);
        for (std::size_t c = 0; c < src.cols(); ++c) d[c] = s[c];
    }
}

inline double squared_distance(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        double diff = a[i] - b[i];
        s += diff * diff;
    }
    return s;
}

} // namespace genmix
