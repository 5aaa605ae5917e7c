#pragma once

#include <cstddef>
#include <vector>

#include "epic/errors.hpp"

namespace epic {

// Dense row-major matrix. Deliberately minimal: the training core needs
// only a handful of kernels, all written so the inner loop runs over a
// contiguous row and vectorizes.
template <typename S>
struct Mat {
    std::size_t rows = 0, cols = 0;
    std::vector<S> v;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, S fill = S(0)) : rows(r), cols(c), v(r * c, fill) {}

    S& operator()(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    const S& operator()(std::size_t r, std::size_t c) const { return v[r * cols + c]; }

    S* row(std::size_t r) { return v.data() + r * cols; }
    const S* row(std::size_t r) const { return v.data() + r * cols; }

    bool empty() const { return rows == 0 || cols == 0; }
};

namespace linalg {

// C = A * B, A: n x k, B: k x m.
// Zero entries of A are skipped; with one-hot feature rows this turns the
// first-layer product into a gather over ~max_len rows of B.
template <typename S>
Mat<S> matmul(const Mat<S>& a, const Mat<S>& b) {
    if (a.cols != b.rows) throw ShapeMismatch("matmul: inner dimensions differ");
    Mat<S> c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const S* arow = a.row(i);
        S* crow = c.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const S s = arow[k];
            if (s == S(0)) continue;
            const S* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += s * brow[j];
        }
    }
    return c;
}

// C = A * B^T, A: n x k, B: m x k.
template <typename S>
Mat<S> matmul_bt(const Mat<S>& a, const Mat<S>& b) {
    if (a.cols != b.cols) throw ShapeMismatch("matmul_bt: inner dimensions differ");
    Mat<S> c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const S* arow = a.row(i);
        S* crow = c.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const S* brow = b.row(j);
            S acc = S(0);
            for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
            crow[j] = acc;
        }
    }
    return c;
}

// C += A^T * B, A: n x k, B: n x m, C: k x m. Accumulates in place so a
// caller can sum over batches without an extra temporary.
template <typename S>
void add_at_b(const Mat<S>& a, const Mat<S>& b, Mat<S>& c) {
    if (a.rows != b.rows) throw ShapeMismatch("add_at_b: row counts differ");
    if (c.rows != a.cols || c.cols != b.cols) throw ShapeMismatch("add_at_b: output shape");
    for (std::size_t n = 0; n < a.rows; ++n) {
        const S* arow = a.row(n);
        const S* brow = b.row(n);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const S s = arow[k];
            if (s == S(0)) continue;
            S* crow = c.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += s * brow[j];
        }
    }
}

template <typename S>
std::vector<S> colsum(const Mat<S>& a) {
    std::vector<S> out(a.cols, S(0));
    for (std::size_t i = 0; i < a.rows; ++i) {
        const S* arow = a.row(i);
        for (std::size_t j = 0; j < a.cols; ++j) out[j] += arow[j];
    }
    return out;
}

} // namespace linalg

} // namespace epic
