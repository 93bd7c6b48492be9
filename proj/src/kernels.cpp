#include "ltv/kernels.hpp"

#include <cassert>
#include <cmath>

namespace ltv::kern {

namespace {
// Below this many multiply-adds the fork/join overhead dominates.
constexpr long kParallelGrain = 16 * 1024;
}  // namespace

void linear_forward(const Matrix& x, std::span<const double> w,
                    std::span<const double> b, Matrix& y) {
    const int in_dim = x.cols;
    const int out_dim = y.cols;
    assert(w.size() == static_cast<std::size_t>(in_dim) * out_dim);
    assert(b.empty() || b.size() == static_cast<std::size_t>(out_dim));
    assert(x.rows == y.rows);
    const double* bp = b.empty() ? nullptr : b.data();
    const long work = static_cast<long>(x.rows) * in_dim * out_dim;
#pragma omp parallel for schedule(static) if (work > kParallelGrain)
    for (int r = 0; r < x.rows; ++r)
        linear_forward_row(x.row(r), w.data(), bp, y.row(r), in_dim, out_dim);
}

void linear_forward_ref(const Matrix& x, std::span<const double> w,
                        std::span<const double> b, Matrix& y) {
    const double* bp = b.empty() ? nullptr : b.data();
    for (int r = 0; r < x.rows; ++r)
        linear_forward_row(x.row(r), w.data(), bp, y.row(r), x.cols, y.cols);
}

void linear_grad_input(const Matrix& dy, std::span<const double> w, Matrix& dx) {
    const int in_dim = dx.cols;
    const int out_dim = dy.cols;
    assert(w.size() == static_cast<std::size_t>(in_dim) * out_dim);
    assert(dy.rows == dx.rows);
    const long work = static_cast<long>(dy.rows) * in_dim * out_dim;
#pragma omp parallel for schedule(static) if (work > kParallelGrain)
    for (int r = 0; r < dy.rows; ++r)
        linear_grad_input_row(dy.row(r), w.data(), dx.row(r), in_dim, out_dim);
}

void linear_grad_input_ref(const Matrix& dy, std::span<const double> w, Matrix& dx) {
    for (int r = 0; r < dy.rows; ++r)
        linear_grad_input_row(dy.row(r), w.data(), dx.row(r), dx.cols, dy.cols);
}

void linear_grad_params(const Matrix& x, const Matrix& dy,
                        std::span<double> dw, std::span<double> db) {
    const int in_dim = x.cols;
    const int out_dim = dy.cols;
    assert(dw.size() == static_cast<std::size_t>(in_dim) * out_dim);
    assert(db.size() == static_cast<std::size_t>(out_dim));
    assert(x.rows == dy.rows);
    const long work = static_cast<long>(x.rows) * in_dim * out_dim;
#pragma omp parallel for schedule(static) if (work > kParallelGrain)
    for (int o = 0; o < out_dim; ++o)
        linear_grad_params_unit(x, dy, o, dw.data() + static_cast<std::size_t>(o) * in_dim,
                                db.data() + o);
}

void linear_grad_params_ref(const Matrix& x, const Matrix& dy,
                            std::span<double> dw, std::span<double> db) {
    const int in_dim = x.cols;
    for (int o = 0; o < dy.cols; ++o)
        linear_grad_params_unit(x, dy, o, dw.data() + static_cast<std::size_t>(o) * in_dim,
                                db.data() + o);
}

void relu_forward(const Matrix& z, Matrix& a) {
    assert(z.rows == a.rows && z.cols == a.cols);
    const long n = static_cast<long>(z.data.size());
#pragma omp parallel for schedule(static) if (n > kParallelGrain)
    for (long i = 0; i < n; ++i) a.data[i] = z.data[i] > 0.0 ? z.data[i] : 0.0;
}

void relu_forward_ref(const Matrix& z, Matrix& a) {
    for (std::size_t i = 0; i < z.data.size(); ++i)
        a.data[i] = z.data[i] > 0.0 ? z.data[i] : 0.0;
}

void relu_backward(const Matrix& z, const Matrix& da, Matrix& dz) {
    assert(z.rows == dz.rows && z.cols == dz.cols);
    const long n = static_cast<long>(z.data.size());
#pragma omp parallel for schedule(static) if (n > kParallelGrain)
    for (long i = 0; i < n; ++i) dz.data[i] = z.data[i] > 0.0 ? da.data[i] : 0.0;
}

void relu_backward_ref(const Matrix& z, const Matrix& da, Matrix& dz) {
    for (std::size_t i = 0; i < z.data.size(); ++i)
        dz.data[i] = z.data[i] > 0.0 ? da.data[i] : 0.0;
}

void softmax_rows(const Matrix& z, Matrix& p) {
    assert(z.rows == p.rows && z.cols == p.cols);
    const long work = static_cast<long>(z.rows) * z.cols;
#pragma omp parallel for schedule(static) if (work > kParallelGrain)
    for (int r = 0; r < z.rows; ++r) {
        const double* src = z.row(r);
        double* dst = p.row(r);
        for (int c = 0; c < z.cols; ++c) dst[c] = src[c];
        softmax_inplace(dst, z.cols);
    }
}

void softmax_rows_ref(const Matrix& z, Matrix& p) {
    for (int r = 0; r < z.rows; ++r) {
        const double* src = z.row(r);
        double* dst = p.row(r);
        for (int c = 0; c < z.cols; ++c) dst[c] = src[c];
        softmax_inplace(dst, z.cols);
    }
}

double sum(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc;
}

}  // namespace ltv::kern
