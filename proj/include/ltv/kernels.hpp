#pragma once

#include <cmath>
#include <span>

#include "ltv/matrix.hpp"

// Dense-layer kernels. Each kernel exists twice: the production OpenMP
// version and a serial *_ref reference used by tests and the benchmark.
// Both call the same per-element helpers, so outputs are bitwise identical
// for any thread count: every parallel loop owns disjoint output elements
// and accumulates in a fixed serial order. No floating-point reductions
// cross thread boundaries anywhere in the project.
namespace ltv::kern {

// ---------------------------------------------------------------------------
// per-element helpers (shared by serial and parallel paths)
// ---------------------------------------------------------------------------

// y[0..out_dim) = W x + b for one input row. W is out_dim x in_dim row-major.
inline void linear_forward_row(const double* x, const double* w, const double* b,
                               double* y, int in_dim, int out_dim) {
    for (int o = 0; o < out_dim; ++o) {
        const double* wo = w + static_cast<std::size_t>(o) * in_dim;
        double acc = b ? b[o] : 0.0;
        for (int i = 0; i < in_dim; ++i) acc += wo[i] * x[i];
        y[o] = acc;
    }
}

// dx[0..in_dim) = W^T dy for one row.
inline void linear_grad_input_row(const double* dy, const double* w,
                                  double* dx, int in_dim, int out_dim) {
    for (int i = 0; i < in_dim; ++i) dx[i] = 0.0;
    for (int o = 0; o < out_dim; ++o) {
        const double* wo = w + static_cast<std::size_t>(o) * in_dim;
        const double g = dy[o];
        for (int i = 0; i < in_dim; ++i) dx[i] += g * wo[i];
    }
}

// dW[o][*] and db[o] for one output unit, summed over the batch in row order.
inline void linear_grad_params_unit(const Matrix& x, const Matrix& dy, int o,
                                    double* dw_o, double* db_o) {
    const int in_dim = x.cols;
    for (int i = 0; i < in_dim; ++i) dw_o[i] = 0.0;
    double db = 0.0;
    for (int b = 0; b < x.rows; ++b) {
        const double g = dy.at(b, o);
        db += g;
        const double* xb = x.row(b);
        for (int i = 0; i < in_dim; ++i) dw_o[i] += g * xb[i];
    }
    *db_o = db;
}

// Numerically stable softmax of v[0..n) in place (max subtraction).
inline void softmax_inplace(double* v, int n) {
    double mx = v[0];
    for (int i = 1; i < n; ++i) mx = v[i] > mx ? v[i] : mx;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        v[i] = std::exp(v[i] - mx);
        sum += v[i];
    }
    const double inv = 1.0 / sum;
    for (int i = 0; i < n; ++i) v[i] *= inv;
}

// ---------------------------------------------------------------------------
// batched kernels: OpenMP production path + serial reference
// ---------------------------------------------------------------------------

// Y = X W^T + b.  X: B x I, W: O x I, b: O, Y: B x O.
void linear_forward(const Matrix& x, std::span<const double> w,
                    std::span<const double> b, Matrix& y);
void linear_forward_ref(const Matrix& x, std::span<const double> w,
                        std::span<const double> b, Matrix& y);

// dX = dY W.  dY: B x O, W: O x I, dX: B x I.
void linear_grad_input(const Matrix& dy, std::span<const double> w, Matrix& dx);
void linear_grad_input_ref(const Matrix& dy, std::span<const double> w, Matrix& dx);

// dW = dY^T X, db = column sums of dY. Overwrites dw/db.
void linear_grad_params(const Matrix& x, const Matrix& dy,
                        std::span<double> dw, std::span<double> db);
void linear_grad_params_ref(const Matrix& x, const Matrix& dy,
                            std::span<double> dw, std::span<double> db);

// A = max(Z, 0) elementwise.
void relu_forward(const Matrix& z, Matrix& a);
void relu_forward_ref(const Matrix& z, Matrix& a);

// dZ = dA where Z > 0 else 0 (subgradient 0 at the kink).
void relu_backward(const Matrix& z, const Matrix& da, Matrix& dz);
void relu_backward_ref(const Matrix& z, const Matrix& da, Matrix& dz);

// Row-wise softmax: each row of P is softmax of the matching row of Z.
void softmax_rows(const Matrix& z, Matrix& p);
void softmax_rows_ref(const Matrix& z, Matrix& p);

// Serial sum in index order; the single reduction primitive used for losses.
double sum(std::span<const double> v);

}  // namespace ltv::kern
