#include "ade/tensor.hpp"

#include <cmath>

namespace ade {

Tensor::Tensor(std::vector<size_t> shape) : shape_(std::move(shape)) {
    size_t n = 1;
    for (size_t d : shape_) n *= d;
    data_.assign(n, 0.0);
}

void Tensor::fill(double v) {
    for (auto& x : data_) x = v;
}

bool Tensor::all_finite() const {
    for (double x : data_)
        if (!std::isfinite(x)) return false;
    return true;
}

void Tensor::add_(const Tensor& o) {
    if (!same_shape(o)) throw ShapeMismatch("add_: shape mismatch");
    for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
}

void Tensor::scale_(double s) {
    for (auto& x : data_) x *= s;
}

void matmul(const Tensor& a, const Tensor& b, Tensor& c) {
    const size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) throw ShapeMismatch("matmul: inner dims differ");
    if (c.rank() != 2 || c.dim(0) != m || c.dim(1) != n) c = Tensor({m, n});
    else c.zero();
    const double* A = a.data();
    const double* B = b.data();
    double* C = c.data();
    for (size_t i = 0; i < m; ++i) {
        const double* Ai = A + i * k;
        double* Ci = C + i * n;
        for (size_t p = 0; p < k; ++p) {
            const double aip = Ai[p];
            const double* Bp = B + p * n;
            for (size_t j = 0; j < n; ++j) Ci[j] += aip * Bp[j];
        }
    }
}

void matmul_bt(const Tensor& a, const Tensor& b, Tensor& c) {
    const size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
    if (b.dim(1) != k) throw ShapeMismatch("matmul_bt: inner dims differ");
    if (c.rank() != 2 || c.dim(0) != m || c.dim(1) != n) c = Tensor({m, n});
    else c.zero();
    const double* A = a.data();
    const double* B = b.data();
    double* C = c.data();
    for (size_t i = 0; i < m; ++i) {
        const double* Ai = A + i * k;
        for (size_t j = 0; j < n; ++j) {
            const double* Bj = B + j * k;
            double acc = 0.0;
            for (size_t p = 0; p < k; ++p) acc += Ai[p] * Bj[p];
            C[i * n + j] = acc;
        }
    }
}

void matmul_at(const Tensor& a, const Tensor& b, Tensor& c) {
    const size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) throw ShapeMismatch("matmul_at: inner dims differ");
    if (c.rank() != 2 || c.dim(0) != m || c.dim(1) != n) c = Tensor({m, n});
    else c.zero();
    const double* A = a.data();
    const double* B = b.data();
    double* C = c.data();
    for (size_t p = 0; p < k; ++p) {
        const double* Ap = A + p * m;
        const double* Bp = B + p * n;
        for (size_t i = 0; i < m; ++i) {
            const double api = Ap[i];
            double* Ci = C + i * n;
            for (size_t j = 0; j < n; ++j) Ci[j] += api * Bp[j];
        }
    }
}

}  // namespace ade
