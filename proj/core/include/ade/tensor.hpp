#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace ade {

struct ShapeMismatch : std::runtime_error {
    explicit ShapeMismatch(const std::string& what) : std::runtime_error(what) {}
};

// Dense row-major tensor of 64-bit floats.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<size_t> shape);

    static Tensor zeros(std::vector<size_t> shape) { return Tensor(std::move(shape)); }

    const std::vector<size_t>& shape() const { return shape_; }
    size_t numel() const { return data_.size(); }
    size_t dim(size_t i) const { return shape_.at(i); }
    size_t rank() const { return shape_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](size_t i) { return data_[i]; }
    double operator[](size_t i) const { return data_[i]; }

    // 2-D access
    double& at(size_t r, size_t c) { return data_[r * shape_[1] + c]; }
    double at(size_t r, size_t c) const { return data_[r * shape_[1] + c]; }

    void fill(double v);
    void zero() { fill(0.0); }
    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool all_finite() const;

    void add_(const Tensor& o);           // elementwise +=
    void scale_(double s);

  private:
    std::vector<size_t> shape_;
    std::vector<double> data_;
};

// C = A[m,k] * B[k,n]
void matmul(const Tensor& a, const Tensor& b, Tensor& c);
// C = A[m,k] * B[n,k]^T
void matmul_bt(const Tensor& a, const Tensor& b, Tensor& c);
// C = A[k,m]^T * B[k,n]
void matmul_at(const Tensor& a, const Tensor& b, Tensor& c);

}  // namespace ade
