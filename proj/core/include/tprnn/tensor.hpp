#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tprnn {

/// Raised when an operation would leave non-finite entries in a tensor.
/// The training loop maps this onto its divergence-recovery policy.
struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense tensor of order 1..3 over 64-bit floats, row-major storage
/// (last index fastest). Values are immutable once built by the public
/// operations below; a default-constructed Tensor is empty and only
/// valid as an assignment target.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> dims);  // zero-filled
  Tensor(std::vector<int> dims, std::vector<double> data);

  static Tensor zeros(std::vector<int> dims) { return Tensor(std::move(dims)); }
  static Tensor vec(std::vector<double> values);
  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  int order() const { return static_cast<int>(dims_.size()); }
  const std::vector<int>& dims() const { return dims_; }
  int dim(int i) const { return dims_[static_cast<size_t>(i)]; }
  int size() const { return static_cast<int>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& raw() const { return data_; }

  double& operator[](int flat) { return data_[static_cast<size_t>(flat)]; }
  double operator[](int flat) const { return data_[static_cast<size_t>(flat)]; }

  double& at(int i) { return data_[static_cast<size_t>(i)]; }
  double at(int i) const { return data_[static_cast<size_t>(i)]; }
  double& at(int i, int j) { return data_[static_cast<size_t>(i * dims_[1] + j)]; }
  double at(int i, int j) const { return data_[static_cast<size_t>(i * dims_[1] + j)]; }
  double& at(int i, int j, int k) {
    return data_[static_cast<size_t>((i * dims_[1] + j) * dims_[2] + k)];
  }
  double at(int i, int j, int k) const {
    return data_[static_cast<size_t>((i * dims_[1] + j) * dims_[2] + k)];
  }

  bool all_finite() const;
  bool same_dims(const Tensor& other) const { return dims_ == other.dims_; }
  std::string shape_str() const;

 private:
  std::vector<int> dims_;
  std::vector<double> data_;
};

// Binding operators. outer2(a,b)[i][j] = a[i]*b[j];
// outer3(a,b,c)[i][j][k] = a[i]*b[j]*c[k].
Tensor outer2(const Tensor& a, const Tensor& b);
Tensor outer3(const Tensor& a, const Tensor& b, const Tensor& c);

// Unbinding. unbind2(T,u)[i] = sum_j T[i][j]*u[j] (matrix-vector product).
// unbind3 contracts the first two modes of F so that bind-then-unbind
// recovers the stored target fiber: unbind3(F,e,r)[k] = sum_ij F[i][j][k]*e[i]*r[j].
Tensor unbind2(const Tensor& T, const Tensor& u);
Tensor unbind3(const Tensor& F, const Tensor& e, const Tensor& r);

// Generalized tensor inner product: contracts modes j and k (1-based) of
// the combined tensor A (x) B. Requires j to address a mode of A and k a
// mode of B. A scalar result is returned as an order-1 tensor of size 1.
// Serves as the reference route for unbind2/unbind3.
Tensor tensor_inner(const Tensor& A, const Tensor& B, int j, int k);

// Elementwise arithmetic.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor hadamard(const Tensor& a, const Tensor& b);
double dot(const Tensor& a, const Tensor& b);

}  // namespace tprnn
