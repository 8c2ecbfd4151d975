#include "tprnn/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace tprnn {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// Every public operation returns fully finite data or throws.
const Tensor& checked(const Tensor& t, const char* op) {
  if (!t.all_finite()) {
    throw NonFiniteError(std::string(op) + " produced a non-finite entry");
  }
  return t;
}

Tensor checked(Tensor&& t, const char* op) {
  checked(t, op);
  return std::move(t);
}

}  // namespace

Tensor::Tensor(std::vector<int> dims) : dims_(std::move(dims)) {
  require(!dims_.empty() && dims_.size() <= 3, "tensor order must be 1..3");
  size_t n = 1;
  for (int d : dims_) {
    require(d > 0, "tensor dims must be positive");
    n *= static_cast<size_t>(d);
  }
  data_.assign(n, 0.0);
}

Tensor::Tensor(std::vector<int> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  require(!dims_.empty() && dims_.size() <= 3, "tensor order must be 1..3");
  size_t n = 1;
  for (int d : dims_) {
    require(d > 0, "tensor dims must be positive");
    n *= static_cast<size_t>(d);
  }
  require(data_.size() == n, "data length must equal product of dims");
}

Tensor Tensor::vec(std::vector<double> values) {
  int n = static_cast<int>(values.size());
  return Tensor({n}, std::move(values));
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '(';
  for (size_t i = 0; i < dims_.size(); ++i) {
    if (i) os << 'x';
    os << dims_[i];
  }
  os << ')';
  return os.str();
}

Tensor outer2(const Tensor& a, const Tensor& b) {
  require(a.order() == 1 && b.order() == 1, "outer2 expects two vectors");
  Tensor out({a.dim(0), b.dim(0)});
  for (int i = 0; i < a.dim(0); ++i) {
    for (int j = 0; j < b.dim(0); ++j) {
      out.at(i, j) = a.at(i) * b.at(j);
    }
  }
  return checked(std::move(out), "outer2");
}

Tensor outer3(const Tensor& a, const Tensor& b, const Tensor& c) {
  require(a.order() == 1 && b.order() == 1 && c.order() == 1,
          "outer3 expects three vectors");
  Tensor out({a.dim(0), b.dim(0), c.dim(0)});
  double* p = out.data();
  for (int i = 0; i < a.dim(0); ++i) {
    for (int j = 0; j < b.dim(0); ++j) {
      const double ab = a.at(i) * b.at(j);
      for (int k = 0; k < c.dim(0); ++k) {
        *p++ = ab * c.at(k);
      }
    }
  }
  return checked(std::move(out), "outer3");
}

Tensor unbind2(const Tensor& T, const Tensor& u) {
  require(T.order() == 2 && u.order() == 1, "unbind2 expects matrix, vector");
  require(T.dim(1) == u.dim(0), "unbind2 dimension mismatch: " + T.shape_str() +
                                    " vs " + u.shape_str());
  Tensor out({T.dim(0)});
  for (int i = 0; i < T.dim(0); ++i) {
    double acc = 0.0;
    for (int j = 0; j < T.dim(1); ++j) {
      acc += T.at(i, j) * u.at(j);
    }
    out.at(i) = acc;
  }
  return checked(std::move(out), "unbind2");
}

Tensor unbind3(const Tensor& F, const Tensor& e, const Tensor& r) {
  require(F.order() == 3 && e.order() == 1 && r.order() == 1,
          "unbind3 expects order-3, vector, vector");
  require(F.dim(0) == e.dim(0) && F.dim(1) == r.dim(0),
          "unbind3 dimension mismatch: " + F.shape_str() + " vs " +
              e.shape_str() + ", " + r.shape_str());
  // out[k] = sum_j (sum_i F[i][j][k] e[i]) r[j], matching the chained
  // tensor_inner route bitwise.
  Tensor G({F.dim(1), F.dim(2)});
  for (int i = 0; i < F.dim(0); ++i) {
    const double ei = e.at(i);
    for (int j = 0; j < F.dim(1); ++j) {
      for (int k = 0; k < F.dim(2); ++k) {
        G.at(j, k) += F.at(i, j, k) * ei;
      }
    }
  }
  Tensor out({F.dim(2)});
  for (int j = 0; j < F.dim(1); ++j) {
    const double rj = r.at(j);
    for (int k = 0; k < F.dim(2); ++k) {
      out.at(k) += G.at(j, k) * rj;
    }
  }
  return checked(std::move(out), "unbind3");
}

Tensor tensor_inner(const Tensor& A, const Tensor& B, int j, int k) {
  const int oa = A.order();
  const int ob = B.order();
  require(j >= 1 && j <= oa, "tensor_inner: mode j must address A");
  require(k > oa && k <= oa + ob, "tensor_inner: mode k must address B");
  const int ja = j - 1;          // contracted axis of A
  const int kb = k - oa - 1;     // contracted axis of B
  require(A.dim(ja) == B.dim(kb), "tensor_inner dimension mismatch at modes");

  std::vector<int> out_dims;
  for (int a = 0; a < oa; ++a) {
    if (a != ja) out_dims.push_back(A.dim(a));
  }
  for (int b = 0; b < ob; ++b) {
    if (b != kb) out_dims.push_back(B.dim(b));
  }
  const bool scalar_result = out_dims.empty();
  if (scalar_result) out_dims.push_back(1);
  require(out_dims.size() <= 3, "tensor_inner result order exceeds 3");

  Tensor out(out_dims);

  // Strides for addressing A and B by (kept axes..., contracted axis).
  auto strides = [](const Tensor& t) {
    std::vector<int> s(static_cast<size_t>(t.order()), 1);
    for (int a = t.order() - 2; a >= 0; --a) {
      s[static_cast<size_t>(a)] = s[static_cast<size_t>(a + 1)] * t.dim(a + 1);
    }
    return s;
  };
  const auto sa = strides(A);
  const auto sb = strides(B);

  std::vector<int> a_kept, b_kept;
  for (int a = 0; a < oa; ++a)
    if (a != ja) a_kept.push_back(a);
  for (int b = 0; b < ob; ++b)
    if (b != kb) b_kept.push_back(b);

  const int n = A.dim(ja);
  std::vector<int> idx(out_dims.size(), 0);
  const int total = out.size();
  for (int flat = 0; flat < total; ++flat) {
    // Decompose flat into the multi-index over kept axes.
    int rem = flat;
    for (int d = static_cast<int>(out_dims.size()) - 1; d >= 0; --d) {
      idx[static_cast<size_t>(d)] = rem % out_dims[static_cast<size_t>(d)];
      rem /= out_dims[static_cast<size_t>(d)];
    }
    int base_a = 0, base_b = 0;
    if (!scalar_result) {
      size_t pos = 0;
      for (int a : a_kept) base_a += idx[pos++] * sa[static_cast<size_t>(a)];
      for (int b : b_kept) base_b += idx[pos++] * sb[static_cast<size_t>(b)];
    }
    double acc = 0.0;
    const int step_a = sa[static_cast<size_t>(ja)];
    const int step_b = sb[static_cast<size_t>(kb)];
    for (int c = 0; c < n; ++c) {
      acc += A[base_a + c * step_a] * B[base_b + c * step_b];
    }
    out[flat] = acc;
  }
  return checked(std::move(out), "tensor_inner");
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.same_dims(b), "add dimension mismatch: " + a.shape_str() + " vs " +
                              b.shape_str());
  Tensor out = a;
  for (int i = 0; i < out.size(); ++i) out[i] += b[i];
  return checked(std::move(out), "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require(a.same_dims(b), "sub dimension mismatch: " + a.shape_str() + " vs " +
                              b.shape_str());
  Tensor out = a;
  for (int i = 0; i < out.size(); ++i) out[i] -= b[i];
  return checked(std::move(out), "sub");
}

Tensor scale(const Tensor& a, double c) {
  Tensor out = a;
  for (int i = 0; i < out.size(); ++i) out[i] *= c;
  return checked(std::move(out), "scale");
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require(a.same_dims(b), "hadamard dimension mismatch: " + a.shape_str() +
                              " vs " + b.shape_str());
  Tensor out = a;
  for (int i = 0; i < out.size(); ++i) out[i] *= b[i];
  return checked(std::move(out), "hadamard");
}

double dot(const Tensor& a, const Tensor& b) {
  require(a.same_dims(b), "dot dimension mismatch");
  double acc = 0.0;
  for (int i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  if (!std::isfinite(acc)) throw NonFiniteError("dot produced a non-finite value");
  return acc;
}

}  // namespace tprnn
