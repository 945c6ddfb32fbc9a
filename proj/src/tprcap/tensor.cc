// Copyright 2026 The tprcap Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tprcap/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "tprcap/error.h"

namespace tprcap {

namespace {

void RequireSameShape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    Fail(ErrorKind::kDimension, std::string(op) + ": shape mismatch " +
                                    ShapeString(a.shape()) + " vs " +
                                    ShapeString(b.shape()));
  }
}

void RequireRank(const Tensor& a, size_t rank, const char* op) {
  if (a.rank() != rank) {
    Fail(ErrorKind::kRank, std::string(op) + ": expected rank " +
                               std::to_string(rank) + ", got shape " +
                               ShapeString(a.shape()));
  }
}

template <typename F>
Tensor Map(const Tensor& a, F f) {
  Tensor out(a.shape());
  auto src = a.data();
  auto dst = out.data();
  for (size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

}  // namespace

std::string ShapeString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

size_t ShapeSize(const Shape& shape) {
  size_t n = 1;
  for (size_t e : shape) n *= e;
  return n;
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(ShapeSize(shape_), fill) {
  for (size_t e : shape_) {
    Require(e > 0, ErrorKind::kDimension,
            "tensor extents must be positive: " + ShapeString(shape_));
  }
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (size_t e : shape_) {
    Require(e > 0, ErrorKind::kDimension,
            "tensor extents must be positive: " + ShapeString(shape_));
  }
  Require(ShapeSize(shape_) == data_.size(), ErrorKind::kDimension,
          "tensor data length " + std::to_string(data_.size()) +
              " does not match shape " + ShapeString(shape_));
}

Tensor Tensor::Scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::Vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::Vector(std::vector<double> values) {
  const size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::Matrix(
    std::initializer_list<std::initializer_list<double>> rows) {
  const size_t r = rows.size();
  const size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    Require(row.size() == c, ErrorKind::kDimension, "ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

Tensor Tensor::Identity(size_t n) {
  Tensor t({n, n});
  for (size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

double Tensor::item() const {
  Require(data_.size() == 1, ErrorKind::kDimension,
          "item() on tensor of shape " + ShapeString(shape_));
  return data_[0];
}

Tensor Tensor::Reshaped(Shape shape) const {
  Require(
      ShapeSize(shape) == data_.size(), ErrorKind::kDimension,
      "cannot reshape " + ShapeString(shape_) + " to " + ShapeString(shape));
  return Tensor(std::move(shape), data_);
}

void Tensor::Fill(double value) {
  std::fill(data_.begin(), data_.end(), value);
}

Tensor Matmul(const Tensor& a, const Tensor& b) {
  RequireRank(a, 2, "matmul");
  RequireRank(b, 2, "matmul");
  if (a.dim(1) != b.dim(0)) {
    Fail(ErrorKind::kDimension, "matmul: inner extents disagree " +
                                    ShapeString(a.shape()) + " x " +
                                    ShapeString(b.shape()));
  }
  const size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor c({m, n});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (size_t i = 0; i < m; ++i) {
    for (size_t l = 0; l < k; ++l) {
      const double av = pa[i * k + l];
      const double* brow = pb + l * n;
      double* crow = pc + i * n;
      for (size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Tensor MatVec(const Tensor& a, const Tensor& x) {
  RequireRank(a, 2, "matvec");
  RequireRank(x, 1, "matvec");
  if (a.dim(1) != x.dim(0)) {
    Fail(ErrorKind::kDimension, "matvec: inner extents disagree " +
                                    ShapeString(a.shape()) + " x " +
                                    ShapeString(x.shape()));
  }
  const size_t m = a.dim(0), k = a.dim(1);
  Tensor y({m});
  const double* pa = a.data().data();
  const double* px = x.data().data();
  for (size_t i = 0; i < m; ++i) {
    const double* row = pa + i * k;
    double s = 0.0;
    for (size_t l = 0; l < k; ++l) s += row[l] * px[l];
    y[i] = s;
  }
  return y;
}

Tensor MatTVec(const Tensor& a, const Tensor& y) {
  RequireRank(a, 2, "matTvec");
  RequireRank(y, 1, "matTvec");
  if (a.dim(0) != y.dim(0)) {
    Fail(ErrorKind::kDimension, "matTvec: extents disagree " +
                                    ShapeString(a.shape()) + "^T x " +
                                    ShapeString(y.shape()));
  }
  const size_t m = a.dim(0), k = a.dim(1);
  Tensor x({k});
  const double* pa = a.data().data();
  double* px = x.data().data();
  for (size_t i = 0; i < m; ++i) {
    const double yi = y[i];
    const double* row = pa + i * k;
    for (size_t l = 0; l < k; ++l) px[l] += row[l] * yi;
  }
  return x;
}

Tensor Transpose(const Tensor& a) {
  RequireRank(a, 2, "transpose");
  Tensor t({a.dim(1), a.dim(0)});
  for (size_t i = 0; i < a.dim(0); ++i) {
    for (size_t j = 0; j < a.dim(1); ++j) t.at(j, i) = a.at(i, j);
  }
  return t;
}

Tensor Outer(const Tensor& a, const Tensor& b) {
  RequireRank(a, 1, "outer");
  RequireRank(b, 1, "outer");
  Tensor c({a.dim(0), b.dim(0)});
  for (size_t i = 0; i < a.dim(0); ++i) {
    for (size_t j = 0; j < b.dim(0); ++j) c.at(i, j) = a[i] * b[j];
  }
  return c;
}

Tensor Add(const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b, "add");
  Tensor c = a;
  AddInPlace(c, b);
  return c;
}

Tensor Sub(const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b, "sub");
  Tensor c(a.shape());
  for (size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
  return c;
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b, "mul");
  Tensor c(a.shape());
  for (size_t i = 0; i < a.size(); ++i) c[i] = a[i] * b[i];
  return c;
}

Tensor Scale(const Tensor& a, double s) {
  return Map(a, [s](double x) { return x * s; });
}

Tensor Sigmoid(const Tensor& a) {
  return Map(a, [](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
}

Tensor Tanh(const Tensor& a) {
  return Map(a, [](double x) { return std::tanh(x); });
}

Tensor Softmax(const Tensor& a) {
  Require(a.rank() >= 1, ErrorKind::kRank, "softmax of a scalar");
  const size_t n = a.shape().back();
  const size_t rows = a.size() / n;
  Tensor out(a.shape());
  for (size_t r = 0; r < rows; ++r) {
    const double* src = a.data().data() + r * n;
    double* dst = out.data().data() + r * n;
    const double mx = *std::max_element(src, src + n);
    double z = 0.0;
    for (size_t i = 0; i < n; ++i) z += (dst[i] = std::exp(src[i] - mx));
    for (size_t i = 0; i < n; ++i) dst[i] /= z;
  }
  return out;
}

Tensor LogSoftmax(const Tensor& a) {
  Require(a.rank() >= 1, ErrorKind::kRank, "log-softmax of a scalar");
  const size_t n = a.shape().back();
  const size_t rows = a.size() / n;
  Tensor out(a.shape());
  for (size_t r = 0; r < rows; ++r) {
    const double* src = a.data().data() + r * n;
    double* dst = out.data().data() + r * n;
    const double mx = *std::max_element(src, src + n);
    double z = 0.0;
    for (size_t i = 0; i < n; ++i) z += std::exp(src[i] - mx);
    const double lz = mx + std::log(z);
    for (size_t i = 0; i < n; ++i) dst[i] = src[i] - lz;
  }
  return out;
}

Tensor Contract3(const Tensor& c, const Tensor& q) {
  RequireRank(c, 3, "contract3");
  RequireRank(q, 1, "contract3");
  if (c.dim(2) != q.dim(0)) {
    Fail(ErrorKind::kDimension,
         "contract3: last extent of " + ShapeString(c.shape()) +
             " does not match " + ShapeString(q.shape()));
  }
  // A [d,d,k] tensor is a [d*d, k] matrix in row-major storage.
  Tensor flat = MatVec(c.Reshaped({c.dim(0) * c.dim(1), c.dim(2)}), q);
  return flat.Reshaped({c.dim(0), c.dim(1)});
}

Tensor Vec(const Tensor& m) {
  RequireRank(m, 2, "vec");
  const size_t rows = m.dim(0), cols = m.dim(1);
  Tensor v({rows * cols});
  for (size_t j = 0; j < cols; ++j) {
    for (size_t i = 0; i < rows; ++i) v[j * rows + i] = m.at(i, j);
  }
  return v;
}

Tensor Unvec(const Tensor& v, size_t rows, size_t cols) {
  RequireRank(v, 1, "unvec");
  Require(v.size() == rows * cols, ErrorKind::kDimension,
          "unvec: length " + std::to_string(v.size()) + " is not " +
              std::to_string(rows) + "x" + std::to_string(cols));
  Tensor m({rows, cols});
  for (size_t j = 0; j < cols; ++j) {
    for (size_t i = 0; i < rows; ++i) m.at(i, j) = v[j * rows + i];
  }
  return m;
}

double Sum(const Tensor& a) {
  double s = 0.0;
  for (double x : a.data()) s += x;
  return s;
}

double Dot(const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b, "dot");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double Norm(const Tensor& a) { return std::sqrt(Dot(a, a)); }

double MaxAbsDiff(const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b, "max_abs_diff");
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

bool AllFinite(const Tensor& a) {
  return std::all_of(a.data().begin(), a.data().end(),
                     [](double x) { return std::isfinite(x); });
}

void AddInPlace(Tensor& y, const Tensor& x) {
  RequireSameShape(y, x, "add_in_place");
  double* py = y.data().data();
  const double* px = x.data().data();
  for (size_t i = 0; i < y.size(); ++i) py[i] += px[i];
}

}  // namespace tprcap
