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

// Dense row-major float64 tensors and the eager kernels behind every graph
// operation. A rank-0 tensor (empty shape) holds one scalar.

#ifndef TPRCAP_TENSOR_H_
#define TPRCAP_TENSOR_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace tprcap {

using Shape = std::vector<size_t>;

std::string ShapeString(const Shape& shape);
size_t ShapeSize(const Shape& shape);

class Tensor {
 public:
  Tensor() : shape_{}, data_(1, 0.0) {}
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Scalar(double value);
  static Tensor Vector(std::initializer_list<double> values);
  static Tensor Vector(std::vector<double> values);
  // Rows given outer-first: Matrix({{1, 2}, {3, 4}}).
  static Tensor Matrix(
      std::initializer_list<std::initializer_list<double>> rows);
  static Tensor Identity(size_t n);

  const Shape& shape() const { return shape_; }
  size_t rank() const { return shape_.size(); }
  size_t size() const { return data_.size(); }
  size_t dim(size_t axis) const { return shape_.at(axis); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }
  double& at(size_t i, size_t j) { return data_[i * shape_[1] + j]; }
  double at(size_t i, size_t j) const { return data_[i * shape_[1] + j]; }
  double& at(size_t i, size_t j, size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double at(size_t i, size_t j, size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double item() const;

  // Same data, new shape; sizes must agree.
  Tensor Reshaped(Shape shape) const;
  void Fill(double value);

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Eager kernels. Shape errors throw Error(kDimension/kRank).
Tensor Matmul(const Tensor& a, const Tensor& b);   // [m,k]x[k,n]
Tensor MatVec(const Tensor& a, const Tensor& x);   // [m,k]x[k]
Tensor MatTVec(const Tensor& a, const Tensor& y);  // [m,k]^T x [m]
Tensor Transpose(const Tensor& a);
Tensor Outer(const Tensor& a, const Tensor& b);
Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Scale(const Tensor& a, double s);
Tensor Sigmoid(const Tensor& a);
Tensor Tanh(const Tensor& a);
Tensor Softmax(const Tensor& a);     // over the last axis
Tensor LogSoftmax(const Tensor& a);  // over the last axis
// result[i][j] = sum_l c[i][j][l] * q[l]
Tensor Contract3(const Tensor& c, const Tensor& q);
// Column-stacking vectorization of a matrix, and its inverse.
Tensor Vec(const Tensor& m);
Tensor Unvec(const Tensor& v, size_t rows, size_t cols);
double Sum(const Tensor& a);
double Dot(const Tensor& a, const Tensor& b);
double Norm(const Tensor& a);
double MaxAbsDiff(const Tensor& a, const Tensor& b);
bool AllFinite(const Tensor& a);

// In-place y += x (shapes must agree).
void AddInPlace(Tensor& y, const Tensor& x);

}  // namespace tprcap

#endif  // TPRCAP_TENSOR_H_
