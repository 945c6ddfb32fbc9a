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

// Define-by-run reverse-mode differentiation.
//
// A Graph is a tape of operation records appended in execution order, which
// is also a topological order. Backward() walks the tape from the root down
// to node 0, so every node is visited at most once. Parameter leaves used
// several times (the embedding table, cell weights at every timestep) simply
// accumulate gradient contributions from each use.
//
// A Graph is single-threaded. Leaves created with Input()/Parameter() from a
// pointer do not copy the tensor; the tensor must outlive the graph and stay
// unmodified while the graph is alive.

#ifndef TPRCAP_AUTODIFF_H_
#define TPRCAP_AUTODIFF_H_

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tprcap/tensor.h"

namespace tprcap {

class Graph;

class Var {
 public:
  Var() = default;
  Var(Graph* graph, int id) : graph_(graph), id_(id) {}

  bool valid() const { return graph_ != nullptr; }
  Graph* graph() const { return graph_; }
  int id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Graph* graph_ = nullptr;
  int id_ = -1;
};

class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, int)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var Constant(Tensor value);
  Var Input(const Tensor* external);
  Var Parameter(std::string name, Tensor value);
  Var Parameter(std::string name, const Tensor* external);

  const Tensor& value(int id) const;
  const Tensor& value(Var v) const { return value(v.id()); }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  // Seeds d(root)/d(root) = 1 and propagates. The root must be a single
  // element; calling twice without ResetGradients() is a contract error.
  void Backward(Var root);
  void ResetGradients();

  // Gradient accumulated at v, or nullptr if none reached it.
  const Tensor* grad(Var v) const;
  // Gradients of all named parameters reached by Backward(), by name.
  std::map<std::string, Tensor> ParameterGradients() const;

  size_t size() const { return nodes_.size(); }
  size_t backward_visits() const { return backward_visits_; }

  // Used by operation implementations.
  Var Record(Tensor value, std::vector<int> inputs, BackwardFn backward);
  Tensor& GradBuffer(int id);
  const Tensor& GradOf(int id) const { return *nodes_[id].grad; }

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    std::vector<int> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    std::string name;
    std::optional<Tensor> grad;
  };

  std::deque<Node> nodes_;
  bool backward_done_ = false;
  size_t backward_visits_ = 0;
};

// Graph operations. Each records its local gradient rule.
Var MatMul(Var a, Var b);  // [m,k]x[k,n]; dA = dC B^T, dB = A^T dC
Var MatVec(Var a, Var x);  // [m,k]x[k]
Var Outer(Var a, Var b);   // [m]x[n] -> [m,n]
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);  // Hadamard product
Var Scale(Var a, double s);
Var Sigmoid(Var a);
Var Tanh(Var a);
Var Softmax(Var a);
Var LogSoftmax(Var a);
Var Contract3(Var c, Var q);
Var Vec(Var m);  // column stacking
Var Reshape(Var a, Shape shape);
Var Transpose(Var a);
Var Slice(Var a, size_t offset, size_t length);  // rank-1 only
Var Pick(Var a, size_t index);                   // scalar a[index]
Var Column(Var m, size_t j);                     // rank-1 m[:, j]
Var SumAll(Var a);                               // scalar
Var AddN(const std::vector<Var>& terms);

// Central difference (f(p+eps) - f(p-eps)) / 2eps, perturbing `coord` in
// place and restoring it before returning.
double CentralDifference(const std::function<double()>& f, double& coord,
                         double eps);
// Numeric gradient of f at p over every coordinate.
Tensor FiniteDiff(const std::function<double(const Tensor&)>& f,
                  const Tensor& p, double eps);

}  // namespace tprcap

#endif  // TPRCAP_AUTODIFF_H_
