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

#include "tprcap/autodiff.h"

#include <cmath>
#include <utility>

#include "tprcap/error.h"

namespace tprcap {

const Tensor& Var::value() const { return graph_->value(id_); }

Var Graph::Constant(Tensor value) {
  Node& n = nodes_.emplace_back();
  n.owned = std::move(value);
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Graph::Input(const Tensor* external) {
  Node& n = nodes_.emplace_back();
  n.external = external;
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Graph::Parameter(std::string name, Tensor value) {
  Node& n = nodes_.emplace_back();
  n.owned = std::move(value);
  n.requires_grad = true;
  n.name = std::move(name);
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Graph::Parameter(std::string name, const Tensor* external) {
  Node& n = nodes_.emplace_back();
  n.external = external;
  n.requires_grad = true;
  n.name = std::move(name);
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

const Tensor& Graph::value(int id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.owned;
}

Var Graph::Record(Tensor value, std::vector<int> inputs, BackwardFn backward) {
  bool needs = false;
  for (int i : inputs) needs = needs || nodes_[i].requires_grad;
  Node& n = nodes_.emplace_back();
  n.owned = std::move(value);
  n.inputs = std::move(inputs);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(backward);
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Tensor& Graph::GradBuffer(int id) {
  Node& n = nodes_[id];
  if (!n.grad) n.grad.emplace(value(id).shape());
  return *n.grad;
}

void Graph::Backward(Var root) {
  Require(root.graph() == this, ErrorKind::kContract,
          "backward: root belongs to another graph");
  Require(value(root).size() == 1, ErrorKind::kContract,
          "backward: root must be scalar, got shape " +
              ShapeString(value(root).shape()));
  Require(!backward_done_, ErrorKind::kContract,
          "backward: already run on this graph; call ResetGradients() first");
  backward_done_ = true;
  backward_visits_ = 0;
  GradBuffer(root.id()).Fill(1.0);
  for (int id = root.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.grad || !n.backward) continue;
    ++backward_visits_;
    n.backward(*this, id);
  }
}

void Graph::ResetGradients() {
  for (Node& n : nodes_) n.grad.reset();
  backward_done_ = false;
  backward_visits_ = 0;
}

const Tensor* Graph::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  return n.grad ? &*n.grad : nullptr;
}

std::map<std::string, Tensor> Graph::ParameterGradients() const {
  std::map<std::string, Tensor> out;
  for (const Node& n : nodes_) {
    if (n.name.empty() || !n.grad) continue;
    auto [it, inserted] = out.try_emplace(n.name, *n.grad);
    if (!inserted) AddInPlace(it->second, *n.grad);
  }
  return out;
}

namespace {

Graph& SameGraph(Var a, Var b) {
  Require(a.graph() == b.graph() && a.valid(), ErrorKind::kContract,
          "operands belong to different graphs");
  return *a.graph();
}

}  // namespace

Var MatMul(Var a, Var b) {
  Graph& g = SameGraph(a, b);
  Tensor out = tprcap::Matmul(a.value(), b.value());
  const int ia = a.id(), ib = b.id();
  return g.Record(std::move(out), {ia, ib}, [ia, ib](Graph& g, int self) {
    const Tensor& dc = g.GradOf(self);
    if (g.requires_grad(ia)) {
      AddInPlace(g.GradBuffer(ia), tprcap::Matmul(dc, Transpose(g.value(ib))));
    }
    if (g.requires_grad(ib)) {
      AddInPlace(g.GradBuffer(ib), tprcap::Matmul(Transpose(g.value(ia)), dc));
    }
  });
}

Var MatVec(Var a, Var x) {
  Graph& g = SameGraph(a, x);
  Tensor out = tprcap::MatVec(a.value(), x.value());
  const int ia = a.id(), ix = x.id();
  return g.Record(std::move(out), {ia, ix}, [ia, ix](Graph& g, int self) {
    const Tensor& dy = g.GradOf(self);
    if (g.requires_grad(ia)) {
      const Tensor& xv = g.value(ix);
      Tensor& da = g.GradBuffer(ia);
      const size_t m = dy.size(), k = xv.size();
      double* pd = da.data().data();
      const double* px = xv.data().data();
      for (size_t i = 0; i < m; ++i) {
        const double di = dy[i];
        if (di == 0.0) continue;
        double* row = pd + i * k;
        for (size_t l = 0; l < k; ++l) row[l] += di * px[l];
      }
    }
    if (g.requires_grad(ix)) {
      AddInPlace(g.GradBuffer(ix), MatTVec(g.value(ia), dy));
    }
  });
}

Var Outer(Var a, Var b) {
  Graph& g = SameGraph(a, b);
  Tensor out = tprcap::Outer(a.value(), b.value());
  const int ia = a.id(), ib = b.id();
  return g.Record(std::move(out), {ia, ib}, [ia, ib](Graph& g, int self) {
    const Tensor& dc = g.GradOf(self);
    if (g.requires_grad(ia)) {
      AddInPlace(g.GradBuffer(ia), tprcap::MatVec(dc, g.value(ib)));
    }
    if (g.requires_grad(ib)) {
      AddInPlace(g.GradBuffer(ib), MatTVec(dc, g.value(ia)));
    }
  });
}

Var Add(Var a, Var b) {
  Graph& g = SameGraph(a, b);
  Tensor out = tprcap::Add(a.value(), b.value());
  const int ia = a.id(), ib = b.id();
  return g.Record(std::move(out), {ia, ib}, [ia, ib](Graph& g, int self) {
    const Tensor& dc = g.GradOf(self);
    if (g.requires_grad(ia)) AddInPlace(g.GradBuffer(ia), dc);
    if (g.requires_grad(ib)) AddInPlace(g.GradBuffer(ib), dc);
  });
}

Var Sub(Var a, Var b) {
  Graph& g = SameGraph(a, b);
  Tensor out = tprcap::Sub(a.value(), b.value());
  const int ia = a.id(), ib = b.id();
  return g.Record(std::move(out), {ia, ib}, [ia, ib](Graph& g, int self) {
    const Tensor& dc = g.GradOf(self);
    if (g.requires_grad(ia)) AddInPlace(g.GradBuffer(ia), dc);
    if (g.requires_grad(ib)) {
      Tensor& db = g.GradBuffer(ib);
      for (size_t i = 0; i < dc.size(); ++i) db[i] -= dc[i];
    }
  });
}

Var Mul(Var a, Var b) {
  Graph& g = SameGraph(a, b);
  Tensor out = tprcap::Mul(a.value(), b.value());
  const int ia = a.id(), ib = b.id();
  return g.Record(std::move(out), {ia, ib}, [ia, ib](Graph& g, int self) {
    const Tensor& dc = g.GradOf(self);
    if (g.requires_grad(ia)) {
      const Tensor& bv = g.value(ib);
      Tensor& da = g.GradBuffer(ia);
      for (size_t i = 0; i < dc.size(); ++i) da[i] += dc[i] * bv[i];
    }
    if (g.requires_grad(ib)) {
      const Tensor& av = g.value(ia);
      Tensor& db = g.GradBuffer(ib);
      for (size_t i = 0; i < dc.size(); ++i) db[i] += dc[i] * av[i];
    }
  });
}

Var Scale(Var a, double s) {
  Graph& g = *a.graph();
  const int ia = a.id();
  return g.Record(tprcap::Scale(a.value(), s), {ia},
                  [ia, s](Graph& g, int self) {
                    const Tensor& dc = g.GradOf(self);
                    Tensor& da = g.GradBuffer(ia);
                    for (size_t i = 0; i < dc.size(); ++i) da[i] += s * dc[i];
                  });
}

Var Sigmoid(Var a) {
  Graph& g = *a.graph();
  const int ia = a.id();
  return g.Record(tprcap::Sigmoid(a.value()), {ia}, [ia](Graph& g, int self) {
    const Tensor& dy = g.GradOf(self);
    const Tensor& y = g.value(self);
    Tensor& da = g.GradBuffer(ia);
    for (size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * y[i] * (1.0 - y[i]);
  });
}

Var Tanh(Var a) {
  Graph& g = *a.graph();
  const int ia = a.id();
  return g.Record(tprcap::Tanh(a.value()), {ia}, [ia](Graph& g, int self) {
    const Tensor& dy = g.GradOf(self);
    const Tensor& y = g.value(self);
    Tensor& da = g.GradBuffer(ia);
    for (size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * (1.0 - y[i] * y[i]);
  });
}

Var Softmax(Var a) {
  Graph& g = *a.graph();
  const int ia = a.id();
  return g.Record(tprcap::Softmax(a.value()), {ia}, [ia](Graph& g, int self) {
    const Tensor& dy = g.GradOf(self);
    const Tensor& y = g.value(self);
    Tensor& da = g.GradBuffer(ia);
    const size_t n = y.shape().back();
    for (size_t r = 0; r < y.size() / n; ++r) {
      double dot = 0.0;
      for (size_t i = 0; i < n; ++i) dot += dy[r * n + i] * y[r * n + i];
      for (size_t i = 0; i < n; ++i) {
        da[r * n + i] += y[r * n + i] * (dy[r * n + i] - dot);
      }
    }
  });
}

Var LogSoftmax(Var a) {
  Graph& g = *a.graph();
  const int ia = a.id();
  return g.Record(
      tprcap::LogSoftmax(a.value()), {ia}, [ia](Graph& g, int self) {
        const Tensor& dy = g.GradOf(self);
        const Tensor& y = g.value(self);
        Tensor& da = g.GradBuffer(ia);
        const size_t n = y.shape().back();
        for (size_t r = 0; r < y.size() / n; ++r) {
          double total = 0.0;
          for (size_t i = 0; i < n; ++i) total += dy[r * n + i];
          for (size_t i = 0; i < n; ++i) {
            da[r * n + i] += dy[r * n + i] - std::exp(y[r * n + i]) * total;
          }
        }
      });
}

Var Contract3(Var c, Var q) {
  Graph& g = SameGraph(c, q);
  Tensor out = tprcap::Contract3(c.value(), q.value());
  const int ic = c.id(), iq = q.id();
  return g.Record(std::move(out), {ic, iq}, [ic, iq](Graph& g, int self) {
    const Tensor& dy = g.GradOf(self);  // [d, d]
    const Tensor& cv = g.value(ic);
    const Tensor& qv = g.value(iq);
    const size_t rows = dy.size(), k = qv.size();
    if (g.requires_grad(ic)) {
      Tensor& dc = g.GradBuffer(ic);
      double* pd = dc.data().data();
      for (size_t r = 0; r < rows; ++r) {
        const double gr = dy[r];
        if (gr == 0.0) continue;
        double* row = pd + r * k;
        for (size_t l = 0; l < k; ++l) row[l] += gr * qv[l];
      }
    }
    if (g.requires_grad(iq)) {
      Tensor& dq = g.GradBuffer(iq);
      const double* pc = cv.data().data();
      for (size_t r = 0; r < rows; ++r) {
        const double gr = dy[r];
        const double* row = pc + r * k;
        for (size_t l = 0; l < k; ++l) dq[l] += gr * row[l];
      }
    }
  });
}

Var Vec(Var m) {
  Graph& g = *m.graph();
  const int im = m.id();
  const size_t rows = m.value().rank() == 2 ? m.value().dim(0) : 0;
  const size_t cols = m.value().rank() == 2 ? m.value().dim(1) : 0;
  return g.Record(
      tprcap::Vec(m.value()), {im}, [im, rows, cols](Graph& g, int self) {
        AddInPlace(g.GradBuffer(im), Unvec(g.GradOf(self), rows, cols));
      });
}

Var Reshape(Var a, Shape shape) {
  Graph& g = *a.graph();
  const int ia = a.id();
  const Shape original = a.value().shape();
  return g.Record(a.value().Reshaped(std::move(shape)), {ia},
                  [ia, original](Graph& g, int self) {
                    AddInPlace(g.GradBuffer(ia),
                               g.GradOf(self).Reshaped(original));
                  });
}

Var Transpose(Var a) {
  Graph& g = *a.graph();
  const int ia = a.id();
  return g.Record(tprcap::Transpose(a.value()), {ia}, [ia](Graph& g, int self) {
    AddInPlace(g.GradBuffer(ia), tprcap::Transpose(g.GradOf(self)));
  });
}

Var Slice(Var a, size_t offset, size_t length) {
  Graph& g = *a.graph();
  const Tensor& av = a.value();
  Require(av.rank() == 1, ErrorKind::kRank,
          "slice: expected rank 1, got " + ShapeString(av.shape()));
  Require(offset + length <= av.size() && length > 0, ErrorKind::kRange,
          "slice: [" + std::to_string(offset) + ", " +
              std::to_string(offset + length) + ") out of range for " +
              ShapeString(av.shape()));
  std::vector<double> part(av.data().begin() + offset,
                           av.data().begin() + offset + length);
  const int ia = a.id();
  return g.Record(Tensor::Vector(std::move(part)), {ia},
                  [ia, offset](Graph& g, int self) {
                    const Tensor& dy = g.GradOf(self);
                    Tensor& da = g.GradBuffer(ia);
                    for (size_t i = 0; i < dy.size(); ++i)
                      da[offset + i] += dy[i];
                  });
}

Var Pick(Var a, size_t index) {
  Graph& g = *a.graph();
  Require(index < a.value().size(), ErrorKind::kRange,
          "pick: index " + std::to_string(index) + " out of range for " +
              ShapeString(a.shape()));
  const int ia = a.id();
  return g.Record(Tensor::Scalar(a.value()[index]), {ia},
                  [ia, index](Graph& g, int self) {
                    g.GradBuffer(ia)[index] += g.GradOf(self)[0];
                  });
}

Var Column(Var m, size_t j) {
  Graph& g = *m.graph();
  const Tensor& mv = m.value();
  Require(mv.rank() == 2, ErrorKind::kRank,
          "column: expected rank 2, got " + ShapeString(mv.shape()));
  Require(j < mv.dim(1), ErrorKind::kRange,
          "column: index " + std::to_string(j) + " out of range for " +
              ShapeString(mv.shape()));
  Tensor col({mv.dim(0)});
  for (size_t i = 0; i < mv.dim(0); ++i) col[i] = mv.at(i, j);
  const int im = m.id();
  return g.Record(std::move(col), {im}, [im, j](Graph& g, int self) {
    const Tensor& dy = g.GradOf(self);
    Tensor& dm = g.GradBuffer(im);
    for (size_t i = 0; i < dy.size(); ++i) dm.at(i, j) += dy[i];
  });
}

Var SumAll(Var a) {
  Graph& g = *a.graph();
  const int ia = a.id();
  return g.Record(Tensor::Scalar(tprcap::Sum(a.value())), {ia},
                  [ia](Graph& g, int self) {
                    const double d = g.GradOf(self)[0];
                    for (double& x : g.GradBuffer(ia).data()) x += d;
                  });
}

Var AddN(const std::vector<Var>& terms) {
  Require(!terms.empty(), ErrorKind::kContract, "add_n of no terms");
  Graph& g = *terms.front().graph();
  Tensor out = terms.front().value();
  std::vector<int> ids{terms.front().id()};
  for (size_t i = 1; i < terms.size(); ++i) {
    Require(terms[i].graph() == &g, ErrorKind::kContract,
            "operands belong to different graphs");
    const Tensor& t = terms[i].value();
    if (t.shape() != out.shape()) {
      Fail(ErrorKind::kDimension, "add_n: shape mismatch " +
                                      ShapeString(out.shape()) + " vs " +
                                      ShapeString(t.shape()));
    }
    AddInPlace(out, t);
    ids.push_back(terms[i].id());
  }
  return g.Record(std::move(out), ids, [ids](Graph& g, int self) {
    for (int id : ids) {
      if (g.requires_grad(id)) AddInPlace(g.GradBuffer(id), g.GradOf(self));
    }
  });
}

double CentralDifference(const std::function<double()>& f, double& coord,
                         double eps) {
  const double saved = coord;
  coord = saved + eps;
  const double plus = f();
  coord = saved - eps;
  const double minus = f();
  coord = saved;
  return (plus - minus) / (2.0 * eps);
}

Tensor FiniteDiff(const std::function<double(const Tensor&)>& f,
                  const Tensor& p, double eps) {
  Tensor probe = p;
  Tensor grad(p.shape());
  for (size_t i = 0; i < p.size(); ++i) {
    grad[i] = CentralDifference([&] { return f(probe); }, probe[i], eps);
  }
  return grad;
}

}  // namespace tprcap
