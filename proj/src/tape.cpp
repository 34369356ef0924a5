#include "ctxgrid/tape.hpp"

#include <cmath>

namespace ctxgrid::ad {

namespace kernels {

void tanh_inplace(Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = std::tanh(v[i]);
}

void sigmoid_inplace(Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + std::exp(-v[i]));
}

void softmax(const Vec& logits, Vec& out) {
  out.resize(logits.size());
  const double mx = logits.maxCoeff();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  out /= sum;
}

}  // namespace kernels

void Tape::require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void Tape::check(int id) const { require(id >= 0 && id < used_, "bad node id"); }

int Tape::push(Op op, int dim) {
  if (used_ == static_cast<int>(nodes_.size())) nodes_.emplace_back();
  Node& n = nodes_[used_];
  n.op = op;
  n.a = n.b = -1;
  n.off = 0;
  n.k = 0.0;
  n.W = nullptr;
  n.Wgrad = nullptr;
  n.leaf_grad = nullptr;
  if (n.val.size() != dim) {
    n.val.resize(dim);
    n.grad.resize(dim);
  }
  return used_++;
}

int Tape::leaf(ParamStore& store, int param_id) {
  auto& e = store.entry(param_id);
  require(e.value.cols() == 1, "leaf() expects a vector parameter");
  int id = push(Op::LeafParam, static_cast<int>(e.value.rows()));
  nodes_[id].val = e.value.col(0);
  nodes_[id].leaf_grad = &e.grad;
  return id;
}

int Tape::constant(const Vec& v) {
  int id = push(Op::Constant, static_cast<int>(v.size()));
  nodes_[id].val = v;
  return id;
}

int Tape::constant_scalar(double v) {
  int id = push(Op::Constant, 1);
  nodes_[id].val[0] = v;
  return id;
}

int Tape::matvec(ParamStore& store, int param_id, int x) {
  check(x);
  auto& e = store.entry(param_id);
  require(e.value.cols() == nodes_[x].val.size(), "matvec: shape mismatch");
  int id = push(Op::MatVec, static_cast<int>(e.value.rows()));
  Node& n = nodes_[id];
  n.a = x;
  n.W = &e.value;
  n.Wgrad = &e.grad;
  n.val.noalias() = e.value * nodes_[x].val;
  return id;
}

int Tape::add(int a, int b) {
  check(a);
  check(b);
  require(nodes_[a].val.size() == nodes_[b].val.size(), "add: shape mismatch");
  int id = push(Op::Add, static_cast<int>(nodes_[a].val.size()));
  Node& n = nodes_[id];
  n.a = a;
  n.b = b;
  n.val = nodes_[a].val + nodes_[b].val;
  return id;
}

int Tape::hadamard(int a, int b) {
  check(a);
  check(b);
  require(nodes_[a].val.size() == nodes_[b].val.size(), "hadamard: shape mismatch");
  int id = push(Op::Hadamard, static_cast<int>(nodes_[a].val.size()));
  Node& n = nodes_[id];
  n.a = a;
  n.b = b;
  n.val = nodes_[a].val.cwiseProduct(nodes_[b].val);
  return id;
}

int Tape::tanh(int a) {
  check(a);
  int id = push(Op::Tanh, static_cast<int>(nodes_[a].val.size()));
  Node& n = nodes_[id];
  n.a = a;
  n.val = nodes_[a].val;
  kernels::tanh_inplace(n.val);
  return id;
}

int Tape::sigmoid(int a) {
  check(a);
  int id = push(Op::Sigmoid, static_cast<int>(nodes_[a].val.size()));
  Node& n = nodes_[id];
  n.a = a;
  n.val = nodes_[a].val;
  kernels::sigmoid_inplace(n.val);
  return id;
}

int Tape::concat(int a, int b) {
  check(a);
  check(b);
  const int na = static_cast<int>(nodes_[a].val.size());
  const int nb = static_cast<int>(nodes_[b].val.size());
  int id = push(Op::Concat, na + nb);
  Node& n = nodes_[id];
  n.a = a;
  n.b = b;
  n.val.head(na) = nodes_[a].val;
  n.val.tail(nb) = nodes_[b].val;
  return id;
}

int Tape::slice(int a, int off, int len) {
  check(a);
  require(off >= 0 && len >= 1 && off + len <= nodes_[a].val.size(), "slice: bad range");
  int id = push(Op::Slice, len);
  Node& n = nodes_[id];
  n.a = a;
  n.off = off;
  n.val = nodes_[a].val.segment(off, len);
  return id;
}

int Tape::scale(int a, double k) {
  check(a);
  int id = push(Op::Scale, static_cast<int>(nodes_[a].val.size()));
  Node& n = nodes_[id];
  n.a = a;
  n.k = k;
  n.val = k * nodes_[a].val;
  return id;
}

int Tape::softmax(int a) {
  check(a);
  require(nodes_[a].val.allFinite(), "softmax: non-finite input");
  int id = push(Op::Softmax, static_cast<int>(nodes_[a].val.size()));
  Node& n = nodes_[id];
  n.a = a;
  kernels::softmax(nodes_[a].val, n.val);
  return id;
}

int Tape::log(int a) {
  check(a);
  int id = push(Op::Log, static_cast<int>(nodes_[a].val.size()));
  Node& n = nodes_[id];
  n.a = a;
  for (Eigen::Index i = 0; i < n.val.size(); ++i) n.val[i] = std::log(nodes_[a].val[i]);
  return id;
}

int Tape::dot(int a, int b) {
  check(a);
  check(b);
  require(nodes_[a].val.size() == nodes_[b].val.size(), "dot: shape mismatch");
  int id = push(Op::Dot, 1);
  Node& n = nodes_[id];
  n.a = a;
  n.b = b;
  n.val[0] = nodes_[a].val.dot(nodes_[b].val);
  return id;
}

int Tape::sum(int a) {
  check(a);
  int id = push(Op::Sum, 1);
  Node& n = nodes_[id];
  n.a = a;
  n.val[0] = nodes_[a].val.sum();
  return id;
}

double Tape::scalar(int id) const {
  check(id);
  require(nodes_[id].val.size() == 1, "scalar() on non-scalar node");
  return nodes_[id].val[0];
}

void Tape::backward(int loss) {
  check(loss);
  require(nodes_[loss].val.size() == 1, "backward: loss must be scalar");

  for (int i = 0; i <= loss; ++i) nodes_[i].grad.setZero();
  nodes_[loss].grad[0] = 1.0;

  for (int i = loss; i >= 0; --i) {
    Node& n = nodes_[i];
    const Vec& g = n.grad;
    switch (n.op) {
      case Op::LeafParam:
        n.leaf_grad->col(0) += g;
        break;
      case Op::Constant:
        break;
      case Op::MatVec:
        n.Wgrad->noalias() += g * nodes_[n.a].val.transpose();
        nodes_[n.a].grad.noalias() += n.W->transpose() * g;
        break;
      case Op::Add:
        nodes_[n.a].grad += g;
        nodes_[n.b].grad += g;
        break;
      case Op::Hadamard:
        nodes_[n.a].grad.array() += g.array() * nodes_[n.b].val.array();
        nodes_[n.b].grad.array() += g.array() * nodes_[n.a].val.array();
        break;
      case Op::Tanh:
        nodes_[n.a].grad.array() += g.array() * (1.0 - n.val.array().square());
        break;
      case Op::Sigmoid:
        nodes_[n.a].grad.array() += g.array() * n.val.array() * (1.0 - n.val.array());
        break;
      case Op::Concat: {
        const int na = static_cast<int>(nodes_[n.a].val.size());
        const int nb = static_cast<int>(nodes_[n.b].val.size());
        nodes_[n.a].grad += g.head(na);
        nodes_[n.b].grad += g.tail(nb);
        break;
      }
      case Op::Slice:
        nodes_[n.a].grad.segment(n.off, n.val.size()) += g;
        break;
      case Op::Scale:
        nodes_[n.a].grad += n.k * g;
        break;
      case Op::Softmax: {
        // d x_j = y_j * (g_j - <g, y>)
        const double gy = g.dot(n.val);
        nodes_[n.a].grad.array() += n.val.array() * (g.array() - gy);
        break;
      }
      case Op::Log:
        nodes_[n.a].grad.array() += g.array() / nodes_[n.a].val.array();
        break;
      case Op::Dot:
        nodes_[n.a].grad += g[0] * nodes_[n.b].val;
        nodes_[n.b].grad += g[0] * nodes_[n.a].val;
        break;
      case Op::Sum:
        nodes_[n.a].grad.array() += g[0];
        break;
    }
  }
}

}  // namespace ctxgrid::ad
