#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ctxgrid/params.hpp"

namespace ctxgrid::ad {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Reverse-mode tape over dense vectors. Interior nodes own their buffers;
// parameters enter as leaves that point back into a ParamStore so backward()
// accumulates straight into the store's grad matrices. Matrix parameters
// never live on the tape, only the matvec results do.
//
// Buffers are kept across reset(): consecutive episodes replay an almost
// identical op sequence, so after warmup a rollout allocates nothing.
class Tape {
 public:
  enum class Op : uint8_t {
    LeafParam,   // vector parameter (column of a store entry)
    Constant,    // input / frozen value
    MatVec,      // W * x, W a matrix parameter
    Add,
    Hadamard,
    Tanh,
    Sigmoid,
    Concat,
    Slice,
    Scale,
    Softmax,
    Log,
    Dot,
    Sum,
  };

  struct Node {
    Op op;
    int a = -1, b = -1;   // parent node ids
    int off = 0;          // slice offset
    double k = 0.0;       // scale factor
    const Mat* W = nullptr;  // MatVec weight
    Mat* Wgrad = nullptr;    // MatVec weight grad sink
    Mat* leaf_grad = nullptr;  // LeafParam grad sink
    Vec val, grad;
  };

  // --- leaves ---------------------------------------------------------
  int leaf(ParamStore& store, int param_id);
  int constant(const Vec& v);
  int constant_scalar(double v);

  // --- forward ops ----------------------------------------------------
  int matvec(ParamStore& store, int param_id, int x);  // W * x
  int add(int a, int b);
  int hadamard(int a, int b);
  int tanh(int a);
  int sigmoid(int a);
  int concat(int a, int b);
  int slice(int a, int off, int len);
  int scale(int a, double k);
  int softmax(int a);
  int log(int a);
  int dot(int a, int b);  // scalar (1-dim) result
  int sum(int a);         // scalar (1-dim) result

  const Vec& value(int id) const { return nodes_[id].val; }
  const Vec& grad(int id) const { return nodes_[id].grad; }
  double scalar(int id) const;

  // Seeds d(loss)/d(loss)=1 and sweeps the tape in reverse creation order.
  // Parameter grads accumulate across calls; interior grads are transient.
  // Throws std::invalid_argument if `loss` is not 1-dimensional.
  void backward(int loss);

  void reset() { used_ = 0; }
  int size() const { return used_; }

 private:
  int push(Op op, int dim);
  void check(int id) const;
  static void require(bool cond, const char* msg);

  std::vector<Node> nodes_;
  int used_ = 0;
};

// Shared elementwise kernels. The no-grad rollout path and the tape use
// exactly these, so recomputed values match stored ones bit for bit.
namespace kernels {
void tanh_inplace(Vec& v);
void sigmoid_inplace(Vec& v);
// Max-shifted softmax.
void softmax(const Vec& logits, Vec& out);
}  // namespace kernels

}  // namespace ctxgrid::ad
