#pragma once

// Reverse-mode automatic differentiation over dense tensors.
//
// A Tape records every op of one forward pass in execution order; each node
// stores its value, its input node ids and a backward rule. Tape::backward()
// walks the recorded nodes in reverse and accumulates gradients into the
// trainable Parameters that were bound as leaves. Tapes are rebuilt on every
// forward pass and must not be shared between threads.

#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rlrn/tensor.hpp"

namespace rlrn::ad {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool frozen = false;
};

// Named parameters in insertion order. Addresses are stable for the set's
// lifetime, so tapes may hold references while a forward pass is live.
class ParameterSet {
 public:
  Parameter& add(const std::string& name, Tensor value);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();
  // Freeze / unfreeze every parameter whose name starts with `prefix`.
  void set_frozen(const std::string& prefix, bool frozen);
  // Copy values of every parameter present in both sets (matching shapes).
  std::size_t copy_values_from(const ParameterSet& other, const std::string& prefix = "");

 private:
  std::deque<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  int dim(int axis) const { return value().dim(axis); }
  bool requires_grad() const;
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Binds a parameter as a leaf. Frozen parameters enter as constants.
  Var param(Parameter& p);
  // Records an op node. The node requires grad iff any input does.
  Var record(Tensor value, std::vector<int> inputs, BackwardFn backward);

  // Propagates d(loss)/d(node) back through the tape and accumulates into
  // Parameter::grad for every reachable trainable leaf.
  void backward(const Var& loss);

  const Tensor& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  // Gradient of a node; empty tensor if nothing flowed into it.
  const Tensor& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  // Gradient buffer of an input node, zero-allocated on first use.
  Tensor& grad_buffer(int id);
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<int> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    Parameter* param = nullptr;
  };
  std::deque<Node> nodes_;
};

}  // namespace rlrn::ad
