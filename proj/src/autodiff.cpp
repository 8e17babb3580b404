#include "rlrn/autodiff.hpp"

#include <cassert>

#include "rlrn/errors.hpp"

namespace rlrn::ad {

Parameter& ParameterSet::add(const std::string& name, Tensor value) {
  if (index_.count(name)) throw UsageError("duplicate parameter name: " + name);
  index_[name] = params_.size();
  Parameter& p = params_.emplace_back();
  p.name = name;
  p.grad = Tensor::zeros_like(value);
  p.value = std::move(value);
  return p;
}

Parameter& ParameterSet::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter: " + name);
  return params_[it->second];
}

const Parameter& ParameterSet::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter: " + name);
  return params_[it->second];
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0f);
}

void ParameterSet::set_frozen(const std::string& prefix, bool frozen) {
  for (auto& p : params_)
    if (p.name.rfind(prefix, 0) == 0) p.frozen = frozen;
}

std::size_t ParameterSet::copy_values_from(const ParameterSet& other, const std::string& prefix) {
  std::size_t copied = 0;
  for (auto& p : params_) {
    if (p.name.rfind(prefix, 0) != 0 || !other.contains(p.name)) continue;
    const Parameter& src = other.get(p.name);
    if (src.value.shape() != p.value.shape())
      throw DimensionError("parameter " + p.name + " has shape " + shape_str(p.value.shape()) +
                           " but source has " + shape_str(src.value.shape()));
    p.value = src.value;
    ++copied;
  }
  return copied;
}

const Tensor& Var::value() const { return tape_->value(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::param(Parameter& p) {
  Node& n = nodes_.emplace_back();
  n.value = p.value;
  n.requires_grad = !p.frozen;
  n.param = p.frozen ? nullptr : &p;
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::record(Tensor value, std::vector<int> inputs, BackwardFn backward) {
#ifndef NDEBUG
  if (!value.all_finite()) {
    bool inputs_finite = true;
    for (int id : inputs) inputs_finite = inputs_finite && nodes_[static_cast<std::size_t>(id)].value.all_finite();
    assert(!inputs_finite && "non-finite output from finite inputs");
  }
#endif
  bool rg = false;
  for (int id : inputs) rg = rg || nodes_[static_cast<std::size_t>(id)].requires_grad;
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.inputs = std::move(inputs);
  n.requires_grad = rg;
  if (rg) n.backward = std::move(backward);
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Tensor& Tape::grad_buffer(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.empty()) n.grad = Tensor::zeros_like(n.value);
  return n.grad;
}

void Tape::backward(const Var& loss) {
  if (loss.tape() != this) throw UsageError("backward: loss does not belong to this tape");
  if (loss.value().size() != 1)
    throw UsageError("backward: loss must be scalar, got shape " + shape_str(loss.value().shape()));
  grad_buffer(loss.id()).fill(1.0f);
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, id);
    if (n.param != nullptr) {
      auto g = n.grad.data();
      auto dst = n.param->grad.data();
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    }
  }
}

}  // namespace rlrn::ad
