#include "aste/numerics/parameters.hpp"

#include <cmath>

#include "aste/errors.hpp"

namespace aste::num {

Parameter& ParameterStore::add(Parameter p) {
  if (find(p.name)) throw UsageError("duplicate parameter name " + p.name);
  params_.push_back(std::move(p));
  return params_.back();
}

Parameter& ParameterStore::weight(std::string name, Shape shape, Rng& rng) {
  if (shape.empty() || shape[0] == 0) throw DimensionError("weight " + name + " needs a fan-in");
  Tensor value(shape);
  const double bound = 1.0 / std::sqrt(static_cast<double>(shape[0]));
  for (double& v : value.values()) v = rng.uniform(-bound, bound);
  round_to_precision(value.values());
  return add(Parameter(std::move(name), std::move(value)));
}

Parameter& ParameterStore::bias(std::string name, Shape shape) {
  return add(Parameter(std::move(name), Tensor(std::move(shape))));
}

Parameter* ParameterStore::find(std::string_view name) {
  for (Parameter& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const Parameter* ParameterStore::find(std::string_view name) const {
  for (const Parameter& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::vector<Parameter*> ParameterStore::all() {
  std::vector<Parameter*> out;
  for (Parameter& p : params_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> ParameterStore::all() const {
  std::vector<const Parameter*> out;
  for (const Parameter& p : params_) out.push_back(&p);
  return out;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += p.value.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (Parameter& p : params_) p.zero_grad();
}

}  // namespace aste::num
