#pragma once

#include <deque>
#include <string>
#include <string_view>
#include <vector>

#include "aste/numerics/graph.hpp"
#include "aste/numerics/rng.hpp"

namespace aste::num {

// Owns named parameters with stable addresses, in creation order.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;

  // Weight initialised uniformly in [-1/sqrt(fan_in), 1/sqrt(fan_in)], where
  // fan_in is the first extent.
  Parameter& weight(std::string name, Shape shape, Rng& rng);
  // Zero-initialised.
  Parameter& bias(std::string name, Shape shape);

  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::size_t size() const { return params_.size(); }
  // Total number of scalars.
  std::size_t scalar_count() const;

  void zero_grad();

 private:
  Parameter& add(Parameter p);

  std::deque<Parameter> params_;
};

}  // namespace aste::num
