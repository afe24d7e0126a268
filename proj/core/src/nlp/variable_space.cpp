#include "scacopf/nlp/variable_space.hpp"

#include <stdexcept>

namespace scacopf::nlp {

std::size_t VariableSpace::add(std::string name, double lower, double upper) {
  if (lower > upper) throw std::invalid_argument("variable '" + name + "': lower > upper");
  const auto idx = names_.size();
  if (!index_.emplace(name, idx).second)
    throw std::invalid_argument("duplicate variable name '" + name + "'");
  names_.push_back(std::move(name));
  lower_.push_back(lower);
  upper_.push_back(upper);
  return idx;
}

std::optional<std::size_t> VariableSpace::find(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void VariableSpace::set_bounds(std::size_t i, double lower, double upper) {
  if (i >= names_.size()) throw std::out_of_range("variable index out of range");
  if (lower > upper)
    throw std::invalid_argument("variable '" + names_[i] + "': lower > upper");
  lower_[i] = lower;
  upper_[i] = upper;
}

}  // namespace scacopf::nlp
