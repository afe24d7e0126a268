#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace scacopf::nlp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Ordered list of named scalar variables with (possibly infinite) bounds.
class VariableSpace {
 public:
  /// Appends a variable and returns its index. Throws std::invalid_argument on
  /// duplicate names or lower > upper.
  std::size_t add(std::string name, double lower = -kInf, double upper = kInf);

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  std::optional<std::size_t> find(std::string_view name) const;

  double lower(std::size_t i) const { return lower_[i]; }
  double upper(std::size_t i) const { return upper_[i]; }
  std::span<const double> lower() const { return lower_; }
  std::span<const double> upper() const { return upper_; }

  void set_bounds(std::size_t i, double lower, double upper);
  void fix(std::size_t i, double value) { set_bounds(i, value, value); }
  bool is_fixed(std::size_t i) const { return lower_[i] == upper_[i]; }

 private:
  std::vector<std::string> names_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace scacopf::nlp
