#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace scacopf::grid {

/// Raised when a network file cannot be parsed or violates a model invariant.
class NetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Bus {
  std::string id;
  double v_min_base = 0.9;
  double v_max_base = 1.1;
  double v_min_emer = 0.9;
  double v_max_emer = 1.1;
  double p_load = 0.0;
  double q_load = 0.0;
  double g_shunt = 0.0;
  double b_shunt = 0.0;
};

/// Convex quadratic generation cost c0 + c1 p + c2 p^2 (per-unit p).
struct QuadraticCost {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;

  double operator()(double p) const { return c0 + (c1 + c2 * p) * p; }
  double derivative(double p) const { return c1 + 2.0 * c2 * p; }
};

struct Generator {
  std::string id;
  std::string bus;
  std::size_t bus_index = 0;
  double p_min = 0.0;
  double p_max = 0.0;
  double q_min = 0.0;
  double q_max = 0.0;
  double drop_const = 0.0;
  QuadraticCost cost;
};

struct Branch {
  std::string id;
  std::string from_bus;
  std::string to_bus;
  std::size_t from = 0;
  std::size_t to = 0;
  double g_series = 0.0;
  double b_series = 0.0;
  double b_charge = 0.0;
  double rate_base = 0.0;
  double rate_emer = 0.0;
};

/// Two-bin piecewise-linear penalty: slope1 on [0, bin1_width], slope2 beyond.
struct PenaltyCurve {
  double slope1 = 0.0;
  double slope2 = 0.0;
  double bin1_width = 0.0;

  double operator()(double x) const;
};

enum class ContingencyKind { generator, branch };

std::string_view to_string(ContingencyKind kind);

struct Contingency {
  std::string id;
  ContingencyKind kind = ContingencyKind::generator;
  std::string element;
  std::size_t element_index = 0;
};

/// Reserved contingency id naming the base case k0.
inline constexpr std::string_view kBaseCaseId = "base";

struct Network {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<Branch> branches;
  PenaltyCurve penalty_s;
  PenaltyCurve penalty_p;
  PenaltyCurve penalty_q;
  std::vector<Contingency> contingencies;

  /// Generators attached to each bus (indices into `generators`).
  std::vector<std::vector<std::size_t>> gens_at_bus;

  std::optional<std::size_t> bus_index(std::string_view id) const;
  std::optional<std::size_t> generator_index(std::string_view id) const;
  std::optional<std::size_t> branch_index(std::string_view id) const;
  std::optional<std::size_t> contingency_index(std::string_view id) const;
};

/// Parses and validates a network JSON document (see data/schema/network.schema.json).
Network parse_network(std::string_view json_text);

/// Reads `path` and calls parse_network.
Network load_network(const std::filesystem::path& path);

/// Resolves cross references, builds the per-bus generator index and checks
/// every invariant. Throws NetworkError naming the first violation.
void validate(Network& net);

/// Element sets and bounds active in one power-flow case.
struct CaseTopology {
  /// Index into Network::contingencies, or empty for the base case.
  std::optional<std::size_t> contingency;
  std::vector<std::size_t> generators;
  std::vector<std::size_t> branches;
  std::vector<char> generator_active;
  std::vector<char> branch_active;
  std::vector<double> v_min;
  std::vector<double> v_max;
  /// Thermal rating per branch (indexed by network branch index).
  std::vector<double> rating;

  bool is_base() const { return !contingency.has_value(); }
  /// Buses with at least one active generator (voltage-controlled buses).
  std::vector<std::size_t> controlled_buses(const Network& net) const;
  /// Active generators at bus n.
  std::vector<std::size_t> active_generators_at(const Network& net, std::size_t n) const;
};

CaseTopology base_topology(const Network& net);

/// Topology of contingency `id`; `kBaseCaseId` yields the base topology.
CaseTopology apply_contingency(const Network& net, std::string_view id);
CaseTopology apply_contingency(const Network& net, std::size_t contingency_index);

struct DeltaBounds {
  double lower = 0.0;
  double upper = 0.0;
  /// No generator with a positive drop constant remains in service.
  bool rigid = false;
};

/// Interval-algebra bounds on the drop-control signal for case `topo`:
/// beyond [lower, upper] every responding generator is saturated.
/// `p_base` is indexed by network generator index.
DeltaBounds delta_bounds(const Network& net, const CaseTopology& topo,
                         std::span<const double> p_base);

/// True when all buses are reachable when branches with `branch_active[e] == 0` are removed.
bool is_connected(const Network& net, std::span<const char> branch_active);

}  // namespace scacopf::grid
