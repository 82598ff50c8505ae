#pragma once

#include <array>
#include <cstddef>

#include "lpeq/bsde_system.hpp"

namespace lpeq {

/// Read-only view of a solved BSDE as a function of (time node, dividend level).
/// Both solver backends expose their solutions through this interface.
class StateSampler {
 public:
  virtual ~StateSampler() = default;

  virtual std::size_t n_steps() const = 0;
  virtual double horizon() const = 0;
  double dt() const { return horizon() / static_cast<double>(n_steps()); }

  virtual bool contains(double d) const = 0;
  virtual BsdeState at_node(std::size_t n, double d) const = 0;

  /// d/dD of (z_a, z1, z2) at node n.
  virtual std::array<double, 3> z_slope(std::size_t n, double d) const = 0;
};

}  // namespace lpeq
