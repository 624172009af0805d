#pragma once

#include <functional>
#include <optional>
#include <string>

#include "issp/types.hpp"

namespace issp {

/// x_{k+1} = f(x_k, d_k), possibly partial: when `domain_radius` is set the
/// map is only defined on the closed ball of that radius around
/// `fixed_point`.
struct SystemModel {
  std::string name;
  int state_dimension = 0;
  int disturbance_dimension = 0;
  std::function<Vector(const Vector& x, const Vector& d)> map;
  std::optional<double> domain_radius;
  Vector fixed_point;

  bool in_domain(const Vector& x) const {
    return !domain_radius || (x - fixed_point).norm() <= *domain_radius;
  }

  /// f(x, d), or nullopt when x lies outside the domain.
  std::optional<Vector> step(const Vector& x, const Vector& d) const {
    if (x.size() != state_dimension || d.size() != disturbance_dimension) {
      throw Error(ErrorCode::kDimensionMismatch, name + ": state or disturbance dimension mismatch");
    }
    if (!in_domain(x)) return std::nullopt;
    return map(x, d);
  }
};

}  // namespace issp
