#pragma once

#include "kinfluid/collision_operator.hpp"

// n = 16, R = 8 operator with M_v blocks, shared through the on-disk cache
inline const kf::CollisionOperator& shared_operator() {
  static const auto op = [] {
    auto g = kf::build_velocity_grid(16, 8.0);
    kf::OperatorOptions o;
    o.build_mv = true;
    return kf::cached_operator(g, o, kf::default_cache_path(g, o));
  }();
  return *op;
}
