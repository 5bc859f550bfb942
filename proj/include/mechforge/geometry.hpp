// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mechforge {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

// Quaternion as the [x, y, z, w] array used by the machine file formats.
struct QuatXYZW {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double w = 1.0;
};

inline QuatXYZW to_xyzw(const Quat& q) { return {q.x(), q.y(), q.z(), q.w()}; }
inline Quat from_xyzw(const QuatXYZW& q) { return Quat(q.w, q.x, q.y, q.z); }

// Picks the representative with w >= 0 (first nonzero component positive when w == 0).
inline Quat canonical(Quat q) {
  q.normalize();
  const double c[4] = {q.w(), q.x(), q.y(), q.z()};
  for (double v : c) {
    if (v > 1e-12) return q;
    if (v < -1e-12) return Quat(-q.w(), -q.x(), -q.y(), -q.z());
  }
  return q;
}

// Axis-aligned box, [min, max] per axis.
struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  Vec3 extents() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
  Aabb shrunk(double eps) const { return {min.array() + eps, max.array() - eps}; }
  Aabb merged(const Aabb& o) const { return {min.cwiseMin(o.min), max.cwiseMax(o.max)}; }
  bool overlaps(const Aabb& o) const {
    return (min.array() < o.max.array()).all() && (o.min.array() < max.array()).all();
  }
  Aabb intersection(const Aabb& o) const { return {min.cwiseMax(o.min), max.cwiseMin(o.max)}; }
};

// Box with a pose. All resolved machine poses are axis permutations, so the
// world AABB of an OrientedBox is exact for them.
struct OrientedBox {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();

  Aabb aabb() const {
    const Vec3 h = rotation.cwiseAbs() * half_extents;
    return {center - h, center + h};
  }
};

}  // namespace mechforge
