// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
#include <algorithm>
#include <array>
#include <cmath>

#include "mechforge/physics.hpp"

namespace mechforge {
namespace {

constexpr double kContactMargin = 0.05;
constexpr double kSlop = 0.001;
constexpr double kContactBeta = 0.2;
constexpr double kJointBeta = 0.2;
constexpr double kBounceSpeed = 0.5;
constexpr int kGround = -1;

using Key = std::tuple<int, int, int, int>;

Mat3 skew(const Vec3& r) {
  Mat3 m;
  m << 0, -r.z(), r.y(), r.z(), 0, -r.x(), -r.y(), r.x(), 0;
  return m;
}

// Per-body solver scratch; index -1 stands for the static environment.
struct Scratch {
  double im = 0.0;
  Mat3 ii = Mat3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 w = Vec3::Zero();
  Vec3 vp = Vec3::Zero();
  Vec3 wp = Vec3::Zero();
};

struct Contact {
  int a = -1;
  int b = -1;
  Vec3 n = Vec3::UnitY();  // pushes a along +n
  Vec3 p = Vec3::Zero();
  double d = 0.0;
  double mu = 0.0;
  double e = 0.0;
  Key key;
  Vec3 ra, rb, t1, t2;
  double kn = 0, kt1 = 0, kt2 = 0;
  double target = 0.0;
  double ln = 0, lt1 = 0, lt2 = 0, lp = 0;
};

struct JointRow {
  Joint* j = nullptr;
  Vec3 ra, rb;
  Mat3 k_point;  // inverse effective mass
  Mat3 k_ang;
  Vec3 axis, t1, t2;
  Eigen::Matrix2d k_perp;
  double k_motor = 0.0;
  double motor_target = 0.0;
  double motor_max = 0.0;
  bool motor_on = false;
  Vec3 lin_impulse = Vec3::Zero();
  double motor_impulse = 0.0;
};

void tangents(const Vec3& n, Vec3& t1, Vec3& t2) {
  if (std::abs(n.x()) > 0.57) {
    t1 = Vec3(n.y(), -n.x(), 0.0).normalized();
  } else {
    t1 = Vec3(0.0, n.z(), -n.y()).normalized();
  }
  t2 = n.cross(t1);
}

class Solver {
 public:
  Solver(World& w, double dt) : w_(w), dt_(dt), s_(w.bodies.size()) {}

  void run() {
    const Scenario& sc = w_.scenario;
    const bool powered = w_.time >= sc.power_on_time - 1e-9;
    for (std::size_t i = 0; i < w_.bodies.size(); ++i) {
      const RigidBody& b = w_.bodies[i];
      Scratch& s = s_[i];
      s.im = b.inv_mass;
      s.ii = b.world_inv_inertia();
      s.v = b.v + Vec3(0.0, -sc.gravity * dt_, 0.0);
      s.w = b.w;
    }
    v0_.clear();
    for (const RigidBody& b : w_.bodies) v0_.push_back(b.v);
    if (powered) apply_springs();
    generate_contacts();
    prepare_joints(powered);
    prepare_contacts();
    warm_start();

    for (int it = 0; it < sc.solver_iterations; ++it) {
      for (JointRow& r : rows_) solve_joint(r);
      for (Contact& c : contacts_) solve_contact(c);
    }
    std::map<Key, WarmImpulse> cache;
    for (const Contact& c : contacts_) cache[c.key] = {c.ln, c.lt1, c.lt2};
    w_.warm = std::move(cache);

    check_breaks();

    for (int it = 0; it < sc.position_iterations; ++it) {
      for (JointRow& r : rows_) {
        if (!r.j->broken) correct_joint(r);
      }
      for (Contact& c : contacts_) correct_contact(c);
    }
    integrate();
  }

 private:
  Scratch& at(int i) { return i < 0 ? env_ : s_[static_cast<std::size_t>(i)]; }

  void impulse(int body, const Vec3& r, const Vec3& p) {
    if (body < 0) return;
    Scratch& s = at(body);
    s.v += s.im * p;
    s.w += s.ii * r.cross(p);
  }
  void pseudo_impulse(int body, const Vec3& r, const Vec3& p) {
    if (body < 0) return;
    Scratch& s = at(body);
    s.vp += s.im * p;
    s.wp += s.ii * r.cross(p);
  }
  void angular(int body, const Vec3& l) {
    if (body >= 0) at(body).w += at(body).ii * l;
  }
  void pseudo_angular(int body, const Vec3& l) {
    if (body >= 0) at(body).wp += at(body).ii * l;
  }

  void apply_springs() {
    for (const SpringLink& sp : w_.springs) {
      const RigidBody& a = w_.bodies[static_cast<std::size_t>(sp.a)];
      const RigidBody& b = w_.bodies[static_cast<std::size_t>(sp.b)];
      const Vec3 pa = a.to_world(sp.anchor_a);
      const Vec3 pb = b.to_world(sp.anchor_b);
      const Vec3 d = pb - pa;
      const double len = d.norm();
      if (len < 1e-9) continue;
      // Tension pulls a toward b and b toward a.
      const Vec3 f = sp.stiffness * (len - sp.rest_length) * (d / len);
      impulse(sp.a, pa - a.x, f * dt_);
      impulse(sp.b, pb - b.x, -f * dt_);
    }
  }

  // ------------------------------------------------------------ contacts

  void add_contact(int a, int b, const Vec3& n, const Vec3& p, double d, double mu, double e, const Key& key) {
    Contact c;
    c.a = a;
    c.b = b;
    c.n = n;
    c.p = p;
    c.d = d;
    c.mu = mu;
    c.e = e;
    c.key = key;
    contacts_.push_back(c);
  }

  // Candidate points of a shape in contact with a half-space whose outward normal is n.
  static void support_points(const Shape& sh, const Vec3& c, const Mat3& r, const Vec3& n, std::vector<Vec3>& out) {
    out.clear();
    if (sh.kind == ShapeKind::Box) {
      for (int k = 0; k < 8; ++k) {
        const Vec3 s((k & 1) ? 1.0 : -1.0, (k & 2) ? 1.0 : -1.0, (k & 4) ? 1.0 : -1.0);
        out.push_back(c + r * s.cwiseProduct(sh.half));
      }
    } else if (sh.kind == ShapeKind::Cylinder) {
      const Vec3 axis = r.col(2);
      const Vec3 radial = n - n.dot(axis) * axis;
      for (double side : {-1.0, 1.0}) {
        const Vec3 cap = c + side * sh.half.z() * axis;
        if (radial.norm() > 0.1) {
          out.push_back(cap - sh.radius * radial.normalized());
        } else {
          for (int k = 0; k < 4; ++k) {
            const Vec3 dir = (k < 2 ? r.col(0) : r.col(1)) * (k % 2 == 0 ? 1.0 : -1.0);
            out.push_back(cap + sh.radius * dir);
          }
        }
      }
    }
  }

  // Points sampled around both rims of a cylinder, for wall contact.
  static void rim_points(const Shape& sh, const Vec3& c, const Mat3& r, std::vector<Vec3>& out) {
    out.clear();
    const Vec3 axis = r.col(2);
    for (double side : {-1.0, 1.0}) {
      const Vec3 cap = c + side * sh.half.z() * axis;
      for (int k = 0; k < 8; ++k) {
        const double a = k * M_PI / 4.0;
        out.push_back(cap + sh.radius * (std::cos(a) * r.col(0) + std::sin(a) * r.col(1)));
      }
    }
  }

  // Signed distance from p to a box, with the outward normal at the closest point.
  static double box_distance(const Aabb& box, const Vec3& p, Vec3& n) {
    const Vec3 q = p.cwiseMax(box.min).cwiseMin(box.max);
    const Vec3 diff = p - q;
    const double dist = diff.norm();
    if (dist > 1e-12) {
      n = diff / dist;
      return dist;
    }
    double best = 1e300;
    for (int ax = 0; ax < 3; ++ax) {
      const double lo = p[ax] - box.min[ax];
      const double hi = box.max[ax] - p[ax];
      if (lo < best) {
        best = lo;
        n = -Vec3::Unit(ax);
      }
      if (hi < best) {
        best = hi;
        n = Vec3::Unit(ax);
      }
    }
    return -best;
  }

  void generate_contacts() {
    std::vector<Vec3> pts;
    const Vec3 up = Vec3::UnitY();
    for (std::size_t i = 0; i < w_.bodies.size(); ++i) {
      const RigidBody& b = w_.bodies[i];
      const Mat3 rb = b.q.toRotationMatrix();
      const int bi = static_cast<int>(i);
      for (std::size_t si = 0; si < b.shapes.size(); ++si) {
        const Shape& sh = b.shapes[si];
        const Vec3 c = b.x + rb * sh.center;
        const Mat3 r = rb * sh.rotation;
        const int sid = static_cast<int>(si);
        // Ground plane.
        if (sh.kind == ShapeKind::Sphere) {
          const double d = c.y() - sh.radius;
          if (d < kContactMargin) add_contact(bi, -1, up, c - sh.radius * up, d, sh.friction, sh.restitution, {bi, sid, kGround, 0});
        } else {
          support_points(sh, c, r, up, pts);
          for (std::size_t k = 0; k < pts.size(); ++k) {
            const double d = pts[k].y();
            if (d < kContactMargin) {
              add_contact(bi, -1, up, pts[k], d, sh.friction, sh.restitution, {bi, sid, kGround, static_cast<int>(k)});
            }
          }
        }
        // Walls.
        for (std::size_t wi = 0; wi < w_.walls.size(); ++wi) {
          const Aabb& wall = w_.walls[wi];
          const int tag = -2 - static_cast<int>(wi);
          Vec3 n;
          if (sh.kind == ShapeKind::Sphere) {
            const double d = box_distance(wall, c, n) - sh.radius;
            if (d < kContactMargin) add_contact(bi, -1, n, c - sh.radius * n, d, sh.friction, sh.restitution, {bi, sid, tag, 0});
            continue;
          }
          if (sh.kind == ShapeKind::Box) {
            support_points(sh, c, r, up, pts);
          } else {
            rim_points(sh, c, r, pts);
          }
          for (std::size_t k = 0; k < pts.size(); ++k) {
            const double d = box_distance(wall, pts[k], n);
            if (d < kContactMargin) {
              add_contact(bi, -1, n, pts[k], d, sh.friction, sh.restitution, {bi, sid, tag, static_cast<int>(k)});
            }
          }
        }
      }
    }
    generate_sphere_contacts();
  }

  bool jointed(int a, int b) const {
    for (const Joint& j : w_.joints) {
      if (j.broken) continue;
      if ((j.a == a && j.b == b) || (j.a == b && j.b == a)) return true;
    }
    return false;
  }

  // Spheres (boulders, casters) collide with every shape on other bodies.
  void generate_sphere_contacts() {
    const std::size_t nb = w_.bodies.size();
    for (std::size_t i = 0; i < nb; ++i) {
      const RigidBody& bi = w_.bodies[i];
      const Mat3 ri = bi.q.toRotationMatrix();
      for (std::size_t si = 0; si < bi.shapes.size(); ++si) {
        const Shape& sph = bi.shapes[si];
        if (sph.kind != ShapeKind::Sphere) continue;
        const Vec3 c = bi.x + ri * sph.center;
        for (std::size_t j = 0; j < nb; ++j) {
          if (j == i || jointed(static_cast<int>(i), static_cast<int>(j))) continue;
          const RigidBody& bj = w_.bodies[j];
          const Mat3 rj = bj.q.toRotationMatrix();
          for (std::size_t sj = 0; sj < bj.shapes.size(); ++sj) {
            const Shape& other = bj.shapes[sj];
            const Vec3 oc = bj.x + rj * other.center;
            Vec3 n;
            double d = 0.0;
            if (other.kind == ShapeKind::Sphere) {
              if (std::make_pair(j, sj) < std::make_pair(i, si)) continue;
              const Vec3 diff = c - oc;
              const double len = diff.norm();
              n = len > 1e-12 ? Vec3(diff / len) : Vec3(Vec3::UnitY());
              d = len - sph.radius - other.radius;
            } else {
              const Mat3 orot = rj * other.rotation;
              const Vec3 local = orot.transpose() * (c - oc);
              Vec3 ln;
              d = box_distance({-other.half, other.half}, local, ln) - sph.radius;
              n = orot * ln;
            }
            if (d >= kContactMargin) continue;
            const double mu = std::max(sph.friction, other.friction);
            const double e = std::max(sph.restitution, other.restitution);
            add_contact(static_cast<int>(i), static_cast<int>(j), n, c - sph.radius * n, d, mu, e,
                        {static_cast<int>(i), static_cast<int>(si), static_cast<int>(j), static_cast<int>(sj)});
          }
        }
      }
    }
  }

  double effective(int body, const Vec3& r, const Vec3& dir) {
    if (body < 0) return 0.0;
    const Scratch& s = at(body);
    const Vec3 rn = r.cross(dir);
    return s.im + rn.dot(s.ii * rn);
  }

  Vec3 relative_velocity(const Contact& c) {
    Vec3 v = at(c.a).v + at(c.a).w.cross(c.ra);
    if (c.b >= 0) v -= at(c.b).v + at(c.b).w.cross(c.rb);
    return v;
  }
  Vec3 relative_pseudo(const Contact& c) {
    Vec3 v = at(c.a).vp + at(c.a).wp.cross(c.ra);
    if (c.b >= 0) v -= at(c.b).vp + at(c.b).wp.cross(c.rb);
    return v;
  }

  void prepare_contacts() {
    for (Contact& c : contacts_) {
      c.ra = c.p - w_.bodies[static_cast<std::size_t>(c.a)].x;
      c.rb = c.b >= 0 ? Vec3(c.p - w_.bodies[static_cast<std::size_t>(c.b)].x) : Vec3::Zero();
      tangents(c.n, c.t1, c.t2);
      c.kn = 1.0 / (effective(c.a, c.ra, c.n) + effective(c.b, c.rb, c.n));
      c.kt1 = 1.0 / (effective(c.a, c.ra, c.t1) + effective(c.b, c.rb, c.t1));
      c.kt2 = 1.0 / (effective(c.a, c.ra, c.t2) + effective(c.b, c.rb, c.t2));
      const double vn = relative_velocity(c).dot(c.n);
      c.target = c.d > 0 ? -c.d / dt_ : 0.0;
      if (c.e > 0 && vn < -kBounceSpeed) c.target = std::max(c.target, -c.e * vn);
    }
  }

  void warm_start() {
    for (Contact& c : contacts_) {
      if (c.d > 0) continue;
      const auto it = w_.warm.find(c.key);
      if (it == w_.warm.end()) continue;
      c.ln = it->second.n;
      c.lt1 = it->second.t1;
      c.lt2 = it->second.t2;
      const Vec3 p = c.ln * c.n + c.lt1 * c.t1 + c.lt2 * c.t2;
      impulse(c.a, c.ra, p);
      impulse(c.b, c.rb, -p);
    }
  }

  void solve_contact(Contact& c) {
    const Vec3 vrel = relative_velocity(c);
    const double vn = vrel.dot(c.n);
    const double old = c.ln;
    c.ln = std::max(0.0, old + c.kn * (c.target - vn));
    const double dn = c.ln - old;
    impulse(c.a, c.ra, dn * c.n);
    impulse(c.b, c.rb, -dn * c.n);

    const double limit = c.mu * c.ln;
    const Vec3 v2 = relative_velocity(c);
    const double o1 = c.lt1;
    c.lt1 = std::clamp(o1 - c.kt1 * v2.dot(c.t1), -limit, limit);
    const double o2 = c.lt2;
    c.lt2 = std::clamp(o2 - c.kt2 * v2.dot(c.t2), -limit, limit);
    const Vec3 pt = (c.lt1 - o1) * c.t1 + (c.lt2 - o2) * c.t2;
    impulse(c.a, c.ra, pt);
    impulse(c.b, c.rb, -pt);
  }

  void correct_contact(Contact& c) {
    const double bias = kContactBeta * std::max(-c.d - kSlop, 0.0) / dt_;
    if (bias <= 0.0) return;
    const double vn = relative_pseudo(c).dot(c.n);
    const double old = c.lp;
    c.lp = std::max(0.0, old + c.kn * (bias - vn));
    const double dn = c.lp - old;
    pseudo_impulse(c.a, c.ra, dn * c.n);
    pseudo_impulse(c.b, c.rb, -dn * c.n);
  }

  // -------------------------------------------------------------- joints

  void prepare_joints(bool powered) {
    for (Joint& j : w_.joints) {
      if (j.broken) continue;
      const RigidBody& a = w_.bodies[static_cast<std::size_t>(j.a)];
      const RigidBody& b = w_.bodies[static_cast<std::size_t>(j.b)];
      JointRow r;
      r.j = &j;
      r.ra = a.q * j.anchor_a;
      r.rb = b.q * j.anchor_b;
      const Scratch& sa = at(j.a);
      const Scratch& sb = at(j.b);
      const Mat3 k = (sa.im + sb.im) * Mat3::Identity() - skew(r.ra) * sa.ii * skew(r.ra) -
                     skew(r.rb) * sb.ii * skew(r.rb);
      r.k_point = k.inverse();
      const Mat3 kang = sa.ii + sb.ii;
      if (j.kind == JointKind::Fixed) r.k_ang = kang.inverse();
      if (j.kind == JointKind::Revolute) {
        r.axis = (a.q * j.axis_a).normalized();
        tangents(r.axis, r.t1, r.t2);
        Eigen::Matrix2d k2;
        k2 << r.t1.dot(kang * r.t1), r.t1.dot(kang * r.t2), r.t2.dot(kang * r.t1), r.t2.dot(kang * r.t2);
        r.k_perp = k2.inverse();
        if (j.motor != MotorKind::None) {
          r.k_motor = 1.0 / r.axis.dot(kang * r.axis);
          r.motor_on = true;
          r.motor_max = j.motor_torque * dt_;
          const bool braking = j.motor == MotorKind::Hold || (!powered && j.brake_before_power);
          r.motor_target = braking ? 0.0 : j.motor_speed;
        }
      }
      rows_.push_back(r);
    }
  }

  void solve_joint(JointRow& r) {
    const Joint& j = *r.j;
    Scratch& a = at(j.a);
    Scratch& b = at(j.b);
    if (r.motor_on) {
      const double cdot = r.axis.dot(b.w - a.w) - r.motor_target;
      const double old = r.motor_impulse;
      r.motor_impulse = std::clamp(old - r.k_motor * cdot, -r.motor_max, r.motor_max);
      const Vec3 l = (r.motor_impulse - old) * r.axis;
      angular(j.b, l);
      angular(j.a, -l);
    }
    if (j.kind == JointKind::Fixed) {
      const Vec3 l = -r.k_ang * (b.w - a.w);
      angular(j.b, l);
      angular(j.a, -l);
    } else if (j.kind == JointKind::Revolute) {
      const Vec3 dw = b.w - a.w;
      const Eigen::Vector2d l = -r.k_perp * Eigen::Vector2d(r.t1.dot(dw), r.t2.dot(dw));
      const Vec3 lv = l.x() * r.t1 + l.y() * r.t2;
      angular(j.b, lv);
      angular(j.a, -lv);
    }
    const Vec3 cdot = (b.v + b.w.cross(r.rb)) - (a.v + a.w.cross(r.ra));
    const Vec3 p = -r.k_point * cdot;
    impulse(j.b, r.rb, p);
    impulse(j.a, r.ra, -p);
    r.lin_impulse += p;
  }

  void correct_joint(JointRow& r) {
    const Joint& j = *r.j;
    const RigidBody& ba = w_.bodies[static_cast<std::size_t>(j.a)];
    const RigidBody& bb = w_.bodies[static_cast<std::size_t>(j.b)];
    Scratch& a = at(j.a);
    Scratch& b = at(j.b);
    if (j.kind == JointKind::Fixed) {
      Quat err = bb.q * ba.q.conjugate();
      if (err.w() < 0) err.coeffs() = -err.coeffs();
      const Vec3 e = 2.0 * err.vec();
      const Vec3 l = -r.k_ang * ((b.wp - a.wp) + kJointBeta * e / dt_);
      pseudo_angular(j.b, l);
      pseudo_angular(j.a, -l);
    } else if (j.kind == JointKind::Revolute) {
      const Vec3 e = (ba.q * j.axis_a).cross(bb.q * j.axis_b);
      const Vec3 dw = b.wp - a.wp;
      const Eigen::Vector2d c(r.t1.dot(dw) + kJointBeta * r.t1.dot(e) / dt_, r.t2.dot(dw) + kJointBeta * r.t2.dot(e) / dt_);
      const Eigen::Vector2d l = -r.k_perp * c;
      const Vec3 lv = l.x() * r.t1 + l.y() * r.t2;
      pseudo_angular(j.b, lv);
      pseudo_angular(j.a, -lv);
    }
    const Vec3 err = (bb.x + r.rb) - (ba.x + r.ra);
    const Vec3 cdot = (b.vp + b.wp.cross(r.rb)) - (a.vp + a.wp.cross(r.ra));
    const Vec3 p = -r.k_point * (cdot + kJointBeta * err / dt_);
    pseudo_impulse(j.b, r.rb, p);
    pseudo_impulse(j.a, r.ra, -p);
  }

  void check_breaks() {
    for (JointRow& r : rows_) {
      Joint& j = *r.j;
      if (r.lin_impulse.norm() / dt_ > j.break_force) {
        j.broken = true;
        w_.events.push_back({j.block, w_.time + dt_});
      }
    }
  }

  // Bodies touched by no contact, joint or spring this tick.
  std::vector<char> free_bodies() const {
    std::vector<char> free(w_.bodies.size(), 1);
    auto mark = [&](int i) {
      if (i >= 0) free[static_cast<std::size_t>(i)] = 0;
    };
    for (const Contact& c : contacts_) {
      mark(c.a);
      mark(c.b);
    }
    for (const JointRow& r : rows_) {
      mark(r.j->a);
      mark(r.j->b);
    }
    if (w_.time >= w_.scenario.power_on_time - 1e-9) {
      for (const SpringLink& sp : w_.springs) {
        mark(sp.a);
        mark(sp.b);
      }
    }
    return free;
  }

  void integrate() {
    bool finite = true;
    const std::vector<char> free = free_bodies();
    for (std::size_t i = 0; i < w_.bodies.size(); ++i) {
      RigidBody& b = w_.bodies[i];
      const Scratch& s = s_[i];
      // Ballistic bodies take the exact constant-acceleration step.
      const Vec3 v = free[i] ? Vec3(0.5 * (v0_[i] + s.v)) : s.v;
      b.v = s.v;
      b.w = s.w;
      b.x += dt_ * (v + s.vp);
      const Vec3 wt = s.w + s.wp;
      const Quat spin(0.0, wt.x(), wt.y(), wt.z());
      b.q.coeffs() += 0.5 * dt_ * (spin * b.q).coeffs();
      b.q.normalize();
      finite = finite && b.x.allFinite() && b.v.allFinite() && b.w.allFinite() && b.q.coeffs().allFinite();
    }
    if (!finite) w_.non_finite = true;
  }

  World& w_;
  double dt_;
  std::vector<Scratch> s_;
  Scratch env_;
  std::vector<Contact> contacts_;
  std::vector<JointRow> rows_;
  std::vector<Vec3> v0_;
};

}  // namespace

void step(World& world, double dt) {
  if (world.non_finite) return;
  Solver(world, dt).run();
  world.time += dt;
  ++world.tick;
}

}  // namespace mechforge
