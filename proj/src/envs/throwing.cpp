#include "ibsher/envs/throwing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ibsher::envs {

void ThrowPhysics::validate() const {
  if (!(gravity >= 0.0)) throw ConfigError("gravity must be >= 0");
  if (!(max_hand_speed > 0.0)) throw ConfigError("max_hand_speed must be positive");
  if (!(grasp_radius > 0.0)) throw ConfigError("grasp_radius must be positive");
  if (!(ball_radius >= 0.0 && ball_radius < 0.5)) throw ConfigError("ball_radius must lie in [0, 0.5)");
  if (!(success_epsilon > 0.0)) throw ConfigError("success_epsilon must be positive");
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  hand_workspace.validate();
  target_region.validate();
  if (hand_workspace.dim() != 2 || target_region.dim() != 2) throw ConfigError("regions must be 2D");
  for (std::size_t i = 0; i < 2; ++i) {
    if (hand_workspace.lo[i] < 0.0 || hand_workspace.hi[i] > 1.0 || target_region.lo[i] < 0.0 ||
        target_region.hi[i] > 1.0) {
      throw ConfigError("regions must lie inside the unit screen");
    }
  }
  if (wall && !(wall_height > 0.0)) throw ConfigError("wall_height must be positive");
}

namespace {

double clamp01(double v, double margin) { return std::clamp(v, margin, 1.0 - margin); }

Vec2 clamp_to(const goals::Box& box, const Vec2& p) {
  return {std::clamp(p[0], box.lo[0], box.hi[0]), std::clamp(p[1], box.lo[1], box.hi[1])};
}

bool inside(const goals::Box& box, const Vec2& p) {
  return p[0] >= box.lo[0] && p[0] <= box.hi[0] && p[1] >= box.lo[1] && p[1] <= box.hi[1];
}

// Gripper transitions shared by the hand and the arm. `carrier` is the hand or end-effector.
void update_grasp(const ThrowPhysics& phys, Gripper before, Gripper after, const Vec2& carrier_pos,
                  const Vec2& carrier_vel, Vec2& ball_pos, Vec2& ball_vel, bool& held) {
  if (held) {
    if (after == Gripper::open) {
      held = false;
      ball_pos = carrier_pos;
      ball_vel = carrier_vel;
      return;
    }
    ball_pos = carrier_pos;
    ball_vel = carrier_vel;
    return;
  }
  const double dx = ball_pos[0] - carrier_pos[0];
  const double dy = ball_pos[1] - carrier_pos[1];
  if (before == Gripper::open && after == Gripper::closed &&
      dx * dx + dy * dy < phys.grasp_radius * phys.grasp_radius) {
    held = true;
    ball_pos = carrier_pos;
    ball_vel = carrier_vel;
    return;
  }
  advance_free_ball(phys, ball_pos, ball_vel);
}

Vec2 sample_in(const goals::Box& box, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = box.lo[0] + u(rng) * (box.hi[0] - box.lo[0]);
  const double y = box.lo[1] + u(rng) * (box.hi[1] - box.lo[1]);
  return {x, y};
}

}  // namespace

bool crosses_wall(const ThrowPhysics& phys, const Vec2& a, const Vec2& b) {
  if (!phys.wall) return false;
  const double da = a[0] - phys.wall_x;
  const double db = b[0] - phys.wall_x;
  if (da == 0.0 && db == 0.0) return std::min(a[1], b[1]) <= phys.wall_height;
  if ((da < 0.0 && db < 0.0) || (da > 0.0 && db > 0.0)) return false;
  const double t = da / (da - db);
  const double y = a[1] + t * (b[1] - a[1]);
  return y <= phys.wall_height;
}

void advance_free_ball(const ThrowPhysics& phys, Vec2& pos, Vec2& vel) {
  const Vec2 start = pos;
  Vec2 next{pos[0] + vel[0], pos[1] + vel[1]};
  vel[1] -= phys.gravity;

  if (phys.wall && start[0] != phys.wall_x && crosses_wall(phys, start, next)) {
    // Stop at the face on the incoming side and drop from there.
    const double t = (phys.wall_x - start[0]) / (next[0] - start[0]);
    const double y = start[1] + t * (next[1] - start[1]);
    const double side = start[0] < phys.wall_x ? -1.0 : 1.0;
    next = {phys.wall_x + side * phys.ball_radius, y};
    if (side < 0.0 ? next[0] < start[0] : next[0] > start[0]) next[0] = start[0];  // never pull the ball back
    vel = {0.0, 0.0};
  }

  const double r = phys.ball_radius;
  if (next[0] < r || next[0] > 1.0 - r) {
    next[0] = clamp01(next[0], r);
    vel[0] = 0.0;
  }
  if (next[1] > 1.0 - r) {
    next[1] = 1.0 - r;
    vel[1] = 0.0;
  }
  if (next[1] <= r) {
    next[1] = r;
    vel = {0.0, 0.0};
  }
  pos = next;
}

double throw_reward(const ThrowPhysics& phys, std::span<const double> achieved,
                    std::span<const double> desired) {
  if (achieved.size() != 2 || desired.size() != 2) throw ShapeError("throwing goals are 2D");
  return squared_distance(achieved, desired) < phys.success_epsilon * phys.success_epsilon ? 0.0 : -1.0;
}

// ---------------------------------------------------------------------------------------------
// Hand

HandEnv::HandEnv(ThrowPhysics phys) : phys_(std::move(phys)), low_(3, -1.0), high_(3, 1.0) {
  phys_.validate();
}

ResetResult HandEnv::reset(Rng& rng) const {
  ThrowState s;
  s.hand_pos = sample_in(phys_.hand_workspace, rng);
  std::bernoulli_distribution in_hand(0.5);
  if (in_hand(rng)) {
    s.gripper = Gripper::closed;
    s.held = true;
    s.ball_pos = s.hand_pos;
  } else {
    s.gripper = Gripper::open;
    std::uniform_real_distribution<double> u(phys_.hand_workspace.lo[0], phys_.hand_workspace.hi[0]);
    s.ball_pos = {u(rng), phys_.ball_radius};
  }
  const Vec2 g = sample_in(phys_.target_region, rng);
  return {s, Vec{g[0], g[1]}};
}

StepResult HandEnv::step(const EnvState& state, std::span<const double> goal,
                         std::span<const double> action) const {
  ThrowState s = std::get<ThrowState>(state);
  const Vec a = clamp_action(action);
  s.hand_vel = {a[0] * phys_.max_hand_speed, a[1] * phys_.max_hand_speed};
  s.hand_pos = clamp_to(phys_.hand_workspace, {s.hand_pos[0] + s.hand_vel[0], s.hand_pos[1] + s.hand_vel[1]});
  const Gripper before = s.gripper;
  s.gripper = a[2] > 0.0 ? Gripper::open : Gripper::closed;
  update_grasp(phys_, before, s.gripper, s.hand_pos, s.hand_vel, s.ball_pos, s.ball_vel, s.held);
  ++s.steps;
  const double r = reward(achieved_goal(s), goal);
  const bool done = s.steps >= phys_.horizon;
  return {s, r, done};
}

Vec HandEnv::observe(const EnvState& state) const {
  const auto& s = std::get<ThrowState>(state);
  const double v = phys_.max_hand_speed;
  return {s.hand_pos[0],      s.hand_pos[1],      s.hand_vel[0] / v,  s.hand_vel[1] / v,
          s.gripper == Gripper::closed ? 1.0 : 0.0,
          s.ball_pos[0],      s.ball_pos[1],      s.ball_vel[0] / v,  s.ball_vel[1] / v};
}

Vec HandEnv::achieved_goal(const EnvState& state) const {
  const auto& s = std::get<ThrowState>(state);
  return {s.ball_pos[0], s.ball_pos[1]};
}

// ---------------------------------------------------------------------------------------------
// Robot

void ArmGeometry::validate() const {
  if (!(link1 > 0.0 && link2 > 0.0)) throw ConfigError("arm links must have positive length");
  if (!(max_joint_speed > 0.0)) throw ConfigError("max_joint_speed must be positive");
}

Vec2 ArmGeometry::forward_kinematics(const Vec2& theta) const {
  const double t12 = theta[0] + theta[1];
  return {base[0] + link1 * std::cos(theta[0]) + link2 * std::cos(t12),
          base[1] + link1 * std::sin(theta[0]) + link2 * std::sin(t12)};
}

Vec2 ArmGeometry::ee_velocity(const Vec2& theta, const Vec2& theta_dot) const {
  const double t12 = theta[0] + theta[1];
  const double s1 = std::sin(theta[0]), c1 = std::cos(theta[0]);
  const double s12 = std::sin(t12), c12 = std::cos(t12);
  const double w12 = theta_dot[0] + theta_dot[1];
  return {-link1 * s1 * theta_dot[0] - link2 * s12 * w12, link1 * c1 * theta_dot[0] + link2 * c12 * w12};
}

RobotEnv::RobotEnv(ThrowPhysics phys, ArmGeometry arm)
    : phys_(std::move(phys)), arm_(arm), low_(3, -1.0), high_(3, 1.0) {
  phys_.validate();
  arm_.validate();
}

ResetResult RobotEnv::reset(Rng& rng) const {
  RobotState s;
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  for (int attempt = 0;; ++attempt) {
    if (attempt > 100000) throw ConfigError("arm cannot reach the hand workspace");
    s.theta = {angle(rng), angle(rng)};
    s.ee_pos = arm_.forward_kinematics(s.theta);
    if (inside(phys_.hand_workspace, s.ee_pos)) break;
  }
  std::bernoulli_distribution in_hand(0.5);
  if (in_hand(rng)) {
    s.gripper = Gripper::closed;
    s.held = true;
    s.ball_pos = s.ee_pos;
  } else {
    s.gripper = Gripper::open;
    std::uniform_real_distribution<double> u(phys_.hand_workspace.lo[0], phys_.hand_workspace.hi[0]);
    s.ball_pos = {u(rng), phys_.ball_radius};
  }
  const Vec2 g = sample_in(phys_.target_region, rng);
  return {s, Vec{g[0], g[1]}};
}

StepResult RobotEnv::step(const EnvState& state, std::span<const double> goal,
                          std::span<const double> action) const {
  RobotState s = std::get<RobotState>(state);
  const Vec a = clamp_action(action);
  Vec2 theta_dot{a[0] * arm_.max_joint_speed, a[1] * arm_.max_joint_speed};
  const Vec2 theta{s.theta[0] + theta_dot[0], s.theta[1] + theta_dot[1]};
  const Vec2 ee = arm_.forward_kinematics(theta);
  if (inside(phys_.hand_workspace, ee)) {
    s.theta = theta;
    s.theta_dot = theta_dot;
  } else {
    s.theta_dot = {0.0, 0.0};
  }
  s.ee_pos = arm_.forward_kinematics(s.theta);
  s.ee_vel = arm_.ee_velocity(s.theta, s.theta_dot);
  const Gripper before = s.gripper;
  s.gripper = a[2] > 0.0 ? Gripper::open : Gripper::closed;
  update_grasp(phys_, before, s.gripper, s.ee_pos, s.ee_vel, s.ball_pos, s.ball_vel, s.held);
  ++s.steps;
  const double r = reward(achieved_goal(s), goal);
  const bool done = s.steps >= phys_.horizon;
  return {s, r, done};
}

Vec RobotEnv::observe(const EnvState& state) const {
  const auto& s = std::get<RobotState>(state);
  const double v = phys_.max_hand_speed;
  const double w = arm_.max_joint_speed;
  return {std::cos(s.theta[0]),   std::sin(s.theta[0]),   std::cos(s.theta[1]),
          std::sin(s.theta[1]),   s.ee_pos[0],            s.ee_pos[1],
          s.theta_dot[0] / w,     s.theta_dot[1] / w,     s.ee_vel[0] / v,
          s.ee_vel[1] / v,        s.gripper == Gripper::closed ? 1.0 : 0.0,
          s.ball_pos[0],          s.ball_pos[1],          s.ball_vel[0] / v,
          s.ball_vel[1] / v};
}

Vec RobotEnv::achieved_goal(const EnvState& state) const {
  const auto& s = std::get<RobotState>(state);
  return {s.ball_pos[0], s.ball_pos[1]};
}

}  // namespace ibsher::envs
