#pragma once

#include <array>
#include <cmath>
#include <functional>

#include "dpsbp/errors.hpp"

namespace dpsbp {

/// Scalar field sampled on the spatial grid; 1D problems ignore y.
using SpaceFn = std::function<double(double x, double y)>;
/// Space-time field.
using SpaceTimeFn = std::function<double(double x, double y, double t)>;
/// Boundary data on one face as a function of the tangential coordinate and t.
using FaceFn = std::function<double(double s, double t)>;

struct FaceSpec {
  double alpha = 1.0;
  double beta = 0.0;
  FaceFn data;  // empty = homogeneous
};

/// Axis faces: lower = x_L (or y_L), upper = x_R (or y_R).
struct AxisBc {
  FaceSpec lower;
  FaceSpec upper;
};

struct WaveProblem {
  int dim = 1;
  std::array<double, 2> x_interval{-1.0, 1.0};
  std::array<double, 2> y_interval{-1.0, 1.0};
  double final_time = 2.0;
  SpaceFn wave_speed = [](double, double) { return 1.0; };
  SpaceFn damping = [](double, double) { return 0.0; };
  SpaceFn initial_displacement = [](double, double) { return 0.0; };
  SpaceFn initial_velocity = [](double, double) { return 0.0; };
  SpaceTimeFn source;  // empty = zero
  AxisBc bc_x;
  AxisBc bc_y;

  /// Throws on violated boundary-parameter conditions.
  void validate() const;
};

/// SAT penalty parameters. tau_* are the boundary penalties, mu_* the initial
/// penalties; defaults are the stable adjoint-consistent choice.
struct PenaltyConfig {
  double tau_l = 1.0;
  double tau_r = -1.0;
  double mu1 = -1.0;
  double mu2 = -1.0;
  double mu3 = -1.0;
  double mu4 = -1.0;  // = -mu1*mu3

  static PenaltyConfig defaults() { return {}; }
  static PenaltyConfig with_mu(double mu1, double mu3) {
    return {1.0, -1.0, mu1, mu1, mu3, -mu1 * mu3};
  }
  bool is_unit_mu() const {
    return mu1 == -1.0 && mu2 == -1.0 && mu3 == -1.0 && mu4 == -1.0;
  }
  /// Throws InadmissiblePenalty on any violated condition.
  void validate() const;
};

inline void PenaltyConfig::validate() const {
  if (tau_l != 1.0 || tau_r != -1.0)
    fail(ErrorCode::InadmissiblePenalty,
         "boundary penalties must be tau_l = 1, tau_r = -1");
  if (!(mu1 < -0.5)) fail(ErrorCode::InadmissiblePenalty, "mu1 must be < -1/2");
  if (!(mu3 < -0.5)) fail(ErrorCode::InadmissiblePenalty, "mu3 must be < -1/2");
  if (mu2 != mu1) fail(ErrorCode::InadmissiblePenalty, "mu2 must equal mu1");
  if (mu4 != -mu1 * mu3)
    fail(ErrorCode::InadmissiblePenalty, "mu4 must equal -mu1*mu3");
}

inline void check_face(const FaceSpec& f, bool lower, const char* name) {
  if (f.alpha * f.alpha + f.beta * f.beta == 0.0)
    fail(ErrorCode::InvalidConfig,
         std::string(name) + ": alpha^2 + beta^2 must be nonzero");
  if (f.alpha == 0.0)
    fail(ErrorCode::ZeroAlpha,
         std::string(name) + ": alpha = 0 (Dirichlet) is not supported");
  const double prod = f.alpha * f.beta;
  if (lower && prod > 0.0)
    fail(ErrorCode::InvalidConfig,
         std::string(name) + ": alpha*beta must be <= 0 on the lower face");
  if (!lower && prod < 0.0)
    fail(ErrorCode::InvalidConfig,
         std::string(name) + ": alpha*beta must be >= 0 on the upper face");
}

inline void WaveProblem::validate() const {
  if (dim != 1 && dim != 2) fail(ErrorCode::InvalidConfig, "dim must be 1 or 2");
  if (!(final_time > 0.0)) fail(ErrorCode::InvalidConfig, "final_time must be positive");
  if (!(x_interval[1] > x_interval[0]))
    fail(ErrorCode::InvalidConfig, "empty x interval");
  if (dim == 2 && !(y_interval[1] > y_interval[0]))
    fail(ErrorCode::InvalidConfig, "empty y interval");
  check_face(bc_x.lower, true, "x lower face");
  check_face(bc_x.upper, false, "x upper face");
  if (dim == 2) {
    check_face(bc_y.lower, true, "y lower face");
    check_face(bc_y.upper, false, "y upper face");
  }
}

}  // namespace dpsbp
