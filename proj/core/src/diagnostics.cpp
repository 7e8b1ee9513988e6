#include "dpsbp/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace dpsbp {

Vector auxiliary_field(const Vector& u_block, const Vector& f, const TimeOps& tm,
                       double mu1, Index n_space) {
  if (u_block.size() != tm.m * n_space || f.size() != n_space)
    fail(ErrorCode::DimensionMismatch, "auxiliary_field: size mismatch");
  const auto& dj = tm.op(tm.flavor_j).eigen();
  Vector v = Vector::Zero(u_block.size());
  for (int c = 0; c < dj.outerSize(); ++c)
    for (EigenSparse::InnerIterator it(dj, c); it; ++it)
      v.segment(it.row() * n_space, n_space) +=
          it.value() * u_block.segment(it.col() * n_space, n_space);
  // - mu1 Ht^{-1} e1 e1^T (U - F): hits the first time row only
  v.segment(0, n_space) -=
      (mu1 / tm.h[0]) * (u_block.segment(0, n_space) - f);
  return v;
}

namespace {

// ||c^{-1} w||_H^2 over space
double cinv_norm_sq(const Discretization& d, const Vector& w) {
  return (w.array().square() * d.h_space.array() / d.c2.array()).sum();
}

// || (Dx- x I) w ||_H^2  [+ || (I x Dy-) w ||_H^2 in 2D]
double gradient_norm_sq(const Discretization& d, const Vector& w) {
  const Grid& g = d.grid;
  double total = 0.0;
  if (g.dim == 1) {
    Vector dw = d.space_x.d_minus.apply(w);
    total += (dw.array().square() * d.h_space.array()).sum();
  } else {
    // x-derivative: apply Dx- across the x index for each y
    const auto& dx = d.space_x.d_minus.eigen();
    Vector dxw = Vector::Zero(w.size());
    for (int c = 0; c < dx.outerSize(); ++c)
      for (EigenSparse::InnerIterator it(dx, c); it; ++it)
        dxw.segment(it.row() * g.ny, g.ny) +=
            it.value() * w.segment(it.col() * g.ny, g.ny);
    total += (dxw.array().square() * d.h_space.array()).sum();
    const auto& dy = d.space_y.d_minus.eigen();
    Vector dyw(w.size());
    for (Index ix = 0; ix < g.nx; ++ix)
      dyw.segment(ix * g.ny, g.ny) = dy * w.segment(ix * g.ny, g.ny);
    total += (dyw.array().square() * d.h_space.array()).sum();
  }
  return total;
}

// BT_hk = betaR/alphaR V_N^2 - betaL/alphaL V_1^2, integrated over each face
// with the transverse quadrature in 2D.
double boundary_term(const Discretization& d, const Vector& v_slice) {
  const Grid& g = d.grid;
  const auto& bx = d.problem.bc_x;
  double bt = 0.0;
  if (g.dim == 1) {
    bt += bx.upper.beta / bx.upper.alpha * v_slice[g.nx - 1] * v_slice[g.nx - 1];
    bt -= bx.lower.beta / bx.lower.alpha * v_slice[0] * v_slice[0];
  } else {
    for (Index iy = 0; iy < g.ny; ++iy) {
      const double hy = d.space_y.h[iy];
      const double vu = v_slice[(g.nx - 1) * g.ny + iy];
      const double vl = v_slice[iy];
      bt += hy * (bx.upper.beta / bx.upper.alpha * vu * vu -
                  bx.lower.beta / bx.lower.alpha * vl * vl);
    }
    const auto& by = d.problem.bc_y;
    for (Index ix = 0; ix < g.nx; ++ix) {
      const double hx = d.space_x.h[ix];
      const double vu = v_slice[ix * g.ny + (g.ny - 1)];
      const double vl = v_slice[ix * g.ny];
      bt += hx * (by.upper.beta / by.upper.alpha * vu * vu -
                  by.lower.beta / by.lower.alpha * vl * vl);
    }
  }
  return bt;
}

}  // namespace

EnergyTrace energy_trace(const SolutionField& u, const Discretization& d) {
  const Grid& g = d.grid;
  const Index n = g.n_space();
  EnergyTrace tr;
  const auto& pc = d.penalty;
  tr.stability_constant =
      std::max(-pc.mu1 * pc.mu1 / (2.0 * pc.mu1 + 1.0),
               -pc.mu3 * pc.mu3 / (2.0 * pc.mu3 + 1.0));
  tr.initial_energy =
      0.5 * (cinv_norm_sq(d, d.g0) + gradient_norm_sq(d, d.f0));
  tr.energy.push_back(tr.initial_energy);
  for (const auto& blk : u.blocks) {
    Vector v = auxiliary_field(blk.u, blk.f, d.time, pc.mu1, n);
    for (Index k = 0; k < g.m; ++k) {
      Vector vk = v.segment(k * n, n);
      Vector uk = blk.u.segment(k * n, n);
      tr.energy.push_back(0.5 * (cinv_norm_sq(d, vk) + gradient_norm_sq(d, uk)));
      tr.boundary.push_back(boundary_term(d, vk));
      tr.damping.push_back(
          (vk.array().square() * d.sigma2.array() * d.h_space.array() /
           d.c2.array())
              .sum());
      tr.hk.push_back(d.time.h[k] / g.dt);
    }
  }
  return tr;
}

double EnergyTrace::inequality_slack(double dt) const {
  double weighted = 0.0;
  for (std::size_t k = 0; k < boundary.size(); ++k)
    weighted += hk[k] * (damping[k] + boundary[k]) * dt;
  return final_energy() + weighted - stability_constant * initial_energy;
}

double ExactSolution::phi(double t) const {
  const double s2 = sigma * sigma;
  const double tol = sigma > 0.0 ? 1e-10 * s2 * s2 : 1e-12;
  if (omega > tol) {
    const double r = std::sqrt(omega);
    return std::cos(0.5 * t * r) + s2 / r * std::sin(0.5 * t * r);
  }
  if (omega < -tol) {
    const double r = std::sqrt(-omega);
    return std::cosh(0.5 * t * r) + s2 / r * std::sinh(0.5 * t * r);
  }
  return 1.0 + 0.5 * s2 * t;
}

double ExactSolution::operator()(double x, double y, double t) const {
  const double envelope = std::exp(-0.5 * sigma * sigma * t) * phi(t);
  double u = envelope * std::cos(M_PI * x);
  if (dim == 2) u *= std::cos(M_PI * y);
  return u;
}

ExactSolution exact_solution(int dim, double c, double sigma) {
  if (c <= 0.0 || sigma < 0.0)
    fail(ErrorCode::InvalidConfig, "exact_solution: need c > 0 and sigma >= 0");
  ExactSolution ex;
  ex.dim = dim;
  ex.c = c;
  ex.sigma = sigma;
  const double s4 = sigma * sigma * sigma * sigma;
  ex.omega = (dim == 1 ? 4.0 : 8.0) * c * c * M_PI * M_PI - s4;
  return ex;
}

double l2_error(const SolutionField& u, const ExactSolution& ex,
                const Discretization& d) {
  const Grid& g = d.grid;
  Vector uh = u.final_slice();
  const double t_final = d.problem.final_time;
  Vector diff(uh.size());
  for (Index ix = 0; ix < g.nx; ++ix)
    for (Index iy = 0; iy < g.ny; ++iy)
      diff[ix * g.ny + iy] =
          uh[ix * g.ny + iy] - ex(d.x_coords[ix], d.y_coords[iy], t_final);
  return weighted_norm(d.h_space, diff);
}

double convergence_rate(const std::vector<std::pair<double, double>>& errors) {
  if (errors.size() < 2)
    fail(ErrorCode::DegenerateInput, "convergence_rate: need at least two points");
  for (const auto& [delta, err] : errors)
    if (!(delta > 0.0) || !(err > 0.0))
      fail(ErrorCode::DegenerateInput, "convergence_rate: nonpositive input");
  const auto n = static_cast<double>(errors.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [delta, err] : errors) {
    const double lx = std::log(delta), ly = std::log(err);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) fail(ErrorCode::DegenerateInput, "convergence_rate: degenerate deltas");
  return (n * sxy - sx * sy) / denom;
}

}  // namespace dpsbp
