#include "dpsbp/forward.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace dpsbp {

namespace {

Index points_on(double lo, double hi, double delta, const char* what) {
  const double span = hi - lo;
  const double steps = span / delta;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, std::abs(steps)))
    fail(ErrorCode::InvalidConfig,
         std::string(what) + ": step does not divide the interval");
  return static_cast<Index>(rounded) + 1;
}

Vector axis_coords(double lo, Index n, double delta) {
  Vector x(n);
  for (Index i = 0; i < n; ++i) x[i] = lo + delta * static_cast<double>(i);
  return x;
}

// Ht^{-1} e1 as a dense m-vector.
Vector hinv_e1(const TimeOps& tm) {
  Vector e = Vector::Zero(tm.m);
  e[0] = 1.0 / tm.h[0];
  return e;
}

// rhs += (tvec x svec)
void add_tensor(Vector& rhs, const Vector& tvec, const Vector& svec) {
  const Index n = svec.size();
  for (Index k = 0; k < tvec.size(); ++k)
    if (tvec[k] != 0.0) rhs.segment(k * n, n) += tvec[k] * svec;
}

}  // namespace

Grid make_uniform_grid(const WaveProblem& prob, int order, double delta,
                       int n_blocks, TimeFlavor fi, TimeFlavor fj) {
  if (delta <= 0.0) fail(ErrorCode::InvalidConfig, "delta must be positive");
  if (n_blocks < 1) fail(ErrorCode::InvalidConfig, "n_blocks must be >= 1");
  Grid g;
  g.dim = prob.dim;
  g.order = order;
  g.flavor_i = fi;
  g.flavor_j = fj;
  g.nx = points_on(prob.x_interval[0], prob.x_interval[1], delta, "x grid");
  g.ny = prob.dim == 2
             ? points_on(prob.y_interval[0], prob.y_interval[1], delta, "y grid")
             : 1;
  const double block_t = prob.final_time / n_blocks;
  g.m = points_on(0.0, block_t, delta, "time grid");
  g.n_blocks = n_blocks;
  g.dx = delta;
  g.dy = prob.dim == 2 ? delta : 0.0;
  g.dt = delta;
  return g;
}

SparseMatrix assemble_dxx(const SbpTriplet& sp) {
  const auto& dm = sp.d_minus.eigen();
  EigenSparse hdm = sp.h.asDiagonal() * dm;
  EigenSparse dxx = -(sp.h.cwiseInverse().asDiagonal() *
                      EigenSparse(EigenSparse(dm.transpose()) * hdm));
  return SparseMatrix::from_eigen(std::move(dxx));
}

SparseMatrix assemble_boundary_matrix(const SbpTriplet& sp, const AxisBc& bc,
                                      const Vector& c2, int axis, Index nx,
                                      Index ny) {
  if (bc.lower.alpha == 0.0 || bc.upper.alpha == 0.0)
    fail(ErrorCode::ZeroAlpha, "boundary matrix requires nonzero alpha");
  const Index n = nx * ny;
  SparseMatrix b(n, n);
  const double wl = -bc.lower.beta / bc.lower.alpha / sp.h[0];
  const double wu = bc.upper.beta / bc.upper.alpha / sp.h[sp.n - 1];
  if (axis == 0) {
    for (Index iy = 0; iy < ny; ++iy) {
      if (wl != 0.0) b.add(iy, iy, wl * c2[iy]);
      const Index up = (nx - 1) * ny + iy;
      if (wu != 0.0) b.add(up, up, wu * c2[up]);
    }
  } else {
    for (Index ix = 0; ix < nx; ++ix) {
      const Index lo = ix * ny;
      const Index up = ix * ny + (ny - 1);
      if (wl != 0.0) b.add(lo, lo, wl * c2[lo]);
      if (wu != 0.0) b.add(up, up, wu * c2[up]);
    }
  }
  b.finalize();
  return b;
}

Discretization discretize(const WaveProblem& prob, const Grid& grid,
                          const PenaltyConfig& pen) {
  prob.validate();
  pen.validate();
  Discretization d;
  d.problem = prob;
  d.grid = grid;
  d.penalty = pen;
  d.space_x = build_space_triplet(grid.order, grid.nx, grid.dx);
  if (grid.dim == 2) d.space_y = build_space_triplet(grid.order, grid.ny, grid.dy);
  d.time = build_time_ops(grid.order, grid.m, grid.dt, grid.flavor_i, grid.flavor_j);

  d.x_coords = axis_coords(prob.x_interval[0], grid.nx, grid.dx);
  d.y_coords = grid.dim == 2 ? axis_coords(prob.y_interval[0], grid.ny, grid.dy)
                             : Vector::Zero(1);

  const Index n = grid.n_space();
  d.c2.resize(n);
  d.sigma2.resize(n);
  d.h_space.resize(n);
  d.f0.resize(n);
  d.g0.resize(n);
  for (Index ix = 0; ix < grid.nx; ++ix) {
    for (Index iy = 0; iy < grid.ny; ++iy) {
      const Index id = ix * grid.ny + iy;
      const double x = d.x_coords[ix];
      const double y = d.y_coords[iy];
      const double c = prob.wave_speed(x, y);
      if (c == 0.0) fail(ErrorCode::InvalidConfig, "wave speed vanishes on the grid");
      const double s = prob.damping(x, y);
      d.c2[id] = c * c;
      d.sigma2[id] = s * s;
      d.h_space[id] =
          d.space_x.h[ix] * (grid.dim == 2 ? d.space_y.h[iy] : 1.0);
      d.f0[id] = prob.initial_displacement(x, y);
      d.g0[id] = prob.initial_velocity(x, y);
    }
  }

  SparseMatrix dxx = assemble_dxx(d.space_x);
  if (grid.dim == 1) {
    d.laplacian = SparseMatrix::from_eigen(
        EigenSparse(d.c2.asDiagonal() * dxx.eigen()));
  } else {
    SparseMatrix dyy = assemble_dxx(d.space_y);
    SparseMatrix lx = kron(dxx, SparseMatrix::identity(grid.ny));
    SparseMatrix ly = kron(SparseMatrix::identity(grid.nx), dyy);
    d.laplacian = SparseMatrix::from_eigen(
        EigenSparse(d.c2.asDiagonal() * EigenSparse(lx.eigen() + ly.eigen())));
  }

  SparseMatrix k = assemble_boundary_matrix(d.space_x, prob.bc_x, d.c2, 0,
                                            grid.nx, grid.ny);
  EigenSparse ke = k.eigen();
  if (grid.dim == 2) {
    SparseMatrix ky = assemble_boundary_matrix(d.space_y, prob.bc_y, d.c2, 1,
                                               grid.nx, grid.ny);
    ke += ky.eigen();
  }
  ke += EigenSparse(d.sigma2.asDiagonal());
  d.damping_boundary = SparseMatrix::from_eigen(std::move(ke));

  for (Index ix = 0; ix < grid.nx; ++ix)
    for (Index iy = 0; iy < grid.ny; ++iy)
      if (ix == 0 || ix == grid.nx - 1 ||
          (grid.dim == 2 && (iy == 0 || iy == grid.ny - 1)))
        d.boundary_nodes.push_back(ix * grid.ny + iy);
  return d;
}

const Factorization& DiscreteSystem::factorization(SolveOptions opts) const {
  if (!factor) factor.emplace(matrix, opts);
  return *factor;
}

DiscreteSystem assemble_forward(const Discretization& d) {
  const auto& tm = d.time;
  const SparseMatrix ix = SparseMatrix::identity(d.grid.n_space());
  const SparseMatrix it = SparseMatrix::identity(tm.m);
  EigenSparse a;
  if (d.penalty.is_unit_mu()) {
    SparseMatrix di = penalized_time_op(tm, tm.flavor_i);
    SparseMatrix dj = penalized_time_op(tm, tm.flavor_j);
    SparseMatrix dij = SparseMatrix::from_eigen(EigenSparse(di.eigen() * dj.eigen()));
    a = kron(dij, ix).eigen() + kron(dj, d.damping_boundary).eigen() -
        kron(it, d.laplacian).eigen();
  } else {
    // four-term SAT form, U-dependent penalty terms moved to the left side
    const SparseMatrix& di = tm.op(tm.flavor_i);
    const SparseMatrix& dj = tm.op(tm.flavor_j);
    SparseMatrix dij = SparseMatrix::from_eigen(EigenSparse(di.eigen() * dj.eigen()));
    SparseMatrix p(tm.m, tm.m);
    p.add(0, 0, 1.0 / tm.h[0]);
    p.finalize();
    SparseMatrix dip = SparseMatrix::from_eigen(EigenSparse(di.eigen() * p.eigen()));
    SparseMatrix pdj = SparseMatrix::from_eigen(EigenSparse(p.eigen() * dj.eigen()));
    const auto& pc = d.penalty;
    a = kron(dij, ix).eigen() + kron(dj, d.damping_boundary).eigen() -
        kron(it, d.laplacian).eigen() -
        pc.mu1 * kron(p, d.damping_boundary).eigen() -
        pc.mu2 * kron(dip, ix).eigen() - pc.mu3 * kron(pdj, ix).eigen() -
        (pc.mu4 / tm.h[0]) * kron(p, ix).eigen();
  }
  DiscreteSystem sys;
  sys.matrix = SparseMatrix::from_eigen(std::move(a));
  sys.grid = d.grid;
  sys.penalty = d.penalty;
  return sys;
}

Vector sample_source(const Discretization& d, int block) {
  const Grid& g = d.grid;
  const Index n = g.n_space();
  Vector out = Vector::Zero(g.n_spacetime());
  const double t0 = g.block_duration() * block;
  const bool has_src = static_cast<bool>(d.problem.source);
  for (Index k = 0; k < g.m; ++k) {
    const double t = t0 + g.dt * static_cast<double>(k);
    auto seg = out.segment(k * n, n);
    if (has_src) {
      for (Index ixn = 0; ixn < g.nx; ++ixn)
        for (Index iy = 0; iy < g.ny; ++iy)
          seg[ixn * g.ny + iy] =
              d.problem.source(d.x_coords[ixn], d.y_coords[iy], t);
    }
    // boundary-data forcing folded into the source
    const auto& bcx = d.problem.bc_x;
    if (bcx.lower.data)
      for (Index iy = 0; iy < g.ny; ++iy)
        seg[iy] += d.c2[iy] / (d.space_x.h[0] * bcx.lower.alpha) *
                   bcx.lower.data(d.y_coords[iy], t);
    if (bcx.upper.data)
      for (Index iy = 0; iy < g.ny; ++iy) {
        const Index id = (g.nx - 1) * g.ny + iy;
        seg[id] -= d.c2[id] / (d.space_x.h[g.nx - 1] * bcx.upper.alpha) *
                   bcx.upper.data(d.y_coords[iy], t);
      }
    if (g.dim == 2) {
      const auto& bcy = d.problem.bc_y;
      if (bcy.lower.data)
        for (Index ixn = 0; ixn < g.nx; ++ixn) {
          const Index id = ixn * g.ny;
          seg[id] += d.c2[id] / (d.space_y.h[0] * bcy.lower.alpha) *
                     bcy.lower.data(d.x_coords[ixn], t);
        }
      if (bcy.upper.data)
        for (Index ixn = 0; ixn < g.nx; ++ixn) {
          const Index id = ixn * g.ny + (g.ny - 1);
          seg[id] -= d.c2[id] / (d.space_y.h[g.ny - 1] * bcy.upper.alpha) *
                     bcy.upper.data(d.x_coords[ixn], t);
        }
    }
  }
  return out;
}

Vector initial_sat(const Discretization& d, const Vector& f, const Vector& g) {
  const auto& tm = d.time;
  const Index n = d.grid.n_space();
  if (f.size() != n || g.size() != n)
    fail(ErrorCode::DimensionMismatch, "initial_sat: data size mismatch");
  const auto& pc = d.penalty;
  const Vector e = hinv_e1(tm);
  const Vector die = tm.op(tm.flavor_i).apply(e);
  Vector rhs = Vector::Zero(d.grid.n_spacetime());
  // -mu1 (P x K) F - mu2 (Di P x I) F - mu3 (P x I) G - mu4/Ht11 (P x I) F
  add_tensor(rhs, e, -pc.mu1 * d.damping_boundary.apply(f));
  add_tensor(rhs, die, -pc.mu2 * f);
  add_tensor(rhs, e, -pc.mu3 * g);
  add_tensor(rhs, e, (-pc.mu4 / tm.h[0]) * f);
  return rhs;
}

Vector displacement_trace(const Discretization& d, const Vector& u_block) {
  const Index n = d.grid.n_space();
  return u_block.segment((d.grid.m - 1) * n, n);
}

Vector velocity_trace(const Discretization& d, const Vector& u_block) {
  const auto& tm = d.time;
  const Index n = d.grid.n_space();
  SparseMatrix dj = penalized_time_op(tm, tm.flavor_j);
  const auto& dje = dj.eigen();
  Vector out = Vector::Zero(n);
  // row m-1 of Dj~ contracted against the time blocks
  for (int c = 0; c < dje.outerSize(); ++c)
    for (EigenSparse::InnerIterator it(dje, c); it; ++it)
      if (it.row() == tm.m - 1)
        out += it.value() * u_block.segment(it.col() * n, n);
  return out;
}

SolutionField march_multiblock(const Discretization& d, const DiscreteSystem& sys,
                               SolveOptions opts) {
  return march_multiblock(d, sys, d.f0, d.g0, opts);
}

SolutionField march_multiblock(const Discretization& d, const DiscreteSystem& sys,
                               const Vector& f0, const Vector& g0,
                               SolveOptions opts) {
  if (d.grid.n_blocks > 1 && !d.penalty.is_unit_mu())
    fail(ErrorCode::UnsupportedPenalty,
         "multiblock marching requires mu1 = mu3 = -1");
  SolutionField out;
  out.grid = d.grid;
  const auto& fac = sys.factorization(opts);
  Vector f = f0, g = g0;
  for (int b = 0; b < d.grid.n_blocks; ++b) {
    Vector rhs = sample_source(d, b) + initial_sat(d, f, g);
    SolutionBlock blk;
    blk.u = fac.solve(rhs);
    blk.f = f;
    blk.g = g;
    blk.t0 = d.grid.block_duration() * b;
    if (b + 1 < d.grid.n_blocks) {
      f = displacement_trace(d, blk.u);
      g = velocity_trace(d, blk.u);
    }
    out.blocks.push_back(std::move(blk));
  }
  return out;
}

SolutionField solve_forward(const Discretization& d, SolveOptions opts) {
  DiscreteSystem sys = assemble_forward(d);
  return march_multiblock(d, sys, opts);
}

Vector SolutionField::slice(int b, Index k) const {
  const Index n = grid.n_space();
  return blocks.at(b).u.segment(k * n, n);
}

Vector SolutionField::final_slice() const {
  return slice(static_cast<int>(blocks.size()) - 1, grid.m - 1);
}

}  // namespace dpsbp
