#include "dpsbp/inverse.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <tuple>

namespace dpsbp {

namespace {

/// Per observed node: face quadrature weight and whether its time sum is
/// Ht-weighted (right/upper faces and everything in Symmetric form) or plain.
struct ObsWeights {
  std::vector<double> face_w;
  std::vector<bool> time_weighted;
};

ObsWeights obs_weights(const Discretization& d, const Observations& obs,
                       ObjectiveForm form) {
  const Grid& g = d.grid;
  ObsWeights w;
  w.face_w.resize(obs.nodes.size(), 0.0);
  w.time_weighted.resize(obs.nodes.size(), true);
  for (std::size_t i = 0; i < obs.nodes.size(); ++i) {
    const Index s = obs.nodes[i];
    const Index ix = s / g.ny, iy = s % g.ny;
    if (g.dim == 1) {
      w.face_w[i] = 1.0;
      if (form == ObjectiveForm::Printed && ix == 0) w.time_weighted[i] = false;
    } else {
      double fw = 0.0;
      if (ix == 0 || ix == g.nx - 1) fw += d.space_y.h[iy];
      if (iy == 0 || iy == g.ny - 1) fw += d.space_x.h[ix];
      w.face_w[i] = fw;
    }
  }
  return w;
}

Vector sqrt_h(const Discretization& d) { return d.h_space.cwiseSqrt(); }

}  // namespace

Observations extract_observations(const Discretization& d, const SolutionField& u) {
  const Grid& g = d.grid;
  Observations obs;
  obs.nodes = d.boundary_nodes;
  obs.n_blocks = g.n_blocks;
  obs.m = g.m;
  for (const auto& blk : u.blocks) {
    Eigen::MatrixXd tr(g.m, obs.nodes.size());
    for (Index k = 0; k < g.m; ++k)
      for (std::size_t i = 0; i < obs.nodes.size(); ++i)
        tr(k, i) = blk.u[k * g.n_space() + obs.nodes[i]];
    obs.traces.push_back(std::move(tr));
  }
  return obs;
}

void write_observations_csv(const std::string& path, const Observations& obs,
                            const Discretization& d) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path);
  out << "t,node_id,value\n";
  char buf[64];
  for (int b = 0; b < obs.n_blocks; ++b) {
    const double t0 = d.grid.block_duration() * b;
    for (Index k = 0; k < obs.m; ++k) {
      const double t = t0 + d.grid.dt * static_cast<double>(k);
      for (std::size_t i = 0; i < obs.nodes.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%lld,%.17g", t,
                      static_cast<long long>(obs.nodes[i]), obs.traces[b](k, i));
        out << buf << '\n';
      }
    }
  }
}

Observations read_observations_csv(const std::string& path,
                                   const Discretization& d) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != "t,node_id,value")
    fail(ErrorCode::ParseError, path + ": expected header t,node_id,value");
  Observations obs;
  obs.nodes = d.boundary_nodes;
  obs.n_blocks = d.grid.n_blocks;
  obs.m = d.grid.m;
  obs.traces.assign(obs.n_blocks,
                    Eigen::MatrixXd::Zero(obs.m, obs.nodes.size()));
  const std::size_t per_slice = obs.nodes.size();
  std::size_t row = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    double t, value;
    long long node;
    char c1, c2;
    if (!(ss >> t >> c1 >> node >> c2 >> value) || c1 != ',' || c2 != ',')
      fail(ErrorCode::ParseError,
           path + ":" + std::to_string(lineno) + ": malformed row");
    const std::size_t slice = row / per_slice;
    const std::size_t i = row % per_slice;
    const int b = static_cast<int>(slice / obs.m);
    const Index k = static_cast<Index>(slice % obs.m);
    if (b >= obs.n_blocks)
      fail(ErrorCode::ParseError, path + ": more rows than grid slots");
    if (node != static_cast<long long>(obs.nodes[i]))
      fail(ErrorCode::ParseError,
           path + ":" + std::to_string(lineno) + ": unexpected node id");
    obs.traces[b](k, i) = value;
    ++row;
  }
  if (row != static_cast<std::size_t>(obs.n_blocks) * obs.m * per_slice)
    fail(ErrorCode::ParseError, path + ": row count does not match the grid");
  return obs;
}

double objective(const SolutionField& u, const Observations& obs,
                 const Discretization& d, ObjectiveForm form) {
  const Grid& g = d.grid;
  if (static_cast<int>(u.blocks.size()) != obs.n_blocks || g.m != obs.m)
    fail(ErrorCode::DimensionMismatch, "objective: observation grid mismatch");
  const ObsWeights w = obs_weights(d, obs, form);
  double j = 0.0;
  for (int b = 0; b < obs.n_blocks; ++b) {
    for (Index k = 0; k < g.m; ++k)
      for (std::size_t i = 0; i < obs.nodes.size(); ++i) {
        const double diff =
            u.blocks[b].u[k * g.n_space() + obs.nodes[i]] - obs.traces[b](k, i);
        const double tw = w.time_weighted[i] ? d.time.h[k] : 1.0;
        j += 0.5 * tw * w.face_w[i] * diff * diff;
      }
  }
  return j;
}

std::vector<Vector> objective_gradient(const SolutionField& u,
                                       const Observations& obs,
                                       const Discretization& d,
                                       ObjectiveForm form) {
  const Grid& g = d.grid;
  if (static_cast<int>(u.blocks.size()) != obs.n_blocks || g.m != obs.m)
    fail(ErrorCode::DimensionMismatch, "objective_gradient: grid mismatch");
  const ObsWeights w = obs_weights(d, obs, form);
  std::vector<Vector> grads;
  for (int b = 0; b < obs.n_blocks; ++b) {
    Vector grad = Vector::Zero(g.n_spacetime());
    for (Index k = 0; k < g.m; ++k)
      for (std::size_t i = 0; i < obs.nodes.size(); ++i) {
        const Index at = k * g.n_space() + obs.nodes[i];
        const double diff = u.blocks[b].u[at] - obs.traces[b](k, i);
        const double tw = w.time_weighted[i] ? d.time.h[k] : 1.0;
        grad[at] = tw * w.face_w[i] * diff;
      }
    grads.push_back(std::move(grad));
  }
  return grads;
}

Vector gradient_wrt_initial(const Discretization& d, const Vector& lambda0) {
  const Grid& g = d.grid;
  const Index n = g.n_space();
  if (lambda0.size() != g.n_spacetime())
    fail(ErrorCode::DimensionMismatch, "gradient_wrt_initial: size mismatch");
  SparseMatrix dhat = adjoint_time_op(d.time, d.time.flavor_i);
  const auto& dh = dhat.eigen();
  Vector acc = Vector::Zero(n);
  for (int c = 0; c < dh.outerSize(); ++c)
    for (EigenSparse::InnerIterator it(dh, c); it; ++it)
      if (it.row() == 0) acc += it.value() * lambda0.segment(it.col() * n, n);
  acc -= d.damping_boundary.apply(lambda0.segment(0, n));
  return acc.cwiseQuotient(d.c2);
}

std::pair<double, Vector> compute_objective_and_gradient(
    const Discretization& d, const DiscreteSystem& fwd, const AdjointSystem& adj,
    const Observations& obs, const Vector& eta, const InverseOptions& opts) {
  const Vector sh = sqrt_h(d);
  const Vector f = eta.cwiseQuotient(sh);
  SolutionField u = march_multiblock(d, fwd, f, d.g0, opts.solver);
  const double j = objective(u, obs, d, opts.form);
  const std::vector<Vector> gu = objective_gradient(u, obs, d, opts.form);
  AdjointSolution lam = solve_adjoint(d, adj, gu, opts.solver);
  const Vector grad_f = gradient_wrt_initial(d, lam.lambda[0]);
  return {j, sh.cwiseProduct(grad_f)};
}

namespace {

struct Eval {
  double j;
  Vector grad;
};

/// Strong Wolfe line search (bracket + zoom with bisection/interpolation).
/// Returns the accepted step, or 0 on failure.
double wolfe_search(const std::function<Eval(double)>& phi, double j0, double g0,
                    double init_step) {
  const double c1 = 1e-4, c2 = 0.9;
  double a_prev = 0.0, j_prev = j0;
  double a = init_step;
  double a_lo = -1, a_hi = -1, j_lo = 0;
  Eval e{};
  for (int it = 0; it < 25; ++it) {
    e = phi(a);
    if (e.j > j0 + c1 * a * g0 || (it > 0 && e.j >= j_prev)) {
      a_lo = a_prev; a_hi = a; j_lo = j_prev;
      break;
    }
    const double slope = e.grad.size() ? e.grad[0] : 0.0;  // directional, see caller
    if (std::abs(slope) <= -c2 * g0) return a;
    if (slope >= 0.0) {
      a_lo = a; a_hi = a_prev; j_lo = e.j;
      break;
    }
    a_prev = a; j_prev = e.j;
    a *= 2.0;
  }
  if (a_lo < 0) return 0.0;
  // zoom
  for (int it = 0; it < 40; ++it) {
    const double am = 0.5 * (a_lo + a_hi);
    e = phi(am);
    if (e.j > j0 + c1 * am * g0 || e.j >= j_lo) {
      a_hi = am;
    } else {
      const double slope = e.grad.size() ? e.grad[0] : 0.0;
      if (std::abs(slope) <= -c2 * g0) return am;
      if (slope * (a_hi - a_lo) >= 0.0) a_hi = a_lo;
      a_lo = am; j_lo = e.j;
    }
    if (std::abs(a_hi - a_lo) < 1e-14 * std::max(1.0, std::abs(a_lo))) break;
  }
  return a_lo > 0 ? a_lo : 0.0;
}

}  // namespace

InverseState optimize(const Discretization& d, const Observations& obs,
                      const Vector& init_guess, const InverseOptions& opts,
                      const Vector& true_f) {
  const Index n = d.grid.n_space();
  if (init_guess.size() != n)
    fail(ErrorCode::DimensionMismatch, "optimize: init guess size mismatch");
  DiscreteSystem fwd = assemble_forward(d);
  AdjointSystem adj = assemble_adjoint(d);
  const Vector sh = sqrt_h(d);

  InverseState st;
  st.eta = sh.cwiseProduct(init_guess);

  auto eval = [&](const Vector& eta) {
    return compute_objective_and_gradient(d, fwd, adj, obs, eta, opts);
  };
  auto record = [&](const Vector& eta, double j) {
    st.eta = eta;
    st.f_iter = eta.cwiseQuotient(sh);
    st.misfit_history.push_back(j);
    st.iterates.push_back(st.f_iter);
    if (true_f.size() == n)
      st.error_history.push_back(weighted_norm(d.h_space, st.f_iter - true_f));
  };

  auto [j, g] = eval(st.eta);
  record(st.eta, j);
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
  Vector eta = st.eta;
  bool first = true;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    if (g.norm() < opts.grad_tol) {
      st.status = InverseStatus::Converged;
      break;
    }
    Vector p = -(hinv * g);
    double g0 = g.dot(p);
    if (g0 >= 0.0) {  // reset on loss of descent
      hinv.setIdentity();
      p = -g;
      g0 = g.dot(p);
    }
    double last_a = -1.0, last_j = 0.0;
    Vector last_g;
    auto phi = [&](double a) {
      auto [ja, ga] = eval(eta + a * p);
      last_a = a;
      last_j = ja;
      last_g = ga;
      Eval e;
      e.j = ja;
      e.grad = Vector::Constant(1, ga.dot(p));
      return e;
    };
    const double step = wolfe_search(phi, j, g0, 1.0);
    if (step <= 0.0) {
      st.status = InverseStatus::LineSearchFailure;
      break;
    }
    double j_new;
    Vector g_new;
    if (step == last_a) {
      j_new = last_j;
      g_new = last_g;
    } else {
      std::tie(j_new, g_new) = eval(eta + step * p);
    }
    const Vector s = step * p;
    const Vector y = g_new - g;
    const double sy = s.dot(y);
    if (first && sy > 0.0) {
      hinv = (sy / y.dot(y)) * Eigen::MatrixXd::Identity(n, n);
      first = false;
    }
    if (sy > 1e-14 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      Eigen::MatrixXd vmat =
          Eigen::MatrixXd::Identity(n, n) - rho * s * y.transpose();
      hinv = vmat * hinv * vmat.transpose() + rho * s * s.transpose();
    }
    eta += step * p;
    j = j_new;
    g = g_new;
    record(eta, j);
    st.iterations = iter + 1;
  }
  if (st.status == InverseStatus::IterationLimit && g.norm() < opts.grad_tol)
    st.status = InverseStatus::Converged;
  return st;
}

}  // namespace dpsbp
