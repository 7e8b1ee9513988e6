#pragma once

#include <string>
#include <vector>

#include "dpsbp/adjoint.hpp"
#include "dpsbp/forward.hpp"

namespace dpsbp {

/// Weighting of the boundary misfit term.
///  Printed:   right trace weighted by Ht, left trace summed unweighted (1D).
///  Symmetric: every face weighted by Ht (always used in 2D).
enum class ObjectiveForm { Printed, Symmetric };

/// Boundary traces of the state at every time node of every block.
struct Observations {
  std::vector<Index> nodes;                 // spatial ids of observed nodes
  std::vector<Eigen::MatrixXd> traces;      // per block: m x nodes.size()
  int n_blocks = 0;
  Index m = 0;
};

Observations extract_observations(const Discretization& d, const SolutionField& u);
void write_observations_csv(const std::string& path, const Observations& obs,
                            const Discretization& d);
Observations read_observations_csv(const std::string& path, const Discretization& d);

double objective(const SolutionField& u, const Observations& obs,
                 const Discretization& d,
                 ObjectiveForm form = ObjectiveForm::Printed);

/// Euclidean gradient dJ/dU, one space-time vector per block; supported only
/// on observed boundary nodes.
std::vector<Vector> objective_gradient(const SolutionField& u,
                                       const Observations& obs,
                                       const Discretization& d,
                                       ObjectiveForm form = ObjectiveForm::Printed);

/// Gradient of the objective with respect to the initial displacement, in the
/// H-Riesz form c^{-2}((e1^T D^_t x I) - (e1^T x (sigma^2+B))) Lambda.
/// `lambda0` is block 0 of the adjoint solution in forward-time order.
Vector gradient_wrt_initial(const Discretization& d, const Vector& lambda0);

struct InverseOptions {
  int max_iter = 10;
  double grad_tol = 1e-10;
  ObjectiveForm form = ObjectiveForm::Printed;
  SolveOptions solver;
};

enum class InverseStatus { Converged, IterationLimit, LineSearchFailure };

struct InverseState {
  Vector f_iter;                      // current initial-displacement iterate
  Vector eta;                         // H^{1/2} f
  std::vector<double> misfit_history; // J at each accepted iterate
  std::vector<double> error_history;  // H-norm error vs true f (when known)
  std::vector<Vector> iterates;       // f at each accepted iterate
  InverseStatus status = InverseStatus::IterationLimit;
  int iterations = 0;
};

/// One objective/gradient evaluation of the reparameterized problem: maps eta
/// to f, runs the forward and adjoint solves, returns J and H^{1/2} grad_f J.
std::pair<double, Vector> compute_objective_and_gradient(
    const Discretization& d, const DiscreteSystem& fwd, const AdjointSystem& adj,
    const Observations& obs, const Vector& eta, const InverseOptions& opts);

/// BFGS with a strong Wolfe line search in the eta variable.
/// `true_f` (optional, may be empty) feeds the error history.
InverseState optimize(const Discretization& d, const Observations& obs,
                      const Vector& init_guess, const InverseOptions& opts,
                      const Vector& true_f = Vector());

}  // namespace dpsbp
