#ifndef NCHMC_INTEGRATORS_HPP
#define NCHMC_INTEGRATORS_HPP

#include "nchmc/models.hpp"
#include "nchmc/symplectic.hpp"

#include <functional>

namespace nchmc {

/// State of the explicit integrator in the doubled phase space, all four
/// blocks in canonical (Darboux) coordinates.
struct ExpandedPhasePoint {
  Vector qt;
  Vector pt;
  Vector xt;
  Vector yt;

  static ExpandedPhasePoint doubled(const Vector& q, const Vector& p) {
    return {q, p, q, p};
  }
  /// max(|qt - xt|_inf, |pt - yt|_inf)
  double defect() const;
};

struct IntegratorConfig {
  double step_size = 0.1;
  int n_steps = 1;
  double binding = 1.0;    // omega, explicit integrator only
  double fp_tol = 1e-6;    // implicit midpoint fixed-point tolerance (inf-norm)
  int fp_max_iters = 100;

  void validate() const;
};

enum class StepStatus {
  Ok,
  Unconverged,  // implicit solve hit fp_max_iters
  NonFinite,    // a state, potential or gradient went non-finite
};

struct TrajectoryResult {
  PhasePoint end;
  StepStatus status = StepStatus::Ok;
  std::size_t gradient_evals = 0;
  int max_fixed_point_iterations = 0;
  double defect = 0.0;  // explicit integrator only

  bool ok() const { return status == StepStatus::Ok; }
};

/// Called after every step with the step index (1-based) and the state in
/// the original (non-canonical) coordinates.
using StepObserver = std::function<void(int, const PhasePoint&)>;

// --- Leapfrog ---------------------------------------------------------------

/// Half kick, drift, half kick with two gradient evaluations.
PhasePoint leapfrog_step(const TargetModel& model, const PhasePoint& z, double eps,
                         std::size_t* gradient_evals = nullptr);

/// Leapfrog for a Poisson structure with E = G = 0 and coupling A:
/// dq/dt = A p, dp/dt = -A^T grad U(q). Each sub-flow is exact, so the
/// composition stays explicit and symmetric.
PhasePoint leapfrog_step(const TargetModel& model, const Matrix& coupling,
                         const PhasePoint& z, double eps,
                         std::size_t* gradient_evals = nullptr);

/// Requires s.separable_blocks().
TrajectoryResult leapfrog_trajectory(const TargetModel& model,
                                     const PoissonStructure& s, const PhasePoint& z,
                                     const IntegratorConfig& cfg,
                                     const StepObserver& observer = {});

// --- Implicit midpoint ------------------------------------------------------

struct ImplicitStep {
  PhasePoint point;
  StepStatus status = StepStatus::Ok;
  int iterations = 0;
};

/// Solves z1 = z0 + eps * B * DH((z0 + z1) / 2) by fixed-point iteration
/// from z1 = z0, stopping when successive iterates differ by less than
/// fp_tol in the inf-norm or after fp_max_iters iterations.
ImplicitStep implicit_midpoint_step(const TargetModel& model, const PoissonStructure& s,
                                    const PhasePoint& z, const IntegratorConfig& cfg,
                                    std::size_t* gradient_evals = nullptr);

/// cfg.n_steps implicit midpoint steps. Stops early on a non-finite state;
/// an unconverged step marks the result but integration continues.
TrajectoryResult implicit_trajectory(const TargetModel& model, const PoissonStructure& s,
                                     const PhasePoint& z, const IntegratorConfig& cfg,
                                     const StepObserver& observer = {});

/// Integrate N steps under s, negate p, integrate N steps under
/// time_reversal(s), negate p; returns |result - z|_inf.
double reversal_roundtrip(const TargetModel& model, const PoissonStructure& s,
                          const PhasePoint& z, const IntegratorConfig& cfg);

// --- Explicit integrator in the doubled phase space -------------------------

namespace splitting {

/// Gradient of the transformed Hamiltonian H~(z~) = H(basis z~), i.e.
/// basis^T DH(basis z~).
Vector transformed_gradient(const TargetModel& model, const DarbouxBasis& basis,
                            const Vector& qt, const Vector& pt);

/// p~ -= h grad_q H~(q~, y~);  x~ += h grad_p H~(q~, y~). One gradient.
void phi1(const TargetModel& model, const DarbouxBasis& basis, ExpandedPhasePoint& w,
          double h);
/// q~ += h grad_p H~(x~, p~);  y~ -= h grad_q H~(x~, p~). One gradient.
void phi2(const TargetModel& model, const DarbouxBasis& basis, ExpandedPhasePoint& w,
          double h);
/// Rotates the differences (q~ - x~, p~ - y~) by the angle 2 eps omega and
/// keeps the sums (q~ + x~, p~ + y~).
void phi3(ExpandedPhasePoint& w, double eps, double omega);

}  // namespace splitting

/// phi1(eps/2), phi2(eps/2), phi3(eps, omega), phi2(eps/2), phi1(eps/2);
/// four gradient evaluations.
ExpandedPhasePoint explicit_step(const TargetModel& model, const DarbouxBasis& basis,
                                 const ExpandedPhasePoint& w, const IntegratorConfig& cfg,
                                 std::size_t* gradient_evals = nullptr);

/// Lifts z with the change of basis, doubles it, runs cfg.n_steps explicit
/// steps and maps the (q~, p~) copy back through the basis. The result's
/// `defect` is the final separation between the two copies.
TrajectoryResult explicit_trajectory(const TargetModel& model, const DarbouxBasis& basis,
                                     const PhasePoint& z, const IntegratorConfig& cfg,
                                     const StepObserver& observer = {});

}  // namespace nchmc

#endif  // NCHMC_INTEGRATORS_HPP
