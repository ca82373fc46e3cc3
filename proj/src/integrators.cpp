#include "nchmc/integrators.hpp"

#include <cmath>

namespace nchmc {

namespace {

void count(std::size_t* counter, std::size_t k = 1) {
  if (counter) *counter += k;
}

void require_dims(const TargetModel& model, const PhasePoint& z, Eigen::Index n) {
  if (z.q.size() != model.dim() || z.p.size() != model.dim() || model.dim() != n)
    throw InvalidArgument("integrator: dimensions of model, state and structure differ");
}

}  // namespace

double ExpandedPhasePoint::defect() const {
  return std::max((qt - xt).cwiseAbs().maxCoeff(), (pt - yt).cwiseAbs().maxCoeff());
}

void IntegratorConfig::validate() const {
  if (!std::isfinite(step_size)) throw InvalidArgument("step size must be finite");
  if (n_steps < 1) throw InvalidArgument("number of integration steps must be >= 1");
  if (!(binding > 0.0)) throw InvalidArgument("binding strength omega must be positive");
  if (!(fp_tol > 0.0)) throw InvalidArgument("fixed-point tolerance must be positive");
  if (fp_max_iters < 1) throw InvalidArgument("fixed-point iteration cap must be >= 1");
}

// --- Leapfrog ---------------------------------------------------------------

PhasePoint leapfrog_step(const TargetModel& model, const PhasePoint& z, double eps,
                         std::size_t* gradient_evals) {
  PhasePoint out = z;
  out.p -= 0.5 * eps * model.grad_potential(out.q);
  out.q += eps * out.p;
  out.p -= 0.5 * eps * model.grad_potential(out.q);
  count(gradient_evals, 2);
  return out;
}

PhasePoint leapfrog_step(const TargetModel& model, const Matrix& coupling,
                         const PhasePoint& z, double eps, std::size_t* gradient_evals) {
  PhasePoint out = z;
  out.p -= 0.5 * eps * (coupling.transpose() * model.grad_potential(out.q));
  out.q += eps * (coupling * out.p);
  out.p -= 0.5 * eps * (coupling.transpose() * model.grad_potential(out.q));
  count(gradient_evals, 2);
  return out;
}

TrajectoryResult leapfrog_trajectory(const TargetModel& model, const PoissonStructure& s,
                                     const PhasePoint& z, const IntegratorConfig& cfg,
                                     const StepObserver& observer) {
  cfg.validate();
  require_dims(model, z, s.dim());
  if (!s.separable_blocks())
    throw InvalidArgument("leapfrog requires a canonical structure (E = G = 0)");
  const bool identity =
      max_abs(s.A() - Matrix::Identity(s.dim(), s.dim())) == 0.0;
  TrajectoryResult result;
  result.end = z;
  for (int i = 0; i < cfg.n_steps; ++i) {
    try {
      result.end = identity
                       ? leapfrog_step(model, result.end, cfg.step_size, &result.gradient_evals)
                       : leapfrog_step(model, s.A(), result.end, cfg.step_size,
                                       &result.gradient_evals);
    } catch (const EvaluationError&) {
      result.status = StepStatus::NonFinite;
      return result;
    }
    if (!result.end.q.allFinite() || !result.end.p.allFinite()) {
      result.status = StepStatus::NonFinite;
      return result;
    }
    if (observer) observer(i + 1, result.end);
  }
  return result;
}

// --- Implicit midpoint ------------------------------------------------------

ImplicitStep implicit_midpoint_step(const TargetModel& model, const PoissonStructure& s,
                                    const PhasePoint& z, const IntegratorConfig& cfg,
                                    std::size_t* gradient_evals) {
  const Vector z0 = z.stacked();
  const Matrix& B = s.poisson();
  const Eigen::Index n = s.dim();
  Vector current = z0;
  ImplicitStep step;
  step.status = StepStatus::Unconverged;
  for (int k = 0; k < cfg.fp_max_iters; ++k) {
    const Vector mid = 0.5 * (z0 + current);
    Vector grad(2 * n);
    try {
      grad.head(n) = model.grad_potential(mid.head(n));
    } catch (const EvaluationError&) {
      count(gradient_evals);
      step.status = StepStatus::NonFinite;
      step.iterations = k + 1;
      step.point = PhasePoint::from_stacked(current);
      return step;
    }
    count(gradient_evals);
    grad.tail(n) = mid.tail(n);
    Vector next = z0 + cfg.step_size * (B * grad);
    step.iterations = k + 1;
    if (!next.allFinite()) {
      step.status = StepStatus::NonFinite;
      step.point = PhasePoint::from_stacked(next);
      return step;
    }
    const double change = (next - current).cwiseAbs().maxCoeff();
    current = std::move(next);
    if (change < cfg.fp_tol) {
      step.status = StepStatus::Ok;
      break;
    }
  }
  step.point = PhasePoint::from_stacked(current);
  return step;
}

TrajectoryResult implicit_trajectory(const TargetModel& model, const PoissonStructure& s,
                                     const PhasePoint& z, const IntegratorConfig& cfg,
                                     const StepObserver& observer) {
  cfg.validate();
  require_dims(model, z, s.dim());
  TrajectoryResult result;
  result.end = z;
  for (int i = 0; i < cfg.n_steps; ++i) {
    ImplicitStep step = implicit_midpoint_step(model, s, result.end, cfg, &result.gradient_evals);
    result.max_fixed_point_iterations =
        std::max(result.max_fixed_point_iterations, step.iterations);
    result.end = std::move(step.point);
    if (step.status == StepStatus::NonFinite) {
      result.status = StepStatus::NonFinite;
      return result;
    }
    if (step.status == StepStatus::Unconverged) result.status = StepStatus::Unconverged;
    if (observer) observer(i + 1, result.end);
  }
  return result;
}

double reversal_roundtrip(const TargetModel& model, const PoissonStructure& s,
                          const PhasePoint& z, const IntegratorConfig& cfg) {
  cfg.validate();
  TrajectoryResult forward = implicit_trajectory(model, s, z, cfg);
  if (forward.status == StepStatus::NonFinite)
    throw EvaluationError("reversal_roundtrip: forward trajectory became non-finite", z.q);
  PhasePoint flipped{forward.end.q, -forward.end.p};
  TrajectoryResult back = implicit_trajectory(model, time_reversal(s), flipped, cfg);
  if (back.status == StepStatus::NonFinite)
    throw EvaluationError("reversal_roundtrip: reverse trajectory became non-finite", z.q);
  PhasePoint returned{back.end.q, -back.end.p};
  return (returned.stacked() - z.stacked()).cwiseAbs().maxCoeff();
}

// --- Explicit integrator ----------------------------------------------------

namespace splitting {

Vector transformed_gradient(const TargetModel& model, const DarbouxBasis& basis,
                            const Vector& qt, const Vector& pt) {
  const Eigen::Index n = qt.size();
  Vector zt(2 * n);
  zt << qt, pt;
  const Vector z = basis.basis() * zt;
  Vector dH(2 * n);
  dH.head(n) = model.grad_potential(z.head(n));
  if (!dH.head(n).allFinite())
    throw EvaluationError("potential gradient is not finite", z.head(n));
  dH.tail(n) = z.tail(n);
  return basis.basis().transpose() * dH;
}

void phi1(const TargetModel& model, const DarbouxBasis& basis, ExpandedPhasePoint& w,
          double h) {
  const Eigen::Index n = w.qt.size();
  const Vector g = transformed_gradient(model, basis, w.qt, w.yt);
  w.pt -= h * g.head(n);
  w.xt += h * g.tail(n);
}

void phi2(const TargetModel& model, const DarbouxBasis& basis, ExpandedPhasePoint& w,
          double h) {
  const Eigen::Index n = w.qt.size();
  const Vector g = transformed_gradient(model, basis, w.xt, w.pt);
  w.qt += h * g.tail(n);
  w.yt -= h * g.head(n);
}

void phi3(ExpandedPhasePoint& w, double eps, double omega) {
  const double c = std::cos(2.0 * eps * omega);
  const double s = std::sin(2.0 * eps * omega);
  const Vector sum_q = w.qt + w.xt;
  const Vector sum_p = w.pt + w.yt;
  const Vector dq = w.qt - w.xt;
  const Vector dp = w.pt - w.yt;
  const Vector rq = c * dq + s * dp;
  const Vector rp = -s * dq + c * dp;
  w.qt = 0.5 * (sum_q + rq);
  w.pt = 0.5 * (sum_p + rp);
  w.xt = 0.5 * (sum_q - rq);
  w.yt = 0.5 * (sum_p - rp);
}

}  // namespace splitting

ExpandedPhasePoint explicit_step(const TargetModel& model, const DarbouxBasis& basis,
                                 const ExpandedPhasePoint& w, const IntegratorConfig& cfg,
                                 std::size_t* gradient_evals) {
  const double h = 0.5 * cfg.step_size;
  ExpandedPhasePoint out = w;
  splitting::phi1(model, basis, out, h);
  splitting::phi2(model, basis, out, h);
  splitting::phi3(out, cfg.step_size, cfg.binding);
  splitting::phi2(model, basis, out, h);
  splitting::phi1(model, basis, out, h);
  count(gradient_evals, 4);
  return out;
}

TrajectoryResult explicit_trajectory(const TargetModel& model, const DarbouxBasis& basis,
                                     const PhasePoint& z, const IntegratorConfig& cfg,
                                     const StepObserver& observer) {
  cfg.validate();
  require_dims(model, z, basis.dim());
  const Eigen::Index n = basis.dim();
  const Vector zt = basis.to_canonical(z.stacked());
  ExpandedPhasePoint w = ExpandedPhasePoint::doubled(zt.head(n), zt.tail(n));

  TrajectoryResult result;
  auto back = [&](const ExpandedPhasePoint& state) {
    Vector out(2 * n);
    out << state.qt, state.pt;
    return PhasePoint::from_stacked(basis.from_canonical(out));
  };
  for (int i = 0; i < cfg.n_steps; ++i) {
    try {
      w = explicit_step(model, basis, w, cfg, &result.gradient_evals);
    } catch (const EvaluationError&) {
      result.status = StepStatus::NonFinite;
      result.end = back(w);
      return result;
    }
    if (!w.qt.allFinite() || !w.pt.allFinite() || !w.xt.allFinite() || !w.yt.allFinite()) {
      result.status = StepStatus::NonFinite;
      result.end = back(w);
      return result;
    }
    if (observer) observer(i + 1, back(w));
  }
  result.end = back(w);
  result.defect = w.defect();
  return result;
}

}  // namespace nchmc
