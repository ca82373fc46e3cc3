#include "nchmc/integrators.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace nchmc;

namespace {

StructureVariant variant_of(VariantTag tag, int k = 2) {
  StructureVariant v;
  v.tag = tag;
  v.skew_divisor = k;
  return v;
}

IntegratorConfig config(double eps, int steps, double tol = 1e-6) {
  IntegratorConfig c;
  c.step_size = eps;
  c.n_steps = steps;
  c.fp_tol = tol;
  return c;
}

GaussianMixture random_mixture(Eigen::Index n, std::uint64_t seed) {
  RandomStream rng(seed);
  return GaussianMixture({rng.normal_vector(n), rng.normal_vector(n)}, 1.0);
}

/// Finite potential with a NaN gradient everywhere.
class PoisonedModel final : public TargetModel {
 public:
  Eigen::Index dim() const override { return 1; }
  double potential(const Vector& q) const override { return 0.5 * q.squaredNorm(); }
  Vector grad_potential(const Vector&) const override {
    return Vector::Constant(1, std::numeric_limits<double>::quiet_NaN());
  }
  std::string description() const override { return "poisoned"; }
};

double inf_distance(const PhasePoint& a, const PhasePoint& b) {
  return (a.stacked() - b.stacked()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("leapfrog step by hand") {
  const GaussianTarget g = GaussianTarget::standard(1);
  const PhasePoint z{Vector::Constant(1, 1.0), Vector::Zero(1)};
  std::size_t evals = 0;
  const PhasePoint out = leapfrog_step(g, z, 0.1, &evals);
  // Half kick gives p = -0.05; drift gives q = 0.995; second half kick.
  CHECK(out.q(0) == doctest::Approx(0.995).epsilon(1e-15));
  CHECK(out.p(0) == doctest::Approx(-0.09975).epsilon(1e-15));
  CHECK(evals == 2);
  CHECK(inf_distance(leapfrog_step(g, z, 0.0), z) == 0.0);
}

TEST_CASE("leapfrog is symmetric") {
  const GaussianMixture mix = GaussianMixture::bimodal_benchmark();
  RandomStream rng(1);
  for (int i = 0; i < 10; ++i) {
    const PhasePoint z{rng.normal_vector(2), rng.normal_vector(2)};
    const PhasePoint back = leapfrog_step(mix, leapfrog_step(mix, z, 0.2), -0.2);
    CHECK(inf_distance(back, z) < 1e-14);
  }
  StructureVariant mass = variant_of(VariantTag::MassPreconditioned);
  mass.coupling = oracle::random_spd(2, rng);
  const PoissonStructure s = build_structure(mass, 2, 0);
  const PhasePoint z{rng.normal_vector(2), rng.normal_vector(2)};
  const auto fwd = leapfrog_trajectory(mix, s, z, config(0.1, 10));
  const auto back = leapfrog_trajectory(mix, s, fwd.end, config(-0.1, 10));
  CHECK(inf_distance(back.end, z) < 1e-10);
}

TEST_CASE("leapfrog under a coupling matrix approximates the implicit flow") {
  RandomStream rng(2);
  StructureVariant mass = variant_of(VariantTag::MassPreconditioned);
  mass.coupling = oracle::random_spd(2, rng);
  const PoissonStructure s = build_structure(mass, 2, 0);
  const GaussianMixture mix = GaussianMixture::bimodal_benchmark();
  const PhasePoint z{rng.normal_vector(2), rng.normal_vector(2)};
  const auto lf = leapfrog_trajectory(mix, s, z, config(1e-3, 500));
  const auto im = implicit_trajectory(mix, s, z, config(1e-3, 500, 1e-13));
  CHECK(inf_distance(lf.end, im.end) < 1e-4);
}

TEST_CASE("leapfrog rejects non-canonical structures") {
  const PoissonStructure s = build_structure(variant_of(VariantTag::MagneticPosition), 2, 3);
  const PhasePoint z{Vector::Zero(2), Vector::Zero(2)};
  CHECK_THROWS_AS(leapfrog_trajectory(GaussianTarget::standard(2), s, z, config(0.1, 1)),
                  InvalidArgument);
}

TEST_CASE("integrator configuration validation") {
  CHECK_THROWS_AS(config(0.1, 0).validate(), InvalidArgument);
  CHECK_THROWS_AS(config(std::nan(""), 1).validate(), InvalidArgument);
  IntegratorConfig c = config(0.1, 1);
  c.binding = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = config(0.1, 1, 0.0);
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  CHECK_NOTHROW(config(-0.1, 1).validate());
}

TEST_CASE("implicit midpoint on the harmonic oscillator") {
  const GaussianTarget g = GaussianTarget::standard(1);
  const PoissonStructure s = build_structure(variant_of(VariantTag::Canonical), 1, 0);
  const PhasePoint z{Vector::Constant(1, 1.0), Vector::Zero(1)};

  SUBCASE("quadratic invariant is conserved to the solver tolerance per step") {
    const IntegratorConfig c = config(0.1, 1);
    PhasePoint current = z;
    double drift = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const ImplicitStep step = implicit_midpoint_step(g, s, current, c);
      REQUIRE(step.status == StepStatus::Ok);
      const double change =
          std::abs(step.point.stacked().squaredNorm() - current.stacked().squaredNorm());
      CHECK(change < c.fp_tol);
      current = step.point;
      drift = std::abs(current.stacked().squaredNorm() - 1.0);
    }
    CHECK(drift < 1000 * c.fp_tol);
    // The stopping error has a consistent sign here, so drift grows with the
    // step count and shrinks with the tolerance.
    const auto tight = implicit_trajectory(g, s, z, config(0.1, 1000, 1e-9));
    CHECK(std::abs(tight.end.stacked().squaredNorm() - 1.0) < 1e-6);
  }
  SUBCASE("matches the closed-form Cayley rotation") {
    // Implicit midpoint on a linear rotation rotates by 2 atan(eps / 2) per step.
    const double eps = 0.1;
    const int steps = 200;
    const auto r = implicit_trajectory(g, s, z, config(eps, steps, 1e-14));
    const double angle = steps * 2.0 * std::atan(eps / 2.0);
    CHECK(r.end.q(0) == doctest::Approx(std::cos(angle)).epsilon(1e-11));
    CHECK(r.end.p(0) == doctest::Approx(-std::sin(angle)).epsilon(1e-11));
  }
  SUBCASE("energy drift over many steps stays below the solver tolerance scale") {
    RandomStream rng(5);
    const PoissonStructure mm = build_structure(variant_of(VariantTag::MagneticMomentum), 3, 4);
    const GaussianTarget g3 = GaussianTarget::standard(3);
    const PhasePoint z3{rng.normal_vector(3), rng.normal_vector(3)};
    const auto r = implicit_trajectory(g3, mm, z3, config(0.1, 1000));
    CHECK(std::abs(hamiltonian(g3, r.end) - hamiltonian(g3, z3)) < 1e-5);
  }
}

TEST_CASE("implicit midpoint at a fixed point and at zero step") {
  const GaussianTarget g = GaussianTarget::standard(2);
  const PoissonStructure s = build_structure(variant_of(VariantTag::CoupledMagnet), 2, 8);
  const PhasePoint origin{Vector::Zero(2), Vector::Zero(2)};
  const ImplicitStep step = implicit_midpoint_step(g, s, origin, config(0.3, 1));
  CHECK(step.status == StepStatus::Ok);
  CHECK(step.iterations == 1);
  CHECK(inf_distance(step.point, origin) == 0.0);

  RandomStream rng(6);
  const PhasePoint z{rng.normal_vector(2), rng.normal_vector(2)};
  const ImplicitStep still = implicit_midpoint_step(g, s, z, config(0.0, 1));
  CHECK(inf_distance(still.point, z) == 0.0);
}

TEST_CASE("implicit midpoint status reporting") {
  const GaussianTarget g = GaussianTarget::standard(2);
  const PoissonStructure s = build_structure(variant_of(VariantTag::Canonical), 2, 0);
  const PhasePoint z{Vector::Ones(2), Vector::Zero(2)};
  IntegratorConfig c = config(0.1, 3);
  c.fp_max_iters = 1;
  const auto r = implicit_trajectory(g, s, z, c);
  CHECK(r.status == StepStatus::Unconverged);

  const PoisonedModel poisoned;
  const PoissonStructure s1 = build_structure(variant_of(VariantTag::Canonical), 1, 0);
  const auto bad = implicit_trajectory(poisoned, s1, {Vector::Ones(1), Vector::Zero(1)},
                                       config(0.1, 5));
  CHECK(bad.status == StepStatus::NonFinite);
  CHECK(bad.gradient_evals == 1);
}

TEST_CASE("implicit midpoint reversal round trip") {
  const GaussianTarget g = GaussianTarget::standard(2);
  RandomStream rng(7);
  const PhasePoint z{rng.normal_vector(2), rng.normal_vector(2)};
  const PoissonStructure can = build_structure(variant_of(VariantTag::Canonical), 2, 0);
  CHECK(reversal_roundtrip(g, can, z, config(0.05, 50)) < 1e-6);
  const PoissonStructure mm = build_structure(variant_of(VariantTag::MagneticMomentum), 2, 9);
  CHECK(reversal_roundtrip(g, mm, z, config(0.05, 25, 1e-8)) < 1e-6);
  // Each of the 2N solves can leave up to about fp_tol of error.
  CHECK(reversal_roundtrip(g, mm, z, config(0.05, 25)) < 50 * 1e-6);
  CHECK_THROWS_AS(reversal_roundtrip(g, mm, z, config(0.05, 0)), InvalidArgument);
}

TEST_CASE("implicit midpoint is symmetric") {
  const GaussianMixture mix = random_mixture(3, 10);
  const PoissonStructure s = build_structure(variant_of(VariantTag::CoupledMagnet), 3, 11);
  RandomStream rng(12);
  for (int i = 0; i < 5; ++i) {
    const PhasePoint z{rng.normal_vector(3), rng.normal_vector(3)};
    const auto fwd = implicit_trajectory(mix, s, z, config(0.05, 1));
    const auto back = implicit_trajectory(mix, s, fwd.end, config(-0.05, 1));
    CHECK(inf_distance(back.end, z) < 1e-6);
  }
}

TEST_CASE("implicit midpoint preserves volume") {
  for (Eigen::Index n = 1; n <= 3; ++n) {
    for (VariantTag tag : {VariantTag::MagneticPosition, VariantTag::MagneticMomentum,
                           VariantTag::CoupledMagnet}) {
      const GaussianMixture mix = random_mixture(n, 20 + n);
      const PoissonStructure s = build_structure(variant_of(tag), n, 30 + n);
      RandomStream rng(40 + n);
      const Vector z0 = rng.normal_vector(2 * n);
      const IntegratorConfig c = config(0.1, 1, 1e-14);
      const auto step = [&](const Vector& z) {
        return implicit_midpoint_step(mix, s, PhasePoint::from_stacked(z), c).point.stacked();
      };
      const double det = oracle::numerical_jacobian(step, z0, 1e-6).determinant();
      CAPTURE(n);
      CAPTURE(to_string(tag));
      CHECK(std::abs(det - 1.0) < 1e-5);
    }
  }
}

TEST_CASE("splitting rotation") {
  ExpandedPhasePoint w{Vector::Constant(1, 1.0), Vector::Constant(1, 2.0),
                       Vector::Constant(1, 0.5), Vector::Constant(1, -1.0)};
  ExpandedPhasePoint same = w;
  splitting::phi3(same, 0.0, 5.0);
  CHECK(same.qt == w.qt);
  CHECK(same.yt == w.yt);

  ExpandedPhasePoint r = w;
  splitting::phi3(r, M_PI / 4.0, 1.0);  // 2 eps omega = pi / 2
  const double dq = 0.5, dp = 3.0;
  CHECK((r.qt - r.xt)(0) == doctest::Approx(dp).epsilon(1e-14));
  CHECK((r.pt - r.yt)(0) == doctest::Approx(-dq).epsilon(1e-14));
  CHECK((r.qt + r.xt)(0) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK((r.pt + r.yt)(0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("explicit step against a hand composition") {
  // H = (q^2 + p^2) / 2 in identity coordinates, so grad_q = q and grad_p = p.
  const GaussianTarget g = GaussianTarget::standard(1);
  const DarbouxBasis identity(Matrix::Identity(2, 2));
  const double eps = 0.3, omega = 0.7, h = eps / 2.0;
  double q = 0.8, p = -0.4, x = 0.8, y = -0.4;
  const auto phi1 = [&] {
    const double gq = q, gp = y;
    p -= h * gq;
    x += h * gp;
  };
  const auto phi2 = [&] {
    const double gq = x, gp = p;
    q += h * gp;
    y -= h * gq;
  };
  const auto phi3 = [&] {
    const double c = std::cos(2 * eps * omega), s = std::sin(2 * eps * omega);
    const double sq = q + x, sp = p + y, dq = q - x, dp = p - y;
    const double rq = c * dq + s * dp, rp = -s * dq + c * dp;
    q = (sq + rq) / 2;
    p = (sp + rp) / 2;
    x = (sq - rq) / 2;
    y = (sp - rp) / 2;
  };
  phi1();
  phi2();
  phi3();
  phi2();
  phi1();

  IntegratorConfig c = config(eps, 1);
  c.binding = omega;
  std::size_t evals = 0;
  const ExpandedPhasePoint out = explicit_step(
      g, identity, ExpandedPhasePoint::doubled(Vector::Constant(1, 0.8), Vector::Constant(1, -0.4)),
      c, &evals);
  CHECK(out.qt(0) == doctest::Approx(q).epsilon(1e-15));
  CHECK(out.pt(0) == doctest::Approx(p).epsilon(1e-15));
  CHECK(out.xt(0) == doctest::Approx(x).epsilon(1e-15));
  CHECK(out.yt(0) == doctest::Approx(y).epsilon(1e-15));
  CHECK(evals == 4);
}

TEST_CASE("explicit step is symmetric in the doubled space") {
  const GaussianMixture mix = GaussianMixture::bimodal_benchmark();
  const PoissonStructure s = build_structure(variant_of(VariantTag::MagneticMomentum), 2, 3);
  const DarbouxBasis b = symplectic_gram_schmidt(s.symplectic(), 3);
  RandomStream rng(13);
  for (int i = 0; i < 5; ++i) {
    ExpandedPhasePoint w{rng.normal_vector(2), rng.normal_vector(2), rng.normal_vector(2),
                         rng.normal_vector(2)};
    const ExpandedPhasePoint back =
        explicit_step(mix, b, explicit_step(mix, b, w, config(0.1, 1)), config(-0.1, 1));
    CHECK((back.qt - w.qt).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((back.pt - w.pt).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((back.xt - w.xt).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((back.yt - w.yt).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("explicit trajectory in the small-step limit") {
  const GaussianMixture mix = GaussianMixture::bimodal_benchmark();
  const PoissonStructure s = build_structure(variant_of(VariantTag::CoupledMagnet), 2, 4);
  const DarbouxBasis b = symplectic_gram_schmidt(s.symplectic(), 4);
  const PhasePoint z{Vector::Constant(2, 0.3), Vector::Constant(2, -0.2)};
  const auto r = explicit_trajectory(mix, b, z, config(1e-9, 1));
  CHECK(inf_distance(r.end, z) < 1e-8);
  CHECK(r.defect < 1e-12);
  CHECK(r.ok());
}

TEST_CASE("explicit and implicit integrators agree on the same structure") {
  const GaussianMixture mix = GaussianMixture::bimodal_benchmark();
  for (VariantTag tag : {VariantTag::MagneticPosition, VariantTag::MagneticMomentum,
                         VariantTag::CoupledMagnet}) {
    const StructureVariant v = variant_of(tag);
    const PoissonStructure s = build_structure(v, 2, 14);
    const DarbouxBasis b = darboux_basis_for(v, s, 14);
    const PhasePoint z{Vector::Constant(2, 0.5), Vector::Constant(2, 0.5)};
    const auto im = implicit_trajectory(mix, s, z, config(1e-3, 1000, 1e-12));
    const auto ex = explicit_trajectory(mix, b, z, config(1e-3, 1000));
    CAPTURE(to_string(tag));
    CHECK(inf_distance(im.end, ex.end) < 1e-3);
  }
}

TEST_CASE("second-order accuracy") {
  Matrix precision(2, 2);
  precision << 2.0, 0.5, 0.5, 1.0;
  const GaussianTarget g(precision);
  const PoissonStructure s = build_structure(variant_of(VariantTag::CoupledMagnet), 2, 15);
  const DarbouxBasis b = symplectic_gram_schmidt(s.symplectic(), 15);
  const PhasePoint z{Vector::Constant(2, 1.0), Vector::Constant(2, -0.5)};
  const double T = 1.0, eps = 0.1;

  const auto implicit_end = [&](double h) {
    return implicit_trajectory(g, s, z, config(h, static_cast<int>(std::lround(T / h)), 1e-14))
        .end;
  };
  const auto explicit_end = [&](double h) {
    return explicit_trajectory(g, b, z, config(h, static_cast<int>(std::lround(T / h)))).end;
  };
  for (const auto& [name, run] :
       {std::pair<const char*, std::function<PhasePoint(double)>>{"implicit", implicit_end},
        std::pair<const char*, std::function<PhasePoint(double)>>{"explicit", explicit_end}}) {
    const PhasePoint ref = run(eps / 16.0);
    const double ratio = inf_distance(run(eps), ref) / inf_distance(run(eps / 2.0), ref);
    CAPTURE(name);
    CHECK(ratio >= 3.2);
    CHECK(ratio <= 4.8);
  }
}

TEST_CASE("gradient evaluation counts") {
  const GaussianMixture mix = GaussianMixture::bimodal_benchmark();
  CountingModel counted(mix);
  const PhasePoint z{Vector::Constant(2, 0.1), Vector::Constant(2, 0.2)};

  const PoissonStructure can = build_structure(variant_of(VariantTag::Canonical), 2, 0);
  const auto lf = leapfrog_trajectory(counted, can, z, config(0.1, 17));
  CHECK(counted.gradient_calls() == 34);
  CHECK(lf.gradient_evals == 34);

  counted.reset();
  const PoissonStructure mm = build_structure(variant_of(VariantTag::MagneticMomentum), 2, 1);
  const auto ex = explicit_trajectory(counted, symplectic_gram_schmidt(mm.symplectic(), 1), z,
                                      config(0.1, 13));
  CHECK(counted.gradient_calls() == 52);
  CHECK(ex.gradient_evals == 52);

  counted.reset();
  const auto im = implicit_trajectory(counted, mm, z, config(0.1, 5));
  CHECK(im.gradient_evals == counted.gradient_calls());
}

TEST_CASE("explicit trajectory reports non-finite gradients") {
  const PoisonedModel poisoned;
  const auto r = explicit_trajectory(poisoned, DarbouxBasis(Matrix::Identity(2, 2)),
                                     {Vector::Ones(1), Vector::Zero(1)}, config(0.1, 3));
  CHECK(r.status == StepStatus::NonFinite);
}
