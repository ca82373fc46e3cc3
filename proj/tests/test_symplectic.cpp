#include "nchmc/symplectic.hpp"
#include "nchmc/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace nchmc;

namespace {

const VariantTag kAllTags[] = {VariantTag::Canonical,
                               VariantTag::MagneticPosition,
                               VariantTag::MagneticMomentum,
                               VariantTag::CoupledMagnet,
                               VariantTag::MassPreconditioned,
                               VariantTag::MagneticPositionPreconditioned};

StructureVariant variant_of(VariantTag tag, int k = 2) {
  StructureVariant v;
  v.tag = tag;
  v.skew_divisor = k;
  return v;
}

}  // namespace

TEST_CASE("canonical symplectic matrix") {
  Matrix j1(2, 2);
  j1 << 0, 1, -1, 0;
  CHECK(canonical_symplectic(1) == j1);

  const Matrix j2 = canonical_symplectic(2);
  CHECK(j2.rows() == 4);
  CHECK(j2.topLeftCorner(2, 2).isZero(0.0));
  CHECK(j2.bottomRightCorner(2, 2).isZero(0.0));
  CHECK(j2.topRightCorner(2, 2) == Matrix::Identity(2, 2));
  CHECK(j2.bottomLeftCorner(2, 2) == -Matrix::Identity(2, 2));

  const Matrix j3 = canonical_symplectic(3);
  CHECK(max_abs(Matrix(-j3).inverse() - j3) < 1e-15);
}

TEST_CASE("canonical structure with identity coupling is the canonical Poisson matrix") {
  const PoissonStructure s = build_structure(variant_of(VariantTag::Canonical), 2, 1);
  CHECK(s.poisson() == canonical_symplectic(2));
  CHECK(s.separable_blocks());
}

TEST_CASE("magnetic position skew block is exactly skew") {
  const PoissonStructure s = build_structure(variant_of(VariantTag::MagneticPosition, 2), 2, 42);
  CHECK(s.G() == Matrix(-s.G().transpose()));
  CHECK(s.E().isZero(0.0));
  CHECK(s.G().cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("coupled magnet uses the same block for E and G") {
  const PoissonStructure s = build_structure(variant_of(VariantTag::CoupledMagnet, 50), 3, 9);
  CHECK(s.E() == s.G());
}

TEST_CASE("random skew blocks depend only on the seed") {
  CHECK(random_skew_block(4, 2, 5) == random_skew_block(4, 2, 5));
  CHECK(random_skew_block(4, 2, 5) != random_skew_block(4, 2, 6));
  CHECK(max_abs(random_skew_block(3, 50, 1) * 50.0 - random_skew_block(3, 1, 1)) < 1e-12);
}

TEST_CASE("every constructed structure satisfies the inverse identities") {
  RandomStream rng(101);
  for (VariantTag tag : kAllTags) {
    for (Eigen::Index n = 1; n <= 6; ++n) {
      StructureVariant v = variant_of(tag, tag == VariantTag::CoupledMagnet ? 50 : 2);
      if (tag == VariantTag::MassPreconditioned ||
          tag == VariantTag::MagneticPositionPreconditioned)
        v.coupling = oracle::random_spd(n, rng);
      const PoissonStructure s = build_structure(v, n, 1000 + static_cast<std::uint64_t>(n));
      CAPTURE(to_string(tag));
      CAPTURE(n);
      CHECK(max_abs(s.poisson() + s.poisson().transpose()) == 0.0);
      CHECK(max_abs(s.symplectic() + s.symplectic().transpose()) == 0.0);
      CHECK(max_abs(s.symplectic() * (-s.poisson()) - Matrix::Identity(2 * n, 2 * n)) < 1e-10);
    }
  }
}

TEST_CASE("structure construction rejects bad blocks") {
  const Matrix I = Matrix::Identity(2, 2);
  const Matrix Z = Matrix::Zero(2, 2);
  Matrix not_skew(2, 2);
  not_skew << 0, 1, 1, 0;
  CHECK_THROWS_AS(PoissonStructure(not_skew, I, Z), InvalidArgument);
  CHECK_THROWS_AS(PoissonStructure(Z, I, not_skew), InvalidArgument);
  CHECK_THROWS_AS(PoissonStructure(Matrix::Zero(3, 3), I, Z), InvalidArgument);
  CHECK_THROWS_AS(PoissonStructure(Z, Z, Z), DegenerateStructure);

  StructureVariant bad_mass = variant_of(VariantTag::MassPreconditioned);
  bad_mass.coupling = Matrix(-I);
  CHECK_THROWS_AS(build_structure(bad_mass, 2, 1), InvalidArgument);
  CHECK_THROWS_AS(build_structure(variant_of(VariantTag::MagneticPosition, 0), 2, 1),
                  InvalidArgument);
  CHECK_THROWS_AS(build_structure(variant_of(VariantTag::Canonical), 0, 1), InvalidArgument);
}

TEST_CASE("time reversal") {
  const PoissonStructure can = build_structure(variant_of(VariantTag::Canonical), 3, 1);
  CHECK(time_reversal(can) == can);

  const PoissonStructure mag = build_structure(variant_of(VariantTag::MagneticPosition), 3, 2);
  const PoissonStructure rev = time_reversal(mag);
  CHECK(rev.G() == Matrix(-mag.G()));
  CHECK(rev.A() == mag.A());
  CHECK(rev.E() == mag.E());

  RandomStream rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 1 + trial % 4;
    const PoissonStructure s(oracle::random_skew(n, rng), oracle::random_spd(n, rng),
                             oracle::random_skew(n, rng));
    CHECK(time_reversal(time_reversal(s)) == s);
  }
}

TEST_CASE("Gram-Schmidt on the canonical matrix") {
  const Matrix J = canonical_symplectic(2);
  const DarbouxBasis b = symplectic_gram_schmidt(J, 4);
  CHECK(max_abs(b.basis().transpose() * J * b.basis() - J) < 1e-12);
}

TEST_CASE("Gram-Schmidt on a scaled 2x2 symplectic matrix") {
  Matrix J(2, 2);
  J << 0, 2, -2, 0;
  const DarbouxBasis b = symplectic_gram_schmidt(J, 11);
  // Explicit 2x2 product: for columns (a, c), (b, d) of the basis,
  // B^T J B = [[0, 2(ad - bc)], [-2(ad - bc), 0]].
  const Matrix& B = b.basis();
  const double det = B(0, 0) * B(1, 1) - B(0, 1) * B(1, 0);
  CHECK(2.0 * det == doctest::Approx(1.0).epsilon(1e-12));
  Matrix product(2, 2);
  product << 0, 2.0 * det, -2.0 * det, 0;
  CHECK(max_abs(product - canonical_symplectic(1)) < 1e-12);
  CHECK(canonicality_residual(b, J) < 1e-12);
}

TEST_CASE("Gram-Schmidt on a random magnetic-momentum structure") {
  const PoissonStructure s = build_structure(variant_of(VariantTag::MagneticMomentum), 5, 77);
  const DarbouxBasis b = symplectic_gram_schmidt(s.symplectic(), 78);
  CHECK(canonicality_residual(b, s.symplectic()) < 1e-9);
  CHECK(max_abs(b.change() * b.basis() - Matrix::Identity(10, 10)) < 1e-9);
}

TEST_CASE("Gram-Schmidt is deterministic in its seed") {
  const PoissonStructure s = build_structure(variant_of(VariantTag::CoupledMagnet, 2), 4, 5);
  const DarbouxBasis a = symplectic_gram_schmidt(s.symplectic(), 19);
  const DarbouxBasis b = symplectic_gram_schmidt(s.symplectic(), 19);
  CHECK(a.basis() == b.basis());
  CHECK(a.change() == b.change());
}

TEST_CASE("Gram-Schmidt rejects non-skew and singular input") {
  Matrix sym(2, 2);
  sym << 0, 1, 1, 0;
  CHECK_THROWS_AS(symplectic_gram_schmidt(sym, 1), InvalidArgument);
  CHECK_THROWS_AS(symplectic_gram_schmidt(Matrix::Zero(4, 4), 1), DegenerateStructure);
  CHECK_THROWS_AS(symplectic_gram_schmidt(Matrix::Zero(3, 3), 1), InvalidArgument);
}

TEST_CASE("Gram-Schmidt round trip reproduces the Poisson matrix") {
  RandomStream rng(2024);
  for (Eigen::Index n = 1; n <= 10; ++n) {
    const Matrix X = rng.normal_matrix(2 * n, 2 * n);
    const PoissonStructure s = PoissonStructure::from_poisson_matrix(0.5 * (X - X.transpose()));
    const DarbouxBasis b = symplectic_gram_schmidt(s.symplectic(), 300 + n);
    CAPTURE(n);
    CHECK(canonicality_residual(b, s.symplectic()) < 1e-9);
    CHECK(max_abs(poisson_from_basis(b) - s.poisson()) < 1e-9);
  }
}

TEST_CASE("closed-form bases") {
  SUBCASE("mass preconditioning with unit mass is the identity") {
    StructureVariant v = variant_of(VariantTag::MassPreconditioned);
    v.coupling = Matrix::Identity(2, 2);
    CHECK(max_abs(closed_form_basis(v, 2).basis() - Matrix::Identity(4, 4)) < 1e-15);
  }
  SUBCASE("magnetic position basis has half the skew block in the lower left") {
    StructureVariant v = variant_of(VariantTag::MagneticPosition);
    Matrix G(2, 2);
    G << 0, 1.5, -1.5, 0;
    v.skew = G;
    const DarbouxBasis b = closed_form_basis(v, 2);
    CHECK(b.basis().bottomLeftCorner(2, 2) == Matrix(G / 2.0));
    CHECK(b.basis().topLeftCorner(2, 2) == Matrix::Identity(2, 2));
    CHECK(b.basis().topRightCorner(2, 2).isZero(0.0));

    Matrix expected(4, 4);
    expected << Matrix::Zero(2, 2), Matrix::Identity(2, 2), -Matrix::Identity(2, 2), G;
    CHECK(max_abs(poisson_from_basis(b) - expected) < 1e-15);
    const PoissonStructure s = build_structure(v, 2, 0);
    CHECK(canonicality_residual(b, s.symplectic()) < 1e-12);
  }
  SUBCASE("preconditioned magnetic position basis is canonical") {
    RandomStream rng(8);
    StructureVariant v = variant_of(VariantTag::MagneticPositionPreconditioned);
    v.coupling = oracle::random_spd(3, rng);
    v.skew = oracle::random_skew(3, rng);
    const PoissonStructure s = build_structure(v, 3, 0);
    const DarbouxBasis b = closed_form_basis(v, 3);
    CHECK(canonicality_residual(b, s.symplectic()) < 1e-9);
  }
  SUBCASE("variants without a closed form are rejected") {
    CHECK_FALSE(has_closed_form_basis(VariantTag::CoupledMagnet));
    CHECK_THROWS_AS(closed_form_basis(variant_of(VariantTag::MagneticMomentum), 2),
                    InvalidArgument);
  }
}

TEST_CASE("identity basis gives the canonical matrix") {
  CHECK(poisson_from_basis(DarbouxBasis(Matrix::Identity(6, 6))) == canonical_symplectic(3));
}

TEST_CASE("Darboux bases from every path are canonical") {
  RandomStream rng(55);
  for (VariantTag tag : kAllTags) {
    for (Eigen::Index n = 1; n <= 5; ++n) {
      StructureVariant v = variant_of(tag);
      if (tag == VariantTag::MassPreconditioned ||
          tag == VariantTag::MagneticPositionPreconditioned)
        v.coupling = oracle::random_spd(n, rng);
      const PoissonStructure s = build_structure(v, n, 17);
      const DarbouxBasis b = darboux_basis_for(v, s, 17);
      CAPTURE(to_string(tag));
      CAPTURE(n);
      CHECK(canonicality_residual(b, s.symplectic()) < 1e-9);

      const DarbouxBasis r = time_reversal(b);
      CHECK(canonicality_residual(r, time_reversal(s).symplectic()) < 1e-9);
    }
  }
}

TEST_CASE("variant tags round trip through their names") {
  for (VariantTag tag : kAllTags) CHECK(parse_variant_tag(to_string(tag)) == tag);
  CHECK_THROWS_AS(parse_variant_tag("bogus"), InvalidArgument);
}
