#ifndef NCHMC_SYMPLECTIC_HPP
#define NCHMC_SYMPLECTIC_HPP

#include "nchmc/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace nchmc {

inline constexpr double kSkewTolerance = 1e-12;
inline constexpr double kMaxCondition = 1e12;
inline constexpr double kInverseTolerance = 1e-10;
inline constexpr int kDefaultGramSchmidtRestarts = 8;
inline constexpr int kMaxPairingRedraws = 100;
inline constexpr double kMinPairing = 1e-12;

/// [[0, Id], [-Id, 0]] of size 2n x 2n.
Matrix canonical_symplectic(Eigen::Index n);

double max_abs(const Eigen::Ref<const Matrix>& m);

/// 2-norm condition number from the singular values; +inf for singular input.
double condition_number(const Eigen::Ref<const Matrix>& m);

/// Constant Poisson structure on R^{2n}.
///
/// The Poisson matrix is assembled from its blocks as
///
///     B = [[ E,   A ],
///          [ -A^T, G ]]
///
/// with E and G skew-symmetric, and the symplectic matrix is J = -B^{-1}.
/// Hamilton's equations read dz/dt = B * DH(z). Construction validates
/// skew-symmetry and rejects structures whose condition number exceeds
/// kMaxCondition.
class PoissonStructure {
 public:
  PoissonStructure(Matrix E, Matrix A, Matrix G);

  /// Splits a full 2n x 2n skew matrix into its blocks.
  static PoissonStructure from_poisson_matrix(const Matrix& B);

  Eigen::Index dim() const { return A_.rows(); }
  const Matrix& E() const { return E_; }
  const Matrix& A() const { return A_; }
  const Matrix& G() const { return G_; }
  const Matrix& poisson() const { return B_; }
  const Matrix& symplectic() const { return J_; }
  double condition() const { return condition_; }

  /// True when E = G = 0, i.e. the dynamics are canonical up to the coupling A.
  bool separable_blocks() const;

  bool operator==(const PoissonStructure& other) const;

 private:
  Matrix E_, A_, G_;
  Matrix B_, J_;
  double condition_ = 1.0;
};

/// Blocks (-E, A, -G): integrating this structure from (q, -p) retraces the
/// original dynamics backwards.
PoissonStructure time_reversal(const PoissonStructure& s);

enum class VariantTag {
  Canonical,
  MagneticPosition,
  MagneticMomentum,
  CoupledMagnet,
  MassPreconditioned,
  MagneticPositionPreconditioned,
};

std::string_view to_string(VariantTag tag);
VariantTag parse_variant_tag(std::string_view name);

/// Recipe for one of the supported Poisson structures.
///
/// `coupling` is the A block (the mass matrix M for the preconditioned
/// variants) and defaults to the identity. `skew` is the user-supplied E/G/H
/// block; when absent it is drawn as a standard normal matrix from the
/// build seed and skew-symmetrized as (X - X^T) / skew_divisor.
struct StructureVariant {
  VariantTag tag = VariantTag::Canonical;
  std::optional<Matrix> coupling;
  std::optional<Matrix> skew;
  int skew_divisor = 2;

  bool uses_skew_block() const;
};

/// Skew-symmetrized standard normal n x n block, (X - X^T) / divisor, drawn
/// from the stream for `seed`.
Matrix random_skew_block(Eigen::Index n, int divisor, std::uint64_t seed);

PoissonStructure build_structure(const StructureVariant& variant,
                                 Eigen::Index n, std::uint64_t seed);

/// Pair of mutually inverse matrices putting a symplectic matrix into
/// canonical form: basis^T J basis = J_can. Columns of `basis` are the
/// symplectic basis vectors, positions first.
class DarbouxBasis {
 public:
  /// Computes the change of basis by LU; rejects ill-conditioned input.
  explicit DarbouxBasis(Matrix basis);
  DarbouxBasis(Matrix basis, Matrix change);

  Eigen::Index dim() const { return basis_.rows() / 2; }
  const Matrix& basis() const { return basis_; }
  const Matrix& change() const { return change_; }

  Vector to_canonical(const Vector& z) const { return change_ * z; }
  Vector from_canonical(const Vector& zt) const { return basis_ * zt; }

 private:
  Matrix basis_;
  Matrix change_;
};

/// max |basis^T J basis - J_can|.
double canonicality_residual(const DarbouxBasis& basis, const Matrix& J);

/// Randomized symplectic Gram-Schmidt. Each restart draws pairs (w, v),
/// projects them onto the orthogonal complement of span(J * basis so far),
/// normalizes so that v^T J w = 1 and appends them; columns are finally
/// interleaved into (positions, momenta). The restart with the smallest
/// Frobenius norm wins.
DarbouxBasis symplectic_gram_schmidt(
    const Matrix& J, std::uint64_t seed,
    int restarts = kDefaultGramSchmidtRestarts);

bool has_closed_form_basis(VariantTag tag);

/// Symplectic basis by inspection for mass preconditioning, magnetic position
/// (A = Id) and preconditioned magnetic position. Any random skew block is
/// drawn exactly as build_structure would for the same seed.
DarbouxBasis closed_form_basis(const StructureVariant& variant,
                               Eigen::Index n, std::uint64_t seed = 0);

/// Closed form when available, Gram-Schmidt otherwise.
DarbouxBasis darboux_basis_for(const StructureVariant& variant,
                               const PoissonStructure& structure,
                               std::uint64_t seed,
                               int restarts = kDefaultGramSchmidtRestarts);

/// basis * J_can * basis^T, the Poisson matrix the basis canonicalizes.
Matrix poisson_from_basis(const DarbouxBasis& basis);

/// Basis of the time-reversal structure: with P = diag(Id, -Id) it is
/// P * basis * P, since -P B P is the reversed Poisson matrix and
/// P J_can P = -J_can.
DarbouxBasis time_reversal(const DarbouxBasis& basis);

/// Symmetric positive-definite square root via eigendecomposition.
Matrix spd_sqrt(const Matrix& M);

}  // namespace nchmc

#endif  // NCHMC_SYMPLECTIC_HPP
