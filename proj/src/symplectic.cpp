#include "nchmc/symplectic.hpp"

#include "nchmc/rng.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace nchmc {

namespace {

bool is_skew(const Matrix& m) { return max_abs(m + m.transpose()) < kSkewTolerance; }

void require_square(const Matrix& m, Eigen::Index n, const char* name) {
  if (m.rows() != n || m.cols() != n) {
    std::ostringstream os;
    os << "block " << name << " must be " << n << "x" << n << ", got "
       << m.rows() << "x" << m.cols();
    throw InvalidArgument(os.str());
  }
}

void require_symmetric_positive_definite(const Matrix& M) {
  if (max_abs(M - M.transpose()) > 1e-12 * std::max(1.0, max_abs(M)))
    throw InvalidArgument("mass matrix must be symmetric");
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success)
    throw InvalidArgument("mass matrix must be positive definite");
}

Matrix coupling_or_identity(const StructureVariant& v, Eigen::Index n) {
  if (v.coupling) {
    require_square(*v.coupling, n, "A");
    return *v.coupling;
  }
  return Matrix::Identity(n, n);
}

Matrix skew_block(const StructureVariant& v, Eigen::Index n, std::uint64_t seed) {
  if (v.skew) {
    require_square(*v.skew, n, "skew");
    if (!is_skew(*v.skew))
      throw InvalidArgument("user-supplied skew block is not skew-symmetric");
    return *v.skew;
  }
  if (v.skew_divisor < 1)
    throw InvalidArgument("skew divisor k must be a positive integer");
  return random_skew_block(n, v.skew_divisor, seed);
}

Matrix reversal_sign(Eigen::Index n) {
  Vector d(2 * n);
  d.head(n).setOnes();
  d.tail(n).setConstant(-1.0);
  return d.asDiagonal();
}

}  // namespace

Matrix canonical_symplectic(Eigen::Index n) {
  if (n < 1) throw InvalidArgument("canonical_symplectic: dimension must be >= 1");
  Matrix J = Matrix::Zero(2 * n, 2 * n);
  J.topRightCorner(n, n).setIdentity();
  J.bottomLeftCorner(n, n) = -Matrix::Identity(n, n);
  return J;
}

double max_abs(const Eigen::Ref<const Matrix>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

double condition_number(const Eigen::Ref<const Matrix>& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  const double smallest = s(s.size() - 1);
  if (smallest == 0.0 || !std::isfinite(smallest))
    return std::numeric_limits<double>::infinity();
  return s(0) / smallest;
}

PoissonStructure::PoissonStructure(Matrix E, Matrix A, Matrix G)
    : E_(std::move(E)), A_(std::move(A)), G_(std::move(G)) {
  const Eigen::Index n = A_.rows();
  if (n < 1) throw InvalidArgument("Poisson structure dimension must be >= 1");
  require_square(A_, n, "A");
  require_square(E_, n, "E");
  require_square(G_, n, "G");
  if (!is_skew(E_)) throw InvalidArgument("block E is not skew-symmetric");
  if (!is_skew(G_)) throw InvalidArgument("block G is not skew-symmetric");

  B_.resize(2 * n, 2 * n);
  B_ << E_, A_, -A_.transpose(), G_;

  condition_ = condition_number(B_);
  if (!(condition_ <= kMaxCondition)) {
    std::ostringstream os;
    os << "degenerate Poisson structure: condition number " << condition_
       << " exceeds " << kMaxCondition;
    throw DegenerateStructure(os.str(), condition_);
  }
  Matrix inv = B_.fullPivLu().inverse();
  J_ = -0.5 * (inv - inv.transpose());
  const double residual =
      max_abs(J_ * (-B_) - Matrix::Identity(2 * n, 2 * n));
  if (residual > kInverseTolerance) {
    std::ostringstream os;
    os << "Poisson structure inverse residual " << residual
       << " (condition number " << condition_ << ")";
    throw DegenerateStructure(os.str(), condition_);
  }
}

PoissonStructure PoissonStructure::from_poisson_matrix(const Matrix& B) {
  if (B.rows() != B.cols() || B.rows() % 2 != 0 || B.rows() == 0)
    throw InvalidArgument("Poisson matrix must be square with even, positive size");
  if (!is_skew(B)) throw InvalidArgument("Poisson matrix is not skew-symmetric");
  const Eigen::Index n = B.rows() / 2;
  return PoissonStructure(B.topLeftCorner(n, n), B.topRightCorner(n, n),
                          B.bottomRightCorner(n, n));
}

bool PoissonStructure::separable_blocks() const {
  return max_abs(E_) == 0.0 && max_abs(G_) == 0.0;
}

bool PoissonStructure::operator==(const PoissonStructure& other) const {
  return dim() == other.dim() && E_ == other.E_ && A_ == other.A_ &&
         G_ == other.G_;
}

PoissonStructure time_reversal(const PoissonStructure& s) {
  return PoissonStructure(-s.E(), s.A(), -s.G());
}

std::string_view to_string(VariantTag tag) {
  switch (tag) {
    case VariantTag::Canonical: return "canonical";
    case VariantTag::MagneticPosition: return "magnetic-position";
    case VariantTag::MagneticMomentum: return "magnetic-momentum";
    case VariantTag::CoupledMagnet: return "coupled-magnet";
    case VariantTag::MassPreconditioned: return "mass-preconditioned";
    case VariantTag::MagneticPositionPreconditioned:
      return "magnetic-position-preconditioned";
  }
  return "unknown";
}

VariantTag parse_variant_tag(std::string_view name) {
  for (auto tag : {VariantTag::Canonical, VariantTag::MagneticPosition,
                   VariantTag::MagneticMomentum, VariantTag::CoupledMagnet,
                   VariantTag::MassPreconditioned,
                   VariantTag::MagneticPositionPreconditioned}) {
    if (to_string(tag) == name) return tag;
  }
  throw InvalidArgument("unknown structure variant '" + std::string(name) + "'");
}

bool StructureVariant::uses_skew_block() const {
  return tag == VariantTag::MagneticPosition ||
         tag == VariantTag::MagneticMomentum ||
         tag == VariantTag::CoupledMagnet ||
         tag == VariantTag::MagneticPositionPreconditioned;
}

Matrix random_skew_block(Eigen::Index n, int divisor, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("random_skew_block: dimension must be >= 1");
  if (divisor < 1) throw InvalidArgument("skew divisor k must be a positive integer");
  RandomStream stream(seed);
  const Matrix X = stream.normal_matrix(n, n);
  return (X - X.transpose()) / static_cast<double>(divisor);
}

PoissonStructure build_structure(const StructureVariant& variant,
                                 Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("build_structure: dimension must be >= 1");
  const Matrix A = coupling_or_identity(variant, n);
  const Matrix zero = Matrix::Zero(n, n);
  switch (variant.tag) {
    case VariantTag::Canonical:
      return PoissonStructure(zero, A, zero);
    case VariantTag::MassPreconditioned:
      require_symmetric_positive_definite(A);
      return PoissonStructure(zero, A, zero);
    case VariantTag::MagneticPosition:
      return PoissonStructure(zero, A, skew_block(variant, n, seed));
    case VariantTag::MagneticPositionPreconditioned:
      require_symmetric_positive_definite(A);
      return PoissonStructure(zero, A, skew_block(variant, n, seed));
    case VariantTag::MagneticMomentum:
      return PoissonStructure(skew_block(variant, n, seed), A, zero);
    case VariantTag::CoupledMagnet: {
      Matrix H = skew_block(variant, n, seed);
      return PoissonStructure(H, A, H);
    }
  }
  throw InvalidArgument("unhandled structure variant");
}

DarbouxBasis::DarbouxBasis(Matrix basis) : basis_(std::move(basis)) {
  if (basis_.rows() != basis_.cols() || basis_.rows() % 2 != 0 || basis_.rows() == 0)
    throw InvalidArgument("Darboux basis must be square with even, positive size");
  const double cond = condition_number(basis_);
  if (!(cond <= kMaxCondition)) {
    std::ostringstream os;
    os << "Darboux basis is ill-conditioned (condition number " << cond << ")";
    throw DegenerateStructure(os.str(), cond);
  }
  change_ = basis_.fullPivLu().inverse();
}

DarbouxBasis::DarbouxBasis(Matrix basis, Matrix change)
    : basis_(std::move(basis)), change_(std::move(change)) {
  if (basis_.rows() != basis_.cols() || basis_.rows() % 2 != 0 ||
      change_.rows() != basis_.rows() || change_.cols() != basis_.cols())
    throw InvalidArgument("Darboux basis and change of basis must be matching square matrices");
}

double canonicality_residual(const DarbouxBasis& basis, const Matrix& J) {
  return max_abs(basis.basis().transpose() * J * basis.basis() -
                 canonical_symplectic(basis.dim()));
}

namespace {

// One pass of the randomized procedure; returns the interleaved basis.
Matrix gram_schmidt_once(const Matrix& J, RandomStream& stream) {
  const Eigen::Index dim = J.rows();
  const Eigen::Index n = dim / 2;
  Matrix pairs(dim, 2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    bool paired = false;
    for (int attempt = 0; attempt < kMaxPairingRedraws && !paired; ++attempt) {
      Vector w = stream.normal_vector(dim);
      Vector v = stream.normal_vector(dim);
      if (i > 0) {
        const Matrix K = J * pairs.leftCols(2 * i);
        Eigen::HouseholderQR<Matrix> qr(K);
        const Matrix Q = qr.householderQ() * Matrix::Identity(dim, 2 * i);
        v -= Q * (Q.transpose() * v);
        w -= Q * (Q.transpose() * w);
      }
      const double O = v.dot(J * w);
      if (!(std::abs(O) >= kMinPairing)) continue;
      const double scale = 1.0 / std::sqrt(std::abs(O));
      pairs.col(2 * i) = v * (O > 0 ? scale : -scale);
      pairs.col(2 * i + 1) = w * scale;
      paired = true;
    }
    if (!paired) {
      throw DegenerateStructure(
          "symplectic Gram-Schmidt: no non-degenerate pairing after " +
              std::to_string(kMaxPairingRedraws) + " redraws",
          std::numeric_limits<double>::infinity());
    }
  }
  // Permutation {0, 2, ..., 2n-2, 1, 3, ..., 2n-1}.
  Matrix basis(dim, dim);
  for (Eigen::Index j = 0; j < n; ++j) {
    basis.col(j) = pairs.col(2 * j);
    basis.col(n + j) = pairs.col(2 * j + 1);
  }
  return basis;
}

}  // namespace

DarbouxBasis symplectic_gram_schmidt(const Matrix& J, std::uint64_t seed,
                                     int restarts) {
  if (J.rows() != J.cols() || J.rows() % 2 != 0 || J.rows() == 0)
    throw InvalidArgument("symplectic matrix must be square with even, positive size");
  if (!is_skew(J)) throw InvalidArgument("symplectic matrix is not skew-symmetric");
  if (restarts < 1) throw InvalidArgument("restarts must be >= 1");
  const double cond = condition_number(J);
  if (!(cond <= kMaxCondition)) {
    throw DegenerateStructure("symplectic matrix is singular or ill-conditioned",
                              cond);
  }

  Matrix best;
  double best_norm = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    RandomStream stream = RandomStream::substream(seed, static_cast<std::uint64_t>(r));
    Matrix candidate = gram_schmidt_once(J, stream);
    const double norm = candidate.norm();
    if (norm < best_norm) {
      best_norm = norm;
      best = std::move(candidate);
    }
  }
  return DarbouxBasis(std::move(best));
}

bool has_closed_form_basis(VariantTag tag) {
  return tag == VariantTag::MassPreconditioned ||
         tag == VariantTag::MagneticPosition ||
         tag == VariantTag::MagneticPositionPreconditioned;
}

Matrix spd_sqrt(const Matrix& M) {
  if (M.rows() != M.cols()) throw InvalidArgument("spd_sqrt: matrix must be square");
  const Matrix S = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
  if (eig.info() != Eigen::Success)
    throw InvalidArgument("spd_sqrt: eigendecomposition failed");
  const Vector& lambda = eig.eigenvalues();
  if (!(lambda.minCoeff() > 0.0))
    throw InvalidArgument("matrix is not positive definite");
  if (lambda.maxCoeff() / lambda.minCoeff() > kMaxCondition)
    throw DegenerateStructure("spd_sqrt: condition number exceeds guard",
                              lambda.maxCoeff() / lambda.minCoeff());
  const Matrix& V = eig.eigenvectors();
  return V * lambda.cwiseSqrt().asDiagonal() * V.transpose();
}

DarbouxBasis closed_form_basis(const StructureVariant& variant, Eigen::Index n,
                               std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("closed_form_basis: dimension must be >= 1");
  const Matrix I = Matrix::Identity(n, n);
  switch (variant.tag) {
    case VariantTag::MassPreconditioned: {
      const Matrix M = coupling_or_identity(variant, n);
      require_symmetric_positive_definite(M);
      const Matrix L = spd_sqrt(M);
      Matrix basis = Matrix::Zero(2 * n, 2 * n);
      basis.topLeftCorner(n, n) = L;
      basis.bottomRightCorner(n, n) = L;
      return DarbouxBasis(std::move(basis));
    }
    case VariantTag::MagneticPosition: {
      if (variant.coupling && max_abs(*variant.coupling - I) != 0.0)
        throw InvalidArgument(
            "closed-form magnetic position basis requires A = Id; use the "
            "preconditioned variant");
      const Matrix G = skew_block(variant, n, seed);
      Matrix basis = Matrix::Identity(2 * n, 2 * n);
      basis.bottomLeftCorner(n, n) = G / 2.0;
      return DarbouxBasis(std::move(basis));
    }
    case VariantTag::MagneticPositionPreconditioned: {
      const Matrix M = coupling_or_identity(variant, n);
      require_symmetric_positive_definite(M);
      const Matrix G = skew_block(variant, n, seed);
      const Matrix L = spd_sqrt(M);
      const Matrix Linv = L.inverse();
      const Matrix Q = Linv.transpose() * G * Linv / 2.0;
      Matrix scale = Matrix::Zero(2 * n, 2 * n);
      scale.topLeftCorner(n, n) = L;
      scale.bottomRightCorner(n, n) = L;
      Matrix shear = Matrix::Identity(2 * n, 2 * n);
      shear.bottomLeftCorner(n, n) = Q;
      return DarbouxBasis(scale * shear);
    }
    default:
      throw InvalidArgument("no closed-form Darboux basis for variant '" +
                            std::string(to_string(variant.tag)) +
                            "'; use symplectic Gram-Schmidt");
  }
}

DarbouxBasis darboux_basis_for(const StructureVariant& variant,
                               const PoissonStructure& structure,
                               std::uint64_t seed, int restarts) {
  const bool identity_coupling =
      max_abs(structure.A() - Matrix::Identity(structure.dim(), structure.dim())) == 0.0;
  if (variant.tag == VariantTag::MassPreconditioned ||
      variant.tag == VariantTag::MagneticPositionPreconditioned ||
      (variant.tag == VariantTag::MagneticPosition && identity_coupling)) {
    return closed_form_basis(variant, structure.dim(), seed);
  }
  if (variant.tag == VariantTag::Canonical) {
    if (identity_coupling) {
      const Eigen::Index dim = 2 * structure.dim();
      return DarbouxBasis(Matrix::Identity(dim, dim), Matrix::Identity(dim, dim));
    }
    const Matrix& A = structure.A();
    if (max_abs(A - A.transpose()) == 0.0 && Eigen::LLT<Matrix>(A).info() == Eigen::Success) {
      StructureVariant mass{VariantTag::MassPreconditioned, A, std::nullopt,
                            variant.skew_divisor};
      return closed_form_basis(mass, structure.dim(), seed);
    }
  }
  return symplectic_gram_schmidt(structure.symplectic(), seed, restarts);
}

Matrix poisson_from_basis(const DarbouxBasis& basis) {
  return basis.basis() * canonical_symplectic(basis.dim()) *
         basis.basis().transpose();
}

DarbouxBasis time_reversal(const DarbouxBasis& basis) {
  const Matrix P = reversal_sign(basis.dim());
  return DarbouxBasis(P * basis.basis() * P, P * basis.change() * P);
}

}  // namespace nchmc
