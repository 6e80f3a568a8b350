#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "vstiff/error.hpp"
#include "vstiff/rational_tf.hpp"

namespace vstiff {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Strict stability margin: eigenvalues must satisfy Re(lambda) < -kStabilityMargin.
inline constexpr double kStabilityMargin = 1e-9;

/// Continuous-time LTI model x' = Ax + Bu, y = Cx + Du with named ports.
class StateSpaceModel {
 public:
  StateSpaceModel() = default;

  StateSpaceModel(Matrix a, Matrix b, Matrix c, Matrix d, std::vector<std::string> inputs,
                  std::vector<std::string> outputs)
      : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(d)),
        inputs_(std::move(inputs)), outputs_(std::move(outputs)) {
    const auto n = a_.rows();
    if (a_.cols() != n) throw InvalidArgument("StateSpaceModel: A must be square");
    if (b_.rows() != n || c_.cols() != n) throw InvalidArgument("StateSpaceModel: B/C state dimension mismatch");
    if (d_.rows() != c_.rows() || d_.cols() != b_.cols())
      throw InvalidArgument("StateSpaceModel: D dimension mismatch");
    if (static_cast<Eigen::Index>(inputs_.size()) != b_.cols() ||
        static_cast<Eigen::Index>(outputs_.size()) != c_.rows())
      throw InvalidArgument("StateSpaceModel: label count does not match port count");
    check_unique(inputs_, "input");
    check_unique(outputs_, "output");
  }

  /// Static multi-input multi-output gain block.
  static StateSpaceModel static_gain(Matrix d, std::vector<std::string> inputs, std::vector<std::string> outputs) {
    const auto p = d.rows();
    const auto m = d.cols();
    return StateSpaceModel(Matrix(0, 0), Matrix(0, m), Matrix(p, 0), std::move(d), std::move(inputs),
                           std::move(outputs));
  }

  const Matrix& a() const noexcept { return a_; }
  const Matrix& b() const noexcept { return b_; }
  const Matrix& c() const noexcept { return c_; }
  const Matrix& d() const noexcept { return d_; }
  const std::vector<std::string>& inputs() const noexcept { return inputs_; }
  const std::vector<std::string>& outputs() const noexcept { return outputs_; }
  Eigen::Index states() const noexcept { return a_.rows(); }

  Eigen::Index input_index(const std::string& name) const { return index_of(inputs_, name); }
  Eigen::Index output_index(const std::string& name) const { return index_of(outputs_, name); }

  /// Single-input single-output sub-channel, sharing the full state vector.
  StateSpaceModel channel(const std::string& in, const std::string& out) const {
    const auto i = input_index(in);
    const auto o = output_index(out);
    return StateSpaceModel(a_, b_.col(i), c_.row(o), d_.block(o, i, 1, 1), {in}, {out});
  }

  StateSpaceModel with_labels(std::vector<std::string> inputs, std::vector<std::string> outputs) const {
    return StateSpaceModel(a_, b_, c_, d_, std::move(inputs), std::move(outputs));
  }

  /// Full p x m frequency response at s = j*omega (dense solve; see FrequencyEvaluator for sweeps).
  CMatrix response(double omega) const {
    const auto n = states();
    CMatrix out = d_.cast<Complex>();
    if (n == 0) return out;
    CMatrix m = -a_.cast<Complex>();
    m.diagonal().array() += Complex{0.0, omega};
    Eigen::PartialPivLU<CMatrix> lu(m);
    out += c_.cast<Complex>() * lu.solve(b_.cast<Complex>());
    return out;
  }

 private:
  static void check_unique(const std::vector<std::string>& labels, const char* what) {
    std::set<std::string> seen;
    for (const auto& l : labels)
      if (!seen.insert(l).second)
        throw InvalidArgument(std::string("StateSpaceModel: duplicate ") + what + " label '" + l + "'");
  }
  static Eigen::Index index_of(const std::vector<std::string>& labels, const std::string& name) {
    auto it = std::find(labels.begin(), labels.end(), name);
    if (it == labels.end()) throw UnresolvedSignal(name);
    return static_cast<Eigen::Index>(it - labels.begin());
  }

  Matrix a_{0, 0}, b_{0, 0}, c_{0, 0}, d_{0, 0};
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
};

/// Controllable canonical realization of a proper transfer function.
inline StateSpaceModel tf_to_ss(const RationalTF& tf, const std::string& input = "in",
                                const std::string& output = "out") {
  const auto& den = tf.den();
  const std::size_t n = tf.order();
  if (tf.num().size() > den.size()) throw ImproperSystem("tf_to_ss: improper transfer function");
  const auto num = poly::pad(tf.num(), n + 1);
  const double d0 = num[0];
  Matrix a = Matrix::Zero(n, n);
  Matrix b = Matrix::Zero(n, 1);
  Matrix c = Matrix::Zero(1, n);
  Matrix d = Matrix::Constant(1, 1, d0);
  if (n > 0) {
    for (std::size_t j = 0; j < n; ++j) {
      a(0, j) = -den[j + 1];
      c(0, j) = num[j + 1] - d0 * den[j + 1];
    }
    for (std::size_t i = 1; i < n; ++i) a(i, i - 1) = 1.0;
    b(0, 0) = 1.0;
  }
  return StateSpaceModel(std::move(a), std::move(b), std::move(c), std::move(d), {input}, {output});
}

struct StabilityResult {
  bool stable = true;
  double abscissa = -std::numeric_limits<double>::infinity();
};

inline Eigen::VectorXcd eigenvalues(const Matrix& a) {
  if (a.rows() == 0) return {};
  Eigen::EigenSolver<Matrix> solver(a, false);
  if (solver.info() != Eigen::Success) throw EigenFailure("eigenvalue iteration did not converge");
  return solver.eigenvalues();
}

inline StabilityResult is_stable(const StateSpaceModel& sys) {
  StabilityResult r;
  if (sys.states() == 0) return r;
  r.abscissa = eigenvalues(sys.a()).real().maxCoeff();
  r.stable = r.abscissa < -kStabilityMargin;
  return r;
}

namespace detail {

/// Orthonormal basis of the Krylov space span{v, Av, A^2 v, ...} (Arnoldi with
/// reorthogonalization); stops when the new direction falls below tolerance.
inline Matrix krylov_basis(const Matrix& a, const Vector& v) {
  const auto n = a.rows();
  const double scale = std::max(1.0, a.norm());
  std::vector<Vector> basis;
  Vector q = v;
  double norm = q.norm();
  if (norm <= 1e-12 * std::max(1.0, v.norm())) return Matrix(n, 0);
  q /= norm;
  basis.push_back(q);
  while (static_cast<Eigen::Index>(basis.size()) < n) {
    Vector next = a * basis.back();
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) next -= b.dot(next) * b;
    norm = next.norm();
    if (norm <= 1e-10 * scale) break;
    basis.push_back(next / norm);
  }
  Matrix out(n, static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = basis[k];
  return out;
}

}  // namespace detail

/// Minimal realization of a SISO channel: projects onto the controllable subspace,
/// then onto the observable part of that.
inline StateSpaceModel minimal_siso(const StateSpaceModel& siso) {
  if (siso.inputs().size() != 1 || siso.outputs().size() != 1)
    throw InvalidArgument("minimal_siso: SISO channel required");
  if (siso.states() == 0) return siso;
  const Matrix vc = detail::krylov_basis(siso.a(), siso.b().col(0));
  const Matrix ac = vc.transpose() * siso.a() * vc;
  const Matrix bc = vc.transpose() * siso.b();
  const Matrix cc = siso.c() * vc;
  if (ac.rows() == 0)
    return StateSpaceModel(Matrix(0, 0), Matrix(0, 1), Matrix(1, 0), siso.d(), siso.inputs(), siso.outputs());
  const Matrix wo = detail::krylov_basis(ac.transpose(), cc.row(0).transpose());
  return StateSpaceModel(wo.transpose() * ac * wo, wo.transpose() * bc, cc * wo, siso.d(), siso.inputs(),
                         siso.outputs());
}

/// Stability of the modes a SISO channel actually exhibits (hidden modes ignored).
inline StabilityResult channel_stability(const StateSpaceModel& siso) { return is_stable(minimal_siso(siso)); }

/// Fast SISO frequency-response evaluation for sweeps: A is reduced once to upper
/// Hessenberg form, so each frequency costs one O(n^2) banded solve.
/// Holds mutable scratch space: use one instance per thread.
class FrequencyEvaluator {
 public:
  explicit FrequencyEvaluator(const StateSpaceModel& siso) : d_(siso.d()(0, 0)) {
    if (siso.inputs().size() != 1 || siso.outputs().size() != 1)
      throw InvalidArgument("FrequencyEvaluator: SISO channel required");
    n_ = siso.states();
    if (n_ == 0) return;
    Eigen::HessenbergDecomposition<Matrix> hd(siso.a());
    h_ = hd.matrixH();
    const Matrix q = hd.matrixQ();
    b_ = q.transpose() * siso.b().col(0);
    c_ = (siso.c().row(0) * q).transpose();
    work_.resize(n_, n_);
    rhs_.resize(n_);
  }

  Complex operator()(double omega) const {
    if (n_ == 0) return {d_, 0.0};
    // (j*omega I - H) z = b with Hessenberg LU and adjacent-row pivoting.
    for (Eigen::Index i = 0; i < n_; ++i) {
      for (Eigen::Index j = 0; j < n_; ++j) work_(i, j) = -h_(i, j);
      work_(i, i) += Complex{0.0, omega};
      rhs_(i) = b_(i);
    }
    for (Eigen::Index k = 0; k + 1 < n_; ++k) {
      if (std::abs(work_(k + 1, k)) > std::abs(work_(k, k))) {
        work_.row(k).swap(work_.row(k + 1));
        std::swap(rhs_(k), rhs_(k + 1));
      }
      const Complex piv = work_(k, k);
      if (piv == Complex{0.0, 0.0}) throw OnAxisPole(omega);
      const Complex f = work_(k + 1, k) / piv;
      if (f != Complex{0.0, 0.0}) {
        for (Eigen::Index j = k; j < n_; ++j) work_(k + 1, j) -= f * work_(k, j);
        rhs_(k + 1) -= f * rhs_(k);
      }
    }
    Complex acc = d_;
    for (Eigen::Index i = n_ - 1; i >= 0; --i) {
      Complex s = rhs_(i);
      for (Eigen::Index j = i + 1; j < n_; ++j) s -= work_(i, j) * rhs_(j);
      if (work_(i, i) == Complex{0.0, 0.0}) throw OnAxisPole(omega);
      rhs_(i) = s / work_(i, i);
      acc += c_(i) * rhs_(i);
    }
    return acc;
  }

 private:
  Eigen::Index n_ = 0;
  Matrix h_;
  Vector b_;
  Vector c_;
  double d_;
  mutable CMatrix work_;
  mutable CVector rhs_;
};

}  // namespace vstiff
