// Dense convex quadratic programs
//
//   minimize  1/2 z'Pz + q'z   subject to  Gz <= h,   P symmetric PSD,
//
// solved on a Ruiz-equilibrated copy, by default with a primal-dual
// interior-point method (Mehrotra predictor-corrector). An operator-splitting
// (ADMM) iteration takes over for warm starts and for problems the
// interior-point phase cannot decide. An active-set polish backs up both.
// Every `Optimal` return is certified against the unscaled problem:
//
//   primal_residual         = max_i max(0, (Gz - h)_i) / (1 + |h|_inf)
//   dual_residual           = |Pz + q + G'y|_inf / (1 + max(|Pz|, |q|, |G'y|)_inf)
//   complementarity_residual = max_i |min(y_i / (1 + |y|_inf), (h - Gz)_i / (1 + |h|_inf))|
//
// all three <= tol.
#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <type_traits>
#include <stdexcept>
#include <string>
#include <vector>

namespace aim::qp {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct QuadraticProgram {
  MatrixX<Scalar> P;
  VectorX<Scalar> q;
  MatrixX<Scalar> G;
  VectorX<Scalar> h;

  Eigen::Index num_variables() const { return q.size(); }
  Eigen::Index num_constraints() const { return h.size(); }
  Scalar objective(const VectorX<Scalar>& z) const { return Scalar(0.5) * z.dot(P * z) + q.dot(z); }
};

enum class Status { Optimal, PrimalInfeasible, Unbounded, IterationLimit };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::PrimalInfeasible: return "primal_infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::IterationLimit: return "iteration_limit";
  }
  return "?";
}

enum class ConvexityCheck { Eigenvalues, None };
enum class Algorithm { InteriorPoint, Admm };

template <typename Scalar>
struct Settings {
  Scalar tol = Scalar(1e-6);
  int max_iter = 20000;  // ADMM iterations
  int ipm_max_iter = 100;
  Scalar rho = Scalar(0.1);
  Scalar sigma = Scalar(1e-6);
  Scalar alpha = Scalar(1.6);
  int scaling_iterations = 10;
  ConvexityCheck convexity = ConvexityCheck::Eigenvalues;
  Algorithm algorithm = Algorithm::InteriorPoint;
};

template <typename Scalar>
struct Residuals {
  Scalar primal{0};
  Scalar dual{0};
  Scalar complementarity{0};

  bool within(Scalar tol) const { return primal <= tol && dual <= tol && complementarity <= tol; }
};

template <typename Scalar>
struct Solution {
  VectorX<Scalar> z;
  VectorX<Scalar> y; // multipliers of Gz <= h
  Status status = Status::IterationLimit;
  Scalar primal_residual{0};
  Scalar dual_residual{0};
  Scalar complementarity_residual{0};
  Scalar objective{0};
  int iterations = 0;
  bool polished = false;
  /// For PrimalInfeasible: y >= 0 with G'y ~ 0 and h'y < 0 (Farkas certificate).
  VectorX<Scalar> certificate;
};

template <typename Scalar>
struct WarmStart {
  VectorX<Scalar> z;
  VectorX<Scalar> y;
};

/// KKT residuals of (z, y) for the unscaled problem, as defined above.
template <typename Scalar>
Residuals<Scalar> kkt_residuals(const QuadraticProgram<Scalar>& qp, const VectorX<Scalar>& z,
                                const VectorX<Scalar>& y) {
  Residuals<Scalar> r;
  const VectorX<Scalar> Pz = qp.P * z;
  VectorX<Scalar> Gty = VectorX<Scalar>::Zero(z.size());
  const Scalar h_norm = qp.h.size() ? qp.h.template lpNorm<Eigen::Infinity>() : Scalar(0);
  const Scalar y_norm = y.size() ? y.template lpNorm<Eigen::Infinity>() : Scalar(0);
  if (qp.h.size()) {
    Gty = qp.G.transpose() * y;
    const VectorX<Scalar> slack = qp.h - qp.G * z;
    r.primal = std::max(Scalar(0), -slack.minCoeff()) / (Scalar(1) + h_norm);
    for (Eigen::Index i = 0; i < slack.size(); ++i) {
      const Scalar m = std::min(y(i) / (Scalar(1) + y_norm), slack(i) / (Scalar(1) + h_norm));
      r.complementarity = std::max(r.complementarity, std::abs(m));
    }
  }
  const Scalar scale = Scalar(1) + std::max({Pz.template lpNorm<Eigen::Infinity>(),
                                             qp.q.template lpNorm<Eigen::Infinity>(),
                                             Gty.template lpNorm<Eigen::Infinity>()});
  r.dual = (Pz + qp.q + Gty).template lpNorm<Eigen::Infinity>() / scale;
  return r;
}

/// Throws std::invalid_argument on inconsistent sizes, asymmetric P, or
/// (with ConvexityCheck::Eigenvalues) an eigenvalue of P below -1e-8.
template <typename Scalar>
void validate(const QuadraticProgram<Scalar>& qp, ConvexityCheck convexity = ConvexityCheck::Eigenvalues) {
  const auto n = qp.q.size();
  if (n < 1) throw std::invalid_argument("QP needs at least one variable");
  if (qp.P.rows() != n || qp.P.cols() != n) throw std::invalid_argument("P must be n x n");
  if (qp.G.rows() != qp.h.size() || (qp.h.size() > 0 && qp.G.cols() != n))
    throw std::invalid_argument("G must be m x n with m = size(h)");
  if ((qp.P - qp.P.transpose()).template lpNorm<Eigen::Infinity>() >= Scalar(1e-9))
    throw std::invalid_argument("P is not symmetric");
  if (!qp.P.allFinite() || !qp.q.allFinite() || !qp.G.allFinite() || !qp.h.allFinite())
    throw std::invalid_argument("QP data must be finite");
  if (convexity == ConvexityCheck::Eigenvalues) {
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(qp.P, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < Scalar(-1e-8))
      throw std::invalid_argument("P is not positive semidefinite (min eigenvalue " +
                                  std::to_string(static_cast<double>(eig.eigenvalues().minCoeff())) + ")");
  }
}

namespace detail {

template <typename Scalar>
using SparseRows = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

/// Equilibrated copy: Pbar = c D P D, qbar = c D q, Gbar = E G D, hbar = E h.
/// Original variables: z = D zbar, y = E ybar / c.
template <typename Scalar>
using SparseCols = Eigen::SparseMatrix<Scalar>;

template <typename Scalar>
struct Scaled {
  SparseCols<Scalar> P;
  VectorX<Scalar> q;
  SparseRows<Scalar> G;
  VectorX<Scalar> h;
  VectorX<Scalar> D;
  VectorX<Scalar> E;
  Scalar c{1};
};

template <typename Scalar>
Scaled<Scalar> equilibrate(const QuadraticProgram<Scalar>& qp, int iterations) {
  Scaled<Scalar> s;
  const auto n = qp.q.size();
  const auto m = qp.h.size();
  s.P = qp.P.sparseView(Scalar(0), Scalar(1));
  s.P.makeCompressed();
  s.q = qp.q;
  s.G = qp.G.sparseView(Scalar(0), Scalar(1));
  s.G.makeCompressed();
  s.h = qp.h;
  s.D = VectorX<Scalar>::Ones(n);
  s.E = VectorX<Scalar>::Ones(m);

  auto safe_inv_sqrt = [](Scalar v) {
    if (v < Scalar(1e-4)) return Scalar(1);
    return Scalar(1) / std::sqrt(std::min(v, Scalar(1e4)));
  };

  for (int it = 0; it < iterations; ++it) {
    VectorX<Scalar> col = VectorX<Scalar>::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (typename SparseCols<Scalar>::InnerIterator e(s.P, j); e; ++e)
        col(j) = std::max(col(j), std::abs(e.value()));
    VectorX<Scalar> row = VectorX<Scalar>::Zero(m);
    for (Eigen::Index i = 0; i < s.G.outerSize(); ++i)
      for (typename SparseRows<Scalar>::InnerIterator e(s.G, i); e; ++e) {
        col(e.col()) = std::max(col(e.col()), std::abs(e.value()));
        row(i) = std::max(row(i), std::abs(e.value()));
      }
    VectorX<Scalar> dcol(n), drow(m);
    for (Eigen::Index j = 0; j < n; ++j) dcol(j) = safe_inv_sqrt(col(j));
    for (Eigen::Index i = 0; i < m; ++i) drow(i) = safe_inv_sqrt(row(i));

    for (Eigen::Index j = 0; j < n; ++j)
      for (typename SparseCols<Scalar>::InnerIterator e(s.P, j); e; ++e) e.valueRef() *= dcol(e.row()) * dcol(j);
    s.q = dcol.cwiseProduct(s.q);
    const auto* outer = s.G.outerIndexPtr();
    const auto* inner = s.G.innerIndexPtr();
    Scalar* val = s.G.valuePtr();
    for (Eigen::Index i = 0; i < m; ++i)
      for (auto a = outer[i]; a < outer[i + 1]; ++a) val[a] *= drow(i) * dcol(inner[a]);
    s.h = drow.cwiseProduct(s.h);
    s.D = s.D.cwiseProduct(dcol);
    s.E = s.E.cwiseProduct(drow);
  }

  Scalar p_norm(0);
  for (Eigen::Index j = 0; j < n; ++j) {
    Scalar c(0);
    for (typename SparseCols<Scalar>::InnerIterator e(s.P, j); e; ++e) c = std::max(c, std::abs(e.value()));
    p_norm += c / Scalar(n);
  }
  const Scalar q_norm = s.q.template lpNorm<Eigen::Infinity>();
  const Scalar ref = std::max(p_norm, q_norm);
  s.c = ref < Scalar(1e-4) ? Scalar(1) : Scalar(1) / std::min(ref, Scalar(1e4));
  s.P *= s.c;
  s.q *= s.c;
  return s;
}

/// Solves (P + reg I + G' diag(d) G) x = r. Variables that couple to no other
/// variable through P and share no row of G with each other form a diagonal
/// block; it is eliminated and only the Schur complement on the rest is
/// factored densely.
template <typename Scalar>
class NormalSystem {
public:
  NormalSystem(const SparseCols<Scalar>& P, const SparseRows<Scalar>& G, Scalar reg) : G_(G), reg_(reg) {
    const auto n = P.rows();
    std::vector<bool> diag(static_cast<std::size_t>(n), true);
    for (Eigen::Index j = 0; j < n; ++j)
      for (typename SparseCols<Scalar>::InnerIterator e(P, j); e; ++e)
        if (e.row() != j) diag[static_cast<std::size_t>(j)] = false;
    const auto* outer = G.outerIndexPtr();
    const auto* inner = G.innerIndexPtr();
    for (Eigen::Index i = 0; i < G.rows(); ++i) {
      bool seen = false;
      for (auto a = outer[i]; a < outer[i + 1]; ++a) {
        const auto j = static_cast<std::size_t>(inner[a]);
        if (!diag[j]) continue;
        if (seen) diag[j] = false;
        seen = true;
      }
    }
    local_.resize(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
      auto& idx = diag[static_cast<std::size_t>(j)] ? blocked_ : free_;
      local_[static_cast<std::size_t>(j)] = static_cast<Eigen::Index>(idx.size());
      idx.push_back(j);
    }
    const auto nf = static_cast<Eigen::Index>(free_.size());
    const auto nb = static_cast<Eigen::Index>(blocked_.size());
    P_ff_ = MatrixX<Scalar>::Zero(nf, nf);
    P_bb_ = VectorX<Scalar>::Zero(nb);
    for (Eigen::Index j = 0; j < n; ++j)
      for (typename SparseCols<Scalar>::InnerIterator e(P, j); e; ++e) {
        const auto lr = local_[static_cast<std::size_t>(e.row())], lc = local_[static_cast<std::size_t>(j)];
        if (diag[static_cast<std::size_t>(j)])
          P_bb_(lc) = e.value();
        else
          P_ff_(lr, lc) = e.value();
      }

    // split each row into its free part and its (at most one) blocked entry
    row_start_.push_back(0);
    row_block_.assign(static_cast<std::size_t>(G.rows()), -1);
    row_bval_.assign(static_cast<std::size_t>(G.rows()), Scalar(0));
    couplings_.assign(static_cast<std::size_t>(nb), 0);
    for (Eigen::Index i = 0; i < G.rows(); ++i) {
      for (auto a = outer[i]; a < outer[i + 1]; ++a) {
        const auto j = static_cast<std::size_t>(inner[a]);
        if (diag[j]) {
          row_block_[static_cast<std::size_t>(i)] = local_[j];
          row_bval_[static_cast<std::size_t>(i)] = G.valuePtr()[a];
        } else {
          f_col_.push_back(local_[j]);
          f_val_.push_back(G.valuePtr()[a]);
        }
      }
      row_start_.push_back(static_cast<Eigen::Index>(f_col_.size()));
      const auto b = row_block_[static_cast<std::size_t>(i)];
      const auto len = row_start_[static_cast<std::size_t>(i) + 1] - row_start_[static_cast<std::size_t>(i)];
      if (b >= 0 && len > 0) ++couplings_[static_cast<std::size_t>(b)];
      if (len >= long_row) long_rows_.push_back(i);
    }
  }

  bool factor(const VectorX<Scalar>& d) {
    d_ = d;
    const auto m = G_.rows();
    const auto nf = static_cast<Eigen::Index>(free_.size());
    lambda_ = P_bb_.array() + reg_;
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto b = row_block_[static_cast<std::size_t>(i)];
      if (b >= 0) lambda_(b) += d(i) * row_bval_[static_cast<std::size_t>(i)] * row_bval_[static_cast<std::size_t>(i)];
    }
    if (nf == 0) return true;

    S_ = P_ff_;
    S_.diagonal().array() += reg_;
    VectorX<Scalar> w = d;
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto b = row_block_[static_cast<std::size_t>(i)];
      if (b >= 0 && couplings_[static_cast<std::size_t>(b)] == 1) {
        const Scalar c = d(i) * row_bval_[static_cast<std::size_t>(i)];
        w(i) -= c * c / lambda_(b);
      }
    }
    // long rows go through a dense rank update, short ones are accumulated directly
    A_.setZero(static_cast<Eigen::Index>(long_rows_.size()), nf);
    for (std::size_t r = 0; r < long_rows_.size(); ++r) {
      const auto i = long_rows_[r];
      const Scalar root = std::sqrt(std::max(w(i), Scalar(0)));
      for (auto a = row_start_[static_cast<std::size_t>(i)]; a < row_start_[static_cast<std::size_t>(i) + 1]; ++a)
        A_(static_cast<Eigen::Index>(r), f_col_[static_cast<std::size_t>(a)]) = root * f_val_[static_cast<std::size_t>(a)];
    }
    if (A_.rows() > 0) S_.template selfadjointView<Eigen::Upper>().rankUpdate(A_.transpose());
    Scalar* out = S_.data();
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto begin = row_start_[static_cast<std::size_t>(i)], end = row_start_[static_cast<std::size_t>(i) + 1];
      if (end - begin >= long_row) continue;
      for (auto a = begin; a < end; ++a) {
        const Scalar ga = w(i) * f_val_[static_cast<std::size_t>(a)];
        Scalar* col = out + f_col_[static_cast<std::size_t>(a)] * nf;
        for (auto b = begin; b <= a; ++b) col[f_col_[static_cast<std::size_t>(b)]] += ga * f_val_[static_cast<std::size_t>(b)];
      }
    }
    // blocked variables shared by several coupling rows need the full rank-one term
    for (Eigen::Index b = 0; b < static_cast<Eigen::Index>(blocked_.size()); ++b) {
      if (couplings_[static_cast<std::size_t>(b)] < 2) continue;
      const VectorX<Scalar> c = coupling(b);
      S_.template selfadjointView<Eigen::Upper>().rankUpdate(c, -Scalar(1) / lambda_(b));
    }
    llt_.compute(S_);
    return llt_.info() == Eigen::Success;
  }

  VectorX<Scalar> solve(const VectorX<Scalar>& r) const {
    const auto m = G_.rows();
    const auto nf = static_cast<Eigen::Index>(free_.size());
    const auto nb = static_cast<Eigen::Index>(blocked_.size());
    VectorX<Scalar> rb(nb), t(nf);
    for (Eigen::Index b = 0; b < nb; ++b) rb(b) = r(blocked_[static_cast<std::size_t>(b)]) / lambda_(b);
    for (Eigen::Index a = 0; a < nf; ++a) t(a) = r(free_[static_cast<std::size_t>(a)]);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto b = row_block_[static_cast<std::size_t>(i)];
      if (b < 0) continue;
      const Scalar c = d_(i) * row_bval_[static_cast<std::size_t>(i)] * rb(b);
      for (auto a = row_start_[static_cast<std::size_t>(i)]; a < row_start_[static_cast<std::size_t>(i) + 1]; ++a)
        t(f_col_[static_cast<std::size_t>(a)]) -= c * f_val_[static_cast<std::size_t>(a)];
    }
    VectorX<Scalar> xf = nf ? VectorX<Scalar>(llt_.solve(t)) : t;
    VectorX<Scalar> xb = rb;
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto b = row_block_[static_cast<std::size_t>(i)];
      if (b < 0) continue;
      Scalar dot(0);
      for (auto a = row_start_[static_cast<std::size_t>(i)]; a < row_start_[static_cast<std::size_t>(i) + 1]; ++a)
        dot += f_val_[static_cast<std::size_t>(a)] * xf(f_col_[static_cast<std::size_t>(a)]);
      xb(b) -= d_(i) * row_bval_[static_cast<std::size_t>(i)] * dot / lambda_(b);
    }
    VectorX<Scalar> x(r.size());
    for (Eigen::Index a = 0; a < nf; ++a) x(free_[static_cast<std::size_t>(a)]) = xf(a);
    for (Eigen::Index b = 0; b < nb; ++b) x(blocked_[static_cast<std::size_t>(b)]) = xb(b);
    return x;
  }

private:
  VectorX<Scalar> coupling(Eigen::Index b) const {
    VectorX<Scalar> c = VectorX<Scalar>::Zero(static_cast<Eigen::Index>(free_.size()));
    for (Eigen::Index i = 0; i < G_.rows(); ++i) {
      if (row_block_[static_cast<std::size_t>(i)] != b) continue;
      const Scalar s = d_(i) * row_bval_[static_cast<std::size_t>(i)];
      for (auto a = row_start_[static_cast<std::size_t>(i)]; a < row_start_[static_cast<std::size_t>(i) + 1]; ++a)
        c(f_col_[static_cast<std::size_t>(a)]) += s * f_val_[static_cast<std::size_t>(a)];
    }
    return c;
  }

  static constexpr Eigen::Index long_row = 8;

  const SparseRows<Scalar>& G_;
  Scalar reg_;
  std::vector<Eigen::Index> long_rows_;
  MatrixX<Scalar> A_;
  std::vector<Eigen::Index> free_, blocked_, local_;
  MatrixX<Scalar> P_ff_;
  VectorX<Scalar> P_bb_;
  std::vector<Eigen::Index> row_start_, f_col_, row_block_;
  std::vector<Scalar> f_val_, row_bval_;
  std::vector<int> couplings_;
  VectorX<Scalar> d_, lambda_;
  MatrixX<Scalar> S_;
  Eigen::LLT<MatrixX<Scalar>, Eigen::Upper> llt_;
};

template <typename Scalar>
struct IpmOutcome {
  std::optional<Status> status; // empty: undecided
  VectorX<Scalar> z;            // scaled
  VectorX<Scalar> y;
  VectorX<Scalar> s;
  VectorX<Scalar> ray;          // scaled infeasibility / unboundedness direction
  int iterations = 0;
  bool converged = false;
};

/// Primal-dual interior point on the scaled problem with slacks Gz + s = h.
/// `accept(z, y, s)` is offered every iterate past the coarse stage and
/// ends the run when it returns true.
template <typename Scalar, typename Accept>
IpmOutcome<Scalar> interior_point(const Scaled<Scalar>& sc, int max_iter, Accept&& accept) {
  const auto m = sc.h.size();
  const auto& G = sc.G;
  const SparseRows<Scalar> Gt = G.transpose();
  IpmOutcome<Scalar> out;

  const Scalar reg = Scalar(1e-10) * (Scalar(1) + VectorX<Scalar>(sc.P.diagonal()).cwiseAbs().maxCoeff());
  NormalSystem<Scalar> normal(sc.P, G, reg);
  auto factor = [&](const VectorX<Scalar>& d) { return normal.factor(d); };

  // start from the least-squares point of the equality-relaxed system
  if (!factor(VectorX<Scalar>::Ones(m))) return out;
  VectorX<Scalar> z = normal.solve(-sc.q + Gt * sc.h);
  VectorX<Scalar> u = G * z - sc.h;
  VectorX<Scalar> s = -u;
  VectorX<Scalar> y = u;
  auto shift = [](VectorX<Scalar>& v) {
    const Scalar lo = v.minCoeff();
    if (lo <= Scalar(0)) v.array() += Scalar(1) - lo;
  };
  shift(s);
  shift(y);

  const Scalar h_norm = sc.h.template lpNorm<Eigen::Infinity>();
  const Scalar q_norm = sc.q.template lpNorm<Eigen::Infinity>();
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();

  auto max_step = [](const VectorX<Scalar>& v, const VectorX<Scalar>& dv) {
    Scalar a = Scalar(1);
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (dv(i) < Scalar(0)) a = std::min(a, -v(i) / dv(i));
    return a;
  };

  VectorX<Scalar> dz, ds, dy;
  auto newton = [&](const VectorX<Scalar>& r_d, const VectorX<Scalar>& r_p, const VectorX<Scalar>& r_c) {
    const VectorX<Scalar> w = (-r_c + y.cwiseProduct(r_p)).cwiseQuotient(s);
    dz = normal.solve(-r_d - Gt * w);
    ds = -r_p - G * dz;
    dy = (-r_c - y.cwiseProduct(ds)).cwiseQuotient(s);
  };

  for (int k = 1; k <= max_iter; ++k) {
    out.iterations = k;
    const VectorX<Scalar> Pz = sc.P * z;
    const VectorX<Scalar> Gty = Gt * y;
    const VectorX<Scalar> r_d = Pz + sc.q + Gty;
    const VectorX<Scalar> r_p = G * z + s - sc.h;
    const Scalar mu = s.dot(y) / Scalar(m);

    const Scalar dual_scale = Scalar(1) + std::max({Pz.template lpNorm<Eigen::Infinity>(), q_norm,
                                                    Gty.template lpNorm<Eigen::Infinity>()});
    const Scalar rp = r_p.template lpNorm<Eigen::Infinity>() / (Scalar(1) + h_norm);
    const Scalar rd = r_d.template lpNorm<Eigen::Infinity>() / dual_scale;
    const Scalar gap = mu / (Scalar(1) + std::abs(z.dot(Pz)) + std::abs(sc.q.dot(z)));

    if (rp < Scalar(1e-5) && rd < Scalar(1e-5) && gap < Scalar(1e-5) && accept(z, y, s)) {
      out.converged = true;
      break;
    }
    if (rp < Scalar(1e3) * eps && rd < Scalar(1e3) * eps && gap < Scalar(1e3) * eps) {
      out.converged = true;
      break;
    }

    // certificates from diverging iterates
    const Scalar y_norm = y.template lpNorm<Eigen::Infinity>();
    if (y_norm > Scalar(1e6) * (Scalar(1) + q_norm)) {
      const VectorX<Scalar> yh = y / y_norm;
      if ((Gt * yh).template lpNorm<Eigen::Infinity>() < Scalar(1e-7) && sc.h.dot(yh) < Scalar(-1e-7)) {
        out.status = Status::PrimalInfeasible;
        out.ray = yh;
        break;
      }
    }
    const Scalar z_norm = z.template lpNorm<Eigen::Infinity>();
    if (z_norm > Scalar(1e6) * (Scalar(1) + h_norm)) {
      const VectorX<Scalar> zh = z / z_norm;
      if ((sc.P * zh).template lpNorm<Eigen::Infinity>() < Scalar(1e-7) && sc.q.dot(zh) < Scalar(-1e-7) &&
          (G * zh).maxCoeff() < Scalar(1e-7)) {
        out.status = Status::Unbounded;
        out.ray = zh;
        break;
      }
    }

    if (!factor(y.cwiseQuotient(s))) break;
    // predictor
    newton(r_d, r_p, s.cwiseProduct(y));
    const Scalar a_aff = std::min(max_step(s, ds), max_step(y, dy));
    const Scalar mu_aff = (s + a_aff * ds).dot(y + a_aff * dy) / Scalar(m);
    const Scalar sigma = std::pow(std::clamp(mu_aff / mu, Scalar(0), Scalar(1)), 3);
    // corrector
    const VectorX<Scalar> r_c =
        (s.cwiseProduct(y) + ds.cwiseProduct(dy)).array() - sigma * mu;
    newton(r_d, r_p, r_c);
    const Scalar a = std::min(Scalar(1), Scalar(0.99) * std::min(max_step(s, ds), max_step(y, dy)));
    if (!(a > Scalar(1e-12)) || !dz.allFinite()) break;
    z += a * dz;
    s += a * ds;
    y += a * dy;
    s = s.cwiseMax(Scalar(1e-300));
    y = y.cwiseMax(Scalar(1e-300));
  }
  out.z = z;
  out.y = y;
  out.s = s;
  return out;
}

/// Solves the equality-constrained problem given by a guessed active set.
/// Rows with a single nonzero fix their variable; the remaining active rows
/// enter a regularized KKT system refined against the exact one.
template <typename Scalar>
bool polish(const QuadraticProgram<Scalar>& qp, const std::vector<bool>& active, VectorX<Scalar>& z_out,
            VectorX<Scalar>& y_out) {
  const auto n = qp.q.size();
  const auto m = qp.h.size();

  std::vector<Eigen::Index> fixed_row(static_cast<std::size_t>(n), -1);
  std::vector<Eigen::Index> general;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!active[static_cast<std::size_t>(i)]) continue;
    Eigen::Index nz = 0, col = -1;
    for (Eigen::Index j = 0; j < n; ++j)
      if (qp.G(i, j) != Scalar(0)) {
        ++nz;
        col = j;
      }
    if (nz == 1 && fixed_row[static_cast<std::size_t>(col)] < 0) {
      fixed_row[static_cast<std::size_t>(col)] = i;
    } else if (nz > 0) {
      general.push_back(i);
    }
  }

  VectorX<Scalar> z = VectorX<Scalar>::Zero(n);
  std::vector<Eigen::Index> free;
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto r = fixed_row[static_cast<std::size_t>(j)];
    if (r >= 0)
      z(j) = qp.h(r) / qp.G(r, j);
    else
      free.push_back(j);
  }

  const auto nf = static_cast<Eigen::Index>(free.size());
  const auto na = static_cast<Eigen::Index>(general.size());
  if (nf > 0) {
    // K [z_F; y_A] = rhs with K = [P_FF, G_AF'; G_AF, 0]
    MatrixX<Scalar> K = MatrixX<Scalar>::Zero(nf + na, nf + na);
    VectorX<Scalar> rhs(nf + na);
    for (Eigen::Index a = 0; a < nf; ++a) {
      const auto ja = free[static_cast<std::size_t>(a)];
      for (Eigen::Index b = 0; b < nf; ++b) K(a, b) = qp.P(ja, free[static_cast<std::size_t>(b)]);
      rhs(a) = -qp.q(ja) - qp.P.row(ja).dot(z);
    }
    for (Eigen::Index r = 0; r < na; ++r) {
      const auto i = general[static_cast<std::size_t>(r)];
      for (Eigen::Index a = 0; a < nf; ++a) {
        const Scalar g = qp.G(i, free[static_cast<std::size_t>(a)]);
        K(nf + r, a) = g;
        K(a, nf + r) = g;
      }
      rhs(nf + r) = qp.h(i) - qp.G.row(i).dot(z);
    }
    const Scalar reg = Scalar(1e-9) * (Scalar(1) + K.template lpNorm<Eigen::Infinity>());
    MatrixX<Scalar> Kreg = K;
    Kreg.topLeftCorner(nf, nf).diagonal().array() += reg;
    Kreg.bottomRightCorner(na, na).diagonal().array() -= reg;
    Eigen::LDLT<MatrixX<Scalar>> ldlt(Kreg);
    if (ldlt.info() != Eigen::Success) return false;
    VectorX<Scalar> sol = ldlt.solve(rhs);
    for (int refine = 0; refine < 5; ++refine) sol += ldlt.solve(rhs - K * sol);
    if (!sol.allFinite()) return false;
    for (Eigen::Index a = 0; a < nf; ++a) z(free[static_cast<std::size_t>(a)]) = sol(a);
    y_out = VectorX<Scalar>::Zero(m);
    for (Eigen::Index r = 0; r < na; ++r) y_out(general[static_cast<std::size_t>(r)]) = sol(nf + r);
  } else {
    y_out = VectorX<Scalar>::Zero(m);
  }

  // Multipliers of the fixing rows from stationarity in their variable.
  const VectorX<Scalar> grad = qp.P * z + qp.q + qp.G.transpose() * y_out;
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto r = fixed_row[static_cast<std::size_t>(j)];
    if (r >= 0) y_out(r) = -grad(j) / qp.G(r, j);
  }
  z_out = z;
  return true;
}

} // namespace detail

template <typename Scalar>
Solution<Scalar> solve(const QuadraticProgram<Scalar>& qp, const std::type_identity_t<Settings<Scalar>>& settings = {},
                       const std::type_identity_t<std::optional<WarmStart<Scalar>>>& warm = std::nullopt) {
  if (!(settings.tol > Scalar(0))) throw std::invalid_argument("tol must be positive");
  validate(qp, settings.convexity);
  const auto n = qp.q.size();
  const auto m = qp.h.size();
  const Scalar tol = settings.tol;

  Solution<Scalar> out;
  auto finish = [&](Status status) {
    const auto r = kkt_residuals(qp, out.z, out.y);
    out.primal_residual = r.primal;
    out.dual_residual = r.dual;
    out.complementarity_residual = r.complementarity;
    out.objective = qp.objective(out.z);
    out.status = status;
    return out;
  };

  if (m == 0) {
    Eigen::CompleteOrthogonalDecomposition<MatrixX<Scalar>> cod(qp.P);
    out.z = cod.solve(-qp.q);
    out.y = VectorX<Scalar>::Zero(0);
    const auto r = kkt_residuals(qp, out.z, out.y);
    return finish(r.within(tol) ? Status::Optimal : Status::Unbounded);
  }

  const auto s = detail::equilibrate(qp, settings.scaling_iterations);

  std::vector<bool> last_active;
  auto polish_from = [&](const VectorX<Scalar>& ys, const VectorX<Scalar>& slack) {
    std::vector<bool> active(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) active[static_cast<std::size_t>(i)] = ys(i) > slack(i);
    if (active == last_active) return false; // already tried
    last_active = active;
    VectorX<Scalar> zp, yp;
    if (!detail::polish(qp, active, zp, yp)) return false;
    if (!kkt_residuals(qp, zp, yp).within(tol)) return false;
    out.z = zp;
    out.y = yp;
    out.polished = true;
    return true;
  };

  if (settings.algorithm == Algorithm::InteriorPoint && !warm) {
    bool accepted = false;
    // an iterate that certifies as is ends the run; failing that, the last
    // iterate's active set is polished
    auto accept = [&](const VectorX<Scalar>& zs, const VectorX<Scalar>& ys, const VectorX<Scalar>&) {
      VectorX<Scalar> z = s.D.cwiseProduct(zs);
      VectorX<Scalar> y = s.E.cwiseProduct(ys) / s.c;
      // a margin below tol keeps the minimizer itself accurate, not just the residuals
      if (!kkt_residuals(qp, z, y).within(Scalar(1e-2) * tol)) return false;
      out.z = std::move(z);
      out.y = std::move(y);
      return accepted = true;
    };
    auto ipm = detail::interior_point(s, settings.ipm_max_iter, accept);
    if (!accepted && !ipm.status && ipm.z.size() == n) {
      accepted = polish_from(ipm.y, s.h - s.G * ipm.z);
      if (!accepted) {
        out.z = s.D.cwiseProduct(ipm.z);
        out.y = s.E.cwiseProduct(ipm.y) / s.c;
        accepted = kkt_residuals(qp, out.z, out.y).within(tol);
      }
    }
    out.iterations = ipm.iterations;
    if (accepted) return finish(Status::Optimal);
    if (ipm.status == Status::PrimalInfeasible) {
      out.z = s.D.cwiseProduct(ipm.z);
      out.y = s.E.cwiseProduct(ipm.y) / s.c;
      const VectorX<Scalar> cert = s.E.cwiseProduct(ipm.ray);
      out.certificate = cert / cert.template lpNorm<Eigen::Infinity>();
      return finish(Status::PrimalInfeasible);
    }
    if (ipm.status == Status::Unbounded) {
      out.z = s.D.cwiseProduct(ipm.z);
      out.y = s.E.cwiseProduct(ipm.y) / s.c;
      return finish(Status::Unbounded);
    }
    // undecided: continue with the splitting iteration from scratch
  }

  const MatrixX<Scalar> GtG = MatrixX<Scalar>(s.G.transpose() * s.G);

  Scalar rho = settings.rho;
  const Scalar sigma = settings.sigma;
  const Scalar alpha = settings.alpha;
  Eigen::LLT<MatrixX<Scalar>> kkt;
  auto factor = [&] {
    MatrixX<Scalar> M = MatrixX<Scalar>(s.P) + rho * GtG;
    M.diagonal().array() += sigma;
    kkt.compute(M);
  };
  factor();

  VectorX<Scalar> z = VectorX<Scalar>::Zero(n);
  VectorX<Scalar> y = VectorX<Scalar>::Zero(m);
  if (warm && warm->z.size() == n) z = s.D.cwiseInverse().cwiseProduct(warm->z);
  if (warm && warm->y.size() == m) y = s.c * s.E.cwiseInverse().cwiseProduct(warm->y);
  VectorX<Scalar> sv = (s.G * z).cwiseMin(s.h);
  VectorX<Scalar> z_prev, y_prev, s_prev;

  auto unscale = [&](const VectorX<Scalar>& zs, const VectorX<Scalar>& ys) {
    out.z = s.D.cwiseProduct(zs);
    out.y = s.E.cwiseProduct(ys) / s.c;
  };

  auto try_polish = [&](const VectorX<Scalar>& zs, const VectorX<Scalar>& ys) {
    const VectorX<Scalar> slack = s.h - s.G * zs;
    std::vector<bool> active(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) active[static_cast<std::size_t>(i)] = ys(i) > slack(i);
    VectorX<Scalar> zp, yp;
    if (!detail::polish(qp, active, zp, yp)) return false;
    if (!kkt_residuals(qp, zp, yp).within(tol)) return false;
    out.z = zp;
    out.y = yp;
    out.polished = true;
    return true;
  };

  int next_polish = 25;
  const int check_every = 5;
  Scalar tol_admm = tol;
  for (int k = 1; k <= settings.max_iter; ++k) {
    z_prev = z;
    y_prev = y;
    s_prev = sv;

    const VectorX<Scalar> rhs = sigma * z - s.q + s.G.transpose() * (rho * sv - y);
    const VectorX<Scalar> z_tilde = kkt.solve(rhs);
    const VectorX<Scalar> s_tilde = s.G * z_tilde;
    z = alpha * z_tilde + (Scalar(1) - alpha) * z_prev;
    const VectorX<Scalar> s_relaxed = alpha * s_tilde + (Scalar(1) - alpha) * s_prev;
    sv = (s_relaxed + y / rho).cwiseMin(s.h);
    y += rho * (s_relaxed - sv);
    out.iterations = k;

    if (k % check_every != 0 && k != settings.max_iter) continue;

    // Residuals in original units.
    const VectorX<Scalar> Gz = s.E.cwiseInverse().cwiseProduct(s.G * z);
    const VectorX<Scalar> sv_u = s.E.cwiseInverse().cwiseProduct(sv);
    const VectorX<Scalar> Pz = s.D.cwiseInverse().cwiseProduct(s.P * z) / s.c;
    const VectorX<Scalar> Gty = s.D.cwiseInverse().cwiseProduct(s.G.transpose() * y) / s.c;
    const VectorX<Scalar> q_u = qp.q;
    const Scalar r_prim = (Gz - sv_u).template lpNorm<Eigen::Infinity>();
    const Scalar r_dual = (Pz + q_u + Gty).template lpNorm<Eigen::Infinity>();
    const Scalar prim_scale = std::max(Gz.template lpNorm<Eigen::Infinity>(), sv_u.template lpNorm<Eigen::Infinity>());
    const Scalar dual_scale = std::max({Pz.template lpNorm<Eigen::Infinity>(), q_u.template lpNorm<Eigen::Infinity>(),
                                        Gty.template lpNorm<Eigen::Infinity>()});
    const bool converged =
        r_prim <= tol_admm * (Scalar(1) + prim_scale) && r_dual <= tol_admm * (Scalar(1) + dual_scale);

    if (converged || k >= next_polish) {
      if (try_polish(z, y)) return finish(Status::Optimal);
      if (k >= next_polish) next_polish *= 2;
    }
    if (converged) {
      unscale(z, y);
      if (kkt_residuals(qp, out.z, out.y).within(tol)) return finish(Status::Optimal);
      tol_admm = std::max(tol_admm * Scalar(0.1), std::numeric_limits<Scalar>::epsilon() * Scalar(100));
    }

    // Infeasibility certificates from successive differences.
    const VectorX<Scalar> dy = (y - y_prev).cwiseMax(Scalar(0));
    const Scalar dy_norm = (s.E.cwiseProduct(dy)).template lpNorm<Eigen::Infinity>();
    if (dy_norm > Scalar(1e-12)) {
      const VectorX<Scalar> dy_u = s.E.cwiseProduct(dy);
      const Scalar eps = tol * dy_norm;
      const VectorX<Scalar> Gt_dy = qp.G.transpose() * dy_u;
      if (Gt_dy.template lpNorm<Eigen::Infinity>() <= eps && qp.h.dot(dy_u) < -eps) {
        unscale(z, y);
        out.certificate = dy_u / dy_norm;
        return finish(Status::PrimalInfeasible);
      }
    }
    const VectorX<Scalar> dz = s.D.cwiseProduct(z - z_prev);
    const Scalar dz_norm = dz.template lpNorm<Eigen::Infinity>();
    if (dz_norm > Scalar(1e-12)) {
      const Scalar eps = tol * dz_norm;
      if ((qp.P * dz).template lpNorm<Eigen::Infinity>() <= eps && qp.q.dot(dz) < -eps &&
          (qp.G * dz).maxCoeff() <= eps) {
        unscale(z, y);
        return finish(Status::Unbounded);
      }
    }

    // Rebalance rho when primal and dual residuals drift apart.
    if (k % 25 == 0) {
      const Scalar pr = r_prim / (Scalar(1e-12) + prim_scale);
      const Scalar du = r_dual / (Scalar(1e-12) + dual_scale);
      const Scalar ratio = std::sqrt(pr / std::max(du, Scalar(1e-12)));
      if (ratio > Scalar(5) || ratio < Scalar(0.2)) {
        rho = std::clamp(rho * ratio, Scalar(1e-6), Scalar(1e6));
        factor();
      }
    }
  }

  unscale(z, y);
  if (try_polish(z, y)) return finish(Status::Optimal);
  return finish(Status::IterationLimit);
}

} // namespace aim::qp
