#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "soscert/sdp.hpp"

namespace soscert {

struct SolverSettings {
  double tol_primal = 1e-8;
  double tol_dual = 1e-8;
  double tol_gap = 1e-8;
  int max_iter = 200;
  double boundary_fraction = 0.99;  // fraction-to-boundary step damping
  bool mehrotra = true;             // predictor-corrector on/off
  bool allow_auxiliary_solves = true;  // phase-1 / ray confirmation
  bool collect_log = true;
};

enum class SolveStatus {
  kOptimal,
  kInfeasibleCertificate,
  kMaxIterations,
  kNumericalFailure,
};

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasibleCertificate: return "infeasible-certificate";
    case SolveStatus::kMaxIterations: return "max-iterations";
    case SolveStatus::kNumericalFailure: return "numerical-failure";
  }
  return "?";
}

struct IterateLog {
  int iter = 0;
  double pobj = 0.0, dobj = 0.0;
  double pinf = 0.0, dinf = 0.0;  // ||A(X)-b||_inf, max block ||Rd||_max
  double mu = 0.0;
  double alpha_p = 0.0, alpha_d = 0.0;
  double min_nt_eig = 0.0;           // smallest NT spectrum value
  bool interior_x = false, interior_z = false;  // Cholesky succeeded
  double duality_bound = 0.0;  // ||rp|| ||y|| + sum ||X|| ||Rd||; exact bound
                               // on dobj - pobj up to <X,Z> >= 0
};

enum class RaySide { kNone, kPrimalInfeasible, kDualInfeasible };

struct SdpSolution {
  SolveStatus status = SolveStatus::kNumericalFailure;
  BlockValues X;            // primal blocks (original problem indexing)
  std::vector<double> y;    // dual vector
  BlockValues Z;            // dual slack blocks
  double objective = 0.0;   // <C, X>
  double dual_objective = 0.0;
  Residuals final_residuals;
  int iterations = 0;
  std::vector<IterateLog> log;
  std::string message;

  RaySide ray_side = RaySide::kNone;
  std::vector<double> farkas_y;  // improving dual ray when primal infeasible
  BlockValues primal_ray;        // improving primal ray when dual infeasible
};

namespace ipm_detail {

struct BlockIndex {
  bool psd = false;
  int local = 0;  // index into psd or diag arrays
};

/// Per-constraint data grouped per block for Schur assembly.
struct BlockRows {
  // For each constraint touching this block: its entries restricted here.
  std::vector<int> rows;
  std::vector<std::vector<MatEntry>> entries;
};

struct Cone {
  std::vector<int> psd_sizes;
  std::vector<int> diag_sizes;
  std::vector<BlockIndex> index;  // problem block -> cone slot
  int nu = 0;                     // total cone dimension
};

struct ConeVars {
  std::vector<Eigen::MatrixXd> psd;
  std::vector<Eigen::VectorXd> diag;

  void set_identity(const Cone& cone, double scale) {
    psd.clear();
    diag.clear();
    for (int n : cone.psd_sizes) {
      psd.push_back(scale * Eigen::MatrixXd::Identity(n, n));
    }
    for (int n : cone.diag_sizes) {
      diag.push_back(scale * Eigen::VectorXd::Ones(n));
    }
  }
};

inline double inner(const ConeVars& a, const ConeVars& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.psd.size(); ++i) {
    s += (a.psd[i].array() * b.psd[i].array()).sum();
  }
  for (std::size_t i = 0; i < a.diag.size(); ++i) s += a.diag[i].dot(b.diag[i]);
  return s;
}

inline void axpy(ConeVars& y_out, const ConeVars& x, double alpha) {
  for (std::size_t i = 0; i < y_out.psd.size(); ++i) y_out.psd[i] += alpha * x.psd[i];
  for (std::size_t i = 0; i < y_out.diag.size(); ++i) y_out.diag[i] += alpha * x.diag[i];
}

inline double frob(const ConeVars& a) {
  double s = 0.0;
  for (auto& m : a.psd) s += m.squaredNorm();
  for (auto& v : a.diag) s += v.squaredNorm();
  return std::sqrt(s);
}

inline double max_abs(const ConeVars& a) {
  double s = 0.0;
  for (auto& m : a.psd) if (m.size()) s = std::max(s, m.cwiseAbs().maxCoeff());
  for (auto& v : a.diag) if (v.size()) s = std::max(s, v.cwiseAbs().maxCoeff());
  return s;
}

/// Largest t with M + t D positive semidefinite (via min eig of L^-1 D L^-T).
inline double max_step_psd(const Eigen::MatrixXd& M, const Eigen::MatrixXd& D) {
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) return 0.0;
  Eigen::MatrixXd S = llt.matrixL().solve(D);
  S = llt.matrixL().solve(S.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues()(0);
  if (lmin >= -1e-16) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

inline double max_step_diag(const Eigen::VectorXd& x, const Eigen::VectorXd& d) {
  double t = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (d[i] < 0.0) t = std::min(t, -x[i] / d[i]);
  }
  return t;
}

}  // namespace ipm_detail

class SdpSolver {
 public:
  SdpSolver(const SdpProblem& prob, SolverSettings settings)
      : prob_(prob), settings_(settings) {
    prob_.validate();
  }

  SdpSolution solve();

 private:
  using Cone = ipm_detail::Cone;
  using ConeVars = ipm_detail::ConeVars;

  SdpSolution run_core(const SdpProblem& prob, const SolverSettings& settings) const;
  static SdpSolution phase1(const SdpProblem& prob, const SolverSettings& settings,
                            double init_scale);
  static double init_scale_for(const SdpProblem& prob);

  SdpProblem prob_;
  SolverSettings settings_;
};

namespace ipm_detail {

struct CoreWork {
  const SdpProblem* prob = nullptr;
  Cone cone;
  std::vector<BlockRows> psd_rows;   // per psd block
  std::vector<BlockRows> diag_rows;  // per diag block
  ConeVars C;
  Eigen::VectorXd b;
  double norm_b = 0.0, norm_c = 0.0;

  void build(const SdpProblem& prob) {
    this->prob = &prob;
    cone.index.resize(prob.blocks.size());
    for (std::size_t bi = 0; bi < prob.blocks.size(); ++bi) {
      const SdpBlock& blk = prob.blocks[bi];
      if (blk.kind == BlockKind::kPsd) {
        cone.index[bi] = {true, static_cast<int>(cone.psd_sizes.size())};
        cone.psd_sizes.push_back(blk.size);
      } else {
        cone.index[bi] = {false, static_cast<int>(cone.diag_sizes.size())};
        cone.diag_sizes.push_back(blk.size);
      }
      cone.nu += blk.size;
    }
    psd_rows.resize(cone.psd_sizes.size());
    diag_rows.resize(cone.diag_sizes.size());
    for (int k = 0; k < prob.num_constraints(); ++k) {
      std::vector<std::vector<MatEntry>> per_psd(cone.psd_sizes.size());
      std::vector<std::vector<MatEntry>> per_diag(cone.diag_sizes.size());
      for (const MatEntry& e : prob.constraints[k]) {
        if (e.value == 0.0) continue;
        const BlockIndex& bi = cone.index[e.block];
        (bi.psd ? per_psd[bi.local] : per_diag[bi.local]).push_back(e);
      }
      for (std::size_t p = 0; p < per_psd.size(); ++p) {
        if (!per_psd[p].empty()) {
          psd_rows[p].rows.push_back(k);
          psd_rows[p].entries.push_back(std::move(per_psd[p]));
        }
      }
      for (std::size_t d = 0; d < per_diag.size(); ++d) {
        if (!per_diag[d].empty()) {
          diag_rows[d].rows.push_back(k);
          diag_rows[d].entries.push_back(std::move(per_diag[d]));
        }
      }
    }
    C.set_identity(cone, 0.0);
    for (const MatEntry& e : prob.objective) {
      const BlockIndex& bi = cone.index[e.block];
      if (bi.psd) {
        C.psd[bi.local](e.i, e.j) += e.value;
        if (e.i != e.j) C.psd[bi.local](e.j, e.i) += e.value;
      } else {
        C.diag[bi.local][e.i] += e.value;
      }
    }
    b.resize(prob.num_constraints());
    for (int k = 0; k < prob.num_constraints(); ++k) b[k] = prob.b[k];
    norm_b = b.size() ? b.cwiseAbs().maxCoeff() : 0.0;
    norm_c = max_abs(C);
  }

  /// <A_k, V> for every constraint.
  Eigen::VectorXd apply_A(const ConeVars& V) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(prob->num_constraints());
    for (std::size_t p = 0; p < psd_rows.size(); ++p) {
      for (std::size_t r = 0; r < psd_rows[p].rows.size(); ++r) {
        double s = 0.0;
        for (const MatEntry& e : psd_rows[p].entries[r]) {
          s += (e.i == e.j ? 1.0 : 2.0) * e.value * V.psd[p](e.i, e.j);
        }
        out[psd_rows[p].rows[r]] += s;
      }
    }
    for (std::size_t d = 0; d < diag_rows.size(); ++d) {
      for (std::size_t r = 0; r < diag_rows[d].rows.size(); ++r) {
        double s = 0.0;
        for (const MatEntry& e : diag_rows[d].entries[r]) {
          s += e.value * V.diag[d][e.i];
        }
        out[diag_rows[d].rows[r]] += s;
      }
    }
    return out;
  }

  /// sum_k y_k A_k as cone variables.
  ConeVars apply_AT(const Eigen::VectorXd& y) const {
    ConeVars out;
    out.set_identity(cone, 0.0);
    for (std::size_t p = 0; p < psd_rows.size(); ++p) {
      for (std::size_t r = 0; r < psd_rows[p].rows.size(); ++r) {
        double yk = y[psd_rows[p].rows[r]];
        if (yk == 0.0) continue;
        for (const MatEntry& e : psd_rows[p].entries[r]) {
          out.psd[p](e.i, e.j) += yk * e.value;
          if (e.i != e.j) out.psd[p](e.j, e.i) += yk * e.value;
        }
      }
    }
    for (std::size_t d = 0; d < diag_rows.size(); ++d) {
      for (std::size_t r = 0; r < diag_rows[d].rows.size(); ++r) {
        double yk = y[diag_rows[d].rows[r]];
        if (yk == 0.0) continue;
        for (const MatEntry& e : diag_rows[d].entries[r]) {
          out.diag[d][e.i] += yk * e.value;
        }
      }
    }
    return out;
  }
};

}  // namespace ipm_detail

inline double SdpSolver::init_scale_for(const SdpProblem& prob) {
  double amax = 0.0;
  for (const auto& row : prob.constraints) {
    for (const MatEntry& e : row) amax = std::max(amax, std::abs(e.value));
  }
  double bmax = 0.0;
  for (double v : prob.b) bmax = std::max(bmax, std::abs(v));
  return std::max({10.0, bmax / (1.0 + amax)});
}

inline SdpSolution SdpSolver::run_core(const SdpProblem& prob,
                                       const SolverSettings& settings) const {
  using namespace ipm_detail;
  CoreWork w;
  w.build(prob);
  const int m = prob.num_constraints();
  const int nu = std::max(w.cone.nu, 1);

  SdpSolution sol;
  sol.X = zero_blocks(prob);

  // Cold start: identity-scaled blocks sized by the problem data.
  double xi = init_scale_for(prob);
  double eta = std::max(10.0, w.norm_c + 1.0);
  ConeVars X, Z;
  X.set_identity(w.cone, xi);
  Z.set_identity(w.cone, eta);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);

  // NT scaling state, recomputed each iteration.
  std::vector<Eigen::MatrixXd> W(w.cone.psd_sizes.size());
  std::vector<Eigen::MatrixXd> G(w.cone.psd_sizes.size());
  std::vector<Eigen::MatrixXd> Ginv(w.cone.psd_sizes.size());
  std::vector<Eigen::VectorXd> Vdiag(w.cone.psd_sizes.size());
  std::vector<Eigen::MatrixXd> Zinv(w.cone.psd_sizes.size());
  std::vector<Eigen::VectorXd> wdiag(w.cone.diag_sizes.size());

  Eigen::MatrixXd M(m, m);
  Eigen::LLT<Eigen::MatrixXd> schur;

  auto cone_product_trace = [&](const ConeVars& A, const ConeVars& B) {
    return inner(A, B);
  };

  auto solve_schur = [&](const Eigen::VectorXd& rhs) -> Eigen::VectorXd {
    return schur.solve(rhs);
  };

  // Given the centering residual Rc (per block), solve the Newton system.
  auto newton = [&](const ConeVars& Rc, const Eigen::VectorXd& rp,
                    const ConeVars& Rd, Eigen::VectorXd& dy, ConeVars& dZ,
                    ConeVars& dX) {
    // rhs = rp - A(Rc) + A(W Rd W)
    ConeVars WRdW;
    WRdW.set_identity(w.cone, 0.0);
    for (std::size_t p = 0; p < W.size(); ++p) {
      WRdW.psd[p] = W[p] * Rd.psd[p] * W[p];
    }
    for (std::size_t d = 0; d < wdiag.size(); ++d) {
      WRdW.diag[d] = wdiag[d].array().square() * Rd.diag[d].array();
    }
    Eigen::VectorXd rhs = rp - w.apply_A(Rc) + w.apply_A(WRdW);
    dy = solve_schur(rhs);
    ConeVars ATdy = w.apply_AT(dy);
    dZ.set_identity(w.cone, 0.0);
    dX.set_identity(w.cone, 0.0);
    for (std::size_t p = 0; p < W.size(); ++p) {
      dZ.psd[p] = Rd.psd[p] - ATdy.psd[p];
      dX.psd[p] = Rc.psd[p] - W[p] * dZ.psd[p] * W[p];
      dX.psd[p] = 0.5 * (dX.psd[p] + dX.psd[p].transpose()).eval();
    }
    for (std::size_t d = 0; d < wdiag.size(); ++d) {
      dZ.diag[d] = Rd.diag[d] - ATdy.diag[d];
      dX.diag[d] =
          Rc.diag[d].array() - wdiag[d].array().square() * dZ.diag[d].array();
    }
  };

  auto max_step = [&](const ConeVars& P, const ConeVars& D) {
    double t = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < P.psd.size(); ++p) {
      t = std::min(t, max_step_psd(P.psd[p], D.psd[p]));
    }
    for (std::size_t d = 0; d < P.diag.size(); ++d) {
      t = std::min(t, max_step_diag(P.diag[d], D.diag[d]));
    }
    return t;
  };

  auto fill_solution_vars = [&](SdpSolution& s) {
    s.X = zero_blocks(prob);
    s.Z = zero_blocks(prob);
    for (std::size_t bi = 0; bi < prob.blocks.size(); ++bi) {
      const BlockIndex& ix = w.cone.index[bi];
      if (ix.psd) {
        s.X[bi] = X.psd[ix.local];
        s.Z[bi] = Z.psd[ix.local];
      } else {
        s.X[bi] = X.diag[ix.local];
        s.Z[bi] = Z.diag[ix.local];
      }
    }
    s.y.assign(y.data(), y.data() + m);
    s.objective = inner(w.C, X);
    s.dual_objective = w.b.dot(y);
  };

  double prev_pinf = std::numeric_limits<double>::infinity();
  int stall_count = 0;
  const double div_threshold = 1e9 * (1.0 + w.norm_b + w.norm_c);

  for (int iter = 0; iter < settings.max_iter; ++iter) {
    Eigen::VectorXd rp = w.b - w.apply_A(X);
    ConeVars ATy = w.apply_AT(y);
    ConeVars Rd;
    Rd.set_identity(w.cone, 0.0);
    for (std::size_t p = 0; p < Rd.psd.size(); ++p) {
      Rd.psd[p] = w.C.psd[p] - Z.psd[p] - ATy.psd[p];
    }
    for (std::size_t d = 0; d < Rd.diag.size(); ++d) {
      Rd.diag[d] = w.C.diag[d] - Z.diag[d] - ATy.diag[d];
    }

    double mu = cone_product_trace(X, Z) / nu;
    double pobj = inner(w.C, X);
    double dobj = w.b.dot(y);
    double pinf = rp.size() ? rp.cwiseAbs().maxCoeff() : 0.0;
    double dinf = max_abs(Rd);
    double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));

    if (settings.collect_log) {
      IterateLog lg;
      lg.iter = iter;
      lg.pobj = pobj;
      lg.dobj = dobj;
      lg.pinf = pinf;
      lg.dinf = dinf;
      lg.mu = mu;
      double bound = rp.norm() * y.norm();
      for (std::size_t p = 0; p < X.psd.size(); ++p) {
        bound += X.psd[p].norm() * Rd.psd[p].norm();
      }
      for (std::size_t d = 0; d < X.diag.size(); ++d) {
        bound += X.diag[d].norm() * Rd.diag[d].norm();
      }
      lg.duality_bound = bound;
      lg.interior_x = true;
      lg.interior_z = true;
      for (auto& Mb : X.psd) {
        if (Eigen::LLT<Eigen::MatrixXd>(Mb).info() != Eigen::Success) {
          lg.interior_x = false;
        }
      }
      for (auto& v : X.diag) {
        if (v.size() && v.minCoeff() <= 0.0) lg.interior_x = false;
      }
      for (auto& Mb : Z.psd) {
        if (Eigen::LLT<Eigen::MatrixXd>(Mb).info() != Eigen::Success) {
          lg.interior_z = false;
        }
      }
      for (auto& v : Z.diag) {
        if (v.size() && v.minCoeff() <= 0.0) lg.interior_z = false;
      }
      sol.log.push_back(lg);
    }
    sol.iterations = iter;

    if (pinf <= settings.tol_primal && dinf <= settings.tol_dual &&
        relgap <= settings.tol_gap) {
      fill_solution_vars(sol);
      sol.status = SolveStatus::kOptimal;
      sol.message = "converged";
      return sol;
    }

    // Divergence heuristics with direct certificate checks.
    if (dobj > div_threshold && dinf < 1e-5 * (1.0 + w.norm_c)) {
      double ynorm = y.norm();
      if (ynorm > 0.0) {
        Eigen::VectorXd ray = y / ynorm;
        ConeVars S = w.apply_AT(ray);
        double bty = w.b.dot(ray);
        double viol = 0.0;
        for (auto& Mb : S.psd) {
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Mb, Eigen::EigenvaluesOnly);
          viol = std::max(viol, es.eigenvalues().maxCoeff());
        }
        for (auto& v : S.diag) {
          if (v.size()) viol = std::max(viol, v.maxCoeff());
        }
        // Farkas: b'y > 0, A^T(y) <= 0 proves there is no primal point.
        if (bty > 1e-8 && viol <= 1e-7 * (1.0 + bty)) {
          fill_solution_vars(sol);
          sol.status = SolveStatus::kInfeasibleCertificate;
          sol.ray_side = RaySide::kPrimalInfeasible;
          sol.farkas_y.assign(ray.data(), ray.data() + m);
          sol.message = "primal infeasible (improving dual ray)";
          return sol;
        }
      }
    }
    if (pobj < -div_threshold && pinf < 1e-5 * (1.0 + w.norm_b)) {
      double t = 0.0;
      for (auto& Mb : X.psd) t += Mb.trace();
      for (auto& v : X.diag) t += v.sum();
      if (t > 0.0) {
        ConeVars Xray = X;
        for (auto& Mb : Xray.psd) Mb /= t;
        for (auto& v : Xray.diag) v /= t;
        double aviol = w.apply_A(Xray).cwiseAbs().maxCoeff();
        double cdot = inner(w.C, Xray);
        // Improving ray: A(X) = 0, <C, X> < 0, X in cone.
        if (aviol <= 1e-6 * (1.0 + w.norm_b) && cdot < -1e-9) {
          fill_solution_vars(sol);
          sol.status = SolveStatus::kInfeasibleCertificate;
          sol.ray_side = RaySide::kDualInfeasible;
          sol.primal_ray = zero_blocks(prob);
          for (std::size_t bi = 0; bi < prob.blocks.size(); ++bi) {
            const BlockIndex& ix = w.cone.index[bi];
            sol.primal_ray[bi] = ix.psd ? Eigen::MatrixXd(Xray.psd[ix.local])
                                        : Eigen::MatrixXd(Xray.diag[ix.local]);
          }
          sol.message = "dual infeasible (improving primal ray); objective unbounded";
          return sol;
        }
      }
    }

    // NT scaling per block.
    bool scale_ok = true;
    double min_nt = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < X.psd.size(); ++p) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ez(Z.psd[p]);
      if (ez.eigenvalues()(0) <= 0.0) { scale_ok = false; break; }
      Eigen::VectorXd lam_half = ez.eigenvalues().cwiseSqrt();
      Eigen::MatrixXd Zhalf = ez.eigenvectors() * lam_half.asDiagonal() *
                              ez.eigenvectors().transpose();
      Eigen::MatrixXd Zihalf = ez.eigenvectors() *
                               lam_half.cwiseInverse().asDiagonal() *
                               ez.eigenvectors().transpose();
      Zinv[p] = Zihalf * Zihalf;
      Eigen::MatrixXd Mid = Zhalf * X.psd[p] * Zhalf;
      Mid = 0.5 * (Mid + Mid.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(Mid);
      if (em.eigenvalues()(0) <= 0.0) { scale_ok = false; break; }
      min_nt = std::min(min_nt, std::sqrt(em.eigenvalues()(0)));
      Eigen::VectorXd q4 = em.eigenvalues().array().pow(0.25);
      G[p] = Zihalf * em.eigenvectors() * q4.asDiagonal();
      Ginv[p] = q4.cwiseInverse().asDiagonal() *
                em.eigenvectors().transpose() * Zhalf;
      W[p] = G[p] * G[p].transpose();
      Vdiag[p] = em.eigenvalues().cwiseSqrt();
    }
    for (std::size_t d = 0; d < X.diag.size() && scale_ok; ++d) {
      if (X.diag[d].size() && (X.diag[d].minCoeff() <= 0.0 ||
                               Z.diag[d].minCoeff() <= 0.0)) {
        scale_ok = false;
        break;
      }
      wdiag[d] = (X.diag[d].array() / Z.diag[d].array()).sqrt();
      if (X.diag[d].size()) {
        min_nt = std::min(
            min_nt, std::sqrt((X.diag[d].array() * Z.diag[d].array()).minCoeff()));
      }
    }
    if (!scale_ok) {
      fill_solution_vars(sol);
      sol.status = SolveStatus::kNumericalFailure;
      sol.message = "iterate left the cone interior";
      return sol;
    }
    if (settings.collect_log && !sol.log.empty()) {
      sol.log.back().min_nt_eig = min_nt;
    }

    // Schur complement M_kl = sum_b tr(A_k W A_l W), dense lower triangle.
    M.setZero();
    for (std::size_t p = 0; p < w.psd_rows.size(); ++p) {
      const auto& br = w.psd_rows[p];
      const Eigen::MatrixXd& Wp = W[p];
      Eigen::MatrixXd P(Wp.rows(), Wp.cols());
      for (std::size_t r = 0; r < br.rows.size(); ++r) {
        P.setZero();
        for (const MatEntry& e : br.entries[r]) {
          P.noalias() += e.value * (Wp.col(e.i) * Wp.col(e.j).transpose());
          if (e.i != e.j) {
            P.noalias() += e.value * (Wp.col(e.j) * Wp.col(e.i).transpose());
          }
        }
        int k = br.rows[r];
        for (std::size_t r2 = 0; r2 <= r; ++r2) {
          double s = 0.0;
          for (const MatEntry& e : br.entries[r2]) {
            s += (e.i == e.j ? 1.0 : 2.0) * e.value * P(e.i, e.j);
          }
          int l = br.rows[r2];
          if (l <= k) M(k, l) += s; else M(l, k) += s;
        }
      }
    }
    for (std::size_t d = 0; d < w.diag_rows.size(); ++d) {
      const auto& br = w.diag_rows[d];
      Eigen::VectorXd w2 = wdiag[d].array().square();
      for (std::size_t r = 0; r < br.rows.size(); ++r) {
        int k = br.rows[r];
        for (std::size_t r2 = 0; r2 <= r; ++r2) {
          double s = 0.0;
          // both entry lists are sparse over the same block; merge on index
          for (const MatEntry& e1 : br.entries[r]) {
            for (const MatEntry& e2 : br.entries[r2]) {
              if (e1.i == e2.i) s += e1.value * e2.value * w2[e1.i];
            }
          }
          int l = br.rows[r2];
          if (s == 0.0) continue;
          if (l <= k) M(k, l) += s; else M(l, k) += s;
        }
      }
    }

    // Factor with a regularization ladder.
    double reg_scale = std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
    bool factored = false;
    for (double delta : {0.0, 1e-12, 1e-10, 1e-8}) {
      Eigen::MatrixXd Mreg = M.selfadjointView<Eigen::Lower>();
      if (delta > 0.0) Mreg.diagonal().array() += delta * reg_scale;
      schur.compute(Mreg);
      if (schur.info() == Eigen::Success) { factored = true; break; }
    }
    if (!factored) {
      fill_solution_vars(sol);
      sol.status = SolveStatus::kNumericalFailure;
      sol.message = "Schur complement factorization failed after regularization";
      return sol;
    }

    // Predictor (affine scaling direction).
    ConeVars Rc;
    Rc.set_identity(w.cone, 0.0);
    for (std::size_t p = 0; p < X.psd.size(); ++p) Rc.psd[p] = -X.psd[p];
    for (std::size_t d = 0; d < X.diag.size(); ++d) Rc.diag[d] = -X.diag[d];
    Eigen::VectorXd dy_aff;
    ConeVars dZ_aff, dX_aff;
    newton(Rc, rp, Rd, dy_aff, dZ_aff, dX_aff);

    double ap_aff = std::min(1.0, max_step(X, dX_aff));
    double ad_aff = std::min(1.0, max_step(Z, dZ_aff));

    Eigen::VectorXd dy;
    ConeVars dZ, dX;
    if (settings.mehrotra) {
      ConeVars Xa = X, Za = Z;
      axpy(Xa, dX_aff, ap_aff);
      axpy(Za, dZ_aff, ad_aff);
      double mu_aff = cone_product_trace(Xa, Za) / nu;
      double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 1e-10, 1.0);

      // Corrector: sigma*mu*Z^-1 - X - second-order term in the scaled space.
      for (std::size_t p = 0; p < X.psd.size(); ++p) {
        Eigen::MatrixXd dXh = Ginv[p] * dX_aff.psd[p] * Ginv[p].transpose();
        Eigen::MatrixXd dZh = G[p].transpose() * dZ_aff.psd[p] * G[p];
        Eigen::MatrixXd S = 0.5 * (dXh * dZh + dZh * dXh);
        Eigen::MatrixXd T(S.rows(), S.cols());
        for (Eigen::Index i = 0; i < S.rows(); ++i) {
          for (Eigen::Index j = 0; j < S.cols(); ++j) {
            T(i, j) = 0.5 * S(i, j) * (1.0 / Vdiag[p][i] + 1.0 / Vdiag[p][j]);
          }
        }
        Rc.psd[p] = sigma * mu * Zinv[p] - X.psd[p] -
                    G[p] * T * G[p].transpose();
        Rc.psd[p] = 0.5 * (Rc.psd[p] + Rc.psd[p].transpose()).eval();
      }
      for (std::size_t d = 0; d < X.diag.size(); ++d) {
        Rc.diag[d] = sigma * mu * Z.diag[d].cwiseInverse().array() -
                     X.diag[d].array() -
                     dX_aff.diag[d].array() * dZ_aff.diag[d].array() /
                         Z.diag[d].array();
      }
      newton(Rc, rp, Rd, dy, dZ, dX);
    } else {
      double sigma = 0.5;
      for (std::size_t p = 0; p < X.psd.size(); ++p) {
        Rc.psd[p] = sigma * mu * Zinv[p] - X.psd[p];
      }
      for (std::size_t d = 0; d < X.diag.size(); ++d) {
        Rc.diag[d] = sigma * mu * Z.diag[d].cwiseInverse().array() -
                     X.diag[d].array();
      }
      newton(Rc, rp, Rd, dy, dZ, dX);
    }

    double tau = settings.boundary_fraction;
    double ap = std::min(1.0, tau * max_step(X, dX));
    double ad = std::min(1.0, tau * max_step(Z, dZ));
    if (settings.collect_log && !sol.log.empty()) {
      sol.log.back().alpha_p = ap;
      sol.log.back().alpha_d = ad;
    }

    axpy(X, dX, ap);
    y += ad * dy;
    axpy(Z, dZ, ad);

    if (ap < 1e-4 && ad < 1e-4) ++stall_count; else stall_count = 0;
    bool improving = pinf < 0.5 * prev_pinf;
    prev_pinf = std::min(prev_pinf, pinf);
    if (stall_count >= 6 && !improving) break;
  }

  fill_solution_vars(sol);
  sol.status = SolveStatus::kMaxIterations;
  sol.message = "iteration limit or stall before reaching tolerances";
  return sol;
}

/// Minimizes an added slack on the equalities: A(X) + t*(b - A(X0)) = b with
/// t >= 0 is strictly feasible at (X0, 1); a strictly positive optimum
/// certifies that no X in the cone satisfies A(X) = b.
inline SdpSolution SdpSolver::phase1(const SdpProblem& prob,
                                     const SolverSettings& settings,
                                     double init_scale) {
  SdpProblem p1 = prob;
  int tau_block = static_cast<int>(p1.blocks.size());
  p1.blocks.push_back({1, BlockKind::kDiag});

  // r0 = b - A(xi * I)
  for (int k = 0; k < prob.num_constraints(); ++k) {
    double aI = 0.0;
    for (const MatEntry& e : prob.constraints[k]) {
      if (e.i == e.j) aI += e.value * init_scale;
    }
    double r0 = prob.b[k] - aI;
    if (r0 != 0.0) p1.constraints[k].push_back({tau_block, 0, 0, r0});
  }
  p1.objective.clear();
  p1.objective.push_back({tau_block, 0, 0, 1.0});

  SolverSettings s1 = settings;
  s1.allow_auxiliary_solves = false;
  SdpSolver aux(p1, s1);
  return aux.solve();
}

inline SdpSolution SdpSolver::solve() {
  // Presolve free variables away; the cone core handles PSD/diag only.
  FreeElimination elim;
  SdpProblem reduced = eliminate_free(prob_, elim);
  if (elim.unbounded) {
    SdpSolution sol;
    sol.status = SolveStatus::kInfeasibleCertificate;
    sol.ray_side = RaySide::kDualInfeasible;
    sol.message =
        "free variable with nonzero cost appears in no constraint; objective "
        "unbounded";
    return sol;
  }
  if (reduced.num_constraints() == 0) {
    // Everything was pinned by the free variables.
    SdpSolution sol;
    BlockValues Xr, Xf;
    std::vector<double> yr, yf;
    Xr = zero_blocks(reduced);
    undo_elimination(prob_, elim, Xr, yr, Xf, yf);
    sol.X = std::move(Xf);
    sol.y = std::move(yf);
    sol.Z = dual_slack(prob_, sol.y);
    sol.status = SolveStatus::kOptimal;
    sol.final_residuals = residuals(prob_, sol.X, sol.y);
    sol.objective = entry_inner(prob_.objective, sol.X);
    sol.message = "solved by elimination";
    return sol;
  }

  SdpSolution core = run_core(reduced, settings_);

  if (core.status == SolveStatus::kMaxIterations &&
      settings_.allow_auxiliary_solves) {
    // Decide between "genuinely hard" and "infeasible" via phase 1.
    double pinf_now = core.log.empty() ? 1.0 : core.log.back().pinf;
    if (pinf_now > 10.0 * settings_.tol_primal) {
      SdpSolution p1 = phase1(reduced, settings_, init_scale_for(reduced));
      if (p1.status == SolveStatus::kOptimal &&
          p1.objective > 1e-6 * (1.0 + init_scale_for(reduced))) {
        core.status = SolveStatus::kInfeasibleCertificate;
        core.ray_side = RaySide::kPrimalInfeasible;
        core.farkas_y = p1.y;
        core.message = "phase-1 slack bounded away from zero";
      }
    }
  }

  SdpSolution sol = std::move(core);
  BlockValues X_full;
  std::vector<double> y_full;
  undo_elimination(prob_, elim, sol.X, sol.y, X_full, y_full);
  sol.X = std::move(X_full);
  sol.y = std::move(y_full);
  sol.Z = dual_slack(prob_, sol.y);
  if (!sol.farkas_y.empty() && elim.had_free) {
    sol.farkas_y = lift_dual_ray(prob_, elim, sol.farkas_y);
  }
  sol.objective = entry_inner(prob_.objective, sol.X);
  double dobj = 0.0;
  for (int k = 0; k < prob_.num_constraints(); ++k) dobj += prob_.b[k] * sol.y[k];
  sol.dual_objective = dobj;
  sol.final_residuals = residuals(prob_, sol.X, sol.y);
  return sol;
}

inline SdpSolution solve(const SdpProblem& prob,
                         const SolverSettings& settings = {}) {
  SdpSolver solver(prob, settings);
  return solver.solve();
}

}  // namespace soscert
