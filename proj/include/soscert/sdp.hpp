#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace soscert {

enum class BlockKind { kPsd, kDiag, kFree };

struct SdpBlock {
  int size = 0;
  BlockKind kind = BlockKind::kPsd;
};

/// One entry of a symmetric data matrix, upper triangle (i <= j); the (j, i)
/// mirror is implied. Diagonal and free blocks only carry i == j entries.
struct MatEntry {
  int block = 0;
  int i = 0;
  int j = 0;
  double value = 0.0;
};

/// Block-diagonal SDP in equality form:
///   minimize    <C, X>
///   subject to  <A_k, X> = b_k,  k = 1..m
///               X_b PSD (psd blocks), X_b >= 0 (diag blocks), free otherwise,
/// where <A, X> counts off-diagonal entries twice (symmetric inner product).
struct SdpProblem {
  std::vector<SdpBlock> blocks;
  std::vector<std::vector<MatEntry>> constraints;  // A_k, one list per row
  std::vector<double> b;
  std::vector<MatEntry> objective;  // C

  int num_constraints() const { return static_cast<int>(constraints.size()); }

  void check_entry(const MatEntry& e, const char* what) const {
    if (e.block < 0 || e.block >= static_cast<int>(blocks.size())) {
      throw std::invalid_argument(std::string(what) + ": bad block index");
    }
    const SdpBlock& blk = blocks[e.block];
    if (e.i < 0 || e.j < e.i || e.j >= blk.size) {
      throw std::invalid_argument(std::string(what) +
                                  ": entry outside upper triangle");
    }
    if (blk.kind != BlockKind::kPsd && e.i != e.j) {
      throw std::invalid_argument(std::string(what) +
                                  ": off-diagonal entry in a diagonal block");
    }
  }

  void validate() const {
    if (b.size() != constraints.size()) {
      throw std::invalid_argument("SdpProblem: b size != constraint count");
    }
    for (const SdpBlock& blk : blocks) {
      if (blk.size < 1) throw std::invalid_argument("SdpProblem: empty block");
    }
    for (const auto& row : constraints) {
      if (row.empty()) {
        throw std::invalid_argument("SdpProblem: all-zero constraint row");
      }
      for (const MatEntry& e : row) check_entry(e, "constraint");
    }
    for (const MatEntry& e : objective) check_entry(e, "objective");
  }
};

/// Block values: PSD blocks as dense symmetric matrices, diagonal and free
/// blocks as column vectors.
using BlockValues = std::vector<Eigen::MatrixXd>;

inline BlockValues zero_blocks(const SdpProblem& prob) {
  BlockValues X;
  X.reserve(prob.blocks.size());
  for (const SdpBlock& blk : prob.blocks) {
    if (blk.kind == BlockKind::kPsd) {
      X.emplace_back(Eigen::MatrixXd::Zero(blk.size, blk.size));
    } else {
      X.emplace_back(Eigen::MatrixXd::Zero(blk.size, 1));
    }
  }
  return X;
}

inline double entry_inner(const std::vector<MatEntry>& entries,
                          const BlockValues& X) {
  double s = 0.0;
  for (const MatEntry& e : entries) {
    if (X[e.block].cols() == 1) {
      s += e.value * X[e.block](e.i, 0);
    } else if (e.i == e.j) {
      s += e.value * X[e.block](e.i, e.i);
    } else {
      s += 2.0 * e.value * X[e.block](e.i, e.j);
    }
  }
  return s;
}

inline void add_entries(BlockValues& M, const std::vector<MatEntry>& entries,
                        double scale) {
  for (const MatEntry& e : entries) {
    if (M[e.block].cols() == 1) {
      M[e.block](e.i, 0) += scale * e.value;
    } else {
      M[e.block](e.i, e.j) += scale * e.value;
      if (e.i != e.j) M[e.block](e.j, e.i) += scale * e.value;
    }
  }
}

/// C - A^T(y) as block values (the dual slack implied by y).
inline BlockValues dual_slack(const SdpProblem& prob,
                              const std::vector<double>& y) {
  BlockValues Z = zero_blocks(prob);
  add_entries(Z, prob.objective, 1.0);
  for (int k = 0; k < prob.num_constraints(); ++k) {
    if (y[k] != 0.0) add_entries(Z, prob.constraints[k], -y[k]);
  }
  return Z;
}

struct Residuals {
  double primal_inf = 0.0;  // ||A(X) - b||_inf
  double dual_inf = 0.0;    // cone violation of C - A^T(y), sup norm
  double gap = 0.0;         // |<C,X> - b'y| / (1 + |<C,X>|)
};

/// Feasibility and duality-gap residuals of a candidate primal/dual pair.
inline Residuals residuals(const SdpProblem& prob, const BlockValues& X,
                           const std::vector<double>& y) {
  Residuals r;
  for (int k = 0; k < prob.num_constraints(); ++k) {
    r.primal_inf = std::max(
        r.primal_inf, std::abs(entry_inner(prob.constraints[k], X) - prob.b[k]));
  }
  BlockValues Z = dual_slack(prob, y);
  for (std::size_t bidx = 0; bidx < prob.blocks.size(); ++bidx) {
    const SdpBlock& blk = prob.blocks[bidx];
    if (blk.kind == BlockKind::kPsd) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Z[bidx],
                                                        Eigen::EigenvaluesOnly);
      r.dual_inf = std::max(r.dual_inf, std::max(0.0, -es.eigenvalues()(0)));
    } else if (blk.kind == BlockKind::kDiag) {
      r.dual_inf = std::max(r.dual_inf, std::max(0.0, -Z[bidx].minCoeff()));
    } else {
      r.dual_inf = std::max(r.dual_inf, Z[bidx].cwiseAbs().maxCoeff());
    }
  }
  double pobj = entry_inner(prob.objective, X);
  double dobj = 0.0;
  for (int k = 0; k < prob.num_constraints(); ++k) dobj += prob.b[k] * y[k];
  r.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));
  return r;
}

// ---------------------------------------------------------------------------
// Free-variable elimination.
//
// The interior-point core handles PSD and diagonal cones only. Free scalars
// are pivoted out of the equality system beforehand (Gaussian elimination
// with partial pivoting); the record below reconstructs their values and the
// original dual vector afterwards.
// ---------------------------------------------------------------------------

namespace detail {

using PsdKey = std::tuple<int, int, int>;  // block, i, j (i <= j)

struct WorkRow {
  std::map<PsdKey, double> cone;   // entries on PSD/diag blocks
  std::map<int, double> free_c;    // free-variable id -> coefficient
  double b = 0.0;
};

}  // namespace detail

struct FreeElimination {
  struct Pivot {
    int free_var = -1;     // eliminated variable id
    int row = -1;          // pivot row (original index)
    double alpha = 0.0;    // pivot coefficient
    detail::WorkRow row_snapshot;            // row contents at pivot time
    std::vector<std::pair<int, double>> col;  // (row, coef of var) pre-step
    double obj_coef = 0.0;                   // objective coef at pivot time
  };

  bool had_free = false;
  bool unbounded = false;          // a free variable with zero column but
  int unbounded_var = -1;          // nonzero cost: the problem is unbounded
  std::vector<Pivot> pivots;       // in elimination order
  std::vector<int> dropped_vars;   // zero column, zero cost
  std::vector<int> kept_rows;      // original row ids, in reduced order
  std::vector<int> block_map;      // original block -> reduced block (-1 if free)
  std::vector<std::pair<int, int>> free_slots;  // var id -> (block, index)
  double objective_offset = 0.0;
};

/// Removes free blocks from a problem by solving the equality system for the
/// free scalars. Returns the reduced problem (PSD/diag blocks only).
inline SdpProblem eliminate_free(const SdpProblem& prob, FreeElimination& rec) {
  rec = FreeElimination();
  rec.block_map.assign(prob.blocks.size(), -1);
  int reduced_blocks = 0;
  for (std::size_t bidx = 0; bidx < prob.blocks.size(); ++bidx) {
    if (prob.blocks[bidx].kind == BlockKind::kFree) {
      rec.had_free = true;
      for (int i = 0; i < prob.blocks[bidx].size; ++i) {
        rec.free_slots.emplace_back(static_cast<int>(bidx), i);
      }
    } else {
      rec.block_map[bidx] = reduced_blocks++;
    }
  }
  if (!rec.had_free) {
    rec.kept_rows.resize(prob.num_constraints());
    for (int k = 0; k < prob.num_constraints(); ++k) rec.kept_rows[k] = k;
    return prob;
  }

  // Free slot lookup: (block, index) -> variable id.
  std::map<std::pair<int, int>, int> slot_id;
  for (std::size_t v = 0; v < rec.free_slots.size(); ++v) {
    slot_id[rec.free_slots[v]] = static_cast<int>(v);
  }

  auto split_entries = [&](const std::vector<MatEntry>& entries,
                           detail::WorkRow& row) {
    for (const MatEntry& e : entries) {
      if (prob.blocks[e.block].kind == BlockKind::kFree) {
        row.free_c[slot_id.at({e.block, e.i})] += e.value;
      } else {
        row.cone[{e.block, e.i, e.j}] += e.value;
      }
    }
  };

  std::vector<detail::WorkRow> rows(prob.num_constraints());
  std::vector<bool> active(prob.num_constraints(), true);
  for (int k = 0; k < prob.num_constraints(); ++k) {
    split_entries(prob.constraints[k], rows[k]);
    rows[k].b = prob.b[k];
  }
  detail::WorkRow obj;
  split_entries(prob.objective, obj);

  for (int v = 0; v < static_cast<int>(rec.free_slots.size()); ++v) {
    // Partial pivoting over the still-active rows.
    int pivot_row = -1;
    double best = 0.0;
    for (int k = 0; k < prob.num_constraints(); ++k) {
      if (!active[k]) continue;
      auto it = rows[k].free_c.find(v);
      if (it == rows[k].free_c.end()) continue;
      if (std::abs(it->second) > best) {
        best = std::abs(it->second);
        pivot_row = k;
      }
    }
    if (pivot_row < 0 || best < 1e-13) {
      auto it = obj.free_c.find(v);
      if (it != obj.free_c.end() && std::abs(it->second) > 1e-13) {
        rec.unbounded = true;
        rec.unbounded_var = v;
        return SdpProblem{};
      }
      rec.dropped_vars.push_back(v);
      continue;
    }

    FreeElimination::Pivot piv;
    piv.free_var = v;
    piv.row = pivot_row;
    piv.alpha = rows[pivot_row].free_c.at(v);
    piv.row_snapshot = rows[pivot_row];
    for (int k = 0; k < prob.num_constraints(); ++k) {
      if (!active[k] || k == pivot_row) continue;
      auto it = rows[k].free_c.find(v);
      if (it != rows[k].free_c.end() && it->second != 0.0) {
        piv.col.emplace_back(k, it->second);
      }
    }
    auto oit = obj.free_c.find(v);
    piv.obj_coef = oit == obj.free_c.end() ? 0.0 : oit->second;

    auto axpy_row = [](detail::WorkRow& dst, const detail::WorkRow& src,
                       double scale) {
      for (auto& [key, val] : src.cone) {
        double& d = dst.cone[key];
        d += scale * val;
        if (std::abs(d) < 1e-300) dst.cone.erase(key);
      }
      for (auto& [id, val] : src.free_c) {
        double& d = dst.free_c[id];
        d += scale * val;
      }
      dst.b += scale * src.b;
    };

    for (auto& [k, coef] : piv.col) {
      axpy_row(rows[k], piv.row_snapshot, -coef / piv.alpha);
      rows[k].free_c.erase(v);
    }
    if (piv.obj_coef != 0.0) {
      // Substituting x_v into the objective: offset picks up b, the cone part
      // of the pivot row folds into C with opposite sign.
      double scale = piv.obj_coef / piv.alpha;
      for (auto& [key, val] : piv.row_snapshot.cone) obj.cone[key] -= scale * val;
      for (auto& [id, val] : piv.row_snapshot.free_c) {
        if (id != v) obj.free_c[id] -= scale * val;
      }
      rec.objective_offset += scale * piv.row_snapshot.b;
      obj.free_c.erase(v);
    }
    active[pivot_row] = false;
    rec.pivots.push_back(std::move(piv));
  }

  SdpProblem out;
  for (std::size_t bidx = 0; bidx < prob.blocks.size(); ++bidx) {
    if (prob.blocks[bidx].kind != BlockKind::kFree) {
      out.blocks.push_back(prob.blocks[bidx]);
    }
  }
  auto emit_row = [&](const detail::WorkRow& row) {
    std::vector<MatEntry> entries;
    for (auto& [key, val] : row.cone) {
      if (val == 0.0) continue;
      auto [blk, i, j] = key;
      entries.push_back({rec.block_map[blk], i, j, val});
    }
    return entries;
  };
  for (int k = 0; k < prob.num_constraints(); ++k) {
    if (!active[k]) continue;
    std::vector<MatEntry> entries = emit_row(rows[k]);
    if (entries.empty()) {
      // Row reduced to 0 = b. A nonzero b certifies infeasibility; keep it as
      // an explicit contradiction row on a throwaway slot so the solver's
      // infeasibility path reports it (rather than silently dropping it).
      if (std::abs(rows[k].b) < 1e-12) continue;
      entries.push_back({0, 0, 0, 0.0});
    }
    out.constraints.push_back(std::move(entries));
    out.b.push_back(rows[k].b);
    rec.kept_rows.push_back(k);
  }
  out.objective = emit_row(obj);
  return out;
}

/// Rebuilds (X with free values, y) of the original problem from the reduced
/// solution. `X_reduced` / `y_reduced` must match the reduced problem.
inline void undo_elimination(const SdpProblem& original,
                             const FreeElimination& rec,
                             const BlockValues& X_reduced,
                             const std::vector<double>& y_reduced,
                             BlockValues& X_full, std::vector<double>& y_full) {
  if (!rec.had_free) {
    X_full = X_reduced;
    y_full = y_reduced;
    return;
  }
  X_full = zero_blocks(original);
  for (std::size_t bidx = 0; bidx < original.blocks.size(); ++bidx) {
    if (rec.block_map[bidx] >= 0) X_full[bidx] = X_reduced[rec.block_map[bidx]];
  }
  y_full.assign(original.num_constraints(), 0.0);
  for (std::size_t k = 0; k < rec.kept_rows.size(); ++k) {
    y_full[rec.kept_rows[k]] = y_reduced[k];
  }

  // Back-substitute free values and pivot-row duals in reverse order.
  std::vector<double> free_vals(rec.free_slots.size(), 0.0);
  for (auto it = rec.pivots.rbegin(); it != rec.pivots.rend(); ++it) {
    const auto& piv = *it;
    double cone_part = 0.0;
    for (auto& [key, val] : piv.row_snapshot.cone) {
      auto [blk, i, j] = key;
      double xij = X_full[blk].cols() == 1 ? X_full[blk](i, 0)
                                           : X_full[blk](i, j);
      cone_part += (i == j || X_full[blk].cols() == 1 ? 1.0 : 2.0) * val * xij;
    }
    double free_part = 0.0;
    for (auto& [id, val] : piv.row_snapshot.free_c) {
      if (id != piv.free_var) free_part += val * free_vals[id];
    }
    free_vals[piv.free_var] =
        (piv.row_snapshot.b - cone_part - free_part) / piv.alpha;

    double dual_sum = 0.0;
    for (auto& [row, coef] : piv.col) dual_sum += coef * y_full[row];
    y_full[piv.row] = (piv.obj_coef - dual_sum) / piv.alpha;
  }
  for (std::size_t v = 0; v < rec.free_slots.size(); ++v) {
    auto [blk, idx] = rec.free_slots[v];
    X_full[blk](idx, 0) = free_vals[v];
  }
}

/// Lifts a dual ray of the reduced problem back to the original rows: the
/// pivot rows receive whatever cancels the free-variable columns (a ray is a
/// dual recovery with zero objective coefficients).
inline std::vector<double> lift_dual_ray(const SdpProblem& original,
                                         const FreeElimination& rec,
                                         const std::vector<double>& ray_reduced) {
  std::vector<double> ray(original.num_constraints(), 0.0);
  for (std::size_t k = 0; k < rec.kept_rows.size() && k < ray_reduced.size(); ++k) {
    ray[rec.kept_rows[k]] = ray_reduced[k];
  }
  for (auto it = rec.pivots.rbegin(); it != rec.pivots.rend(); ++it) {
    double dual_sum = 0.0;
    for (auto& [row, coef] : it->col) dual_sum += coef * ray[row];
    ray[it->row] = -dual_sum / it->alpha;
  }
  return ray;
}

}  // namespace soscert
