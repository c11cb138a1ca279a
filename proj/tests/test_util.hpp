#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "soscert/polynomial.hpp"
#include "soscert/sdp.hpp"

namespace testutil {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline soscert::Polynomial random_polynomial(Rng& rng,
                                             const soscert::SpacePtr& space,
                                             int max_degree, int num_terms,
                                             double coef_range = 5.0) {
  soscert::Polynomial p(space);
  for (int t = 0; t < num_terms; ++t) {
    std::vector<std::pair<int, int>> pairs;
    int deg = uniform_int(rng, 0, max_degree);
    for (int d = 0; d < deg; ++d) {
      pairs.emplace_back(uniform_int(rng, 0, space->size() - 1), 1);
    }
    p.add_term(soscert::Monomial::from_pairs(pairs),
               uniform(rng, -coef_range, coef_range));
  }
  p.normalize();
  return p;
}

inline Eigen::MatrixXd random_spd(Rng& rng, int n, double shift = 0.5) {
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) A(i, j) = uniform(rng, -1.0, 1.0);
  }
  return A * A.transpose() + shift * Eigen::MatrixXd::Identity(n, n);
}

/// Strictly feasible random SDP built from a known interior primal/dual pair.
struct FeasibleInstance {
  soscert::SdpProblem prob;
  double primal_obj_at_x0 = 0.0;
  double dual_obj_at_y0 = 0.0;
};

inline FeasibleInstance random_feasible_sdp(Rng& rng, bool with_diag,
                                            bool with_free) {
  using namespace soscert;
  FeasibleInstance inst;
  SdpProblem& prob = inst.prob;
  int n_psd = uniform_int(rng, 1, 2);
  for (int i = 0; i < n_psd; ++i) {
    prob.blocks.push_back({uniform_int(rng, 1, 5), BlockKind::kPsd});
  }
  if (with_diag) prob.blocks.push_back({uniform_int(rng, 1, 4), BlockKind::kDiag});
  int free_block = -1;
  int n_free = 0;
  if (with_free) {
    free_block = static_cast<int>(prob.blocks.size());
    n_free = uniform_int(rng, 1, 3);
    prob.blocks.push_back({n_free, BlockKind::kFree});
  }

  BlockValues X0 = zero_blocks(prob);
  for (std::size_t b = 0; b < prob.blocks.size(); ++b) {
    if (prob.blocks[b].kind == BlockKind::kPsd) {
      X0[b] = random_spd(rng, prob.blocks[b].size);
    } else if (prob.blocks[b].kind == BlockKind::kDiag) {
      for (int i = 0; i < prob.blocks[b].size; ++i) {
        X0[b](i, 0) = uniform(rng, 0.2, 2.0);
      }
    } else {
      for (int i = 0; i < prob.blocks[b].size; ++i) {
        X0[b](i, 0) = uniform(rng, -2.0, 2.0);
      }
    }
  }

  int m = uniform_int(rng, 2, 8);
  std::vector<double> y0(m);
  for (int k = 0; k < m; ++k) {
    std::vector<MatEntry> row;
    for (std::size_t b = 0; b < prob.blocks.size(); ++b) {
      int nb = prob.blocks[b].size;
      int picks = uniform_int(rng, 1, std::min(3, nb * (nb + 1) / 2));
      for (int t = 0; t < picks; ++t) {
        int i = uniform_int(rng, 0, nb - 1);
        int j = prob.blocks[b].kind == BlockKind::kPsd ? uniform_int(rng, i, nb - 1)
                                                       : i;
        row.push_back({static_cast<int>(b), i, j, uniform(rng, -2.0, 2.0)});
      }
    }
    prob.constraints.push_back(row);
    y0[k] = uniform(rng, -1.0, 1.0);
  }
  prob.b.resize(m);
  for (int k = 0; k < m; ++k) {
    prob.b[k] = entry_inner(prob.constraints[k], X0);
  }

  // C = A^T(y0) + Z0 with Z0 strictly in the cone (zero on the free block,
  // so the dual equality A_f^T y = c_f holds at y0).
  BlockValues Z0 = zero_blocks(prob);
  for (std::size_t b = 0; b < prob.blocks.size(); ++b) {
    if (prob.blocks[b].kind == BlockKind::kPsd) {
      Z0[b] = random_spd(rng, prob.blocks[b].size);
    } else if (prob.blocks[b].kind == BlockKind::kDiag) {
      for (int i = 0; i < prob.blocks[b].size; ++i) {
        Z0[b](i, 0) = uniform(rng, 0.2, 2.0);
      }
    }
  }
  BlockValues Cmat = zero_blocks(prob);
  for (int k = 0; k < m; ++k) add_entries(Cmat, prob.constraints[k], y0[k]);
  for (std::size_t b = 0; b < prob.blocks.size(); ++b) Cmat[b] += Z0[b];
  for (std::size_t b = 0; b < prob.blocks.size(); ++b) {
    int nb = prob.blocks[b].size;
    if (prob.blocks[b].kind == BlockKind::kPsd) {
      for (int i = 0; i < nb; ++i) {
        for (int j = i; j < nb; ++j) {
          if (Cmat[b](i, j) != 0.0) {
            prob.objective.push_back({static_cast<int>(b), i, j, Cmat[b](i, j)});
          }
        }
      }
    } else {
      for (int i = 0; i < nb; ++i) {
        if (Cmat[b](i, 0) != 0.0) {
          prob.objective.push_back({static_cast<int>(b), i, i, Cmat[b](i, 0)});
        }
      }
    }
  }

  inst.primal_obj_at_x0 = entry_inner(prob.objective, X0);
  for (int k = 0; k < m; ++k) inst.dual_obj_at_y0 += prob.b[k] * y0[k];
  return inst;
}

}  // namespace testutil
