#pragma once

#include "slsloc/sls_operators.hpp"

#include <optional>
#include <string>

namespace slsloc {

enum class Formulation { dynamics_first, locality_first, unconstrained };

const char* to_string(Formulation f);

/// Affine description of a (localized) trajectory set: the set equals
/// offset + image(basis), and `dimension` is its numerical rank decision.
struct TrajectorySetDescriptor {
  Formulation formulation = Formulation::unconstrained;
  Vec offset;
  Mat basis;
  RankResult dimension;
};

/// Result of intersecting dynamics with locality constraints. When the
/// constraints admit no closed-loop map, `descriptor` is absent and
/// `residual` reports the violation.
struct LocalizedSetResult {
  bool feasible = false;
  double residual = 0.0;
  std::optional<TrajectorySetDescriptor> descriptor;
};

// Unconstrained trajectory set from x0: offset zp x0, basis zh X(x0).
TrajectorySetDescriptor trajectory_set(const SlsOperators& ops, const Vec& x0,
                                       double rank_tol = -1.0);

LocalizedSetResult localized_set_dynamics_first(const SlsOperators& ops, const IndexSets& idx,
                                                const Vec& x0, double eps = 1e-8,
                                                double rank_tol = -1.0);

LocalizedSetResult localized_set_locality_first(const SlsOperators& ops, const IndexSets& idx,
                                                const Vec& x0, double eps = 1e-8,
                                                double rank_tol = -1.0);

// Max-norm residual of the min-norm solution of H z = k; feasible iff <= eps.
bool check_feasibility(const Mat& H, const Vec& k, double eps, double* residual = nullptr);

struct BlockFeasibility {
  int subsystem = 0;
  bool feasible = false;
  double residual = 0.0;
};

// Per-subsystem verdicts; their conjunction equals the monolithic check.
std::vector<BlockFeasibility> check_feasibility_blocks(const std::vector<SubsystemBlock>& blocks,
                                                       double eps);

/// Certificate that a locality pattern preserves optimal global performance:
/// requires feasibility plus rank(localized basis) == n_u * T.
struct PerformanceCertificate {
  bool feasible = false;
  Index rank_found = 0;
  Index rank_target = 0;
  bool certified_optimal = false;
  Formulation formulation = Formulation::locality_first;
  double tolerance = 1e-8;          // feasibility tolerance
  double rank_tolerance_used = 0.0;
  double feasibility_residual = 0.0;
  double construct_seconds = 0.0;
  double rank_seconds = 0.0;
};

// x0 must have at least one nonzero entry (throws std::invalid_argument on a
// zero vector). Default formulation is locality-first: its matrix shrinks as
// the pattern gets sparser.
PerformanceCertificate global_performance_certificate(const LtiNetworkSystem& sys,
                                                      const SparsityPattern& pattern, int T,
                                                      const Vec& x0, double eps = 1e-8,
                                                      Formulation formulation = Formulation::locality_first,
                                                      double rank_tol = -1.0);

// Closed forms for T = 1: zab_pinv = [[I,0],[CA,C],[-B'CA,-B'C]] and
// zh = [[0, I-C, CB],[0, B'C, I-B'CB]] with C = (I + B B')^{-1}.
std::pair<Mat, Mat> t1_closed_forms(const Mat& A, const Mat& B);

/// Structural facts about blkdiag(zh, ..., zh) for T = 1. Each item records a
/// pass/fail plus a short witness for the first violation found.
struct T1StructureReport {
  struct Item {
    bool pass = true;
    std::string witness;
  };
  Item rows_two_nonzeros;      // two nonzeros per (nonzero) row, at the predicted columns
  Item duplicate_rows;         // exactly one partner row, equal (or scalar multiple)
  Item columns_two_nonzeros;   // two nonzeros per nonzero column
  Item paired_columns;         // paired columns of zh X equal (or scalar multiple)

  bool all_pass() const {
    return rows_two_nonzeros.pass && duplicate_rows.pass && columns_two_nonzeros.pass &&
           paired_columns.pass;
  }
};

// B = I case: nonzero entries equal 1/2, duplicate rows exactly equal, and
// the nonzero column positions follow the even/odd block-index formulas.
T1StructureReport t1_structure_report(Index n_x);

// Quasi-diagonal B: duplicate rows agree up to a scalar factor.
T1StructureReport t1_structure_report_quasi_diagonal(const Mat& B);

// T = 1, B = I equality predicate: for every input coordinate k there is a
// rank-preserving column (block index not divisible by 3) of blkdiag(zh,...)
// that is zero at every constrained row. Equivalent to the locality-first
// rank condition for this system class.
bool t1_equality_condition(const IndexList& constrained, Index n_x, Index n_u);

// True iff B is a column selection of a diagonal matrix: at most one nonzero
// per row and per column.
bool is_quasi_diagonal(const Mat& B);

}  // namespace slsloc
