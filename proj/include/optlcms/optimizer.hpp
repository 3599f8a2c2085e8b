#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "optlcms/score.hpp"

namespace optlcms {

// Memory-constraint multiplier and the clip set of the closed-form solve.
struct SolverDiagnostics {
  double lambda = 0.0;
  std::vector<int> active_set;     // groups with delta_g < 1
  double weighted_log_term = 0.0;  // I = sum over active of (1/eps_g) ln(q_g eps_g)
};

struct DeltaSolution {
  std::vector<double> deltas;
  SolverDiagnostics diag;
};

// Closed-form delta_g = min{1, (1/(q_g eps_g)) exp[-((B/(be)) - I) / S]}
// with the clip set found by fixed point: start with every group active,
// drop any group whose solved delta reaches 1, re-solve until stable.
// budget_bytes is the sketch share of the budget (M - cn). Throws
// InfeasibleError when the budget is non-positive or every group clips.
DeltaSolution solve_deltas(std::span<const double> epsilons, std::span<const double> query_masses,
                           double budget_bytes, double counter_bytes);

// sum u_g ln(u_g / v_g) for two positive distributions; rejects v_g = 0
// with u_g > 0 (merge such bins upstream).
double kl_divergence(std::span<const double> u, std::span<const double> v);

struct GroupDims {
  uint64_t width = 0;
  uint64_t depth = 0;
};

// width = ceil(e/eps_g), depth = max(1, ceil(ln(1/delta_g))).
std::vector<GroupDims> finalize_dims(std::span<const double> deltas,
                                     std::span<const double> epsilons, uint32_t counter_bytes);

struct OptimizerInputs {
  double epsilon_global = 0.0;   // allowable-error scale of the whole structure
  uint64_t total_mass = 0;       // N
  double memory_budget = 0.0;    // M, bytes for sketches + UB
  double ub_bytes = 20.0;        // c
  double counter_bytes = 4.0;    // b
};

struct DpResult {
  // cut_bins[0] = 0 < cut_bins[1] < ... < cut_bins[G] = ub_bin; group g
  // covers bins [cut_bins[g], cut_bins[g+1]).
  std::vector<size_t> cut_bins;
  double kl = 0.0;
};

// u ln(u/v) of bins [lo, hi) under the UB at [ub_bin, end). The DP and the
// exhaustive test oracle share this so their sums are bit-identical.
double dp_kl_term(const ScoreHistogram& hist, size_t lo, size_t hi, size_t ub_bin);

// Maximizes sum u ln(u/v) over contiguous partitions of bins [0, ub_bin)
// into at most max_groups groups. With the feasibility check on, a group
// is only accepted while its optimistic delta estimate stays below 1,
// which by the log-sum inequality guarantees the exact deltas of any
// accepted plan stay below 1. Ties prefer fewer groups, then the lower
// split point. Throws InfeasibleError when no partition passes the check.
DpResult dp_partition(const ScoreHistogram& hist, size_t ub_bin, int max_groups,
                      const OptimizerInputs& in, bool feasibility_check = true);

struct PartitionPlan {
  std::vector<double> thresholds;  // t_1 .. t_G ascending; t_G is the UB boundary
  double ub_boundary = 0.0;

  std::vector<double> epsilons;      // eps_g = eps N / N_g
  std::vector<double> deltas;        // each in (0, 1)
  std::vector<double> query_masses;  // q_g, share of all query mass
  std::vector<uint64_t> group_mass;  // N_g
  std::vector<GroupDims> dims;

  std::vector<size_t> cut_bins;  // group bin ranges in the source histogram
  size_t ub_bin = 0;

  uint64_t predicted_ub_unique = 0;  // n
  uint64_t predicted_ub_mass = 0;    // N_UB
  double predicted_ub_query = 0.0;   // q_UB

  double lambda = 0.0;
  std::vector<int> active_set;
  double kl = 0.0;
  double objective = 0.0;  // sum delta_g q_g
  double epsilon_global = 0.0;

  uint64_t counter_bytes = 4;
  uint64_t ub_bytes = 20;

  size_t group_count() const { return deltas.size(); }
  uint64_t sketch_bytes() const;
  uint64_t memory_bytes() const {  // sketches + predicted UB
    return sketch_bytes() + ub_bytes * predicted_ub_unique;
  }
  // Rounding slack allowed past the nominal budget: one extra row per group.
  uint64_t rounding_slack_bytes() const;

  int group_of_score(double score) const;  // -1 means UB

  std::string explain() const;  // plain-text key/value dump
};

// sum delta_g q_g with the query masses recomputed from the histogram for
// the plan's bin ranges.
double evaluate_objective(const PartitionPlan& plan, const ScoreHistogram& hist);

// Sweeps the UB boundary over bin edges, runs the DP below each candidate,
// scores candidates with (1-q_UB) exp[-eps N (M-cn) / (be (N-N_UB))] exp[-KL],
// and finalizes the best one: exact deltas via solve_deltas, integer dims,
// and a budget shave that keeps the built memory within the rounding slack.
PartitionPlan sweep_ub_boundary(const ScoreHistogram& hist, int max_groups,
                                const OptimizerInputs& in);

}  // namespace optlcms
