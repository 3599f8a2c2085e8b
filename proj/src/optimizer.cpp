#include "optlcms/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "optlcms/errors.hpp"

namespace optlcms {

namespace {
constexpr double kE = std::numbers::e;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

DeltaSolution solve_deltas(std::span<const double> epsilons, std::span<const double> query_masses,
                           double budget_bytes, double counter_bytes) {
  const size_t n = epsilons.size();
  if (n == 0 || query_masses.size() != n) {
    throw std::invalid_argument("solve_deltas: need matching non-empty epsilon/query vectors");
  }
  for (size_t g = 0; g < n; ++g) {
    if (!(epsilons[g] > 0.0)) throw std::invalid_argument("solve_deltas: epsilon_g must be > 0");
    if (!(query_masses[g] > 0.0)) throw std::invalid_argument("solve_deltas: q_g must be > 0");
  }
  if (!(counter_bytes > 0.0)) throw std::invalid_argument("solve_deltas: counter_bytes must be > 0");
  if (!(budget_bytes > 0.0)) {
    throw InfeasibleError("solve_deltas: sketch budget is non-positive");
  }

  std::vector<char> active(n, 1);
  std::vector<double> deltas(n, 1.0);
  double expfactor = 0.0;
  double wlog = 0.0;

  // Fixed point on the clip set: it only shrinks, so this terminates.
  for (;;) {
    double inv_sum = 0.0;  // S = sum 1/eps_g over active
    wlog = 0.0;            // I = sum (1/eps_g) ln(q_g eps_g) over active
    size_t live = 0;
    for (size_t g = 0; g < n; ++g) {
      if (!active[g]) continue;
      ++live;
      inv_sum += 1.0 / epsilons[g];
      wlog += std::log(query_masses[g] * epsilons[g]) / epsilons[g];
    }
    if (live == 0) throw InfeasibleError("solve_deltas: every group clipped to delta = 1");

    expfactor = std::exp(-(budget_bytes / (counter_bytes * kE) - wlog) / inv_sum);

    bool clipped = false;
    for (size_t g = 0; g < n; ++g) {
      if (!active[g]) continue;
      double d = expfactor / (query_masses[g] * epsilons[g]);
      if (d >= 1.0) {
        active[g] = 0;
        deltas[g] = 1.0;
        clipped = true;
      } else {
        deltas[g] = std::max(d, std::numeric_limits<double>::min());
      }
    }
    if (!clipped) break;
  }

  DeltaSolution out;
  out.deltas = std::move(deltas);
  out.diag.lambda = expfactor / (counter_bytes * kE);
  out.diag.weighted_log_term = wlog;
  for (size_t g = 0; g < n; ++g) {
    if (active[g]) out.diag.active_set.push_back(static_cast<int>(g));
  }
  return out;
}

double kl_divergence(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double s = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    if (!(u[i] > 0.0)) throw std::invalid_argument("kl_divergence: u entries must be positive");
    if (!(v[i] > 0.0)) {
      throw std::invalid_argument("kl_divergence: v_i = 0 with u_i > 0 diverges; merge bins");
    }
    s += u[i] * std::log(u[i] / v[i]);
  }
  return s;
}

std::vector<GroupDims> finalize_dims(std::span<const double> deltas,
                                     std::span<const double> epsilons, uint32_t counter_bytes) {
  (void)counter_bytes;
  if (deltas.size() != epsilons.size()) throw std::invalid_argument("finalize_dims: size mismatch");
  std::vector<GroupDims> dims(deltas.size());
  for (size_t g = 0; g < deltas.size(); ++g) {
    if (!(deltas[g] > 0.0) || deltas[g] >= 1.0) {
      throw std::invalid_argument("finalize_dims: delta_g must lie in (0, 1)");
    }
    dims[g].width = static_cast<uint64_t>(std::ceil(kE / epsilons[g]));
    dims[g].depth = std::max<uint64_t>(
        1, static_cast<uint64_t>(std::ceil(std::log(1.0 / deltas[g]))));
  }
  return dims;
}

double dp_kl_term(const ScoreHistogram& hist, size_t lo, size_t hi, size_t ub_bin) {
  GroupStats gs = group_stats(hist, lo, hi, ub_bin);
  if (!(gs.u > 0.0) || !(gs.v > 0.0)) return kNegInf;  // degenerate group, not selectable
  return gs.u * std::log(gs.u / gs.v);
}

namespace {

// exp[-eps N (M - cn) / (b e (N - N_UB))], the budget factor shared by the
// boundary objective and the optimistic delta estimate.
double budget_factor(const ScoreHistogram& hist, size_t ub_bin, const OptimizerInputs& in) {
  const uint64_t ub_mass = hist.data_in(ub_bin, hist.bins());
  const uint64_t ub_unique = hist.unique_in(ub_bin, hist.bins());
  const double cms_mass = static_cast<double>(in.total_mass - ub_mass);
  const double sketch_budget = in.memory_budget - in.ub_bytes * static_cast<double>(ub_unique);
  if (!(cms_mass > 0.0) || !(sketch_budget > 0.0)) return 1.0;  // caller rejects these
  const double eps_n = in.epsilon_global * static_cast<double>(in.total_mass);
  return std::exp(-eps_n * sketch_budget / (in.counter_bytes * kE * cms_mass));
}

}  // namespace

DpResult dp_partition(const ScoreHistogram& hist, size_t ub_bin, int max_groups,
                      const OptimizerInputs& in, bool feasibility_check) {
  if (ub_bin == 0 || ub_bin > hist.bins()) {
    throw std::invalid_argument("dp_partition: ub_bin must lie in [1, bins()]");
  }
  if (max_groups < 1) throw std::invalid_argument("dp_partition: need max_groups >= 1");

  const size_t k = ub_bin;
  const size_t groups = static_cast<size_t>(max_groups);
  const double factor = feasibility_check ? budget_factor(hist, ub_bin, in) : 0.0;

  // dp[s][p]: best KL over partitions of bins [0, s) into at most p groups.
  // parent -2 means "inherited from p-1", otherwise the split point y.
  std::vector<std::vector<double>> dp(k + 1, std::vector<double>(groups + 1, kNegInf));
  std::vector<std::vector<ptrdiff_t>> parent(k + 1, std::vector<ptrdiff_t>(groups + 1, -1));
  dp[0][0] = 0.0;
  for (size_t p = 1; p <= groups; ++p) dp[0][p] = 0.0;

  for (size_t p = 1; p <= groups; ++p) {
    for (size_t s = 1; s <= k; ++s) {
      dp[s][p] = dp[s][p - 1];
      parent[s][p] = -2;
      const double remainder = (s < k) ? dp_kl_term(hist, s, k, ub_bin) : 0.0;
      for (size_t y = 0; y < s; ++y) {
        if (dp[y][p - 1] == kNegInf) continue;
        const double term = dp_kl_term(hist, y, s, ub_bin);
        if (term == kNegInf) continue;
        const double cand = dp[y][p - 1] + term;
        if (cand > dp[s][p]) {
          if (feasibility_check) {
            GroupStats gs = group_stats(hist, y, s, ub_bin);
            const double delta_hat = (gs.u / gs.v) * factor * std::exp(-(cand + remainder));
            if (!(delta_hat < 1.0)) continue;
          }
          dp[s][p] = cand;
          parent[s][p] = static_cast<ptrdiff_t>(y);
        }
      }
    }
  }

  if (dp[k][groups] == kNegInf) {
    throw InfeasibleError("dp_partition: no partition passes the delta feasibility check");
  }

  DpResult out;
  out.kl = dp[k][groups];
  size_t s = k;
  size_t p = groups;
  std::vector<size_t> cuts;
  cuts.push_back(k);
  while (s > 0) {
    while (parent[s][p] == -2) --p;
    size_t y = static_cast<size_t>(parent[s][p]);
    cuts.push_back(y);
    s = y;
    --p;
  }
  std::reverse(cuts.begin(), cuts.end());
  out.cut_bins = std::move(cuts);
  return out;
}

uint64_t PartitionPlan::sketch_bytes() const {
  uint64_t total = 0;
  for (const auto& d : dims) total += d.width * d.depth * counter_bytes;
  return total;
}

uint64_t PartitionPlan::rounding_slack_bytes() const {
  uint64_t total = 0;
  for (const auto& d : dims) total += d.width * counter_bytes;
  return total;
}

int PartitionPlan::group_of_score(double score) const {
  if (score >= ub_boundary) return -1;
  auto it = std::upper_bound(thresholds.begin(), thresholds.end(), score);
  return static_cast<int>(it - thresholds.begin());
}

double evaluate_objective(const PartitionPlan& plan, const ScoreHistogram& hist) {
  double s = 0.0;
  for (size_t g = 0; g + 1 < plan.cut_bins.size(); ++g) {
    s += plan.deltas[g] * hist.query_in(plan.cut_bins[g], plan.cut_bins[g + 1]);
  }
  return s;
}

namespace {

struct BoundaryCandidate {
  double objective;
  size_t ub_bin;
  DpResult dp;
};

// Exact-delta finalization for one boundary. Solves the continuous
// problem, rounds dims up, and shaves the solver budget until the built
// sketch bytes stay within one extra row per group past the nominal
// sketch budget. Returns false if a shave clips some delta to 1.
bool finalize_candidate(const ScoreHistogram& hist, const BoundaryCandidate& cand,
                        const OptimizerInputs& in, PartitionPlan& plan) {
  const size_t k = cand.ub_bin;
  const auto& cuts = cand.dp.cut_bins;
  const size_t groups = cuts.size() - 1;
  const double eps_n = in.epsilon_global * static_cast<double>(in.total_mass);

  std::vector<double> eps(groups), q(groups);
  std::vector<uint64_t> mass(groups);
  for (size_t g = 0; g < groups; ++g) {
    mass[g] = hist.data_in(cuts[g], cuts[g + 1]);
    q[g] = hist.query_in(cuts[g], cuts[g + 1]);
    eps[g] = eps_n / static_cast<double>(mass[g]);
  }

  const uint64_t ub_unique = hist.unique_in(k, hist.bins());
  const double sketch_budget = in.memory_budget - in.ub_bytes * static_cast<double>(ub_unique);

  DeltaSolution sol;
  std::vector<GroupDims> dims;
  double budget = sketch_budget;
  for (int iter = 0; iter < 32; ++iter) {
    try {
      sol = solve_deltas(eps, q, budget, in.counter_bytes);
    } catch (const InfeasibleError&) {
      return false;
    }
    if (sol.diag.active_set.size() != groups) return false;  // some delta clipped
    dims = finalize_dims(sol.deltas, eps, static_cast<uint32_t>(in.counter_bytes));
    uint64_t sketch = 0, slack = 0;
    for (const auto& d : dims) {
      sketch += d.width * d.depth * static_cast<uint64_t>(in.counter_bytes);
      slack += d.width * static_cast<uint64_t>(in.counter_bytes);
    }
    const double allowed = sketch_budget + static_cast<double>(slack);
    if (static_cast<double>(sketch) <= allowed) break;
    budget -= static_cast<double>(sketch) - allowed;
    if (!(budget > 0.0)) return false;
  }

  plan = PartitionPlan{};
  plan.cut_bins = cuts;
  plan.ub_bin = k;
  plan.thresholds.reserve(groups);
  for (size_t g = 1; g < cuts.size(); ++g) {
    plan.thresholds.push_back(cuts[g] == hist.bins()
                                  ? std::numeric_limits<double>::infinity()
                                  : hist.edges[cuts[g] - 1]);
  }
  plan.ub_boundary = plan.thresholds.back();
  plan.epsilons = std::move(eps);
  plan.deltas = sol.deltas;
  plan.query_masses = std::move(q);
  plan.group_mass = std::move(mass);
  plan.dims = std::move(dims);
  plan.predicted_ub_unique = ub_unique;
  plan.predicted_ub_mass = hist.data_in(k, hist.bins());
  plan.predicted_ub_query = hist.query_in(k, hist.bins());
  plan.lambda = sol.diag.lambda;
  plan.active_set = sol.diag.active_set;
  plan.kl = cand.dp.kl;
  plan.epsilon_global = in.epsilon_global;
  plan.counter_bytes = static_cast<uint64_t>(in.counter_bytes);
  plan.ub_bytes = static_cast<uint64_t>(in.ub_bytes);
  plan.objective = 0.0;
  for (size_t g = 0; g < groups; ++g) plan.objective += plan.deltas[g] * plan.query_masses[g];
  return true;
}

}  // namespace

PartitionPlan sweep_ub_boundary(const ScoreHistogram& hist, int max_groups,
                                const OptimizerInputs& in) {
  if (hist.bins() == 0) throw std::invalid_argument("sweep_ub_boundary: empty histogram");
  if (!(in.epsilon_global > 0.0)) {
    throw std::invalid_argument("sweep_ub_boundary: epsilon_global must be > 0");
  }

  std::vector<BoundaryCandidate> candidates;
  for (size_t k = 1; k <= hist.bins(); ++k) {
    const uint64_t ub_unique = hist.unique_in(k, hist.bins());
    const uint64_t ub_mass = hist.data_in(k, hist.bins());
    const double q_ub = hist.query_in(k, hist.bins());
    const double sketch_budget =
        in.memory_budget - in.ub_bytes * static_cast<double>(ub_unique);
    if (!(sketch_budget > 0.0)) continue;
    if (in.total_mass <= ub_mass) continue;

    DpResult dp;
    try {
      dp = dp_partition(hist, k, max_groups, in, /*feasibility_check=*/true);
    } catch (const InfeasibleError&) {
      continue;
    }
    const double objective =
        (1.0 - q_ub) * budget_factor(hist, k, in) * std::exp(-dp.kl);
    candidates.push_back({objective, k, std::move(dp)});
  }

  if (candidates.empty()) {
    throw InfeasibleError("sweep_ub_boundary: no UB boundary admits a feasible partition");
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const BoundaryCandidate& a, const BoundaryCandidate& b) {
                     return a.objective < b.objective;
                   });

  PartitionPlan plan;
  for (const auto& cand : candidates) {
    if (finalize_candidate(hist, cand, in, plan)) return plan;
  }
  throw InfeasibleError("sweep_ub_boundary: finalization clipped every candidate");
}

std::string PartitionPlan::explain() const {
  std::ostringstream os;
  os.precision(12);
  os << "groups " << group_count() << '\n';
  os << "epsilon_global " << epsilon_global << '\n';
  os << "ub_boundary " << ub_boundary << '\n';
  os << "predicted_ub_unique " << predicted_ub_unique << '\n';
  os << "predicted_ub_mass " << predicted_ub_mass << '\n';
  os << "predicted_ub_query " << predicted_ub_query << '\n';
  for (size_t g = 0; g < group_count(); ++g) {
    os << "group " << g + 1 << " threshold " << thresholds[g] << " epsilon " << epsilons[g]
       << " delta " << deltas[g] << " width " << dims[g].width << " depth " << dims[g].depth
       << " query_mass " << query_masses[g] << " data_mass " << group_mass[g] << '\n';
  }
  os << "lambda " << lambda << '\n';
  os << "active_set";
  for (int g : active_set) os << ' ' << g + 1;
  os << '\n';
  os << "kl " << kl << '\n';
  os << "objective " << objective << '\n';
  os << "sketch_bytes " << sketch_bytes() << '\n';
  os << "memory_bytes " << memory_bytes() << '\n';
  os << "rounding_slack_bytes " << rounding_slack_bytes() << '\n';
  return os.str();
}

}  // namespace optlcms
