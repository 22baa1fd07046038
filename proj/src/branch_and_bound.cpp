#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <set>
#include <thread>

#include "dual_simplex.hpp"
#include "ecopark/solver.hpp"

namespace ecopark::solver {

namespace {

using detail::Basis;
using detail::DualSimplex;

struct BoundChange {
  std::size_t var = 0;
  double lower = 0.0;
  double upper = 0.0;
};

struct Node {
  double bound = -milp::kInfinity;
  std::int64_t id = 0;
  std::vector<BoundChange> changes;  // cumulative from the root
  std::shared_ptr<const Basis> basis;
};

struct NodeOrder {
  bool operator()(const std::unique_ptr<Node>& a, const std::unique_ptr<Node>& b) const {
    if (a->bound != b->bound) return a->bound < b->bound;
    return a->id < b->id;
  }
};

using Clock = std::chrono::steady_clock;

class BranchAndBound {
 public:
  BranchAndBound(const milp::MilpModel& model, const SolveOptions& options)
      : model_(model), options_(options), start_(Clock::now()) {
    for (const auto& v : model.variables()) {
      if (v.kind == milp::VarKind::kBinary) binaries_.push_back(static_cast<std::size_t>(v.id.index));
    }
  }

  SolveResult run();

 private:
  double elapsed() const {
    return std::chrono::duration<double>(Clock::now() - start_).count();
  }
  double cutoff() const {
    if (!result_.incumbent) return milp::kInfinity;
    return result_.objective -
           std::max(options_.abs_gap, options_.rel_gap * std::fabs(result_.objective));
  }
  // Highest priority, then most fractional, then lowest index.
  std::optional<std::size_t> branching_variable(const std::vector<double>& x) const;
  void offer_incumbent(std::vector<double> x);
  double open_bound_locked() const;
  void record_bound_locked();
  void worker();
  void process(std::unique_ptr<Node> node, DualSimplex& lp);

  const milp::MilpModel& model_;
  SolveOptions options_;
  Clock::time_point start_;
  std::vector<std::size_t> binaries_;

  std::mutex mutex_;
  std::condition_variable cv_;
  std::set<std::unique_ptr<Node>, NodeOrder> queue_;
  std::vector<double> active_bounds_;  // per worker, +inf when idle
  int active_ = 0;
  bool stop_ = false;
  bool incomplete_ = false;
  bool limit_hit_ = false;
  double pruned_bound_ = milp::kInfinity;
  std::int64_t next_id_ = 0;
  SolveResult result_;
};

std::optional<std::size_t> BranchAndBound::branching_variable(const std::vector<double>& x) const {
  std::optional<std::size_t> best;
  int best_priority = 0;
  double best_frac = 0.0;
  for (std::size_t j : binaries_) {
    const double f = x[j] - std::floor(x[j]);
    const double frac = std::min(f, 1.0 - f);
    if (frac <= options_.integrality_tol) continue;
    const int prio = model_.variables()[j].branch_priority;
    if (!best || prio > best_priority || (prio == best_priority && frac > best_frac + 1e-12)) {
      best = j;
      best_priority = prio;
      best_frac = frac;
    }
  }
  return best;
}

// Called with the mutex held.
void BranchAndBound::offer_incumbent(std::vector<double> x) {
  for (std::size_t j : binaries_) x[j] = std::round(x[j]);
  auto violations = model_.violations(x, options_.feasibility_tol);
  if (!violations.empty()) {
    // Re-solve the continuous part with binaries fixed to clean round-off.
    std::map<milp::VarId, double> fixings;
    for (std::size_t j : binaries_) fixings[milp::VarId{static_cast<std::int32_t>(j)}] = x[j];
    LpOptions lp_options;
    lp_options.primal_tol = std::min(1e-9, options_.feasibility_tol);
    LpResult polished = solve_lp(model_, fixings, lp_options);
    if (polished.status == LpStatus::kOptimal) {
      x = std::move(polished.x);
      violations = model_.violations(x, options_.feasibility_tol);
    }
    if (!violations.empty()) {
      result_.diagnostics.push_back("rejected candidate incumbent violating '" +
                                    violations.front().name + "'");
      return;
    }
  }
  const double value = model_.objective_value(x);
  if (result_.incumbent && value >= result_.objective) return;
  result_.incumbent = std::move(x);
  result_.objective = value;
  if (options_.on_incumbent) options_.on_incumbent(value, result_.nodes_explored);
}

double BranchAndBound::open_bound_locked() const {
  double b = pruned_bound_;
  if (!queue_.empty()) b = std::min(b, (*queue_.begin())->bound);
  for (double a : active_bounds_) b = std::min(b, a);
  if (result_.incumbent) b = std::min(b, result_.objective);
  return b;
}

void BranchAndBound::record_bound_locked() {
  double b = open_bound_locked();
  if (!result_.bound_trace.empty()) b = std::max(b, result_.bound_trace.back());
  result_.bound_trace.push_back(b);
}

void BranchAndBound::process(std::unique_ptr<Node> node, DualSimplex& lp) {
  lp.reset_bounds();
  for (const BoundChange& c : node->changes) lp.set_bounds(c.var, c.lower, c.upper);
  if (node->basis) lp.set_basis(*node->basis);

  std::vector<BoundChange> changes = std::move(node->changes);
  double parent_bound = node->bound;

  while (true) {
    const std::int64_t before = lp.iterations();
    LpStatus status = lp.solve();
    if (status == LpStatus::kNumericalFailure || status == LpStatus::kIterationLimit) {
      // One retry from a fresh slack basis before giving the node up.
      lp.reset_basis();
      status = lp.solve();
    }
    std::unique_lock lock(mutex_);
    result_.lp_iterations += lp.iterations() - before;
    ++result_.nodes_explored;
    if (status == LpStatus::kInfeasible) {
      record_bound_locked();
      return;
    }
    if (status != LpStatus::kOptimal) {
      incomplete_ = true;
      result_.diagnostics.push_back("node LP ended with status " + to_string(status) +
                                    "; subtree dropped");
      record_bound_locked();
      return;
    }
    const double bound = std::max(lp.objective(), parent_bound);
    if (bound >= cutoff()) {
      if (result_.incumbent && bound < result_.objective) pruned_bound_ = std::min(pruned_bound_, bound);
      record_bound_locked();
      return;
    }
    std::vector<double> x = lp.primal();
    const auto branch = branching_variable(x);
    if (!branch) {
      offer_incumbent(std::move(x));
      record_bound_locked();
      return;
    }
    const std::size_t j = *branch;
    const bool prefer_up = x[j] >= 0.5;
    auto sibling = std::make_unique<Node>();
    sibling->bound = bound;
    sibling->id = next_id_++;
    sibling->changes = changes;
    sibling->changes.push_back({j, prefer_up ? 0.0 : 1.0, prefer_up ? 0.0 : 1.0});
    sibling->basis = std::make_shared<const Basis>(lp.basis());
    queue_.insert(std::move(sibling));
    cv_.notify_one();

    const double lim_nodes = static_cast<double>(options_.node_limit);
    if (static_cast<double>(result_.nodes_explored) >= lim_nodes || elapsed() >= options_.time_limit) {
      limit_hit_ = true;
      stop_ = true;
      // Keep the unexplored preferred child in the queue so the bound stays valid.
      auto rest = std::make_unique<Node>();
      rest->bound = bound;
      rest->id = next_id_++;
      rest->changes = changes;
      rest->changes.push_back({j, prefer_up ? 1.0 : 0.0, prefer_up ? 1.0 : 0.0});
      queue_.insert(std::move(rest));
      record_bound_locked();
      cv_.notify_all();
      return;
    }
    record_bound_locked();
    lock.unlock();

    const double v = prefer_up ? 1.0 : 0.0;
    changes.push_back({j, v, v});
    lp.set_bounds(j, v, v);
    parent_bound = bound;
  }
}

void BranchAndBound::worker() {
  LpOptions lp_options;
  lp_options.primal_tol = std::min(1e-7, options_.feasibility_tol);
  DualSimplex lp(model_, lp_options);
  while (true) {
    std::unique_ptr<Node> node;
    {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [&] { return stop_ || !queue_.empty() || active_ == 0; });
      if (stop_ || queue_.empty()) {
        cv_.notify_all();
        return;
      }
      node = std::move(queue_.extract(queue_.begin()).value());
      if (node->bound >= cutoff()) {
        if (result_.incumbent && node->bound < result_.objective) {
          pruned_bound_ = std::min(pruned_bound_, node->bound);
        }
        record_bound_locked();
        continue;
      }
      if (static_cast<double>(result_.nodes_explored) >= static_cast<double>(options_.node_limit) ||
          elapsed() >= options_.time_limit) {
        limit_hit_ = true;
        stop_ = true;
        queue_.insert(std::move(node));
        cv_.notify_all();
        return;
      }
      ++active_;
      active_bounds_.push_back(node->bound);
    }
    const double my_bound = node->bound;
    process(std::move(node), lp);
    {
      std::lock_guard lock(mutex_);
      --active_;
      auto it = std::find(active_bounds_.begin(), active_bounds_.end(), my_bound);
      if (it != active_bounds_.end()) active_bounds_.erase(it);
      cv_.notify_all();
    }
  }
}

SolveResult BranchAndBound::run() {
  for (const auto& v : model_.variables()) {
    if (v.kind != milp::VarKind::kBinary && v.kind != milp::VarKind::kContinuous) {
      throw SolverError("only binary and continuous variables are supported");
    }
  }

  // Root relaxation.
  LpOptions lp_options;
  lp_options.primal_tol = std::min(1e-7, options_.feasibility_tol);
  DualSimplex root(model_, lp_options);
  const LpStatus status = root.solve();
  result_.lp_iterations = root.iterations();
  if (status == LpStatus::kInfeasible) {
    result_.status = SolveStatus::kInfeasible;
    result_.nodes_explored = 1;
    result_.wall_time = elapsed();
    return result_;
  }
  if (status == LpStatus::kUnbounded) {
    result_.status = SolveStatus::kUnbounded;
    result_.nodes_explored = 1;
    result_.wall_time = elapsed();
    return result_;
  }
  if (status != LpStatus::kOptimal) {
    throw SolverError("root relaxation failed: " + to_string(status));
  }
  result_.root_bound = root.objective();

  auto first = std::make_unique<Node>();
  first->bound = result_.root_bound;
  first->id = next_id_++;
  first->basis = std::make_shared<const Basis>(root.basis());
  queue_.insert(std::move(first));

  const int workers = options_.worker_count;
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back([this] { worker(); });
    for (auto& t : pool) t.join();
  }

  result_.best_bound = open_bound_locked();
  if (!result_.bound_trace.empty()) {
    result_.best_bound = std::max(result_.best_bound, result_.bound_trace.front());
  }
  if (result_.incumbent) {
    result_.best_bound = std::min(result_.best_bound, result_.objective);
    result_.gap = relative_gap(result_.objective, result_.best_bound);
  }
  if (limit_hit_) {
    result_.status = SolveStatus::kLimit;
  } else if (!result_.incumbent) {
    result_.status = incomplete_ ? SolveStatus::kLimit : SolveStatus::kInfeasible;
  } else if (incomplete_) {
    result_.status = SolveStatus::kFeasible;
  } else {
    result_.status = SolveStatus::kOptimal;
  }
  result_.wall_time = elapsed();
  return result_;
}

}  // namespace

SolveResult solve_milp(const milp::MilpModel& model, const SolveOptions& options) {
  if (!(options.rel_gap > 0.0) || !(options.integrality_tol > 0.0) ||
      !(options.feasibility_tol > 0.0) || options.node_limit < 1 || options.worker_count < 1 ||
      !(options.time_limit > 0.0)) {
    throw SolverError("solve options: tolerances must be positive and limits at least 1");
  }
  BranchAndBound bb(model, options);
  return bb.run();
}

}  // namespace ecopark::solver
