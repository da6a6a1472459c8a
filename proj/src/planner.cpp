#include "elab/planner.hpp"

#include <algorithm>
#include <cmath>

namespace elab {

void PlannerConfig::validate() const {
  if (init_count < 1) throw ConfigError("init_count must be >= 1");
  if (random_period < 2) throw ConfigError("random_period must be >= 2");
  // budget 0 is a valid no-op campaign; the planner is never consulted.
  if (budget != 0 && budget < init_count)
    throw ConfigError("budget must cover initialization");
  if (cycle.empty()) throw ConfigError("acquisition cycle must be non-empty");
  for (AcquisitionKind k : cycle)
    if (k == AcquisitionKind::kRandom)
      throw ConfigError("random draws are scheduled by period, not the cycle");
}

Planner::Planner(DomainGrid grid, PlannerConfig cfg)
    : grid_(std::move(grid)), cfg_(std::move(cfg)) {
  cfg_.validate();
  if (grid_.size() == 0) throw ConfigError("empty grid");
}

Eigen::Vector3d Planner::normalize(const DesignAxes& a) const {
  auto norm = [](double v, const AxisRange& r) {
    return r.hi > r.lo ? (v - r.lo) / (r.hi - r.lo) : 0.0;
  };
  return {norm(a.ec_frac, grid_.bounds.ec_frac),
          norm(a.dmc_ratio, grid_.bounds.dmc_ratio),
          norm(a.molality, grid_.bounds.molality)};
}

AcquisitionKind Planner::scheduled_kind(int step_index) const {
  const int k = step_index - cfg_.init_count;
  if (k <= 0) return AcquisitionKind::kRandom;
  if (k % cfg_.random_period == 0) return AcquisitionKind::kRandom;
  const int acq_steps_before = (k - 1) - (k - 1) / cfg_.random_period;
  return cfg_.cycle[static_cast<std::size_t>(acq_steps_before) % cfg_.cycle.size()];
}

std::vector<std::size_t> Planner::unmeasured_indices() const {
  std::vector<std::size_t> out;
  out.reserve(grid_.size() - excluded_.size());
  for (std::size_t i = 0; i < grid_.size(); ++i)
    if (!excluded_.contains(i)) out.push_back(i);
  return out;
}

std::size_t Planner::lhs_pick(int step_index) const {
  const int k = cfg_.init_count;
  Rng design_rng(mix_seed(cfg_.seed, "init-lhs"));
  auto permutation = [&](int n) {
    std::vector<int> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i)
      std::swap(p[static_cast<std::size_t>(i)],
                p[design_rng.below(static_cast<std::uint64_t>(i) + 1)]);
    return p;
  };
  const std::vector<int> pe = permutation(k);
  const std::vector<int> pr = permutation(k);
  const std::vector<int> pm = permutation(k);

  // Midpoint rule inside each stratum; the randomness lives in the axis
  // permutations. Keeps the design spread without landing on the domain
  // faces a corner-seeking rule would favor.
  auto level_in_stratum = [&](int stratum, int levels) {
    const int lo = stratum * levels / k;
    const int hi = std::max(lo + 1, (stratum + 1) * levels / k);
    return (lo + hi) / 2;
  };
  const int s = step_index - 1;
  const int ie = level_in_stratum(pe[static_cast<std::size_t>(s)], grid_.ec_levels);
  const int ir = level_in_stratum(pr[static_cast<std::size_t>(s)], grid_.ratio_levels);
  const int im = level_in_stratum(pm[static_cast<std::size_t>(s)], grid_.molality_levels);
  return grid_.flat_index(ie, ir, im);
}

std::optional<PlannedPoint> Planner::next_point(int step_index) {
  if (step_index < 1) throw DomainError("step_index is 1-based");
  const std::vector<std::size_t> open = unmeasured_indices();
  if (open.empty()) return std::nullopt;  // campaign complete

  Rng rng(mix_seed(mix_seed(cfg_.seed, "planner-step"),
                   static_cast<std::uint64_t>(step_index)));

  AcquisitionKind kind = scheduled_kind(step_index);
  // The surrogate needs two observations; early failures degrade to random.
  if (kind != AcquisitionKind::kRandom && obs_.size() < 2)
    kind = AcquisitionKind::kRandom;

  PlannedPoint out;
  out.kind = kind;

  if (kind == AcquisitionKind::kRandom) {
    std::size_t pick = open[rng.below(open.size())];
    if (step_index <= cfg_.init_count) {
      // Space-filling initialization: a Latin-hypercube draw over the grid.
      // Strata are assigned by seed-derived permutations, so a resumed
      // planner re-derives the same design.
      const std::size_t picked = lhs_pick(step_index);
      if (!excluded_.contains(picked)) pick = picked;
    }
    out.grid_index = pick;
    out.axes = grid_.points[pick];
    return out;
  }

  const GpFitOptions fit_opt{.seed = mix_seed(mix_seed(cfg_.seed, "gp-step"),
                                              static_cast<std::uint64_t>(step_index))};
  const GpPosterior post = fit_gp(obs_, fit_opt);
  out.gp = post.hyper;

  Eigen::MatrixXd candidates(static_cast<Eigen::Index>(open.size()), 3);
  for (std::size_t i = 0; i < open.size(); ++i)
    candidates.row(static_cast<Eigen::Index>(i)) =
        normalize(grid_.points[open[i]]).transpose();

  std::size_t choice = 0;
  switch (kind) {
    case AcquisitionKind::kThompsonSampling:
      choice = acq_thompson(post, candidates, rng);
      break;
    case AcquisitionKind::kExpectedImprovement: {
      const Eigen::VectorXd s = ei_scores(post, candidates, obs_.best());
      for (Eigen::Index i = 1; i < s.size(); ++i)
        if (s(i) > s(static_cast<Eigen::Index>(choice)))
          choice = static_cast<std::size_t>(i);
      break;
    }
    case AcquisitionKind::kTopTwoEI:
      choice = acq_ttei(post, candidates, obs_.best(), rng);
      break;
    case AcquisitionKind::kUcb: {
      const Eigen::VectorXd s = ucb_scores(post, candidates, cfg_.ucb_beta);
      for (Eigen::Index i = 1; i < s.size(); ++i)
        if (s(i) > s(static_cast<Eigen::Index>(choice)))
          choice = static_cast<std::size_t>(i);
      break;
    }
    case AcquisitionKind::kRandom:
      break;  // handled above
  }

  out.grid_index = open[choice];
  out.axes = grid_.points[out.grid_index];
  return out;
}

void Planner::observe(std::size_t grid_index, double y_ms_cm) {
  if (grid_index >= grid_.size()) throw DomainError("grid index out of range");
  obs_.add(normalize(grid_.points[grid_index]), y_ms_cm);
  excluded_.insert(grid_index);
}

void Planner::mark_failed(std::size_t grid_index) {
  if (grid_index >= grid_.size()) throw DomainError("grid index out of range");
  excluded_.insert(grid_index);
}

}  // namespace elab
