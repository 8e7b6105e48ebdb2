#pragma once

// Active edges, fitting positions, Monte-Carlo constraint consistency and
// DOF accounting.

#include <cstdint>
#include <optional>
#include <vector>

#include "hetform/graph.hpp"
#include "hetform/rigidity.hpp"

namespace hetform {

inline constexpr double kActiveTolerance = 1e-6;
inline constexpr double kSearchTolerance = 1e-3;

std::vector<std::size_t> active_edges(const Configuration& p, const TwoLayerGraph& g,
                                      double tol = kActiveTolerance);

struct FittingOptions {
  double tol{kActiveTolerance};
  /// Search ball radius as a fraction of the agent's smallest outgoing
  /// desired separation.
  double radius_factor{0.5};
  int grid{41};
};

/// Best relocation of one agent inside its search ball.
struct FittingMove {
  Vec2 position;
  std::size_t active_count{0};
  std::size_t current_count{0};
  double displacement{0.0};
};

/// Position in agent i's ball with the most active outgoing edges, ties
/// broken by the smallest displacement. Other agents are held fixed.
FittingMove best_fitting_move(const Configuration& p, const TwoLayerGraph& g, AgentId i,
                              const FittingOptions& opts = {});

bool is_fitting_position(const Configuration& p, const TwoLayerGraph& g, AgentId i,
                         const FittingOptions& opts = {});

struct ConsistencyOptions {
  int trials{200};
  /// Perturbation radius; defaults to 0.2 * smallest desired separation.
  std::optional<double> eps;
  std::uint64_t seed{0};
  /// Constraint tolerance for the relaxed configuration.
  double tol{kSearchTolerance};
  int max_sweeps{200};
  /// A relaxed configuration only counts as a witness within this multiple
  /// of eps from p_star.
  double witness_radius_factor{2.0};
};

struct ConsistencyVerdict {
  bool consistent{true};
  std::optional<Configuration> witness;
  double max_violation{0.0};
  int trials{0};
  /// Trials whose relaxation did not settle on a fitting configuration
  /// near p_star; they can neither refute nor support consistency.
  int inconclusive{0};
  double eps{0.0};
  std::uint64_t seed{0};
  std::optional<int> counterexample_trial;
  /// Edge with the largest violation in the witness.
  std::optional<std::size_t> violated_edge;
};

/// Relaxes `p` agent by agent (increasing DOF, then id) to a fitting
/// configuration; returns the number of sweeps used, max_sweeps if it never
/// settled.
int relax_to_fitting(Configuration& p, const TwoLayerGraph& g, const FittingOptions& opts, int max_sweeps);

/// Falsification test; throws NotAnEquilibrium if p_star has inactive edges.
ConsistencyVerdict check_consistency(const TwoLayerGraph& g, const Configuration& p_star,
                                     const ConsistencyOptions& opts = {});

enum class LeaderStructure { OneLeader, TwoColeaders, Invalid };

std::string_view to_string(LeaderStructure s) noexcept;

struct DofLedger {
  std::vector<int> per_agent_dof;
  int total_dof{0};
  std::vector<AgentId> leaders;
  LeaderStructure structure{LeaderStructure::Invalid};
};

/// Throws OverConstrained if `claimed_minimal` and an agent has out-degree > 2.
DofLedger dof_ledger(const TwoLayerGraph& g, bool claimed_minimal = false);

struct PersistenceReport {
  bool persistent{false};
  RigidityReport rigidity;
  ConsistencyVerdict consistency;
  DofLedger dof;
};

PersistenceReport check_persistence(const TwoLayerGraph& g, const Configuration& p_star,
                                    const ConsistencyOptions& opts = {});

/// Uniform double in [0, 1) from a 64-bit draw, identical on every platform.
double unit_uniform(std::uint64_t bits) noexcept;

/// Per-agent offsets uniform in a disk of radius r, from stream (seed, stream).
Configuration perturb_in_disk(const Configuration& p, double r, std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace hetform
