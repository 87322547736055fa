#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "holonomy/sequences.hpp"

namespace holonomy {

enum class NodeRole { start, intermediate, checkpoint };

/// One measurement outcome at a node: project onto `target`, then
/// continue at node `successor`. `completes_loop` marks the success
/// branch that ends a traversal back at the start subspace.
struct GraphBranch {
  Subspace target;
  std::size_t successor = 0;
  bool completes_loop = false;
  double scale = 0.0;  ///< isometry scale; outcome probability = scale^2
};

struct GraphNode {
  std::string label;
  NodeRole role = NodeRole::intermediate;
  Subspace subspace;
  std::vector<GraphBranch> branches;  ///< ordered outcomes
};

/// Directed graph of subspaces with two-outcome measurements on the
/// edges. Every edge is either a proper scaled isometry between
/// subspaces or a trivial probability-1 edge onto the same span; this
/// makes outcome probabilities state-independent, so the node graph
/// carries a genuine Markov chain.
class MeasurementGraph {
 public:
  MeasurementGraph(std::vector<GraphNode> nodes, std::size_t start_node,
                   ComplexMatrix target_unitary, const TolerancePolicy& policy = {});

  std::size_t ambient_dim() const { return nodes_.front().subspace.ambient_dim(); }
  const std::vector<GraphNode>& nodes() const { return nodes_; }
  std::size_t start_node() const { return start_node_; }
  const Subspace& start_subspace() const { return nodes_[start_node_].subspace; }

  /// Intended holonomy on the start subspace (k x k).
  const ComplexMatrix& target_unitary() const { return target_unitary_; }

 private:
  std::vector<GraphNode> nodes_;
  std::size_t start_node_;
  ComplexMatrix target_unitary_;
};

struct TraversalStep {
  std::size_t node = 0;     ///< node measured at
  std::size_t outcome = 0;  ///< branch index taken
  double probability = 0.0;
};

struct TraversalTrace {
  std::vector<TraversalStep> steps;
  std::size_t step_count = 0;
  StateVector final_state;
  bool completed = false;
  int holonomy_phase_class = 0;  ///< +1 or -1 when completed, 0 when unknown
};

struct HolonomyResult {
  ComplexMatrix unitary;           ///< k x k map on the start subspace
  double fidelity_to_target = 0.0; ///< |tr(target^dagger U)| / k
  Complex global_phase{0.0, 0.0};  ///< unit factor relating U to the target
};

/// Fig.-2-style repeat-until-success graph on dimension 4 realizing
/// diag(1, e^{i phi}) on span{|0>, |1>}.
MeasurementGraph build_qubit_rus_graph(double phi);

/// k-component generalization on dimension 2k realizing
/// diag(e^{i phi_1}, ..., e^{i phi_k}); the qubit graph is the case
/// (0, phi).
MeasurementGraph build_general_rus_graph(std::span<const double> phases);

/// Samples one stochastic traversal with the exact conditional outcome
/// probabilities. Identical seeds give identical traces. Reaching
/// max_steps without completing is a normal, non-error result.
TraversalTrace run_protocol(const MeasurementGraph& graph, const StateVector& state,
                            std::uint64_t seed, std::size_t max_steps = 10000);

/// Deterministic traversal along the given outcome indices.
TraversalTrace run_protocol_forced(const MeasurementGraph& graph, const StateVector& state,
                                   std::span<const std::size_t> outcomes);

/// Expected number of measurements until the success branch absorbs,
/// from the fundamental matrix of the node-level Markov chain.
double expected_steps(const MeasurementGraph& graph);

/// Reconstructs the unitary the completed trace enacted on the start
/// subspace by transporting the start basis through each projection
/// (dividing by the per-edge isometry scale).
HolonomyResult extract_holonomy(const MeasurementGraph& graph, const TraversalTrace& trace);

/// True iff u equals c * v for some c in `allowed`, within tol_phase.
bool equal_up_to_phase(const ComplexMatrix& u, const ComplexMatrix& v,
                       std::span<const Complex> allowed, const TolerancePolicy& policy = {});

/// Per-shot stream seed: splitmix64 mix of the master seed and the
/// shot index, so shot results do not depend on execution order.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index);

}  // namespace holonomy
