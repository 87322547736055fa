#include "holonomy/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

namespace holonomy {

namespace {

double uniform_unit(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Solves the small dense real system a x = b in place (partial
// pivoting). Returns false when a pivot collapses.
bool solve_linear(std::vector<std::vector<double>>& a, std::vector<double>& b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) < 1e-12) return false;
    std::swap(a[pivot], a[col]);
    std::swap(b[pivot], b[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= a[i][i];
  return true;
}

Complex trace_product_adjoint(const ComplexMatrix& a, const ComplexMatrix& b) {
  // tr(a^dagger b)
  Complex t{0.0, 0.0};
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t += std::conj(a(i, j)) * b(i, j);
  return t;
}

}  // namespace

MeasurementGraph::MeasurementGraph(std::vector<GraphNode> nodes, std::size_t start_node,
                                   ComplexMatrix target_unitary, const TolerancePolicy& policy)
    : nodes_(std::move(nodes)), start_node_(start_node), target_unitary_(std::move(target_unitary)) {
  policy.validate();
  if (nodes_.empty()) throw InvalidGraph("graph needs at least one node");
  if (start_node_ >= nodes_.size()) throw InvalidGraph("start node id out of range");
  const std::size_t ambient = nodes_.front().subspace.ambient_dim();
  const Subspace& start = nodes_[start_node_].subspace;

  const std::size_t k = start.rank();
  if (target_unitary_.rows() != k || target_unitary_.cols() != k) {
    throw InvalidGraph("target unitary must act on the start subspace");
  }
  if (max_abs_diff(target_unitary_.adjoint() * target_unitary_, ComplexMatrix::identity(k)) >
      policy.tol_flat) {
    throw InvalidGraph("target unitary is not unitary");
  }

  for (GraphNode& node : nodes_) {
    if (node.subspace.ambient_dim() != ambient) {
      throw InvalidGraph("all node subspaces must share the ambient dimension");
    }
    if (node.branches.empty()) throw InvalidGraph("every node needs at least one branch");

    ComplexMatrix coverage(ambient, ambient);
    for (GraphBranch& branch : node.branches) {
      if (branch.successor >= nodes_.size()) throw InvalidGraph("branch successor out of range");
      if (branch.target.ambient_dim() != ambient) {
        throw InvalidGraph("branch target lives in the wrong ambient space");
      }
      if (same_span(node.subspace, branch.target, policy.tol_ortho)) {
        branch.scale = 1.0;  // trivial probability-1 edge
      } else {
        IsometryReport report = isometry_report(node.subspace, branch.target, policy);
        if (!report.is_isometry) {
          throw InvalidGraph("branch is not a scaled isometry: " + report.reason);
        }
        branch.scale = report.scale;
      }
      if (branch.completes_loop) {
        if (branch.successor != start_node_ ||
            !same_span(branch.target, start, policy.tol_ortho)) {
          throw InvalidGraph("a completing branch must land on the start subspace");
        }
      }
      coverage = coverage + projector_matrix(branch.target);
    }
    // The outcome projectors must cover every state supported on the
    // node subspace (probabilities sum to 1).
    const ComplexMatrix on_node = coverage * node.subspace.basis();
    if (max_abs_diff(on_node, node.subspace.basis()) > 1e-8) {
      throw InvalidGraph("outcome projectors do not cover the node subspace");
    }
  }
}

MeasurementGraph build_general_rus_graph(std::span<const double> phases) {
  const std::size_t k = phases.size();
  if (k < 1) throw BadIndex("the protocol needs at least one logical component");
  const std::size_t n = 2 * k;
  const double r = 1.0 / std::sqrt(2.0);

  auto ladder = [&](int sign, bool with_phase) {
    ComplexMatrix basis(n, k);
    for (std::size_t j = 0; j < k; ++j) {
      basis(j, j) = with_phase ? std::polar(r, phases[j]) : Complex{r, 0.0};
      basis(j + k, j) = Complex{sign * r, 0.0};
    }
    return Subspace(std::move(basis));
  };

  Subspace s = Subspace::standard(n, k);
  ComplexMatrix c_basis(n, k);
  for (std::size_t j = 0; j < k; ++j) c_basis(j + k, j) = 1.0;
  Subspace c(std::move(c_basis));
  Subspace a_plus = ladder(+1, false), a_minus = ladder(-1, false);
  Subspace b_plus = ladder(+1, true), b_minus = ladder(-1, true);

  std::vector<GraphNode> nodes;
  nodes.push_back({"S", NodeRole::start, s,
                   {GraphBranch{a_plus, 1, false, 0.0}, GraphBranch{a_minus, 2, false, 0.0}}});
  nodes.push_back({"A+", NodeRole::intermediate, a_plus,
                   {GraphBranch{s, 0, false, 0.0}, GraphBranch{c, 3, false, 0.0}}});
  nodes.push_back({"A-", NodeRole::intermediate, a_minus,
                   {GraphBranch{s, 0, false, 0.0}, GraphBranch{c, 3, false, 0.0}}});
  nodes.push_back({"C", NodeRole::checkpoint, c,
                   {GraphBranch{b_plus, 4, false, 0.0}, GraphBranch{b_minus, 5, false, 0.0}}});
  nodes.push_back({"B+", NodeRole::intermediate, b_plus,
                   {GraphBranch{c, 3, false, 0.0}, GraphBranch{s, 0, true, 0.0}}});
  nodes.push_back({"B-", NodeRole::intermediate, b_minus,
                   {GraphBranch{c, 3, false, 0.0}, GraphBranch{s, 0, true, 0.0}}});

  ComplexMatrix target(k, k);
  for (std::size_t j = 0; j < k; ++j) target(j, j) = std::polar(1.0, phases[j]);
  return MeasurementGraph(std::move(nodes), 0, std::move(target));
}

MeasurementGraph build_qubit_rus_graph(double phi) {
  const double phases[2] = {0.0, phi};
  return build_general_rus_graph(phases);
}

namespace {

int classify_phase(const MeasurementGraph& graph, const StateVector& initial,
                   const StateVector& final_state) {
  const ComplexMatrix& basis = graph.start_subspace().basis();
  const std::size_t n = basis.rows();
  const std::size_t k = basis.cols();
  std::vector<Complex> coeffs(k, Complex{0.0, 0.0});
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < n; ++i) coeffs[j] += std::conj(basis(i, j)) * initial[i];
  std::vector<Complex> rotated(k, Complex{0.0, 0.0});
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) rotated[i] += graph.target_unitary()(i, j) * coeffs[j];
  Complex overlap{0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    Complex predicted{0.0, 0.0};
    for (std::size_t j = 0; j < k; ++j) predicted += basis(i, j) * rotated[j];
    overlap += std::conj(predicted) * final_state[i];
  }
  if (std::abs(overlap - Complex{1.0, 0.0}) < 1e-6) return +1;
  if (std::abs(overlap + Complex{1.0, 0.0}) < 1e-6) return -1;
  return 0;
}

TraversalTrace traverse(const MeasurementGraph& graph, const StateVector& state,
                        std::size_t max_steps, std::mt19937_64* gen,
                        std::span<const std::size_t> forced) {
  const TolerancePolicy policy{};
  if (state.dim() != graph.ambient_dim()) {
    throw DimensionMismatch("state dimension does not match the graph");
  }
  if (!graph.start_subspace().contains(state, policy.tol_norm)) {
    throw UnsupportedState("initial state must be supported on the start subspace");
  }

  TraversalTrace trace{{}, 0, state, false, 0};
  StateVector current = state;
  std::size_t node = graph.start_node();
  const std::size_t budget = gen ? max_steps : forced.size();
  for (std::size_t step = 0; step < budget; ++step) {
    const GraphNode& nd = graph.nodes()[node];
    std::size_t outcome = 0;
    if (gen) {
      // Conditional outcome probabilities for the current state.
      std::vector<double> probs(nd.branches.size(), 0.0);
      for (std::size_t b = 0; b < nd.branches.size(); ++b) {
        const ComplexMatrix& tb = nd.branches[b].target.basis();
        double p = 0.0;
        for (std::size_t j = 0; j < tb.cols(); ++j) {
          Complex coeff{0.0, 0.0};
          for (std::size_t i = 0; i < tb.rows(); ++i) coeff += std::conj(tb(i, j)) * current[i];
          p += std::norm(coeff);
        }
        probs[b] = p;
      }
      const double u = uniform_unit(*gen);
      double cumulative = 0.0;
      outcome = nd.branches.size() - 1;
      for (std::size_t b = 0; b < nd.branches.size(); ++b) {
        cumulative += probs[b];
        if (u < cumulative) {
          outcome = b;
          break;
        }
      }
    } else {
      outcome = forced[step];
      if (outcome >= nd.branches.size()) throw BadIndex("forced outcome index out of range");
    }

    const GraphBranch& branch = nd.branches[outcome];
    auto [conditional, probability] = apply_projection(current, branch.target, policy);
    trace.steps.push_back({node, outcome, probability});
    current = std::move(conditional);
    node = branch.successor;
    if (branch.completes_loop) {
      trace.completed = true;
      break;
    }
  }
  trace.step_count = trace.steps.size();
  trace.final_state = current;
  if (trace.completed) trace.holonomy_phase_class = classify_phase(graph, state, current);
  return trace;
}

}  // namespace

TraversalTrace run_protocol(const MeasurementGraph& graph, const StateVector& state,
                            std::uint64_t seed, std::size_t max_steps) {
  std::mt19937_64 gen(seed);
  return traverse(graph, state, max_steps, &gen, {});
}

TraversalTrace run_protocol_forced(const MeasurementGraph& graph, const StateVector& state,
                                   std::span<const std::size_t> outcomes) {
  return traverse(graph, state, outcomes.size(), nullptr, outcomes);
}

double expected_steps(const MeasurementGraph& graph) {
  const std::size_t n = graph.nodes().size();
  std::vector<bool> reachable(n, false);
  std::deque<std::size_t> queue{graph.start_node()};
  reachable[graph.start_node()] = true;
  bool absorbing = false;
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    for (const GraphBranch& b : graph.nodes()[v].branches) {
      if (b.completes_loop) {
        absorbing = true;
        continue;
      }
      if (!reachable[b.successor]) {
        reachable[b.successor] = true;
        queue.push_back(b.successor);
      }
    }
  }
  if (!absorbing) throw NonAbsorbing("no completing branch is reachable from the start");

  std::vector<std::size_t> index(n, n);
  std::vector<std::size_t> order;
  for (std::size_t v = 0; v < n; ++v) {
    if (reachable[v]) {
      index[v] = order.size();
      order.push_back(v);
    }
  }
  const std::size_t t = order.size();
  // (I - Q) E = 1 over the reachable transient nodes.
  std::vector<std::vector<double>> a(t, std::vector<double>(t, 0.0));
  std::vector<double> b(t, 1.0);
  for (std::size_t row = 0; row < t; ++row) {
    a[row][row] = 1.0;
    for (const GraphBranch& branch : graph.nodes()[order[row]].branches) {
      const double p = branch.scale * branch.scale;
      if (branch.completes_loop) continue;
      a[row][index[branch.successor]] -= p;
    }
  }
  if (!solve_linear(a, b)) {
    throw NonAbsorbing("the node chain does not absorb with probability one");
  }
  return b[index[graph.start_node()]];
}

HolonomyResult extract_holonomy(const MeasurementGraph& graph, const TraversalTrace& trace) {
  if (!trace.completed) throw IncompleteTrace("holonomy requires a completed traversal");
  const ComplexMatrix& basis = graph.start_subspace().basis();
  ComplexMatrix transported = basis;
  for (const TraversalStep& step : trace.steps) {
    if (step.node >= graph.nodes().size()) throw BadIndex("trace references an unknown node");
    const GraphNode& node = graph.nodes()[step.node];
    if (step.outcome >= node.branches.size()) throw BadIndex("trace outcome out of range");
    const GraphBranch& branch = node.branches[step.outcome];
    transported = projector_matrix(branch.target) * transported *
                  Complex{1.0 / branch.scale, 0.0};
  }
  HolonomyResult result{basis.adjoint() * transported, 0.0, Complex{0.0, 0.0}};

  const std::size_t k = basis.cols();
  if (max_abs_diff(result.unitary.adjoint() * result.unitary, ComplexMatrix::identity(k)) >
      TolerancePolicy{}.tol_flat) {
    throw Error("extracted holonomy is not unitary; trace and graph disagree");
  }
  const Complex tr = trace_product_adjoint(graph.target_unitary(), result.unitary);
  result.fidelity_to_target = std::abs(tr) / static_cast<double>(k);
  if (std::abs(tr) > 1e-12) result.global_phase = tr / std::abs(tr);
  return result;
}

bool equal_up_to_phase(const ComplexMatrix& u, const ComplexMatrix& v,
                       std::span<const Complex> allowed, const TolerancePolicy& policy) {
  policy.validate();
  if (u.rows() != v.rows() || u.cols() != v.cols() || u.rows() != u.cols()) {
    throw ShapeMismatch("phase comparison needs equal square shapes");
  }
  for (const Complex& c : allowed) {
    if (max_abs_diff(u, v * c) < policy.tol_phase) return true;
  }
  return false;
}

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace holonomy
