#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "holonomy/numerics.hpp"
#include "holonomy/protocols.hpp"
#include "holonomy/sequences.hpp"
#include "holonomy/subspaces.hpp"

namespace py = pybind11;
using namespace holonomy;

namespace {

using ComplexArray = py::array_t<std::complex<double>,
                                 py::array::c_style | py::array::forcecast>;

py::array_t<std::complex<double>> matrix_to_numpy(const ComplexMatrix& m) {
  py::array_t<std::complex<double>> out(
      {static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
  auto buf = out.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < buf.shape(0); ++i) {
    for (py::ssize_t j = 0; j < buf.shape(1); ++j) {
      buf(i, j) = m(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
  }
  return out;
}

ComplexMatrix matrix_from_numpy(const ComplexArray& arr) {
  if (arr.ndim() != 2) throw py::value_error("expected a 2-d complex array");
  auto buf = arr.unchecked<2>();
  ComplexMatrix m(static_cast<std::size_t>(buf.shape(0)),
                  static_cast<std::size_t>(buf.shape(1)));
  for (py::ssize_t i = 0; i < buf.shape(0); ++i) {
    for (py::ssize_t j = 0; j < buf.shape(1); ++j) {
      m(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = buf(i, j);
    }
  }
  return m;
}

py::array_t<std::complex<double>> state_to_numpy(const StateVector& v) {
  py::array_t<std::complex<double>> out(
      std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.dim())});
  auto buf = out.mutable_unchecked<1>();
  for (py::ssize_t i = 0; i < buf.shape(0); ++i) {
    buf(i) = v[static_cast<std::size_t>(i)];
  }
  return out;
}

StateVector state_from_numpy(const ComplexArray& arr) {
  if (arr.ndim() != 1) throw py::value_error("expected a 1-d complex array");
  auto buf = arr.unchecked<1>();
  std::vector<Complex> amps(static_cast<std::size_t>(buf.shape(0)));
  for (py::ssize_t i = 0; i < buf.shape(0); ++i) {
    amps[static_cast<std::size_t>(i)] = buf(i);
  }
  return StateVector(std::move(amps));
}

std::vector<StateVector> states_from_list(const std::vector<ComplexArray>& arrays) {
  std::vector<StateVector> states;
  states.reserve(arrays.size());
  for (const ComplexArray& a : arrays) states.push_back(state_from_numpy(a));
  return states;
}

py::dict isometry_report_dict(const IsometryReport& report) {
  py::dict d;
  d["is_isometry"] = report.is_isometry;
  d["scale"] = report.scale;
  d["principal_angles"] = report.principal_angles;
  d["shared_dim"] = report.shared_dim;
  d["required_min_ambient"] = report.required_min_ambient;
  d["trivial_identity"] = report.trivial_identity;
  d["reason"] = report.reason;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Core simulator for measurement-induced unitary holonomies.";

  // ---- numerics ----------------------------------------------------------
  m.def(
      "orthonormalize",
      [](const std::vector<ComplexArray>& vectors, bool require_full) {
        return matrix_to_numpy(orthonormalize(
            states_from_list(vectors), {},
            require_full ? RankMode::require_full : RankMode::drop_dependent));
      },
      py::arg("vectors"), py::arg("require_full") = false,
      "Orthonormal basis (as matrix columns) for the span of the inputs.");

  m.def(
      "svd",
      [](const ComplexArray& matrix) {
        SvdResult result = svd(matrix_from_numpy(matrix));
        return py::make_tuple(matrix_to_numpy(result.left), result.singular_values,
                              matrix_to_numpy(result.right));
      },
      py::arg("matrix"),
      "Thin SVD as (left, singular_values, right) with m = L diag(s) R^H.");

  // ---- subspaces ---------------------------------------------------------
  py::class_<Subspace>(m, "Subspace", "k-dimensional subspace of C^N.")
      .def_static(
          "from_columns",
          [](const ComplexArray& columns) {
            ComplexMatrix raw = matrix_from_numpy(columns);
            std::vector<StateVector> vectors;
            vectors.reserve(raw.cols());
            for (std::size_t j = 0; j < raw.cols(); ++j) {
              vectors.emplace_back(raw.column(j));
            }
            return Subspace::from_vectors(vectors);
          },
          py::arg("columns"),
          "Span of the given matrix columns (orthonormalized first).")
      .def_static("standard", &Subspace::standard, py::arg("ambient"), py::arg("k"),
                  "span{e_0, ..., e_{k-1}} inside C^ambient.")
      .def_property_readonly("ambient_dim", &Subspace::ambient_dim)
      .def_property_readonly("rank", &Subspace::rank)
      .def("basis", [](const Subspace& s) { return matrix_to_numpy(s.basis()); },
           "Orthonormal basis as matrix columns.")
      .def(
          "contains",
          [](const Subspace& s, const ComplexArray& state, double tol) {
            return s.contains(state_from_numpy(state), tol);
          },
          py::arg("state"), py::arg("tol") = 1e-10);

  m.def(
      "projector",
      [](const Subspace& s) { return matrix_to_numpy(projector_matrix(s)); },
      py::arg("subspace"), "Orthogonal projector onto the subspace.");
  m.def(
      "complement", [](const Subspace& s) { return complement(s); }, py::arg("subspace"),
      "Orthogonal complement subspace.");
  m.def(
      "same_span",
      [](const Subspace& a, const Subspace& b, double tol) { return same_span(a, b, tol); },
      py::arg("a"), py::arg("b"), py::arg("tol") = 1e-10);
  m.def(
      "principal_angles",
      [](const Subspace& a, const Subspace& b) { return principal_angles(a, b); },
      py::arg("a"), py::arg("b"), "Canonical angles between the subspaces, ascending.");
  m.def(
      "isometry_report",
      [](const Subspace& source, const Subspace& target) {
        return isometry_report_dict(isometry_report(source, target));
      },
      py::arg("source"), py::arg("target"),
      "Diagnostics for whether projecting source onto target is a scaled isometry.");

  // ---- sequences ---------------------------------------------------------
  m.def(
      "apply_projection",
      [](const ComplexArray& state, const Subspace& s) {
        auto [conditional, probability] = apply_projection(state_from_numpy(state), s);
        return py::make_tuple(state_to_numpy(conditional), probability);
      },
      py::arg("state"), py::arg("subspace"),
      "Conditional post-measurement state and outcome probability.");

  m.def("phase_loop_scale", &phase_loop_scale, py::arg("refinement"),
        "Closed-form loop amplitude magnitude cos(pi/(4n))^{4n}.");

  m.def(
      "phase_loop_states",
      [](std::size_t k, std::size_t m_index, double phi, std::size_t refinement) {
        PhaseLoopSpec spec{k, m_index, phi, refinement};
        std::vector<py::array_t<std::complex<double>>> out;
        for (const StateVector& s : phase_loop_states(spec)) out.push_back(state_to_numpy(s));
        return out;
      },
      py::arg("k") = 1, py::arg("m") = 1, py::arg("phi") = 0.0, py::arg("refinement") = 1,
      "The 4n+1 loop states (first = last) in dimension k+1.");

  m.def(
      "phase_loop_operator",
      [](std::size_t k, std::size_t m_index, double phi, std::size_t refinement) {
        PhaseLoopSpec spec{k, m_index, phi, refinement};
        return matrix_to_numpy(cumulative_operator(build_phase_loop(spec)));
      },
      py::arg("k") = 1, py::arg("m") = 1, py::arg("phi") = 0.0, py::arg("refinement") = 1,
      "Cumulative projector product of the loop sequence.");

  m.def(
      "survival_probability",
      [](const ComplexArray& gamma, const ComplexArray& state) {
        return survival_probability(matrix_from_numpy(gamma), state_from_numpy(state));
      },
      py::arg("gamma"), py::arg("state"),
      "Probability that the state survives the whole sequence.");

  m.def(
      "bargmann_invariant",
      [](const std::vector<ComplexArray>& loop) {
        return bargmann_invariant(states_from_list(loop));
      },
      py::arg("loop"), "Cyclic overlap product around a closed list of states.");

  m.def(
      "solid_angle",
      [](const std::vector<std::array<double, 3>>& loop) {
        std::vector<BlochVector> vertices(loop.begin(), loop.end());
        return solid_angle(vertices);
      },
      py::arg("loop"), "Signed solid angle of a geodesic polygon on the unit sphere.");

  m.def(
      "bloch_from_state",
      [](const ComplexArray& state) { return bloch_from_state(state_from_numpy(state)); },
      py::arg("state"), "Bloch vector of a normalized two-level state.");
  m.def(
      "state_from_bloch",
      [](const std::array<double, 3>& r) {
        return state_to_numpy(state_from_bloch(BlochVector{r[0], r[1], r[2]}));
      },
      py::arg("r"), "Two-level state with the given Bloch vector.");

  m.def(
      "compose_diag_unitary",
      [](const std::vector<double>& phases, std::size_t refinement) {
        auto [gamma, scale] = compose_diag_unitary(phases, refinement);
        return py::make_tuple(matrix_to_numpy(gamma), scale);
      },
      py::arg("phases"), py::arg("refinement") = 1,
      "Composite loop operator realizing scale * diag(e^{i phi_m}) on the logical block.");

  // ---- protocols ---------------------------------------------------------
  py::class_<MeasurementGraph>(m, "MeasurementGraph",
                               "Directed measurement graph with isometric edges.")
      .def_property_readonly("ambient_dim", &MeasurementGraph::ambient_dim)
      .def_property_readonly("node_count",
                             [](const MeasurementGraph& g) { return g.nodes().size(); })
      .def_property_readonly("start_node", &MeasurementGraph::start_node)
      .def("start_subspace", &MeasurementGraph::start_subspace)
      .def("target_unitary", [](const MeasurementGraph& g) {
        return matrix_to_numpy(g.target_unitary());
      });

  py::class_<TraversalTrace>(m, "TraversalTrace", "Record of one protocol traversal.")
      .def_property_readonly("step_count",
                             [](const TraversalTrace& t) { return t.step_count; })
      .def_property_readonly("completed",
                             [](const TraversalTrace& t) { return t.completed; })
      .def_property_readonly("phase_class",
                             [](const TraversalTrace& t) { return t.holonomy_phase_class; })
      .def_property_readonly("final_state", [](const TraversalTrace& t) {
        return state_to_numpy(t.final_state);
      });

  m.def("build_qubit_rus_graph", &build_qubit_rus_graph, py::arg("phi"),
        "Six-node repeat-until-success graph realizing diag(1, e^{i phi}).");
  m.def(
      "build_general_rus_graph",
      [](const std::vector<double>& phases) { return build_general_rus_graph(phases); },
      py::arg("phases"),
      "k-component repeat-until-success graph realizing diag(e^{i phi_j}).");

  m.def(
      "run_protocol",
      [](const MeasurementGraph& graph, const ComplexArray& state, std::uint64_t seed,
         std::size_t max_steps) {
        return run_protocol(graph, state_from_numpy(state), seed, max_steps);
      },
      py::arg("graph"), py::arg("state"), py::arg("seed"), py::arg("max_steps") = 10000,
      "One seeded stochastic traversal.");
  m.def(
      "run_protocol_forced",
      [](const MeasurementGraph& graph, const ComplexArray& state,
         const std::vector<std::size_t>& outcomes) {
        return run_protocol_forced(graph, state_from_numpy(state), outcomes);
      },
      py::arg("graph"), py::arg("state"), py::arg("outcomes"),
      "Deterministic traversal along the given outcome indices.");

  m.def("expected_steps", &expected_steps, py::arg("graph"),
        "Expected measurements until completion, from the fundamental matrix.");

  m.def(
      "extract_holonomy",
      [](const MeasurementGraph& graph, const TraversalTrace& trace) {
        HolonomyResult result = extract_holonomy(graph, trace);
        py::dict d;
        d["unitary"] = matrix_to_numpy(result.unitary);
        d["fidelity_to_target"] = result.fidelity_to_target;
        d["global_phase"] = result.global_phase;
        return d;
      },
      py::arg("graph"), py::arg("trace"),
      "Unitary enacted on the start subspace by a completed trace.");

  m.def(
      "equal_up_to_phase",
      [](const ComplexArray& u, const ComplexArray& v,
         const std::vector<std::complex<double>>& allowed) {
        std::vector<Complex> phases(allowed.begin(), allowed.end());
        return equal_up_to_phase(matrix_from_numpy(u), matrix_from_numpy(v), phases);
      },
      py::arg("u"), py::arg("v"), py::arg("allowed"),
      "True iff u = c * v for some allowed unit factor c.");

  m.def("mix_seed", &mix_seed, py::arg("master"), py::arg("index"),
        "Per-shot stream seed derived from the master seed.");
}
