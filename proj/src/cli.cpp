#include "holonomy/cli.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "holonomy/errors.hpp"
#include "holonomy/numerics.hpp"
#include "holonomy/protocols.hpp"
#include "holonomy/sequences.hpp"
#include "holonomy/subspaces.hpp"

namespace holonomy::cli {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

/// Anything wrong with the invocation itself; maps to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Which fields were set explicitly (flag or config file), as opposed
/// to carrying their defaults. Drives flag-over-file precedence, the
/// HOLONOMY_SEED fallback, and conflict checks.
struct Explicit {
  bool k = false;
  bool m = false;
  bool phases = false;
  bool phi = false;
  bool refinement = false;
  bool theta = false;
  bool ambient = false;
  bool seed = false;
  bool shots = false;
  bool max_steps = false;
  bool output = false;
  bool per_shot = false;
};

struct ModeOutput {
  ordered_json results;
  std::string summary;
};

// ---------------------------------------------------------------------------
// deterministic JSON rendering

/// Shortest round-trip decimal form, locale-independent.
std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (res.ec != std::errc()) {
    int n = std::snprintf(buf.data(), buf.size(), "%.17g", value);
    return std::string(buf.data(), static_cast<std::size_t>(n));
  }
  return std::string(buf.data(), res.ptr);
}

void dump_scalar(const ordered_json& j, std::string& s) {
  if (j.is_string()) {
    s += j.dump();
  } else if (j.is_boolean()) {
    s += j.get<bool>() ? "true" : "false";
  } else if (j.is_number_unsigned()) {
    s += std::to_string(j.get<std::uint64_t>());
  } else if (j.is_number_integer()) {
    s += std::to_string(j.get<std::int64_t>());
  } else if (j.is_number_float()) {
    s += format_double(j.get<double>());
  } else {
    s += "null";
  }
}

bool all_primitive(const ordered_json& j) {
  return std::none_of(j.cbegin(), j.cend(),
                      [](const ordered_json& el) { return el.is_structured(); });
}

/// Writes containers of scalars on one line and everything else with
/// two-space indentation. Doubles go through format_double, so equal
/// documents always render to equal bytes.
void dump_json(const ordered_json& j, std::string& s, std::size_t depth) {
  if (!j.is_structured()) {
    dump_scalar(j, s);
    return;
  }
  const char open = j.is_object() ? '{' : '[';
  const char close = j.is_object() ? '}' : ']';
  if (j.empty()) {
    s += open;
    s += close;
    return;
  }
  const bool inline_form = all_primitive(j);
  const std::string pad(2 * (depth + 1), ' ');
  s += open;
  bool first = true;
  for (auto it = j.cbegin(); it != j.cend(); ++it) {
    if (!first) s += ',';
    first = false;
    if (inline_form) {
      s += ' ';
    } else {
      s += '\n';
      s += pad;
    }
    if (j.is_object()) {
      s += ordered_json(it.key()).dump();
      s += ": ";
    }
    dump_json(it.value(), s, depth + 1);
  }
  if (inline_form) {
    s += ' ';
  } else {
    s += '\n';
    s += std::string(2 * depth, ' ');
  }
  s += close;
}

std::string render_document(const ordered_json& doc) {
  std::string s;
  dump_json(doc, s, 0);
  s += '\n';
  return s;
}

void ensure_finite(const ordered_json& j) {
  if (j.is_number_float() && !std::isfinite(j.get<double>())) {
    throw Error("report contains a non-finite number");
  }
  if (j.is_structured()) {
    for (const auto& el : j) ensure_finite(el);
  }
}

ordered_json json_complex(Complex z) {
  return ordered_json{{"re", z.real()}, {"im", z.imag()}};
}

ordered_json json_matrix(const ComplexMatrix& m) {
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) {
      row.push_back(json_complex(m(i, j)));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// small numeric helpers

double uniform_unit(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

double wrap_angle(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

/// Random normalized state supported on the k logical components of
/// C^{k+1}; the auxiliary amplitude stays zero.
StateVector random_logical_state(std::mt19937_64& gen, std::size_t k) {
  std::vector<Complex> amps(k + 1, Complex(0.0, 0.0));
  double norm_sq = 0.0;
  do {
    norm_sq = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      amps[j] = Complex(2.0 * uniform_unit(gen) - 1.0, 2.0 * uniform_unit(gen) - 1.0);
      norm_sq += std::norm(amps[j]);
    }
  } while (norm_sq < 1e-12);
  return StateVector(amps).normalized();
}

// ---------------------------------------------------------------------------
// mode runners

ModeOutput run_phase_loop(const ExperimentConfig& cfg) {
  PhaseLoopSpec spec{cfg.k, cfg.m, cfg.phi, cfg.refinement};
  std::vector<StateVector> states = phase_loop_states(spec);
  ComplexMatrix gamma = cumulative_operator(build_phase_loop(spec));
  Complex amplitude = gamma(cfg.m - 1, cfg.m - 1);
  double scale = phase_loop_scale(cfg.refinement);
  Complex barg = bargmann_invariant(states);

  std::vector<BlochVector> polygon;
  polygon.reserve(states.size());
  for (const StateVector& psi : states) {
    polygon.push_back(bloch_from_state(StateVector({psi[cfg.m - 1], psi[cfg.k]})));
  }
  double omega = solid_angle(polygon);
  double survival =
      survival_probability(gamma, StateVector::basis_state(cfg.k + 1, cfg.m - 1));

  ordered_json results;
  results["loop_length"] = states.size();
  results["scale"] = scale;
  results["scale_squared"] = scale * scale;
  results["amplitude"] = json_complex(amplitude);
  results["amplitude_abs"] = std::abs(amplitude);
  results["amplitude_arg"] = std::arg(amplitude);
  results["survival_probability"] = survival;
  results["bargmann"] = json_complex(barg);
  results["bargmann_arg"] = std::arg(barg);
  results["solid_angle"] = omega;
  results["half_solid_angle"] = 0.5 * omega;

  std::ostringstream os;
  os << "phase-loop: |t| = " << std::abs(amplitude) << ", arg t = " << std::arg(amplitude);
  return {std::move(results), os.str()};
}

ModeOutput run_compose(const ExperimentConfig& cfg) {
  auto [gamma, scale] = compose_diag_unitary(cfg.phases, cfg.refinement);
  const std::size_t k = cfg.k;

  ComplexMatrix holonomy(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      holonomy(i, j) = gamma(i, j) / scale;
    }
  }
  double unitarity_defect =
      max_abs_diff(holonomy.adjoint() * holonomy, ComplexMatrix::identity(k));
  double max_phase_error = 0.0;
  for (std::size_t m = 0; m < k; ++m) {
    max_phase_error = std::max(
        max_phase_error, std::abs(wrap_angle(std::arg(holonomy(m, m)) - cfg.phases[m])));
  }

  const std::size_t samples = 100;
  std::mt19937_64 gen(cfg.seed);
  double s_min = std::numeric_limits<double>::infinity();
  double s_max = -std::numeric_limits<double>::infinity();
  double s_sum = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    double p = survival_probability(gamma, random_logical_state(gen, k));
    s_min = std::min(s_min, p);
    s_max = std::max(s_max, p);
    s_sum += p;
  }

  ordered_json results;
  results["scale"] = scale;
  results["scale_squared"] = scale * scale;
  results["holonomy"] = json_matrix(holonomy);
  results["unitarity_defect"] = unitarity_defect;
  results["max_phase_error"] = max_phase_error;
  results["survival"] = ordered_json{{"samples", samples},
                                     {"min", s_min},
                                     {"max", s_max},
                                     {"mean", s_sum / static_cast<double>(samples)},
                                     {"spread", s_max - s_min}};

  std::ostringstream os;
  os << "compose: k = " << k << ", unitarity defect = " << unitarity_defect;
  return {std::move(results), os.str()};
}

ordered_json json_isometry(const IsometryReport& report) {
  ordered_json j;
  j["is_isometry"] = report.is_isometry;
  j["scale"] = report.scale;
  j["scale_squared"] = report.scale * report.scale;
  ordered_json angles = ordered_json::array();
  for (double a : report.principal_angles) angles.push_back(a);
  j["principal_angles"] = std::move(angles);
  j["shared_dim"] = report.shared_dim;
  j["required_min_ambient"] = report.required_min_ambient;
  j["trivial_identity"] = report.trivial_identity;
  j["reason"] = report.reason;
  return j;
}

ModeOutput run_isometry_check(const ExperimentConfig& cfg) {
  const std::size_t n = cfg.ambient;
  const std::size_t k = cfg.k;
  Subspace source = Subspace::standard(n, k);

  std::vector<StateVector> columns;
  columns.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<Complex> v(n, Complex(0.0, 0.0));
    if (j + k < n) {
      v[j] = std::cos(cfg.theta);
      v[j + k] = std::sin(cfg.theta);
    } else {
      v[j] = 1.0;
    }
    columns.emplace_back(std::move(v));
  }
  Subspace target = Subspace::from_vectors(columns);
  IsometryReport report = isometry_report(source, target);

  ordered_json results = json_isometry(report);
  if (n > k) {
    IsometryReport comp = isometry_report(source, complement(target));
    ordered_json cj;
    cj["is_isometry"] = comp.is_isometry;
    cj["scale"] = comp.scale;
    cj["scale_squared"] = comp.scale * comp.scale;
    cj["reason"] = comp.reason;
    results["complement"] = std::move(cj);
  } else {
    results["complement"] = nullptr;
  }

  std::ostringstream os;
  os << "isometry-check: is_isometry = " << (report.is_isometry ? "true" : "false");
  if (report.is_isometry) {
    os << ", scale^2 = " << report.scale * report.scale;
  } else {
    os << " (" << report.reason << ")";
  }
  return {std::move(results), os.str()};
}

const char* role_name(NodeRole role) {
  switch (role) {
    case NodeRole::start:
      return "start";
    case NodeRole::checkpoint:
      return "checkpoint";
    case NodeRole::intermediate:
      return "intermediate";
  }
  return "intermediate";
}

ModeOutput run_rus_analyze(const ExperimentConfig& cfg) {
  MeasurementGraph graph = build_general_rus_graph(cfg.phases);
  double expected = expected_steps(graph);

  ordered_json nodes = ordered_json::array();
  for (const GraphNode& node : graph.nodes()) {
    ordered_json branches = ordered_json::array();
    for (const GraphBranch& branch : node.branches) {
      branches.push_back(ordered_json{{"to", graph.nodes()[branch.successor].label},
                                      {"scale", branch.scale},
                                      {"probability", branch.scale * branch.scale},
                                      {"completes_loop", branch.completes_loop}});
    }
    ordered_json nj;
    nj["label"] = node.label;
    nj["role"] = role_name(node.role);
    nj["rank"] = node.subspace.rank();
    nj["branches"] = std::move(branches);
    nodes.push_back(std::move(nj));
  }

  ordered_json results;
  results["ambient"] = graph.ambient_dim();
  results["logical_dim"] = graph.start_subspace().rank();
  results["node_count"] = graph.nodes().size();
  results["expected_steps"] = expected;
  results["target_unitary"] = json_matrix(graph.target_unitary());
  results["nodes"] = std::move(nodes);

  std::ostringstream os;
  os << "rus-analyze: expected steps = " << expected;
  return {std::move(results), os.str()};
}

ModeOutput run_rus_run(const ExperimentConfig& cfg, std::string* csv) {
  MeasurementGraph graph = build_general_rus_graph(cfg.phases);
  const std::size_t n = graph.ambient_dim();
  const std::size_t k = graph.start_subspace().rank();

  std::vector<Complex> amps(n, Complex(0.0, 0.0));
  for (std::size_t j = 0; j < k; ++j) {
    amps[j] = Complex(1.0 / std::sqrt(static_cast<double>(k)), 0.0);
  }
  StateVector initial(amps);

  // Target-evolved start state, for a cheap per-shot fidelity check.
  const ComplexMatrix& basis = graph.start_subspace().basis();
  const ComplexMatrix& target = graph.target_unitary();
  std::vector<Complex> coeffs(k, Complex(0.0, 0.0));
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      coeffs[j] += std::conj(basis(i, j)) * initial[i];
    }
  }
  std::vector<Complex> rotated(k, Complex(0.0, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      rotated[i] += target(i, j) * coeffs[j];
    }
  }
  std::vector<Complex> predicted_amps(n, Complex(0.0, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      predicted_amps[i] += basis(i, j) * rotated[j];
    }
  }
  StateVector predicted(predicted_amps);

  std::size_t completed = 0;
  std::size_t plus = 0;
  std::size_t minus = 0;
  std::size_t steps_min = 0;
  std::size_t steps_max = 0;
  double steps_sum = 0.0;
  double steps_sq_sum = 0.0;
  double fid_min = std::numeric_limits<double>::infinity();
  double fid_sum = 0.0;
  std::optional<HolonomyResult> first;
  int first_class = 0;
  std::string rows;

  for (std::size_t shot = 0; shot < cfg.shots; ++shot) {
    TraversalTrace trace = run_protocol(graph, initial, mix_seed(cfg.seed, shot), cfg.max_steps);
    if (csv != nullptr) {
      rows += std::to_string(shot);
      rows += ',';
      rows += std::to_string(trace.step_count);
      rows += ',';
      rows += trace.completed ? '1' : '0';
      rows += ',';
      rows += std::to_string(trace.holonomy_phase_class);
      rows += '\n';
    }
    if (!trace.completed) continue;

    if (completed == 0 || trace.step_count < steps_min) steps_min = trace.step_count;
    if (completed == 0 || trace.step_count > steps_max) steps_max = trace.step_count;
    ++completed;
    steps_sum += static_cast<double>(trace.step_count);
    steps_sq_sum +=
        static_cast<double>(trace.step_count) * static_cast<double>(trace.step_count);
    if (trace.holonomy_phase_class > 0) ++plus;
    if (trace.holonomy_phase_class < 0) ++minus;

    double fidelity = std::abs(inner_product(predicted, trace.final_state));
    fid_min = std::min(fid_min, fidelity);
    fid_sum += fidelity;

    if (!first.has_value()) {
      first = extract_holonomy(graph, trace);
      first_class = trace.holonomy_phase_class;
    }
  }

  ordered_json results;
  results["ambient"] = n;
  results["logical_dim"] = k;
  results["shots"] = cfg.shots;
  results["completed"] = completed;
  results["incomplete"] = cfg.shots - completed;
  results["success_rate"] = static_cast<double>(completed) / static_cast<double>(cfg.shots);
  results["expected_steps"] = expected_steps(graph);
  if (completed > 0) {
    const double mean = steps_sum / static_cast<double>(completed);
    const double variance =
        std::max(0.0, steps_sq_sum / static_cast<double>(completed) - mean * mean);
    const double stddev = std::sqrt(variance);
    results["steps"] =
        ordered_json{{"min", steps_min},
                     {"max", steps_max},
                     {"mean", mean},
                     {"stddev", stddev},
                     {"standard_error", stddev / std::sqrt(static_cast<double>(completed))}};
    results["phase_class_counts"] = ordered_json{{"plus", plus}, {"minus", minus}};
    results["fidelity"] = ordered_json{{"min", fid_min},
                                       {"mean", fid_sum / static_cast<double>(completed)}};
    ordered_json fj;
    fj["phase_class"] = first_class;
    fj["holonomy"] = json_matrix(first->unitary);
    fj["global_phase"] = json_complex(first->global_phase);
    fj["fidelity_to_target"] = first->fidelity_to_target;
    results["first_shot"] = std::move(fj);
  } else {
    results["steps"] = nullptr;
    results["phase_class_counts"] = ordered_json{{"plus", plus}, {"minus", minus}};
    results["fidelity"] = nullptr;
    results["first_shot"] = nullptr;
  }

  if (csv != nullptr) {
    *csv = "shot,steps,completed,phase_class\n" + rows;
  }

  std::ostringstream os;
  if (completed > 0) {
    os << "rus-run: completed " << completed << "/" << cfg.shots << " shots, mean steps "
       << steps_sum / static_cast<double>(completed);
  } else {
    os << "rus-run: no shot completed within " << cfg.max_steps << " steps";
  }
  return {std::move(results), os.str()};
}

ModeOutput run_zeno_sweep(const ExperimentConfig& cfg) {
  ordered_json entries = ordered_json::array();
  double previous = 0.0;
  bool monotone = true;
  std::size_t last_n = 1;
  double last_scale = 0.0;
  for (std::size_t nref = 1; nref <= cfg.refinement; nref *= 2) {
    PhaseLoopSpec spec{cfg.k, cfg.m, cfg.phi, nref};
    ComplexMatrix gamma = cumulative_operator(build_phase_loop(spec));
    Complex amplitude = gamma(cfg.m - 1, cfg.m - 1);
    double scale = phase_loop_scale(nref);

    ordered_json entry;
    entry["refinement"] = nref;
    entry["scale"] = scale;
    entry["scale_squared"] = scale * scale;
    entry["amplitude_abs"] = std::abs(amplitude);
    entry["amplitude_arg"] = std::arg(amplitude);
    entry["closed_form_delta"] = std::abs(std::abs(amplitude) - scale);
    entries.push_back(std::move(entry));

    if (scale <= previous) monotone = false;
    previous = scale;
    last_n = nref;
    last_scale = scale;
    if (nref > cfg.refinement / 2) break;
  }

  ordered_json results;
  results["max_refinement"] = cfg.refinement;
  results["entries"] = std::move(entries);
  results["monotone_increasing"] = monotone;

  std::ostringstream os;
  os << "zeno-sweep: scale(" << last_n << ") = " << last_scale;
  return {std::move(results), os.str()};
}

ModeOutput dispatch(const ExperimentConfig& cfg, std::string* csv) {
  if (cfg.mode == "phase-loop") return run_phase_loop(cfg);
  if (cfg.mode == "compose") return run_compose(cfg);
  if (cfg.mode == "isometry-check") return run_isometry_check(cfg);
  if (cfg.mode == "rus-run") return run_rus_run(cfg, csv);
  if (cfg.mode == "rus-analyze") return run_rus_analyze(cfg);
  if (cfg.mode == "zeno-sweep") return run_zeno_sweep(cfg);
  throw ConfigError("unknown mode '" + cfg.mode + "'");
}

// ---------------------------------------------------------------------------
// configuration plumbing

std::uint64_t parse_env_seed(const char* text) {
  const std::string s(text);
  std::uint64_t value = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("HOLONOMY_SEED must be a nonnegative integer, got '" + s + "'");
  }
  return value;
}

void apply_config_file(const std::string& path, ExperimentConfig& cfg, Explicit& ex) {
  std::ifstream file(path);
  if (!file) {
    throw ConfigError("cannot open config file '" + path + "'");
  }
  ordered_json doc;
  try {
    doc = ordered_json::parse(file);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  if (!doc.is_object()) {
    throw ConfigError("config file '" + path + "' must hold a JSON object");
  }

  static const std::set<std::string> known = {
      "mode",  "k",       "m",     "phases",    "phi",         "refinement", "theta",
      "ambient", "seed",  "shots", "max_steps", "output_path", "per_shot"};
  for (const auto& item : doc.items()) {
    if (known.find(item.key()) == known.end()) {
      throw ConfigError("config file '" + path + "': unknown field '" + item.key() + "'");
    }
  }

  if (doc.contains("mode")) {
    if (!doc["mode"].is_string()) {
      throw ConfigError("config field 'mode' must be a string");
    }
    const std::string mode = doc["mode"].get<std::string>();
    if (mode != cfg.mode) {
      throw ConfigError("config file mode '" + mode + "' does not match subcommand '" +
                        cfg.mode + "'");
    }
  }

  auto take_size = [&doc](const char* key, std::size_t& target, bool& given) {
    if (given || !doc.contains(key)) return;
    const ordered_json& v = doc.at(key);
    if (!v.is_number_unsigned()) {
      throw ConfigError(std::string("config field '") + key +
                        "' must be a nonnegative integer");
    }
    target = v.get<std::size_t>();
    given = true;
  };
  auto take_u64 = [&doc](const char* key, std::uint64_t& target, bool& given) {
    if (given || !doc.contains(key)) return;
    const ordered_json& v = doc.at(key);
    if (!v.is_number_unsigned()) {
      throw ConfigError(std::string("config field '") + key +
                        "' must be a nonnegative integer");
    }
    target = v.get<std::uint64_t>();
    given = true;
  };
  auto take_real = [&doc](const char* key, double& target, bool& given) {
    if (given || !doc.contains(key)) return;
    const ordered_json& v = doc.at(key);
    if (!v.is_number()) {
      throw ConfigError(std::string("config field '") + key + "' must be a number");
    }
    target = v.get<double>();
    given = true;
  };
  auto take_bool = [&doc](const char* key, bool& target, bool& given) {
    if (given || !doc.contains(key)) return;
    const ordered_json& v = doc.at(key);
    if (!v.is_boolean()) {
      throw ConfigError(std::string("config field '") + key + "' must be a boolean");
    }
    target = v.get<bool>();
    given = true;
  };
  auto take_string = [&doc](const char* key, std::string& target, bool& given) {
    if (given || !doc.contains(key)) return;
    const ordered_json& v = doc.at(key);
    if (!v.is_string()) {
      throw ConfigError(std::string("config field '") + key + "' must be a string");
    }
    target = v.get<std::string>();
    given = true;
  };
  auto take_reals = [&doc](const char* key, std::vector<double>& target, bool& given) {
    if (given || !doc.contains(key)) return;
    const ordered_json& v = doc.at(key);
    if (!v.is_array()) {
      throw ConfigError(std::string("config field '") + key + "' must be an array of numbers");
    }
    std::vector<double> values;
    for (const ordered_json& el : v) {
      if (!el.is_number()) {
        throw ConfigError(std::string("config field '") + key +
                          "' must be an array of numbers");
      }
      values.push_back(el.get<double>());
    }
    target = std::move(values);
    given = true;
  };

  take_size("k", cfg.k, ex.k);
  take_size("m", cfg.m, ex.m);
  take_reals("phases", cfg.phases, ex.phases);
  take_real("phi", cfg.phi, ex.phi);
  take_size("refinement", cfg.refinement, ex.refinement);
  take_real("theta", cfg.theta, ex.theta);
  take_size("ambient", cfg.ambient, ex.ambient);
  take_u64("seed", cfg.seed, ex.seed);
  take_size("shots", cfg.shots, ex.shots);
  take_size("max_steps", cfg.max_steps, ex.max_steps);
  take_string("output_path", cfg.output_path, ex.output);
  take_bool("per_shot", cfg.per_shot, ex.per_shot);
}

/// Fills derived fields (phase list, ambient dimension) and rejects
/// out-of-range values. Runs after flag/file/environment merging.
void resolve_config(ExperimentConfig& cfg, const Explicit& ex) {
  if (cfg.k == 0) throw ConfigError("k must be at least 1");
  if (cfg.refinement == 0) throw ConfigError("refinement must be at least 1");
  if (cfg.refinement > 1000000) throw ConfigError("refinement is capped at 1000000");
  if (cfg.shots == 0) throw ConfigError("shots must be at least 1");
  if (cfg.max_steps == 0) throw ConfigError("max_steps must be at least 1");
  if (!std::isfinite(cfg.phi)) throw ConfigError("phi must be finite");
  if (!std::isfinite(cfg.theta)) throw ConfigError("theta must be finite");
  for (double p : cfg.phases) {
    if (!std::isfinite(p)) throw ConfigError("phases must be finite");
  }
  if (cfg.output_path.empty()) throw ConfigError("output_path must not be empty");

  if (cfg.mode == "phase-loop" || cfg.mode == "zeno-sweep") {
    if (cfg.m < 1 || cfg.m > cfg.k) throw ConfigError("m must lie in 1..k");
    cfg.ambient = cfg.k + 1;
    return;
  }
  if (cfg.mode == "compose") {
    if (ex.phases && ex.phi) throw ConfigError("give either --phases or --phi, not both");
    if (!cfg.phases.empty()) {
      if (ex.k && cfg.k != cfg.phases.size()) {
        throw ConfigError("k disagrees with the number of phases");
      }
      cfg.k = cfg.phases.size();
    } else {
      if (cfg.k != 1) throw ConfigError("compose with k > 1 needs --phases");
      cfg.phases = {cfg.phi};
    }
    cfg.ambient = cfg.k + 1;
    return;
  }
  if (cfg.mode == "rus-run" || cfg.mode == "rus-analyze") {
    if (ex.phases && ex.phi) throw ConfigError("give either --phases or --phi, not both");
    if (cfg.phases.empty()) cfg.phases = {0.0, cfg.phi};
    cfg.k = cfg.phases.size();
    cfg.ambient = 2 * cfg.k;
    return;
  }
  if (cfg.mode == "isometry-check") {
    if (cfg.ambient == 0) cfg.ambient = 2 * cfg.k;
    if (cfg.ambient < cfg.k) throw ConfigError("ambient must be at least k");
    return;
  }
  throw ConfigError("unknown mode '" + cfg.mode + "'");
}

ordered_json config_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["k"] = cfg.k;
  j["m"] = cfg.m;
  ordered_json phases = ordered_json::array();
  for (double p : cfg.phases) phases.push_back(p);
  j["phases"] = std::move(phases);
  j["phi"] = cfg.phi;
  j["refinement"] = cfg.refinement;
  j["theta"] = cfg.theta;
  j["ambient"] = cfg.ambient;
  j["seed"] = cfg.seed;
  j["shots"] = cfg.shots;
  j["max_steps"] = cfg.max_steps;
  j["output_path"] = cfg.output_path;
  j["per_shot"] = cfg.per_shot;
  return j;
}

/// Writes via a temporary in the same directory so a failure never
/// leaves a truncated report behind.
void write_file(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) {
      throw ConfigError("cannot open '" + tmp.string() + "' for writing");
    }
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw ConfigError("failed while writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ec_remove;
    fs::remove(tmp, ec_remove);
    throw ConfigError("cannot move '" + tmp.string() + "' into place: " + ec.message());
  }
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    ExperimentConfig cfg;
    std::string config_path;

    CLI::App app{"measurement-induced unitary holonomy simulator"};
    app.name("holonomy");
    app.require_subcommand(1);

    auto add_io = [&](CLI::App* cmd) {
      cmd->add_option("--config", config_path,
                      "JSON config file; explicit flags override its fields");
      cmd->add_option("--output", cfg.output_path,
                      "directory for report.json (and shots.csv)");
    };

    CLI::App* phase_loop =
        app.add_subcommand("phase-loop", "run one projection loop and report the amplitude");
    phase_loop->add_option("--k", cfg.k, "logical dimension");
    phase_loop->add_option("--m", cfg.m, "1-based index of the phased component");
    phase_loop->add_option("--phi", cfg.phi, "loop phase in radians");
    phase_loop->add_option("--refinement", cfg.refinement, "steps per quarter arc");
    add_io(phase_loop);

    CLI::App* compose =
        app.add_subcommand("compose", "compose per-component loops into a diagonal holonomy");
    compose->add_option("--k", cfg.k, "logical dimension");
    compose->add_option("--phases", cfg.phases, "comma-separated target phases")
        ->delimiter(',');
    compose->add_option("--phi", cfg.phi, "single-phase shorthand for k = 1");
    compose->add_option("--refinement", cfg.refinement, "steps per quarter arc");
    compose->add_option("--seed", cfg.seed, "seed for the survival sampling");
    add_io(compose);

    CLI::App* isometry =
        app.add_subcommand("isometry-check", "diagnose a tilted projection between subspaces");
    isometry->add_option("--k", cfg.k, "subspace rank");
    isometry->add_option("--ambient", cfg.ambient, "ambient dimension (default 2k)");
    isometry->add_option("--theta", cfg.theta, "tilt angle in radians");
    add_io(isometry);

    CLI::App* rus_run =
        app.add_subcommand("rus-run", "sample repeat-until-success traversals");
    rus_run->add_option("--phi", cfg.phi, "qubit graph phase");
    rus_run->add_option("--phases", cfg.phases,
                        "comma-separated phases for the general graph")
        ->delimiter(',');
    rus_run->add_option("--shots", cfg.shots, "number of traversals");
    rus_run->add_option("--seed", cfg.seed, "master seed");
    rus_run->add_option("--max-steps", cfg.max_steps, "per-shot measurement budget");
    rus_run->add_flag("--per-shot", cfg.per_shot, "also write shots.csv");
    add_io(rus_run);

    CLI::App* rus_analyze =
        app.add_subcommand("rus-analyze", "report the graph structure and expected steps");
    rus_analyze->add_option("--phi", cfg.phi, "qubit graph phase");
    rus_analyze->add_option("--phases", cfg.phases,
                            "comma-separated phases for the general graph")
        ->delimiter(',');
    add_io(rus_analyze);

    CLI::App* zeno =
        app.add_subcommand("zeno-sweep", "sweep arc refinement and watch survival approach 1");
    zeno->add_option("--k", cfg.k, "logical dimension");
    zeno->add_option("--m", cfg.m, "1-based index of the phased component");
    zeno->add_option("--phi", cfg.phi, "loop phase in radians");
    zeno->add_option("--refinement", cfg.refinement,
                     "largest refinement; powers of two up to it are swept");
    add_io(zeno);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::ParseError& e) {
      int code = app.exit(e, out, err);
      return code == 0 ? 0 : 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    cfg.mode = sub->get_name();

    auto flag_given = [&sub](const char* name) {
      const CLI::Option* option = sub->get_option_no_throw(name);
      return option != nullptr && option->count() > 0;
    };
    Explicit ex;
    ex.k = flag_given("--k");
    ex.m = flag_given("--m");
    ex.phases = flag_given("--phases");
    ex.phi = flag_given("--phi");
    ex.refinement = flag_given("--refinement");
    ex.theta = flag_given("--theta");
    ex.ambient = flag_given("--ambient");
    ex.seed = flag_given("--seed");
    ex.shots = flag_given("--shots");
    ex.max_steps = flag_given("--max-steps");
    ex.output = flag_given("--output");
    ex.per_shot = flag_given("--per-shot");

    if (!config_path.empty()) {
      apply_config_file(config_path, cfg, ex);
    }
    if (!ex.seed) {
      if (const char* env = std::getenv("HOLONOMY_SEED")) {
        cfg.seed = parse_env_seed(env);
      }
    }
    resolve_config(cfg, ex);

    std::string csv;
    std::string* csv_ptr = (cfg.mode == "rus-run" && cfg.per_shot) ? &csv : nullptr;
    ModeOutput mode_out = dispatch(cfg, csv_ptr);

    ordered_json doc;
    doc["mode"] = cfg.mode;
    doc["config"] = config_json(cfg);
    doc["results"] = std::move(mode_out.results);
    ensure_finite(doc);
    const std::string report = render_document(doc);

    const fs::path dir(cfg.output_path);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
      throw ConfigError("cannot create output directory '" + cfg.output_path +
                        "': " + ec.message());
    }
    write_file(dir / "report.json", report);
    if (csv_ptr != nullptr) {
      write_file(dir / "shots.csv", csv);
    }

    out << mode_out.summary << "\n";
    out << "wrote " << (dir / "report.json").string() << "\n";
    if (csv_ptr != nullptr) {
      out << "wrote " << (dir / "shots.csv").string() << "\n";
    }
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace holonomy::cli
