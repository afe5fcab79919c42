#pragma once

// Command-line front end. `run` parses the arguments, runs one command and
// returns the exit code: 0 when every asserted check passes, 1 when a check
// fails, 2 for unusable input.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qmt/gns.hpp"
#include "qmt/io.hpp"
#include "qmt/lp_search.hpp"
#include "qmt/positivity.hpp"
#include "qmt/quantum_model.hpp"
#include "qmt/random.hpp"
#include "qmt/screening.hpp"

namespace qmt::cli {

using io::Json;

struct CheckResult {
  std::string name;
  bool pass = true;
  double residual = 0.0;
  bool asserted = true;
};

class RunReport {
 public:
  explicit RunReport(std::string command) : command_(std::move(command)) {}

  void input(const io::LoadedText& t) { inputs_.push_back({t.path, t.digest()}); }

  bool check(std::string name, bool pass, double residual, bool asserted = true) {
    checks_.push_back({std::move(name), pass, std::isfinite(residual) ? residual : 0.0, asserted});
    return pass;
  }

  Json& result() { return result_; }
  const std::vector<CheckResult>& checks() const { return checks_; }

  const CheckResult* first_failure() const {
    for (const auto& c : checks_)
      if (c.asserted && !c.pass) return &c;
    return nullptr;
  }
  bool passed() const { return first_failure() == nullptr; }

  Json to_json(std::optional<double> seconds) const {
    Json inputs = Json::array();
    for (const auto& [path, digest] : inputs_) inputs.push_back({{"path", path}, {"digest", digest}});
    Json checks = Json::array();
    for (const auto& c : checks_)
      checks.push_back({{"name", c.name}, {"pass", c.pass}, {"residual", c.residual}, {"asserted", c.asserted}});
    Json j = {{"command", command_}, {"inputs", std::move(inputs)}, {"checks", std::move(checks)},
              {"result", result_},   {"passed", passed()}};
    if (seconds) j["timings"] = {{"total_seconds", *seconds}};
    return j;
  }

 private:
  std::string command_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<CheckResult> checks_;
  Json result_ = Json::object();
};

struct Globals {
  std::optional<double> tol;
  std::uint64_t seed = 1;
  std::string out;
  std::string report;
  bool json = false;
  bool timings = false;

  double tol_or(double fallback) const { return tol.value_or(fallback); }
};

// A command may hand back an artifact (functional, model, solution) for --out.
using Artifact = std::optional<Json>;

namespace detail {

inline const char* kCellNames[4] = {"++", "+-", "-+", "--"};

inline Json complex_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Json signature_json(const Signature& s) { return Json::array({s.negative, s.zero, s.positive}); }

inline Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

inline Json probabilities_json(const ExperimentalProbabilities& p) {
  Json j = Json::object();
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t c = 0; c < 4; ++c) j[pair_name(k)][kCellNames[c]] = p.p[k][c];
  return j;
}

inline Json event_json(const Event& e) {
  Json a = Json::array();
  for (auto x : e.atoms()) a.push_back(e.space()->label(x));
  return a;
}

inline Json weak_json(const PositivityReport& r) {
  Json j = {{"holds", r.holds},           {"minimum", r.minimum},   {"boundary", r.boundary},
            {"violations", r.violations}, {"zero_count", r.zero_count}, {"tolerance", r.tolerance}};
  if (r.witness) j["witness"] = event_json(*r.witness);
  if (r.witness_value) j["witness_value"] = *r.witness_value;
  if (r.minimizer) j["minimizer"] = event_json(*r.minimizer);
  return j;
}

inline Json strong_json(const PositivityReport& r) {
  return {{"holds", r.holds},
          {"boundary", r.boundary},
          {"minimum", r.minimum},
          {"signature", signature_json(r.signature)},
          {"spectrum", vector_json(r.spectrum)},
          {"tolerance", r.tolerance}};
}

inline Json bounds_json(const MaxChsh& best, double tolerance) {
  return {{"max_abs_q", best.value},
          {"signed_q", best.signed_q},
          {"pattern", best.pattern.str()},
          {"pattern_name", best.pattern.name()},
          {"chshb", best.value <= 2.0 + tolerance},
          {"tsirelson", best.value <= 2.0 * std::sqrt(2.0) + tolerance}};
}

inline Json q_table_json(const std::array<double, 8>& q) {
  Json j = Json::object();
  for (const auto& s : SignPattern::all()) j[s.str()] = q[s.index()];
  return j;
}

inline Json one_sided_json(const OneSidedMarginals& m) {
  Json j = Json::object();
  for (auto s : kSettings) {
    const auto& v = m.value[static_cast<std::size_t>(s)];
    j[std::string(setting_name(s))] = Json::array({Json::array({v[0][0], v[0][1]}), Json::array({v[1][0], v[1][1]})});
  }
  return j;
}

inline Json audit_json(const CandidateAudit& a) {
  Json corr = Json::object();
  for (std::size_t k = 0; k < 4; ++k) corr[pair_name(k)] = correlator(a.probabilities, k);
  return {{"hermitian_residual", a.hermitian_residual},
          {"normalization_residual", a.normalization_residual},
          {"marginal_off_diagonal", a.marginal_off_diagonal},
          {"weak_positivity", weak_json(a.weak)},
          {"strong_positivity", strong_json(a.strong)},
          {"probabilities", probabilities_json(a.probabilities)},
          {"correlators", std::move(corr)},
          {"q_by_pattern", q_table_json(a.q_by_pattern)},
          {"pattern", a.pattern.str()},
          {"q", a.q},
          {"bounds", bounds_json(a.best, 1e-9)},
          {"one_sided_marginals", one_sided_json(a.one_sided)},
          {"nonsignaling_gap", a.nonsignaling_gap}};
}

inline bool is_epr_space(const SpacePtr& s) { return same_space(s, EprScenario::space()); }

// Loads a functional and records the hermiticity check; empty when it fails.
inline std::optional<DecoherenceFunctional> load_functional(const std::string& path, RunReport& r) {
  const auto text = io::read_file(path);
  r.input(text);
  auto raw = io::raw_functional_from_json(io::parse(text.bytes, path));
  const double herm = (raw.matrix - raw.matrix.adjoint()).cwiseAbs().maxCoeff();
  r.result()["atoms"] = raw.space->size();
  if (!r.check("hermitian", herm <= tol::kHermitian, herm)) return std::nullopt;
  return DecoherenceFunctional(raw.space, std::move(raw.matrix));
}

inline double normalization_residual(const DecoherenceFunctional& df) { return std::abs(df.total() - 1.0); }

inline double marginal_residual(const DecoherenceFunctional& df) {
  double off = 0.0;
  for (std::size_t k = 0; k < 4; ++k) off = std::max(off, marginal(df, k).max_off_diagonal());
  return off;
}

// Audits shared by `epr` and `check` on the 16-atom space.
inline CandidateAudit epr_audit(const DecoherenceFunctional& df, const Globals& g, RunReport& r, bool assert_weak) {
  const auto a = verify_candidate(df.matrix(), SignPattern::from_index(0), g.tol_or(tol::kWeakViolation));
  const double mtol = g.tol_or(tol::kMarginal);
  r.check("normalized", a.normalized(), a.normalization_residual);
  r.check("weak-positivity", a.weak.holds, std::max(0.0, -a.weak.minimum), assert_weak);
  r.check("marginals-diagonal", a.marginal_off_diagonal <= mtol, a.marginal_off_diagonal);
  r.check("nonsignaling", a.nonsignaling_gap <= mtol, a.nonsignaling_gap);
  r.check("strong-positivity", a.strong.holds, std::max(0.0, -a.strong.minimum), false);
  r.check("chshb-bound", a.best.value <= 2.0 + 1e-9, std::max(0.0, a.best.value - 2.0), false);
  r.check("tsirelson-bound", a.best.value <= 2.0 * std::sqrt(2.0) + 1e-9,
          std::max(0.0, a.best.value - 2.0 * std::sqrt(2.0)), false);
  return a;
}

inline SignPattern parse_pattern(const std::string& s) {
  try {
    return SignPattern::parse(s);
  } catch (const InvalidArgument& e) {
    throw io::InputError(e.what());
  }
}

inline void screening_checks(const std::vector<ConditionResidual>& conditions, RunReport& r) {
  for (const auto& c : conditions) r.check(c.name, c.holds, c.residual, c.checked);
}

inline double probability_gap(const ExperimentalProbabilities& a, const ExperimentalProbabilities& b) {
  double g = 0.0;
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t c = 0; c < 4; ++c) g = std::max(g, std::abs(a.p[k][c] - b.p[k][c]));
  return g;
}

inline void write_json(const std::string& path, const Json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io::InputError("cannot write '" + path + "'");
  f << j.dump(2) << '\n';
}

}  // namespace detail

// ---- build ----------------------------------------------------------------

struct BuildOptions {
  std::string kind;
  std::string directions = "default";
  std::string state = "singlet";
  double weight_a = 0.5;
  double weight_b = 0.5;
};

inline Artifact cmd_build(const Globals& g, const BuildOptions& o, RunReport& r) {
  SpinDirections dirs = standard_directions();
  if (o.directions != "default") {
    const auto t = io::read_file(o.directions);
    r.input(t);
    dirs = io::directions_from_json(io::parse(t.bytes, t.path));
  }
  io::StateSpec state;
  if (o.state == "singlet") {
    state.vector = singlet_state();
    state.density = qmt::detail::pure_density(*state.vector);
  } else {
    const auto t = io::read_file(o.state);
    r.input(t);
    state = io::state_from_json(io::parse(t.bytes, t.path));
  }
  if (o.kind != "commuting" && !state.vector)
    throw io::InputError("'" + o.kind + "' needs a pure state vector, not a density matrix");
  const auto df = [&] {
    if (o.kind == "sym") return build_df_sym(*state.vector, dirs);
    if (o.kind == "ordered") return build_df_ordered(*state.vector, dirs);
    if (o.kind == "convex") return build_df_convex(*state.vector, dirs, o.weight_a, o.weight_b);
    return build_df_commuting(state.density, ProjectorFamily::from_directions(dirs));
  }();
  const auto strong = check_strong_positivity(df);
  const double off = detail::marginal_residual(df);
  r.check("normalized", detail::normalization_residual(df) <= tol::kNormalization, detail::normalization_residual(df));
  r.check("strong-positivity", strong.holds, std::max(0.0, -strong.minimum));
  r.check("marginals-diagonal", off <= g.tol_or(tol::kMarginal), off);
  const auto best = max_chsh_q(experimental_probabilities(df));
  r.result()["kind"] = o.kind;
  r.result()["signature"] = detail::signature_json(strong.signature);
  r.result()["bounds"] = detail::bounds_json(best, 1e-9);
  return io::to_json(df);
}

// ---- epr / check / gns ----------------------------------------------------

inline Artifact cmd_epr(const Globals& g, const std::string& input, RunReport& r) {
  const auto df = detail::load_functional(input, r);
  if (!df) return std::nullopt;
  EprScenario::require(df->space(), "epr");
  const auto a = detail::epr_audit(*df, g, r, false);
  Json blocks = Json::object();
  for (std::size_t k = 0; k < 4; ++k) blocks[pair_name(k)] = io::matrix_to_json(marginal(*df, k).block);
  Json corr = Json::object();
  for (std::size_t k = 0; k < 4; ++k) corr[pair_name(k)] = correlator(a.probabilities, k);
  auto& res = r.result();
  res["marginals"] = std::move(blocks);
  res["probabilities"] = detail::probabilities_json(a.probabilities);
  res["correlators"] = std::move(corr);
  res["q_by_pattern"] = detail::q_table_json(a.q_by_pattern);
  res["bounds"] = detail::bounds_json(a.best, 1e-9);
  res["nonsignaling"] = {{"gap", a.nonsignaling_gap},
                         {"holds", a.nonsignaling()},
                         {"one_sided_marginals", detail::one_sided_json(a.one_sided)}};
  return std::nullopt;
}

inline Artifact cmd_check(const Globals& g, const std::string& input, RunReport& r) {
  const auto df = detail::load_functional(input, r);
  if (!df) return std::nullopt;
  if (detail::is_epr_space(df->space())) {
    const auto a = detail::epr_audit(*df, g, r, true);
    r.result()["audit"] = detail::audit_json(a);
    return std::nullopt;
  }
  const auto weak = check_weak_positivity(*df, g.tol_or(tol::kWeakViolation));
  const auto strong = check_strong_positivity(*df);
  r.check("normalized", detail::normalization_residual(*df) <= tol::kNormalization,
          detail::normalization_residual(*df));
  r.check("weak-positivity", weak.holds, std::max(0.0, -weak.minimum));
  r.check("strong-positivity", strong.holds, std::max(0.0, -strong.minimum), false);
  r.result()["weak_positivity"] = detail::weak_json(weak);
  r.result()["strong_positivity"] = detail::strong_json(strong);
  return std::nullopt;
}

inline Artifact cmd_gns(const Globals& g, const std::string& input, RunReport& r) {
  const auto df = detail::load_functional(input, r);
  if (!df) return std::nullopt;
  const auto strong = check_strong_positivity(*df);
  if (!r.check("strong-positivity", strong.holds, std::max(0.0, -strong.minimum))) return std::nullopt;
  const auto space = gns_construct(*df, g.tol_or(0.0));
  r.check("reconstruction", space.reconstruction_error() <= 1e-9, space.reconstruction_error());
  auto& res = r.result();
  res["rank"] = space.rank();
  res["zero_tolerance"] = space.zero_tolerance();
  res["spectrum"] = detail::vector_json(space.spectrum());
  if (!detail::is_epr_space(df->space())) return std::nullopt;
  const double off = detail::marginal_residual(*df);
  if (!r.check("marginals-diagonal", off <= tol::kMarginal, off)) return std::nullopt;
  std::array<GnsVector, 4> v;
  Json norms = Json::object();
  for (auto s : kSettings) {
    v[static_cast<std::size_t>(s)] = setting_vector(space, s);
    norms[std::string(setting_name(s))] = norm(v[static_cast<std::size_t>(s)]);
  }
  Json table = Json::object();
  for (auto s : kSettings)
    for (auto t : kSettings)
      table[std::string(setting_name(s))][std::string(setting_name(t))] =
          detail::complex_json(inner(v[static_cast<std::size_t>(s)], v[static_cast<std::size_t>(t)]));
  const auto cert = tsirelson_certificate(space);
  r.check("correlator-agreement", cert.agreement_residual <= 1e-9, cert.agreement_residual);
  r.check("tsirelson-bound", cert.holds, std::max(0.0, -cert.bound_margin));
  res["setting_norms"] = std::move(norms);
  res["inner_products"] = std::move(table);
  res["certificate"] = {{"q_by_pattern", detail::q_table_json(cert.q_by_pattern)},
                        {"parallelogram", cert.parallelogram},
                        {"max_abs_q", cert.max_abs_q},
                        {"best", cert.best.str()},
                        {"bound_margin", cert.bound_margin},
                        {"holds", cert.holds}};
  return std::nullopt;
}

// ---- screening ------------------------------------------------------------

struct ScreeningCliOptions {
  std::string input;
  bool minimalist = false;
  double prob_a = 0.5;  // weight of setting a on the A side
  double prob_b = 0.5;
};

inline StructuredModel load_structured(const std::string& path, RunReport& r) {
  const auto t = io::read_file(path);
  r.input(t);
  return io::structured_from_json(io::parse(t.bytes, t.path));
}

inline void describe_model(const StructuredModel& m, RunReport& r) {
  auto& res = r.result();
  res["model"] = m.is_classical() ? "classical" : "quantal";
  res["past"] = m.past_labels();
  res["setting_weights"] = setting_weights(m).w;
}

inline Artifact cmd_screening_check(const Globals& g, const ScreeningCliOptions& o, RunReport& r) {
  const auto m = load_structured(o.input, r);
  describe_model(m, r);
  const ScreeningOptions so{.tolerance = g.tol_or(tol::kScreening), .minimalist = o.minimalist};
  if (m.is_classical()) {
    detail::screening_checks(check_classical_screening(m, so).conditions(), r);
  } else {
    const auto q = check_quantal_screening(m, so);
    detail::screening_checks(q.conditions(), r);
    r.result()["vanishing_past_blocks"] = q.vanishing_past_blocks;
  }
  r.result()["probabilities"] = detail::probabilities_json(conditional_experimental_probabilities(m));
  return std::nullopt;
}

inline Artifact cmd_screening_joint(const Globals& g, const ScreeningCliOptions& o, RunReport& r) {
  const auto m = load_structured(o.input, r);
  if (!m.is_classical()) throw io::InputError("screening joint needs a classical model (\"weights\")");
  describe_model(m, r);
  const ScreeningOptions so{.tolerance = g.tol_or(tol::kScreening), .minimalist = o.minimalist};
  const auto report = check_classical_screening(m, so);
  detail::screening_checks(report.conditions(), r);
  if (!report.holds) return std::nullopt;
  const auto joint = joint_from_screening(m, so);
  const auto p = classical_joint_marginals(joint);
  const double gap = detail::probability_gap(p, conditional_experimental_probabilities(m));
  r.check("joint-marginals", gap <= 1e-12, gap);
  r.result()["probabilities"] = detail::probabilities_json(p);
  r.result()["bounds"] = detail::bounds_json(max_chsh_q(p), 1e-9);
  return io::to_json(joint);
}

inline Artifact cmd_screening_augment(const Globals& g, const ScreeningCliOptions& o, RunReport& r) {
  const auto t = io::read_file(o.input);
  r.input(t);
  const auto j = io::parse(t.bytes, t.path);
  const auto w = SettingWeights::product(o.prob_a, o.prob_b);
  const ScreeningOptions so{.tolerance = g.tol_or(tol::kScreening)};
  if (io::is_functional(j)) {
    const auto joint = io::functional_from_json(j);
    EprScenario::require(joint.space(), "screening augment");
    const auto m = augment_quantal(joint, w);
    describe_model(m, r);
    detail::screening_checks(check_quantal_screening(m, so).conditions(), r);
    const double gap =
        detail::probability_gap(conditional_experimental_probabilities(m), experimental_probabilities(joint));
    r.check("probabilities-preserved", gap <= 1e-10, gap);
    const auto strong = check_strong_positivity(m.functional());
    r.check("strong-positivity", strong.holds, std::max(0.0, -strong.minimum));
    return io::to_json(m);
  }
  const auto joint = io::measure_from_json(j);
  EprScenario::require(joint.space(), "screening augment");
  const auto m = augment_classical(joint, w);
  describe_model(m, r);
  detail::screening_checks(check_classical_screening(m, so).conditions(), r);
  const double gap = detail::probability_gap(conditional_experimental_probabilities(m), classical_joint_marginals(joint));
  r.check("probabilities-preserved", gap <= 1e-12, gap);
  return io::to_json(m);
}

// ---- lp -------------------------------------------------------------------

struct LpCliOptions {
  std::string pattern = "ab-";
  std::string mode = "real";
  std::string pricing = "hybrid";
  bool audit = false;
  bool eigen_cuts = false;
  std::size_t rounds = 5000;
};

inline MaxQResult run_max_q(const Globals& g, const LpCliOptions& o, const SignPattern& pattern) {
  MaxQOptions mo;
  mo.mode = o.mode == "complex" ? LpMode::complex : LpMode::real;
  mo.pricing = o.pricing == "bland" ? PricingRule::bland : o.pricing == "dantzig" ? PricingRule::dantzig
                                                                                    : PricingRule::hybrid;
  mo.eigenvector_cuts = o.eigen_cuts;
  mo.max_rounds = o.rounds;
  mo.tolerance = g.tol_or(mo.tolerance);
  return solve_max_q(pattern, mo);
}

inline Json lp_summary(const MaxQResult& m) {
  return {{"pattern", m.pattern.str()},
          {"pattern_name", m.pattern.name()},
          {"mode", m.mode == LpMode::complex ? "complex" : "real"},
          {"status", status_name(m.solution.status)},
          {"objective", m.solution.objective},
          {"converged", m.solution.converged},
          {"rounds", m.solution.rounds.size()},
          {"pivots", m.solution.iterations},
          {"cuts", m.solution.generated.size()},
          {"equality_residual", m.solution.equality_residual},
          {"inequality_violation", m.solution.inequality_violation},
          {"objective_monotone", m.objective_monotone},
          {"candidates_above_tsirelson", m.candidates_above_tsirelson},
          {"contrapositive_holds", m.contrapositive_holds},
          {"verified", m.verified}};
}

inline void lp_checks(const MaxQResult& m, RunReport& r, const std::string& prefix = "") {
  r.check(prefix + "lp-optimal", m.solution.status == LpStatus::optimal, 0.0);
  r.check(prefix + "converged", m.solution.converged, 0.0);
  r.check(prefix + "verified", m.verified,
          std::max(m.solution.equality_residual, m.solution.inequality_violation));
  r.check(prefix + "contrapositive", m.contrapositive_holds, 0.0);
}

inline Artifact cmd_lp_max_q(const Globals& g, const LpCliOptions& o, RunReport& r) {
  const auto m = run_max_q(g, o, detail::parse_pattern(o.pattern));
  lp_checks(m, r);
  r.result() = lp_summary(m);
  if (m.solution.status != LpStatus::optimal) return std::nullopt;
  Json solution = {{"labels", EprScenario::space()->labels()},
                   {"matrix", io::matrix_to_json(m.candidate)},
                   {"pattern", m.pattern.str()},
                   {"objective", m.solution.objective}};
  if (o.audit) {
    solution["audit"] = detail::audit_json(m.audit);
    r.result()["audit"] = solution["audit"];
  }
  return solution;
}

// ---- reproduce ------------------------------------------------------------

struct ReproduceOptions {
  std::string target;
  std::string pattern = "ab-";  // lp-max; "all" runs every pattern
  std::size_t count = 100;      // screening-roundtrip
};

inline void reproduce_sym_spectrum(RunReport& r) {
  const auto d = df_sym_standard();
  const double closed = (d.matrix() - df_sym_closed_form_matrix().matrix()).cwiseAbs().maxCoeff();
  const double zero = 1e-8 * d.matrix().cwiseAbs().maxCoeff();
  const auto sig = eigensignature(d, zero);
  const auto space = gns_construct(d, zero);
  r.check("closed-form", closed < 1e-12, closed);
  r.check("signature", sig == Signature{0, 12, 4}, 0.0);
  r.check("gns-rank", space.rank() == 4, 0.0);
  r.result() = {{"signature", detail::signature_json(sig)},
                {"gns_rank", space.rank()},
                {"spectrum", detail::vector_json(atom_spectrum(d.matrix()))}};
}

inline void reproduce_tsirelson(RunReport& r) {
  const auto d = df_sym_standard();
  const auto best = max_chsh_q(experimental_probabilities(d));
  const double gap = std::abs(best.value - 2.0 * std::sqrt(2.0));
  r.check("max-q", gap <= 1e-10, gap);
  r.check("single-minus-on-a'b'", best.pattern == SignPattern::parse("+++-"), 0.0);
  const auto cert = tsirelson_certificate(gns_construct(d));
  r.check("inner-products", cert.agreement_residual <= 1e-9, cert.agreement_residual);
  r.result() = {{"bounds", detail::bounds_json(best, 1e-9)}, {"q_by_pattern", detail::q_table_json(cert.q_by_pattern)}};
}

inline void reproduce_maximal_example(RunReport& r) {
  const auto a = verify_candidate(section5_example().matrix(), SignPattern::parse("+-++"));
  r.check("hermitian", a.hermitian(), a.hermitian_residual);
  r.check("normalized", a.normalized(), a.normalization_residual);
  r.check("marginals-diagonal", a.marginals_diagonal(), a.marginal_off_diagonal);
  r.check("weak-positivity", a.weak.holds, std::max(0.0, -a.weak.minimum));
  r.check("strong-positivity-fails", !a.strong.holds && a.strong.signature == Signature{4, 8, 4},
          std::max(0.0, -a.strong.minimum));
  r.check("q-equals-4", std::abs(a.q - 4.0) <= 1e-12, std::abs(a.q - 4.0));
  double half = 0.0;
  for (const auto& s : a.one_sided.value)
    for (const auto& partner : s)
      for (double v : partner) half = std::max(half, std::abs(v - 0.5));
  r.check("one-sided-half", half <= 1e-12, half);
  r.result()["audit"] = detail::audit_json(a);
}

inline void reproduce_lp_max(const Globals& g, const std::string& pattern, RunReport& r) {
  std::vector<SignPattern> patterns;
  if (pattern == "all") {
    const auto all = SignPattern::all();
    patterns.assign(all.begin(), all.end());
  } else {
    patterns.push_back(detail::parse_pattern(pattern));
  }
  Json runs = Json::array();
  for (const auto& p : patterns) {
    const auto m = run_max_q(g, LpCliOptions{}, p);
    const std::string prefix = patterns.size() > 1 ? p.str() + ":" : "";
    lp_checks(m, r, prefix);
    const double gap = std::abs(m.solution.objective - 4.0);
    r.check(prefix + "optimum-4", gap <= 1e-6, gap);
    runs.push_back(lp_summary(m));
  }
  r.result()["runs"] = std::move(runs);
}

inline void reproduce_screening(const Globals& g, std::size_t count, RunReport& r) {
  Rng rng(g.seed);
  double joint_gap = 0.0, augment_gap = 0.0, back_gap = 0.0;
  std::size_t failures = 0, augment_failures = 0;
  for (std::size_t t = 0; t < count; ++t) {
    const auto m = random_screening_model(rng, 1 + t % 4);
    if (!check_classical_screening(m).holds) {
      ++failures;
      continue;
    }
    const auto joint = joint_from_screening(m);
    const auto p = classical_joint_marginals(joint);
    joint_gap = std::max(joint_gap, detail::probability_gap(p, conditional_experimental_probabilities(m)));
    const auto aug = augment_classical(joint, SettingWeights::product(uniform(rng, 0.1, 0.9), uniform(rng, 0.1, 0.9)));
    if (!check_classical_screening(aug).holds) ++augment_failures;
    augment_gap = std::max(augment_gap, detail::probability_gap(conditional_experimental_probabilities(aug), p));
    const auto back = joint_from_screening(aug);
    for (std::size_t x = 0; x < 16; ++x) back_gap = std::max(back_gap, std::abs(back.weight(x) - joint.weight(x)));
  }
  r.check("models-screen-off", failures == 0, static_cast<double>(failures));
  r.check("joint-marginals", joint_gap <= 1e-12, joint_gap);
  r.check("augment-screens-off", augment_failures == 0, static_cast<double>(augment_failures));
  r.check("augment-probabilities", augment_gap <= 1e-12, augment_gap);
  r.check("joint-recovered", back_gap <= 1e-12, back_gap);
  const auto d = df_sym_standard();
  const auto q = check_quantal_screening(augment_quantal(d, SettingWeights::uniform()));
  double worst = 0.0;
  for (const auto& c : q.conditions()) worst = std::max(worst, c.residual);
  r.check("quantal-augment", q.holds && worst < 1e-10, worst);
  r.result() = {{"models", count}, {"seed", g.seed}};
}

inline Artifact cmd_reproduce(const Globals& g, const ReproduceOptions& o, RunReport& r) {
  if (o.target == "sym-spectrum") reproduce_sym_spectrum(r);
  else if (o.target == "tsirelson-saturation") reproduce_tsirelson(r);
  else if (o.target == "section5") reproduce_maximal_example(r);
  else if (o.target == "lp-max") reproduce_lp_max(g, o.pattern, r);
  else reproduce_screening(g, o.count, r);
  r.result()["target"] = o.target;
  return std::nullopt;
}

// ---- driver ---------------------------------------------------------------

namespace detail {

inline std::string format_residual(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

inline void print_text(const RunReport& r, std::ostream& out) {
  for (const auto& c : r.checks()) {
    const char* tag = c.pass ? "PASS" : (c.asserted ? "FAIL" : "info");
    out << tag << "  " << c.name << "  residual=" << format_residual(c.residual) << '\n';
  }
  out << (r.passed() ? "overall: PASS" : "overall: FAIL") << '\n';
}

// Exceptions that mean the input itself was unusable.
inline bool is_input_error(const std::exception& e) {
  return dynamic_cast<const io::InputError*>(&e) || dynamic_cast<const InvalidArgument*>(&e) ||
         dynamic_cast<const SpaceMismatch*>(&e) || dynamic_cast<const SpaceTooLarge*>(&e) ||
         dynamic_cast<const Json::exception*>(&e);
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantal measure toolkit: decoherence functionals, CHSH audits, screening off, LP search.", "qmt"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  app.add_option("--tol", g.tol, "Override the tolerance of positivity, marginal and screening checks");
  app.add_option("--seed", g.seed, "Seed for randomised pipelines")->capture_default_str();
  app.add_option("--out", g.out, "Write the artifact (or the report when there is none) to this file");
  app.add_option("--report", g.report, "Write the run report to this file");
  app.add_flag("--json", g.json, "Print the run report as JSON");
  app.add_flag("--timings", g.timings, "Include wall-clock timings in the report");

  std::function<Artifact(RunReport&)> action;

  BuildOptions build;
  auto* b = app.add_subcommand("build", "Build a joint decoherence functional from a spin model");
  b->add_option("kind", build.kind, "sym | ordered | commuting | convex")
      ->required()
      ->check(CLI::IsMember({"sym", "ordered", "commuting", "convex"}));
  b->add_option("--directions", build.directions, "'default' or a directions JSON file")->capture_default_str();
  b->add_option("--state", build.state, "'singlet' or a state JSON file")->capture_default_str();
  b->add_option("--weight-a", build.weight_a, "convex: weight of the a-first ordering")->capture_default_str();
  b->add_option("--weight-b", build.weight_b, "convex: weight of the b-first ordering")->capture_default_str();
  b->callback([&] { action = [&](RunReport& r) { return cmd_build(g, build, r); }; });

  std::string input;
  auto* e = app.add_subcommand("epr", "Marginals, probabilities, correlators and CHSH values of a functional");
  e->add_option("--input", input, "Functional JSON")->required();
  e->callback([&] { action = [&](RunReport& r) { return cmd_epr(g, input, r); }; });

  auto* gn = app.add_subcommand("gns", "GNS space, setting vectors and the Tsirelson certificate");
  gn->add_option("--input", input, "Functional JSON")->required();
  gn->callback([&] { action = [&](RunReport& r) { return cmd_gns(g, input, r); }; });

  auto* ch = app.add_subcommand("check", "Axiom, positivity, marginal, bound and non-signalling audits");
  ch->add_option("file", input, "Functional JSON");
  ch->add_option("--input", input, "Functional JSON");
  ch->callback([&] {
    if (input.empty()) throw CLI::RequiredError("input");
    action = [&](RunReport& r) { return cmd_check(g, input, r); };
  });

  ScreeningCliOptions sc;
  auto* s = app.add_subcommand("screening", "Screening-off checks and constructions");
  s->require_subcommand(1);
  for (const char* name : {"check", "joint", "augment"}) {
    auto* sub = s->add_subcommand(name);
    sub->add_option("--input", sc.input, "Structured model JSON (joint measure or functional for augment)")
        ->required();
    sub->add_flag("--minimalist", sc.minimalist, "Only the per-pair outcome conditions");
    sub->add_option("--prob-a", sc.prob_a, "augment: probability of setting a")->capture_default_str();
    sub->add_option("--prob-b", sc.prob_b, "augment: probability of setting b")->capture_default_str();
    const std::string which = name;
    sub->callback([&, which] {
      action = [&, which](RunReport& r) {
        if (which == "check") return cmd_screening_check(g, sc, r);
        if (which == "joint") return cmd_screening_joint(g, sc, r);
        return cmd_screening_augment(g, sc, r);
      };
    });
  }

  LpCliOptions lp;
  auto* l = app.add_subcommand("lp", "Linear-programming searches");
  l->require_subcommand(1);
  auto* mq = l->add_subcommand("max-q", "Maximise Q over weakly positive functionals with diagonal marginals");
  mq->add_option("--pattern", lp.pattern, "Sign pattern, e.g. ab- or +-++")->capture_default_str();
  mq->add_option("--mode", lp.mode, "real | complex")
      ->check(CLI::IsMember({"real", "complex"}))
      ->capture_default_str();
  mq->add_option("--pricing", lp.pricing, "hybrid | bland | dantzig")
      ->check(CLI::IsMember({"hybrid", "bland", "dantzig"}))
      ->capture_default_str();
  mq->add_option("--rounds", lp.rounds, "Cap on cutting-plane rounds")->capture_default_str();
  mq->add_flag("--audit", lp.audit, "Embed the candidate audit in the solution");
  mq->add_flag("--eigen-cuts", lp.eigen_cuts, "Also cut off negative eigenvectors (slow)");
  mq->callback([&] { action = [&](RunReport& r) { return cmd_lp_max_q(g, lp, r); }; });

  ReproduceOptions rep;
  auto* rp = app.add_subcommand("reproduce", "Run a reference pipeline end to end");
  rp->add_option("target", rep.target)
      ->required()
      ->check(CLI::IsMember({"sym-spectrum", "tsirelson-saturation", "section5", "lp-max", "screening-roundtrip"}));
  rp->add_option("--pattern", rep.pattern, "lp-max: sign pattern or 'all'")->capture_default_str();
  rp->add_option("--count", rep.count, "screening-roundtrip: number of models")->capture_default_str();
  rp->callback([&] { action = [&](RunReport& r) { return cmd_reproduce(g, rep, r); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? 0 : 2;
  }

  std::string command = "qmt";
  for (const auto& a : args) command += " " + a;
  RunReport report(command);
  const auto start = std::chrono::steady_clock::now();
  Artifact artifact;
  try {
    artifact = action(report);
  } catch (const std::exception& ex) {
    if (detail::is_input_error(ex)) {
      err << "error: " << ex.what() << '\n';
      return 2;
    }
    report.check("error", false, 0.0);
    report.result()["error"] = ex.what();
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const Json j = report.to_json(g.timings ? std::optional<double>(seconds) : std::nullopt);
  try {
    if (!g.out.empty()) detail::write_json(g.out, artifact ? *artifact : j);
    if (!g.report.empty()) detail::write_json(g.report, j);
  } catch (const io::InputError& ex) {
    err << "error: " << ex.what() << '\n';
    return 2;
  }
  if (g.json)
    out << j.dump(2) << '\n';
  else
    detail::print_text(report, out);
  if (const auto* f = report.first_failure()) {
    err << "FAIL: " << f->name;
    if (report.result().contains("error")) err << ": " << report.result()["error"].get<std::string>();
    err << '\n';
    return 1;
  }
  return 0;
}

}  // namespace qmt::cli
