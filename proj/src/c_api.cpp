#include "compopt/c_api.h"

#include <cstring>
#include <string>

#include "compopt/analysis.hpp"
#include "compopt/csv.hpp"
#include "compopt/errors.hpp"
#include "compopt/problem.hpp"
#include "compopt/schedule.hpp"
#include "compopt/solver.hpp"
#include "compopt/verify.hpp"

using compopt::format_double;
using compopt::format_u64;

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const compopt::DivergenceError& e) {
    set_error(e.what());
    return COMPOPT_ERR_DIVERGED;
  } catch (const compopt::ArgumentError& e) {
    set_error(e.what());
    return COMPOPT_ERR_ARGUMENT;
  } catch (const std::exception& e) {
    set_error(e.what());
    return COMPOPT_ERR_UNKNOWN;
  } catch (...) {
    set_error("unknown error");
    return COMPOPT_ERR_UNKNOWN;
  }
}

}  // namespace

struct compopt_problem {
  std::unique_ptr<compopt::CompositionProblem> impl;
  std::string spec;
};

struct compopt_schedule {
  compopt::Schedule impl;
  mutable std::string notes_cache;
};

struct compopt_result {
  compopt::RunResult impl;
  std::string csv;
  std::string iterations_csv;
};

struct compopt_report {
  std::vector<compopt::LemmaGridRow> rows;
  std::string csv;
};

namespace {

std::string schedule_echo(const compopt_schedule& s) {
  const compopt::Schedule& sc = s.impl;
  auto field = [](const char* name, const std::string& value, compopt::Provenance prov) {
    return std::string(name) + "=" + value + " (" + compopt::to_string(prov) + ")";
  };
  std::string out = "# mode=";
  out += compopt::to_string(sc.mode);
  out += " epsilon=" + format_double(sc.epsilon) + "\n# ";
  out += field("A", format_u64(static_cast<std::uint64_t>(sc.A)), sc.prov_A) + " ";
  out += field("D", format_u64(static_cast<std::uint64_t>(sc.D)), sc.prov_D) + " ";
  out += field("K", format_u64(static_cast<std::uint64_t>(sc.K)), sc.prov_K) + " ";
  out += field("S", format_u64(static_cast<std::uint64_t>(sc.S)), sc.prov_S) + " ";
  out += field("b", format_u64(static_cast<std::uint64_t>(sc.b)), sc.prov_b) + "\n# ";
  out += field("eta", format_double(sc.eta), sc.prov_eta) + " ";
  out += field("h", format_double(sc.h), sc.prov_h) + "\n";
  for (const auto& note : sc.notes) out += "# note: " + note + "\n";
  for (const auto& warning : sc.warnings) out += "# warning: " + warning + "\n";
  return out;
}

std::string trace_csv(const compopt_problem& p, const compopt_schedule& s, int algorithm,
                      std::uint64_t seed, const compopt::RunResult& result) {
  std::string out = "# problem=" + p.spec + "\n";
  out += "# algorithm=";
  out += compopt::to_string(static_cast<compopt::Algorithm>(algorithm));
  out += " seed=" + format_u64(seed) + "\n";
  out += schedule_echo(s);
  out += "s,f_value,grad_norm_sq,dist_sq_opt,paper_queries,paper_queries_corollary,raw_queries\n";
  for (const auto& row : result.trace.epochs) {
    out += format_u64(static_cast<std::uint64_t>(row.s)) + ",";
    out += format_double(row.f_value) + ",";
    out += format_double(row.grad_norm_sq) + ",";
    out += format_double(row.dist_sq_opt) + ",";
    out += format_u64(row.paper_queries) + ",";
    out += format_u64(row.paper_queries_corollary) + ",";
    out += format_u64(row.raw_queries) + "\n";
  }
  return out;
}

std::string iterations_csv(const compopt::RunResult& result) {
  if (result.trace.iterations.empty()) return "";
  std::string out = "s,k,dist_sq_anchor,grad_est_norm_sq\n";
  for (const auto& row : result.trace.iterations) {
    out += format_u64(static_cast<std::uint64_t>(row.s)) + ",";
    out += format_u64(static_cast<std::uint64_t>(row.k)) + ",";
    out += format_double(row.dist_sq_anchor) + ",";
    out += format_double(row.grad_est_norm_sq) + "\n";
  }
  return out;
}

std::string report_csv(const std::vector<compopt::LemmaGridRow>& rows) {
  std::string out = "lemma,n,A,D,b,x_case,method,samples,empirical,exact,bound,sigma,verdict\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    out += row.lemma + ",";
    out += format_u64(static_cast<std::uint64_t>(row.n)) + ",";
    out += format_u64(static_cast<std::uint64_t>(row.A)) + ",";
    out += format_u64(static_cast<std::uint64_t>(row.D)) + ",";
    out += format_u64(static_cast<std::uint64_t>(row.b)) + ",";
    out += row.x_case + ",";
    out += (r.method == compopt::ReportMethod::enumerated ? "enumerated" : "monte_carlo");
    out += ",";
    out += format_u64(static_cast<std::uint64_t>(r.samples)) + ",";
    out += format_double(r.empirical) + ",";
    out += (r.exact ? format_double(*r.exact) : std::string()) + ",";
    out += format_double(r.bound) + ",";
    out += format_double(r.sigma) + ",";
    out += r.informational ? "info" : (r.verdict == compopt::Verdict::pass ? "pass" : "fail");
    out += "\n";
  }
  return out;
}

compopt::ProblemConstants from_c(const compopt_constants& c) {
  compopt::ProblemConstants k;
  k.mu = c.mu;
  k.B_G = c.B_G;
  k.L_G = c.L_G;
  k.B_F = c.B_F;
  k.L_F = c.L_F;
  k.L_f = c.L_f;
  k.H1 = c.H1;
  k.H2 = c.H2;
  k.estimated_mask = c.estimated_mask;
  return k;
}

struct FieldRef {
  double value;
  compopt::Provenance prov;
};

FieldRef schedule_field(const compopt::Schedule& s, const std::string& field) {
  if (field == "A") return {static_cast<double>(s.A), s.prov_A};
  if (field == "D") return {static_cast<double>(s.D), s.prov_D};
  if (field == "K") return {static_cast<double>(s.K), s.prov_K};
  if (field == "S") return {static_cast<double>(s.S), s.prov_S};
  if (field == "b") return {static_cast<double>(s.b), s.prov_b};
  if (field == "eta") return {s.eta, s.prov_eta};
  if (field == "h") return {s.h, s.prov_h};
  if (field == "epsilon") return {s.epsilon, compopt::Provenance::corollary};
  throw compopt::ArgumentError("schedule: unknown field '" + field + "'");
}

int copy_vector(const Eigen::VectorXd& v, double* x, size_t cap, const char* what) {
  if (!x) throw compopt::ArgumentError(std::string(what) + ": null buffer");
  if (cap < static_cast<size_t>(v.size()))
    throw compopt::ArgumentError(std::string(what) + ": buffer too small");
  std::memcpy(x, v.data(), sizeof(double) * static_cast<size_t>(v.size()));
  return COMPOPT_OK;
}

}  // namespace

extern "C" {

const char* compopt_version(void) { return "compopt 1.0.0"; }

const char* compopt_last_error(void) { return g_last_error.c_str(); }

int compopt_problem_create(const char* spec_text, compopt_problem** out) {
  return guarded([&] {
    if (!spec_text || !out) throw compopt::ArgumentError("problem_create: null argument");
    auto handle = std::make_unique<compopt_problem>();
    handle->impl = compopt::parse_problem(spec_text);
    handle->spec = handle->impl->serialize();
    *out = handle.release();
    return COMPOPT_OK;
  });
}

void compopt_problem_destroy(compopt_problem* p) { delete p; }

const char* compopt_problem_spec(const compopt_problem* p) {
  return p ? p->spec.c_str() : "";
}

int compopt_problem_counts(const compopt_problem* p, int64_t* n, int64_t* dim_x, int64_t* dim_w) {
  return guarded([&] {
    if (!p) throw compopt::ArgumentError("problem_counts: null problem");
    if (n) *n = p->impl->component_count();
    if (dim_x) *dim_x = p->impl->dim_x();
    if (dim_w) *dim_w = p->impl->dim_w();
    return COMPOPT_OK;
  });
}

int compopt_problem_constants(const compopt_problem* p, compopt_constants* out) {
  return guarded([&] {
    if (!p || !out) throw compopt::ArgumentError("problem_constants: null argument");
    const compopt::ProblemConstants& k = p->impl->constants();
    *out = compopt_constants{k.mu, k.B_G, k.L_G, k.B_F, k.L_F, k.L_f, k.H1, k.H2,
                             k.estimated_mask};
    return COMPOPT_OK;
  });
}

int compopt_problem_set_constants(compopt_problem* p, const compopt_constants* c) {
  return guarded([&] {
    if (!p || !c) throw compopt::ArgumentError("problem_set_constants: null argument");
    p->impl->set_constants(from_c(*c));
    return COMPOPT_OK;
  });
}

int compopt_problem_optimum(const compopt_problem* p, double* x, size_t cap, double* f_star) {
  return guarded([&] {
    if (!p) throw compopt::ArgumentError("problem_optimum: null problem");
    if (!p->impl->optimum()) throw compopt::ArgumentError("problem_optimum: optimum unknown");
    const Eigen::VectorXd& opt = *p->impl->optimum();
    if (x) {
      if (cap < static_cast<size_t>(opt.size()))
        throw compopt::ArgumentError("problem_optimum: buffer too small");
      std::memcpy(x, opt.data(), sizeof(double) * static_cast<size_t>(opt.size()));
    }
    if (f_star) *f_star = *p->impl->optimum_value();
    return COMPOPT_OK;
  });
}

int compopt_problem_value(const compopt_problem* p, const double* x, double* value) {
  return guarded([&] {
    if (!p || !x || !value) throw compopt::ArgumentError("problem_value: null argument");
    const Eigen::Map<const Eigen::VectorXd> xv(x, p->impl->dim_x());
    *value = compopt::full_value(*p->impl, xv);
    return COMPOPT_OK;
  });
}

int compopt_problem_gradient(const compopt_problem* p, const double* x, double* grad) {
  return guarded([&] {
    if (!p || !x || !grad) throw compopt::ArgumentError("problem_gradient: null argument");
    const Eigen::Map<const Eigen::VectorXd> xv(x, p->impl->dim_x());
    const Eigen::VectorXd g = compopt::full_gradient(*p->impl, xv);
    std::memcpy(grad, g.data(), sizeof(double) * static_cast<size_t>(g.size()));
    return COMPOPT_OK;
  });
}

int compopt_schedule_convex(const compopt_problem* p, double epsilon, int64_t b, double x0_gap,
                            compopt_schedule** out) {
  return guarded([&] {
    if (!p || !out) throw compopt::ArgumentError("schedule_convex: null argument");
    auto handle = std::make_unique<compopt_schedule>();
    handle->impl = compopt::convex_schedule(p->impl->constants(), p->impl->component_count(),
                                            epsilon, b, x0_gap);
    *out = handle.release();
    return COMPOPT_OK;
  });
}

int compopt_schedule_nonconvex(const compopt_problem* p, double epsilon, int64_t b, double c_A,
                               double c_D, double c_T, compopt_schedule** out) {
  return guarded([&] {
    if (!p || !out) throw compopt::ArgumentError("schedule_nonconvex: null argument");
    auto handle = std::make_unique<compopt_schedule>();
    handle->impl = compopt::nonconvex_schedule(p->impl->constants(), p->impl->component_count(),
                                               epsilon, b, c_A, c_D, c_T);
    *out = handle.release();
    return COMPOPT_OK;
  });
}

void compopt_schedule_destroy(compopt_schedule* s) { delete s; }

int compopt_schedule_mode(const compopt_schedule* s) {
  if (!s) return -1;
  return s->impl.mode == compopt::ScheduleMode::convex ? 0 : 1;
}

int compopt_schedule_get(const compopt_schedule* s, const char* field, double* value,
                         int* overridden) {
  return guarded([&] {
    if (!s || !field || !value) throw compopt::ArgumentError("schedule_get: null argument");
    const FieldRef ref = schedule_field(s->impl, field);
    *value = ref.value;
    if (overridden) *overridden = ref.prov == compopt::Provenance::user_override ? 1 : 0;
    return COMPOPT_OK;
  });
}

int compopt_schedule_set(compopt_schedule* s, const char* field, double value) {
  return guarded([&] {
    if (!s || !field) throw compopt::ArgumentError("schedule_set: null argument");
    const std::string f = field;
    compopt::Schedule& sc = s->impl;
    auto as_count = [&](const char* name) {
      if (!(value >= 1.0 && value < 9.0e18))
        throw compopt::ArgumentError(std::string("schedule_set: ") + name + " must be >= 1");
      return static_cast<std::int64_t>(value);
    };
    if (f == "A") {
      sc.A = as_count("A");
      sc.prov_A = compopt::Provenance::user_override;
    } else if (f == "D") {
      sc.D = as_count("D");
      sc.prov_D = compopt::Provenance::user_override;
    } else if (f == "K") {
      sc.K = as_count("K");
      sc.prov_K = compopt::Provenance::user_override;
    } else if (f == "S") {
      sc.S = as_count("S");
      sc.prov_S = compopt::Provenance::user_override;
    } else if (f == "b") {
      sc.b = as_count("b");
      sc.prov_b = compopt::Provenance::user_override;
    } else if (f == "eta") {
      sc.eta = value;
      sc.prov_eta = compopt::Provenance::user_override;
    } else if (f == "h") {
      sc.h = value;
      sc.prov_h = compopt::Provenance::user_override;
    } else {
      throw compopt::ArgumentError("schedule_set: unknown field '" + f + "'");
    }
    sc.validate();
    return COMPOPT_OK;
  });
}

const char* compopt_schedule_notes(const compopt_schedule* s) {
  if (!s) return "";
  s->notes_cache.clear();
  for (const auto& note : s->impl.notes) s->notes_cache += note + "\n";
  for (const auto& warning : s->impl.warnings) s->notes_cache += "warning: " + warning + "\n";
  return s->notes_cache.c_str();
}

int compopt_run(const compopt_problem* p, const compopt_schedule* s, int algorithm,
                uint64_t seed, const double* x0, int verbose, compopt_result** out) {
  return guarded([&] {
    if (!p || !s || !out) throw compopt::ArgumentError("run: null argument");
    if (algorithm < COMPOPT_ALG_SCSCG || algorithm > COMPOPT_ALG_FULL_ANCHOR)
      throw compopt::ArgumentError("run: unknown algorithm code");
    compopt::RunOptions options;
    options.verbose = verbose != 0;
    if (x0) options.x0 = Eigen::Map<const Eigen::VectorXd>(x0, p->impl->dim_x());
    auto handle = std::make_unique<compopt_result>();
    handle->impl = compopt::run_algorithm(static_cast<compopt::Algorithm>(algorithm), *p->impl,
                                          s->impl, seed, options);
    handle->csv = trace_csv(*p, *s, algorithm, seed, handle->impl);
    handle->iterations_csv = iterations_csv(handle->impl);
    *out = handle.release();
    return COMPOPT_OK;
  });
}

void compopt_result_destroy(compopt_result* r) { delete r; }

size_t compopt_result_rows(const compopt_result* r) {
  return r ? r->impl.trace.epochs.size() : 0;
}

int compopt_result_row(const compopt_result* r, size_t index, compopt_trace_row* out) {
  return guarded([&] {
    if (!r || !out) throw compopt::ArgumentError("result_row: null argument");
    if (index >= r->impl.trace.epochs.size())
      throw compopt::ArgumentError("result_row: index out of range");
    const compopt::TraceRow& row = r->impl.trace.epochs[index];
    *out = compopt_trace_row{row.s,
                             row.f_value,
                             row.grad_norm_sq,
                             row.dist_sq_opt,
                             row.paper_queries,
                             row.paper_queries_corollary,
                             row.raw_queries};
    return COMPOPT_OK;
  });
}

int compopt_result_output(const compopt_result* r, double* x, size_t cap) {
  return guarded([&] {
    if (!r) throw compopt::ArgumentError("result_output: null result");
    return copy_vector(r->impl.x_hat, x, cap, "result_output");
  });
}

int compopt_result_final(const compopt_result* r, double* x, size_t cap) {
  return guarded([&] {
    if (!r) throw compopt::ArgumentError("result_final: null result");
    return copy_vector(r->impl.x_final, x, cap, "result_final");
  });
}

int compopt_result_ledger(const compopt_result* r, compopt_ledger* out) {
  return guarded([&] {
    if (!r || !out) throw compopt::ArgumentError("result_ledger: null argument");
    const compopt::QueryLedger& l = r->impl.ledger;
    *out = compopt_ledger{l.paper_queries,      l.raw_inner_values, l.raw_inner_jacobians,
                          l.raw_outer_values,   l.raw_outer_gradients,
                          l.evaluation_queries};
    return COMPOPT_OK;
  });
}

const char* compopt_result_csv(const compopt_result* r) { return r ? r->csv.c_str() : ""; }

const char* compopt_result_iterations_csv(const compopt_result* r) {
  return r ? r->iterations_csv.c_str() : "";
}

int compopt_verify(const compopt_problem* p, const compopt_verify_options* options,
                   compopt_report** out) {
  return guarded([&] {
    if (!p || !out) throw compopt::ArgumentError("verify: null argument");
    compopt::LemmaGridOptions grid;
    if (options) {
      if (options->mc_seed != 0) grid.budget.mc_seed = options->mc_seed;
      if (options->mc_samples > 0) grid.budget.mc_samples = options->mc_samples;
      if (options->enumeration_guard > 0)
        grid.budget.enumeration_guard = options->enumeration_guard;
      if (options->without_replacement)
        grid.mode = compopt::SampleMode::without_replacement;
    }
    auto handle = std::make_unique<compopt_report>();
    handle->rows = compopt::run_lemma_grid(*p->impl, grid);
    handle->csv = report_csv(handle->rows);
    *out = handle.release();
    return COMPOPT_OK;
  });
}

void compopt_report_destroy(compopt_report* r) { delete r; }

size_t compopt_report_rows(const compopt_report* r) { return r ? r->rows.size() : 0; }

int compopt_report_all_pass(const compopt_report* r) {
  if (!r) return 0;
  return compopt::all_pass(r->rows) ? 1 : 0;
}

const char* compopt_report_csv(const compopt_report* r) { return r ? r->csv.c_str() : ""; }

int compopt_convex_rates(const compopt_problem* p, const compopt_schedule* s, double* rho,
                         double* rho1, double* rho2, double* rho3, int* valid) {
  return guarded([&] {
    if (!p || !s) throw compopt::ArgumentError("convex_rates: null argument");
    const compopt::ConvexRates rates =
        compopt::convex_rates(s->impl, p->impl->constants(), p->impl->component_count());
    if (rho) *rho = rates.rho;
    if (rho1) *rho1 = rates.rho1;
    if (rho2) *rho2 = rates.rho2;
    if (rho3) *rho3 = rates.rho3;
    if (valid) *valid = rates.valid ? 1 : 0;
    return COMPOPT_OK;
  });
}

int compopt_nonconvex_sequence(const compopt_problem* p, const compopt_schedule* s, double* u0,
                               double* j0, double* c0, int* valid) {
  return guarded([&] {
    if (!p || !s) throw compopt::ArgumentError("nonconvex_sequence: null argument");
    const compopt::NonconvexSequence seq =
        compopt::nonconvex_sequence(s->impl, p->impl->constants(), p->impl->component_count());
    if (u0) *u0 = seq.u0;
    if (j0) *j0 = seq.J0;
    if (c0) *c0 = seq.c.empty() ? 0.0 : seq.c.front();
    if (valid) *valid = seq.valid ? 1 : 0;
    return COMPOPT_OK;
  });
}

uint64_t compopt_epoch_cost(uint64_t D, uint64_t K, uint64_t A, uint64_t b) {
  return compopt::epoch_cost(D, K, A, b);
}

}  // extern "C"
