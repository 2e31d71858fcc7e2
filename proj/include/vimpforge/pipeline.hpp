// pipeline.hpp -- the fixed transformation order: parse, validate, contract
// desugaring, then the four lowering passes and the final Boogie encoding.
// The stage order is not configurable; each pass relies on the normal forms
// established by its predecessors.

#ifndef VIMPFORGE_PIPELINE_HPP
#define VIMPFORGE_PIPELINE_HPP

#include <optional>
#include <string>
#include <vector>

#include "vimpforge/agg_transform.hpp"
#include "vimpforge/boogie.hpp"
#include "vimpforge/exc_transform.hpp"
#include "vimpforge/expr_transform.hpp"
#include "vimpforge/loop_transform.hpp"
#include "vimpforge/parser.hpp"
#include "vimpforge/spec_frontend.hpp"
#include "vimpforge/validate.hpp"

namespace vimpforge {

// The four lowering stages, in their only admissible order.
enum class Stage { Exc, Agg, Inst, Loop };

inline std::optional<Stage> stage_from_name(const std::string &s) {
  if (s == "exc") return Stage::Exc;
  if (s == "agg") return Stage::Agg;
  if (s == "inst") return Stage::Inst;
  if (s == "loop") return Stage::Loop;
  return std::nullopt;
}

inline std::string stage_name(Stage s) {
  switch (s) {
    case Stage::Exc: return "exc";
    case Stage::Agg: return "agg";
    case Stage::Inst: return "inst";
    case Stage::Loop: return "loop";
  }
  return "?";
}

struct PipelineOptions {
  ExcFlags exc;
  bool smoke = false;
  std::optional<Stage> dump_after;
  // The input is a dump taken after this stage; earlier stages are skipped
  // (contract clauses come in explicitly, so desugaring is a no-op).
  std::optional<Stage> resume_after;
};

struct PipelineResult {
  std::vector<Diagnostic> diagnostics;
  std::string dump;  // IR text after the requested stage, if any
  BoogieUnit unit;
  Program program;  // fully transformed IR (backs the emitted unit)

  bool ok() const { return diagnostics.empty(); }
};

// Stage dumps re-enter the pipeline as source text, so they must carry the
// resolved contracts explicitly and must not carry the spec annotations
// they were desugared from (running the front-end on a dump would
// otherwise duplicate clauses).
inline std::string render_stage_dump(const Program &program) {
  Program copy = program;
  for (auto &m : copy.methods) {
    std::vector<Annotation> kept;
    for (auto &a : m.annotations)
      if (a.kind == Annotation::Kind::Predicate) kept.push_back(a);
    m.annotations = std::move(kept);
  }
  return render_program(copy);
}

inline PipelineResult run_pipeline(const std::string &source,
                                   const PipelineOptions &opts = {}) {
  PipelineResult res;
  ParseResult parsed = parse_program(source);
  if (!parsed.ok()) {
    res.diagnostics = parsed.diagnostics;
    return res;
  }
  res.program = std::move(parsed.program);

  res.diagnostics = validate_program(res.program);
  if (!res.ok()) return res;

  res.diagnostics = resolve_specs(res.program);
  if (!res.ok()) return res;

  auto run_stage = [&](Stage s) {
    if (opts.resume_after && s <= *opts.resume_after) return true;
    switch (s) {
      case Stage::Exc:
        res.diagnostics = transform_exceptions(res.program, opts.exc);
        break;
      case Stage::Agg:
        res.diagnostics = transform_aggregate(res.program);
        break;
      case Stage::Inst:
        res.diagnostics = transform_expressions(res.program);
        break;
      case Stage::Loop:
        res.diagnostics = transform_loops(res.program);
        break;
    }
    if (!res.ok()) return false;
    if (opts.dump_after && *opts.dump_after == s)
      res.dump = render_stage_dump(res.program);
    return true;
  };

  for (Stage s : {Stage::Exc, Stage::Agg, Stage::Inst, Stage::Loop})
    if (!run_stage(s)) return res;

  BoogieOptions bo;
  bo.smoke = opts.smoke;
  res.unit = emit_boogie(res.program, bo);
  return res;
}

}  // namespace vimpforge

#endif  // VIMPFORGE_PIPELINE_HPP
