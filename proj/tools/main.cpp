// vimpforge: front-end driver. Lowers an input program through the fixed
// pass order and writes a Boogie translation plus a source-map sidecar;
// optionally runs an external Boogie binary or executes one method under
// the reference interpreter.
//
// Exit codes: 0 success (and, if a verifier ran, everything verified);
// 1 diagnostics (parse/validation/spec); 2 external verification failures;
// 3 internal errors (I/O, subprocess, bad flags at runtime).

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vimpforge/interp.hpp"
#include "vimpforge/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDiagnostics = 1;
constexpr int kExitVerification = 2;
constexpr int kExitInternal = 3;

std::string read_file(const std::string &path, bool &ok) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    ok = false;
    return {};
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  ok = true;
  return ss.str();
}

// All outputs go through write-then-rename so a failing run never leaves a
// truncated artifact behind.
bool write_atomic(const std::string &path, const std::string &content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    out << content;
    if (!out) return false;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    return false;
  }
  return true;
}

void print_diagnostics(const std::vector<vimpforge::Diagnostic> &diags) {
  for (const auto &d : diags)
    std::cerr << "error[" << d.code << "] " << d.pos.line << ":" << d.pos.col
              << ": " << d.message << "\n";
}

std::string default_out(const std::string &input) {
  std::string stem = input;
  size_t dot = stem.rfind('.');
  size_t slash = stem.find_last_of('/');
  if (dot != std::string::npos &&
      (slash == std::string::npos || dot > slash))
    stem = stem.substr(0, dot);
  return stem + ".bpl";
}

// Relays the verifier's verdict; Boogie's summary line reports error
// counts, and a nonzero count (or an unparseable run) fails the build.
int run_external_boogie(const std::string &boogie, const std::string &bpl,
                        const vimpforge::BoogieUnit &unit) {
  std::string cmd = boogie + " /nologo " + bpl + " 2>&1";
  FILE *pipe = popen(cmd.c_str(), "r");
  if (!pipe) {
    std::cerr << "error: cannot run verifier: " << boogie << "\n";
    return kExitInternal;
  }
  std::string output;
  char buf[4096];
  while (size_t n = fread(buf, 1, sizeof(buf), pipe)) output.append(buf, n);
  int status = pclose(pipe);
  std::cout << output;

  // Map reported failure lines ("file(line,col): Error ...") back to IR
  // positions via the source map.
  std::istringstream is(output);
  std::string line;
  while (std::getline(is, line)) {
    size_t par = line.find('(');
    if (par == std::string::npos || line.find("Error") == std::string::npos)
      continue;
    int bline = std::atoi(line.c_str() + par + 1);
    for (const auto &e : unit.source_map)
      if (e.boogie_line == bline)
        std::cerr << "failed check: " << e.method << " at " << e.ir_line
                  << ":" << e.ir_col << " (" << e.kind << ")\n";
  }

  size_t summary = output.find("finished with");
  if (status != 0 || summary == std::string::npos)
    return kExitVerification;
  size_t errors_at = output.find(" error", summary);
  if (errors_at == std::string::npos) return kExitVerification;
  size_t num_start = output.rfind(' ', errors_at - 1);
  int errors = std::atoi(output.c_str() + num_start + 1);
  return errors == 0 ? kExitOk : kExitVerification;
}

int run_exec(const vimpforge::Program &program, const std::string &spec,
             const std::vector<std::string> &arg_text) {
  using namespace vimpforge;
  size_t dot = spec.find('.');
  if (dot == std::string::npos) {
    std::cerr << "error: --exec expects Owner.method\n";
    return kExitInternal;
  }
  const MethodDecl *m =
      program.find_method(spec.substr(0, dot), spec.substr(dot + 1));
  if (!m || !m->has_body) {
    std::cerr << "error: no such method with a body: " << spec << "\n";
    return kExitInternal;
  }
  if (arg_text.size() != m->params.size()) {
    std::cerr << "error: " << spec << " takes " << m->params.size()
              << " argument(s)\n";
    return kExitInternal;
  }
  std::vector<Value> args;
  for (size_t i = 0; i < arg_text.size(); ++i) {
    const TypeExpr &t = m->params[i].type;
    const std::string &a = arg_text[i];
    if (t.kind == TypeExpr::Kind::Bool) {
      if (a != "true" && a != "false") {
        std::cerr << "error: argument " << i + 1 << " must be a bool\n";
        return kExitInternal;
      }
      args.push_back(Value::bool_v(a == "true"));
    } else if (t.kind == TypeExpr::Kind::Int) {
      args.push_back(Value::int_v(BigInt(a)));
    } else if (a == "null") {
      args.push_back(Value::null_v());
    } else {
      std::cerr << "error: reference argument " << i + 1
                << " only accepts null\n";
      return kExitInternal;
    }
  }
  RunConfig cfg;
  cfg.check_specs = true;
  Outcome out = run_method(program, *m, args, cfg);
  std::cout << to_string(out) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"vimpforge: verification front-end"};
  std::string input;
  std::string out_path;
  std::string dump_stage;
  std::string boogie_path;
  std::string exec_method;
  std::vector<std::string> exec_args;
  bool implicit_null = false;
  bool implicit_bounds = false;
  bool smoke = false;

  app.add_option("input", input, "input program (.vmp)")->required();
  app.add_option("--out", out_path, "output .bpl path (default: input stem)");
  app.add_flag("--implicit-null", implicit_null,
               "insert null-dereference checks (default off)");
  app.add_flag("--implicit-bounds", implicit_bounds,
               "insert array-bounds checks (default off)");
  app.add_flag("--smoke", smoke,
               "inject a failing assert per basic block (encoding check)");
  app.add_option("--dump-after", dump_stage,
                 "write the IR after a stage: exc | agg | inst | loop")
      ->check(CLI::IsMember({"exc", "agg", "inst", "loop"}));
  app.add_option("--boogie", boogie_path,
                 "external Boogie binary (or env VIMPFORGE_BOOGIE)");
  app.add_option("--exec", exec_method,
                 "run Owner.method under the interpreter and print the "
                 "outcome");
  app.add_option("--args", exec_args, "arguments for --exec");
  CLI11_PARSE(app, argc, argv);

  try {
    bool ok = false;
    std::string source = read_file(input, ok);
    if (!ok) {
      std::cerr << "error: cannot read " << input << "\n";
      return kExitInternal;
    }

    vimpforge::PipelineOptions opts;
    opts.exc.implicit_null = implicit_null;
    opts.exc.implicit_bounds = implicit_bounds;
    opts.smoke = smoke;
    if (!dump_stage.empty()) opts.dump_after = *vimpforge::stage_from_name(dump_stage);

    vimpforge::PipelineResult res = vimpforge::run_pipeline(source, opts);
    if (!res.ok()) {
      print_diagnostics(res.diagnostics);
      return kExitDiagnostics;
    }

    if (!exec_method.empty()) {
      // Debugging mode: interpret the *pre-transform* semantics. Re-parse
      // and resolve so traps are still in table form.
      vimpforge::ParseResult pr = vimpforge::parse_program(source);
      vimpforge::resolve_specs(pr.program);
      return run_exec(pr.program, exec_method, exec_args);
    }

    std::string bpl = out_path.empty() ? default_out(input) : out_path;
    if (!write_atomic(bpl, res.unit.text)) {
      std::cerr << "error: cannot write " << bpl << "\n";
      return kExitInternal;
    }
    if (!write_atomic(bpl + ".map.json", res.unit.map_json())) {
      std::cerr << "error: cannot write " << bpl << ".map.json\n";
      return kExitInternal;
    }
    if (!res.dump.empty()) {
      std::string dump_path = bpl + "." + dump_stage + ".vmp";
      if (!write_atomic(dump_path, res.dump)) {
        std::cerr << "error: cannot write " << dump_path << "\n";
        return kExitInternal;
      }
    }

    std::string verifier = boogie_path;
    if (verifier.empty())
      if (const char *env = std::getenv("VIMPFORGE_BOOGIE")) verifier = env;
    if (!verifier.empty())
      return run_external_boogie(verifier, bpl, res.unit);
    return kExitOk;
  } catch (const std::exception &e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
