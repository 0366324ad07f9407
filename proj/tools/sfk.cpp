#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sfk/calculus.hpp"
#include "sfk/check.hpp"
#include "sfk/dsl.hpp"
#include "sfk/errors.hpp"
#include "sfk/ppl.hpp"
#include "sfk/randomise.hpp"
#include "sfk/report.hpp"

using nlohmann::json;
using namespace sfk;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 1;
constexpr int kExitEval = 2;

// An argument naming an existing file is replaced by the file's contents.
std::string load(const std::string& arg) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(arg, ec)) return arg;
  std::ifstream in(arg);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool looks_like_dsl(const std::string& text) {
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    return c == '(' || c == ';';
  }
  return false;
}

MeasureExpr measure_arg(const std::string& arg) {
  return parse_measure(load(arg));
}

// Measures are read as constant kernels from unit.
KernelExpr kernel_arg(const std::string& arg) {
  Term t = parse_term(load(arg));
  if (auto* m = std::get_if<MeasureExpr>(&t)) return KernelExpr::constant(*m, SpaceExpr::unit());
  return std::get<KernelExpr>(t);
}

class Emitter {
 public:
  Emitter(std::string command, const RunConfig& cfg) : command_(std::move(command)), cfg_(cfg) {}

  void text(const std::string& line) { lines_.push_back(line); }
  void result(json r) { results_.push_back(std::move(r)); }

  void flush() const {
    if (cfg_.output == OutputFormat::Json) {
      std::cout << make_report(command_, cfg_, results_).dump(2) << "\n";
      return;
    }
    for (const auto& l : lines_) std::cout << l << "\n";
  }

 private:
  std::string command_;
  RunConfig cfg_;
  std::vector<std::string> lines_;
  json results_ = json::array();
};

struct StreamRow {
  std::string value;
  std::string weight;
};

// One line per sample, then a one-line JSON summary.
void emit_stream(const std::vector<StreamRow>& rows, const json& summary) {
  for (const auto& r : rows) {
    if (r.weight.empty())
      std::cout << r.value << "\n";
    else
      std::cout << r.value << " " << r.weight << "\n";
  }
  std::cout << summary.dump() << "\n";
}

int cmd_eval(const RunConfig& cfg, const std::string& term, const std::string& set_text,
             const std::string& at_text) {
  Term t = parse_term(load(term));
  MeasureExpr m;
  if (auto* k = std::get_if<KernelExpr>(&t)) {
    if (at_text.empty()) fail(Errc::TypeMismatch, "kernel evaluation needs --at");
    m = eval_kernel(*k, parse_point(read_sexp(at_text), k->dom()));
  } else {
    m = std::get<MeasureExpr>(t);
  }
  SetExpr a = parse_set(load(set_text), m.space());
  EvalResult r = measure_of(m, a, cfg.eval());
  Emitter out("eval", cfg);
  out.text(eval_result_str(r));
  out.result(eval_json(r));
  out.flush();
  return kExitOk;
}

int cmd_integrate(const RunConfig& cfg, const std::string& measure, const std::string& fn) {
  MeasureExpr m = measure_arg(measure);
  FnExpr f = parse_fn(load(fn), m.space());
  EvalResult r = integrate(m, f, cfg.eval());
  Emitter out("integrate", cfg);
  out.text(eval_result_str(r));
  out.result(eval_json(r));
  out.flush();
  return kExitOk;
}

int cmd_compose(const RunConfig& cfg, const std::string& k_text, const std::string& l_text,
                const std::string& at_text, const std::string& set_text) {
  KernelExpr k = kernel_arg(k_text);
  KernelExpr l = kernel_arg(l_text);
  KernelExpr c = KernelExpr::compose(k, l);
  MeasureClass cls = classify_kernel(c, cfg.eval());
  Emitter out("compose", cfg);
  out.text(c.str());
  out.text(std::string("class ") + measure_class_name(cls));
  json r = {{"kernel", c.str()}, {"class", measure_class_name(cls)}};
  if (!set_text.empty()) {
    Point x = at_text.empty() ? Point::unit() : parse_point(read_sexp(at_text), c.dom());
    MeasureExpr m = eval_kernel(c, x);
    EvalResult v = measure_of(m, parse_set(load(set_text), m.space()), cfg.eval());
    out.text(eval_result_str(v));
    r["value"] = eval_json(v);
  }
  out.result(r);
  out.flush();
  return kExitOk;
}

int cmd_rnderiv(const RunConfig& cfg, const std::string& a, const std::string& b) {
  Term ta = parse_term(load(a));
  Term tb = parse_term(load(b));
  std::string deriv;
  std::string region;
  if (std::holds_alternative<MeasureExpr>(ta) && std::holds_alternative<MeasureExpr>(tb)) {
    MeasureRn r = rn_derivative(std::get<MeasureExpr>(ta), std::get<MeasureExpr>(tb), cfg.eval());
    deriv = r.derivative.str();
    region = r.infty_region.str();
  } else {
    RnResult r = rn_derivative(kernel_arg(a), kernel_arg(b), cfg.eval());
    deriv = r.derivative.str();
    region = r.infty_region.str();
  }
  Emitter out("rnderiv", cfg);
  out.text(deriv);
  out.text("infty " + region);
  out.result({{"derivative", deriv}, {"infty_region", region}});
  out.flush();
  return kExitOk;
}

int cmd_decompose(const RunConfig& cfg, const std::string& a, const std::string& b) {
  Term ta = parse_term(load(a));
  Term tb = parse_term(load(b));
  json r;
  if (std::holds_alternative<MeasureExpr>(ta) && std::holds_alternative<MeasureExpr>(tb)) {
    MeasureParts p = lebesgue_decompose(std::get<MeasureExpr>(ta), std::get<MeasureExpr>(tb), cfg.eval());
    r = {{"abs_cont", p.abs_cont.str()},
         {"inf_singular", p.inf_singular.str()},
         {"singular", p.singular.str()},
         {"singular_witness", p.singular_witness.str()},
         {"inf_region", p.inf_region.str()}};
  } else {
    LebesgueParts p = lebesgue_decompose(kernel_arg(a), kernel_arg(b), cfg.eval());
    r = {{"abs_cont", p.abs_cont.str()},
         {"inf_singular", p.inf_singular.str()},
         {"singular", p.singular.str()},
         {"singular_witness", p.singular_witness.str()},
         {"inf_region", p.inf_region.str()}};
  }
  Emitter out("decompose", cfg);
  for (const char* key : {"abs_cont", "inf_singular", "singular", "singular_witness", "inf_region"})
    out.text(std::string(key) + " " + r[key].get<std::string>());
  out.result(r);
  out.flush();
  return kExitOk;
}

int cmd_disintegrate(const RunConfig& cfg, const std::string& mu_text, const std::string& nu_text,
                     const std::string& phi_text) {
  Term tm = parse_term(load(mu_text));
  Term tn = parse_term(load(nu_text));
  Disintegration d;
  if (std::holds_alternative<MeasureExpr>(tm) && std::holds_alternative<MeasureExpr>(tn)) {
    const auto& mu = std::get<MeasureExpr>(tm);
    d = disintegrate(mu, std::get<MeasureExpr>(tn), parse_fn(load(phi_text), mu.space()), cfg.eval());
  } else {
    KernelExpr mu = kernel_arg(mu_text);
    d = disintegrate(mu, kernel_arg(nu_text), parse_fn(load(phi_text), mu.cod()), cfg.eval());
  }
  Emitter out("disintegrate", cfg);
  out.text(d.kernel.str());
  out.text(std::string(d.exact ? "exact " : "approx ") + d.support_check);
  out.result({{"kernel", d.kernel.str()}, {"exact", d.exact}, {"support_check", d.support_check}});
  out.flush();
  return kExitOk;
}

int cmd_randomise(const RunConfig& cfg, const std::string& term, const std::string& source_name_arg,
                  bool subprob) {
  KernelExpr k = kernel_arg(term);
  Randomiser r;
  if (!source_name_arg.empty()) {
    auto src = parse_source(source_name_arg);
    if (!src) fail(Errc::Unsupported, "unknown source " + source_name_arg);
    r = randomise_sfinite(k, *src, cfg.tol, cfg.eval());
  } else if (subprob) {
    r = randomise_subprob(k, cfg.tol, cfg.eval());
  } else {
    r = randomise_prob(k, cfg.tol, cfg.eval());
  }
  KernelExpr back = randomised_kernel(r);
  json checks = {{"class", measure_class_name(classify_kernel(back, cfg.eval()))}};
  if (k.dom().str() == SpaceExpr::unit().str()) {
    EvalResult want = total_mass(eval_kernel(k, Point::unit()), cfg.eval());
    EvalResult got = total_mass(eval_kernel(back, Point::unit()), cfg.eval());
    checks["mass"] = want.value.str();
    checks["randomised_mass"] = got.value.str();
  }
  json meta = {{"source", source_name(r.source)}, {"tol", r.tol}, {"checks", checks}};
  Emitter out("randomise", cfg);
  out.text(r.det.str());
  out.text(meta.dump());
  meta["det"] = r.det.str();
  out.result(meta);
  out.flush();
  return kExitOk;
}

int cmd_sample(const RunConfig& cfg, const std::string& input, const std::string& at_text) {
  std::string text = load(input);
  std::vector<StreamRow> rows;
  json summary = {{"seed", cfg.seed}, {"samples", cfg.samples}};
  if (looks_like_dsl(text)) {
    KernelExpr k = kernel_arg(input);
    Point x = at_text.empty() ? Point::unit() : parse_point(read_sexp(at_text), k.dom());
    Randomiser r = randomise_subprob(k, cfg.tol, cfg.eval());
    std::size_t bottoms = 0;
    for (const auto& p : sample_via(r, x, cfg.seed, cfg.samples)) {
      bottoms += p.is_bottom() ? 1 : 0;
      rows.push_back({p.str(), ""});
    }
    summary["bottom"] = bottoms;
  } else {
    ppl::Program p = ppl::parse_and_check(text, cfg.eval());
    auto runs = ppl::run_sampler(p, cfg.seed, cfg.samples, cfg.eval());
    for (const auto& s : runs) rows.push_back({s.value.str(), s.weight.str()});
    summary["type"] = p.type().str();
    if (p.type().str() == "real") summary["weighted_mean"] = ppl::weighted_mean(runs);
  }
  emit_stream(rows, summary);
  return kExitOk;
}

int cmd_transform(const RunConfig& cfg, const std::string& program_arg, const std::vector<std::string>& importance,
                  const std::vector<std::string>& rejection, std::optional<std::size_t> site) {
  if (!importance.empty()) {
    if (program_arg.empty()) fail(Errc::TypeMismatch, "--importance needs a program");
    ppl::TermPtr prog = ppl::parse_program(load(program_arg));
    MeasureExpr target = measure_arg(importance.at(0));
    MeasureExpr proposal = measure_arg(importance.at(1));
    ppl::Program::check(prog, cfg.eval());
    std::size_t idx = 0;
    if (site) {
      idx = *site;
    } else {
      auto found = ppl::find_site(prog, target);
      if (!found) fail(Errc::UnsampleableSite, "no sample site draws from " + target.str());
      idx = *found;
    }
    ppl::TermPtr out = ppl::importance_transform(prog, idx, proposal, cfg.eval());
    std::cout << ppl::print(out) << "\n";
    return kExitOk;
  }
  if (!rejection.empty()) {
    MeasureExpr target = measure_arg(rejection.at(0));
    MeasureExpr proposal = measure_arg(rejection.at(1));
    double bound = std::stod(rejection.at(2));
    ppl::RejectionResult r = ppl::rejection_sampler(target, proposal, bound, cfg.seed, cfg.samples, cfg.eval());
    std::vector<StreamRow> rows;
    for (const auto& p : r.samples) rows.push_back({p.str(), ""});
    emit_stream(rows, {{"seed", cfg.seed},
                       {"accepted", r.samples.size()},
                       {"proposals", r.proposals},
                       {"acceptance", r.acceptance()},
                       {"bound", bound}});
    return kExitOk;
  }
  fail(Errc::TypeMismatch, "transform needs --importance or --rejection");
}

int cmd_check(const RunConfig& cfg, const std::string& which) {
  std::vector<std::string> names;
  if (which == "all") {
    names = suite_names();
  } else if (is_suite(which)) {
    names = {which};
  } else {
    std::string known;
    for (const auto& n : suite_names()) known += " " + n;
    fail(Errc::Unsupported, "unknown suite " + which + "; known:" + known);
  }
  json results = json::array();
  bool ok = true;
  for (const auto& n : names) {
    SuiteReport r = run_suite(n, cfg.seed, cfg.eval());
    ok = ok && r.passed();
    results.push_back(suite_json(r));
    if (cfg.output == OutputFormat::Text)
      std::cerr << n << " " << (r.cases - r.failures.size()) << "/" << r.cases << (r.passed() ? " pass" : " FAIL")
                << "\n";
  }
  std::cout << make_report("check", cfg, results).dump(2) << "\n";
  return ok ? kExitOk : kExitEval;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"s-finite kernel toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig cfg;
  std::string output = "text";
  app.add_option("--seed", cfg.seed, "Run seed (SFK_SEED overrides)");
  app.add_option("--tol", cfg.tol, "Numeric tolerance");
  app.add_option("--max-terms", cfg.max_terms, "Series term budget");
  app.add_option("--samples", cfg.samples, "Sample count");
  app.add_option("--output", output, "text or json")->check(CLI::IsMember({"text", "json"}));

  std::string term, term2, set_text, at_text, fn_text, source;
  bool subprob = false;
  std::vector<std::string> importance, rejection;
  std::optional<std::size_t> site;

  auto* eval = app.add_subcommand("eval", "Measure of a set");
  eval->add_option("term", term, "Measure or kernel (DSL text or .sfkd file)")->required();
  eval->add_option("--set", set_text, "Set")->required();
  eval->add_option("--at", at_text, "Kernel argument point");

  auto* integ = app.add_subcommand("integrate", "Integral of a function");
  integ->add_option("measure", term)->required();
  integ->add_option("--fn", fn_text)->required();

  auto* comp = app.add_subcommand("compose", "Kernel composition");
  comp->add_option("k", term)->required();
  comp->add_option("l", term2)->required();
  comp->add_option("--at", at_text);
  comp->add_option("--set", set_text);

  auto* rn = app.add_subcommand("rnderiv", "Radon-Nikodym derivative d a / d b");
  rn->add_option("a", term)->required();
  rn->add_option("b", term2)->required();

  auto* dec = app.add_subcommand("decompose", "Lebesgue decomposition of a against b");
  dec->add_option("a", term)->required();
  dec->add_option("b", term2)->required();

  auto* dis = app.add_subcommand("disintegrate", "Disintegrate mu against nu along phi");
  dis->add_option("mu", term)->required();
  dis->add_option("nu", term2)->required();
  dis->add_option("--phi", fn_text)->required();

  auto* rnd = app.add_subcommand("randomise", "Inverse-CDF randomisation");
  rnd->add_option("term", term)->required();
  rnd->add_option("--source", source, "unit01, nat-unit, half-line or real-line");
  rnd->add_flag("--subprob", subprob);

  auto* smp = app.add_subcommand("sample", "Sample stream from a program or measure");
  smp->add_option("input", term)->required();
  smp->add_option("--at", at_text);

  auto* tr = app.add_subcommand("transform", "Program transformations");
  tr->add_option("program", term);
  tr->add_option("--importance", importance, "TARGET PROPOSAL")->expected(2);
  tr->add_option("--rejection", rejection, "TARGET PROPOSAL BOUND")->expected(3);
  tr->add_option("--site", site, "Sample site index in pre-order");

  auto* chk = app.add_subcommand("check", "Run property suites");
  chk->add_option("suite", term, "Suite name or all")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitParse;
  }
  cfg.output = output == "json" ? OutputFormat::Json : OutputFormat::Text;
  if (const char* env = std::getenv("SFK_SEED")) {
    try {
      cfg.seed = std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "error: SFK_SEED is not an unsigned integer\n";
      return kExitParse;
    }
  }

  try {
    if (*eval) return cmd_eval(cfg, term, set_text, at_text);
    if (*integ) return cmd_integrate(cfg, term, fn_text);
    if (*comp) return cmd_compose(cfg, term, term2, at_text, set_text);
    if (*rn) return cmd_rnderiv(cfg, term, term2);
    if (*dec) return cmd_decompose(cfg, term, term2);
    if (*dis) return cmd_disintegrate(cfg, term, term2, fn_text);
    if (*rnd) return cmd_randomise(cfg, term, source, subprob);
    if (*smp) return cmd_sample(cfg, term, at_text);
    if (*tr) return cmd_transform(cfg, term, importance, rejection, site);
    if (*chk) return cmd_check(cfg, term);
  } catch (const SyntaxError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const Error& e) {
    if (e.code() == Errc::ScopeError || e.code() == Errc::TypeError) {
      std::cerr << "parse error: " << e.what() << "\n";
      return kExitParse;
    }
    std::cerr << "error: " << e.what() << "\n";
    return kExitEval;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEval;
  }
  return kExitEval;
}
