#include <optional>
#include <string>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sfk/calculus.hpp"
#include "sfk/check.hpp"
#include "sfk/dsl.hpp"
#include "sfk/errors.hpp"
#include "sfk/ppl.hpp"
#include "sfk/randomise.hpp"
#include "sfk/report.hpp"

namespace py = pybind11;
using namespace sfk;

namespace {

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

KernelExpr as_kernel(const std::string& text) {
  Term t = parse_term(text);
  if (auto* m = std::get_if<MeasureExpr>(&t)) return KernelExpr::constant(*m, SpaceExpr::unit());
  return std::get<KernelExpr>(t);
}

EvalConfig config(double tol, std::uint64_t max_terms, std::uint64_t seed) { return {tol, max_terms, seed}; }

}  // namespace

PYBIND11_MODULE(_sfk, m) {
  m.doc() = "s-finite measures and kernels";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  static py::exception<SyntaxError> syntax_error(m, "SyntaxError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const SyntaxError& e) {
      py::set_error(syntax_error, e.what());
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  m.def(
      "eval",
      [](const std::string& term, const std::string& set, std::optional<std::string> at, double tol) {
        Term t = parse_term(term);
        MeasureExpr meas;
        if (auto* k = std::get_if<KernelExpr>(&t)) {
          if (!at) fail(Errc::TypeMismatch, "kernel evaluation needs at=");
          meas = eval_kernel(*k, parse_point(read_sexp(*at), k->dom()));
        } else {
          meas = std::get<MeasureExpr>(t);
        }
        return to_py(eval_json(measure_of(meas, parse_set(set, meas.space()), config(tol, 1'000'000, 0))));
      },
      py::arg("term"), py::arg("set"), py::arg("at") = py::none(), py::arg("tol") = 1e-9);

  m.def(
      "integrate",
      [](const std::string& measure, const std::string& fn, double tol) {
        MeasureExpr meas = parse_measure(measure);
        return to_py(eval_json(integrate(meas, parse_fn(fn, meas.space()), config(tol, 1'000'000, 0))));
      },
      py::arg("measure"), py::arg("fn"), py::arg("tol") = 1e-9);

  m.def("compose", [](const std::string& k, const std::string& l) {
    return KernelExpr::compose(as_kernel(k), as_kernel(l)).str();
  });

  m.def("classify", [](const std::string& term) {
    return std::string(measure_class_name(classify_kernel(as_kernel(term))));
  });

  m.def("rn_derivative", [](const std::string& a, const std::string& b) {
    MeasureRn r = rn_derivative(parse_measure(a), parse_measure(b));
    return py::dict(py::arg("derivative") = r.derivative.str(), py::arg("infty_region") = r.infty_region.str());
  });

  m.def("decompose", [](const std::string& a, const std::string& b) {
    MeasureParts p = lebesgue_decompose(parse_measure(a), parse_measure(b));
    return py::dict(py::arg("abs_cont") = p.abs_cont.str(), py::arg("inf_singular") = p.inf_singular.str(),
                    py::arg("singular") = p.singular.str());
  });

  m.def("disintegrate", [](const std::string& mu, const std::string& nu, const std::string& phi) {
    MeasureExpr mm = parse_measure(mu);
    return disintegrate(mm, parse_measure(nu), parse_fn(phi, mm.space())).kernel.str();
  });

  m.def(
      "randomise",
      [](const std::string& term, std::optional<std::string> source, double tol) {
        KernelExpr k = as_kernel(term);
        Randomiser r;
        if (source) {
          auto s = parse_source(*source);
          if (!s) fail(Errc::Unsupported, "unknown source " + *source);
          r = randomise_sfinite(k, *s, tol);
        } else {
          r = randomise_subprob(k, tol);
        }
        return py::dict(py::arg("det") = r.det.str(), py::arg("source") = source_name(r.source));
      },
      py::arg("term"), py::arg("source") = py::none(), py::arg("tol") = 1e-9);

  m.def(
      "sample",
      [](const std::string& program, std::uint64_t n, std::uint64_t seed) {
        ppl::Program p = ppl::parse_and_check(program);
        py::list out;
        for (const auto& s : ppl::run_sampler(p, seed, n)) out.append(py::make_tuple(s.value.str(), s.weight.to_double()));
        return out;
      },
      py::arg("program"), py::arg("n"), py::arg("seed") = 0);

  m.def(
      "posterior_mean",
      [](const std::string& program, std::uint64_t n, std::uint64_t seed) {
        return ppl::weighted_mean(ppl::run_sampler(ppl::parse_and_check(program), seed, n));
      },
      py::arg("program"), py::arg("n"), py::arg("seed") = 0);

  m.def(
      "importance",
      [](const std::string& program, const std::string& target, const std::string& proposal) {
        ppl::TermPtr t = ppl::parse_program(program);
        auto site = ppl::find_site(t, parse_measure(target));
        if (!site) fail(Errc::UnsampleableSite, "no sample site draws from " + target);
        return ppl::print(ppl::importance_transform(t, *site, parse_measure(proposal)));
      },
      py::arg("program"), py::arg("target"), py::arg("proposal"));

  m.def(
      "rejection",
      [](const std::string& target, const std::string& proposal, double bound, std::uint64_t n, std::uint64_t seed) {
        auto r = ppl::rejection_sampler(parse_measure(target), parse_measure(proposal), bound, seed, n);
        std::vector<double> xs;
        for (const auto& p : r.samples) xs.push_back(p.real());
        return py::dict(py::arg("samples") = xs, py::arg("proposals") = r.proposals,
                        py::arg("acceptance") = r.acceptance());
      },
      py::arg("target"), py::arg("proposal"), py::arg("bound"), py::arg("n"), py::arg("seed") = 0);

  m.def("suites", [] { return suite_names(); });

  m.def(
      "check",
      [](const std::string& suite, std::uint64_t seed) {
        SuiteReport r;
        {
          py::gil_scoped_release release;
          r = run_suite(suite, seed);
        }
        return to_py(suite_json(r));
      },
      py::arg("suite"), py::arg("seed") = 0);
}
