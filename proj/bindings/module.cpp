// Python face of the library. Signals cross the boundary as 1-d numpy
// arrays (complex128 for samples and spectra, float64 for weights and the
// real-valued operator fields); experiment configs and reports cross as
// JSON strings so the strict C++ parser stays the single source of truth
// for validation and defaults.

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vclab/fourier.hpp"
#include "vclab/harness.hpp"
#include "vclab/lepingle.hpp"
#include "vclab/util.hpp"
#include "vclab/weights.hpp"

namespace py = pybind11;
using namespace vclab;

namespace {

std::vector<cplx> as_complex_vector(const py::array_t<std::complex<double>>& a) {
    if (a.ndim() != 1) throw std::invalid_argument("expected a 1-d array");
    auto r = a.unchecked<1>();
    std::vector<cplx> v(static_cast<std::size_t>(r.shape(0)));
    for (py::ssize_t i = 0; i < r.shape(0); ++i) v[static_cast<std::size_t>(i)] = r(i);
    return v;
}

Signal as_signal(const py::array_t<std::complex<double>>& a) {
    return Signal(as_complex_vector(a));
}

Weight as_weight(const py::array_t<double>& a) {
    if (a.ndim() != 1) throw std::invalid_argument("expected a 1-d weight array");
    auto r = a.unchecked<1>();
    std::vector<double> v(static_cast<std::size_t>(r.shape(0)));
    for (py::ssize_t i = 0; i < r.shape(0); ++i) v[static_cast<std::size_t>(i)] = r(i);
    return Weight::from_samples(std::move(v));
}

py::array_t<std::complex<double>> complex_array(const std::vector<cplx>& v) {
    py::array_t<std::complex<double>> out(static_cast<py::ssize_t>(v.size()));
    auto w = out.mutable_unchecked<1>();
    for (std::size_t i = 0; i < v.size(); ++i) w(static_cast<py::ssize_t>(i)) = v[i];
    return out;
}

// For the operator fields, which are real numbers stored in a Signal.
py::array_t<double> real_array(const Signal& f) {
    py::array_t<double> out(static_cast<py::ssize_t>(f.size()));
    auto w = out.mutable_unchecked<1>();
    for (std::size_t i = 0; i < f.size(); ++i) w(static_cast<py::ssize_t>(i)) = f[i].real();
    return out;
}

py::array_t<double> double_array(const std::vector<double>& v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    auto w = out.mutable_unchecked<1>();
    for (std::size_t i = 0; i < v.size(); ++i) w(static_cast<py::ssize_t>(i)) = v[i];
    return out;
}

}  // namespace

PYBIND11_MODULE(_vclab, m) {
    m.doc() = "Variational truncation operators, Muckenhoupt weights and the "
              "decomposition harness on the discrete torus";

    // --- transforms and variation norms ---------------------------------
    m.def(
        "dft", [](const py::array_t<std::complex<double>>& f) {
            return complex_array(dft(as_signal(f)).coeffs());
        },
        py::arg("f"), "Fourier coefficients in ascending order k = -n/2 .. n/2-1.");
    m.def(
        "idft", [](const py::array_t<std::complex<double>>& fhat) {
            return complex_array(idft(Spectrum(as_complex_vector(fhat))).samples());
        },
        py::arg("fhat"));
    m.def(
        "partial_sum", [](const py::array_t<std::complex<double>>& f, int mm) {
            return complex_array(partial_sum(as_signal(f), mm).samples());
        },
        py::arg("f"), py::arg("m"), "S_m f; m <= 0 gives the zero signal.");
    m.def(
        "variation_norm",
        [](const py::array_t<std::complex<double>>& a, double r, bool include_initial) {
            const std::vector<cplx> v = as_complex_vector(a);
            return variation_norm(std::span<const cplx>(v), r,
                                  include_initial ? VariationMode::include_initial
                                                  : VariationMode::oscillation);
        },
        py::arg("a"), py::arg("r"), py::arg("include_initial") = false,
        "r-variation of a finite sequence; r = inf takes the largest jump. "
        "include_initial counts |a_0| as a jump from zero.");
    m.def(
        "variational_partial_sums", [](const py::array_t<std::complex<double>>& f, double r) {
            return real_array(variational_partial_sums(as_signal(f), r));
        },
        py::arg("f"), py::arg("r"),
        "Pointwise r-variation of the partial-sum sequence (S_m f(x))_m.");
    m.def(
        "variational_truncation", [](const py::array_t<std::complex<double>>& f, double r) {
            return real_array(variational_truncation(as_signal(f), r));
        },
        py::arg("f"), py::arg("r"),
        "Pointwise r-variation over one-sided frequency truncations.");

    // --- weights ---------------------------------------------------------
    m.def(
        "power_weight", [](std::size_t n, double a) {
            return double_array(power_weight(n, a).samples());
        },
        py::arg("n"), py::arg("a"), "(d(x) + 1/(2n))^a with d(x) = min(x, 1-x).");
    m.def(
        "ap_constant", [](const py::array_t<double>& w, double p) {
            return ap_constant(as_weight(w), p);
        },
        py::arg("w"), py::arg("p"),
        "sup over the dyadic+shifted window family of avg(w) avg(w^{-1/(p-1)})^{p-1}.");
    m.def(
        "doubling_exponent", [](const py::array_t<double>& w) {
            return as_weight(w).doubling_exponent();
        },
        py::arg("w"));
    m.def(
        "weighted_lp_norm",
        [](const py::array_t<std::complex<double>>& f, double p, const py::array_t<double>& w) {
            return weighted_lp_norm(as_signal(f), p, as_weight(w));
        },
        py::arg("f"), py::arg("p"), py::arg("w"));
    m.def(
        "maximal",
        [](const py::array_t<std::complex<double>>& f, double t,
           const std::optional<py::array_t<double>>& w) {
            const Signal sf = as_signal(f);
            return real_array(w ? maximal(sf, t, as_weight(*w)) : maximal(sf, t));
        },
        py::arg("f"), py::arg("t") = 1.0, py::arg("w") = py::none(),
        "Maximal average field; pass w for weighted averages.");
    m.def(
        "dyadic_sharp", [](const py::array_t<std::complex<double>>& f) {
            return real_array(dyadic_sharp(as_signal(f)));
        },
        py::arg("f"));

    // --- block variation monitor -----------------------------------------
    m.def(
        "lepingle_ratio",
        [](const py::array_t<std::complex<double>>& f, double r, double p,
           const py::array_t<double>& w, double band_constant) {
            const LPFamily fam = lp_family(as_signal(f), band_constant);
            bool degenerate = false;
            const double ratio = lepingle_ratio(fam, r, p, as_weight(w), &degenerate);
            return py::make_tuple(ratio, degenerate);
        },
        py::arg("f"), py::arg("r"), py::arg("p"), py::arg("w"), py::arg("band_constant") = 2.0,
        "Variational-to-square norm ratio over the dyadic band family of f; "
        "returns (ratio, degenerate).");
    m.def("lp_overlap_bound", &lp_overlap_bound, py::arg("band_constant") = 2.0);

    // --- experiment driver -------------------------------------------------
    m.def(
        "family_member",
        [](const std::string& family, std::size_t n, std::uint64_t seed, std::uint64_t index) {
            Rng rng = Rng::stream(seed, index);
            return complex_array(family_member(family, n, rng).samples());
        },
        py::arg("family"), py::arg("n"), py::arg("seed"), py::arg("index") = 0,
        "Seeded test-signal draw; (seed, index) names the stream.");
    m.def(
        "apply_operator",
        [](const std::string& op, const py::array_t<std::complex<double>>& f, double r) {
            return real_array(apply_operator(op, as_signal(f), r));
        },
        py::arg("op"), py::arg("f"), py::arg("r") = 3.0,
        "Pointwise field of a named operator: partial-sum, carleson-sup, "
        "svar, cvar, maximal or sharp.");
    m.def(
        "clears_variation_threshold", &clears_variation_threshold, py::arg("p"), py::arg("q"),
        py::arg("r"));
    m.def(
        "config_digest",
        [](const std::string& config_json) { return config_digest(config_from_json(config_json)); },
        py::arg("config_json"));
    m.def(
        "normalize_config",
        [](const std::string& config_json) { return config_to_json(config_from_json(config_json)); },
        py::arg("config_json"),
        "Round-trips a config through the strict parser, filling defaults.");
    m.def(
        "estimate_norm_ratio_json",
        [](const std::string& config_json) {
            return estimate_norm_ratio(config_from_json(config_json)).to_json();
        },
        py::arg("config_json"), py::call_guard<py::gil_scoped_release>());
    m.def(
        "sweep_r_json",
        [](const std::string& config_json) {
            return sweep_r(config_from_json(config_json)).to_json();
        },
        py::arg("config_json"), py::call_guard<py::gil_scoped_release>());
    m.def(
        "decomposition_report_json",
        [](const std::string& config_json) {
            return run_decomposition_report(config_from_json(config_json)).to_json();
        },
        py::arg("config_json"), py::call_guard<py::gil_scoped_release>());
    m.def(
        "report_to_csv",
        [](const std::string& report_json) {
            return ExperimentReport::from_json(report_json).to_csv();
        },
        py::arg("report_json"));
    m.def(
        "report_digest",
        [](const std::string& report_json) {
            return ExperimentReport::from_json(report_json).digest();
        },
        py::arg("report_json"));
}
