#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "opnorm/error.hpp"
#include "opnorm/experiments.hpp"
#include "opnorm/geometry.hpp"
#include "opnorm/norms.hpp"

namespace py = pybind11;
using namespace opnorm;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
    if (a.ndim() != 2) throw ShapeError("expected a 2-d array");
    const auto r = static_cast<std::size_t>(a.shape(0));
    const auto c = static_cast<std::size_t>(a.shape(1));
    return Matrix(r, c, std::vector<double>(a.data(), a.data() + r * c));
}

Array to_array(const Matrix& m) {
    Array out({m.rows(), m.cols()});
    auto* dst = out.mutable_data();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto row = m.row(i);
        std::copy(row.begin(), row.end(), dst + i * m.cols());
    }
    return out;
}

OperatorNormSpec op_spec(double p, double q, bool mean) { return {{p, mean}, {q, mean}}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Operator norms and steepest-descent geometries";
    m.attr("__version__") = OPNORM_VERSION;

    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<UnsupportedError>(m, "UnsupportedError", PyExc_NotImplementedError);

    m.def("vec_norm", [](std::vector<double> x, double p, bool mean) { return vec_norm(x, {p, mean}); },
          py::arg("x"), py::arg("p"), py::arg("mean") = false);
    m.def("op_norm", [](const Array& a, double p, double q, bool mean) {
              return op_norm_exact(to_matrix(a), op_spec(p, q, mean));
          },
          py::arg("a"), py::arg("p"), py::arg("q"), py::arg("mean") = false,
          "Exact p->q operator norm for the closed-form pairs.");
    m.def("op_norm_bruteforce", [](const Array& a, double p, double q, bool mean, int samples, std::uint64_t seed) {
              return op_norm_bruteforce(to_matrix(a), op_spec(p, q, mean), samples, seed);
          },
          py::arg("a"), py::arg("p"), py::arg("q"), py::arg("mean") = false, py::arg("samples") = 2000,
          py::arg("seed") = 1);
    m.def("is_computable", [](double p, double q) { return is_computable(op_spec(p, q, false)); });

    m.def("descent_direction", [](const Array& g, const std::string& geometry) {
              return to_array(descent_direction(to_matrix(g), parse_geometry(geometry)));
          },
          py::arg("g"), py::arg("geometry"), "Steepest-descent direction, e.g. geometry='rownorm:2,mean'.");
    m.def("dual_norm", [](const Array& g, const std::string& geometry) {
        return dual_norm(to_matrix(g), parse_geometry(geometry));
    });
    m.def("moga_scale", [](const std::string& geometry, std::size_t d_in, std::size_t d_out) {
        return moga_scale(parse_geometry(geometry), d_in, d_out);
    });
    m.def("newton_schulz_sign", [](const Array& g, int iters) {
              return to_array(newton_schulz_sign(to_matrix(g), iters));
          },
          py::arg("g"), py::arg("iters") = 10);
    m.def("matrix_sign", [](const Array& g) { return to_array(matrix_sign_svd(to_matrix(g))); });
    m.def("attention_logit_scale", [](const std::string& geometry, std::size_t d_v) {
        return attention_logit_scale(parse_geometry(geometry), d_v);
    });

    m.def("counterexample_check", &counterexample_check, py::arg("d"));
    m.def("quadratic_probe", [](std::size_t w, double p, double q) {
              return quadratic_probe(w, OperatorNormSpec{{p, true}, {q, q != kInf}});
          },
          py::arg("width"), py::arg("p") = 2.0, py::arg("q") = 2.0);
    m.def("fit_loglog", [](const std::vector<double>& xs, const std::vector<double>& ys) {
        const LogLogFit f = fit_loglog(xs, ys);
        return py::make_tuple(f.slope, f.intercept);
    });
}
