// Python surface for the numeric core: tensors with reverse-mode autodiff,
// the training optimizer, Black-Scholes analytics, the synthetic data
// generator, and the evaluation metrics. The end-to-end train/evaluate
// pipeline stays on the `opnn` command-line tool.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>
#include <vector>

#include "opnn/adam.hpp"
#include "opnn/blackscholes.hpp"
#include "opnn/evaluation.hpp"
#include "opnn/market_data.hpp"
#include "opnn/ops.hpp"
#include "opnn/tensor.hpp"

namespace py = pybind11;
using namespace opnn;

namespace {

bs::OptionKind kind_from_string(const std::string& kind) {
    if (kind == "call") return bs::OptionKind::Call;
    if (kind == "put") return bs::OptionKind::Put;
    throw UsageError("kind must be 'call' or 'put', got '" + kind + "'");
}

bs::BsInputs make_inputs(double spot, double strike, double days, double rate, double vol,
                         const std::string& kind) {
    bs::BsInputs in;
    in.spot = spot;
    in.strike = strike;
    in.days_to_expire = days;
    in.rate = rate;
    in.vol = vol;
    in.kind = kind_from_string(kind);
    return in;
}

Padding padding_from_string(const std::string& padding) {
    if (padding == "valid") return Padding::Valid;
    if (padding == "same") return Padding::Same;
    throw UsageError("padding must be 'valid' or 'same', got '" + padding + "'");
}

// `with opnn.no_grad():` — pauses tape recording for the block.
struct NoGradContext {
    std::unique_ptr<NoGradScope> scope;
};

}  // namespace

PYBIND11_MODULE(_opnn, m) {
    m.doc() =
        "Option settle-price modeling core: dense-tensor autodiff, Adam, "
        "Black-Scholes analytics, synthetic market data, regression metrics.";

    // Library errors arrive as ValueError/ArithmeticError/OSError so Python
    // callers never need the C++ taxonomy; the message keeps the detail.
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const NoSolutionError& e) {
            PyErr_SetString(PyExc_ArithmeticError, e.what());
        } catch (const ConvergenceError& e) {
            PyErr_SetString(PyExc_ArithmeticError, e.what());
        } catch (const IoError& e) {
            PyErr_SetString(PyExc_OSError, e.what());
        } catch (const TrainingError& e) {
            PyErr_SetString(PyExc_RuntimeError, e.what());
        } catch (const Error& e) {
            // dimension/domain/usage/data/schema/format/integrity: bad input.
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });

    // ---- tensors and autodiff ----------------------------------------------

    py::class_<Tensor>(m, "Tensor")
        .def(py::init([](std::vector<std::size_t> shape, std::vector<double> values,
                         bool requires_grad) {
                 return Tensor(std::move(shape), std::move(values), requires_grad);
             }),
             py::arg("shape"), py::arg("values"), py::arg("requires_grad") = false)
        .def_property_readonly("shape",
                               [](const Tensor& t) { return t.shape(); })
        .def_property_readonly("values", [](const Tensor& t) { return t.values(); })
        .def_property_readonly("grad", [](const Tensor& t) { return t.grad(); })
        .def_property_readonly("requires_grad", &Tensor::requires_grad)
        .def("item", &Tensor::item)
        .def("zero_grad", &Tensor::zero_grad)
        .def("__repr__", [](const Tensor& t) {
            return "Tensor(shape=" + shape_to_string(t.shape()) + ")";
        });

    m.def("scalar", &Tensor::scalar, py::arg("value"), py::arg("requires_grad") = false);
    m.def(
        "zeros",
        [](std::vector<std::size_t> shape, bool requires_grad) {
            return Tensor::zeros(std::move(shape), requires_grad);
        },
        py::arg("shape"), py::arg("requires_grad") = false);
    m.def(
        "ones",
        [](std::vector<std::size_t> shape, bool requires_grad) {
            return Tensor::ones(std::move(shape), requires_grad);
        },
        py::arg("shape"), py::arg("requires_grad") = false);

    m.def("matmul", &matmul, py::arg("a"), py::arg("b"));
    m.def(
        "conv1d",
        [](const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t dilation,
           const std::string& padding) {
            return conv1d(input, kernel, bias, dilation, padding_from_string(padding));
        },
        py::arg("input"), py::arg("kernel"), py::arg("bias"), py::arg("dilation") = 1,
        py::arg("padding") = "valid");
    m.def("add", &add, py::arg("a"), py::arg("b"));
    m.def("sub", &sub, py::arg("a"), py::arg("b"));
    m.def("mul", &mul, py::arg("a"), py::arg("b"));
    m.def("add_scalar", &add_scalar, py::arg("a"), py::arg("c"));
    m.def("mul_scalar", &mul_scalar, py::arg("a"), py::arg("c"));
    m.def("sigmoid", &sigmoid, py::arg("x"));
    m.def("tanh", &opnn::tanh, py::arg("x"));
    m.def("add_bcast", &add_bcast, py::arg("a"), py::arg("b"));
    m.def("mul_bcast", &mul_bcast, py::arg("a"), py::arg("b"));
    m.def("concat", &concat, py::arg("tensors"), py::arg("axis"));
    m.def("slice", &opnn::slice, py::arg("t"), py::arg("axis"), py::arg("start"),
          py::arg("stop"));
    m.def(
        "reshape",
        [](const Tensor& t, std::vector<std::size_t> shape) {
            return reshape(t, std::move(shape));
        },
        py::arg("t"), py::arg("shape"));
    m.def("sum", &opnn::sum, py::arg("t"));
    m.def("mse_loss", &mse_loss, py::arg("pred"), py::arg("target"));

    m.def("backward", &backward, py::arg("loss"),
          "Seed d(loss)/d(loss)=1 and accumulate gradients along the tape.");
    m.def("clear_tape", []() { Tape::active().clear(); });
    m.def("tape_size", []() { return Tape::active().size(); });

    py::class_<NoGradContext>(m, "no_grad")
        .def(py::init<>())
        .def("__enter__",
             [](NoGradContext& ctx) -> NoGradContext& {
                 ctx.scope = std::make_unique<NoGradScope>();
                 return ctx;
             })
        .def("__exit__", [](NoGradContext& ctx, const py::object&, const py::object&,
                            const py::object&) {
            ctx.scope.reset();
            return false;
        });

    py::class_<Adam>(m, "Adam")
        .def(py::init([](double learning_rate, double beta1, double beta2, double eps) {
                 AdamConfig config;
                 config.learning_rate = learning_rate;
                 config.beta1 = beta1;
                 config.beta2 = beta2;
                 config.eps = eps;
                 return Adam(config);
             }),
             py::arg("learning_rate") = 1e-4, py::arg("beta1") = 0.9, py::arg("beta2") = 0.999,
             py::arg("eps") = 1e-8)
        // Tensors share storage with their Python handles, so updating the
        // converted map updates the caller's tensors; moments are keyed by
        // parameter name and persist across calls.
        .def("step", [](Adam& self, ModelParams params) { self.step(params); },
             py::arg("params"))
        .def_property_readonly("steps_taken", &Adam::steps_taken);

    // ---- Black-Scholes analytics -------------------------------------------

    m.def(
        "bs_price",
        [](double spot, double strike, double days, double rate, double vol,
           const std::string& kind) {
            return bs::bs_price(make_inputs(spot, strike, days, rate, vol, kind));
        },
        py::arg("spot"), py::arg("strike"), py::arg("days"), py::arg("rate"), py::arg("vol"),
        py::arg("kind"));
    m.def(
        "bs_greeks",
        [](double spot, double strike, double days, double rate, double vol,
           const std::string& kind) {
            const auto g = bs::bs_greeks(make_inputs(spot, strike, days, rate, vol, kind));
            py::dict out;
            out["delta"] = g.delta;
            out["gamma"] = g.gamma;
            out["theta"] = g.theta;
            out["vega"] = g.vega;
            out["rho"] = g.rho;
            return out;
        },
        py::arg("spot"), py::arg("strike"), py::arg("days"), py::arg("rate"), py::arg("vol"),
        py::arg("kind"));
    m.def(
        "implied_vol",
        [](double price, double spot, double strike, double days, double rate,
           const std::string& kind) {
            return bs::implied_vol(price, make_inputs(spot, strike, days, rate, 0.0, kind));
        },
        py::arg("price"), py::arg("spot"), py::arg("strike"), py::arg("days"), py::arg("rate"),
        py::arg("kind"));
    m.def("norm_cdf", &bs::norm_cdf, py::arg("x"));
    m.def("norm_pdf", &bs::norm_pdf, py::arg("x"));

    // ---- synthetic data and metrics ----------------------------------------

    m.def(
        "generate_csv",
        [](const std::string& path, std::size_t options, std::size_t days, std::uint64_t seed,
           double noise_std, double s0, double mu, double sigma, double rate) {
            market::SyntheticConfig config;
            config.n_options = options;
            config.days_per_option = days;
            config.seed = seed;
            config.noise_std = noise_std;
            config.gbm = {s0, mu, sigma};
            config.rate = rate;
            const auto records = market::generate_synthetic(config);
            market::save_csv(records, path);
            return records.size();
        },
        py::arg("path"), py::arg("options") = 200, py::arg("days") = 60, py::arg("seed") = 0,
        py::arg("noise_std") = 0.0, py::arg("s0") = 2.5, py::arg("mu") = 0.05,
        py::arg("sigma") = 0.2, py::arg("rate") = 0.03,
        "Write a seeded synthetic option CSV; returns the record count.");

    m.def(
        "metrics",
        [](const std::vector<double>& y_true, const std::vector<double>& y_pred) {
            const auto r = evaluation::compute_metrics(y_true, y_pred);
            py::dict out;
            out["n"] = r.n_samples;
            out["mse"] = r.mse;
            out["rmse"] = r.rmse;
            out["map"] = r.map;
            out["mape"] = r.mape ? py::cast(*r.mape) : py::none();
            out["mape_excluded"] = r.mape_excluded;
            out["pcc"] = r.pcc ? py::cast(*r.pcc) : py::none();
            return out;
        },
        py::arg("y_true"), py::arg("y_pred"),
        "MSE / RMSE / MAP / MAPE / PCC; undefined metrics come back as None.");
}
