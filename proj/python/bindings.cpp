#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "robustlab/corruption.hpp"
#include "robustlab/error.hpp"
#include "robustlab/harness/config.hpp"
#include "robustlab/harness/experiment.hpp"
#include "robustlab/losses.hpp"
#include "robustlab/metrics.hpp"
#include "robustlab/mlp.hpp"
#include "robustlab/robust_grad.hpp"
#include "robustlab/theory.hpp"
#include "robustlab/training.hpp"

namespace py = pybind11;
using namespace robustlab;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
    if (a.ndim() != 2) {
        throw ContractViolation("expected a 2-d array");
    }
    const auto rows = static_cast<std::size_t>(a.shape(0));
    const auto cols = static_cast<std::size_t>(a.shape(1));
    return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Array to_array(const Matrix& m) {
    Array out({m.rows(), m.cols()});
    std::copy(m.data(), m.data() + m.size(), out.mutable_data());
    return out;
}

Array to_array(const Vector& v) {
    Array out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

Vector to_vector(const Array& a) {
    if (a.ndim() != 1) {
        throw ContractViolation("expected a 1-d array");
    }
    return Vector(a.data(), a.data() + a.size());
}

LossKind loss_kind(const std::string& name) { return parse_loss_kind(name); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

    py::class_<MlpParams>(m, "Mlp")
        .def_property_readonly("param_count", &MlpParams::param_count)
        .def_property_readonly("input_dim", &MlpParams::input_dim)
        .def_property_readonly("output_dim", &MlpParams::output_dim)
        .def("forward", [](const MlpParams& p, const Array& X) { return to_array(forward(p, to_matrix(X))); })
        .def("flatten", [](const MlpParams& p) { return to_array(flatten(p)); });

    m.def(
        "init_mlp",
        [](const std::vector<std::size_t>& widths, const std::string& activation, std::uint64_t seed) {
            const auto act = activation == "identity" ? Activation::identity : Activation::leaky_relu;
            if (activation != "identity" && activation != "leaky_relu") {
                throw ContractViolation("unknown activation " + activation);
            }
            return init_mlp(widths, act, seed);
        },
        py::arg("widths"), py::arg("activation") = "leaky_relu", py::arg("seed") = 0);

    m.def(
        "loss",
        [](const std::string& kind, const Array& outputs, const Array& targets, double delta) {
            const auto e = loss_and_layer_grad({loss_kind(kind), delta}, to_matrix(outputs), to_matrix(targets));
            return py::make_tuple(to_array(e.per_sample), to_array(e.layer_grad));
        },
        py::arg("kind"), py::arg("outputs"), py::arg("targets"), py::arg("huber_delta") = 1.0);

    m.def(
        "corrupt",
        [](const Array& X, const Array& Y, const std::string& kind, double rate, std::uint64_t seed,
           bool classification) {
            const CorruptionSpec spec{parse_corruption_kind(kind), rate, seed};
            const auto r = corrupt(to_matrix(X), to_matrix(Y), spec,
                                   classification ? TargetKind::classification : TargetKind::regression);
            return py::make_tuple(to_array(r.targets), r.report.corrupted_indices);
        },
        py::arg("X"), py::arg("Y"), py::arg("kind"), py::arg("rate"), py::arg("seed") = 0,
        py::arg("classification") = false);

    m.def(
        "select_by_norm",
        [](const Array& scores, double tau) {
            const auto s = select_by_norm(to_vector(scores), tau);
            return py::make_tuple(s.kept, s.dropped);
        },
        py::arg("scores"), py::arg("tau"));
    m.def("drop_count", &drop_count, py::arg("m"), py::arg("tau"));
    m.def("filtered_mean_full", [](const Array& G, double tau) { return to_array(filtered_mean_full(to_matrix(G), tau)); },
          py::arg("G"), py::arg("tau"));
    m.def("coordinate_median", [](const Array& G) { return to_array(coordinate_median(to_matrix(G))); });
    m.def("drop_schedule", &drop_schedule, py::arg("epoch"), py::arg("tau_max"), py::arg("ramp_epochs"));

    m.def("r_square", [](const Array& pred, const Array& target) { return r_square(to_matrix(pred), to_matrix(target)); });
    m.def("accuracy",
          [](const Array& logits, const Array& target) { return accuracy(to_matrix(logits), to_matrix(target)); });

    m.def(
        "lemma1_bound", [](double C, double k, double v, double eps) { return theory::lemma1_bound({C, k, v, eps}); },
        py::arg("C"), py::arg("k"), py::arg("v"), py::arg("eps"));
    m.def("theorem2_bound", &theory::theorem2_bound, py::arg("C"), py::arg("k"), py::arg("eps"));
    m.def("corollary1_bound", &theory::corollary1_bound, py::arg("L"), py::arg("eps"));
    m.def(
        "lemma2_condition",
        [](const Array& alpha, const Array& beta, std::size_t k) {
            return theory::lemma2_condition(to_vector(alpha), to_vector(beta), k);
        },
        py::arg("alpha"), py::arg("beta"), py::arg("k"));
    m.def("pl_counterexample", [] {
        const auto ex = theory::pl_counterexample();
        py::dict d;
        d["losses"] = py::make_tuple(ex.first.loss, ex.second.loss);
        d["grad_norms"] = py::make_tuple(ex.first.grad_norm, ex.second.grad_norm);
        d["orderings_opposite"] = ex.orderings_opposite;
        return d;
    });

    m.def(
        "run_experiment",
        [](const std::string& config_json) {
            const auto cfg = harness::parse_config(nlohmann::json::parse(config_json));
            harness::ExperimentResult result;
            {
                py::gil_scoped_release release;
                result = harness::run_experiment(cfg);
            }
            py::list rows;
            for (const auto& run : result.runs) {
                py::dict d;
                d["method"] = run.row.method;
                d["corruption"] = run.row.corruption;
                d["true_eps"] = run.row.true_eps;
                d["assumed_eps"] = run.row.assumed_eps;
                d["seed"] = run.row.seed;
                d["final_metric"] = run.row.final_metric;
                d["metric_std"] = run.row.metric_std;
                py::list trace;
                for (const auto& e : run.trace.epochs) {
                    trace.append(e.eval_metric);
                }
                d["eval_metric"] = trace;
                rows.append(d);
            }
            return rows;
        },
        py::arg("config_json"));
}
