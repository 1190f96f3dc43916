// Python bindings: the numeric kernels, the data pipeline, and the
// train/evaluate entry points, with numpy in and out.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mgnm/checkpoint.hpp"
#include "mgnm/dataio.hpp"
#include "mgnm/evaluator.hpp"
#include "mgnm/gradcheck.hpp"
#include "mgnm/rng.hpp"
#include "mgnm/trainer.hpp"

namespace py = pybind11;
using namespace mgnm;

namespace {

Tensor tensor_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  std::vector<int> shape;
  for (py::ssize_t i = 0; i < a.ndim(); ++i) shape.push_back(static_cast<int>(a.shape(i)));
  std::vector<double> data(a.data(), a.data() + a.size());
  return Tensor(std::move(shape), std::move(data));
}

py::array_t<double> tensor_to_numpy(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<double> out(shape);
  std::copy(t.data(), t.data() + t.size(), out.mutable_data());
  return out;
}

// Runs the named unary op through the tape so the bindings exercise the same
// code path the trainer uses.
py::array_t<double> run_op(const std::function<Var(Tape&, Var)>& op, const py::array_t<double>& a) {
  Tape tape(false);
  Var x = tape.constant(tensor_from_numpy(a));
  return tensor_to_numpy(tape.value(op(tape, x)));
}

const std::vector<data::InteractionSequence>& pick_split(const data::DatasetSplit& split,
                                                         const std::string& name) {
  if (name == "train") return split.train;
  if (name == "validation") return split.validation;
  if (name == "test") return split.test;
  throw std::invalid_argument("unknown split '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_mgnm, m) {
  m.doc() = "multi-grained sequential recommender core";

  py::class_<model::Hyperparameters>(m, "Hyperparameters")
      .def(py::init<>())
      .def_readwrite("learning_rate", &model::Hyperparameters::learning_rate)
      .def_readwrite("batch_size", &model::Hyperparameters::batch_size)
      .def_readwrite("train_negatives", &model::Hyperparameters::train_negatives)
      .def_readwrite("embedding_dim", &model::Hyperparameters::embedding_dim)
      .def_readwrite("num_interests", &model::Hyperparameters::num_interests)
      .def_readwrite("num_layers", &model::Hyperparameters::num_layers)
      .def_readwrite("tau", &model::Hyperparameters::tau)
      .def_readwrite("theta1", &model::Hyperparameters::theta1)
      .def_readwrite("theta2", &model::Hyperparameters::theta2)
      .def_readwrite("capacity", &model::Hyperparameters::capacity)
      .def_readwrite("epochs", &model::Hyperparameters::epochs)
      .def_readwrite("seed", &model::Hyperparameters::seed)
      .def_readwrite("leaky_slope", &model::Hyperparameters::leaky_slope)
      .def_readwrite("eval_negatives", &model::Hyperparameters::eval_negatives)
      .def_readwrite("val_negatives", &model::Hyperparameters::val_negatives)
      .def_readwrite("metric_k", &model::Hyperparameters::metric_k)
      .def_readwrite("patience", &model::Hyperparameters::patience)
      .def_readwrite("threads", &model::Hyperparameters::threads)
      .def("validate", &model::Hyperparameters::validate);

  py::class_<data::DatasetSplit>(m, "DatasetSplit")
      .def_property_readonly("num_users", &data::DatasetSplit::num_users)
      .def_property_readonly("num_items", &data::DatasetSplit::num_items)
      .def_readonly("capacity", &data::DatasetSplit::capacity)
      .def_readonly("padding_index", &data::DatasetSplit::padding_index)
      .def_property_readonly("train_size",
                             [](const data::DatasetSplit& s) { return s.train.size(); })
      .def_property_readonly("validation_size",
                             [](const data::DatasetSplit& s) { return s.validation.size(); })
      .def_property_readonly("test_size",
                             [](const data::DatasetSplit& s) { return s.test.size(); });

  py::class_<model::ModelParameters>(m, "ModelParameters")
      .def_property_readonly("embedding_dim", &model::ModelParameters::embedding_dim)
      .def("names",
           [](const model::ModelParameters& p) {
             std::vector<std::string> names;
             for (const auto& [name, t] : p.tensors) names.push_back(name);
             return names;
           })
      .def("tensor", [](const model::ModelParameters& p, const std::string& name) {
        return tensor_to_numpy(p.at(name));
      });

  py::class_<eval::MetricsReport>(m, "MetricsReport")
      .def_readonly("gauc", &eval::MetricsReport::gauc)
      .def_readonly("ndcg_at_k", &eval::MetricsReport::ndcg_at_k)
      .def_readonly("hit_at_k", &eval::MetricsReport::hit_at_k)
      .def_readonly("mrr_at_k", &eval::MetricsReport::mrr_at_k)
      .def_readonly("k", &eval::MetricsReport::k)
      .def_readonly("instances", &eval::MetricsReport::instances)
      .def("to_json", &eval::MetricsReport::to_json);

  py::class_<train::TrainResult>(m, "TrainResult")
      .def_readonly("best_epoch", &train::TrainResult::best_epoch)
      .def_readonly("best_val_ndcg", &train::TrainResult::best_val_ndcg)
      .def_readonly("final_train_loss", &train::TrainResult::final_train_loss)
      .def_property_readonly("params",
                             [](const train::TrainResult& r) { return r.params; })
      .def("epoch_losses", [](const train::TrainResult& r) {
        std::vector<double> losses;
        for (const train::EpochLog& e : r.log) losses.push_back(e.train_loss);
        return losses;
      });

  m.def(
      "generate_synthetic",
      [](int users, int items, int interests, int seq_len, double noise, std::uint64_t seed,
         int clusters) {
        data::SyntheticDataset ds =
            data::generate_synthetic(users, items, interests, seq_len, noise, seed, clusters);
        return py::make_tuple(ds.split, ds.item_cluster);
      },
      py::arg("users"), py::arg("items"), py::arg("interests"), py::arg("seq_len"),
      py::arg("noise"), py::arg("seed"), py::arg("clusters") = 10);
  m.def("load_split", &data::load_split, py::arg("dir"));
  m.def("save_split", &data::save_split, py::arg("split"), py::arg("dir"));

  m.def(
      "train",
      [](const data::DatasetSplit& split, const model::Hyperparameters& hp,
         const std::string& ablation) {
        return train::train(split, hp, model::ablation_from_string(ablation));
      },
      py::arg("split"), py::arg("hp"), py::arg("ablation") = "full",
      py::call_guard<py::gil_scoped_release>());

  m.def(
      "evaluate",
      [](const model::ModelParameters& params, const data::DatasetSplit& split,
         const model::Hyperparameters& hp, const std::string& ablation,
         const std::string& split_name, int negatives, std::uint64_t seed, bool sum_pool) {
        eval::EvalOptions opt;
        opt.negatives = std::min(negatives, split.num_items() - 1);
        opt.seed = seed;
        opt.sum_pool_inference = sum_pool;
        return eval::evaluate(params, split, pick_split(split, split_name), hp,
                              model::ablation_from_string(ablation), opt);
      },
      py::arg("params"), py::arg("split"), py::arg("hp"), py::arg("ablation") = "full",
      py::arg("split_name") = "test", py::arg("negatives") = 100, py::arg("seed") = 0,
      py::arg("sum_pool") = false, py::call_guard<py::gil_scoped_release>());

  m.def("save_checkpoint", &ckpt::save, py::arg("params"), py::arg("path"));
  m.def("load_checkpoint", &ckpt::load, py::arg("path"));

  m.def("sigmoid",
        [](const py::array_t<double>& a) {
          return run_op([](Tape&, Var x) { return ops::sigmoid(x); }, a);
        });
  m.def("softmax",
        [](const py::array_t<double>& a) {
          return run_op([](Tape&, Var x) { return ops::softmax(x); }, a);
        });
  m.def("squash",
        [](const py::array_t<double>& a) {
          return run_op([](Tape&, Var x) { return ops::squash(x); }, a);
        });
  m.def(
      "leaky_relu",
      [](const py::array_t<double>& a, double slope) {
        return run_op([slope](Tape&, Var x) { return ops::leaky_relu(x, slope); }, a);
      },
      py::arg("x"), py::arg("slope") = 0.01);
  m.def(
      "matmul",
      [](const py::array_t<double>& a, const py::array_t<double>& b) {
        Tape tape(false);
        Var out = ops::matmul(tape.constant(tensor_from_numpy(a)),
                              tape.constant(tensor_from_numpy(b)));
        return tensor_to_numpy(tape.value(out));
      });
  m.def("truncated_normal",
        [](std::vector<int> shape, double sigma, std::uint64_t seed) {
          return tensor_to_numpy(truncated_normal_tensor(std::move(shape), sigma, seed));
        });
  m.def("mix_seed", [](std::uint64_t a, std::uint64_t b) { return mix_seed(a, b); });

  m.def(
      "grad_check_op",
      [](const std::string& name, const py::array_t<double>& point,
         const py::array_t<double>& cotangent, double tolerance) {
        const Tensor cot = tensor_from_numpy(cotangent);
        std::function<Var(Tape&, Var)> op;
        if (name == "sigmoid")
          op = [](Tape&, Var x) { return ops::sigmoid(x); };
        else if (name == "softmax")
          op = [](Tape&, Var x) { return ops::softmax(x); };
        else if (name == "squash")
          op = [](Tape&, Var x) { return ops::squash(x); };
        else if (name == "tanh")
          op = [](Tape&, Var x) { return ops::tanh_op(x); };
        else if (name == "leaky_relu")
          op = [](Tape&, Var x) { return ops::leaky_relu(x, 0.01); };
        else
          throw std::invalid_argument("grad_check_op: unknown op '" + name + "'");
        GradCheckReport r = grad_check(
            name, [&](Tape& t, Var x) { return ops::dot(op(t, x), t.constant(cot)); },
            tensor_from_numpy(point), tolerance);
        py::dict d;
        d["op"] = r.op_name;
        d["max_rel_error"] = r.max_rel_error;
        d["passed"] = r.passed;
        return d;
      },
      py::arg("name"), py::arg("point"), py::arg("cotangent"), py::arg("tolerance") = 1e-4);
}
