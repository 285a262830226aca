#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "pcm/checkpoint.hpp"
#include "pcm/experiments.hpp"
#include "pcm/gcm_oracle.hpp"

namespace py = pybind11;
using namespace pcm;

namespace {

// A loaded model with the box it is minimized over.
struct Model {
  Checkpoint ckpt;
  ModelContext ctx;

  double value(const Vec& x, const Vec& u) const { return model_value(ckpt.model, ctx, x, u); }
  py::tuple minimize(const Vec& x) const {
    const SolveResult s = minimize_model(ckpt.model, ctx, x);
    return py::make_tuple(s.minimizer, s.value, s.converged);
  }
};

}  // namespace

PYBIND11_MODULE(_pcm, m) {
  m.doc() = "Parameterized convex minorant models: evaluation, minimization and experiments.";

  m.def("logsumexp", [](const Vec& v, double t) { return logsumexp(v, t); }, py::arg("values"),
        py::arg("temperature") = 1.0);

  py::class_<LseNet>(m, "LseNet")
      .def(py::init<Mat, Vec, double>(), py::arg("slopes"), py::arg("offsets"),
           py::arg("temperature") = 1.0)
      .def("value", [](const LseNet& n, const Vec& z) { return n.value(z); })
      .def("grad", [](const LseNet& n, const Vec& z) { return n.eval(z).grad; })
      .def("max_affine", [](const LseNet& n, const Vec& z) { return n.as_max_affine().eval(z); })
      .def("minimize", [](const LseNet& n, const Vec& lower, const Vec& upper) {
        const SolveResult s = solve_lse(n, Box(lower, upper), SolverOpts{});
        return py::make_tuple(s.minimizer, s.value, s.converged);
      });

  m.def("lower_convex_envelope", [](const Vec& us, const Vec& fs) {
    return lower_convex_envelope(GridFunction(us, fs)).fs;
  });

  m.def("case1_objective", [](double x, double u) {
    return case1_objective(Vec::Constant(1, x), Vec::Constant(1, u));
  });

  py::class_<Model>(m, "Model")
      .def_property_readonly("kind", [](const Model& md) { return to_string(md.ckpt.kind); })
      .def_property_readonly("num_params", [](const Model& md) { return num_params(md.ckpt.model); })
      .def("value", &Model::value, py::arg("x"), py::arg("u"))
      .def("minimize", &Model::minimize, py::arg("x"),
           "Returns (minimizer, value, converged).");

  m.def(
      "load_model",
      [](const std::string& path, const Vec& u_lower, const Vec& u_upper) {
        return Model{load_checkpoint(path), ModelContext{Box(u_lower, u_upper), SolverOpts{}}};
      },
      py::arg("path"), py::arg("u_lower"), py::arg("u_upper"));

  m.def(
      "init_model",
      [](const std::string& kind, int x_dim, int u_dim, std::uint64_t seed, const Vec& u_lower,
         const Vec& u_upper) {
        NetworkConfig c;
        c.x_dim = x_dim;
        c.u_dim = u_dim;
        const ModelKind k = model_kind_from_string(kind);
        return Model{Checkpoint{k, c, seed, init_network(k, c, seed)},
                     ModelContext{Box(u_lower, u_upper), SolverOpts{}}};
      },
      py::arg("kind"), py::arg("x_dim"), py::arg("u_dim"), py::arg("seed"), py::arg("u_lower"),
      py::arg("u_upper"));

  py::module_ wr = m.def_submodule("wingrock", "Wing-rock plant with the default constants.");
  wr.def("step", [](const Vec& state, double input, double dt) {
    return Vec(wingrock::step_zoh(state, input, dt, wingrock::WingRockConsts{}));
  });
  wr.def("nmpc_objective", [](const Vec& x0, const Vec& xd, const Vec& u) {
    return wingrock::nmpc_objective(x0, xd, u, wingrock::NmpcProblem{}, wingrock::WingRockConsts{});
  });

  m.def(
      "run_experiment",
      [](const std::string& experiment, const std::string& config_path,
         const std::filesystem::path& out_dir) {
        const RunConfig c = load_run_config(config_path, experiment_from_string(experiment));
        std::ostringstream log;
        const RunOutcome out = run_experiment(c, out_dir, log);
        return py::make_tuple(out.ok(), out.files, out.failures, log.str());
      },
      py::arg("experiment"), py::arg("config"), py::arg("out_dir"),
      "Returns (ok, files, failures, log).");

  m.attr("__version__") = library_version();
}
