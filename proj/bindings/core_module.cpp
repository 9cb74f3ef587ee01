// Python bindings for the core clustering operations.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rffkm/features.hpp"
#include "rffkm/kpkm.hpp"
#include "rffkm/metrics.hpp"
#include "rffkm/mkpkm.hpp"
#include "rffkm/oracles.hpp"
#include "rffkm/powermeans.hpp"

namespace py = pybind11;
using namespace rffkm;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Scalable kernel power k-means with random Fourier features";

    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);

    py::class_<KernelSpec>(m, "KernelSpec")
        .def(py::init<>())
        .def(py::init([](double bandwidth) { return KernelSpec{bandwidth}; }),
             py::arg("bandwidth"))
        .def_readwrite("bandwidth", &KernelSpec::bandwidth);

    py::class_<PowerSchedule>(m, "PowerSchedule")
        .def(py::init<>())
        .def(py::init([](double s0, double gamma, int cadence, double s_floor) {
                 return PowerSchedule{s0, gamma, cadence, s_floor};
             }),
             py::arg("s0") = -15.0, py::arg("gamma") = 1.04,
             py::arg("cadence") = 3, py::arg("s_floor") = -1e6)
        .def_readwrite("s0", &PowerSchedule::s0)
        .def_readwrite("gamma", &PowerSchedule::gamma)
        .def_readwrite("cadence", &PowerSchedule::cadence)
        .def_readwrite("s_floor", &PowerSchedule::s_floor)
        .def("advance", &PowerSchedule::advance, py::arg("s"),
             py::arg("iteration"));

    py::class_<RffMap>(m, "RffMap")
        .def_readonly("frequencies", &RffMap::frequencies)
        .def_readonly("seed", &RffMap::seed)
        .def_property_readonly("bandwidth",
                               [](const RffMap& map) { return map.kernel.bandwidth; })
        .def_property_readonly("feature_dim", &RffMap::feature_dim)
        .def_property_readonly("input_dim", &RffMap::input_dim);

    m.def("gaussian_kernel",
          [](const Eigen::VectorXd& x, const Eigen::VectorXd& y, double sigma) {
              return gaussian_kernel(x, y, KernelSpec{sigma});
          },
          py::arg("x"), py::arg("y"), py::arg("sigma") = 1e3);
    m.def("sample_rff",
          [](int input_dim, int feature_dim, double sigma, std::uint64_t seed) {
              return sample_rff(input_dim, feature_dim, KernelSpec{sigma}, seed);
          },
          py::arg("input_dim"), py::arg("feature_dim"), py::arg("sigma") = 1e3,
          py::arg("seed") = 0);
    m.def("map_features",
          [](const Eigen::MatrixXd& X, const RffMap& map) {
              return map_features(X, map);
          },
          py::arg("X"), py::arg("map"));
    m.def("recommended_dim", &recommended_dim, py::arg("k"));

    m.def("power_mean",
          [](const Eigen::VectorXd& y, double s) { return power_mean(y, s); },
          py::arg("y"), py::arg("s"));
    m.def("gradient_weights",
          [](const Eigen::VectorXd& y, double s) {
              return gradient_weights(y, s);
          },
          py::arg("y"), py::arg("s"));

    py::class_<KpkmResult>(m, "KpkmResult")
        .def_readonly("membership", &KpkmResult::membership)
        .def_readonly("centroids", &KpkmResult::centroids)
        .def_readonly("assignments", &KpkmResult::assignments)
        .def_readonly("iterations", &KpkmResult::iterations)
        .def_readonly("converged", &KpkmResult::converged)
        .def_property_readonly("objective_trace", [](const KpkmResult& r) {
            std::vector<std::tuple<int, double, double>> out;
            for (const auto& p : r.trace) {
                out.emplace_back(p.iteration, p.s, p.objective);
            }
            return out;
        });

    m.def("fit_kpkm",
          [](const Eigen::MatrixXd& X, int k, double sigma, int dim,
             const PowerSchedule& schedule, std::uint64_t seed, double tol,
             int max_iter) {
              KpkmOptions opts;
              opts.k = k;
              opts.rff_dim = dim;
              opts.kernel.bandwidth = sigma;
              opts.schedule = schedule;
              opts.seed = seed;
              opts.tol = tol;
              opts.max_iter = max_iter;
              return fit_kpkm(X, opts);
          },
          py::arg("X"), py::arg("k"), py::arg("sigma") = 1e3,
          py::arg("dim") = 0,
          py::arg("schedule") = PowerSchedule{-15.0, 1.04, 3, -1e6},
          py::arg("seed") = 0, py::arg("tol") = 1e-6,
          py::arg("max_iter") = 300);

    py::class_<MkpkmResult>(m, "MkpkmResult")
        .def_readonly("assignments", &MkpkmResult::assignments)
        .def_readonly("iterations", &MkpkmResult::iterations)
        .def_readonly("converged", &MkpkmResult::converged)
        .def_property_readonly("view_weights",
                               [](const MkpkmResult& r) {
                                   return r.state.view_weights;
                               })
        .def_property_readonly("typicality",
                               [](const MkpkmResult& r) {
                                   return r.state.typicality;
                               })
        .def_property_readonly("objective_trace", [](const MkpkmResult& r) {
            std::vector<std::tuple<int, double, double>> out;
            for (const auto& p : r.trace) {
                out.emplace_back(p.iteration, p.s, p.objective);
            }
            return out;
        });

    m.def("fit_mkpkm",
          [](const std::vector<Eigen::MatrixXd>& views,
             std::vector<double> sigmas, int k, double fuzziness,
             double lambda, int dim, const PowerSchedule& schedule,
             std::uint64_t seed, double tol, int max_iter,
             bool freeze_typicality) {
              MkpkmOptions opts;
              opts.k = k;
              if (dim > 0) opts.rff_dims.assign(views.size(), dim);
              opts.fuzziness = fuzziness;
              opts.lambda = lambda;
              opts.schedule = schedule;
              opts.seed = seed;
              opts.tol = tol;
              opts.max_iter = max_iter;
              opts.freeze_typicality = freeze_typicality;
              std::vector<KernelSpec> specs;
              if (sigmas.empty()) sigmas.assign(views.size(), 1e3);
              for (double s : sigmas) specs.push_back(KernelSpec{s});
              return fit_mkpkm(views, specs, opts);
          },
          py::arg("views"), py::arg("sigmas") = std::vector<double>{},
          py::arg("k") = 2, py::arg("fuzziness") = 2.0,
          py::arg("lambda_") = 1.0, py::arg("dim") = 0,
          py::arg("schedule") = PowerSchedule{-15.0, 1.04, 2, -1e6},
          py::arg("seed") = 0, py::arg("tol") = 1e-6,
          py::arg("max_iter") = 300, py::arg("freeze_typicality") = false);

    m.def("accuracy", &accuracy, py::arg("pred"), py::arg("truth"));
    m.def("nmi", &nmi, py::arg("pred"), py::arg("truth"));
    m.def("purity", &purity, py::arg("pred"), py::arg("truth"));

    m.def("make_blobs",
          [](int n, int k, int dim, double separation, double noise_fraction,
             double outlier_scale, std::uint64_t seed) {
              const BlobData blobs = make_blobs(n, k, dim, separation,
                                                noise_fraction, outlier_scale,
                                                seed);
              return py::make_tuple(blobs.X, blobs.labels, blobs.inlier_count);
          },
          py::arg("n"), py::arg("k"), py::arg("dim") = 2,
          py::arg("separation") = 10.0, py::arg("noise_fraction") = 0.0,
          py::arg("outlier_scale") = 0.0, py::arg("seed") = 0);

    m.def("kernel_matrix",
          [](const Eigen::MatrixXd& X, double sigma) {
              return kernel_matrix(X, KernelSpec{sigma});
          },
          py::arg("X"), py::arg("sigma") = 1e3);
    m.def("kkm_cost_euclidean", &kkm_cost_euclidean, py::arg("rows"),
          py::arg("assignments"));
    m.def("kkm_cost_kernel",
          [](const Eigen::MatrixXd& K, const std::vector<int>& assignments) {
              return kkm_cost_kernel(K, assignments);
          },
          py::arg("K"), py::arg("assignments"));
}
