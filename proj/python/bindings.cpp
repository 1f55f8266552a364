// Python bindings for the ttosim core.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ttosim/driver/run.hpp"
#include "ttosim/models/xxz.hpp"
#include "ttosim/observables/measure.hpp"
#include "ttosim/oracle/exact.hpp"
#include "ttosim/tdvp/evolution.hpp"

namespace py = pybind11;
using namespace ttosim;

namespace {

py::dict record_dict(const observables::MeasurementRecord& r) {
    py::dict d;
    d["t"] = r.time;
    d["z"] = r.z_profile;
    d["current"] = r.current_profile;
    d["S_L"] = r.entropy_left;
    d["S_R"] = r.entropy_right;
    d["S"] = r.entropy_total;
    d["I_LR"] = r.mutual_information;
    d["N_L"] = r.log_negativity;
    d["EoF"] = r.eof ? py::object(py::float_(*r.eof)) : py::object(py::none());
    d["trace"] = r.trace;
    d["max_chi"] = r.max_chi;
    d["K"] = r.kraus;
    d["cum_trunc"] = r.cumulative_truncation;
    return d;
}

py::dict summary_dict(const driver::RunSummary& s) {
    py::dict d;
    d["status"] = s.status == driver::RunStatus::Completed ? "completed" : "interrupted";
    d["records_path"] = s.paths.records;
    d["manifest_path"] = s.paths.manifest;
    d["checkpoint_path"] = s.paths.checkpoint;
    d["steps_done"] = s.steps_done;
    d["total_steps"] = s.total_steps;
    py::list recs;
    for (const auto& r : s.records) recs.append(record_dict(r));
    d["records"] = recs;
    d["cumulative_truncation"] = s.cumulative_truncation;
    d["peak_chi"] = s.progress.peak_chi;
    d["peak_kraus"] = s.progress.peak_kraus;
    d["max_trace_drift"] = s.progress.max_trace_drift;
    d["arrival_time"] = s.arrival_time ? py::object(py::float_(*s.arrival_time)) : py::object(py::none());
    d["crosscheck"] = s.progress.crosscheck.max_deviation;
    return d;
}

driver::RunConfig config_from(const std::string& text) {
    std::istringstream in(text);
    return driver::parse_config(in);
}

// Integrator bundled with the model it was built for.
class Simulator {
public:
    Simulator(const models::XXZParams& p, double dt, Index chi_max, Index kraus_max, double cutoff, bool merge)
        : sites_(p.sites),
          integ_(p.sites > 1 ? models::xxz_hamiltonian(p) : tdvp::HamiltonianSpec{}, models::boundary_drive(p), dt,
                 tto::Caps{chi_max, kraus_max, cutoff}, p.sites, 2, merge) {}

    tdvp::StepDiagnostics step(tto::TTOState& s, bool measure_after) {
        if (s.n_sites() != sites_) throw std::invalid_argument("Simulator.step: state has the wrong number of sites");
        return integ_.step(s, measure_after);
    }
    void flush(tto::TTOState& s) { integ_.flush(s); }
    double dt() const { return integ_.dt(); }

private:
    int sites_;
    tdvp::TrotterIntegrator integ_;
};

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Tree tensor operator simulation of boundary-driven XXZ chains";
    m.attr("__version__") = TTOSIM_VERSION;

    py::register_exception<driver::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<oracle::OracleError>(m, "OracleError", PyExc_RuntimeError);
    py::register_exception<tto::CheckpointError>(m, "CheckpointError", PyExc_IOError);

    py::class_<models::XXZParams>(m, "XXZParams")
        .def(py::init([](int sites, double coupling, double anisotropy, double bath_rate, double drive) {
                 models::XXZParams p{sites, coupling, anisotropy, bath_rate, drive};
                 p.validate();
                 return p;
             }),
             py::arg("sites") = 4, py::arg("coupling") = 1.0, py::arg("anisotropy") = 1.0,
             py::arg("bath_rate") = 1.0, py::arg("drive") = 1.0)
        .def_readwrite("sites", &models::XXZParams::sites)
        .def_readwrite("coupling", &models::XXZParams::coupling)
        .def_readwrite("anisotropy", &models::XXZParams::anisotropy)
        .def_readwrite("bath_rate", &models::XXZParams::bath_rate)
        .def_readwrite("drive", &models::XXZParams::drive);

    py::class_<tto::TTOState>(m, "TTOState")
        .def_static("product", &tto::TTOState::from_product_state, py::arg("local_states"))
        .def_static("named", [](const std::string& name, int sites) {
            return tto::TTOState::from_product_state(models::initial_state(name, sites));
        }, py::arg("name"), py::arg("sites"))
        .def_static("random", &tto::TTOState::random, py::arg("sites"), py::arg("chi"), py::arg("kraus"),
                    py::arg("seed"), py::arg("local_dim") = 2)
        .def_property_readonly("n_sites", &tto::TTOState::n_sites)
        .def_property_readonly("kraus_dim", &tto::TTOState::kraus_dim)
        .def_property_readonly("max_link_dim", &tto::TTOState::max_link_dim)
        .def_property_readonly("cumulative_truncation", &tto::TTOState::cumulative_truncation)
        .def("trace", &tto::TTOState::trace)
        .def("isometry_error", &tto::TTOState::isometry_error)
        .def("density_matrix", &tto::contract_to_dense, "Dense rho = P P^dagger (up to 8 sites)")
        .def("copy", [](const tto::TTOState& s) { return tto::TTOState(s); });

    py::class_<tdvp::StepDiagnostics>(m, "StepDiagnostics")
        .def_readonly("step_truncation", &tdvp::StepDiagnostics::step_truncation)
        .def_readonly("max_chi", &tdvp::StepDiagnostics::max_chi)
        .def_readonly("kraus", &tdvp::StepDiagnostics::kraus)
        .def_readonly("trace_drift", &tdvp::StepDiagnostics::trace_drift);

    py::class_<Simulator>(m, "Simulator")
        .def(py::init<const models::XXZParams&, double, Index, Index, double, bool>(), py::arg("params"),
             py::arg("dt") = 0.025, py::arg("chi_max") = 16, py::arg("kraus_max") = 64, py::arg("cutoff") = 0.0,
             py::arg("merge_unitaries") = false)
        .def("step", &Simulator::step, py::arg("state"), py::arg("measure_after") = true,
             "One symmetric Trotter step, in place")
        .def("flush", &Simulator::flush, py::arg("state"))
        .def_property_readonly("dt", &Simulator::dt);

    m.def("measure", [](const tto::TTOState& s, double t, bool entanglement, bool eof, int restarts) {
        observables::MeasureOptions o;
        o.entanglement = entanglement;
        o.eof = eof;
        o.eof_options.restarts = restarts;
        return record_dict(observables::measure(s, t, o));
    }, py::arg("state"), py::arg("time") = 0.0, py::arg("entanglement") = true, py::arg("eof") = false,
          py::arg("eof_restarts") = 8);
    m.def("local_expectation", &observables::local_expectation, py::arg("state"), py::arg("site"), py::arg("op"));
    m.def("spin_current", &observables::spin_current, py::arg("state"), py::arg("bond"));
    m.def("log_negativity", &observables::log_negativity, py::arg("state"));
    m.def("entropies", [](const tto::TTOState& s) {
        const observables::Entropies e = observables::entropies(s);
        return py::make_tuple(e.left, e.right, e.total);
    }, py::arg("state"), "(S_L, S_R, S) of the normalized state");
    m.def("entanglement_of_formation", [](const tto::TTOState& s, int restarts, double tol, int max_sweeps,
                                          std::uint64_t seed) {
        observables::EofOptions o;
        o.restarts = restarts;
        o.tol = tol;
        o.max_sweeps = max_sweeps;
        o.seed = seed;
        const observables::EofResult r = observables::entanglement_of_formation(s, o);
        return py::make_tuple(r.upper_bound, r.converged);
    }, py::arg("state"), py::arg("restarts") = 8, py::arg("tol") = 1e-10, py::arg("max_sweeps") = 200,
          py::arg("seed") = 0x5eed);

    m.def("pauli_z", &models::pauli_z);
    m.def("raising", &models::raising);
    m.def("lowering", &models::lowering);
    m.def("hamiltonian_matrix", [](const models::XXZParams& p) {
        return tdvp::dense_hamiltonian(models::xxz_hamiltonian(p), p.sites);
    }, py::arg("params"));

    // Exact reference
    m.def("exact_evolve", [](const models::XXZParams& p, const Matrix& rho0, double t) {
        const oracle::Liouvillian l(p.sites > 1 ? models::xxz_hamiltonian(p) : tdvp::HamiltonianSpec{},
                                    models::boundary_drive(p), p.sites);
        return oracle::evolve_exact(l, rho0, t);
    }, py::arg("params"), py::arg("rho0"), py::arg("t"));
    m.def("stationary_state", [](const models::XXZParams& p) {
        const oracle::Liouvillian l(p.sites > 1 ? models::xxz_hamiltonian(p) : tdvp::HamiltonianSpec{},
                                    models::boundary_drive(p), p.sites);
        const oracle::StationaryResult r = oracle::stationary_state(l);
        return py::make_tuple(r.rho, r.residual, r.method);
    }, py::arg("params"), "(rho, residual, method)");
    m.def("dense_observables", [](const Matrix& rho, int sites, double t) {
        return record_dict(oracle::dense_observables(rho, sites, t));
    }, py::arg("rho"), py::arg("sites"), py::arg("time") = 0.0);
    m.def("product_density", &oracle::product_density, py::arg("local_states"));

    // Driver
    m.def("config_to_ini", [](const std::string& text) { return driver::to_ini(config_from(text)); },
          py::arg("ini_text"), "Parse, validate and echo a config with every default filled in");
    m.def("run", [](const std::string& text, const std::string& output_dir) {
        driver::RunConfig c = config_from(text);
        if (!output_dir.empty()) c.output_dir = output_dir;
        driver::RunSummary s;
        {
            py::gil_scoped_release release;
            s = driver::run_quench(c);
        }
        return summary_dict(s);
    }, py::arg("ini_text"), py::arg("output_dir") = "");
    m.def("resume", [](const std::string& checkpoint, std::optional<double> t_max) {
        driver::ResumeOverrides ov;
        ov.t_max = t_max;
        driver::RunSummary s;
        {
            py::gil_scoped_release release;
            s = driver::resume(checkpoint, ov);
        }
        return summary_dict(s);
    }, py::arg("checkpoint"), py::arg("t_max") = std::nullopt);
    m.def("sweep", [](const std::string& text, const std::string& axis, const std::vector<std::string>& values,
                      int threads) {
        const driver::RunConfig c = config_from(text);
        driver::SweepResult r;
        {
            py::gil_scoped_release release;
            r = driver::sweep(c, axis, values, threads);
        }
        py::list out;
        for (const auto& e : r.entries) {
            py::dict d;
            d["value"] = e.value;
            d["ok"] = e.ok;
            d["error"] = e.error;
            d["N_L"] = e.log_negativity;
            d["I_LR"] = e.mutual_information;
            d["J_bulk"] = e.bulk_current;
            out.append(d);
        }
        return py::make_tuple(out, r.summary_path);
    }, py::arg("ini_text"), py::arg("axis"), py::arg("values"), py::arg("threads") = 1);
    m.def("read_records", [](const std::string& path) {
        const driver::RecordTable t = driver::read_records(path);
        return py::make_tuple(t.columns, t.rows);
    }, py::arg("path"), "(columns, rows) of a records CSV");
}
