#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lwpd/assignment.hpp"
#include "lwpd/codebook.hpp"
#include "lwpd/config.hpp"
#include "lwpd/learner.hpp"
#include "lwpd/metrics.hpp"
#include "lwpd/report.hpp"
#include "lwpd/simulator.hpp"

namespace py = pybind11;
using namespace lwpd;

PYBIND11_MODULE(_lwpd, m) {
  m.doc() = "projective derivative codes for asynchronous coded gradient descent";

  // codebook
  py::class_<CodeParams>(m, "CodeParams")
      .def_readonly("n", &CodeParams::n)
      .def_readonly("k", &CodeParams::k)
      .def_readonly("t", &CodeParams::t)
      .def_readonly("s", &CodeParams::s)
      .def_readonly("d", &CodeParams::d)
      .def_readonly("virtual_k", &CodeParams::virtual_k)
      .def_readonly("virtual_n", &CodeParams::virtual_n)
      .def("scheduled", &CodeParams::scheduled);

  py::class_<Codebook>(m, "Codebook")
      .def_readonly("params", &Codebook::params)
      .def_readonly("signs", &Codebook::signs)
      .def("scale", &Codebook::scale)
      .def("row_for", &Codebook::row_for)
      .def("rotation", &Codebook::rotation);

  py::class_<DistanceReport>(m, "DistanceReport")
      .def_readonly("min_distance", &DistanceReport::min_distance)
      .def_readonly("pair_histogram", &DistanceReport::pair_histogram)
      .def_readonly("gap_ratio", &DistanceReport::gap_ratio);

  m.def("make_params", &make_params, py::arg("n"), py::arg("k"), py::arg("t"));
  m.def("char_sign", &char_sign);
  m.def("build_x", &build_x);
  m.def("build_code", py::overload_cast<int, int, int>(&build_code));
  m.def("projective_distance", &projective_distance);
  m.def("analyze_distance", &analyze_distance);
  m.def("format_distance_report", &format_distance_report);
  m.def("weight_distribution", &weight_distribution);
  m.def("find_displacement", &find_displacement);
  m.def("check_coverage", py::overload_cast<int, int, int, long>(&check_coverage));
  m.def("save_codebook", &save_codebook);
  m.def("load_codebook", &load_codebook);

  // assignment
  py::class_<BlockDesc>(m, "BlockDesc")
      .def_readonly("block_id", &BlockDesc::block_id)
      .def_readonly("data_partition", &BlockDesc::data_partition)
      .def_readonly("unpadded_len", &BlockDesc::unpadded_len);

  py::class_<GradientBlockLayout>(m, "GradientBlockLayout")
      .def_readonly("k", &GradientBlockLayout::k)
      .def_readonly("t", &GradientBlockLayout::t)
      .def_readonly("layer_sizes", &GradientBlockLayout::layer_sizes)
      .def_readonly("param_count", &GradientBlockLayout::param_count)
      .def_readonly("block_dim", &GradientBlockLayout::block_dim)
      .def_readonly("blocks", &GradientBlockLayout::blocks)
      .def("output_group", &GradientBlockLayout::output_group)
      .def("data_partition", &GradientBlockLayout::data_partition)
      .def("block_coords", &GradientBlockLayout::block_coords)
      .def_property_readonly("mode",
                             [](const GradientBlockLayout& g) { return mode_name(g.mode); });

  py::class_<ScatterPlan>(m, "ScatterPlan")
      .def_readonly("worker", &ScatterPlan::worker)
      .def_readonly("row", &ScatterPlan::row)
      .def_readonly("entries", &ScatterPlan::entries);

  m.def("param_count_for", &param_count_for);
  m.def(
      "partition_gradient",
      [](const std::vector<int>& layer_sizes, const CodeParams& params, const std::string& mode) {
        return partition_gradient(layer_sizes, params, parse_mode(mode));
      },
      py::arg("layer_sizes"), py::arg("params"), py::arg("mode") = "data-only");
  m.def("partition_spans", &partition_spans);
  m.def("assign_data", &assign_data);
  m.def("scatter_plan", &scatter_plan);
  m.def("save_layout", &save_layout);
  m.def("save_assignment", &save_assignment);

  // learner
  py::class_<Dataset>(m, "Dataset")
      .def_readonly("dim", &Dataset::dim)
      .def_readonly("classes", &Dataset::classes)
      .def_readonly("x", &Dataset::x)
      .def_readonly("y", &Dataset::y)
      .def_readonly("train_count", &Dataset::train_count)
      .def("total", &Dataset::total);

  py::class_<Model>(m, "Model")
      .def_readonly("layer_sizes", &Model::layer_sizes)
      .def_readwrite("w", &Model::w)
      .def_property_readonly("family", [](const Model& m_) { return family_name(m_.family); });

  py::class_<DataSlice>(m, "DataSlice")
      .def_readonly("spans", &DataSlice::spans)
      .def("count", &DataSlice::count);

  py::class_<CodedTaskResult>(m, "CodedTaskResult")
      .def_readonly("worker", &CodedTaskResult::worker)
      .def_readonly("round", &CodedTaskResult::round)
      .def_readonly("v", &CodedTaskResult::v)
      .def_readonly("floats_communicated", &CodedTaskResult::floats_communicated);

  m.def("gen_mixture", &gen_mixture, py::arg("classes"), py::arg("components"), py::arg("dim"),
        py::arg("records"), py::arg("separation"), py::arg("sigma"), py::arg("seed"));
  m.def("save_dataset_csv", &save_dataset_csv);
  m.def("load_dataset_csv", &load_dataset_csv);
  m.def(
      "make_model",
      [](const std::string& family, const std::vector<int>& sizes, std::uint64_t seed) {
        return make_model(parse_family(family), sizes, seed);
      },
      py::arg("family"), py::arg("layer_sizes"), py::arg("seed"));
  m.def("train_slice", &train_slice, py::keep_alive<0, 1>());
  m.def("test_slice", &test_slice, py::keep_alive<0, 1>());
  m.def("partition_slice", &partition_slice, py::keep_alive<0, 1>());
  m.def("partitions_slice", &partitions_slice, py::keep_alive<0, 1>());
  m.def("full_gradient", &full_gradient);
  m.def("block_gradient", &block_gradient);
  m.def("coded_task", &coded_task);
  m.def("eval_loss", &eval_loss);
  m.def("eval_accuracy", &eval_accuracy);

  // config and metrics
  py::class_<DelayModel>(m, "DelayModel")
      .def(py::init<>())
      .def_readwrite("base", &DelayModel::base)
      .def_readwrite("rate", &DelayModel::rate)
      .def_readwrite("straggler_prob", &DelayModel::straggler_prob)
      .def_readwrite("straggler_factor", &DelayModel::straggler_factor)
      .def_readwrite("downlink", &DelayModel::downlink)
      .def_readwrite("uplink", &DelayModel::uplink);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("scheme", &ExperimentConfig::scheme)
      .def_readwrite("n", &ExperimentConfig::n)
      .def_readwrite("k", &ExperimentConfig::k)
      .def_readwrite("t", &ExperimentConfig::t)
      .def_readwrite("mode", &ExperimentConfig::mode)
      .def_readwrite("K", &ExperimentConfig::K)
      .def_readwrite("s_gc", &ExperimentConfig::s_gc)
      .def_readwrite("gc_variant", &ExperimentConfig::gc_variant)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("lr", &ExperimentConfig::lr)
      .def_readwrite("time_budget", &ExperimentConfig::time_budget)
      .def_readwrite("eval_interval", &ExperimentConfig::eval_interval)
      .def_readwrite("eval_every_updates", &ExperimentConfig::eval_every_updates)
      .def_readwrite("family", &ExperimentConfig::family)
      .def_readwrite("layers", &ExperimentConfig::layers)
      .def_readwrite("dataset", &ExperimentConfig::dataset)
      .def_readwrite("classes", &ExperimentConfig::classes)
      .def_readwrite("components", &ExperimentConfig::components)
      .def_readwrite("dim", &ExperimentConfig::dim)
      .def_readwrite("records", &ExperimentConfig::records)
      .def_readwrite("separation", &ExperimentConfig::separation)
      .def_readwrite("sigma", &ExperimentConfig::sigma)
      .def_readwrite("delay", &ExperimentConfig::delay)
      .def_readwrite("dead_workers", &ExperimentConfig::dead_workers)
      .def_readwrite("max_staleness", &ExperimentConfig::max_staleness)
      .def_readwrite("output", &ExperimentConfig::output)
      .def_readwrite("tape_in", &ExperimentConfig::tape_in)
      .def_readwrite("tape_out", &ExperimentConfig::tape_out);

  m.def("load_config", &load_config);
  m.def("parse_config_text", &parse_config_text);
  m.def("save_config", &save_config);
  m.def("validate_config", &validate_config);

  py::class_<MetricsRecord>(m, "MetricsRecord")
      .def(py::init<>())
      .def_readwrite("scheme", &MetricsRecord::scheme)
      .def_readwrite("seed", &MetricsRecord::seed)
      .def_readwrite("sim_time", &MetricsRecord::sim_time)
      .def_readwrite("updates", &MetricsRecord::updates)
      .def_readwrite("test_loss", &MetricsRecord::test_loss)
      .def_readwrite("test_accuracy", &MetricsRecord::test_accuracy)
      .def_readwrite("train_loss", &MetricsRecord::train_loss)
      .def_readwrite("comm_floats", &MetricsRecord::comm_floats)
      .def_readwrite("decode_mults", &MetricsRecord::decode_mults);

  m.def("metrics_header", &metrics_header);
  m.def("format_metrics_row", &format_metrics_row);
  m.def("save_metrics_csv", &save_metrics_csv);
  m.def("load_metrics_csv", &load_metrics_csv);

  // simulator
  py::class_<DelayDraw>(m, "DelayDraw")
      .def(py::init<>())
      .def_readwrite("straggler", &DelayDraw::straggler)
      .def_readwrite("jitter", &DelayDraw::jitter);

  py::class_<DelayTape>(m, "DelayTape")
      .def(py::init<std::uint64_t, double, double>(), py::arg("seed"), py::arg("straggler_prob"),
           py::arg("rate"))
      .def("draw", &DelayTape::draw)
      .def("export_tape", &DelayTape::export_tape, py::arg("path"), py::arg("workers") = -1,
           py::arg("rounds") = -1)
      .def("import_tape", &DelayTape::import_tape);

  py::class_<MasterCounters>(m, "MasterCounters")
      .def_readonly("decode_mults", &MasterCounters::decode_mults)
      .def_readonly("decode_adds", &MasterCounters::decode_adds)
      .def_readonly("lr_scalings", &MasterCounters::lr_scalings)
      .def_readonly("comm_floats", &MasterCounters::comm_floats)
      .def_readonly("updates", &MasterCounters::updates);

  py::class_<SimContext>(m, "SimContext")
      .def_readonly("cb", &SimContext::cb)
      .def_readonly("layout", &SimContext::layout)
      .def_readonly("data", &SimContext::data)
      .def_readonly("model0", &SimContext::model0)
      .def_readonly("tape", &SimContext::tape);

  m.def("delay_seconds", &delay_seconds);
  m.def("prepare_context", &prepare_context);

  auto wrap_run = [](auto fn) {
    return [fn](const ExperimentConfig& cfg, const SimContext& ctx) {
      MasterCounters c;
      Model f;
      std::vector<MetricsRecord> rows = fn(cfg, ctx, &c, &f);
      return py::make_tuple(rows, c, f);
    };
  };
  m.def("run_lwpd", wrap_run(&run_lwpd));
  m.def("run_kac", wrap_run(&run_kac));
  m.def("run_gc", wrap_run(&run_gc));
  m.def("run_centralized", wrap_run(&run_centralized));
  m.def("run_scheme", [](const ExperimentConfig& cfg) {
    MasterCounters c;
    std::vector<MetricsRecord> rows = run_scheme(cfg, &c);
    return py::make_tuple(rows, c);
  });
  m.def("gc_encode_matrix", &gc_encode_matrix);
  m.def("gc_decode_coeffs", [](const std::vector<std::vector<double>>& code,
                               const std::vector<int>& arrived) {
    long long mults = 0;
    std::vector<double> coeffs = gc_decode_coeffs(code, arrived, &mults);
    return py::make_tuple(coeffs, mults);
  });

  // report
  py::class_<SchemeCurve>(m, "SchemeCurve")
      .def_readonly("scheme", &SchemeCurve::scheme)
      .def_readonly("seeds", &SchemeCurve::seeds)
      .def_readonly("points", &SchemeCurve::points);

  py::class_<ReportOutput>(m, "ReportOutput")
      .def_readonly("table", &ReportOutput::table)
      .def_readonly("svg", &ReportOutput::svg);

  m.def("median_curves", &median_curves);
  m.def("render_report", &render_report, py::arg("rows"), py::arg("log_loss") = false);
}
