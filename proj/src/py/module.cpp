#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "simpletrack/association.hpp"
#include "simpletrack/config.hpp"
#include "simpletrack/geometry.hpp"
#include "simpletrack/io.hpp"
#include "simpletrack/metrics.hpp"
#include "simpletrack/motion.hpp"
#include "simpletrack/sim.hpp"
#include "simpletrack/tracker.hpp"

namespace py = pybind11;
namespace st = simpletrack;

namespace {

st::association::MetricKind metric_kind(const std::string& name) {
  if (name == "iou3d") return st::association::MetricKind::IoU3D;
  if (name == "giou3d") return st::association::MetricKind::GIoU3D;
  if (name == "l2") return st::association::MetricKind::L2Bev;
  if (name == "mahalanobis") return st::association::MetricKind::Mahalanobis;
  throw st::ConfigError("unknown metric '" + name +
                        "' (expected iou3d, giou3d, l2, or mahalanobis)");
}

st::association::CostMatrix to_cost_matrix(
    const std::vector<std::vector<double>>& rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r > 0 ? static_cast<int>(rows[0].size()) : 0;
  st::association::CostMatrix m(r, c);
  for (int i = 0; i < r; ++i) {
    if (static_cast<int>(rows[i].size()) != c) {
      throw std::invalid_argument("cost matrix rows have unequal lengths");
    }
    for (int j = 0; j < c; ++j) m.at(i, j) = rows[i][j];
  }
  return m;
}

py::tuple match_tuple(const st::association::MatchResult& result) {
  return py::make_tuple(result.matches, result.unmatched_rows,
                        result.unmatched_cols);
}

st::tracker::TrackerConfig resolve_config(const std::string& spec) {
  if (st::config::is_profile(spec)) return st::config::profile(spec);
  return st::config::load(spec);
}

py::dict class_dict(const st::metrics::ClassReport& r) {
  py::dict d;
  d["class"] = r.class_label;
  d["gt"] = r.gt;
  d["matches"] = r.matches;
  d["fp"] = r.fp;
  d["fn"] = r.fn;
  d["ids"] = r.ids;
  d["ids_wrong_association"] = r.ids_wrong_association;
  d["ids_early_termination"] = r.ids_early_termination;
  d["mota"] = r.mota;
  d["motp"] = r.motp;
  d["ids_pct"] = r.ids_pct;
  d["fp_rate"] = r.fp_rate;
  d["fn_rate"] = r.fn_rate;
  d["recall"] = r.recall;
  if (r.amota) d["amota"] = *r.amota;
  if (r.amotp) d["amotp"] = *r.amotp;
  return d;
}

}  // namespace

PYBIND11_MODULE(_simpletrack, m) {
  m.doc() = "3D multi-object tracking by detection: geometry, Kalman "
            "filtering, association, and file-based pipeline runners";

  py::register_exception<st::ConfigError>(m, "ConfigError");
  py::register_exception<st::SchemaError>(m, "SchemaError");
  py::register_exception<st::ParseError>(m, "ParseError");
  py::register_exception<st::IoError>(m, "IoError");
  py::register_exception<st::EmptyGroundTruth>(m, "EmptyGroundTruth");

  py::class_<st::BBox3D>(m, "BBox3D")
      .def(py::init([](double cx, double cy, double cz, double length,
                       double width, double height, double yaw) {
             return st::make_box(cx, cy, cz, length, width, height, yaw);
           }),
           py::arg("cx"), py::arg("cy"), py::arg("cz"), py::arg("length"),
           py::arg("width"), py::arg("height"), py::arg("yaw") = 0.0)
      .def_readwrite("cx", &st::BBox3D::cx)
      .def_readwrite("cy", &st::BBox3D::cy)
      .def_readwrite("cz", &st::BBox3D::cz)
      .def_readwrite("length", &st::BBox3D::length)
      .def_readwrite("width", &st::BBox3D::width)
      .def_readwrite("height", &st::BBox3D::height)
      .def_readwrite("yaw", &st::BBox3D::yaw)
      .def("volume", &st::BBox3D::volume)
      .def("__repr__", [](const st::BBox3D& b) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "BBox3D(cx=%g, cy=%g, cz=%g, length=%g, width=%g, "
                      "height=%g, yaw=%g)",
                      b.cx, b.cy, b.cz, b.length, b.width, b.height, b.yaw);
        return std::string(buf);
      });

  py::class_<st::Detection>(m, "Detection")
      .def(py::init([](st::BBox3D box, double score, std::string class_label,
                       std::optional<std::pair<double, double>> velocity) {
             st::Detection det;
             det.box = box;
             det.score = score;
             det.class_label = std::move(class_label);
             if (velocity) det.velocity = st::Vec2{velocity->first, velocity->second};
             return det;
           }),
           py::arg("box"), py::arg("score"), py::arg("class_label"),
           py::arg("velocity") = std::nullopt)
      .def_readwrite("box", &st::Detection::box)
      .def_readwrite("score", &st::Detection::score)
      .def_readwrite("class_label", &st::Detection::class_label)
      .def_property(
          "velocity",
          [](const st::Detection& d) -> std::optional<std::pair<double, double>> {
            if (!d.velocity) return std::nullopt;
            return std::make_pair(d.velocity->x, d.velocity->y);
          },
          [](st::Detection& d, std::optional<std::pair<double, double>> v) {
            if (v) d.velocity = st::Vec2{v->first, v->second};
            else d.velocity.reset();
          });

  // Geometry.
  m.def("iou_3d", &st::geometry::iou_3d, py::arg("a"), py::arg("b"));
  m.def("giou_3d", &st::geometry::giou_3d, py::arg("a"), py::arg("b"));
  m.def("bev_intersection_area", &st::geometry::bev_intersection_area,
        py::arg("a"), py::arg("b"));
  m.def("bev_center_distance", &st::geometry::bev_center_distance,
        py::arg("a"), py::arg("b"));
  m.def("nms", &st::geometry::nms, py::arg("detections"),
        py::arg("iou_threshold"),
        "Score-descending non-maximum suppression within one frame/class.");

  // Kalman filtering.
  py::class_<st::motion::KalmanParams>(m, "KalmanParams")
      .def(py::init<>())
      .def_readwrite("initial_variance", &st::motion::KalmanParams::initial_variance)
      .def_readwrite("initial_velocity_variance",
                     &st::motion::KalmanParams::initial_velocity_variance)
      .def_readwrite("process_noise", &st::motion::KalmanParams::process_noise)
      .def_readwrite("velocity_process_noise",
                     &st::motion::KalmanParams::velocity_process_noise)
      .def_readwrite("observation_noise",
                     &st::motion::KalmanParams::observation_noise)
      .def_readwrite("yaw_flip_fix", &st::motion::KalmanParams::yaw_flip_fix);

  py::class_<st::motion::KalmanState>(m, "KalmanState")
      .def_readonly("mean", &st::motion::KalmanState::mean)
      .def_readonly("cov", &st::motion::KalmanState::cov)
      .def("box", &st::motion::KalmanState::box);

  m.def("kf_init", &st::motion::kf_init, py::arg("detection"),
        py::arg("params") = st::motion::KalmanParams{});
  m.def("kf_predict", &st::motion::kf_predict, py::arg("state"), py::arg("dt"),
        py::arg("params") = st::motion::KalmanParams{});
  m.def("kf_update", &st::motion::kf_update, py::arg("state"),
        py::arg("observation"), py::arg("params") = st::motion::KalmanParams{});
  m.def("mahalanobis_distance", &st::motion::mahalanobis_distance,
        py::arg("state"), py::arg("observation"),
        py::arg("params") = st::motion::KalmanParams{});
  m.def(
      "cv_predict",
      [](const st::BBox3D& box, std::pair<double, double> velocity, int dt) {
        return st::motion::cv_predict(box, st::Vec2{velocity.first, velocity.second}, dt);
      },
      py::arg("box"), py::arg("velocity"), py::arg("dt"));

  // Association. Costs are canonical (1 - iou, 1 - giou, raw distance);
  // gated-out pairs hold +inf.
  m.def(
      "cost_matrix",
      [](const std::vector<st::BBox3D>& preds,
         const std::vector<st::Detection>& dets, const std::string& metric,
         std::optional<double> gate) {
        st::association::AssociationMetric am;
        am.kind = metric_kind(metric);
        am.gate = gate.value_or(st::association::default_gate(am.kind));
        const auto m_ = st::association::build_cost_matrix(preds, dets, am);
        std::vector<std::vector<double>> rows(static_cast<size_t>(m_.rows));
        for (int r = 0; r < m_.rows; ++r) {
          rows[static_cast<size_t>(r)].assign(
              m_.data.begin() + static_cast<long>(r) * m_.cols,
              m_.data.begin() + static_cast<long>(r + 1) * m_.cols);
        }
        return rows;
      },
      py::arg("predictions"), py::arg("detections"), py::arg("metric"),
      py::arg("gate") = std::nullopt,
      "Mahalanobis costs need Kalman states and are only available through "
      "the tracker itself.");
  m.def(
      "hungarian",
      [](const std::vector<std::vector<double>>& costs) {
        return match_tuple(st::association::hungarian_match(to_cost_matrix(costs)));
      },
      py::arg("costs"),
      "Minimum-cost assignment; returns (matches, unmatched_rows, "
      "unmatched_cols).");
  m.def(
      "greedy",
      [](const std::vector<std::vector<double>>& costs) {
        return match_tuple(st::association::greedy_match(to_cost_matrix(costs)));
      },
      py::arg("costs"),
      "Cheapest-pair-first assignment; same result shape as hungarian().");

  // Configuration.
  m.def("profile_names", &st::config::profile_names);
  m.def(
      "profile_text",
      [](const std::string& name) {
        return st::config::serialize(st::config::profile(name));
      },
      py::arg("name"), "Canonical key=value text of a built-in profile.");
  m.def(
      "canonicalize_config",
      [](const std::string& text) {
        return st::config::serialize(st::config::parse(text));
      },
      py::arg("text"),
      "Parse, validate, and re-serialize config text in canonical form.");

  // File-based pipeline runners (paths in, paths out; JSONL formats).
  m.def(
      "track_file",
      [](const std::string& dets, const std::string& config,
         const std::string& out, int threads) {
        const auto cfg = resolve_config(config);
        const auto sequences =
            st::tracker::split_sequences(st::io::load_detections(dets));
        const auto stream = st::tracker::process_sequences(sequences, cfg, threads);
        st::io::write_tracks(stream, out);
        return stream.size();
      },
      py::arg("dets"), py::arg("config"), py::arg("out"), py::arg("threads") = 0,
      py::call_guard<py::gil_scoped_release>(),
      "Run the tracker; `config` is a profile name or config file path. "
      "Returns the record count.");
  m.def(
      "evaluate_files",
      [](const std::string& tracks, const std::string& gt, bool interpolate,
         bool amota) {
        st::tracker::TrackStream stream = st::io::load_tracks(tracks);
        const auto gts = st::io::load_gt(gt);
        if (interpolate) stream = st::metrics::interpolate_tracklets(stream);
        const auto report = st::metrics::evaluate(stream, gts, {}, amota);
        py::dict d;
        d["all"] = class_dict(report.all);
        py::dict per_class;
        for (const auto& r : report.per_class) {
          per_class[py::str(r.class_label)] = class_dict(r);
        }
        d["per_class"] = per_class;
        d["report_text"] = st::metrics::format_report(report);
        return d;
      },
      py::arg("tracks"), py::arg("gt"), py::arg("interpolate") = false,
      py::arg("amota") = false,
      "CLEAR-MOT (and optional AMOTA) metrics as a dict.");
  m.def(
      "simulate_file",
      [](const std::string& scenario, const std::string& out_dets,
         const std::string& out_gt, std::uint64_t seed) {
        const auto sc = st::sim::load_scenario(scenario);
        const auto result = st::sim::generate(sc, seed);
        std::vector<st::Frame> frames;
        for (const auto& seq : result.sequences) {
          frames.insert(frames.end(), seq.begin(), seq.end());
        }
        st::io::write_detections(frames, out_dets);
        st::io::write_gt(result.gt, out_gt);
        return std::make_pair(frames.size(), result.gt.size());
      },
      py::arg("scenario"), py::arg("out_dets"), py::arg("out_gt"),
      py::arg("seed"), py::call_guard<py::gil_scoped_release>(),
      "Generate a synthetic scene; returns (frame_count, gt_count).");
}
