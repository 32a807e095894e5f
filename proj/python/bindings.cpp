#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "uiactions/augmentation.hpp"
#include "uiactions/dataset.hpp"
#include "uiactions/metrics.hpp"
#include "uiactions/pipeline.hpp"
#include "uiactions/postprocess.hpp"
#include "uiactions/similarity.hpp"
#include "uiactions/synthetic.hpp"
#include "uiactions/tap_model.hpp"
#include "uiactions/trace.hpp"

namespace py = pybind11;
using namespace uiactions;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

RgbImage to_image(const U8Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw Error("expected an HxWx3 uint8 array");
  RgbImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::memcpy(img.bytes().data(), a.data(), img.bytes().size());
  return img;
}

U8Array to_array(const RgbImage& img) {
  U8Array a({img.height(), img.width(), 3});
  std::memcpy(a.mutable_data(), img.bytes().data(), img.bytes().size());
  return a;
}

FrameSeries to_series(const std::vector<U8Array>& frames, double fps, const std::string& id) {
  std::vector<RgbImage> images;
  images.reserve(frames.size());
  for (const auto& f : frames) images.push_back(to_image(f));
  return FrameSeries::from_images(std::move(images), fps, id);
}

// JSON crosses the boundary as text; the Python package parses it.
std::string text(const nlohmann::json& j) { return j.dump(); }

std::vector<ActionType> actions_from(const std::vector<std::string>& names) {
  std::vector<ActionType> out;
  for (const auto& n : names) out.push_back(parse_action_type(n));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the uiactions toolkit";
  py::register_exception<Error>(m, "UiActionsError", PyExc_ValueError);

  m.def("ssim_rgb", [](const U8Array& a, const U8Array& b) { return ssim(rgb_to_luma(to_image(a)), rgb_to_luma(to_image(b))); },
        py::arg("a"), py::arg("b"), "Luminance SSIM of two RGB frames.");

  m.def("segment",
        [](const std::vector<U8Array>& frames, double fps, const std::string& video_id, const std::string& config) {
          const auto cfg = config.empty() ? PipelineConfig{} : PipelineConfig::from_json(nlohmann::json::parse(config));
          return text(serialize_trace(segment_video(to_series(frames, fps, video_id), cfg)));
        },
        py::arg("frames"), py::arg("fps"), py::arg("video_id") = "video", py::arg("config") = "",
        "Segments frames into a trace; returns trace JSON text.");

  m.def("segment_path",
        [](const std::filesystem::path& path, const std::string& config) {
          const auto cfg = config.empty() ? PipelineConfig{} : PipelineConfig::from_json(nlohmann::json::parse(config));
          return text(serialize_trace(segment_video(load_video(path), cfg)));
        },
        py::arg("path"), py::arg("config") = "");

  m.def("levenshtein_score",
        [](const std::vector<std::string>& ours, const std::vector<std::string>& gt) {
          return levenshtein_score(actions_from(ours), actions_from(gt));
        },
        py::arg("ours"), py::arg("gt"));

  m.def("video_f1",
        [](const std::vector<std::pair<double, double>>& ours, const std::vector<std::pair<double, double>>& gt) {
          const auto conv = [](const auto& v) {
            std::vector<TimeInterval> out;
            for (const auto& [a, b] : v) out.push_back({a, b});
            return out;
          };
          return video_f1(conv(ours), conv(gt));
        },
        py::arg("ours"), py::arg("gt"), "Intervals are (start_s, end_s) pairs.");

  m.def("dbscan",
        [](const std::vector<std::tuple<double, double, double>>& pts, double eps, int min_pts) {
          std::vector<ScoredPoint> sp;
          for (const auto& [x, y, c] : pts) sp.push_back({x, y, c});
          return dbscan(sp, ClusterConfig{eps, min_pts});
        },
        py::arg("points"), py::arg("eps") = 40.0, py::arg("min_pts") = 1,
        "Labels for (x, y, confidence) points in pixels.");

  m.def("tailored_loss",
        [](double x, double y, std::array<double, 2> logits, std::array<double, 4> bounds, int label) {
          LossGradient g;
          const auto l = tailored_loss(x, y, logits, BoundingBox(bounds[0], bounds[1], bounds[2], bounds[3]), label, &g);
          return py::dict(py::arg("loss_cls") = l.loss_cls, py::arg("loss_reg_x") = l.loss_reg_x,
                          py::arg("loss_reg_y") = l.loss_reg_y, py::arg("total") = l.total,
                          py::arg("grad_x") = g.x, py::arg("grad_y") = g.y, py::arg("grad_logits") = g.logits);
        },
        py::arg("x"), py::arg("y"), py::arg("logits"), py::arg("bounds"), py::arg("label"));

  m.def("render_video",
        [](std::uint64_t seed, int actions) {
          auto r = synth::render_video(synth::random_script(seed, actions));
          std::vector<U8Array> frames;
          for (const auto& f : r.frames.frames()) frames.push_back(to_array(f.pixels));
          return py::make_tuple(frames, r.frames.fps(), text(serialize_trace(r.truth)));
        },
        py::arg("seed"), py::arg("actions") = 6, "Returns (frames, fps, ground-truth trace JSON text).");

  m.def("render_transitions",
        [](int n, std::uint64_t seed, double toggle_fraction) {
          synth::TransitionOptions o;
          o.toggle_fraction = toggle_fraction;
          py::list out;
          for (const auto& s : synth::render_transition_dataset(n, seed, o))
            out.append(py::make_tuple(to_array(s.ui1), to_array(s.ui2), text(sample_to_json(s, "", ""))));
          return out;
        },
        py::arg("n"), py::arg("seed"), py::arg("toggle_fraction") = 0.0,
        "Returns a list of (ui1, ui2, sample JSON text).");

  m.def("validate_trace", [](const std::string& doc) { validate_trace(parse_trace(nlohmann::json::parse(doc))); },
        py::arg("trace_json"));

  m.def("default_config", [] { return text(PipelineConfig{}.to_json()); });

  py::class_<TapModel>(m, "TapModel")
      .def(py::init([](std::uint64_t seed) { return TapModel(TapModelConfig{}, seed); }), py::arg("seed") = 1)
      .def_static("load", &TapModel::load, py::arg("path"))
      .def("save", [](const TapModel& t, const std::filesystem::path& p) { t.save(p); }, py::arg("path"))
      .def("parameter_count", &TapModel::parameter_count)
      .def(
          "predict",
          [](const TapModel& t, const U8Array& ui1, const U8Array& ui2, int top_k) {
            const auto raw = t.predict_locations(to_image(ui1), to_image(ui2));
            auto preds = cluster_predictions(raw);
            if (preds.size() > static_cast<std::size_t>(top_k)) preds.resize(static_cast<std::size_t>(top_k));
            std::vector<std::tuple<double, double, double>> out;
            for (const auto& p : preds) out.emplace_back(p.x, p.y, p.confidence);
            return out;
          },
          py::arg("ui1"), py::arg("ui2"), py::arg("top_k") = 5, "Ranked (x, y, confidence) after clustering.");
}
