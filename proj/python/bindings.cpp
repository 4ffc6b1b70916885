#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "instret/dataset.hpp"
#include "instret/metrics.hpp"
#include "instret/train.hpp"

namespace py = pybind11;
using namespace instret;

namespace {

Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
    Matrix m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), m.values.begin());
    return m;
}

py::array_t<double> from_matrix(const Matrix& m) {
    py::array_t<double> a({m.rows, m.cols});
    std::copy(m.values.begin(), m.values.end(), a.mutable_data());
    return a;
}

AudioClip to_clip(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 1) throw py::value_error("expected a 1-D sample array");
    AudioClip clip;
    clip.samples.assign(a.data(), a.data() + a.size());
    return clip;
}

py::array_t<double> from_clip(const AudioClip& clip) {
    py::array_t<double> a(static_cast<py::ssize_t>(clip.samples.size()));
    std::copy(clip.samples.begin(), clip.samples.end(), a.mutable_data());
    return a;
}

MelConfig make_mel_config(int fft_size, int hop, int mel_bins, double fmin, double fmax) {
    MelConfig c;
    c.fft_size = fft_size;
    c.hop = hop;
    c.mel_bins = mel_bins;
    c.fmin_hz = fmin;
    c.fmax_hz = fmax;
    c.validate();
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "instrument retrieval toolkit: synthesis, features, assignment, metrics";

    py::register_exception<Error>(m, "ToolkitError");

    // ---- scores and MIDI ----
    py::class_<NoteEvent>(m, "NoteEvent")
        .def(py::init<>())
        .def(py::init([](int pitch, int velocity, double onset_s, double duration_s) {
                 NoteEvent e;
                 e.pitch = pitch;
                 e.velocity = velocity;
                 e.onset_s = onset_s;
                 e.duration_s = duration_s;
                 return e;
             }),
             py::arg("pitch"), py::arg("velocity"), py::arg("onset_s"), py::arg("duration_s"))
        .def_readwrite("pitch", &NoteEvent::pitch)
        .def_readwrite("velocity", &NoteEvent::velocity)
        .def_readwrite("onset_s", &NoteEvent::onset_s)
        .def_readwrite("duration_s", &NoteEvent::duration_s)
        .def("__repr__", [](const NoteEvent& e) {
            return "NoteEvent(pitch=" + std::to_string(e.pitch) + ", onset_s=" +
                   std::to_string(e.onset_s) + ", duration_s=" + std::to_string(e.duration_s) + ")";
        });

    py::class_<TrackScore>(m, "TrackScore")
        .def(py::init<>())
        .def_property(
            "family", [](const TrackScore& t) { return std::string(family_name(t.family)); },
            [](TrackScore& t, const std::string& name) { t.family = family_from_name(name); })
        .def_readwrite("events", &TrackScore::events)
        .def_readwrite("source_program", &TrackScore::source_program);

    m.def("general_midi_family",
          [](int program) { return std::string(family_name(general_midi_family(program))); },
          py::arg("program"), "map a General-MIDI program number to an instrument family");

    m.def("parse_midi",
          [](py::bytes data) {
              std::string buf = data;
              return parse_midi(
                  {reinterpret_cast<const uint8_t*>(buf.data()), buf.size()});
          },
          py::arg("data"), "parse a Standard MIDI File (formats 0/1) into track scores");

    m.def("write_midi",
          [](const std::vector<TrackScore>& tracks) {
              auto bytes = write_midi(tracks);
              return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
          },
          py::arg("tracks"));

    m.def("excerpt", &excerpt, py::arg("track"), py::arg("seed"),
          "5-second window with at least three note onsets, re-based to 0");

    // ---- synthesis ----
    py::class_<Envelope>(m, "Envelope")
        .def(py::init<>())
        .def_readwrite("attack_s", &Envelope::attack_s)
        .def_readwrite("decay_s", &Envelope::decay_s)
        .def_readwrite("sustain_level", &Envelope::sustain_level)
        .def_readwrite("release_s", &Envelope::release_s)
        .def("value", &Envelope::value, py::arg("t"), py::arg("duration_s"));

    py::class_<InstrumentSpec>(m, "InstrumentSpec")
        .def(py::init<>())
        .def_readwrite("id", &InstrumentSpec::id)
        .def_property(
            "family",
            [](const InstrumentSpec& s) { return std::string(family_name(s.family)); },
            [](InstrumentSpec& s, const std::string& name) { s.family = family_from_name(name); })
        .def_readwrite("harmonic_amplitudes", &InstrumentSpec::harmonic_amplitudes)
        .def_readwrite("envelope", &InstrumentSpec::envelope)
        .def_readwrite("detune_cents", &InstrumentSpec::detune_cents)
        .def_readwrite("noise_level", &InstrumentSpec::noise_level)
        .def("validate", &InstrumentSpec::validate);

    m.def("make_random_instrument",
          [](const std::string& id, const std::string& family, uint64_t seed) {
              Rng rng(seed);
              return make_random_instrument(id, family_from_name(family), rng);
          },
          py::arg("id"), py::arg("family"), py::arg("seed"));

    m.def("render_single",
          [](const InstrumentSpec& spec, const std::vector<NoteEvent>& events) {
              return from_clip(render_single(spec, events));
          },
          py::arg("spec"), py::arg("events"),
          "render notes into a 5 s clip at 16 kHz, peak-normalized to 0.9");

    m.def("render_multi",
          [](const std::vector<InstrumentSpec>& specs, const std::vector<TrackScore>& tracks) {
              MultiRender r = render_multi(specs, tracks);
              std::vector<py::array_t<double>> stems;
              for (const auto& s : r.stems) stems.push_back(from_clip(s));
              return py::make_tuple(from_clip(r.mixture), stems);
          },
          py::arg("specs"), py::arg("tracks"));

    m.attr("SAMPLE_RATE") = kSampleRate;
    m.attr("CLIP_SAMPLES") = kClipSamples;

    // ---- features ----
    m.def("log_mel",
          [](py::array_t<double, py::array::c_style | py::array::forcecast> samples, int fft_size,
             int hop, int mel_bins, double fmin, double fmax) {
              MelSpectrogram mel =
                  log_mel(to_clip(samples), make_mel_config(fft_size, hop, mel_bins, fmin, fmax));
              return from_matrix(mel.values);
          },
          py::arg("samples"), py::arg("fft_size") = 1024, py::arg("hop") = 512,
          py::arg("mel_bins") = 64, py::arg("fmin") = 0.0, py::arg("fmax") = 8000.0,
          "natural-log mel spectrogram, frames x mel_bins");

    m.def("stft",
          [](py::array_t<double, py::array::c_style | py::array::forcecast> samples, int fft_size,
             int hop) {
              MelConfig c;
              c.fft_size = fft_size;
              c.hop = hop;
              return from_matrix(stft(to_clip(samples), c));
          },
          py::arg("samples"), py::arg("fft_size") = 1024, py::arg("hop") = 512,
          "Hann-windowed magnitude STFT");

    m.def("mel_filterbank",
          [](int fft_size, int mel_bins, double fmin, double fmax) {
              MelConfig c;
              c.fft_size = fft_size;
              c.mel_bins = mel_bins;
              c.fmin_hz = fmin;
              c.fmax_hz = fmax;
              return from_matrix(mel_filterbank(c));
          },
          py::arg("fft_size") = 1024, py::arg("mel_bins") = 64, py::arg("fmin") = 0.0,
          py::arg("fmax") = 8000.0);

    // ---- assignment and loss ----
    m.def("cosine",
          [](const std::vector<double>& a, const std::vector<double>& b) { return cosine(a, b); },
          py::arg("a"), py::arg("b"));

    m.def("cost_matrix",
          [](py::array_t<double, py::array::c_style | py::array::forcecast> targets,
             py::array_t<double, py::array::c_style | py::array::forcecast> outputs) {
              return from_matrix(cost_matrix(to_matrix(targets), to_matrix(outputs)).values);
          },
          py::arg("targets"), py::arg("outputs"),
          "entry (n, j) = 1 - cos(outputs[j], targets[n])");

    m.def("hungarian",
          [](py::array_t<double, py::array::c_style | py::array::forcecast> cost) {
              CostMatrix c;
              c.values = to_matrix(cost);
              return hungarian(c).mapping;
          },
          py::arg("cost"), "minimum-cost injective assignment (row -> column)");

    m.def("brute_force_assign",
          [](py::array_t<double, py::array::c_style | py::array::forcecast> cost) {
              CostMatrix c;
              c.values = to_matrix(cost);
              return brute_force_assign(c).mapping;
          },
          py::arg("cost"));

    m.def("pit_loss",
          [](py::array_t<double, py::array::c_style | py::array::forcecast> targets,
             py::array_t<double, py::array::c_style | py::array::forcecast> outputs) {
              PitLossResult r = pit_loss(to_matrix(targets), to_matrix(outputs));
              return py::make_tuple(r.loss, r.assignment.mapping, from_matrix(r.output_grads));
          },
          py::arg("targets"), py::arg("outputs"),
          "permutation-invariant cosine embedding loss: (loss, assignment, output_grads)");

    // ---- retrieval ----
    m.def("retrieve",
          [](py::array_t<double, py::array::c_style | py::array::forcecast> sim,
             const std::vector<std::string>& ids) {
              RetrievalResult r = retrieve(to_matrix(sim), ids);
              py::dict out;
              out["retrieved"] = std::vector<std::string>(r.retrieved.begin(), r.retrieved.end());
              std::vector<py::dict> slots;
              for (const auto& s : r.per_slot) {
                  py::dict d;
                  d["library_index"] = s.library_index;
                  d["id"] = s.id;
                  d["similarity"] = s.similarity;
                  slots.push_back(d);
              }
              out["per_slot"] = slots;
              out["instrument_scores"] = r.instrument_scores;
              return out;
          },
          py::arg("similarity"), py::arg("library_ids"),
          "per-slot argmax retrieval over an M x K similarity matrix");

    // ---- metrics ----
    m.def("eer", &eer_from_scores, py::arg("positives"), py::arg("negatives"),
          "equal error rate with linear interpolation between ROC points");

    m.def("multilabel_f1",
          [](const std::vector<std::set<std::string>>& predictions,
             const std::vector<std::set<std::string>>& truths) {
              F1Report r = multilabel_f1(predictions, truths);
              py::dict out;
              out["macro"] = r.macro;
              out["weighted"] = r.weighted;
              out["per_class"] = r.per_class;
              return out;
          },
          py::arg("predictions"), py::arg("truths"));

    m.def("family_collapse",
          [](const std::vector<std::set<std::string>>& sets,
             const std::map<std::string, std::string>& id_to_family) {
              return family_collapse(sets, id_to_family);
          },
          py::arg("id_sets"), py::arg("id_to_family"));

    m.def("average_precision", &average_precision, py::arg("scores"), py::arg("relevance"));
}
