#include "instret/instrument.hpp"

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "instret/audio.hpp"
#include "instret/error.hpp"

using namespace instret;

namespace {

InstrumentSpec sine_instrument() {
    InstrumentSpec spec;
    spec.id = "test_sine";
    spec.family = Family::Organ;
    spec.harmonic_amplitudes = {1.0};
    spec.envelope = {0.01, 0.02, 0.9, 0.05};
    spec.detune_cents = 0.0;
    spec.noise_level = 0.0;
    return spec;
}

NoteEvent note(int pitch, double onset, double duration, int velocity = 100) {
    NoteEvent e;
    e.pitch = pitch;
    e.velocity = velocity;
    e.onset_s = onset;
    e.duration_s = duration;
    return e;
}

}  // namespace

TEST_CASE("envelope: piecewise ADSR values") {
    Envelope env{0.1, 0.2, 0.5, 0.1};
    CHECK(env.value(-0.01, 1.0) == 0.0);
    CHECK(env.value(0.05, 1.0) == doctest::Approx(0.5));   // mid-attack
    CHECK(env.value(0.1, 1.0) == doctest::Approx(1.0));    // attack peak
    CHECK(env.value(0.2, 1.0) == doctest::Approx(0.75));   // mid-decay
    CHECK(env.value(0.5, 1.0) == doctest::Approx(0.5));    // sustain
    CHECK(env.value(1.05, 1.0) == doctest::Approx(0.25));  // mid-release
    CHECK(env.value(1.2, 1.0) == 0.0);                     // done

    // short note releases from its held level
    CHECK(env.value(0.05, 0.05) == doctest::Approx(0.5));
    CHECK(env.value(0.10, 0.05) == doctest::Approx(0.25));
}

TEST_CASE("instrument validation rejects bad parameter ranges") {
    InstrumentSpec s = sine_instrument();
    CHECK_NOTHROW(s.validate());

    InstrumentSpec no_harmonics = s;
    no_harmonics.harmonic_amplitudes = {0.0, 0.0};
    CHECK_THROWS_AS(no_harmonics.validate(), Error);

    InstrumentSpec too_many = s;
    too_many.harmonic_amplitudes.assign(17, 1.0);
    CHECK_THROWS_AS(too_many.validate(), Error);

    InstrumentSpec bad_sustain = s;
    bad_sustain.envelope.sustain_level = 1.5;
    CHECK_THROWS_AS(bad_sustain.validate(), Error);

    InstrumentSpec bad_detune = s;
    bad_detune.detune_cents = 80.0;
    CHECK_THROWS_AS(bad_detune.validate(), Error);

    InstrumentSpec bad_noise = s;
    bad_noise.noise_level = 0.5;
    CHECK_THROWS_AS(bad_noise.validate(), Error);
}

TEST_CASE("render_single: empty events give silence") {
    AudioClip clip = render_single(sine_instrument(), {});
    CHECK(clip.samples.size() == static_cast<size_t>(kClipSamples));
    for (double s : clip.samples) CHECK(s == 0.0);
}

TEST_CASE("render_single: 440 Hz note peaks at the right DFT bin") {
    AudioClip clip = render_single(sine_instrument(), {note(69, 0.1, 1.0)});
    // oracle: naive DFT over a 4096-sample slice inside the sustained note
    std::vector<double> slice(clip.samples.begin() + 4800, clip.samples.begin() + 4800 + 4096);
    size_t peak = testutil::peak_bin(slice);
    double peak_hz = static_cast<double>(peak) * kSampleRate / 4096.0;
    double bin_width = static_cast<double>(kSampleRate) / 4096.0;
    CHECK(std::abs(peak_hz - 440.0) <= bin_width);
}

TEST_CASE("render_single: nonzero renders peak-normalize to 0.9") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        Family family = all_families()[static_cast<size_t>(trial % kFamilyCount)];
        InstrumentSpec spec = make_random_instrument("t" + std::to_string(trial), family, rng);
        AudioClip clip = render_single(spec, {note(60, 0.0, 1.0), note(67, 1.5, 0.8)});
        CHECK(clip.peak() == doctest::Approx(0.9).epsilon(1e-6));
    }
}

TEST_CASE("render_single: deterministic, velocity scales pre-normalization level") {
    InstrumentSpec spec = sine_instrument();
    spec.noise_level = 0.05;  // exercises the seeded noise path
    AudioClip a = render_single(spec, {note(60, 0.0, 1.0)});
    AudioClip b = render_single(spec, {note(60, 0.0, 1.0)});
    CHECK(a.samples == b.samples);
}

TEST_CASE("render_multi: mixture is the normalized stem sum") {
    InstrumentSpec ga = sine_instrument();
    ga.id = "organ_a";
    InstrumentSpec gb = sine_instrument();
    gb.id = "organ_b";
    gb.harmonic_amplitudes = {0.0, 1.0};  // octave up

    TrackScore ta;
    ta.family = Family::Organ;
    ta.events = {note(60, 0.0, 2.0)};
    TrackScore tb;
    tb.family = Family::Organ;
    tb.events = {note(64, 0.5, 2.0)};

    MultiRender r = render_multi({ga, gb}, {ta, tb});
    REQUIRE(r.stems.size() == 2);
    CHECK(r.mixture.peak() == doctest::Approx(0.9).epsilon(1e-6));

    // linearity up to one global scale factor
    double scale = 0.0;
    for (size_t i = 0; i < r.mixture.samples.size(); ++i) {
        double stems_sum = r.stems[0].samples[i] + r.stems[1].samples[i];
        if (std::abs(stems_sum) > 1e-6) {
            scale = r.mixture.samples[i] / stems_sum;
            break;
        }
    }
    REQUIRE(scale != 0.0);
    for (size_t i = 0; i < r.mixture.samples.size(); ++i) {
        double stems_sum = r.stems[0].samples[i] + r.stems[1].samples[i];
        CHECK(r.mixture.samples[i] == doctest::Approx(scale * stems_sum).epsilon(1e-9));
    }
}

TEST_CASE("render_multi: one silent stem leaves the other normalized") {
    InstrumentSpec a = sine_instrument();
    a.id = "a";
    InstrumentSpec b = sine_instrument();
    b.id = "b";
    TrackScore playing;
    playing.family = Family::Organ;
    playing.events = {note(60, 0.0, 1.0)};
    TrackScore silent;
    silent.family = Family::Organ;

    MultiRender r = render_multi({a, b}, {playing, silent});
    AudioClip solo = render_single(a, playing.events);
    for (size_t i = 0; i < solo.samples.size(); ++i)
        CHECK(r.mixture.samples[i] == doctest::Approx(solo.samples[i]).epsilon(1e-9));
}

TEST_CASE("render_multi: three disjoint-band stems all appear in the mixture spectrum") {
    std::vector<InstrumentSpec> specs;
    std::vector<TrackScore> tracks;
    int pitches[3] = {48, 69, 89};  // ~131 Hz, 440 Hz, ~1397 Hz
    for (int i = 0; i < 3; ++i) {
        InstrumentSpec s = sine_instrument();
        s.id = "s" + std::to_string(i);
        specs.push_back(s);
        TrackScore t;
        t.family = Family::Organ;
        t.events = {note(pitches[i], 0.0, 3.0)};
        tracks.push_back(t);
    }
    MultiRender r = render_multi(specs, tracks);

    std::vector<double> slice(r.mixture.samples.begin() + 8000,
                              r.mixture.samples.begin() + 8000 + 4096);
    auto spectrum = testutil::naive_dft(slice);
    for (int i = 0; i < 3; ++i) {
        double hz = 440.0 * std::exp2((pitches[i] - 69) / 12.0);
        size_t bin = static_cast<size_t>(std::lround(hz * 4096.0 / kSampleRate));
        // prominent local peak: larger than the mean magnitude by 10x
        double mean = 0.0;
        for (size_t k = 1; k <= 2048; ++k) mean += std::abs(spectrum[k]);
        mean /= 2048.0;
        double local = 0.0;
        for (size_t k = bin - 1; k <= bin + 1; ++k) local = std::max(local, std::abs(spectrum[k]));
        CHECK(local > 10.0 * mean);
    }
}

TEST_CASE("render_multi: contract violations raise declared errors") {
    InstrumentSpec a = sine_instrument();
    a.id = "a";
    InstrumentSpec b = sine_instrument();
    b.id = "b";
    TrackScore organ_track;
    organ_track.family = Family::Organ;
    organ_track.events = {note(60, 0.0, 1.0)};
    TrackScore guitar_track = organ_track;
    guitar_track.family = Family::Guitar;

    CHECK_THROWS_AS((void)render_multi({a}, {organ_track}), Error);  // too few
    CHECK_THROWS_AS((void)render_multi({a, b}, {organ_track, guitar_track}), Error);  // mismatch

    std::vector<InstrumentSpec> ten(10, a);
    for (int i = 0; i < 10; ++i) ten[static_cast<size_t>(i)].id = "x" + std::to_string(i);
    std::vector<TrackScore> ten_tracks(10, organ_track);
    CHECK_THROWS_AS((void)render_multi(ten, ten_tracks), Error);  // too many
}

TEST_CASE("wav IO: 16-bit PCM round trip") {
    testutil::TempDir dir("wav");
    AudioClip clip = render_single(sine_instrument(), {note(72, 0.2, 1.0)});
    auto path = dir.path() / "clip.wav";
    wav_write(path, clip);
    AudioClip loaded = wav_read(path);
    REQUIRE(loaded.samples.size() == clip.samples.size());
    CHECK(loaded.sample_rate == kSampleRate);
    for (size_t i = 0; i < clip.samples.size(); i += 97)
        CHECK(loaded.samples[i] == doctest::Approx(clip.samples[i]).epsilon(1e-3));

    CHECK_THROWS_AS((void)wav_read(dir.path() / "missing.wav"), Error);
}

TEST_CASE("make_random_instrument: valid specs with family-typical envelopes") {
    Rng rng(11);
    for (Family family : all_families()) {
        InstrumentSpec spec = make_random_instrument("x", family, rng);
        CHECK_NOTHROW(spec.validate());
        CHECK(spec.family == family);
    }
    // two seeds give different timbres
    Rng r1(1), r2(2);
    InstrumentSpec a = make_random_instrument("a", Family::Guitar, r1);
    InstrumentSpec b = make_random_instrument("b", Family::Guitar, r2);
    CHECK(a.harmonic_amplitudes != b.harmonic_amplitudes);
}
