#include "instret/instrument.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "instret/error.hpp"
#include "instret/util.hpp"

namespace instret {

double Envelope::value(double t, double duration_s) const {
    if (t < 0.0) return 0.0;
    auto held_level = [this](double x) {
        if (x < attack_s) return x / attack_s;
        x -= attack_s;
        if (x < decay_s) return 1.0 + (sustain_level - 1.0) * (x / decay_s);
        return sustain_level;
    };
    if (t <= duration_s) return held_level(t);
    double rel = t - duration_s;
    if (release_s <= 0.0 || rel >= release_s) return 0.0;
    return held_level(duration_s) * (1.0 - rel / release_s);
}

void InstrumentSpec::validate() const {
    require(!id.empty(), Err::BadConfig, "instrument id empty");
    require(!harmonic_amplitudes.empty() && harmonic_amplitudes.size() <= 16, Err::BadConfig,
            "instrument " + id + ": need 1-16 harmonic amplitudes");
    bool any_positive = false;
    for (double a : harmonic_amplitudes) {
        require(a >= 0.0, Err::BadConfig, "instrument " + id + ": negative harmonic amplitude");
        any_positive |= a > 0.0;
    }
    require(any_positive, Err::BadConfig, "instrument " + id + ": all harmonics zero");
    require(envelope.attack_s >= 0.0 && envelope.decay_s >= 0.0 && envelope.release_s >= 0.0,
            Err::BadConfig, "instrument " + id + ": negative envelope time");
    require(envelope.sustain_level >= 0.0 && envelope.sustain_level <= 1.0, Err::BadConfig,
            "instrument " + id + ": sustain level outside [0,1]");
    require(detune_cents >= -50.0 && detune_cents <= 50.0, Err::BadConfig,
            "instrument " + id + ": detune outside [-50,50] cents");
    require(noise_level >= 0.0 && noise_level <= 0.2, Err::BadConfig,
            "instrument " + id + ": noise level outside [0,0.2]");
}

namespace {

// Family archetypes: base harmonic profile plus envelope/noise ranges. Each
// instrument jitters the profile so instruments of one family sound related
// but not identical.
struct Archetype {
    std::vector<double> harmonics;
    double attack_lo, attack_hi;
    double decay_lo, decay_hi;
    double sustain_lo, sustain_hi;
    double release_lo, release_hi;
    double noise_lo, noise_hi;
};

Archetype family_archetype(Family family) {
    switch (family) {
        case Family::Bass:
            return {{1.0, 0.55, 0.3, 0.16, 0.08, 0.04}, 0.004, 0.02, 0.1, 0.3,
                    0.4,  0.7,  0.05, 0.2,  0.0,  0.01};
        case Family::Brass:
            return {{0.7, 0.9, 1.0, 0.85, 0.7, 0.55, 0.4, 0.3, 0.2, 0.12}, 0.03, 0.08, 0.05, 0.15,
                    0.7, 0.9, 0.06, 0.2,  0.005, 0.02};
        case Family::Flute:
            return {{1.0, 0.18, 0.07, 0.03}, 0.04, 0.09, 0.04, 0.12,
                    0.8, 0.95, 0.08, 0.25, 0.02, 0.06};
        case Family::Guitar:
            return {{1.0, 0.62, 0.4, 0.28, 0.18, 0.12, 0.08, 0.05}, 0.002, 0.008, 0.3, 0.8,
                    0.0, 0.15, 0.05, 0.15, 0.0,  0.008};
        case Family::Keyboard:
            return {{1.0, 0.5, 0.28, 0.16, 0.1, 0.07, 0.04, 0.03}, 0.002, 0.01, 0.4, 1.0,
                    0.1, 0.3, 0.05, 0.2,  0.0, 0.005};
        case Family::Mallet:
            return {{1.0, 0.0, 0.0, 0.45, 0.0, 0.0, 0.0, 0.0, 0.0, 0.25}, 0.001, 0.005, 0.2, 0.6,
                    0.0, 0.1, 0.1,  0.3,  0.0, 0.005};
        case Family::Organ:
            return {{1.0, 0.85, 0.6, 0.75, 0.0, 0.5, 0.0, 0.4}, 0.004, 0.02, 0.01, 0.05,
                    0.9, 1.0,  0.02, 0.08, 0.0, 0.004};
        case Family::Reed:
            return {{1.0, 0.12, 0.75, 0.1, 0.5, 0.08, 0.3, 0.06, 0.15}, 0.02, 0.05, 0.03, 0.1,
                    0.7, 0.9, 0.05, 0.15, 0.01, 0.03};
        case Family::String:
            return {{1.0, 0.7, 0.55, 0.45, 0.38, 0.32, 0.27, 0.23, 0.19, 0.16, 0.13, 0.11},
                    0.05, 0.15, 0.05, 0.2, 0.8, 0.95, 0.1, 0.3, 0.005, 0.015};
        case Family::SynthLead:
            return {{1.0, 0.0, 0.85, 0.0, 0.7, 0.0, 0.55, 0.0, 0.4, 0.0, 0.3}, 0.003, 0.03,
                    0.02, 0.1, 0.8, 1.0, 0.02, 0.1, 0.0, 0.01};
        case Family::Vocal:
            return {{1.0, 0.7, 0.45, 0.6, 0.5, 0.2, 0.1}, 0.03, 0.08, 0.05, 0.15,
                    0.8, 0.9, 0.08, 0.2, 0.01, 0.03};
    }
    return {{1.0}, 0.01, 0.02, 0.1, 0.2, 0.5, 0.8, 0.1, 0.2, 0.0, 0.01};
}

}  // namespace

InstrumentSpec make_random_instrument(const std::string& id, Family family, Rng& rng) {
    Archetype arch = family_archetype(family);
    InstrumentSpec spec;
    spec.id = id;
    spec.family = family;
    spec.harmonic_amplitudes.resize(arch.harmonics.size());
    // per-instrument spectral tilt: brighter or darker than the family norm
    double tilt = rng.uniform(-0.6, 0.6);
    for (size_t h = 0; h < arch.harmonics.size(); ++h) {
        double jitter = std::exp(rng.uniform(-0.8, 0.8));
        double slope = std::pow(static_cast<double>(h + 1), tilt);
        // a sparse per-instrument mask: some partials drop out entirely,
        // giving each instrument its own comb on top of the family profile
        bool keep = h == 0 || rng.uniform() > 0.35;
        spec.harmonic_amplitudes[h] = keep ? arch.harmonics[h] * jitter * slope : 0.0;
    }
    // keep the fundamental audible so pitch identity survives the jitter
    spec.harmonic_amplitudes[0] = std::max(spec.harmonic_amplitudes[0], 0.3);
    spec.envelope.attack_s = rng.uniform(arch.attack_lo, arch.attack_hi);
    spec.envelope.decay_s = rng.uniform(arch.decay_lo, arch.decay_hi);
    spec.envelope.sustain_level = rng.uniform(arch.sustain_lo, arch.sustain_hi);
    spec.envelope.release_s = rng.uniform(arch.release_lo, arch.release_hi);
    spec.detune_cents = rng.uniform(-8.0, 8.0);
    spec.noise_level = rng.uniform(arch.noise_lo, arch.noise_hi);
    spec.validate();
    return spec;
}

AudioClip render_single(const InstrumentSpec& spec, const std::vector<NoteEvent>& events) {
    spec.validate();
    AudioClip clip = AudioClip::silence(kClipSamples);
    const double nyquist = kSampleRate / 2.0;
    uint64_t noise_base = fnv1a_str(spec.id);

    for (size_t note_idx = 0; note_idx < events.size(); ++note_idx) {
        const NoteEvent& e = events[note_idx];
        if (e.onset_s < 0.0 || e.duration_s <= 0.0 || e.velocity <= 0) continue;
        double f0 = 440.0 * std::exp2((e.pitch - 69) / 12.0 + spec.detune_cents / 1200.0);

        // partials below Nyquist, amplitudes normalized to unit sum
        std::vector<std::pair<double, double>> partials;  // (freq, amplitude)
        double norm = 0.0;
        for (size_t h = 0; h < spec.harmonic_amplitudes.size(); ++h) {
            double a = spec.harmonic_amplitudes[h];
            double f = f0 * static_cast<double>(h + 1);
            if (a <= 0.0 || f >= nyquist) continue;
            partials.emplace_back(f, a);
            norm += a;
        }
        if (partials.empty()) continue;

        int start = static_cast<int>(std::lround(e.onset_s * kSampleRate));
        if (start >= kClipSamples) continue;
        double span_s = e.duration_s + spec.envelope.release_s;
        int span = static_cast<int>(std::ceil(span_s * kSampleRate));
        int end = std::min(kClipSamples, start + span);

        std::vector<std::complex<double>> phase(partials.size(), {1.0, 0.0});
        std::vector<std::complex<double>> rot(partials.size());
        for (size_t p = 0; p < partials.size(); ++p) {
            double w = 2.0 * M_PI * partials[p].first / kSampleRate;
            rot[p] = {std::cos(w), std::sin(w)};
        }

        double amp = static_cast<double>(e.velocity) / 127.0;
        Rng noise_rng(mix_seed(noise_base, note_idx));
        for (int i = start; i < end; ++i) {
            double t = static_cast<double>(i - start) / kSampleRate;
            double env = spec.envelope.value(t, e.duration_s);
            double s = 0.0;
            for (size_t p = 0; p < partials.size(); ++p) {
                s += partials[p].second * phase[p].imag();
                phase[p] *= rot[p];
            }
            s /= norm;
            if (spec.noise_level > 0.0) s += spec.noise_level * noise_rng.uniform(-1.0, 1.0);
            clip.samples[static_cast<size_t>(i)] += amp * env * s;
        }
    }
    peak_normalize(clip, 0.9);
    return clip;
}

MultiRender render_multi(const std::vector<InstrumentSpec>& specs,
                         const std::vector<TrackScore>& tracks) {
    require(specs.size() == tracks.size(), Err::FamilyMismatch,
            "spec/track count mismatch");
    require(specs.size() >= 2, Err::TooFewTracks, "need at least 2 tracks");
    require(specs.size() <= 9, Err::TooFewTracks, "at most 9 tracks supported");
    for (size_t i = 0; i < specs.size(); ++i)
        require(specs[i].family == tracks[i].family, Err::FamilyMismatch,
                "instrument " + specs[i].id + " is " + family_name(specs[i].family) +
                    " but track is " + family_name(tracks[i].family));

    MultiRender out;
    out.stems.reserve(specs.size());
    for (size_t i = 0; i < specs.size(); ++i)
        out.stems.push_back(render_single(specs[i], tracks[i].events));

    out.mixture = AudioClip::silence(kClipSamples);
    for (const auto& stem : out.stems)
        for (size_t i = 0; i < stem.samples.size(); ++i)
            out.mixture.samples[i] += stem.samples[i];
    peak_normalize(out.mixture, 0.9);
    return out;
}

}  // namespace instret
