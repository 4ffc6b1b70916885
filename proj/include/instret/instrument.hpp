#pragma once

#include <string>
#include <vector>

#include "instret/audio.hpp"
#include "instret/rng.hpp"
#include "instret/score.hpp"

namespace instret {

struct Envelope {
    double attack_s = 0.01;
    double decay_s = 0.1;
    double sustain_level = 0.7;  // in [0, 1]
    double release_s = 0.1;

    // amplitude at time t after note-on for a note held `duration_s`
    double value(double t, double duration_s) const;
};

// Parametric additive-synthesis instrument: a bank of harmonic partials shaped
// by an ADSR envelope plus a small noise component. Distinct parameter draws
// give distinct timbres; family archetypes keep timbres clustered per family.
struct InstrumentSpec {
    std::string id;
    Family family = Family::Keyboard;
    std::vector<double> harmonic_amplitudes;  // <= 16 non-negative, >= 1 positive
    Envelope envelope;
    double detune_cents = 0.0;  // [-50, 50]
    double noise_level = 0.0;   // [0, 0.2]

    void validate() const;
};

// Draws a family-flavored instrument. Same family, different seeds -> related
// but distinguishable timbres.
InstrumentSpec make_random_instrument(const std::string& id, Family family, Rng& rng);

// Renders note events into a fixed 5 s clip, peak-normalized to 0.9 when
// nonzero. Empty event list renders silence.
AudioClip render_single(const InstrumentSpec& spec, const std::vector<NoteEvent>& events);

struct MultiRender {
    AudioClip mixture;
    std::vector<AudioClip> stems;
};

// Renders 2-9 family-matched (spec, track) pairs; mixture is the sample-wise
// sum of stems, then peak-normalized.
MultiRender render_multi(const std::vector<InstrumentSpec>& specs,
                         const std::vector<TrackScore>& tracks);

}  // namespace instret
