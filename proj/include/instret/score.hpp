#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "instret/rng.hpp"

namespace instret {

// Instrument family taxonomy. Fixed 11-name set; ordinal values are part of
// file formats and must not be reordered.
enum class Family : int {
    Bass = 0,
    Brass,
    Flute,
    Guitar,
    Keyboard,
    Mallet,
    Organ,
    Reed,
    String,
    SynthLead,
    Vocal,
};

constexpr int kFamilyCount = 11;

const char* family_name(Family family);
Family family_from_name(const std::string& name);
std::vector<Family> all_families();

// General-MIDI program (0-127) to family. Total and deterministic; banks with
// no counterpart in the taxonomy map to Mallet (percussive) or SynthLead
// (pads/effects).
Family general_midi_family(int program);

struct NoteEvent {
    int pitch = 60;        // MIDI note number 0-127
    int velocity = 100;    // 1-127
    double onset_s = 0.0;  // >= 0
    double duration_s = 0.5;
};

struct TrackScore {
    Family family = Family::Keyboard;
    std::vector<NoteEvent> events;  // sorted by onset_s
    int source_program = 0;

    void sort_events();
};

constexpr double kClipSeconds = 5.0;

// Picks a 5-second window uniformly among all windows containing at least
// three note onsets, re-based to onset 0. Deterministic given seed.
TrackScore excerpt(const TrackScore& track, uint64_t seed);

// Procedural score generator: a seeded melody in a register and note-length
// range typical for the family. Stands in for real multi-track MIDI sources.
TrackScore random_track(Family family, Rng& rng);

}  // namespace instret
