#include "instret/score.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "instret/error.hpp"

namespace instret {

namespace {

constexpr std::array<const char*, kFamilyCount> kFamilyNames = {
    "bass",  "brass", "flute",  "guitar",     "keyboard", "mallet",
    "organ", "reed",  "string", "synth_lead", "vocal",
};

}  // namespace

const char* family_name(Family family) { return kFamilyNames[static_cast<int>(family)]; }

Family family_from_name(const std::string& name) {
    for (int i = 0; i < kFamilyCount; ++i)
        if (name == kFamilyNames[i]) return static_cast<Family>(i);
    raise(Err::BadConfig, "unknown instrument family '" + name + "'");
}

std::vector<Family> all_families() {
    std::vector<Family> out;
    for (int i = 0; i < kFamilyCount; ++i) out.push_back(static_cast<Family>(i));
    return out;
}

Family general_midi_family(int program) {
    require(program >= 0 && program <= 127, Err::InvalidProgram,
            "program " + std::to_string(program) + " outside [0,127]");
    // GM banks of eight programs each; the Ensemble and Ethnic banks are split
    // per program because they mix timbre types.
    if (program < 8) return Family::Keyboard;    // Piano
    if (program < 16) return Family::Mallet;     // Chromatic Percussion
    if (program < 24) return Family::Organ;      // Organ
    if (program < 32) return Family::Guitar;     // Guitar
    if (program < 40) return Family::Bass;       // Bass
    if (program < 48) return Family::String;     // Strings
    if (program < 56) {                          // Ensemble
        if (program >= 52 && program <= 54) return Family::Vocal;  // choir/voice
        if (program == 55) return Family::Brass;                   // orchestra hit
        return Family::String;
    }
    if (program < 64) return Family::Brass;      // Brass
    if (program < 72) return Family::Reed;       // Reed
    if (program < 80) return Family::Flute;      // Pipe
    if (program < 88) return Family::SynthLead;  // Synth Lead
    if (program < 96) return Family::SynthLead;  // Synth Pad
    if (program < 104) return Family::SynthLead; // Synth Effects
    if (program < 112) {                         // Ethnic
        switch (program) {
            case 108: return Family::Mallet;  // kalimba
            case 109: return Family::Reed;    // bagpipe
            case 110: return Family::String;  // fiddle
            case 111: return Family::Reed;    // shanai
            default: return Family::Guitar;   // sitar, banjo, shamisen, koto
        }
    }
    if (program < 120) return Family::Mallet;    // Percussive
    return Family::SynthLead;                    // Sound Effects
}

void TrackScore::sort_events() {
    std::stable_sort(events.begin(), events.end(),
                     [](const NoteEvent& a, const NoteEvent& b) { return a.onset_s < b.onset_s; });
}

TrackScore excerpt(const TrackScore& track, uint64_t seed) {
    require(!track.events.empty(), Err::NoValidWindow, "empty track");
    std::vector<double> onsets;
    onsets.reserve(track.events.size());
    for (const auto& e : track.events) onsets.push_back(e.onset_s);
    std::sort(onsets.begin(), onsets.end());

    size_t k = onsets.size();
    require(k >= 3, Err::NoValidWindow, "track has fewer than 3 notes");

    // A window [t, t+5) holds onsets i, i+1, i+2 iff t in (o[i+2]-5, o[i]].
    struct Interval {
        double lo, hi;
    };
    std::vector<Interval> feasible;
    for (size_t i = 0; i + 2 < k; ++i) {
        double lo = onsets[i + 2] - kClipSeconds;
        double hi = onsets[i];
        if (lo < 0.0) {
            if (hi >= 0.0) feasible.push_back({0.0, hi});
        } else if (lo < hi) {
            feasible.push_back({lo, hi});
        }
    }
    require(!feasible.empty(), Err::NoValidWindow, "no 5 s window holds 3 note onsets");

    std::sort(feasible.begin(), feasible.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> merged;
    for (const auto& iv : feasible) {
        if (!merged.empty() && iv.lo <= merged.back().hi)
            merged.back().hi = std::max(merged.back().hi, iv.hi);
        else
            merged.push_back(iv);
    }

    double total = 0.0;
    for (const auto& iv : merged) total += iv.hi - iv.lo;

    Rng rng(seed);
    double start = merged.front().hi;
    if (total > 0.0) {
        double u = rng.uniform() * total;
        for (const auto& iv : merged) {
            double len = iv.hi - iv.lo;
            if (u <= len) {
                start = iv.lo + u;
                break;
            }
            u -= len;
        }
    }

    auto count_in_window = [&](double t) {
        return std::count_if(onsets.begin(), onsets.end(),
                             [&](double o) { return o >= t && o < t + kClipSeconds; });
    };
    if (count_in_window(start) < 3) {
        // start landed on an open boundary; the interval's right end is valid
        for (const auto& iv : merged) {
            if (start >= iv.lo && start <= iv.hi) {
                start = iv.hi;
                break;
            }
        }
        require(count_in_window(start) >= 3, Err::NoValidWindow, "degenerate feasible window");
    }

    TrackScore out;
    out.family = track.family;
    out.source_program = track.source_program;
    for (const auto& e : track.events) {
        if (e.onset_s < start || e.onset_s >= start + kClipSeconds) continue;
        NoteEvent ne = e;
        ne.onset_s = e.onset_s - start;
        ne.duration_s = std::min(e.duration_s, kClipSeconds - ne.onset_s);
        out.events.push_back(ne);
    }
    out.sort_events();
    return out;
}

namespace {

struct Register {
    int lo, hi;
};

Register family_register(Family family) {
    switch (family) {
        case Family::Bass: return {28, 47};
        case Family::Brass: return {52, 79};
        case Family::Flute: return {72, 96};
        case Family::Guitar: return {48, 76};
        case Family::Keyboard: return {48, 84};
        case Family::Mallet: return {60, 96};
        case Family::Organ: return {48, 79};
        case Family::Reed: return {55, 84};
        case Family::String: return {48, 88};
        case Family::SynthLead: return {60, 90};
        case Family::Vocal: return {55, 79};
    }
    return {48, 84};
}

}  // namespace

TrackScore random_track(Family family, Rng& rng) {
    TrackScore track;
    track.family = family;
    track.source_program = 0;

    Register reg = family_register(family);
    int pitch = rng.uniform_int(reg.lo, reg.hi);
    int count = rng.uniform_int(14, 26);
    double t = rng.uniform(0.0, 0.3);
    for (int i = 0; i < count; ++i) {
        NoteEvent e;
        e.pitch = pitch;
        e.velocity = rng.uniform_int(60, 120);
        e.onset_s = t;
        e.duration_s = rng.uniform(0.2, 1.1);
        track.events.push_back(e);

        int step = rng.uniform_int(-5, 5);
        pitch = std::clamp(pitch + step, reg.lo, reg.hi);
        t += rng.uniform(0.15, 0.55);
    }
    track.sort_events();
    return track;
}

}  // namespace instret
