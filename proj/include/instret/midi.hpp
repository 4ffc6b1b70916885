#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "instret/score.hpp"

namespace instret {

// Standard MIDI File subset parser: formats 0 and 1, running status, tempo
// meta events, program change, note-on/note-off pairing. Ticks are converted
// to seconds with the file's tempo map. Returns one TrackScore per
// (track chunk, channel) pair that carries notes; channel 10 (percussion) is
// skipped. Never crashes on arbitrary bytes: malformed input raises
// MalformedHeader, TruncatedChunk or UnsupportedFormat.
std::vector<TrackScore> parse_midi(std::span<const uint8_t> bytes);

// Serializes scores to a format-1 file (480 TPQN, fixed 120 bpm tempo track).
// parse_midi(write_midi(tracks)) reproduces events within half a tick.
std::vector<uint8_t> write_midi(const std::vector<TrackScore>& tracks);

}  // namespace instret
