#include "instret/midi.hpp"

#include <algorithm>
#include <cstring>
#include <map>

#include "instret/error.hpp"

namespace instret {

namespace {

class Reader {
public:
    Reader(std::span<const uint8_t> bytes, size_t pos, size_t end)
        : bytes_(bytes), pos_(pos), end_(end) {}

    size_t pos() const { return pos_; }
    bool done() const { return pos_ >= end_; }
    size_t remaining() const { return end_ - pos_; }

    uint8_t u8() {
        require(pos_ < end_, Err::TruncatedChunk, "unexpected end of chunk");
        return bytes_[pos_++];
    }

    uint8_t peek() const {
        require(pos_ < end_, Err::TruncatedChunk, "unexpected end of chunk");
        return bytes_[pos_];
    }

    uint16_t u16() { return static_cast<uint16_t>(u8() << 8 | u8()); }

    uint32_t u32() {
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = v << 8 | u8();
        return v;
    }

    // variable-length quantity, at most 4 bytes per the SMF spec
    uint32_t varint() {
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            uint8_t b = u8();
            v = v << 7 | (b & 0x7f);
            if ((b & 0x80) == 0) return v;
        }
        raise(Err::TruncatedChunk, "overlong variable-length quantity");
    }

    void skip(size_t n) {
        require(remaining() >= n, Err::TruncatedChunk, "skip past end of chunk");
        pos_ += n;
    }

private:
    std::span<const uint8_t> bytes_;
    size_t pos_;
    size_t end_;
};

struct TempoChange {
    uint64_t tick;
    uint32_t usec_per_quarter;
};

// tick -> seconds under a sorted tempo map (default 500000 us/quarter)
class TempoMap {
public:
    explicit TempoMap(std::vector<TempoChange> changes) : changes_(std::move(changes)) {
        std::stable_sort(changes_.begin(), changes_.end(),
                         [](const TempoChange& a, const TempoChange& b) { return a.tick < b.tick; });
    }

    double seconds_at(uint64_t tick, int tpqn) const {
        double seconds = 0.0;
        uint64_t prev_tick = 0;
        uint32_t usec = 500000;
        for (const auto& c : changes_) {
            if (c.tick >= tick) break;
            seconds += static_cast<double>(c.tick - prev_tick) * usec * 1e-6 / tpqn;
            prev_tick = c.tick;
            usec = c.usec_per_quarter;
        }
        seconds += static_cast<double>(tick - prev_tick) * usec * 1e-6 / tpqn;
        return seconds;
    }

private:
    std::vector<TempoChange> changes_;
};

struct RawNote {
    int channel;
    int pitch;
    int velocity;
    uint64_t on_tick;
    uint64_t off_tick;
};

struct RawTrack {
    std::vector<RawNote> notes;
    std::array<int, 16> last_program;  // -1 when no program change seen

    RawTrack() { last_program.fill(-1); }
};

struct ChunkHeader {
    char id[4];
    uint32_t length;
};

ChunkHeader read_chunk_header(std::span<const uint8_t> bytes, size_t& pos) {
    require(bytes.size() - pos >= 8, Err::TruncatedChunk, "truncated chunk header");
    ChunkHeader h{};
    std::memcpy(h.id, bytes.data() + pos, 4);
    h.length = 0;
    for (int i = 0; i < 4; ++i) h.length = h.length << 8 | bytes[pos + 4 + static_cast<size_t>(i)];
    pos += 8;
    require(bytes.size() - pos >= h.length, Err::TruncatedChunk, "chunk length past end of file");
    return h;
}

// Parses one MTrk chunk: collects notes, program changes and tempo events.
void parse_track(Reader r, RawTrack& out, std::vector<TempoChange>& tempos) {
    uint64_t tick = 0;
    uint8_t running_status = 0;
    // open notes per (channel, pitch), FIFO-closed
    std::map<std::pair<int, int>, std::vector<size_t>> open;

    auto close_note = [&](int channel, int pitch, uint64_t off_tick) {
        auto it = open.find({channel, pitch});
        if (it == open.end() || it->second.empty()) return;
        size_t idx = it->second.front();
        it->second.erase(it->second.begin());
        out.notes[idx].off_tick = off_tick;
    };

    while (!r.done()) {
        tick += r.varint();
        uint8_t status = r.peek();
        if (status & 0x80) {
            r.skip(1);
            if (status < 0xf0) running_status = status;
        } else {
            require(running_status != 0, Err::TruncatedChunk, "data byte without running status");
            status = running_status;
        }

        if (status == 0xff) {  // meta event
            uint8_t type = r.u8();
            uint32_t len = r.varint();
            require(r.remaining() >= len, Err::TruncatedChunk, "meta event past end of chunk");
            if (type == 0x51 && len == 3) {
                uint32_t usec = 0;
                for (int i = 0; i < 3; ++i) usec = usec << 8 | r.u8();
                tempos.push_back({tick, usec == 0 ? 1u : usec});
            } else {
                r.skip(len);
                if (type == 0x2f) break;  // end of track
            }
            running_status = 0;
            continue;
        }
        if (status == 0xf0 || status == 0xf7) {  // sysex
            uint32_t len = r.varint();
            r.skip(len);
            running_status = 0;
            continue;
        }
        require(status >= 0x80, Err::TruncatedChunk, "bad status byte");

        int kind = status >> 4;
        int channel = status & 0x0f;
        switch (kind) {
            case 0x8: {  // note off
                int pitch = r.u8() & 0x7f;
                r.u8();
                close_note(channel, pitch, tick);
                break;
            }
            case 0x9: {  // note on (velocity 0 acts as note off)
                int pitch = r.u8() & 0x7f;
                int velocity = r.u8() & 0x7f;
                if (velocity == 0) {
                    close_note(channel, pitch, tick);
                } else if (channel != 9) {  // skip percussion channel
                    open[{channel, pitch}].push_back(out.notes.size());
                    out.notes.push_back({channel, pitch, velocity, tick, UINT64_MAX});
                }
                break;
            }
            case 0xa:  // poly aftertouch
            case 0xb:  // controller
            case 0xe:  // pitch bend
                r.u8();
                r.u8();
                break;
            case 0xc: {  // program change
                int program = r.u8() & 0x7f;
                out.last_program[static_cast<size_t>(channel)] = program;
                break;
            }
            case 0xd:  // channel aftertouch
                r.u8();
                break;
            default:
                raise(Err::TruncatedChunk, "unhandled status byte");
        }
    }

    // unterminated notes close at track end
    uint64_t end_tick = tick;
    for (auto& n : out.notes)
        if (n.off_tick == UINT64_MAX) n.off_tick = end_tick;
}

}  // namespace

std::vector<TrackScore> parse_midi(std::span<const uint8_t> bytes) {
    require(bytes.size() >= 14, Err::MalformedHeader, "file shorter than SMF header");
    require(std::memcmp(bytes.data(), "MThd", 4) == 0, Err::MalformedHeader, "missing MThd magic");

    size_t pos = 0;
    ChunkHeader header = read_chunk_header(bytes, pos);
    require(header.length >= 6, Err::MalformedHeader, "header chunk shorter than 6 bytes");
    Reader hr(bytes, pos, pos + header.length);
    uint16_t format = hr.u16();
    uint16_t declared_tracks = hr.u16();
    uint16_t division = hr.u16();
    pos += header.length;

    require(format == 0 || format == 1, Err::UnsupportedFormat,
            "SMF format " + std::to_string(format) + " not supported");
    require((division & 0x8000) == 0, Err::UnsupportedFormat, "SMPTE division not supported");
    require(division != 0, Err::MalformedHeader, "zero ticks per quarter note");
    int tpqn = division;

    std::vector<RawTrack> raw_tracks;
    std::vector<TempoChange> tempos;
    while (pos < bytes.size() && raw_tracks.size() < declared_tracks) {
        ChunkHeader chunk = read_chunk_header(bytes, pos);
        if (std::memcmp(chunk.id, "MTrk", 4) != 0) {
            pos += chunk.length;  // alien chunks are skipped per the SMF spec
            continue;
        }
        RawTrack raw;
        parse_track(Reader(bytes, pos, pos + chunk.length), raw, tempos);
        raw_tracks.push_back(std::move(raw));
        pos += chunk.length;
    }
    require(!raw_tracks.empty(), Err::TruncatedChunk, "no track chunks");

    TempoMap tempo_map(std::move(tempos));
    std::vector<TrackScore> scores;
    for (const auto& raw : raw_tracks) {
        std::array<TrackScore, 16> per_channel;
        std::array<bool, 16> any{};
        for (const auto& n : raw.notes) {
            NoteEvent e;
            e.pitch = n.pitch;
            e.velocity = n.velocity;
            e.onset_s = tempo_map.seconds_at(n.on_tick, tpqn);
            double off = tempo_map.seconds_at(std::max(n.off_tick, n.on_tick + 1), tpqn);
            e.duration_s = off - e.onset_s;
            per_channel[static_cast<size_t>(n.channel)].events.push_back(e);
            any[static_cast<size_t>(n.channel)] = true;
        }
        for (int ch = 0; ch < 16; ++ch) {
            if (!any[static_cast<size_t>(ch)]) continue;
            TrackScore& score = per_channel[static_cast<size_t>(ch)];
            int program = raw.last_program[static_cast<size_t>(ch)];
            score.source_program = program < 0 ? 0 : program;
            score.family = general_midi_family(score.source_program);
            score.sort_events();
            scores.push_back(std::move(score));
        }
    }
    return scores;
}

namespace {

constexpr int kWriteTpqn = 480;
constexpr uint32_t kWriteTempo = 500000;  // 120 bpm

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v & 0xff));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

void put_varint(std::vector<uint8_t>& out, uint64_t v) {
    uint8_t stack[8];
    int n = 0;
    stack[n++] = static_cast<uint8_t>(v & 0x7f);
    v >>= 7;
    while (v > 0) {
        stack[n++] = static_cast<uint8_t>((v & 0x7f) | 0x80);
        v >>= 7;
    }
    while (n > 0) out.push_back(stack[--n]);
}

uint64_t to_tick(double seconds) {
    double ticks = seconds * 1e6 / kWriteTempo * kWriteTpqn;
    return static_cast<uint64_t>(std::llround(ticks));
}

}  // namespace

std::vector<uint8_t> write_midi(const std::vector<TrackScore>& tracks) {
    std::vector<uint8_t> out;
    out.insert(out.end(), {'M', 'T', 'h', 'd'});
    put_u32(out, 6);
    put_u16(out, 1);
    put_u16(out, static_cast<uint16_t>(tracks.size() + 1));
    put_u16(out, kWriteTpqn);

    // tempo track
    std::vector<uint8_t> tempo_track;
    put_varint(tempo_track, 0);
    tempo_track.insert(tempo_track.end(), {0xff, 0x51, 0x03});
    tempo_track.push_back(static_cast<uint8_t>((kWriteTempo >> 16) & 0xff));
    tempo_track.push_back(static_cast<uint8_t>((kWriteTempo >> 8) & 0xff));
    tempo_track.push_back(static_cast<uint8_t>(kWriteTempo & 0xff));
    put_varint(tempo_track, 0);
    tempo_track.insert(tempo_track.end(), {0xff, 0x2f, 0x00});
    out.insert(out.end(), {'M', 'T', 'r', 'k'});
    put_u32(out, static_cast<uint32_t>(tempo_track.size()));
    out.insert(out.end(), tempo_track.begin(), tempo_track.end());

    for (const auto& track : tracks) {
        struct Edge {
            uint64_t tick;
            bool on;
            int pitch;
            int velocity;
        };
        std::vector<Edge> edges;
        for (const auto& e : track.events) {
            uint64_t on = to_tick(e.onset_s);
            uint64_t off = std::max(to_tick(e.onset_s + e.duration_s), on + 1);
            edges.push_back({on, true, e.pitch, e.velocity});
            edges.push_back({off, false, e.pitch, 0});
        }
        std::stable_sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
            if (a.tick != b.tick) return a.tick < b.tick;
            return a.on < b.on;  // offs before ons at the same tick
        });

        std::vector<uint8_t> body;
        put_varint(body, 0);
        body.push_back(0xc0);
        body.push_back(static_cast<uint8_t>(track.source_program & 0x7f));
        uint64_t prev = 0;
        for (const auto& edge : edges) {
            put_varint(body, edge.tick - prev);
            prev = edge.tick;
            body.push_back(edge.on ? 0x90 : 0x80);
            body.push_back(static_cast<uint8_t>(edge.pitch & 0x7f));
            body.push_back(static_cast<uint8_t>(edge.on ? (edge.velocity & 0x7f) : 0x40));
        }
        put_varint(body, 0);
        body.insert(body.end(), {0xff, 0x2f, 0x00});

        out.insert(out.end(), {'M', 'T', 'r', 'k'});
        put_u32(out, static_cast<uint32_t>(body.size()));
        out.insert(out.end(), body.begin(), body.end());
    }
    return out;
}

}  // namespace instret
