#include "instret/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "instret/error.hpp"
#include "instret/util.hpp"

namespace instret {

AudioClip AudioClip::silence(int n) {
    AudioClip clip;
    clip.samples.assign(static_cast<size_t>(n), 0.0);
    return clip;
}

double AudioClip::peak() const {
    double p = 0.0;
    for (double s : samples) p = std::max(p, std::abs(s));
    return p;
}

void peak_normalize(AudioClip& clip, double target) {
    double p = clip.peak();
    if (p <= 0.0) return;
    double scale = target / p;
    for (double& s : clip.samples) s *= scale;
}

namespace {

void put_le16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_le32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

uint32_t get_le32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
           static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

uint16_t get_le16(const uint8_t* p) {
    return static_cast<uint16_t>(p[0] | p[1] << 8);
}

}  // namespace

void wav_write(const std::filesystem::path& path, const AudioClip& clip) {
    uint32_t data_bytes = static_cast<uint32_t>(clip.samples.size() * 2);
    std::vector<uint8_t> out;
    out.reserve(44 + data_bytes);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_le32(out, 36 + data_bytes);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_le32(out, 16);
    put_le16(out, 1);  // PCM
    put_le16(out, 1);  // mono
    put_le32(out, static_cast<uint32_t>(clip.sample_rate));
    put_le32(out, static_cast<uint32_t>(clip.sample_rate * 2));
    put_le16(out, 2);
    put_le16(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_le32(out, data_bytes);
    for (double s : clip.samples) {
        double clamped = std::clamp(s, -1.0, 1.0);
        int16_t q = static_cast<int16_t>(std::lround(clamped * 32767.0));
        put_le16(out, static_cast<uint16_t>(q));
    }
    write_file(path, out.data(), out.size());
}

AudioClip wav_read(const std::filesystem::path& path) {
    auto bytes = read_file(path);
    require(bytes.size() >= 44 && std::memcmp(bytes.data(), "RIFF", 4) == 0 &&
                std::memcmp(bytes.data() + 8, "WAVE", 4) == 0,
            Err::IoError, "not a RIFF/WAVE file: " + path.string());

    size_t pos = 12;
    AudioClip clip;
    bool got_fmt = false, got_data = false;
    while (pos + 8 <= bytes.size()) {
        uint32_t size = get_le32(bytes.data() + pos + 4);
        const uint8_t* body = bytes.data() + pos + 8;
        require(pos + 8 + size <= bytes.size(), Err::IoError, "truncated WAV chunk");
        if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
            require(size >= 16, Err::IoError, "short fmt chunk");
            require(get_le16(body) == 1, Err::IoError, "only PCM WAV supported");
            require(get_le16(body + 2) == 1, Err::IoError, "only mono WAV supported");
            clip.sample_rate = static_cast<int>(get_le32(body + 4));
            require(get_le16(body + 14) == 16, Err::IoError, "only 16-bit WAV supported");
            got_fmt = true;
        } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
            clip.samples.resize(size / 2);
            for (size_t i = 0; i < clip.samples.size(); ++i) {
                int16_t q = static_cast<int16_t>(get_le16(body + i * 2));
                clip.samples[i] = static_cast<double>(q) / 32767.0;
            }
            got_data = true;
        }
        pos += 8 + size + (size & 1);
    }
    require(got_fmt && got_data, Err::IoError, "missing fmt/data chunk in " + path.string());
    return clip;
}

}  // namespace instret
