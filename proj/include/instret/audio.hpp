#pragma once

#include <filesystem>
#include <vector>

namespace instret {

constexpr int kSampleRate = 16000;
constexpr int kClipSamples = 80000;  // 5.0 s at 16 kHz

struct AudioClip {
    std::vector<double> samples;  // mono, values in [-1, 1]
    int sample_rate = kSampleRate;

    static AudioClip silence(int n = kClipSamples);
    double peak() const;
};

// Scales so that max |sample| = target when the clip is nonzero.
void peak_normalize(AudioClip& clip, double target = 0.9);

// WAV, PCM 16-bit little-endian, mono.
void wav_write(const std::filesystem::path& path, const AudioClip& clip);
AudioClip wav_read(const std::filesystem::path& path);

}  // namespace instret
