#pragma once

#include <complex>
#include <filesystem>
#include <vector>

#include "instret/audio.hpp"

namespace instret {

struct MelConfig {
    int fft_size = 1024;  // power of two
    int hop = 512;
    int mel_bins = 64;
    double fmin_hz = 0.0;
    double fmax_hz = 8000.0;
    double log_floor = 1e-5;

    void validate(int sample_rate = kSampleRate) const;
    int spectrum_bins() const { return fft_size / 2 + 1; }
    int frame_count(int num_samples) const { return 1 + (num_samples - fft_size) / hop; }
};

// row-major frames x cols matrix
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), values(static_cast<size_t>(r) * c, 0.0) {}
    double& at(int r, int c) { return values[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return values[static_cast<size_t>(r) * cols + c]; }
};

struct MelSpectrogram {
    Matrix values;  // frames x mel_bins, natural-log magnitude
    MelConfig config;
};

// In-place radix-2 FFT; size must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& buf);

// Hann-windowed magnitude STFT: frames x (fft_size/2 + 1).
Matrix stft(const AudioClip& clip, const MelConfig& config);

// Triangular filters with centers equally spaced on the HTK mel scale:
// mel_bins x (fft_size/2 + 1).
Matrix mel_filterbank(const MelConfig& config, int sample_rate = kSampleRate);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

MelSpectrogram log_mel(const AudioClip& clip, const MelConfig& config);

// float32 dump with a JSON header (shape + config), for external plotting.
void save_spectrogram(const std::filesystem::path& path, const MelSpectrogram& mel);
MelSpectrogram load_spectrogram(const std::filesystem::path& path);

}  // namespace instret
