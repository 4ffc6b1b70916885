#include "instret/dsp.hpp"

#include <cmath>

#include "instret/error.hpp"
#include "instret/util.hpp"
#include "json.hpp"

namespace instret {

void MelConfig::validate(int sample_rate) const {
    require(fft_size >= 2 && (fft_size & (fft_size - 1)) == 0, Err::BadConfig,
            "fft_size must be a power of two");
    require(hop >= 1 && hop <= fft_size, Err::BadConfig, "need 1 <= hop <= fft_size");
    require(mel_bins >= 2, Err::BadConfig, "need at least 2 mel bins");
    require(fmin_hz >= 0.0 && fmax_hz > fmin_hz, Err::BadConfig, "need 0 <= fmin < fmax");
    require(fmax_hz <= sample_rate / 2.0, Err::BadConfig, "fmax above Nyquist");
    require(log_floor > 0.0, Err::BadConfig, "log floor must be positive");
}

void fft_radix2(std::vector<std::complex<double>>& buf) {
    size_t n = buf.size();
    if (n <= 1) return;
    require((n & (n - 1)) == 0, Err::BadConfig, "FFT size must be a power of two");

    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(buf[i], buf[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        double angle = -2.0 * M_PI / static_cast<double>(len);
        std::complex<double> wl(std::cos(angle), std::sin(angle));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = buf[i + k];
                std::complex<double> v = buf[i + k + len / 2] * w;
                buf[i + k] = u + v;
                buf[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

Matrix stft(const AudioClip& clip, const MelConfig& config) {
    config.validate(clip.sample_rate);
    int n = static_cast<int>(clip.samples.size());
    require(n >= config.fft_size, Err::ClipTooShort,
            "clip shorter than one analysis frame");

    int frames = config.frame_count(n);
    int bins = config.spectrum_bins();
    Matrix out(frames, bins);

    std::vector<double> window(static_cast<size_t>(config.fft_size));
    for (int i = 0; i < config.fft_size; ++i)
        window[static_cast<size_t>(i)] =
            0.5 - 0.5 * std::cos(2.0 * M_PI * i / config.fft_size);

    std::vector<std::complex<double>> buf(static_cast<size_t>(config.fft_size));
    for (int f = 0; f < frames; ++f) {
        int base = f * config.hop;
        for (int i = 0; i < config.fft_size; ++i)
            buf[static_cast<size_t>(i)] = {
                clip.samples[static_cast<size_t>(base + i)] * window[static_cast<size_t>(i)], 0.0};
        fft_radix2(buf);
        for (int k = 0; k < bins; ++k) out.at(f, k) = std::abs(buf[static_cast<size_t>(k)]);
    }
    return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Matrix mel_filterbank(const MelConfig& config, int sample_rate) {
    config.validate(sample_rate);
    int bins = config.spectrum_bins();
    Matrix fb(config.mel_bins, bins);

    double mel_lo = hz_to_mel(config.fmin_hz);
    double mel_hi = hz_to_mel(config.fmax_hz);
    std::vector<double> edges(static_cast<size_t>(config.mel_bins) + 2);
    for (int i = 0; i < config.mel_bins + 2; ++i)
        edges[static_cast<size_t>(i)] =
            mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (config.mel_bins + 1));

    for (int m = 0; m < config.mel_bins; ++m) {
        double left = edges[static_cast<size_t>(m)];
        double center = edges[static_cast<size_t>(m) + 1];
        double right = edges[static_cast<size_t>(m) + 2];
        for (int k = 0; k < bins; ++k) {
            double hz = static_cast<double>(k) * sample_rate / config.fft_size;
            double w = 0.0;
            if (hz > left && hz < center)
                w = (hz - left) / (center - left);
            else if (hz >= center && hz < right)
                w = (right - hz) / (right - center);
            fb.at(m, k) = w;
        }
    }
    return fb;
}

MelSpectrogram log_mel(const AudioClip& clip, const MelConfig& config) {
    Matrix mag = stft(clip, config);
    Matrix fb = mel_filterbank(config, clip.sample_rate);

    MelSpectrogram mel;
    mel.config = config;
    mel.values = Matrix(mag.rows, config.mel_bins);
    for (int f = 0; f < mag.rows; ++f) {
        for (int m = 0; m < config.mel_bins; ++m) {
            double acc = 0.0;
            const double* w = &fb.values[static_cast<size_t>(m) * fb.cols];
            const double* x = &mag.values[static_cast<size_t>(f) * mag.cols];
            for (int k = 0; k < mag.cols; ++k) acc += w[k] * x[k];
            mel.values.at(f, m) = std::log(std::max(acc, config.log_floor));
        }
    }
    return mel;
}

namespace {
constexpr char kSpectrogramMagic[4] = {'I', 'R', 'S', 'P'};
}

void save_spectrogram(const std::filesystem::path& path, const MelSpectrogram& mel) {
    nlohmann::json header = {
        {"rows", mel.values.rows},
        {"cols", mel.values.cols},
        {"config",
         {{"fft_size", mel.config.fft_size},
          {"hop", mel.config.hop},
          {"mel_bins", mel.config.mel_bins},
          {"fmin_hz", mel.config.fmin_hz},
          {"fmax_hz", mel.config.fmax_hz},
          {"log_floor", mel.config.log_floor}}},
    };
    std::vector<float> payload(mel.values.values.begin(), mel.values.values.end());
    write_blob(path, kSpectrogramMagic, header.dump(), payload);
}

MelSpectrogram load_spectrogram(const std::filesystem::path& path) {
    auto [json_text, payload] = read_blob(path, kSpectrogramMagic);
    nlohmann::json header = nlohmann::json::parse(json_text);
    MelSpectrogram mel;
    mel.config.fft_size = header["config"]["fft_size"].get<int>();
    mel.config.hop = header["config"]["hop"].get<int>();
    mel.config.mel_bins = header["config"]["mel_bins"].get<int>();
    mel.config.fmin_hz = header["config"]["fmin_hz"].get<double>();
    mel.config.fmax_hz = header["config"]["fmax_hz"].get<double>();
    mel.config.log_floor = header["config"]["log_floor"].get<double>();
    mel.values = Matrix(header["rows"].get<int>(), header["cols"].get<int>());
    require(payload.size() == mel.values.values.size(), Err::IoError,
            "spectrogram payload size mismatch in " + path.string());
    for (size_t i = 0; i < payload.size(); ++i) mel.values.values[i] = payload[i];
    return mel;
}

}  // namespace instret
