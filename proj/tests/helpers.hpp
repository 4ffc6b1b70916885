#pragma once

#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

namespace testutil {

// independent O(n^2) DFT used as the oracle against the FFT/STFT path
inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
    size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (size_t k = 0; k < n; ++k) {
        std::complex<double> acc = 0.0;
        for (size_t t = 0; t < n; ++t) {
            double angle = -2.0 * M_PI * static_cast<double>(k * t) / static_cast<double>(n);
            acc += x[t] * std::complex<double>(std::cos(angle), std::sin(angle));
        }
        out[k] = acc;
    }
    return out;
}

// largest-magnitude DFT bin of a real signal, over bins [0, n/2]
inline size_t peak_bin(const std::vector<double>& x) {
    auto spectrum = naive_dft(x);
    size_t best = 0;
    for (size_t k = 1; k <= x.size() / 2; ++k)
        if (std::abs(spectrum[k]) > std::abs(spectrum[best])) best = k;
    return best;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("instret_test_" + tag + "_" + std::to_string(::rand()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline double rel_err(double analytic, double numeric) {
    double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / denom;
}

}  // namespace testutil
