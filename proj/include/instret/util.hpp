#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace instret {

std::vector<uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const void* data, size_t size);

// FNV-1a, used for provenance hashes (not cryptographic).
uint64_t fnv1a(const void* data, size_t size);
uint64_t fnv1a_str(const std::string& s);
std::string hex64(uint64_t value);
uint64_t file_hash(const std::filesystem::path& path);

// Binary container: 4-byte magic, u32 little-endian JSON length, JSON header,
// then a float32 little-endian payload. Shared by checkpoints, embedding
// libraries and spectrogram dumps.
void write_blob(const std::filesystem::path& path, const char magic[4],
                const std::string& json_header, const std::vector<float>& payload);
std::pair<std::string, std::vector<float>> read_blob(const std::filesystem::path& path,
                                                     const char magic[4]);

// Runs fn(i) for i in [0, n) on `workers` threads, contiguous index blocks.
// fn must not touch shared mutable state outside its own index.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace instret
