#include "instret/util.hpp"

#include <cstring>
#include <fstream>
#include <thread>

#include "instret/error.hpp"

namespace instret {

std::vector<uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), Err::IoError, "cannot open " + path.string());
    in.seekg(0, std::ios::end);
    std::vector<uint8_t> bytes(static_cast<size_t>(in.tellg()));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(in.good() || bytes.empty(), Err::IoError, "short read on " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, const void* data, size_t size) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), Err::IoError, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
    require(out.good(), Err::IoError, "short write on " + path.string());
}

uint64_t fnv1a(const void* data, size_t size) {
    const uint8_t* p = reinterpret_cast<const uint8_t*>(data);
    uint64_t h = 0xcbf29ce484222325ull;
    for (size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

uint64_t fnv1a_str(const std::string& s) { return fnv1a(s.data(), s.size()); }

std::string hex64(uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[value & 0xf];
        value >>= 4;
    }
    return s;
}

uint64_t file_hash(const std::filesystem::path& path) {
    auto bytes = read_file(path);
    return fnv1a(bytes.data(), bytes.size());
}

void write_blob(const std::filesystem::path& path, const char magic[4],
                const std::string& json_header, const std::vector<float>& payload) {
    std::vector<uint8_t> out;
    out.reserve(8 + json_header.size() + payload.size() * 4);
    out.insert(out.end(), magic, magic + 4);
    uint32_t len = static_cast<uint32_t>(json_header.size());
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((len >> (8 * i)) & 0xff));
    out.insert(out.end(), json_header.begin(), json_header.end());
    size_t base = out.size();
    out.resize(base + payload.size() * 4);
    static_assert(sizeof(float) == 4);
    std::memcpy(out.data() + base, payload.data(), payload.size() * 4);
    write_file(path, out.data(), out.size());
}

std::pair<std::string, std::vector<float>> read_blob(const std::filesystem::path& path,
                                                     const char magic[4]) {
    auto bytes = read_file(path);
    require(bytes.size() >= 8 && std::memcmp(bytes.data(), magic, 4) == 0, Err::IoError,
            "bad container magic in " + path.string());
    uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len |= static_cast<uint32_t>(bytes[4 + i]) << (8 * i);
    require(bytes.size() >= 8 + static_cast<size_t>(len), Err::IoError,
            "truncated header in " + path.string());
    std::string json(bytes.begin() + 8, bytes.begin() + 8 + len);
    size_t payload_bytes = bytes.size() - 8 - len;
    require(payload_bytes % 4 == 0, Err::IoError, "ragged payload in " + path.string());
    std::vector<float> payload(payload_bytes / 4);
    std::memcpy(payload.data(), bytes.data() + 8 + len, payload_bytes);
    return {json, payload};
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    workers = std::min(workers, n);
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(workers));
    int chunk = (n + workers - 1) / workers;
    std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        int lo = w * chunk;
        int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        threads.emplace_back([lo, hi, w, &fn, &errors] {
            try {
                for (int i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[static_cast<size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace instret
