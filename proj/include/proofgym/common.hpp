#pragma once

// Shared plumbing: error types, stable hashing, UTF-8 iteration, atomic file IO.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace proofgym {

inline constexpr int kSchemaVersion = 1;   // corpus / checkpoint / report formats
inline constexpr int kEngineVersion = 1;   // logic tactic engine semantics

// ============================ errors ============================
//
// ConfigError: bad user input (CLI exits 1).  Everything else derived from
// std::runtime_error is a runtime failure (CLI exits 2).

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// ============================ hashing ============================

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

// ============================ strings ============================

inline std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            out.emplace_back(text.substr(pos));
            break;
        }
        out.emplace_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    // A trailing newline would yield a final empty element; we never emit one,
    // but tolerate it on input.
    if (!out.empty() && out.back().empty() && text.size() > 0 && text.back() == '\n')
        out.pop_back();
    return out;
}

inline std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (i) out += '\n';
        out += lines[i];
    }
    return out;
}

// ============================ UTF-8 ============================

// Byte length of the UTF-8 sequence starting at s[i].  Input is trusted to be
// well-formed (we only ever feed our own generated text); a stray continuation
// byte is treated as length 1 so iteration always makes progress.
inline size_t utf8_seq_len(unsigned char lead) {
    if (lead < 0x80) return 1;
    if ((lead >> 5) == 0x6) return 2;
    if ((lead >> 4) == 0xe) return 3;
    if ((lead >> 3) == 0x1e) return 4;
    return 1;
}

// Splits text into codepoint-sized chunks; offsets[i] is the byte offset of
// chunk i, with offsets.back() == text.size() as a sentinel.
inline void utf8_chunks(std::string_view text, std::vector<std::string>& chunks,
                        std::vector<size_t>& offsets) {
    chunks.clear();
    offsets.clear();
    size_t i = 0;
    while (i < text.size()) {
        size_t n = utf8_seq_len(static_cast<unsigned char>(text[i]));
        if (i + n > text.size()) n = 1;
        offsets.push_back(i);
        chunks.emplace_back(text.substr(i, n));
        i += n;
    }
    offsets.push_back(text.size());
}

// ============================ file IO ============================

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Atomic write: temp file in the same directory, then rename over the target.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError("short write: " + tmp.string());
    }
    fs::rename(tmp, path);
}

// Idempotent write: leaves the file untouched (same mtime, same bytes) when
// the content already matches, so reruns change no output bytes.
inline bool write_file_if_changed(const std::filesystem::path& path, std::string_view content) {
    std::error_code ec;
    if (std::filesystem::exists(path, ec)) {
        std::string old = read_file(path);
        if (old == content) return false;
    }
    write_file_atomic(path, content);
    return true;
}

}  // namespace proofgym
