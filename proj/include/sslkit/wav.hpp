// RIFF/WAVE reader and writer. Reads PCM 16/24/32-bit and IEEE float 32-bit
// (plain or WAVE_FORMAT_EXTENSIBLE); samples are normalized to [-1, 1] doubles
// on ingestion regardless of source bit depth. Writes 32-bit float.
#pragma once

#include "sslkit/common.hpp"
#include "sslkit/stft.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace sslkit {
namespace detail {

inline std::uint32_t read_u32(const char* p) {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    return v;
}
inline std::uint16_t read_u16(const char* p) {
    std::uint16_t v;
    std::memcpy(&v, p, 2);
    return v;
}

}  // namespace detail

inline MultichannelSignal read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RuntimeError("cannot open WAV file: " + path);
    std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (data.size() < 12 || std::memcmp(data.data(), "RIFF", 4) != 0 ||
        std::memcmp(data.data() + 8, "WAVE", 4) != 0)
        throw RuntimeError("not a RIFF/WAVE file: " + path);

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const char* payload = nullptr;
    std::size_t payload_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= data.size()) {
        const std::uint32_t chunk_size = detail::read_u32(data.data() + pos + 4);
        const char* body = data.data() + pos + 8;
        if (pos + 8 + chunk_size > data.size()) throw RuntimeError("truncated WAV chunk: " + path);
        if (std::memcmp(data.data() + pos, "fmt ", 4) == 0) {
            if (chunk_size < 16) throw RuntimeError("malformed fmt chunk: " + path);
            format = detail::read_u16(body);
            channels = detail::read_u16(body + 2);
            rate = detail::read_u32(body + 4);
            bits = detail::read_u16(body + 14);
            if (format == 0xFFFE && chunk_size >= 40)  // extensible: SubFormat GUID leads with the tag
                format = detail::read_u16(body + 24);
        } else if (std::memcmp(data.data() + pos, "data", 4) == 0) {
            payload = body;
            payload_size = chunk_size;
        }
        pos += 8 + chunk_size + (chunk_size & 1);  // chunks are word-aligned
    }
    if (channels == 0 || rate == 0) throw RuntimeError("missing fmt chunk: " + path);
    if (payload == nullptr) throw RuntimeError("missing data chunk: " + path);

    const bool pcm = format == 1;
    const bool ieee = format == 3;
    if (!(pcm && (bits == 16 || bits == 24 || bits == 32)) && !(ieee && bits == 32))
        throw RuntimeError("unsupported WAV encoding (format " + std::to_string(format) + ", " +
                           std::to_string(bits) + " bits): " + path);

    const std::size_t bytes_per_sample = bits / 8;
    const std::size_t frames = payload_size / (bytes_per_sample * channels);
    RealMat samples(channels, static_cast<Eigen::Index>(frames));
    const char* p = payload;
    for (std::size_t t = 0; t < frames; ++t) {
        for (int m = 0; m < channels; ++m, p += bytes_per_sample) {
            double v = 0.0;
            if (ieee) {
                float f;
                std::memcpy(&f, p, 4);
                v = f;
            } else if (bits == 16) {
                std::int16_t s;
                std::memcpy(&s, p, 2);
                v = s / 32768.0;
            } else if (bits == 24) {
                std::int32_t s = (static_cast<std::uint8_t>(p[0])) |
                                 (static_cast<std::uint8_t>(p[1]) << 8) |
                                 (static_cast<std::int8_t>(p[2]) << 16);
                v = s / 8388608.0;
            } else {
                std::int32_t s;
                std::memcpy(&s, p, 4);
                v = s / 2147483648.0;
            }
            samples(m, static_cast<Eigen::Index>(t)) = v;
        }
    }
    return MultichannelSignal(std::move(samples), static_cast<double>(rate));
}

inline MultichannelSignal read_wav_expect_channels(const std::string& path, int expected) {
    MultichannelSignal s = read_wav(path);
    if (s.channels() != expected)
        throw RuntimeError("WAV channel count " + std::to_string(s.channels()) + " != expected " +
                           std::to_string(expected) + ": " + path);
    return s;
}

inline void write_wav(const std::string& path, const MultichannelSignal& signal) {
    const int channels = signal.channels();
    const std::uint32_t rate = static_cast<std::uint32_t>(signal.sample_rate);
    const std::uint32_t frames = static_cast<std::uint32_t>(signal.length());
    const std::uint32_t data_bytes = frames * channels * 4;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot create WAV file: " + path);
    auto u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto u16 = [&](std::uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };

    out.write("RIFF", 4);
    u32(36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    u32(16);
    u16(3);  // IEEE float
    u16(static_cast<std::uint16_t>(channels));
    u32(rate);
    u32(rate * channels * 4);
    u16(static_cast<std::uint16_t>(channels * 4));
    u16(32);
    out.write("data", 4);
    u32(data_bytes);
    for (std::uint32_t t = 0; t < frames; ++t)
        for (int m = 0; m < channels; ++m) {
            const float f = static_cast<float>(signal.samples(m, t));
            out.write(reinterpret_cast<const char*>(&f), 4);
        }
    if (!out) throw RuntimeError("short write: " + path);
}

}  // namespace sslkit
