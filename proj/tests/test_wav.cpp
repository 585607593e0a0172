#include "sslkit/wav.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <vector>

using namespace sslkit;
using Catch::Approx;

namespace {

// Hand-assembled PCM WAV for reader tests.
std::vector<char> make_pcm_wav(int bits, int channels, std::uint32_t rate,
                               const std::vector<std::int32_t>& interleaved) {
    const int bytes = bits / 8;
    const std::uint32_t data_size = static_cast<std::uint32_t>(interleaved.size() * bytes);
    std::vector<char> out;
    auto push = [&](const void* p, std::size_t n) {
        const char* c = static_cast<const char*>(p);
        out.insert(out.end(), c, c + n);
    };
    auto u32 = [&](std::uint32_t v) { push(&v, 4); };
    auto u16 = [&](std::uint16_t v) { push(&v, 2); };
    push("RIFF", 4);
    u32(36 + data_size);
    push("WAVE", 4);
    push("fmt ", 4);
    u32(16);
    u16(1);
    u16(static_cast<std::uint16_t>(channels));
    u32(rate);
    u32(rate * channels * bytes);
    u16(static_cast<std::uint16_t>(channels * bytes));
    u16(static_cast<std::uint16_t>(bits));
    push("data", 4);
    u32(data_size);
    for (std::int32_t v : interleaved) push(&v, static_cast<std::size_t>(bytes));  // little-endian
    return out;
}

}  // namespace

TEST_CASE("float32 write/read round trip", "[wav]") {
    test::TempDir dir("wav");
    std::mt19937_64 rng(5);
    RealMat samples(4, 333);
    for (int m = 0; m < 4; ++m)
        for (int t = 0; t < 333; ++t) samples(m, t) = test::urand(rng, -1, 1);
    write_wav(dir.file("x.wav"), MultichannelSignal(samples, 16000.0));
    const MultichannelSignal back = read_wav(dir.file("x.wav"));
    REQUIRE(back.channels() == 4);
    REQUIRE(back.length() == 333);
    CHECK(back.sample_rate == 16000.0);
    CHECK((back.samples - samples).cwiseAbs().maxCoeff() < 1e-7);  // float32 quantization
}

TEST_CASE("PCM16 normalization", "[wav]") {
    test::TempDir dir("wav16");
    const auto bytes = make_pcm_wav(16, 2, 16000, {0, 16384, -32768, 32767});
    std::ofstream(dir.file("p.wav"), std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    const MultichannelSignal s = read_wav(dir.file("p.wav"));
    REQUIRE(s.channels() == 2);
    REQUIRE(s.length() == 2);
    CHECK(s.samples(0, 0) == 0.0);
    CHECK(s.samples(1, 0) == Approx(0.5));
    CHECK(s.samples(0, 1) == Approx(-1.0));
    CHECK(s.samples(1, 1) == Approx(32767.0 / 32768.0));
}

TEST_CASE("PCM24 and PCM32 normalization", "[wav]") {
    test::TempDir dir("wav24");
    const auto b24 = make_pcm_wav(24, 1, 16000, {0x400000, -0x800000});
    std::ofstream(dir.file("a.wav"), std::ios::binary).write(b24.data(), static_cast<std::streamsize>(b24.size()));
    const MultichannelSignal s24 = read_wav(dir.file("a.wav"));
    CHECK(s24.samples(0, 0) == Approx(0.5));
    CHECK(s24.samples(0, 1) == Approx(-1.0));

    const auto b32 = make_pcm_wav(32, 1, 16000, {0x40000000, 0});
    std::ofstream(dir.file("b.wav"), std::ios::binary).write(b32.data(), static_cast<std::streamsize>(b32.size()));
    const MultichannelSignal s32 = read_wav(dir.file("b.wav"));
    CHECK(s32.samples(0, 0) == Approx(0.5));
}

TEST_CASE("channel count validation and malformed input", "[wav]") {
    test::TempDir dir("wavbad");
    write_wav(dir.file("two.wav"), MultichannelSignal(RealMat::Zero(2, 10), 16000.0));
    CHECK_THROWS_AS(read_wav_expect_channels(dir.file("two.wav"), 4), RuntimeError);
    CHECK_NOTHROW(read_wav_expect_channels(dir.file("two.wav"), 2));

    std::ofstream(dir.file("junk.wav"), std::ios::binary) << "definitely not a wav file";
    CHECK_THROWS_AS(read_wav(dir.file("junk.wav")), RuntimeError);
    CHECK_THROWS_AS(read_wav(dir.file("missing.wav")), RuntimeError);
}
