// Self-contained test-signal generators: a speech-like source (amplitude
// modulated voiced/unvoiced alternation) and a fan-noise field (pink noise
// plus narrowband hums between 2.5 and 5 kHz, radiated from fixed points
// below the array). Everything is deterministic given its seed.
#pragma once

#include "sslkit/common.hpp"
#include "sslkit/geometry.hpp"
#include "sslkit/stft.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace sslkit {

namespace detail {

// Uniform double in [0, 1) from the raw engine; avoids distribution
// implementation differences so draws are reproducible everywhere.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Paul Kellet's economy pinking filter.
class PinkFilter {
public:
    double operator()(double white) {
        b0_ = 0.99765 * b0_ + white * 0.0990460;
        b1_ = 0.96300 * b1_ + white * 0.2965164;
        b2_ = 0.57000 * b2_ + white * 1.0526913;
        return b0_ + b1_ + b2_ + white * 0.1848;
    }

private:
    double b0_ = 0.0, b1_ = 0.0, b2_ = 0.0;
};

}  // namespace detail

// Mono speech-like utterance: alternating voiced (drifting harmonic stack)
// and unvoiced (high-passed noise) segments with short pauses and raised
// cosine segment envelopes. Peak-normalized to 0.7.
inline RealVec speech_like(std::uint64_t seed, double duration_sec, double sample_rate) {
    if (duration_sec <= 0.0) throw ConfigError("duration must be positive");
    std::mt19937_64 rng(seed);
    const auto total = static_cast<Eigen::Index>(duration_sec * sample_rate);
    RealVec out = RealVec::Zero(total);

    Eigen::Index pos = 0;
    double f0 = detail::uniform(rng, 100.0, 220.0);
    while (pos < total) {
        const double r = detail::uniform01(rng);
        const bool pause = r < 0.12;
        const bool voiced = r >= 0.42;
        const double dur = pause ? detail::uniform(rng, 0.04, 0.12)
                                 : voiced ? detail::uniform(rng, 0.12, 0.30)
                                          : detail::uniform(rng, 0.06, 0.18);
        const auto len = std::min<Eigen::Index>(static_cast<Eigen::Index>(dur * sample_rate),
                                                total - pos);
        if (len <= 0) break;
        if (!pause) {
            const auto ramp = std::min<Eigen::Index>(static_cast<Eigen::Index>(0.02 * sample_rate),
                                                     len / 2);
            if (voiced) {
                f0 = std::clamp(f0 + detail::uniform(rng, -25.0, 25.0), 90.0, 240.0);
                const double drift = detail::uniform(rng, -0.1, 0.1);  // Hz per sample
                const int harmonics = static_cast<int>(4000.0 / f0);
                std::vector<double> phase(static_cast<std::size_t>(harmonics));
                for (auto& p : phase) p = detail::uniform(rng, 0.0, kTwoPi);
                double f = f0;
                for (Eigen::Index n = 0; n < len; ++n) {
                    f += drift / sample_rate;
                    double v = 0.0;
                    for (int h = 1; h <= harmonics; ++h) {
                        phase[static_cast<std::size_t>(h - 1)] += kTwoPi * h * f / sample_rate;
                        v += std::sin(phase[static_cast<std::size_t>(h - 1)]) / h;
                    }
                    out[pos + n] = 0.35 * v;
                }
            } else {
                double hp_prev = 0.0;
                for (Eigen::Index n = 0; n < len; ++n) {
                    const double w = detail::uniform(rng, -1.0, 1.0);
                    out[pos + n] = 0.25 * (w - hp_prev);
                    hp_prev = w;
                }
            }
            for (Eigen::Index n = 0; n < ramp; ++n) {
                const double g = 0.5 - 0.5 * std::cos(kPi * (n + 1.0) / (ramp + 1.0));
                out[pos + n] *= g;
                out[pos + len - 1 - n] *= g;
            }
        }
        pos += len;
    }

    const double peak = out.cwiseAbs().maxCoeff();
    if (peak > 0.0) out *= 0.7 / peak;
    return out;
}

// A fixed fan installation: emitter positions are relative to the array
// center (below the array plane, outside the DOA halfsphere) and the hum
// frequencies are a property of the installation, so separate renders share
// the same spatial and spectral structure.
struct FanNoiseModel {
    std::vector<Vec3> fan_offsets;                // meters, array frame
    std::vector<std::vector<double>> hum_freqs;   // per fan, Hz
    std::vector<std::vector<double>> hum_amps;    // per fan, relative to pink
    double sensor_noise = 0.03;                   // independent white floor, relative

    static FanNoiseModel make(std::uint64_t seed, int fans = 2, int hums_per_fan = 3) {
        std::mt19937_64 rng(mix_seed(seed, 0x5a17));
        FanNoiseModel model;
        for (int f = 0; f < fans; ++f) {
            model.fan_offsets.emplace_back(detail::uniform(rng, -0.15, 0.15),
                                           detail::uniform(rng, -0.15, 0.15),
                                           detail::uniform(rng, -0.35, -0.2));
            std::vector<double> freqs, amps;
            for (int h = 0; h < hums_per_fan; ++h) {
                freqs.push_back(detail::uniform(rng, 2500.0, 5000.0));
                amps.push_back(detail::uniform(rng, 1.0, 2.0));
            }
            model.hum_freqs.push_back(std::move(freqs));
            model.hum_amps.push_back(std::move(amps));
        }
        return model;
    }
};

// One noise recording at the mics: each fan emits pink noise + its hums,
// propagated free-field (integer-sample delay, 1/d gain) to every mic, plus
// an independent white floor per channel. Separate draws of the same model
// share spatial structure but not waveforms.
inline MultichannelSignal render_fan_noise(const FanNoiseModel& model,
                                           const MicArrayGeometry& geom, Eigen::Index length,
                                           std::uint64_t draw_seed) {
    const int mics = geom.mic_count();
    const double fs = geom.sample_rate;
    const double c = geom.speed_of_sound;

    // per-fan propagation bookkeeping
    Eigen::Index max_delay = 0;
    std::vector<std::vector<Eigen::Index>> delays(model.fan_offsets.size());
    std::vector<std::vector<double>> gains(model.fan_offsets.size());
    for (std::size_t f = 0; f < model.fan_offsets.size(); ++f) {
        for (int m = 0; m < mics; ++m) {
            const double d = (geom.positions[static_cast<std::size_t>(m)] - model.fan_offsets[f]).norm();
            const auto delay = static_cast<Eigen::Index>(std::llround(fs * d / c));
            delays[f].push_back(delay);
            gains[f].push_back(0.25 / d);  // reference 1/d gain, d ~ 0.25 m
            max_delay = std::max(max_delay, delay);
        }
    }

    RealMat out = RealMat::Zero(mics, length);
    for (std::size_t f = 0; f < model.fan_offsets.size(); ++f) {
        std::mt19937_64 rng(mix_seed(draw_seed, 0xfa0 + f));
        const Eigen::Index src_len = length + max_delay;
        RealVec src(src_len);
        detail::PinkFilter pink;
        std::vector<double> phases(model.hum_freqs[f].size());
        for (auto& p : phases) p = detail::uniform(rng, 0.0, kTwoPi);
        for (Eigen::Index n = 0; n < src_len; ++n) {
            double v = pink(detail::uniform(rng, -1.0, 1.0));
            for (std::size_t h = 0; h < phases.size(); ++h)
                v += model.hum_amps[f][h] *
                     std::sin(phases[h] + kTwoPi * model.hum_freqs[f][h] * n / fs);
            src[n] = 0.2 * v;
        }
        for (int m = 0; m < mics; ++m) {
            const Eigen::Index d = delays[f][static_cast<std::size_t>(m)];
            out.row(m) += gains[f][static_cast<std::size_t>(m)] *
                          src.segment(max_delay - d, length).transpose();
        }
    }

    std::mt19937_64 rng(mix_seed(draw_seed, 0xf100));
    for (int m = 0; m < mics; ++m)
        for (Eigen::Index n = 0; n < length; ++n)
            out(m, n) += model.sensor_noise * 0.2 * detail::uniform(rng, -1.0, 1.0);

    const double peak = out.cwiseAbs().maxCoeff();
    if (peak > 0.99) out *= 0.99 / peak;
    return MultichannelSignal(std::move(out), fs);
}

// M channels of independent white noise; used by correlation tests.
inline MultichannelSignal white_noise(int channels, Eigen::Index length, double sample_rate,
                                      std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    RealMat out(channels, length);
    for (int m = 0; m < channels; ++m)
        for (Eigen::Index n = 0; n < length; ++n) out(m, n) = detail::uniform(rng, -1.0, 1.0);
    return MultichannelSignal(std::move(out), sample_rate);
}

}  // namespace sslkit
