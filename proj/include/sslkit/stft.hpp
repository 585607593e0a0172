// Multichannel short-time Fourier analysis. Frame l covers samples
// [l*hop, l*hop + frame_size); each channel is windowed and transformed to a
// one-sided spectrum of frame_size/2 + 1 bins.
#pragma once

#include "sslkit/common.hpp"
#include "sslkit/fft.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace sslkit {

// Channels are rows; all channels share one length and sample rate.
struct MultichannelSignal {
    RealMat samples;  // M x T, amplitudes in [-1, 1]
    double sample_rate = 0.0;

    MultichannelSignal(RealMat s, double fs) : samples(std::move(s)), sample_rate(fs) {
        if (sample_rate <= 0.0) throw ConfigError("sample_rate must be positive");
    }

    int channels() const { return static_cast<int>(samples.rows()); }
    Eigen::Index length() const { return samples.cols(); }
};

struct SpectraFrame {
    int frame_index = 0;
    CMat bins;  // M x (N/2+1)

    int channels() const { return static_cast<int>(bins.rows()); }
    int bin_count() const { return static_cast<int>(bins.cols()); }
};

enum class Window { sine, hann, hamming, rectangular };

inline Window window_from_name(const std::string& name) {
    if (name == "sine") return Window::sine;
    if (name == "hann") return Window::hann;
    if (name == "hamming") return Window::hamming;
    if (name == "rect" || name == "rectangular") return Window::rectangular;
    throw ConfigError("unknown window: " + name);
}

inline std::string window_name(Window w) {
    switch (w) {
        case Window::sine: return "sine";
        case Window::hann: return "hann";
        case Window::hamming: return "hamming";
        case Window::rectangular: return "rect";
    }
    return "sine";
}

// Periodic windows. The sine window (sqrt of periodic Hann) is the default:
// it is power-complementary at 50% overlap.
inline RealVec window_samples(Window w, int n) {
    RealVec out(n);
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / n;
        switch (w) {
            case Window::sine: out[i] = std::sin(kPi * t); break;
            case Window::hann: out[i] = 0.5 - 0.5 * std::cos(kTwoPi * t); break;
            case Window::hamming: out[i] = 0.54 - 0.46 * std::cos(kTwoPi * t); break;
            case Window::rectangular: out[i] = 1.0; break;
        }
    }
    return out;
}

inline Eigen::Index stft_frame_count(Eigen::Index T, int frame_size, int hop_size) {
    return (T - frame_size) / hop_size + 1;
}

inline std::vector<SpectraFrame> stft_analyze(const MultichannelSignal& signal, int frame_size,
                                              int hop_size, Window window = Window::sine) {
    if (!is_power_of_two(frame_size)) throw ConfigError("frame_size must be a power of two");
    if (hop_size <= 0 || hop_size > frame_size) throw ConfigError("hop_size must be in (0, frame_size]");
    if (signal.length() < frame_size) throw ConfigError("signal shorter than one frame");

    const int channels = signal.channels();
    const int bins = frame_size / 2 + 1;
    const RealVec win = window_samples(window, frame_size);
    const Eigen::Index frames = stft_frame_count(signal.length(), frame_size, hop_size);

    Fft fft;
    std::vector<SpectraFrame> out;
    out.reserve(static_cast<std::size_t>(frames));
    RealVec buf(frame_size);
    for (Eigen::Index l = 0; l < frames; ++l) {
        SpectraFrame frame;
        frame.frame_index = static_cast<int>(l);
        frame.bins.resize(channels, bins);
        for (int m = 0; m < channels; ++m) {
            buf = signal.samples.row(m).segment(l * hop_size, frame_size).transpose().cwiseProduct(win);
            frame.bins.row(m) = fft.rfft(buf).transpose();
        }
        out.push_back(std::move(frame));
    }
    return out;
}

}  // namespace sslkit
