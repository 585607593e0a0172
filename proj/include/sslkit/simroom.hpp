// Desk-scale reproduction of the experimental setup: image-method room
// impulse responses, convolution, noise mixing at a controlled SNR and
// randomized scenario generation.
#pragma once

#include "sslkit/common.hpp"
#include "sslkit/fft.hpp"
#include "sslkit/geometry.hpp"
#include "sslkit/stft.hpp"
#include "sslkit/synth.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace sslkit {

enum class AbsorptionModel { eyring, sabine };

inline AbsorptionModel absorption_from_name(const std::string& name) {
    if (name == "eyring") return AbsorptionModel::eyring;
    if (name == "sabine") return AbsorptionModel::sabine;
    throw ConfigError("unknown absorption model: " + name);
}

inline std::string absorption_name(AbsorptionModel m) {
    return m == AbsorptionModel::eyring ? "eyring" : "sabine";
}

struct RoomSpec {
    Vec3 dimensions = Vec3(10.0, 10.0, 3.0);
    double rt60 = 0.4;
    Vec3 array_center = Vec3(5.0, 5.0, 1.5);
    Vec3 source_position = Vec3(7.0, 5.0, 2.0);
    std::uint64_t seed = 0;

    void validate() const {
        if (rt60 < 0.0) throw ConfigError("rt60 must be >= 0");
        for (const Vec3* p : {&array_center, &source_position})
            for (int a = 0; a < 3; ++a)
                if (!((*p)(a) > 0.0 && (*p)(a) < dimensions(a)))
                    throw ConfigError("positions must lie strictly inside the room");
    }
};

struct Rir {
    RealMat taps;  // M x L at the geometry sample rate
    Vec3 true_doa = Vec3::UnitZ();  // from array center toward the source
};

// Uniform wall reflection coefficient from the target reverberation time.
// Eyring is exact for mean-free-path decay and is the default; Sabine
// (its small-absorption limit) is kept as an option.
inline double reflection_coefficient(const Vec3& dims, double rt60, AbsorptionModel model) {
    const double volume = dims.x() * dims.y() * dims.z();
    const double surface =
        2.0 * (dims.x() * dims.y() + dims.x() * dims.z() + dims.y() * dims.z());
    const double sabine_alpha = 0.161 * volume / (surface * rt60);
    double alpha;
    if (model == AbsorptionModel::sabine) {
        if (sabine_alpha >= 1.0) throw ConfigError("rt60 too small for this room (Sabine alpha >= 1)");
        alpha = sabine_alpha;
    } else {
        alpha = 1.0 - std::exp(-sabine_alpha);
    }
    return std::sqrt(1.0 - alpha);
}

// Image-method RIR between the source and each microphone (array frame is
// axis-aligned with the room). Taps land on the sample grid at
// round(f_S d / c) with amplitude beta^reflections / (4 pi d); rt60 = 0
// keeps the direct path only. Deterministic.
inline Rir generate_rir(const RoomSpec& room, const MicArrayGeometry& geom,
                        AbsorptionModel model = AbsorptionModel::eyring) {
    room.validate();
    const double fs = geom.sample_rate;
    const double c = geom.speed_of_sound;
    const Vec3 dims = room.dimensions;

    std::vector<Vec3> mics;
    for (const Vec3& r : geom.positions) mics.push_back(room.array_center + r);

    double direct_max = 0.0;
    for (const Vec3& mic : mics) {
        const double d = (room.source_position - mic).norm();
        if (d < 1e-6) throw ConfigError("source coincides with a microphone");
        direct_max = std::max(direct_max, d);
    }

    Rir rir;
    rir.true_doa = (room.source_position - room.array_center).normalized();

    // cover the decay down to ~ -75 dB past the direct arrival
    const double d_max = direct_max + (room.rt60 > 0.0 ? 1.25 * room.rt60 * c : 0.0);
    const auto taps = static_cast<Eigen::Index>(std::llround(fs * d_max / c)) + 2;
    rir.taps = RealMat::Zero(geom.mic_count(), taps);

    const double beta = room.rt60 > 0.0 ? reflection_coefficient(dims, room.rt60, model) : 0.0;
    const int nx = room.rt60 > 0.0 ? static_cast<int>(d_max / (2.0 * dims.x())) + 1 : 0;
    const int ny = room.rt60 > 0.0 ? static_cast<int>(d_max / (2.0 * dims.y())) + 1 : 0;
    const int nz = room.rt60 > 0.0 ? static_cast<int>(d_max / (2.0 * dims.z())) + 1 : 0;
    const Vec3& src = room.source_position;

    for (int m = 0; m < geom.mic_count(); ++m) {
        const Vec3& mic = mics[static_cast<std::size_t>(m)];
        for (int ix = -nx; ix <= nx; ++ix)
            for (int iy = -ny; iy <= ny; ++iy)
                for (int iz = -nz; iz <= nz; ++iz)
                    for (int px = 0; px <= 1; ++px)
                        for (int py = 0; py <= 1; ++py)
                            for (int pz = 0; pz <= 1; ++pz) {
                                const int order = std::abs(ix - px) + std::abs(ix) +
                                                  std::abs(iy - py) + std::abs(iy) +
                                                  std::abs(iz - pz) + std::abs(iz);
                                if (order > 0 && room.rt60 == 0.0) continue;
                                const Vec3 image((1 - 2 * px) * src.x() + 2 * ix * dims.x(),
                                                 (1 - 2 * py) * src.y() + 2 * iy * dims.y(),
                                                 (1 - 2 * pz) * src.z() + 2 * iz * dims.z());
                                const double d = (image - mic).norm();
                                if (d > d_max) continue;
                                const auto tap = static_cast<Eigen::Index>(std::llround(fs * d / c));
                                if (tap >= taps) continue;
                                rir.taps(m, tap) +=
                                    (order > 0 ? std::pow(beta, order) : 1.0) / (4.0 * kPi * d);
                            }
    }
    return rir;
}

struct RenderedScene {
    MultichannelSignal mixture;      // speech + scaled noise
    MultichannelSignal clean;        // convolved speech only
    MultichannelSignal noise_scaled; // the noise actually added
    Vec3 true_doa = Vec3::UnitZ();
    double snr_db = 0.0;
    Eigen::Index active_begin = 0;   // speech-active span [begin, end)
    Eigen::Index active_end = 0;
};

// Convolve the source with the RIR per channel, scale the noise so the
// broadband speech-to-noise power ratio over the speech-active span matches
// snr_db, and mix. snr_db = +infinity mixes no noise at all.
inline RenderedScene render_scene(const Rir& rir, const RealVec& source,
                                  const MultichannelSignal& noise, double snr_db) {
    const int mics = static_cast<int>(rir.taps.rows());
    if (noise.channels() != mics) throw ConfigError("noise channel count mismatch");
    if (source.size() == 0 || source.cwiseAbs().maxCoeff() == 0.0)
        throw ConfigError("silent source signal");

    const Eigen::Index out_len = source.size() + rir.taps.cols() - 1;
    if (noise.length() < out_len) throw ConfigError("noise recording shorter than the rendered scene");

    RealMat clean(mics, out_len);
    Eigen::Index first_tap = rir.taps.cols();
    for (int m = 0; m < mics; ++m) {
        clean.row(m) = fft_convolve(source, rir.taps.row(m).transpose()).transpose();
        for (Eigen::Index t = 0; t < rir.taps.cols(); ++t)
            if (rir.taps(m, t) != 0.0) {
                first_tap = std::min(first_tap, t);
                break;
            }
    }

    // active span: source duration shifted by the earliest direct arrival
    const Eigen::Index begin = std::min(first_tap, out_len);
    const Eigen::Index end = std::min(begin + source.size(), out_len);
    const Eigen::Index span = end - begin;
    if (span <= 0) throw ConfigError("empty active span");

    const double p_speech = clean.middleCols(begin, span).squaredNorm() / (mics * span);

    RenderedScene scene{MultichannelSignal(clean, noise.sample_rate),
                        MultichannelSignal(clean, noise.sample_rate),
                        MultichannelSignal(RealMat::Zero(mics, out_len), noise.sample_rate)};
    scene.true_doa = rir.true_doa;
    scene.snr_db = snr_db;
    scene.active_begin = begin;
    scene.active_end = end;

    if (!std::isinf(snr_db)) {
        const double p_noise =
            noise.samples.block(0, begin, mics, span).squaredNorm() / (mics * span);
        if (p_noise == 0.0) throw ConfigError("silent noise signal");
        if (p_speech == 0.0) throw ConfigError("silent source signal");
        const double gain = std::sqrt(p_speech / p_noise * std::pow(10.0, -snr_db / 10.0));
        scene.noise_scaled.samples = gain * noise.samples.leftCols(out_len);
        scene.mixture.samples = scene.clean.samples + scene.noise_scaled.samples;
    }

    // keep amplitudes in [-1, 1]; a common rescale preserves the SNR
    const double peak = scene.mixture.samples.cwiseAbs().maxCoeff();
    if (peak > 0.99) {
        const double g = 0.99 / peak;
        scene.mixture.samples *= g;
        scene.clean.samples *= g;
        scene.noise_scaled.samples *= g;
    }
    return scene;
}

// Measured broadband SNR of a rendered scene over its active span.
inline double measure_snr_db(const RenderedScene& scene) {
    const Eigen::Index span = scene.active_end - scene.active_begin;
    const double ps =
        scene.clean.samples.middleCols(scene.active_begin, span).squaredNorm();
    const double pn =
        scene.noise_scaled.samples.middleCols(scene.active_begin, span).squaredNorm();
    return 10.0 * std::log10(ps / pn);
}

// n random placements: array center and source uniform inside the room with
// a wall margin, the source at least min_source_distance from the array and
// in the array's upper halfspace. Deterministic per seed.
inline std::vector<RoomSpec> sample_scenarios(int n, double rt60, std::uint64_t seed,
                                              const Vec3& dimensions = Vec3(10.0, 10.0, 3.0),
                                              double wall_margin = 0.5,
                                              double min_source_distance = 1.0) {
    if (n < 1) throw ConfigError("need at least one scenario");
    std::vector<RoomSpec> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
        RoomSpec room;
        room.dimensions = dimensions;
        room.rt60 = rt60;
        room.seed = mix_seed(seed, 0x900 + static_cast<std::uint64_t>(i));
        auto draw = [&](double lo, double hi) { return detail::uniform(rng, lo, hi); };
        room.array_center = Vec3(draw(wall_margin, dimensions.x() - wall_margin),
                                 draw(wall_margin, dimensions.y() - wall_margin),
                                 draw(wall_margin, dimensions.z() - wall_margin));
        for (int attempt = 0;; ++attempt) {
            if (attempt > 10000) throw RuntimeError("scenario sampling failed to converge");
            room.source_position = Vec3(draw(wall_margin, dimensions.x() - wall_margin),
                                        draw(wall_margin, dimensions.y() - wall_margin),
                                        draw(wall_margin, dimensions.z() - wall_margin));
            const double dist = (room.source_position - room.array_center).norm();
            if (dist >= min_source_distance && room.source_position.z() >= room.array_center.z())
                break;
        }
        out.push_back(room);
    }
    return out;
}

// -- scene manifest -----------------------------------------------------------

struct SceneRecord {
    std::string wav_path;
    std::string noise_wav_path;
    Vec3 true_doa;
    double snr_db = 0.0;
    double rt60 = 0.0;
    std::uint64_t seed = 0;
    Eigen::Index active_begin = 0;
    Eigen::Index active_end = 0;
};

inline nlohmann::json scene_to_json(const SceneRecord& s) {
    return {{"wav", s.wav_path},
            {"noise_wav", s.noise_wav_path},
            {"true_doa", {s.true_doa.x(), s.true_doa.y(), s.true_doa.z()}},
            {"snr_db", s.snr_db},
            {"rt60", s.rt60},
            {"seed", s.seed},
            {"active_span", {s.active_begin, s.active_end}}};
}

inline SceneRecord scene_from_json(const nlohmann::json& j) {
    SceneRecord s;
    s.wav_path = j.at("wav").get<std::string>();
    s.noise_wav_path = j.at("noise_wav").get<std::string>();
    const auto& d = j.at("true_doa");
    s.true_doa = Vec3(d[0].get<double>(), d[1].get<double>(), d[2].get<double>());
    s.snr_db = j.at("snr_db").get<double>();
    s.rt60 = j.at("rt60").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.active_begin = j.at("active_span")[0].get<Eigen::Index>();
    s.active_end = j.at("active_span")[1].get<Eigen::Index>();
    return s;
}

inline void write_manifest(const std::string& path, const std::vector<SceneRecord>& scenes,
                           double sample_rate) {
    nlohmann::json j;
    j["format"] = "sslkit-scenes";
    j["version"] = 1;
    j["sample_rate"] = sample_rate;
    auto& arr = j["scenes"] = nlohmann::json::array();
    for (const SceneRecord& s : scenes) arr.push_back(scene_to_json(s));
    std::ofstream out(path);
    if (!out) throw RuntimeError("cannot create manifest: " + path);
    out << j.dump(2) << '\n';
}

inline std::vector<SceneRecord> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw RuntimeError("cannot open manifest: " + path);
    nlohmann::json j;
    in >> j;
    if (j.value("format", "") != "sslkit-scenes") throw RuntimeError("not a scene manifest: " + path);
    std::vector<SceneRecord> out;
    for (const auto& js : j.at("scenes")) out.push_back(scene_from_json(js));
    return out;
}

}  // namespace sslkit
