// Run configuration: a human-editable key-value file with sections, defaults
// matching the reference parameter set (f_S=16000, c=343, M=4, N=256,
// hop=128, Q=1282, alpha=0.05, delta=1e-5). Parse -> serialize -> parse is
// the identity.
#pragma once

#include "sslkit/common.hpp"
#include "sslkit/eval.hpp"
#include "sslkit/geometry.hpp"
#include "sslkit/kdtree.hpp"
#include "sslkit/simroom.hpp"
#include "sslkit/stft.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace sslkit {

struct RunConfig {
    // [geometry]
    std::vector<Vec3> mic_positions = {Vec3(0.029, 0.029, 0.0), Vec3(0.029, -0.029, 0.0),
                                       Vec3(-0.029, 0.029, 0.0), Vec3(-0.029, -0.029, 0.0)};
    double speed_of_sound = 343.0;
    double sample_rate = 16000.0;

    // [stft]
    int frame_size = 256;
    int hop_size = 128;
    Window window = Window::sine;

    // [grid]
    GridBase grid_base = GridBase::icosahedron;
    int grid_level = 4;

    // [dsvd]
    double alpha = 0.05;
    double delta = 1e-5;
    int rerank = kDefaultRerank;
    SearchBackend backend = SearchBackend::kdtree;

    // [music]
    double music_regularization = kDefaultMusicRegularization;
    int n_sources = 1;
    int band_lo = 0;
    int band_hi = -1;

    // [sim]
    Vec3 room_dims = Vec3(10.0, 10.0, 3.0);
    double wall_margin = 0.5;
    double min_source_distance = 1.0;
    double scene_duration = 2.0;
    double noise_duration = 3.0;
    AbsorptionModel absorption = AbsorptionModel::eyring;
    std::string corpus_dir;

    // [eval]
    double delta_theta = 0.2;
    int warmup_frames = -1;  // -1: ceil(1/alpha)
    int n_scenarios = 10;
    std::vector<double> snr_list = {-10.0, 0.0, 10.0, 20.0};
    std::vector<double> rt60_list = {0.2, 0.8};
    std::uint64_t seed = 1234;
    int jobs = 1;
    bool assert_trends = false;
    double assert_top_cell_auc = 0.0;  // 0 disables

    void validate() const {
        if (mic_positions.size() < 2) throw ConfigError("need at least 2 microphones");
        if (!is_power_of_two(frame_size)) throw ConfigError("stft.frame_size must be a power of two");
        if (hop_size <= 0 || hop_size > frame_size) throw ConfigError("stft.hop_size out of range");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("dsvd.alpha must be in (0, 1)");
        if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("dsvd.delta must be in (0, 1)");
        if (rerank < 1) throw ConfigError("dsvd.rerank must be >= 1");
        if (grid_level < 0) throw ConfigError("grid.level must be >= 0");
        if (n_sources < 1 || n_sources >= static_cast<int>(mic_positions.size()))
            throw ConfigError("music.n_sources must be in [1, M)");
        if (n_scenarios < 1) throw ConfigError("eval.n_scenarios must be >= 1");
        if (jobs < 1) throw ConfigError("eval.jobs must be >= 1");
        if (delta_theta < 0.0 || delta_theta > kPi / 2.0)
            throw ConfigError("eval.delta_theta must be in [0, pi/2]");
    }

    MicArrayGeometry geometry() const {
        return MicArrayGeometry(mic_positions, speed_of_sound, sample_rate);
    }

    // resolved corpus directory: the environment variable wins
    std::string effective_corpus_dir() const {
        if (const char* env = std::getenv("SSLKIT_CORPUS"); env != nullptr && env[0] != '\0')
            return env;
        return corpus_dir;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<double> parse_double_list(const std::string& s, const std::string& key) {
    std::vector<double> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) {
        try {
            out.push_back(std::stod(tok));
        } catch (...) {
            throw ConfigError("cannot parse number '" + tok + "' in " + key);
        }
    }
    if (out.empty()) throw ConfigError("empty list for " + key);
    return out;
}

inline std::string format_double(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

}  // namespace detail

inline RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::vector<Vec3> mics;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("malformed section at line " + std::to_string(line_no));
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value at line " + std::to_string(line_no));
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const std::string full = section + "." + key;

        auto as_double = [&]() {
            try {
                return std::stod(value);
            } catch (...) {
                throw ConfigError("cannot parse number for " + full);
            }
        };
        auto as_int = [&]() {
            try {
                return std::stoi(value);
            } catch (...) {
                throw ConfigError("cannot parse integer for " + full);
            }
        };

        if (section == "geometry") {
            if (key.rfind("mic_", 0) == 0) {
                const auto v = detail::parse_double_list(value, full);
                if (v.size() != 3) throw ConfigError(full + " needs three coordinates");
                mics.emplace_back(v[0], v[1], v[2]);
            } else if (key == "speed_of_sound") cfg.speed_of_sound = as_double();
            else if (key == "sample_rate") cfg.sample_rate = as_double();
            else throw ConfigError("unknown key " + full);
        } else if (section == "stft") {
            if (key == "frame_size") cfg.frame_size = as_int();
            else if (key == "hop_size") cfg.hop_size = as_int();
            else if (key == "window") cfg.window = window_from_name(value);
            else throw ConfigError("unknown key " + full);
        } else if (section == "grid") {
            if (key == "base") cfg.grid_base = grid_base_from_name(value);
            else if (key == "level") cfg.grid_level = as_int();
            else throw ConfigError("unknown key " + full);
        } else if (section == "dsvd") {
            if (key == "alpha") cfg.alpha = as_double();
            else if (key == "delta") cfg.delta = as_double();
            else if (key == "rerank") cfg.rerank = as_int();
            else if (key == "backend") cfg.backend = search_backend_from_name(value);
            else throw ConfigError("unknown key " + full);
        } else if (section == "music") {
            if (key == "regularization") cfg.music_regularization = as_double();
            else if (key == "n_sources") cfg.n_sources = as_int();
            else if (key == "band_lo") cfg.band_lo = as_int();
            else if (key == "band_hi") cfg.band_hi = as_int();
            else throw ConfigError("unknown key " + full);
        } else if (section == "sim") {
            if (key == "room") {
                const auto v = detail::parse_double_list(value, full);
                if (v.size() != 3) throw ConfigError(full + " needs three dimensions");
                cfg.room_dims = Vec3(v[0], v[1], v[2]);
            } else if (key == "wall_margin") cfg.wall_margin = as_double();
            else if (key == "min_source_distance") cfg.min_source_distance = as_double();
            else if (key == "scene_duration") cfg.scene_duration = as_double();
            else if (key == "noise_duration") cfg.noise_duration = as_double();
            else if (key == "absorption") cfg.absorption = absorption_from_name(value);
            else if (key == "corpus_dir") cfg.corpus_dir = value;
            else throw ConfigError("unknown key " + full);
        } else if (section == "eval") {
            if (key == "delta_theta") cfg.delta_theta = as_double();
            else if (key == "warmup_frames") cfg.warmup_frames = as_int();
            else if (key == "n_scenarios") cfg.n_scenarios = as_int();
            else if (key == "snr_list") cfg.snr_list = detail::parse_double_list(value, full);
            else if (key == "rt60_list") cfg.rt60_list = detail::parse_double_list(value, full);
            else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
            else if (key == "jobs") cfg.jobs = as_int();
            else if (key == "assert_trends") cfg.assert_trends = value == "true" || value == "1";
            else if (key == "assert_top_cell_auc") cfg.assert_top_cell_auc = as_double();
            else throw ConfigError("unknown key " + full);
        } else {
            throw ConfigError("unknown section [" + section + "] at line " + std::to_string(line_no));
        }
    }
    if (!mics.empty()) cfg.mic_positions = std::move(mics);
    return cfg;
}

inline std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream out;
    auto d = detail::format_double;
    out << "# sslkit run configuration\n";
    out << "[geometry]\n";
    for (std::size_t m = 0; m < cfg.mic_positions.size(); ++m)
        out << "mic_" << m << " = " << d(cfg.mic_positions[m].x()) << ' '
            << d(cfg.mic_positions[m].y()) << ' ' << d(cfg.mic_positions[m].z()) << '\n';
    out << "speed_of_sound = " << d(cfg.speed_of_sound) << '\n';
    out << "sample_rate = " << d(cfg.sample_rate) << '\n';
    out << "\n[stft]\n";
    out << "frame_size = " << cfg.frame_size << '\n';
    out << "hop_size = " << cfg.hop_size << '\n';
    out << "window = " << window_name(cfg.window) << '\n';
    out << "\n[grid]\n";
    out << "base = " << grid_base_name(cfg.grid_base) << '\n';
    out << "level = " << cfg.grid_level << '\n';
    out << "\n[dsvd]\n";
    out << "alpha = " << d(cfg.alpha) << '\n';
    out << "delta = " << d(cfg.delta) << '\n';
    out << "rerank = " << cfg.rerank << '\n';
    out << "backend = " << search_backend_name(cfg.backend) << '\n';
    out << "\n[music]\n";
    out << "regularization = " << d(cfg.music_regularization) << '\n';
    out << "n_sources = " << cfg.n_sources << '\n';
    out << "band_lo = " << cfg.band_lo << '\n';
    out << "band_hi = " << cfg.band_hi << '\n';
    out << "\n[sim]\n";
    out << "room = " << d(cfg.room_dims.x()) << ' ' << d(cfg.room_dims.y()) << ' '
        << d(cfg.room_dims.z()) << '\n';
    out << "wall_margin = " << d(cfg.wall_margin) << '\n';
    out << "min_source_distance = " << d(cfg.min_source_distance) << '\n';
    out << "scene_duration = " << d(cfg.scene_duration) << '\n';
    out << "noise_duration = " << d(cfg.noise_duration) << '\n';
    out << "absorption = " << absorption_name(cfg.absorption) << '\n';
    out << "corpus_dir = " << cfg.corpus_dir << '\n';
    out << "\n[eval]\n";
    out << "delta_theta = " << d(cfg.delta_theta) << '\n';
    out << "warmup_frames = " << cfg.warmup_frames << '\n';
    out << "n_scenarios = " << cfg.n_scenarios << '\n';
    out << "snr_list =";
    for (double v : cfg.snr_list) out << ' ' << d(v);
    out << '\n';
    out << "rt60_list =";
    for (double v : cfg.rt60_list) out << ' ' << d(v);
    out << '\n';
    out << "seed = " << cfg.seed << '\n';
    out << "jobs = " << cfg.jobs << '\n';
    out << "assert_trends = " << (cfg.assert_trends ? "true" : "false") << '\n';
    out << "assert_top_cell_auc = " << d(cfg.assert_top_cell_auc) << '\n';
    return out.str();
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

inline void save_config(const std::string& path, const RunConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw RuntimeError("cannot create config file: " + path);
    out << serialize_config(cfg);
}

}  // namespace sslkit
