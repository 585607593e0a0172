// sslkit command-line driver: offline index build, scene simulation,
// localization runs, evaluation grids and benchmarks, driven by a config
// file with flag overrides.
//
// Exit codes: 0 success, 1 usage/config error, 2 runtime failure (including
// failed assertions enabled in the config).

#include "sslkit/config.hpp"
#include "sslkit/correlation.hpp"
#include "sslkit/dsvd_phat.hpp"
#include "sslkit/eval.hpp"
#include "sslkit/geometry.hpp"
#include "sslkit/gsvd_music.hpp"
#include "sslkit/simroom.hpp"
#include "sslkit/stft.hpp"
#include "sslkit/synth.hpp"
#include "sslkit/wav.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace sslkit;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

EvalContext make_context(const RunConfig& cfg, const SvdIndex& index,
                         const SteeringVectorBank& bank) {
    EvalContext ctx;
    ctx.index = &index;
    ctx.bank = &bank;
    ctx.params.alpha = cfg.alpha;
    ctx.params.rerank = cfg.rerank;
    ctx.params.music_regularization = cfg.music_regularization;
    ctx.params.n_sources = cfg.n_sources;
    ctx.params.band_lo = cfg.band_lo;
    ctx.params.band_hi = cfg.band_hi;
    ctx.frame_size = cfg.frame_size;
    ctx.hop_size = cfg.hop_size;
    ctx.window = cfg.window;
    ctx.room_dims = cfg.room_dims;
    ctx.wall_margin = cfg.wall_margin;
    ctx.min_source_distance = cfg.min_source_distance;
    ctx.scene_duration = cfg.scene_duration;
    ctx.noise_duration = cfg.noise_duration;
    ctx.absorption = cfg.absorption;
    ctx.corpus_dir = cfg.effective_corpus_dir();
    ctx.delta_theta = cfg.delta_theta;
    ctx.warmup_frames = cfg.warmup_frames;
    ctx.jobs = cfg.jobs;
    return ctx;
}

int cmd_build_index(const RunConfig& cfg, const std::string& out_path,
                    const std::string& grid_csv) {
    const auto t0 = std::chrono::steady_clock::now();
    const MicArrayGeometry geom = cfg.geometry();
    const DoaGrid grid = build_doa_grid(cfg.grid_level, cfg.grid_base);
    const SvdIndex index = build_index(geom, grid, cfg.frame_size, cfg.delta, cfg.backend);
    write_index(out_path, index);
    if (!grid_csv.empty()) write_grid_csv(grid_csv, grid);

    std::cout << "grid: base=" << grid_base_name(grid.base) << " level=" << grid.refinement_level
              << " Q=" << grid.size() << '\n';
    std::cout << "K = " << index.k << '\n';
    std::cout << std::setprecision(12) << "captured energy ratio = " << index.energy_ratio()
              << " (target >= " << 1.0 - index.delta << ")\n";
    std::cout << "index written to " << out_path << " (" << fs::file_size(out_path)
              << " bytes) in " << std::fixed << std::setprecision(2) << seconds_since(t0)
              << " s\n";
    return 0;
}

int cmd_simulate(const RunConfig& cfg, const std::string& out_dir, int count, double snr_db,
                 double rt60) {
    const MicArrayGeometry geom = cfg.geometry();
    fs::create_directories(out_dir);
    const std::vector<RoomSpec> rooms = sample_scenarios(
        count, rt60, cfg.seed, cfg.room_dims, cfg.wall_margin, cfg.min_source_distance);

    std::vector<SceneRecord> manifest;
    for (int i = 0; i < count; ++i) {
        const RoomSpec& room = rooms[static_cast<std::size_t>(i)];
        const RealVec speech = load_source_signal(cfg.effective_corpus_dir(), cfg.scene_duration,
                                                  geom.sample_rate, room.seed);
        const Rir rir = generate_rir(room, geom, cfg.absorption);
        const FanNoiseModel fans = FanNoiseModel::make(room.seed);
        const Eigen::Index scene_len = speech.size() + rir.taps.cols() - 1;
        const MultichannelSignal noise_mix =
            render_fan_noise(fans, geom, scene_len, mix_seed(room.seed, 1));
        const RenderedScene scene = render_scene(rir, speech, noise_mix, snr_db);
        const auto noise_len = static_cast<Eigen::Index>(cfg.noise_duration * geom.sample_rate);
        const MultichannelSignal noise_rec =
            render_fan_noise(fans, geom, noise_len, mix_seed(room.seed, 2));

        std::ostringstream base;
        base << "scene_" << std::setw(3) << std::setfill('0') << i;
        SceneRecord rec;
        rec.wav_path = base.str() + ".wav";
        rec.noise_wav_path = base.str() + "_noise.wav";
        rec.true_doa = scene.true_doa;
        rec.snr_db = snr_db;
        rec.rt60 = rt60;
        rec.seed = room.seed;
        rec.active_begin = scene.active_begin;
        rec.active_end = scene.active_end;
        write_wav((fs::path(out_dir) / rec.wav_path).string(), scene.mixture);
        write_wav((fs::path(out_dir) / rec.noise_wav_path).string(), noise_rec);
        manifest.push_back(std::move(rec));
    }
    write_manifest((fs::path(out_dir) / "manifest.json").string(), manifest, geom.sample_rate);
    std::cout << "wrote " << count << " scenes to " << out_dir << '\n';
    return 0;
}

int cmd_localize(const RunConfig& cfg, const std::string& wav_path, const std::string& method_name_arg,
                 const std::string& index_path, const std::string& noise_wav,
                 const std::string& noise_cov, const std::string& save_noise_cov,
                 const std::string& out_path, const std::string& format) {
    const Method method = method_from_name(method_name_arg);
    if (format != "csv" && format != "jsonl") throw ConfigError("format must be csv or jsonl");

    std::optional<SvdIndex> index;
    if (!index_path.empty() && fs::exists(index_path)) {
        index.emplace(read_index(index_path));
    } else {
        if (!index_path.empty())
            std::cerr << "index file " << index_path << " not found; building from config\n";
        const MicArrayGeometry geom = cfg.geometry();
        const DoaGrid grid = build_doa_grid(cfg.grid_level, cfg.grid_base);
        index.emplace(build_index(geom, grid, cfg.frame_size, cfg.delta, cfg.backend));
    }
    const MicArrayGeometry& geom = index->geometry;
    const int frame_size = index->w_ref->frame_size;

    const MultichannelSignal signal = read_wav_expect_channels(wav_path, geom.mic_count());
    if (signal.sample_rate != geom.sample_rate)
        throw RuntimeError("WAV sample rate " + std::to_string(signal.sample_rate) +
                           " != geometry sample rate");

    std::optional<CorrelationSet> noise;
    if (!noise_cov.empty()) {
        noise.emplace(read_noise_sidecar(noise_cov));
    } else if (!noise_wav.empty()) {
        const MultichannelSignal rec = read_wav_expect_channels(noise_wav, geom.mic_count());
        noise.emplace(estimate_noise(stft_analyze(rec, frame_size, cfg.hop_size, cfg.window),
                                     cfg.alpha));
    }
    if (method != Method::svd_phat && !noise)
        throw ConfigError(method_name(method) + " needs --noise-wav or --noise-cov");
    if (noise && !save_noise_cov.empty()) write_noise_sidecar(save_noise_cov, *noise);

    SteeringVectorBank bank;
    if (method == Method::gsvd_music)
        bank = build_steering_bank(geom, index->grid, frame_size);

    LocalizerParams params;
    params.alpha = cfg.alpha;
    params.rerank = cfg.rerank;
    params.music_regularization = cfg.music_regularization;
    params.n_sources = cfg.n_sources;
    params.band_lo = cfg.band_lo;
    params.band_hi = cfg.band_hi;

    const std::vector<SpectraFrame> frames =
        stft_analyze(signal, frame_size, cfg.hop_size, cfg.window);
    const auto estimates = run_method(method, &*index, &bank, index->grid,
                                      noise ? &*noise : nullptr, frames, params);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty() && out_path != "-") {
        file.open(out_path);
        if (!file) throw RuntimeError("cannot create output file: " + out_path);
        out = &file;
    }
    if (format == "csv") *out << "frame,q,x,y,z,amplitude\n";
    (*out) << std::setprecision(12);
    long emitted = 0;
    for (const auto& est : estimates) {
        if (!est) continue;
        ++emitted;
        if (format == "csv") {
            *out << est->frame_index << ',' << est->grid_index << ',' << est->direction.x() << ','
                 << est->direction.y() << ',' << est->direction.z() << ',' << est->amplitude
                 << '\n';
        } else {
            nlohmann::json j = {{"frame", est->frame_index},
                                {"q", est->grid_index},
                                {"x", est->direction.x()},
                                {"y", est->direction.y()},
                                {"z", est->direction.z()},
                                {"amplitude", est->amplitude}};
            *out << j.dump() << '\n';
        }
    }
    std::cerr << "localized " << emitted << '/' << frames.size() << " frames with "
              << method_name(method) << '\n';
    return 0;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    const MicArrayGeometry geom = cfg.geometry();
    const DoaGrid grid = build_doa_grid(cfg.grid_level, cfg.grid_base);
    std::cerr << "building index (Q=" << grid.size() << ")...\n";
    const SvdIndex index = build_index(geom, grid, cfg.frame_size, cfg.delta, cfg.backend);
    const SteeringVectorBank bank = build_steering_bank(geom, grid, cfg.frame_size);
    std::cerr << "offline build done in " << std::fixed << std::setprecision(1)
              << seconds_since(t0) << " s (K=" << index.k << ")\n";

    const EvalContext ctx = make_context(cfg, index, bank);
    const std::vector<Method> methods = {Method::dsvd_phat, Method::gsvd_music};
    const ConditionGrid result =
        run_condition_grid(ctx, methods, cfg.snr_list, cfg.rt60_list, cfg.n_scenarios, cfg.seed);

    fs::create_directories(out_dir);
    std::ofstream(fs::path(out_dir) / "auc_table.csv") << auc_csv(result);
    std::ofstream(fs::path(out_dir) / "auc_table.txt") << auc_table_text(result);
    std::ofstream(fs::path(out_dir) / "roc_points.csv") << roc_points_csv(result);
    std::cout << auc_table_text(result);
    std::cout << "reports written to " << out_dir << " in " << std::fixed << std::setprecision(1)
              << seconds_since(t0) << " s\n";

    bool ok = true;
    if (cfg.assert_trends) {
        for (Method m : methods)
            if (!auc_trends_ok(result, m)) {
                std::cerr << "assertion failed: AUC trend for " << method_name(m) << '\n';
                ok = false;
            }
    }
    if (cfg.assert_top_cell_auc > 0.0) {
        const double snr = *std::max_element(cfg.snr_list.begin(), cfg.snr_list.end());
        const double rt60 = *std::min_element(cfg.rt60_list.begin(), cfg.rt60_list.end());
        const GridCell* cell = find_cell(result, snr, rt60, Method::dsvd_phat);
        if (cell == nullptr || !cell->auc || *cell->auc < cfg.assert_top_cell_auc) {
            std::cerr << "assertion failed: dsvd-phat AUC at (" << snr << " dB, " << rt60
                      << " s) below " << cfg.assert_top_cell_auc << '\n';
            ok = false;
        }
    }
    return ok ? 0 : 2;
}

int cmd_bench(const RunConfig& cfg, const std::string& out_path, int repeats, int frames_warmup) {
    const MicArrayGeometry geom = cfg.geometry();
    const DoaGrid grid = build_doa_grid(cfg.grid_level, cfg.grid_base);
    const SvdIndex index = build_index(geom, grid, cfg.frame_size, cfg.delta, cfg.backend);
    const SteeringVectorBank bank = build_steering_bank(geom, grid, cfg.frame_size);
    const EvalContext ctx = make_context(cfg, index, bank);

    const int warmup = frames_warmup >= 0 ? frames_warmup : ctx.effective_warmup();
    const BenchReport report = bench_per_frame(
        ctx, {Method::dsvd_phat, Method::gsvd_music}, cfg.seed, warmup, repeats);
    std::cout << bench_text(report);
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw RuntimeError("cannot create report: " + out_path);
        out << bench_to_json(report).dump(2) << '\n';
        std::cout << "JSON report written to " << out_path << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sound source localization toolkit (DSVD-PHAT and GSVD-MUSIC)"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::optional<int> jobs_override;
    app.add_option("--config", config_path, "config file (defaults used when absent)");
    app.add_option("--seed", seed_override, "override eval.seed");
    app.add_option("--jobs", jobs_override, "override eval.jobs (parallel scenarios)");

    auto* build = app.add_subcommand("build-index", "build and serialize the subspace index");
    std::string index_out = "sslkit_index.bin", grid_csv;
    build->add_option("--out", index_out, "output index path");
    build->add_option("--grid-csv", grid_csv, "also export the DOA grid as CSV");

    auto* simulate = app.add_subcommand("simulate", "render scenes and noise recordings");
    std::string sim_dir = "scenes";
    int sim_count = 10;
    double sim_snr = 5.0, sim_rt60 = 0.4;
    simulate->add_option("--out-dir", sim_dir, "output directory");
    simulate->add_option("--count", sim_count, "number of scenes");
    simulate->add_option("--snr", sim_snr, "SNR in dB");
    simulate->add_option("--rt60", sim_rt60, "reverberation time in seconds");

    auto* localize = app.add_subcommand("localize", "estimate per-frame DOAs from a WAV");
    std::string loc_wav, loc_method = "dsvd-phat", loc_index, loc_noise_wav, loc_noise_cov,
                loc_save_cov, loc_out = "-", loc_format = "csv";
    localize->add_option("--wav", loc_wav, "input multichannel WAV")->required();
    localize->add_option("--method", loc_method, "dsvd-phat | svd-phat | gsvd-music");
    localize->add_option("--index", loc_index, "serialized index (built from config when absent)");
    localize->add_option("--noise-wav", loc_noise_wav, "noise-only WAV for the noise correlation");
    localize->add_option("--noise-cov", loc_noise_cov, "precomputed noise correlation sidecar");
    localize->add_option("--save-noise-cov", loc_save_cov, "write the noise correlation sidecar");
    localize->add_option("--out", loc_out, "output path ('-' for stdout)");
    localize->add_option("--format", loc_format, "csv | jsonl");

    auto* evaluate = app.add_subcommand("evaluate", "run the (SNR, RT60) condition grid");
    std::string eval_dir = "results";
    evaluate->add_option("--out-dir", eval_dir, "report directory");

    auto* bench = app.add_subcommand("bench", "per-frame timing comparison");
    std::string bench_out;
    int bench_repeats = 3, bench_warmup = -1;
    bench->add_option("--out", bench_out, "JSON report path");
    bench->add_option("--repeats", bench_repeats, "sequence repetitions");
    bench->add_option("--warmup", bench_warmup, "frames excluded from statistics");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        if (seed_override) cfg.seed = *seed_override;
        if (jobs_override) cfg.jobs = *jobs_override;
        cfg.validate();

        if (build->parsed()) return cmd_build_index(cfg, index_out, grid_csv);
        if (simulate->parsed()) return cmd_simulate(cfg, sim_dir, sim_count, sim_snr, sim_rt60);
        if (localize->parsed())
            return cmd_localize(cfg, loc_wav, loc_method, loc_index, loc_noise_wav, loc_noise_cov,
                                loc_save_cov, loc_out, loc_format);
        if (evaluate->parsed()) return cmd_evaluate(cfg, eval_dir);
        if (bench->parsed()) return cmd_bench(cfg, bench_out, bench_repeats, bench_warmup);
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
