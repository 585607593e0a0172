// Evaluation protocol: angle error, threshold indicators, confusion counts,
// ROC/AUC, condition sweeps over (SNR, RT60) and per-frame timing benchmarks.
#pragma once

#include "sslkit/common.hpp"
#include "sslkit/correlation.hpp"
#include "sslkit/dsvd_phat.hpp"
#include "sslkit/geometry.hpp"
#include "sslkit/gsvd_music.hpp"
#include "sslkit/simroom.hpp"
#include "sslkit/stft.hpp"
#include "sslkit/synth.hpp"
#include "sslkit/wav.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace sslkit {

enum class Method { dsvd_phat, svd_phat, gsvd_music };

inline Method method_from_name(const std::string& name) {
    if (name == "dsvd-phat" || name == "dsvd") return Method::dsvd_phat;
    if (name == "svd-phat" || name == "svd") return Method::svd_phat;
    if (name == "gsvd-music" || name == "music") return Method::gsvd_music;
    throw ConfigError("unknown method: " + name);
}

inline std::string method_name(Method m) {
    switch (m) {
        case Method::dsvd_phat: return "dsvd-phat";
        case Method::svd_phat: return "svd-phat";
        case Method::gsvd_music: return "gsvd-music";
    }
    return "dsvd-phat";
}

// Angle between two unit DOAs, radians in [0, pi].
inline double angle_error(const Vec3& est, const Vec3& truth) {
    check_unit(est);
    check_unit(truth);
    return std::acos(std::clamp(est.dot(truth), -1.0, 1.0));
}

struct EvalRecord {
    int frame_index = 0;
    Method method = Method::dsvd_phat;
    int grid_index = 0;
    Vec3 direction = Vec3::UnitZ();
    double amplitude = 0.0;
    Vec3 true_doa = Vec3::UnitZ();
    double theta = 0.0;
};

inline EvalRecord make_record(Method method, const DoaEstimate& est, const Vec3& truth) {
    EvalRecord r;
    r.frame_index = est.frame_index;
    r.method = method;
    r.grid_index = est.grid_index;
    r.direction = est.direction;
    r.amplitude = est.amplitude;
    r.true_doa = truth;
    r.theta = angle_error(est.direction, truth);
    return r;
}

struct ConfusionCounts {
    long tp = 0, tn = 0, fp = 0, fn = 0;
    long total() const { return tp + tn + fp + fn; }
};

// Theta_l = [theta <= delta_theta], E_l = [amplitude >= t_min];
// TP counts accurate accepted, TN inaccurate rejected, and so on.
inline ConfusionCounts confusion_counts(const std::vector<EvalRecord>& records, double delta_theta,
                                        double t_min) {
    if (delta_theta < 0.0 || delta_theta > kPi / 2.0)
        throw ConfigError("delta_theta must be in [0, pi/2]");
    ConfusionCounts c;
    for (const EvalRecord& r : records) {
        const bool accurate = r.theta <= delta_theta;
        const bool accepted = r.amplitude >= t_min;
        if (accurate && accepted) ++c.tp;
        else if (accurate) ++c.fn;
        else if (accepted) ++c.fp;
        else ++c.tn;
    }
    return c;
}

struct RocPoint {
    double threshold = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // threshold descending; FPR non-decreasing
    std::optional<double> auc;     // empty when only one class is present
    long positives = 0;
    long negatives = 0;
};

// Threshold sweep over the sorted unique amplitudes plus +-infinity
// sentinels; AUC by trapezoid over the FPR axis.
inline RocCurve roc(const std::vector<EvalRecord>& records, double delta_theta) {
    if (records.empty()) throw ConfigError("no records to evaluate");
    std::vector<std::pair<double, bool>> samples;  // (amplitude, accurate)
    samples.reserve(records.size());
    RocCurve curve;
    for (const EvalRecord& r : records) {
        const bool accurate = r.theta <= delta_theta;
        samples.emplace_back(r.amplitude, accurate);
        (accurate ? curve.positives : curve.negatives)++;
    }
    std::sort(samples.begin(), samples.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    const double inf = std::numeric_limits<double>::infinity();
    curve.points.push_back({inf, 0.0, 0.0});
    long tp = 0, fp = 0;
    const bool both = curve.positives > 0 && curve.negatives > 0;
    std::size_t i = 0;
    while (i < samples.size()) {
        const double t = samples[i].first;
        for (; i < samples.size() && samples[i].first == t; ++i)
            (samples[i].second ? tp : fp)++;
        curve.points.push_back(
            {t, curve.positives > 0 ? static_cast<double>(tp) / curve.positives : 0.0,
             curve.negatives > 0 ? static_cast<double>(fp) / curve.negatives : 0.0});
    }
    curve.points.push_back({-inf, curve.points.back().tpr, curve.points.back().fpr});

    if (both) {
        double auc = 0.0;
        for (std::size_t p = 1; p < curve.points.size(); ++p)
            auc += (curve.points[p].fpr - curve.points[p - 1].fpr) *
                   (curve.points[p].tpr + curve.points[p - 1].tpr) / 2.0;
        curve.auc = auc;
    }
    return curve;
}

// -- pipeline runner ----------------------------------------------------------

struct LocalizerParams {
    double alpha = 0.05;
    int rerank = kDefaultRerank;
    double music_regularization = kDefaultMusicRegularization;
    int n_sources = 1;
    int band_lo = 0;
    int band_hi = -1;  // -1: full spectrum
};

// Runs one method over a frame sequence, one optional estimate per frame.
// noise may be null only for svd_phat (the plain variant). per_frame_ms, when
// given, receives the wall time of each frame's online path.
inline std::vector<std::optional<DoaEstimate>> run_method(
    Method method, const SvdIndex* index, const SteeringVectorBank* bank, const DoaGrid& grid,
    const CorrelationSet* noise, const std::vector<SpectraFrame>& frames,
    const LocalizerParams& params, std::vector<double>* per_frame_ms = nullptr) {
    if (frames.empty()) return {};
    if (method != Method::gsvd_music && index == nullptr)
        throw ConfigError("subspace index required for " + method_name(method));
    if (method == Method::gsvd_music && bank == nullptr)
        throw ConfigError("steering bank required for gsvd-music");
    if (method != Method::svd_phat && noise == nullptr)
        throw ConfigError("noise correlation required for " + method_name(method));

    const int channels = frames.front().channels();
    const int bins = frames.front().bin_count();
    CorrelationSet state(channels, bins, params.alpha);

    std::vector<std::optional<DoaEstimate>> out;
    out.reserve(frames.size());
    for (const SpectraFrame& frame : frames) {
        const auto t0 = std::chrono::steady_clock::now();
        std::optional<DoaEstimate> est;
        switch (method) {
            case Method::dsvd_phat:
                est = localize_frame(*index, state, noise, frame, params.rerank);
                break;
            case Method::svd_phat:
                est = localize_frame(*index, state, nullptr, frame, params.rerank);
                break;
            case Method::gsvd_music:
                est = localize_frame_music(*bank, grid, state, *noise, frame,
                                           params.music_regularization, params.n_sources,
                                           params.band_lo, params.band_hi);
                break;
        }
        if (per_frame_ms != nullptr) {
            const auto t1 = std::chrono::steady_clock::now();
            per_frame_ms->push_back(
                std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        out.push_back(est);
    }
    return out;
}

// -- condition grid -----------------------------------------------------------

struct EvalContext {
    const SvdIndex* index = nullptr;
    const SteeringVectorBank* bank = nullptr;
    LocalizerParams params;
    int frame_size = 256;
    int hop_size = 128;
    Window window = Window::sine;
    Vec3 room_dims = Vec3(10.0, 10.0, 3.0);
    double wall_margin = 0.5;
    double min_source_distance = 1.0;
    double scene_duration = 2.0;
    double noise_duration = 3.0;
    AbsorptionModel absorption = AbsorptionModel::eyring;
    std::string corpus_dir;  // empty: synthetic speech
    double delta_theta = 0.2;
    int warmup_frames = -1;  // -1: ceil(1/alpha)
    int jobs = 1;

    const MicArrayGeometry& geometry() const { return index->geometry; }
    const DoaGrid& grid() const { return index->grid; }
    int effective_warmup() const {
        return warmup_frames >= 0 ? warmup_frames
                                  : static_cast<int>(std::ceil(1.0 / params.alpha));
    }
};

// Scenario source signal: a WAV picked from the corpus directory when one is
// configured, the synthetic speech-like generator otherwise.
inline RealVec load_source_signal(const std::string& corpus_dir, double duration, double fs,
                                  std::uint64_t seed) {
    if (!corpus_dir.empty()) {
        std::vector<std::string> files;
        for (const auto& entry : std::filesystem::directory_iterator(corpus_dir))
            if (entry.path().extension() == ".wav") files.push_back(entry.path().string());
        std::sort(files.begin(), files.end());
        if (files.empty()) throw ConfigError("corpus directory has no .wav files: " + corpus_dir);
        const MultichannelSignal s = read_wav(files[seed % files.size()]);
        if (s.sample_rate != fs)
            throw ConfigError("corpus sample rate mismatch: " + files[seed % files.size()]);
        const auto want = static_cast<Eigen::Index>(duration * s.sample_rate);
        return s.samples.row(0).head(std::min(want, s.length())).transpose();
    }
    return speech_like(seed, duration, fs);
}

inline RealVec load_scenario_source(const EvalContext& ctx, std::uint64_t seed) {
    return load_source_signal(ctx.corpus_dir, ctx.scene_duration, ctx.geometry().sample_rate, seed);
}

struct ScenarioOutcome {
    std::vector<std::vector<EvalRecord>> records;  // per method
    std::vector<long> excluded;                    // per method: no-estimate frames past warm-up
    bool ok = false;
    std::string error;
};

// One scenario end to end: room, speech, fan noise, R_nn from a separate
// noise draw, then every requested method over the identical frames.
inline ScenarioOutcome evaluate_scenario(const EvalContext& ctx, const std::vector<Method>& methods,
                                         const RoomSpec& room, double snr_db) {
    ScenarioOutcome outcome;
    outcome.records.resize(methods.size());
    outcome.excluded.assign(methods.size(), 0);
    try {
        const MicArrayGeometry& geom = ctx.geometry();
        const RealVec speech = load_scenario_source(ctx, room.seed);
        const Rir rir = generate_rir(room, geom, ctx.absorption);
        const FanNoiseModel fans = FanNoiseModel::make(room.seed);

        const Eigen::Index scene_len = speech.size() + rir.taps.cols() - 1;
        const MultichannelSignal noise_mix =
            render_fan_noise(fans, geom, scene_len, mix_seed(room.seed, 1));
        const RenderedScene scene = render_scene(rir, speech, noise_mix, snr_db);

        const auto noise_len = static_cast<Eigen::Index>(ctx.noise_duration * geom.sample_rate);
        const MultichannelSignal noise_rec =
            render_fan_noise(fans, geom, noise_len, mix_seed(room.seed, 2));
        const CorrelationSet rnn =
            estimate_noise(stft_analyze(noise_rec, ctx.frame_size, ctx.hop_size, ctx.window),
                           ctx.params.alpha);

        const std::vector<SpectraFrame> frames =
            stft_analyze(scene.mixture, ctx.frame_size, ctx.hop_size, ctx.window);
        const int warmup = ctx.effective_warmup();

        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            const auto estimates = run_method(methods[mi], ctx.index, ctx.bank, ctx.grid(), &rnn,
                                              frames, ctx.params);
            for (std::size_t fi = 0; fi < estimates.size(); ++fi) {
                if (static_cast<int>(fi) < warmup) continue;
                if (!estimates[fi]) {
                    ++outcome.excluded[mi];
                    continue;
                }
                outcome.records[mi].push_back(
                    make_record(methods[mi], *estimates[fi], scene.true_doa));
            }
        }
        outcome.ok = true;
    } catch (const std::exception& e) {
        outcome.error = e.what();
    }
    return outcome;
}

struct GridCell {
    double snr_db = 0.0;
    double rt60 = 0.0;
    Method method = Method::dsvd_phat;
    std::optional<double> auc;
    RocCurve curve;
    long records = 0;
    long excluded = 0;
    int scenarios_ok = 0;
    int scenarios_total = 0;
    bool complete = false;  // >= 80% of scenarios succeeded
};

struct ConditionGrid {
    std::vector<GridCell> cells;  // snr-major, then rt60, then method
    std::vector<Method> methods;
    std::vector<double> snr_list;
    std::vector<double> rt60_list;
    long pooling_note = 1;  // records pooled across scenarios before one ROC
};

// Scenario placements are derived from (seed, rt60, scenario index) only, so
// the same rooms and sources are re-mixed at every SNR of a given RT60 row.
inline ConditionGrid run_condition_grid(const EvalContext& ctx, const std::vector<Method>& methods,
                                        const std::vector<double>& snr_list,
                                        const std::vector<double>& rt60_list, int n_scenarios,
                                        std::uint64_t seed) {
    ConditionGrid grid;
    grid.methods = methods;
    grid.snr_list = snr_list;
    grid.rt60_list = rt60_list;

    for (double snr : snr_list) {
        for (double rt60 : rt60_list) {
            const std::uint64_t cond_seed =
                mix_seed(seed, static_cast<std::uint64_t>(std::llround(rt60 * 1000.0)));
            const std::vector<RoomSpec> rooms =
                sample_scenarios(n_scenarios, rt60, cond_seed, ctx.room_dims, ctx.wall_margin,
                                 ctx.min_source_distance);

            std::vector<ScenarioOutcome> outcomes(rooms.size());
            const int jobs = std::max(1, ctx.jobs);
            std::atomic<std::size_t> next{0};
            auto worker = [&]() {
                for (std::size_t i = next.fetch_add(1); i < rooms.size(); i = next.fetch_add(1))
                    outcomes[i] = evaluate_scenario(ctx, methods, rooms[i], snr);
            };
            if (jobs == 1) {
                worker();
            } else {
                std::vector<std::thread> pool;
                for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
                for (auto& t : pool) t.join();
            }

            for (std::size_t mi = 0; mi < methods.size(); ++mi) {
                GridCell cell;
                cell.snr_db = snr;
                cell.rt60 = rt60;
                cell.method = methods[mi];
                cell.scenarios_total = n_scenarios;
                std::vector<EvalRecord> pooled;
                for (const ScenarioOutcome& oc : outcomes) {
                    if (!oc.ok) continue;
                    ++cell.scenarios_ok;
                    pooled.insert(pooled.end(), oc.records[mi].begin(), oc.records[mi].end());
                    cell.excluded += oc.excluded[mi];
                }
                cell.records = static_cast<long>(pooled.size());
                cell.complete = cell.scenarios_ok * 5 >= cell.scenarios_total * 4;
                if (!pooled.empty()) {
                    cell.curve = roc(pooled, ctx.delta_theta);
                    cell.auc = cell.curve.auc;
                }
                grid.cells.push_back(std::move(cell));
            }
        }
    }
    return grid;
}

inline const GridCell* find_cell(const ConditionGrid& grid, double snr, double rt60,
                                 Method method) {
    for (const GridCell& c : grid.cells)
        if (c.snr_db == snr && c.rt60 == rt60 && c.method == method) return &c;
    return nullptr;
}

// AUC non-decreasing in SNR at fixed RT60 and non-increasing in RT60 at fixed
// SNR, each line tolerating `allowed_per_line` inversions.
inline bool auc_trends_ok(const ConditionGrid& grid, Method method, int allowed_per_line = 1) {
    auto auc_at = [&](double snr, double rt60) -> std::optional<double> {
        const GridCell* c = find_cell(grid, snr, rt60, method);
        return c != nullptr ? c->auc : std::nullopt;
    };
    for (double rt60 : grid.rt60_list) {
        int inversions = 0;
        for (std::size_t i = 1; i < grid.snr_list.size(); ++i) {
            const auto prev = auc_at(grid.snr_list[i - 1], rt60);
            const auto cur = auc_at(grid.snr_list[i], rt60);
            if (!prev || !cur) return false;
            if (*cur < *prev) ++inversions;
        }
        if (inversions > allowed_per_line) return false;
    }
    for (double snr : grid.snr_list) {
        int inversions = 0;
        for (std::size_t i = 1; i < grid.rt60_list.size(); ++i) {
            const auto prev = auc_at(snr, grid.rt60_list[i - 1]);
            const auto cur = auc_at(snr, grid.rt60_list[i]);
            if (!prev || !cur) return false;
            if (*cur > *prev) ++inversions;
        }
        if (inversions > allowed_per_line) return false;
    }
    return true;
}

// -- report emission ----------------------------------------------------------

inline std::string auc_csv(const ConditionGrid& grid) {
    std::ostringstream out;
    out << "snr_db,rt60_ms,method,auc,records,excluded,scenarios_ok,scenarios_total,complete\n";
    out << std::fixed;
    for (const GridCell& c : grid.cells) {
        out << std::setprecision(1) << c.snr_db << ',' << std::setprecision(0) << c.rt60 * 1000.0
            << ',' << method_name(c.method) << ',';
        if (c.auc) out << std::setprecision(4) << *c.auc;
        else out << "nan";
        out << ',' << c.records << ',' << c.excluded << ',' << c.scenarios_ok << ','
            << c.scenarios_total << ',' << (c.complete ? 1 : 0) << '\n';
    }
    return out.str();
}

// Aligned text layout: one row per (SNR, RT60), one AUC column per method.
inline std::string auc_table_text(const ConditionGrid& grid) {
    std::ostringstream out;
    out << "AUC of the ROC curves (records pooled across scenarios per condition)\n";
    out << std::setw(9) << "SNR (dB)" << std::setw(11) << "RT60 (ms)";
    for (Method m : grid.methods) out << std::setw(12) << method_name(m);
    out << '\n';
    for (double snr : grid.snr_list)
        for (double rt60 : grid.rt60_list) {
            out << std::fixed << std::setprecision(0) << std::setw(9) << snr << std::setw(11)
                << rt60 * 1000.0;
            for (Method m : grid.methods) {
                const GridCell* c = find_cell(grid, snr, rt60, m);
                if (c != nullptr && c->auc)
                    out << std::setw(12) << std::setprecision(3) << *c->auc;
                else
                    out << std::setw(12) << (c != nullptr && !c->complete ? "incomplete" : "nan");
            }
            out << '\n';
        }
    return out.str();
}

inline std::string roc_points_csv(const ConditionGrid& grid) {
    std::ostringstream out;
    out << "snr_db,rt60_ms,method,threshold,tpr,fpr\n";
    for (const GridCell& c : grid.cells)
        for (const RocPoint& p : c.curve.points) {
            out << std::fixed << std::setprecision(1) << c.snr_db << ','
                << std::setprecision(0) << c.rt60 * 1000.0 << ',' << method_name(c.method) << ','
                << std::setprecision(9) << p.threshold << ',' << p.tpr << ',' << p.fpr << '\n';
        }
    return out.str();
}

// -- timing -------------------------------------------------------------------

struct MethodTiming {
    Method method = Method::dsvd_phat;
    double mean_ms = 0.0;
    double median_ms = 0.0;
    double p95_ms = 0.0;
    long frames = 0;
};

struct BenchReport {
    std::vector<MethodTiming> online;
    double index_build_ms = 0.0;
    double bank_build_ms = 0.0;
    double frame_period_ms = 0.0;  // hop / sample rate: the real-time budget
    double kdtree_query_us = 0.0;
    double linear_query_us = 0.0;
};

inline MethodTiming summarize_timing(Method method, std::vector<double> samples) {
    MethodTiming t;
    t.method = method;
    t.frames = static_cast<long>(samples.size());
    if (samples.empty()) return t;
    double sum = 0.0;
    for (double v : samples) sum += v;
    t.mean_ms = sum / static_cast<double>(samples.size());
    std::sort(samples.begin(), samples.end());
    t.median_ms = samples[samples.size() / 2];
    t.p95_ms = samples[static_cast<std::size_t>(0.95 * static_cast<double>(samples.size() - 1))];
    return t;
}

// Identical frame sequences through every method's online path; the offline
// index/bank builds are timed separately. warmup frames are excluded from the
// statistics; the sequence is repeated `repeats` times from a fresh state.
inline BenchReport bench_per_frame(const EvalContext& ctx, const std::vector<Method>& methods,
                                   std::uint64_t seed, int warmup_frames, int repeats) {
    BenchReport report;
    const MicArrayGeometry& geom = ctx.geometry();
    report.frame_period_ms = 1000.0 * ctx.hop_size / geom.sample_rate;

    // offline builds, timed on the same inputs the online paths use
    {
        const auto t0 = std::chrono::steady_clock::now();
        const SvdIndex rebuilt = build_index(geom, ctx.grid(), ctx.frame_size, ctx.index->delta,
                                             ctx.index->backend);
        const auto t1 = std::chrono::steady_clock::now();
        report.index_build_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        (void)rebuilt;
        const auto t2 = std::chrono::steady_clock::now();
        const SteeringVectorBank bank = build_steering_bank(geom, ctx.grid(), ctx.frame_size);
        const auto t3 = std::chrono::steady_clock::now();
        report.bank_build_ms = std::chrono::duration<double, std::milli>(t3 - t2).count();
        (void)bank;
    }

    // one fixed scene drives every method
    std::vector<RoomSpec> rooms = sample_scenarios(1, 0.2, seed, ctx.room_dims, ctx.wall_margin,
                                                   ctx.min_source_distance);
    const RealVec speech = load_scenario_source(ctx, rooms[0].seed);
    const Rir rir = generate_rir(rooms[0], geom, ctx.absorption);
    const FanNoiseModel fans = FanNoiseModel::make(rooms[0].seed);
    const Eigen::Index scene_len = speech.size() + rir.taps.cols() - 1;
    const MultichannelSignal noise_mix = render_fan_noise(fans, geom, scene_len, mix_seed(seed, 1));
    const RenderedScene scene = render_scene(rir, speech, noise_mix, 5.0);
    const auto noise_len = static_cast<Eigen::Index>(ctx.noise_duration * geom.sample_rate);
    const MultichannelSignal noise_rec = render_fan_noise(fans, geom, noise_len, mix_seed(seed, 2));
    const CorrelationSet rnn = estimate_noise(
        stft_analyze(noise_rec, ctx.frame_size, ctx.hop_size, ctx.window), ctx.params.alpha);
    const std::vector<SpectraFrame> frames =
        stft_analyze(scene.mixture, ctx.frame_size, ctx.hop_size, ctx.window);

    for (Method m : methods) {
        std::vector<double> samples;
        for (int rep = 0; rep < repeats; ++rep) {
            std::vector<double> per_frame;
            run_method(m, ctx.index, ctx.bank, ctx.grid(), &rnn, frames, ctx.params, &per_frame);
            for (std::size_t i = static_cast<std::size_t>(warmup_frames); i < per_frame.size(); ++i)
                samples.push_back(per_frame[i]);
        }
        report.online.push_back(summarize_timing(m, std::move(samples)));
    }

    // backend comparison on the same queries
    {
        std::vector<CVec> queries;
        CorrelationSet state(geom.mic_count(), ctx.frame_size / 2 + 1, ctx.params.alpha);
        for (const SpectraFrame& f : frames) {
            update(state, f);
            const CrossSpectraVector x = phat_vector(difference(state, rnn), ctx.index->w_ref->pairs);
            queries.push_back(project(*ctx.index, x.values));
        }
        for (SearchBackend backend : {SearchBackend::kdtree, SearchBackend::linear}) {
            const auto tree = make_search_backend(backend, detail::embed_rows(ctx.index->d_hat));
            const auto t0 = std::chrono::steady_clock::now();
            long n = 0;
            for (const CVec& z : queries) {
                if (z.norm() == 0.0) continue;
                const CVec zh = z / z.norm();
                tree->nearest(detail::embed_vec(zh.conjugate()), ctx.params.rerank);
                ++n;
            }
            const auto t1 = std::chrono::steady_clock::now();
            const double us = std::chrono::duration<double, std::micro>(t1 - t0).count() /
                              std::max(1L, n);
            (backend == SearchBackend::kdtree ? report.kdtree_query_us : report.linear_query_us) = us;
        }
    }
    return report;
}

inline nlohmann::json bench_to_json(const BenchReport& report) {
    nlohmann::json j;
    j["frame_period_ms"] = report.frame_period_ms;
    j["offline"] = {{"index_build_ms", report.index_build_ms},
                    {"bank_build_ms", report.bank_build_ms}};
    j["search_backend_query_us"] = {{"kdtree", report.kdtree_query_us},
                                    {"linear", report.linear_query_us}};
    auto& arr = j["online_per_frame"] = nlohmann::json::array();
    for (const MethodTiming& t : report.online)
        arr.push_back({{"method", method_name(t.method)},
                       {"mean_ms", t.mean_ms},
                       {"median_ms", t.median_ms},
                       {"p95_ms", t.p95_ms},
                       {"frames", t.frames}});
    return j;
}

inline std::string bench_text(const BenchReport& report) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(3);
    out << "offline: index build " << report.index_build_ms << " ms, steering bank "
        << report.bank_build_ms << " ms\n";
    out << "online per frame (budget " << report.frame_period_ms << " ms):\n";
    for (const MethodTiming& t : report.online)
        out << "  " << std::setw(11) << method_name(t.method) << "  mean " << std::setw(8)
            << t.mean_ms << " ms  median " << std::setw(8) << t.median_ms << " ms  p95 "
            << std::setw(8) << t.p95_ms << " ms  (" << t.frames << " frames)\n";
    out << "search backend query: kdtree " << report.kdtree_query_us << " us, linear "
        << report.linear_query_us << " us\n";
    return out.str();
}

}  // namespace sslkit
