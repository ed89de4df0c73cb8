#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "offsim/common.hpp"
#include "offsim/config.hpp"
#include "offsim/io.hpp"
#include "offsim/tradeoff.hpp"

namespace offsim::cli {

namespace fs = std::filesystem;

/// Listing of every config-file key and its default, shown in --help.
inline std::string config_keys_help() {
    const RunConfig d;
    std::string s;
    s += "Config file keys (JSON; flag > file > default):\n";
    s += detail::format("  seed                                   default %llu\n",
                        static_cast<unsigned long long>(d.seed));
    s += "  output_dir                             default '" + d.output_dir + "'\n";
    s += detail::format("  budget_hz                              default %.1f\n", d.budget_hz);
    s += detail::format(
        "  channels.{edge|cloud}.throughput_mbps  default %.2f\n"
        "  channels.{edge|cloud}.packet_payload_bytes      default %.0f\n"
        "  channels.{edge|cloud}.per_packet_overhead_ms    default %.2f\n"
        "  channels.edge.base_latency_{up|down}_ms         default %.2f\n"
        "  channels.cloud.base_latency_{up|down}_ms        default %.2f\n"
        "  channels.{edge|cloud}.loss_ratio                default %.4g\n"
        "  channels.{edge|cloud}.jitter.{mu,sigma}         default disabled\n",
        d.edge_channel.throughput_mbps, d.edge_channel.packet_payload_bytes,
        d.edge_channel.per_packet_overhead_ms, d.edge_channel.base_latency_up_ms,
        d.cloud_channel.base_latency_up_ms, d.edge_channel.loss_ratio);
    s += detail::format(
        "  platforms.local.{model_label,resolution,inference_ms}  default %.1f ms at 640x640\n"
        "  platforms.edge.inference_ms            default %.4f (derived from reference table)\n"
        "  platforms.cloud.inference_ms           default %.4f (derived from reference table)\n",
        d.local_platform.inference_ms, d.edge_platform.inference_ms,
        d.cloud_platform.inference_ms);
    s += detail::format(
        "  codec_times.{jpeg|h265}_{compress|decompress}_ms  default 0 (reference totals absorb them)\n"
        "  codec_times.reference_pixels           default %.0f\n"
        "  codec_times.scale_with_pixels          default true\n",
        d.codec_times.reference_pixels);
    s += "  curves                                 default: bundled size curves\n";
    s += "  measurement_files                      default: none (CSV, header '" +
         io::kMeasurementHeader + "')\n";
    s += detail::format("  policy.budget_ms                       default %.1f\n", d.policy.budget_ms);
    s += detail::format("  policy.min_map                         default %.2f\n", d.policy.min_map);
    s += detail::format("  eval.iou_threshold                     default %.2f\n", d.eval.iou_threshold);
    s += detail::format("  eval.confidence_threshold              default %.2f\n",
                        d.eval.confidence_threshold);
    s += "  simulate_matrix                        default: local + all edge/cloud scenarios\n";
    s += "  tradeoff_matrix                        default: local + edge/cloud H/M/L scenarios\n";
    s += "  class_names                            default: 0=pedestrian 1=traffic_light 2=vehicle\n";
    return s;
}

struct LoadedConfig {
    RunConfig cfg;
    CurveSet curves;
    std::string dir;  // directory of the config file, for relative paths
};

inline LoadedConfig load(const std::string& config_path) {
    LoadedConfig loaded;
    if (config_path.empty()) {
        loaded.curves = default_curves();
        return loaded;
    }
    const auto text = io::read_file(config_path);
    io::json j;
    try {
        j = io::json::parse(text);
    } catch (const io::json::exception& e) {
        throw config_error("config '" + config_path + "': " + e.what());
    }
    loaded.cfg = io::config_from_json(j);
    loaded.dir = fs::path(config_path).parent_path().string();
    loaded.curves = io::load_curves(&j, loaded.dir);
    return loaded;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

inline std::string eval_csv(const EvalSummary& summary, const std::map<int, std::string>& names) {
    std::string out = "class_id,class_name,ground_truths,detections,ap\n";
    for (const auto& [cls, ap] : summary.per_class_ap) {
        const auto name_it = names.find(cls);
        out += detail::format("%d,%s,%d,%d,%.6f\n", cls,
                              name_it == names.end() ? ("class_" + std::to_string(cls)).c_str()
                                                     : name_it->second.c_str(),
                              summary.per_class_ground_truths.at(cls),
                              summary.per_class_detections.count(cls)
                                  ? summary.per_class_detections.at(cls)
                                  : 0,
                              ap);
    }
    out += detail::format("all,mAP,,,%.6f\n", summary.map_value);
    return out;
}

inline int cmd_eval(const LoadedConfig& loaded, const std::string& detections_path,
                    const std::string& gt_path, std::optional<double> iou_threshold,
                    const std::string& output_path, std::ostream& out) {
    const RunConfig& cfg = loaded.cfg;
    std::ifstream det_in(detections_path);
    if (!det_in) throw input_error("cannot open detections '" + detections_path + "'");
    std::ifstream gt_in(gt_path);
    if (!gt_in) throw input_error("cannot open ground truth '" + gt_path + "'");

    const auto detections = io::read_detections(det_in, detections_path);
    const auto ground_truth = io::read_ground_truth(gt_in, gt_path);
    if (ground_truth.empty()) throw input_error("ground truth '" + gt_path + "' has no records");

    const double thr = iou_threshold.value_or(cfg.eval.iou_threshold);
    const EvalSummary summary =
        evaluate_detections(detections, ground_truth, thr, cfg.eval.confidence_threshold);

    for (const auto& [cls, ap] : summary.per_class_ap) {
        const auto name_it = cfg.class_names.find(cls);
        const std::string name =
            name_it == cfg.class_names.end() ? "class_" + std::to_string(cls) : name_it->second;
        out << detail::format("AP@%.2f %-14s %.4f  (gt=%d det=%d)\n", thr, name.c_str(), ap,
                              summary.per_class_ground_truths.at(cls),
                              summary.per_class_detections.count(cls)
                                  ? summary.per_class_detections.at(cls)
                                  : 0);
    }
    for (int cls : summary.classes_without_ground_truth) {
        out << detail::format("class %d has detections but no ground truth; excluded from mAP\n", cls);
    }
    out << detail::format("mAP %.4f\n", summary.map_value);
    if (!output_path.empty()) io::write_file(output_path, eval_csv(summary, cfg.class_names));
    return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

inline int cmd_simulate(const LoadedConfig& loaded, std::optional<double> budget_hz,
                        const std::string& output_path, int stochastic_samples,
                        std::ostream& out) {
    const RunConfig& cfg = loaded.cfg;
    const double rate = budget_hz.value_or(cfg.budget_hz);
    if (!(rate > 0.0)) throw input_error("budget rate must be positive");

    std::string csv =
        "platform,scenario,payload_bytes,payload_human,packets,compress_ms,uplink_ms,"
        "decompress_ms,inference_ms,downlink_ms,total_ms,delivery_probability,budget_ms,"
        "within_budget";
    if (stochastic_samples > 0) csv += ",sampled_uplink_mean_ms";
    csv += "\n";

    std::uint64_t row_index = 0;
    for (const auto& [platform, scenario] : cfg.simulate_matrix) {
        const Strategy strategy = cfg.strategy(platform, scenario);
        const DelayBreakdown b = end_to_end_delay(strategy, loaded.curves, cfg.codec_times);
        const bool ok = meets_budget(b, rate);

        csv += to_string(platform) + "," + to_string(scenario) + ",";
        csv += detail::format("%.0f", b.payload_bytes) + "," + format_size(b.payload_bytes) + ",";
        csv += detail::format("%llu,", static_cast<unsigned long long>(b.packet_count));
        csv += format_ms(b.compress_ms) + "," + format_ms(b.uplink_ms) + "," +
               format_ms(b.decompress_ms) + "," + format_ms(b.inference_ms) + "," +
               format_ms(b.downlink_ms) + "," + format_ms(b.total_ms) + ",";
        csv += detail::format("%.5f,", b.delivery_probability);
        csv += format_ms(1000.0 / rate) + ",";
        csv += ok ? "yes" : "no";

        if (stochastic_samples > 0) {
            if (!strategy.platform.remote()) {
                csv += ",";
            } else {
                const ChannelParams& ch = *strategy.platform.channel;
                if (!ch.jitter) {
                    throw config_error("simulate --stochastic: channel for " + strategy.label() +
                                       " has no jitter configured");
                }
                UplinkSampler sampler(ch, cfg.seed + row_index);
                double sum = 0.0;
                for (int i = 0; i < stochastic_samples; ++i) sum += sampler.sample(b.payload_bytes);
                csv += "," + format_ms(sum / stochastic_samples);
            }
        }
        csv += "\n";
        ++row_index;
    }

    out << csv;
    if (!output_path.empty()) io::write_file(output_path, csv);
    return 0;
}

// ---------------------------------------------------------------------------
// tradeoff
// ---------------------------------------------------------------------------

inline int cmd_tradeoff(const LoadedConfig& loaded, const std::string& fixture_path,
                        const std::string& gt_path, std::optional<double> budget_ms,
                        std::optional<double> min_map, const std::string& out_dir,
                        std::ostream& out) {
    const RunConfig& cfg = loaded.cfg;
    SelectionPolicy policy = cfg.policy;
    if (budget_ms) policy.budget_ms = *budget_ms;
    if (min_map) policy.min_map = *min_map;
    require_valid(policy);

    std::vector<io::FixtureEntry> entries;
    std::string fixture_dir;
    if (fixture_path.empty()) {
        entries = io::builtin_fixture();
    } else {
        entries = io::load_fixture(fixture_path, cfg.class_names);
        fixture_dir = fs::path(fixture_path).parent_path().string();
    }

    std::map<std::pair<Platform, Scenario>, const io::FixtureEntry*> by_key;
    for (const auto& e : entries) {
        if (!by_key.emplace(std::make_pair(e.platform, e.scenario), &e).second) {
            throw input_error("fixture: duplicate entry for " + to_string(e.platform) + "/" +
                              to_string(e.scenario));
        }
    }

    std::map<std::string, std::vector<GroundTruthBox>> ground_truth;
    if (!gt_path.empty()) {
        std::ifstream gt_in(gt_path);
        if (!gt_in) throw input_error("cannot open ground truth '" + gt_path + "'");
        ground_truth = io::read_ground_truth(gt_in, gt_path);
    }

    std::vector<StrategyEvalInput> inputs;
    for (const auto& [platform, scenario] : cfg.tradeoff_matrix) {
        const auto it = by_key.find({platform, scenario});
        if (it == by_key.end()) {
            throw input_error("no fixture entry or detections for " + to_string(platform) + "/" +
                              to_string(scenario));
        }
        const io::FixtureEntry& e = *it->second;

        StrategyEvalInput in;
        in.strategy = cfg.strategy(platform, scenario);
        in.scenario = scenario;
        in.fixture_map = e.map_value;
        in.fixture_per_class = e.per_class_ap;
        in.delay_override_ms = e.delay_override_ms;
        if (!e.detections_path.empty()) {
            if (ground_truth.empty()) {
                throw input_error("fixture entry " + to_string(platform) + "/" +
                                  to_string(scenario) +
                                  " references detections; --ground-truth is required");
            }
            const auto path = (fs::path(fixture_dir) / e.detections_path).string();
            std::ifstream det_in(path);
            if (!det_in) throw input_error("cannot open detections '" + path + "'");
            in.detection_summary =
                evaluate_detections(io::read_detections(det_in, path), ground_truth,
                                    cfg.eval.iou_threshold, cfg.eval.confidence_threshold);
        }
        inputs.push_back(std::move(in));
    }

    const auto points = evaluate_strategies(inputs, loaded.curves, cfg.codec_times);
    const auto frontier = pareto_frontier(points);
    const auto selection = select_best(points, policy);

    fs::create_directories(out_dir);
    io::write_file((fs::path(out_dir) / "points.csv").string(),
                   report::csv_points(points, frontier, policy));
    io::write_file((fs::path(out_dir) / "frontier.csv").string(), report::csv_frontier(frontier));
    io::write_file((fs::path(out_dir) / "plot_data.csv").string(), report::csv_plot_data(points));
    io::write_file((fs::path(out_dir) / "selection.txt").string(),
                   report::selection_text(selection, policy));

    ApTable ap_table;
    for (const auto& e : entries) {
        if (!e.per_class_ap.empty()) ap_table[{e.platform, e.scenario}] = e.per_class_ap;
    }
    for (const auto& p : points) {
        if (p.provenance == MapProvenance::detections && !p.per_class_ap.empty()) {
            ap_table[{p.strategy.platform.name, p.scenario}] = p.per_class_ap;
        }
    }
    const bool have_baseline = ap_table.count({Platform::local, Scenario::raw}) > 0;
    if (have_baseline) {
        io::write_file((fs::path(out_dir) / "per_class.csv").string(),
                       report::csv_per_class(ap_table, cfg.class_names));
    }

    out << detail::format("%zu strategies evaluated, %zu on the frontier\n", points.size(),
                          frontier.size());
    for (const auto& p : frontier) {
        out << detail::format("  frontier: %-14s delay=%s ms map=%.2f\n", p.strategy.label().c_str(),
                              format_ms(p.delay_ms).c_str(), p.map_value);
    }
    out << report::selection_text(selection, policy);
    for (const auto& p : points) {
        for (const auto& note : p.notes) {
            out << "note: " << p.strategy.label() << ": " << note << "\n";
        }
    }
    if (!have_baseline) {
        out << "note: no local/RAW per-class baseline in fixture; per_class.csv not written\n";
    }
    out << "reports written to " << out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

inline int cmd_calibrate(const LoadedConfig& loaded, const std::string& observations_path,
                         const std::string& channel_name, const std::string& mode_name,
                         const std::string& output_path, std::ostream& out) {
    const RunConfig& cfg = loaded.cfg;
    const ChannelParams& nominal =
        channel_name == "cloud" ? cfg.cloud_channel : cfg.edge_channel;
    if (channel_name != "edge" && channel_name != "cloud") {
        throw input_error("calibrate: channel must be 'edge' or 'cloud'");
    }

    CalibrationMode mode = CalibrationMode::fit_overhead_only;
    if (mode_name == "both") mode = CalibrationMode::fit_both;
    else if (mode_name == "throughput") mode = CalibrationMode::fit_throughput_only;
    else if (mode_name != "overhead") throw input_error("calibrate: unknown mode '" + mode_name + "'");

    std::ifstream in(observations_path);
    if (!in) throw input_error("cannot open observations '" + observations_path + "'");
    const auto observations = io::read_observations(in, observations_path);

    const CalibrationResult fit = calibrate(observations, nominal, mode);

    io::json j = {{"channel", channel_name},
                  {"mode", to_string(fit.mode)},
                  {"throughput_mbps", fit.throughput_mbps},
                  {"per_packet_overhead_ms", fit.per_packet_overhead_ms},
                  {"overhead_clamped", fit.overhead_clamped},
                  {"fit_residuals_ms", fit.fit_residuals_ms}};
    const std::string text = j.dump(2) + "\n";
    if (!output_path.empty()) io::write_file(output_path, text);

    out << detail::format("fitted %s channel (%s mode): throughput %.4f Mbit/s, overhead %.6f ms/packet%s\n",
                          channel_name.c_str(), to_string(fit.mode).c_str(), fit.throughput_mbps,
                          fit.per_packet_overhead_ms,
                          fit.overhead_clamped ? " (clamped from negative)" : "");
    for (std::size_t i = 0; i < fit.fit_residuals_ms.size(); ++i) {
        out << detail::format("  observation %zu: fit residual %+.4f ms\n", i,
                              fit.fit_residuals_ms[i]);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

inline std::string stats_csv(const ClassStats& stats, const std::map<int, std::string>& names) {
    // Canonical split order: train, validation, test, then anything else.
    std::vector<std::string> order;
    for (const char* want : {"train", "validation", "test"}) {
        for (const auto& s : stats.split_names) {
            if (s == want) order.push_back(s);
        }
    }
    for (const auto& s : stats.split_names) {
        if (std::find(order.begin(), order.end(), s) == order.end()) order.push_back(s);
    }

    std::string out = "split";
    for (int cls : stats.class_ids) {
        const auto it = names.find(cls);
        out += "," + (it == names.end() ? "class_" + std::to_string(cls) : it->second);
    }
    out += "\n";
    for (const auto& split : order) {
        out += split;
        for (int cls : stats.class_ids) {
            const auto& row = stats.counts.at(split);
            const auto it = row.find(cls);
            out += detail::format(",%lld", it == row.end() ? 0LL : it->second);
        }
        out += "\n";
    }
    out += "total";
    for (int cls : stats.class_ids) out += detail::format(",%lld", stats.totals.at(cls));
    out += "\n";
    return out;
}

inline int cmd_stats(const LoadedConfig& loaded, const std::string& manifest_path,
                     const std::string& output_path, std::ostream& out) {
    const auto splits = io::load_manifest(manifest_path);
    const ClassStats stats = class_stats(splits);
    const std::string csv = stats_csv(stats, loaded.cfg.class_names);
    out << csv;
    if (!output_path.empty()) io::write_file(output_path, csv);
    return 0;
}

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"offsim: detection-quality vs end-to-end-latency analysis for camera offloading"};
    app.require_subcommand(1);
    app.footer(config_keys_help());

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (see footer for keys)")
        ->envname("OFFSIM_CONFIG");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "score a detection file against ground truth");
    std::string det_path, gt_path, eval_out;
    double eval_iou = -1.0;
    eval_cmd->add_option("--detections", det_path, "detection records file")->required();
    eval_cmd->add_option("--ground-truth", gt_path, "ground-truth records file")->required();
    eval_cmd->add_option("--iou-threshold", eval_iou, "match threshold (default 0.5)");
    eval_cmd->add_option("--output", eval_out, "write per-class CSV here");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "price every configured strategy");
    std::string sim_out;
    double sim_rate = -1.0;
    int sim_samples = 0;
    sim_cmd->add_option("--budget-hz", sim_rate, "frame rate the budget comes from (default 20)");
    sim_cmd->add_option("--output", sim_out, "write the table CSV here");
    sim_cmd->add_option("--stochastic", sim_samples,
                        "sample the jittered uplink this many times per strategy");

    // tradeoff
    auto* trade_cmd = app.add_subcommand("tradeoff", "frontier and strategy selection");
    std::string fixture_path, trade_gt, trade_dir = "out";
    double trade_budget = -1.0, trade_min_map = -1.0;
    trade_cmd->add_option("--fixture", fixture_path, "fixture JSON (default: bundled reference set)");
    trade_cmd->add_option("--ground-truth", trade_gt, "ground truth for detection-backed entries");
    trade_cmd->add_option("--budget-ms", trade_budget, "latency budget (default 50)");
    trade_cmd->add_option("--min-map", trade_min_map, "minimum acceptable mAP (default 0.10)");
    trade_cmd->add_option("--out-dir", trade_dir, "directory for report files");

    // calibrate
    auto* cal_cmd = app.add_subcommand("calibrate", "fit channel parameters from observations");
    std::string obs_path, cal_channel = "edge", cal_mode = "overhead", cal_out;
    cal_cmd->add_option("--observations", obs_path, "CSV with header '" + io::kObservationHeader + "'")
        ->required();
    cal_cmd->add_option("--channel", cal_channel, "edge or cloud (default edge)");
    cal_cmd->add_option("--mode", cal_mode, "overhead | throughput | both (default overhead)");
    cal_cmd->add_option("--output", cal_out, "write fitted parameters JSON here");

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "dataset composition per class and split");
    std::string manifest_path, stats_out;
    stats_cmd->add_option("--manifest", manifest_path, "dataset manifest JSON")->required();
    stats_cmd->add_option("--output", stats_out, "write the counts CSV here");

    std::vector<const char*> argv;
    argv.push_back("offsim");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());

        const LoadedConfig loaded = load(config_path);
        if (eval_cmd->parsed()) {
            return cmd_eval(loaded, det_path, gt_path,
                            eval_iou >= 0.0 ? std::optional<double>(eval_iou) : std::nullopt,
                            eval_out, out);
        }
        if (sim_cmd->parsed()) {
            return cmd_simulate(loaded,
                                sim_rate > 0.0 ? std::optional<double>(sim_rate) : std::nullopt,
                                sim_out, sim_samples, out);
        }
        if (trade_cmd->parsed()) {
            return cmd_tradeoff(loaded, fixture_path, trade_gt,
                                trade_budget > 0.0 ? std::optional<double>(trade_budget) : std::nullopt,
                                trade_min_map >= 0.0 ? std::optional<double>(trade_min_map) : std::nullopt,
                                trade_dir, out);
        }
        if (cal_cmd->parsed()) {
            return cmd_calibrate(loaded, obs_path, cal_channel, cal_mode, cal_out, out);
        }
        if (stats_cmd->parsed()) {
            return cmd_stats(loaded, manifest_path, stats_out, out);
        }
        err << "no subcommand given\n";
        return static_cast<int>(ExitCode::input_error);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::input_error);
    } catch (const config_error& e) {
        err << "config error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::config_error);
    } catch (const consistency_error& e) {
        err << "inconsistency: " << e.what() << "\n";
        return static_cast<int>(ExitCode::consistency_error);
    } catch (const input_error& e) {
        err << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::input_error);
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::consistency_error);
    }
}

}  // namespace offsim::cli
