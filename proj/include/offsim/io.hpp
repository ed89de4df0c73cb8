#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "offsim/common.hpp"
#include "offsim/config.hpp"
#include "offsim/dataset.hpp"
#include "offsim/eval.hpp"

namespace offsim::io {

using json = nlohmann::json;

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write '" + path + "'");
    out << content;
}

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == delim) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string strip(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw input_error(context + ": not a number: '" + s + "'");
    }
}

inline long long parse_int(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw input_error(context + ": not an integer: '" + s + "'");
    }
}

inline void check_keys(const json& obj, const std::set<std::string>& allowed,
                       const std::string& context) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) {
            throw config_error(context + ": unknown key '" + key + "'");
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Detection / ground-truth record files (whitespace-delimited text)
// ---------------------------------------------------------------------------

/// Detection records: `frame_id class_id confidence x_min y_min x_max y_max`.
/// Blank lines and `#` comments are allowed.
inline std::map<std::string, std::vector<Detection>> read_detections(std::istream& in,
                                                                     const std::string& name) {
    std::map<std::string, std::vector<Detection>> by_frame;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream fields(line);
        std::string frame_id;
        if (!(fields >> frame_id)) continue;
        const std::string ctx = name + " line " + std::to_string(line_number);

        Detection det;
        long long cls = 0;
        if (!(fields >> cls >> det.confidence >> det.box.x_min >> det.box.y_min >>
              det.box.x_max >> det.box.y_max)) {
            throw input_error(ctx + ": expected 7 fields "
                                    "(frame_id class_id confidence x_min y_min x_max y_max)");
        }
        std::string extra;
        if (fields >> extra) throw input_error(ctx + ": trailing garbage '" + extra + "'");
        if (cls < 0) throw input_error(ctx + ": negative class id");
        det.box.class_id = static_cast<int>(cls);
        if (det.confidence < 0.0 || det.confidence > 1.0) {
            throw input_error(ctx + ": confidence outside [0,1]");
        }
        if (!det.box.valid()) throw input_error(ctx + ": invalid box geometry");
        by_frame[frame_id].push_back(det);
    }
    return by_frame;
}

/// Ground-truth records: `frame_id class_id x_min y_min x_max y_max`.
inline std::map<std::string, std::vector<GroundTruthBox>> read_ground_truth(std::istream& in,
                                                                            const std::string& name) {
    std::map<std::string, std::vector<GroundTruthBox>> by_frame;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream fields(line);
        std::string frame_id;
        if (!(fields >> frame_id)) continue;
        const std::string ctx = name + " line " + std::to_string(line_number);

        GroundTruthBox gt;
        gt.frame_id = frame_id;
        long long cls = 0;
        if (!(fields >> cls >> gt.box.x_min >> gt.box.y_min >> gt.box.x_max >> gt.box.y_max)) {
            throw input_error(ctx + ": expected 6 fields (frame_id class_id x_min y_min x_max y_max)");
        }
        std::string extra;
        if (fields >> extra) throw input_error(ctx + ": trailing garbage '" + extra + "'");
        if (cls < 0) throw input_error(ctx + ": negative class id");
        gt.box.class_id = static_cast<int>(cls);
        if (!gt.box.valid()) throw input_error(ctx + ": invalid box geometry");
        by_frame[frame_id].push_back(gt);
    }
    return by_frame;
}

// ---------------------------------------------------------------------------
// Codec measurement files (CSV)
// ---------------------------------------------------------------------------

inline const std::string kMeasurementHeader =
    "codec,resolution,quality,bytes,compress_ms,decompress_ms";

/// Reads raw codec measurements and aggregates them into one curve per
/// (codec, resolution). Times may be left empty, but uniformly per curve.
inline std::vector<CodecCurve> read_measurements(std::istream& in, const std::string& name,
                                                 IngestReport* report = nullptr) {
    std::string line;
    if (!std::getline(in, line) || detail::strip(line) != kMeasurementHeader) {
        throw input_error(name + ": expected header '" + kMeasurementHeader + "'");
    }
    struct GroupKey {
        Codec codec;
        double width;
        double height;
        bool operator<(const GroupKey& o) const {
            return std::tie(codec, width, height) < std::tie(o.codec, o.width, o.height);
        }
    };
    std::map<GroupKey, std::vector<MeasurementRecord>> groups;
    int line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (detail::strip(line).empty()) continue;
        const std::string ctx = name + " line " + std::to_string(line_number);
        const auto f = detail::split_fields(line, ',');
        if (f.size() != 6) throw input_error(ctx + ": expected 6 comma-separated fields");

        const Codec codec = codec_from_string(detail::strip(f[0]));
        const auto res = detail::split_fields(detail::strip(f[1]), 'x');
        if (res.size() != 2) throw input_error(ctx + ": resolution must look like 640x640");
        const double width = detail::parse_double(res[0], ctx);
        const double height = detail::parse_double(res[1], ctx);

        MeasurementRecord rec;
        rec.quality = static_cast<int>(detail::parse_int(detail::strip(f[2]), ctx));
        rec.bytes = detail::parse_double(detail::strip(f[3]), ctx);
        const std::string c_ms = detail::strip(f[4]);
        const std::string d_ms = detail::strip(f[5]);
        if (!c_ms.empty()) rec.compress_ms = detail::parse_double(c_ms, ctx);
        if (!d_ms.empty()) rec.decompress_ms = detail::parse_double(d_ms, ctx);
        groups[GroupKey{codec, width, height}].push_back(rec);
    }
    if (groups.empty()) throw input_error(name + ": no measurement records");

    std::vector<CodecCurve> curves;
    for (const auto& [key, records] : groups) {
        curves.push_back(ingest_measurements(key.codec, key.width, key.height, records, report));
    }
    return curves;
}

inline json curve_to_json(const CodecCurve& curve) {
    json samples = json::array();
    for (const auto& s : curve.samples) {
        json item = {{"quality", s.quality}, {"bytes", s.mean_bytes}};
        if (s.compress_ms) item["compress_ms"] = *s.compress_ms;
        if (s.decompress_ms) item["decompress_ms"] = *s.decompress_ms;
        samples.push_back(item);
    }
    return json{{"codec", to_string(curve.codec)},
                {"width", curve.width},
                {"height", curve.height},
                {"samples", samples}};
}

inline CodecCurve curve_from_json(const json& j, const std::string& context) {
    detail::check_keys(j, {"codec", "width", "height", "samples"}, context);
    CodecCurve curve;
    curve.codec = codec_from_string(j.at("codec").get<std::string>());
    curve.width = j.at("width").get<double>();
    curve.height = j.at("height").get<double>();
    for (const auto& item : j.at("samples")) {
        detail::check_keys(item, {"quality", "bytes", "compress_ms", "decompress_ms"},
                           context + ".samples");
        CodecCurve::Sample s;
        s.quality = item.at("quality").get<int>();
        s.mean_bytes = item.at("bytes").get<double>();
        if (item.contains("compress_ms")) s.compress_ms = item.at("compress_ms").get<double>();
        if (item.contains("decompress_ms")) s.decompress_ms = item.at("decompress_ms").get<double>();
        curve.samples.push_back(s);
    }
    std::sort(curve.samples.begin(), curve.samples.end(),
              [](const auto& a, const auto& b) { return a.quality < b.quality; });
    require_valid(curve);
    return curve;
}

// ---------------------------------------------------------------------------
// Calibration observation files (CSV)
// ---------------------------------------------------------------------------

inline const std::string kObservationHeader = "size_bytes,measured_total_ms,known_non_network_ms";

inline std::vector<CalibrationObservation> read_observations(std::istream& in,
                                                             const std::string& name) {
    std::string line;
    if (!std::getline(in, line) || detail::strip(line) != kObservationHeader) {
        throw input_error(name + ": expected header '" + kObservationHeader + "'");
    }
    std::vector<CalibrationObservation> obs;
    int line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (detail::strip(line).empty()) continue;
        const std::string ctx = name + " line " + std::to_string(line_number);
        const auto f = detail::split_fields(line, ',');
        if (f.size() != 3) throw input_error(ctx + ": expected 3 comma-separated fields");
        CalibrationObservation o;
        o.size_bytes = detail::parse_double(detail::strip(f[0]), ctx);
        o.measured_total_ms = detail::parse_double(detail::strip(f[1]), ctx);
        o.known_non_network_ms = detail::parse_double(detail::strip(f[2]), ctx);
        obs.push_back(o);
    }
    return obs;
}

// ---------------------------------------------------------------------------
// Dataset manifests
// ---------------------------------------------------------------------------

/// Manifest: {"image_width": W, "image_height": H,
///            "splits": {"train": ["labels/0001.txt", ...], ...}}
/// Label paths are resolved relative to the manifest file. Every referenced
/// file must exist; otherwise the whole load is refused and the missing
/// paths are listed.
inline std::vector<DatasetSplit> load_manifest(const std::string& manifest_path) {
    json j;
    try {
        j = json::parse(read_file(manifest_path));
    } catch (const json::exception& e) {
        throw input_error("manifest '" + manifest_path + "': " + e.what());
    }
    detail::check_keys(j, {"image_width", "image_height", "splits"}, "manifest");
    if (!j.contains("image_width") || !j.contains("image_height") || !j.contains("splits")) {
        throw input_error("manifest: image_width, image_height and splits are required");
    }
    const double width = j.at("image_width").get<double>();
    const double height = j.at("image_height").get<double>();
    const auto base = std::filesystem::path(manifest_path).parent_path();

    std::vector<std::string> missing;
    for (const auto& [split_name, files] : j.at("splits").items()) {
        for (const auto& file : files) {
            const auto path = base / file.get<std::string>();
            if (!std::filesystem::exists(path)) missing.push_back(path.string());
        }
    }
    if (!missing.empty()) {
        std::string msg = "manifest: missing label files:";
        for (const auto& m : missing) msg += "\n  " + m;
        throw input_error(msg);
    }

    std::vector<DatasetSplit> splits;
    for (const auto& [split_name, files] : j.at("splits").items()) {
        DatasetSplit split;
        split.name = split_name;
        for (const auto& file : files) {
            const auto path = base / file.get<std::string>();
            FrameRecord frame;
            frame.frame_id = path.stem().string();
            std::ifstream in(path);
            try {
                frame.boxes = parse_labels(in, width, height, frame.frame_id);
            } catch (const input_error& e) {
                throw input_error(path.string() + ": " + e.what());
            }
            split.frames.push_back(std::move(frame));
        }
        require_unique_frames(split);
        splits.push_back(std::move(split));
    }
    return splits;
}

// ---------------------------------------------------------------------------
// Quality fixtures
// ---------------------------------------------------------------------------

/// One fixture record, as stored in a fixture JSON file.
struct FixtureEntry {
    Platform platform = Platform::local;
    Scenario scenario = Scenario::raw;
    std::optional<double> map_value;
    std::map<int, double> per_class_ap;
    std::optional<double> delay_override_ms;
    std::string detections_path;  // empty when the entry is fixture-only
};

inline int class_id_from_key(const std::string& key, const std::map<int, std::string>& names) {
    for (const auto& [id, name] : names) {
        if (key == name) return id;
    }
    return static_cast<int>(detail::parse_int(key, "per_class key"));
}

inline std::vector<FixtureEntry> fixture_from_json(const json& j,
                                                   const std::map<int, std::string>& class_names) {
    detail::check_keys(j, {"entries"}, "fixture");
    std::vector<FixtureEntry> entries;
    for (const auto& item : j.at("entries")) {
        detail::check_keys(item,
                           {"platform", "scenario", "map", "per_class", "delay_override_ms",
                            "detections"},
                           "fixture entry");
        FixtureEntry e;
        e.platform = platform_from_string(item.at("platform").get<std::string>());
        e.scenario = scenario_from_string(item.at("scenario").get<std::string>());
        if (item.contains("map")) e.map_value = item.at("map").get<double>();
        if (item.contains("per_class")) {
            for (const auto& [key, value] : item.at("per_class").items()) {
                e.per_class_ap[class_id_from_key(key, class_names)] = value.get<double>();
            }
        }
        if (item.contains("delay_override_ms")) {
            e.delay_override_ms = item.at("delay_override_ms").get<double>();
        }
        if (item.contains("detections")) e.detections_path = item.at("detections").get<std::string>();
        entries.push_back(std::move(e));
    }
    return entries;
}

inline std::vector<FixtureEntry> load_fixture(const std::string& path,
                                              const std::map<int, std::string>& class_names) {
    try {
        return fixture_from_json(json::parse(read_file(path)), class_names);
    } catch (const json::exception& e) {
        throw input_error("fixture '" + path + "': " + e.what());
    }
}

/// The bundled measurement set as fixture entries.
inline std::vector<FixtureEntry> builtin_fixture() {
    std::vector<FixtureEntry> entries;
    for (const auto& row : reference_quality_table()) {
        FixtureEntry e;
        e.platform = row.platform;
        e.scenario = row.scenario;
        if (row.map_value >= 0.0) e.map_value = row.map_value;
        e.per_class_ap = per_class_of(row);
        entries.push_back(e);
    }
    return entries;
}

// ---------------------------------------------------------------------------
// Run configuration (JSON)
// ---------------------------------------------------------------------------

inline json channel_to_json(const ChannelParams& ch) {
    json j = {{"throughput_mbps", ch.throughput_mbps},
              {"packet_payload_bytes", ch.packet_payload_bytes},
              {"per_packet_overhead_ms", ch.per_packet_overhead_ms},
              {"base_latency_up_ms", ch.base_latency_up_ms},
              {"base_latency_down_ms", ch.base_latency_down_ms},
              {"loss_ratio", ch.loss_ratio}};
    if (ch.jitter) j["jitter"] = {{"mu", ch.jitter->mu}, {"sigma", ch.jitter->sigma}};
    return j;
}

inline void channel_from_json(const json& j, ChannelParams& ch, const std::string& context) {
    detail::check_keys(j,
                       {"throughput_mbps", "packet_payload_bytes", "per_packet_overhead_ms",
                        "base_latency_up_ms", "base_latency_down_ms", "loss_ratio", "jitter"},
                       context);
    if (j.contains("throughput_mbps")) ch.throughput_mbps = j.at("throughput_mbps").get<double>();
    if (j.contains("packet_payload_bytes")) ch.packet_payload_bytes = j.at("packet_payload_bytes").get<double>();
    if (j.contains("per_packet_overhead_ms")) ch.per_packet_overhead_ms = j.at("per_packet_overhead_ms").get<double>();
    if (j.contains("base_latency_up_ms")) ch.base_latency_up_ms = j.at("base_latency_up_ms").get<double>();
    if (j.contains("base_latency_down_ms")) ch.base_latency_down_ms = j.at("base_latency_down_ms").get<double>();
    if (j.contains("loss_ratio")) ch.loss_ratio = j.at("loss_ratio").get<double>();
    if (j.contains("jitter")) {
        detail::check_keys(j.at("jitter"), {"mu", "sigma"}, context + ".jitter");
        JitterParams jit;
        jit.mu = j.at("jitter").at("mu").get<double>();
        jit.sigma = j.at("jitter").at("sigma").get<double>();
        ch.jitter = jit;
    }
    if (!ch.valid()) throw config_error(context + ": invalid channel parameters");
}

inline void platform_from_json(const json& j, PlatformProfile& p, const std::string& context) {
    detail::check_keys(j, {"model_label", "resolution", "inference_ms"}, context);
    if (j.contains("model_label")) p.model_label = j.at("model_label").get<std::string>();
    if (j.contains("resolution")) {
        const auto& res = j.at("resolution");
        if (!res.is_array() || res.size() != 2) {
            throw config_error(context + ": resolution must be [width, height]");
        }
        p.input_width = res[0].get<double>();
        p.input_height = res[1].get<double>();
    }
    if (j.contains("inference_ms")) p.inference_ms = j.at("inference_ms").get<double>();
}

inline ScenarioMatrix matrix_from_json(const json& j, const std::string& context) {
    ScenarioMatrix m;
    for (const auto& item : j) {
        if (!item.is_array() || item.size() != 2) {
            throw config_error(context + ": each entry must be [platform, scenario]");
        }
        m.emplace_back(platform_from_string(item[0].get<std::string>()),
                       scenario_from_string(item[1].get<std::string>()));
    }
    return m;
}

/// Loads a config file over the defaults. Every key is optional; unknown
/// keys are rejected so typos cannot silently fall back to defaults.
inline RunConfig config_from_json(const json& j) {
    RunConfig cfg;
    detail::check_keys(j,
                       {"seed", "output_dir", "budget_hz", "channels", "platforms", "codec_times",
                        "curves", "measurement_files", "policy", "eval", "simulate_matrix",
                        "tradeoff_matrix", "class_names"},
                       "config");
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("budget_hz")) {
        cfg.budget_hz = j.at("budget_hz").get<double>();
        if (!(cfg.budget_hz > 0.0)) throw config_error("config: budget_hz must be positive");
    }
    if (j.contains("channels")) {
        detail::check_keys(j.at("channels"), {"edge", "cloud"}, "config.channels");
        if (j.at("channels").contains("edge")) {
            channel_from_json(j.at("channels").at("edge"), cfg.edge_channel, "config.channels.edge");
        }
        if (j.at("channels").contains("cloud")) {
            channel_from_json(j.at("channels").at("cloud"), cfg.cloud_channel, "config.channels.cloud");
        }
    }
    if (j.contains("platforms")) {
        detail::check_keys(j.at("platforms"), {"local", "edge", "cloud"}, "config.platforms");
        if (j.at("platforms").contains("local")) {
            platform_from_json(j.at("platforms").at("local"), cfg.local_platform, "config.platforms.local");
        }
        if (j.at("platforms").contains("edge")) {
            platform_from_json(j.at("platforms").at("edge"), cfg.edge_platform, "config.platforms.edge");
        }
        if (j.at("platforms").contains("cloud")) {
            platform_from_json(j.at("platforms").at("cloud"), cfg.cloud_platform, "config.platforms.cloud");
        }
    }
    if (j.contains("codec_times")) {
        const auto& ct = j.at("codec_times");
        detail::check_keys(ct,
                           {"jpeg_compress_ms", "jpeg_decompress_ms", "h265_compress_ms",
                            "h265_decompress_ms", "reference_pixels", "scale_with_pixels"},
                           "config.codec_times");
        auto& m = cfg.codec_times;
        if (ct.contains("jpeg_compress_ms")) m.jpeg_compress_ms = ct.at("jpeg_compress_ms").get<double>();
        if (ct.contains("jpeg_decompress_ms")) m.jpeg_decompress_ms = ct.at("jpeg_decompress_ms").get<double>();
        if (ct.contains("h265_compress_ms")) m.h265_compress_ms = ct.at("h265_compress_ms").get<double>();
        if (ct.contains("h265_decompress_ms")) m.h265_decompress_ms = ct.at("h265_decompress_ms").get<double>();
        if (ct.contains("reference_pixels")) m.reference_pixels = ct.at("reference_pixels").get<double>();
        if (ct.contains("scale_with_pixels")) m.scale_with_pixels = ct.at("scale_with_pixels").get<bool>();
    }
    if (j.contains("policy")) {
        detail::check_keys(j.at("policy"), {"budget_ms", "min_map"}, "config.policy");
        if (j.at("policy").contains("budget_ms")) cfg.policy.budget_ms = j.at("policy").at("budget_ms").get<double>();
        if (j.at("policy").contains("min_map")) cfg.policy.min_map = j.at("policy").at("min_map").get<double>();
        require_valid(cfg.policy);
    }
    if (j.contains("eval")) {
        detail::check_keys(j.at("eval"), {"iou_threshold", "confidence_threshold"}, "config.eval");
        if (j.at("eval").contains("iou_threshold")) cfg.eval.iou_threshold = j.at("eval").at("iou_threshold").get<double>();
        if (j.at("eval").contains("confidence_threshold")) cfg.eval.confidence_threshold = j.at("eval").at("confidence_threshold").get<double>();
    }
    if (j.contains("simulate_matrix")) cfg.simulate_matrix = matrix_from_json(j.at("simulate_matrix"), "config.simulate_matrix");
    if (j.contains("tradeoff_matrix")) cfg.tradeoff_matrix = matrix_from_json(j.at("tradeoff_matrix"), "config.tradeoff_matrix");
    if (j.contains("class_names")) {
        cfg.class_names.clear();
        for (const auto& [key, value] : j.at("class_names").items()) {
            cfg.class_names[static_cast<int>(detail::parse_int(key, "config.class_names"))] =
                value.get<std::string>();
        }
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    try {
        return config_from_json(json::parse(read_file(path)));
    } catch (const json::exception& e) {
        throw config_error("config '" + path + "': " + e.what());
    } catch (const input_error& e) {
        throw config_error(e.what());
    }
}

/// Curves for a run: the bundled defaults, then config-file curves and
/// ingested measurement files layered on top (matching codec+resolution wins).
inline CurveSet load_curves(const json* config_json, const std::string& config_dir) {
    CurveSet set = default_curves();
    if (!config_json) return set;
    if (config_json->contains("curves")) {
        for (const auto& item : config_json->at("curves")) {
            set.add(curve_from_json(item, "config.curves"));
        }
    }
    if (config_json->contains("measurement_files")) {
        for (const auto& item : config_json->at("measurement_files")) {
            const auto path =
                (std::filesystem::path(config_dir) / item.get<std::string>()).string();
            std::ifstream in(path);
            if (!in) throw input_error("cannot open measurement file '" + path + "'");
            for (auto& curve : read_measurements(in, path)) set.add(std::move(curve));
        }
    }
    return set;
}

}  // namespace offsim::io
