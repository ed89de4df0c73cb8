#pragma once

#include <map>
#include <string>
#include <vector>

#include "offsim/common.hpp"
#include "offsim/compression.hpp"
#include "offsim/network.hpp"
#include "offsim/pipeline.hpp"
#include "offsim/tradeoff.hpp"

// Bundled reference data: channel parameters, payload-size curves, measured
// end-to-end latencies and per-class detection quality for a three-platform
// offloading study (local Jetson-class device, an edge host and a cloud
// node reachable over a cellular V2X link). These are the defaults every
// command starts from; all of them can be overridden by a config file.

namespace offsim {

// ---------------------------------------------------------------------------
// Classes
// ---------------------------------------------------------------------------

inline constexpr int kClassPedestrian = 0;
inline constexpr int kClassTrafficLight = 1;
inline constexpr int kClassVehicle = 2;

inline const std::map<int, std::string>& default_class_names() {
    static const std::map<int, std::string> names = {
        {kClassPedestrian, "pedestrian"},
        {kClassTrafficLight, "traffic_light"},
        {kClassVehicle, "vehicle"},
    };
    return names;
}

// ---------------------------------------------------------------------------
// Channels
// ---------------------------------------------------------------------------

inline ChannelParams default_edge_channel() {
    ChannelParams ch;
    ch.throughput_mbps = 113.94;
    ch.packet_payload_bytes = 4096.0;
    ch.per_packet_overhead_ms = 0.0;
    ch.base_latency_up_ms = 0.43;
    ch.base_latency_down_ms = 0.43;
    ch.loss_ratio = 1e-4;
    return ch;
}

inline ChannelParams default_cloud_channel() {
    ChannelParams ch = default_edge_channel();
    ch.base_latency_up_ms = 0.45;
    ch.base_latency_down_ms = 0.45;
    return ch;
}

// ---------------------------------------------------------------------------
// Payload-size curves (mean bytes per frame by quality level)
// ---------------------------------------------------------------------------

inline CurveSet default_curves() {
    CurveSet set;

    CodecCurve jpeg640;
    jpeg640.codec = Codec::jpeg;
    jpeg640.width = jpeg640.height = 640.0;
    jpeg640.samples = {{10, 9480.0, {}, {}},
                       {30, 17860.0, {}, {}},
                       {80, 40780.0, {}, {}},
                       {100, 174120.0, {}, {}}};
    set.add(jpeg640);

    CodecCurve jpeg1280;
    jpeg1280.codec = Codec::jpeg;
    jpeg1280.width = jpeg1280.height = 1280.0;
    jpeg1280.samples = {{10, 28600.0, {}, {}},
                        {30, 53780.0, {}, {}},
                        {80, 125510.0, {}, {}},
                        {100, 604380.0, {}, {}}};
    set.add(jpeg1280);

    CodecCurve h265_640;
    h265_640.codec = Codec::h265;
    h265_640.width = h265_640.height = 640.0;
    h265_640.samples = {{0, 100000.0, {}, {}},
                        {24, 4200.0, {}, {}},
                        {30, 1800.0, {}, {}},
                        {51, 260.0, {}, {}}};
    set.add(h265_640);

    CodecCurve h265_1280;
    h265_1280.codec = Codec::h265;
    h265_1280.width = h265_1280.height = 1280.0;
    h265_1280.samples = {{0, 220000.0, {}, {}},
                         {24, 11200.0, {}, {}},
                         {30, 4690.0, {}, {}},
                         {51, 690.0, {}, {}}};
    set.add(h265_1280);

    return set;
}

// ---------------------------------------------------------------------------
// Measured end-to-end latencies (the calibration reference)
// ---------------------------------------------------------------------------

/// One measured row: payload size sent through the channel and the observed
/// end-to-end time (compression, transfer, decompression, inference, return).
struct LatencyRow {
    Platform platform = Platform::edge;
    Scenario scenario = Scenario::raw;
    double payload_bytes = 0.0;
    double measured_total_ms = 0.0;
};

inline const std::vector<LatencyRow>& reference_latency_table() {
    static const std::vector<LatencyRow> rows = {
        {Platform::edge, Scenario::raw, 1228800.0, 123.20},
        {Platform::edge, Scenario::jpeg_h, 174120.0, 59.48},
        {Platform::edge, Scenario::jpeg_m, 40780.0, 43.59},
        {Platform::edge, Scenario::jpeg_l, 17860.0, 39.62},
        {Platform::edge, Scenario::jpeg_vl, 9480.0, 37.27},
        {Platform::edge, Scenario::h265_h, 100000.0, 48.65},
        {Platform::edge, Scenario::h265_m, 4200.0, 41.61},
        {Platform::edge, Scenario::h265_l, 1800.0, 38.51},
        {Platform::edge, Scenario::h265_vl, 260.0, 37.47},
        {Platform::cloud, Scenario::raw, 4915200.0, 521.70},
        {Platform::cloud, Scenario::jpeg_h, 604380.0, 74.50},
        {Platform::cloud, Scenario::jpeg_m, 125510.0, 40.71},
        {Platform::cloud, Scenario::jpeg_l, 53780.0, 32.93},
        {Platform::cloud, Scenario::jpeg_vl, 28600.0, 29.42},
        {Platform::cloud, Scenario::h265_h, 220000.0, 46.93},
        {Platform::cloud, Scenario::h265_m, 11200.0, 30.21},
        {Platform::cloud, Scenario::h265_l, 4690.0, 28.72},
        {Platform::cloud, Scenario::h265_vl, 690.0, 27.78},
    };
    return rows;
}

inline const LatencyRow& reference_latency_row(Platform platform, Scenario scenario) {
    for (const auto& row : reference_latency_table()) {
        if (row.platform == platform && row.scenario == scenario) return row;
    }
    throw input_error("no reference latency row for " + to_string(platform) + "/" +
                      to_string(scenario));
}

// ---------------------------------------------------------------------------
// Platforms
// ---------------------------------------------------------------------------

inline double local_inference_ms() { return 19.5; }

/// Remote inference defaults are extracted from the reference latency table:
/// the smallest-payload row of each platform is nearly pure inference, so
/// subtracting the modelled channel terms from it isolates the model time.
inline double derived_inference_ms(Platform platform) {
    const ChannelParams ch =
        platform == Platform::edge ? default_edge_channel() : default_cloud_channel();
    const LatencyRow& row = reference_latency_row(platform, Scenario::h265_vl);
    const double uplink = uplink_delay(row.payload_bytes, ch).total_ms;
    const double downlink = downlink_delay(kResultPayloadBytes, ch);
    return row.measured_total_ms - uplink - downlink;
}

inline PlatformProfile default_local_platform() {
    PlatformProfile p;
    p.name = Platform::local;
    p.model_label = "detector-small";
    p.input_width = p.input_height = 640.0;
    p.inference_ms = local_inference_ms();
    return p;
}

inline PlatformProfile default_edge_platform() {
    PlatformProfile p;
    p.name = Platform::edge;
    p.model_label = "detector-large";
    p.input_width = p.input_height = 640.0;
    p.inference_ms = derived_inference_ms(Platform::edge);
    p.channel = default_edge_channel();
    return p;
}

inline PlatformProfile default_cloud_platform() {
    PlatformProfile p;
    p.name = Platform::cloud;
    p.model_label = "detector-large-highres";
    p.input_width = p.input_height = 1280.0;
    p.inference_ms = derived_inference_ms(Platform::cloud);
    p.channel = default_cloud_channel();
    return p;
}

// ---------------------------------------------------------------------------
// Detection-quality fixture (measured mAP and per-class AP)
// ---------------------------------------------------------------------------

struct QualityFixtureRow {
    Platform platform = Platform::local;
    Scenario scenario = Scenario::raw;
    double map_value = -1.0;  // < 0 when only per-class APs were measured
    double pedestrian_ap = 0.0;
    double traffic_light_ap = 0.0;
    double vehicle_ap = 0.0;
};

inline const std::vector<QualityFixtureRow>& reference_quality_table() {
    static const std::vector<QualityFixtureRow> rows = {
        {Platform::local, Scenario::raw, 0.64, 0.30, 0.80, 0.79},
        {Platform::edge, Scenario::raw, 0.66, 0.36, 0.82, 0.81},
        {Platform::cloud, Scenario::raw, 0.85, 0.81, 0.86, 0.89},
        {Platform::edge, Scenario::jpeg_h, 0.67, 0.36, 0.82, 0.80},
        {Platform::cloud, Scenario::jpeg_h, 0.85, 0.80, 0.86, 0.89},
        {Platform::edge, Scenario::jpeg_m, 0.66, 0.41, 0.78, 0.83},
        {Platform::cloud, Scenario::jpeg_m, 0.81, 0.65, 0.85, 0.88},
        {Platform::edge, Scenario::jpeg_l, 0.51, 0.35, 0.74, 0.77},
        {Platform::cloud, Scenario::jpeg_l, 0.58, 0.43, 0.81, 0.84},
        {Platform::edge, Scenario::jpeg_vl, -1.0, 0.23, 0.55, 0.73},
        {Platform::cloud, Scenario::jpeg_vl, -1.0, 0.24, 0.62, 0.78},
        {Platform::edge, Scenario::h265_h, 0.67, 0.36, 0.83, 0.80},
        {Platform::cloud, Scenario::h265_h, 0.82, 0.68, 0.83, 0.83},
        {Platform::edge, Scenario::h265_m, 0.57, 0.25, 0.82, 0.78},
        {Platform::cloud, Scenario::h265_m, 0.82, 0.69, 0.82, 0.84},
        {Platform::edge, Scenario::h265_l, 0.45, 0.04, 0.72, 0.59},
        {Platform::cloud, Scenario::h265_l, 0.72, 0.51, 0.82, 0.82},
        {Platform::edge, Scenario::h265_vl, -1.0, 0.01, 0.03, 0.02},
        {Platform::cloud, Scenario::h265_vl, -1.0, 0.03, 0.04, 0.23},
    };
    return rows;
}

inline std::map<int, double> per_class_of(const QualityFixtureRow& row) {
    return {{kClassPedestrian, row.pedestrian_ap},
            {kClassTrafficLight, row.traffic_light_ap},
            {kClassVehicle, row.vehicle_ap}};
}

inline ApTable reference_ap_table() {
    ApTable table;
    for (const auto& row : reference_quality_table()) {
        table[{row.platform, row.scenario}] = per_class_of(row);
    }
    return table;
}

// ---------------------------------------------------------------------------
// Scenario matrices
// ---------------------------------------------------------------------------

using ScenarioMatrix = std::vector<std::pair<Platform, Scenario>>;

/// Everything the simulator can price: local plus every remote scenario.
inline ScenarioMatrix default_simulate_matrix() {
    ScenarioMatrix m;
    m.emplace_back(Platform::local, Scenario::raw);
    for (Platform p : {Platform::edge, Platform::cloud}) {
        for (const auto& [scenario, name] : scenario_names()) {
            m.emplace_back(p, scenario);
        }
    }
    return m;
}

/// Trade-off study set: the very-low-quality settings are excluded because
/// their detection quality collapses, and remote raw transfer is excluded
/// because it blows the latency budget outright.
inline ScenarioMatrix default_tradeoff_matrix() {
    ScenarioMatrix m;
    m.emplace_back(Platform::local, Scenario::raw);
    for (Platform p : {Platform::edge, Platform::cloud}) {
        for (Scenario s : {Scenario::jpeg_h, Scenario::jpeg_m, Scenario::jpeg_l, Scenario::h265_h,
                           Scenario::h265_m, Scenario::h265_l}) {
            m.emplace_back(p, s);
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct EvalConfig {
    double iou_threshold = 0.5;
    double confidence_threshold = 0.0;
};

/// Aggregated configuration for every command. Field defaults mirror the
/// bundled reference data; a JSON config file and CLI flags override them
/// (flag > file > default).
struct RunConfig {
    std::uint64_t seed = 42;
    std::string output_dir = "out";
    double budget_hz = 20.0;

    ChannelParams edge_channel = default_edge_channel();
    ChannelParams cloud_channel = default_cloud_channel();

    PlatformProfile local_platform = default_local_platform();
    PlatformProfile edge_platform = default_edge_platform();
    PlatformProfile cloud_platform = default_cloud_platform();

    /// Per-frame codec times; zero by default because the reference latency
    /// table's totals already absorb them and the study treats them as
    /// negligible. CodecTimeModel::library_default() has nonzero estimates.
    CodecTimeModel codec_times = CodecTimeModel::zero();

    SelectionPolicy policy;
    EvalConfig eval;

    ScenarioMatrix simulate_matrix = default_simulate_matrix();
    ScenarioMatrix tradeoff_matrix = default_tradeoff_matrix();

    std::map<int, std::string> class_names = default_class_names();

    const PlatformProfile& platform(Platform p) const {
        switch (p) {
            case Platform::local: return local_platform;
            case Platform::edge: return edge_platform;
            case Platform::cloud: return cloud_platform;
        }
        throw config_error("unknown platform");
    }

    /// Platform profile with the channel section applied to it.
    PlatformProfile resolved_platform(Platform p) const {
        PlatformProfile profile = platform(p);
        if (p == Platform::edge) profile.channel = edge_channel;
        if (p == Platform::cloud) profile.channel = cloud_channel;
        return profile;
    }

    Strategy strategy(Platform p, Scenario s) const {
        const PlatformProfile profile = resolved_platform(p);
        Strategy strat;
        strat.platform = profile;
        strat.compression = named_scenario(s, profile.input_width, profile.input_height);
        return strat;
    }
};

}  // namespace offsim
