#pragma once

#include <optional>
#include <string>

#include "offsim/common.hpp"
#include "offsim/compression.hpp"
#include "offsim/network.hpp"

namespace offsim {

enum class Platform { local, edge, cloud };

inline std::string to_string(Platform p) {
    switch (p) {
        case Platform::local: return "local";
        case Platform::edge: return "edge";
        case Platform::cloud: return "cloud";
    }
    return "?";
}

inline Platform platform_from_string(const std::string& s) {
    if (s == "local") return Platform::local;
    if (s == "edge") return Platform::edge;
    if (s == "cloud") return Platform::cloud;
    throw input_error("unknown platform '" + s + "'");
}

/// Where inference runs: the model, its input resolution, its per-frame
/// inference time (preprocessing and NMS included), and the channel frames
/// travel over. Local platforms have no channel.
struct PlatformProfile {
    Platform name = Platform::local;
    std::string model_label;
    double input_width = 0.0;
    double input_height = 0.0;
    double inference_ms = 0.0;
    std::optional<ChannelParams> channel;

    bool remote() const { return name != Platform::local; }
};

inline void require_valid(const PlatformProfile& p) {
    if (!(p.inference_ms > 0.0)) throw config_error("platform '" + to_string(p.name) + "': inference time must be positive");
    if (!(p.input_width > 0.0 && p.input_height > 0.0)) {
        throw config_error("platform '" + to_string(p.name) + "': invalid input resolution");
    }
    if (p.remote() && !p.channel) {
        throw config_error("platform '" + to_string(p.name) + "': remote platform needs a channel");
    }
    if (!p.remote() && p.channel) {
        throw config_error("platform 'local' must not have a channel");
    }
    if (p.channel) require_valid(*p.channel);
}

/// The named scenario a setting corresponds to, when there is one.
inline std::optional<Scenario> scenario_of(const CompressionSetting& setting) {
    for (const auto& [value, name] : scenario_names()) {
        const CompressionSetting candidate = named_scenario(value, setting.width, setting.height);
        if (candidate.codec == setting.codec &&
            (setting.codec == Codec::none || candidate.quality == setting.quality)) {
            return value;
        }
    }
    return std::nullopt;
}

/// A (platform, compression) pair: one way of getting a frame detected.
struct Strategy {
    PlatformProfile platform;
    CompressionSetting compression;

    std::string scenario_label() const {
        if (const auto s = scenario_of(compression)) return to_string(*s);
        return to_string(compression.codec) + "@" + std::to_string(compression.quality);
    }

    std::string label() const { return to_string(platform.name) + "/" + scenario_label(); }
};

inline void require_valid(const Strategy& s) {
    require_valid(s.platform);
    require_valid(s.compression);
    if (s.compression.width != s.platform.input_width ||
        s.compression.height != s.platform.input_height) {
        throw config_error("strategy " + s.label() + ": compression resolution differs from platform input");
    }
    if (!s.platform.remote() && s.compression.codec != Codec::none) {
        throw config_error("local strategy must not compress");
    }
}

// Detection results are assumed to fit into a single return packet.
inline constexpr double kResultPayloadBytes = 1024.0;

/// Five-part end-to-end decomposition. Parts always sum to the total; for a
/// local strategy everything except inference is zero.
struct DelayBreakdown {
    double compress_ms = 0.0;
    double uplink_ms = 0.0;
    double decompress_ms = 0.0;
    double inference_ms = 0.0;
    double downlink_ms = 0.0;
    double total_ms = 0.0;
    double delivery_probability = 1.0;
    double payload_bytes = 0.0;
    std::uint64_t packet_count = 0;
};

/// Composes codec, channel and inference terms for one strategy.
inline DelayBreakdown end_to_end_delay(const Strategy& strategy, const CurveSet& curves,
                                       const CodecTimeModel& codec_times = CodecTimeModel::zero(),
                                       double result_size_bytes = kResultPayloadBytes) {
    require_valid(strategy);

    DelayBreakdown b;
    b.inference_ms = strategy.platform.inference_ms;
    if (!strategy.platform.remote()) {
        b.total_ms = b.inference_ms;
        return b;
    }

    const ChannelParams& ch = *strategy.platform.channel;
    const CodecCurve* curve = nullptr;
    if (strategy.compression.codec != Codec::none) {
        curve = &curves.require(strategy.compression);
    }
    b.payload_bytes = strategy.compression.codec == Codec::none
                          ? strategy.compression.width * strategy.compression.height * 3.0
                          : expected_size(strategy.compression, *curve);
    b.compress_ms = codec_time(strategy.compression, CodecRole::compress, curve, codec_times);
    b.decompress_ms = codec_time(strategy.compression, CodecRole::decompress, curve, codec_times);

    const TransferEstimate up = uplink_delay(b.payload_bytes, ch);
    b.uplink_ms = up.total_ms;
    b.packet_count = up.packet_count;
    b.delivery_probability = up.delivery_probability;
    b.downlink_ms = downlink_delay(result_size_bytes, ch);
    b.total_ms = b.compress_ms + b.uplink_ms + b.decompress_ms + b.inference_ms + b.downlink_ms;
    return b;
}

/// True when the total fits the per-frame budget of the given rate.
/// The boundary is inclusive: exactly 1000/rate ms still passes.
inline bool meets_budget(const DelayBreakdown& b, double rate_hz) {
    if (!(rate_hz > 0.0)) throw input_error("meets_budget: rate must be positive");
    return b.total_ms <= 1000.0 / rate_hz;
}

/// Inverse of end_to_end_delay: subtracts every modelled non-inference term
/// from a measured total, leaving the platform's inference time.
inline double derive_inference_residual(double measured_total_ms, const Strategy& strategy,
                                        const CurveSet& curves,
                                        const CodecTimeModel& codec_times = CodecTimeModel::zero(),
                                        double result_size_bytes = kResultPayloadBytes) {
    require_valid(strategy);
    if (!strategy.platform.remote()) {
        throw input_error("derive_inference_residual: local strategies have no network terms");
    }

    const ChannelParams& ch = *strategy.platform.channel;
    const CodecCurve* curve = nullptr;
    if (strategy.compression.codec != Codec::none) {
        curve = &curves.require(strategy.compression);
    }
    const double payload = strategy.compression.codec == Codec::none
                               ? strategy.compression.width * strategy.compression.height * 3.0
                               : expected_size(strategy.compression, *curve);
    const double compress = codec_time(strategy.compression, CodecRole::compress, curve, codec_times);
    const double decompress =
        codec_time(strategy.compression, CodecRole::decompress, curve, codec_times);
    const double uplink = uplink_delay(payload, ch).total_ms;
    const double downlink = downlink_delay(result_size_bytes, ch);

    const double residual = measured_total_ms - compress - uplink - decompress - downlink;
    if (!(residual > 0.0)) {
        throw consistency_error(detail::format(
            "derive_inference_residual: measured %.2f ms is not larger than the modelled "
            "non-inference terms (%.2f ms)",
            measured_total_ms, compress + uplink + decompress + downlink));
    }
    return residual;
}

}  // namespace offsim
