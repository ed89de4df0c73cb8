#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "offsim/common.hpp"

namespace offsim {

/// Log-normal per-packet latency jitter parameters.
struct JitterParams {
    double mu = 0.0;     // location of the underlying normal
    double sigma = 0.0;  // scale of the underlying normal, >= 0

    double mean() const { return std::exp(mu + sigma * sigma / 2.0); }
};

/// Calibrated description of one uplink/downlink path.
struct ChannelParams {
    double throughput_mbps = 0.0;      // serialization rate, Mbit/s
    double packet_payload_bytes = 0.0;
    double per_packet_overhead_ms = 0.0;
    double base_latency_up_ms = 0.0;
    double base_latency_down_ms = 0.0;
    double loss_ratio = 0.0;           // per-packet loss probability
    std::optional<JitterParams> jitter;

    bool valid() const {
        return throughput_mbps > 0.0 && packet_payload_bytes > 0.0 &&
               per_packet_overhead_ms >= 0.0 && base_latency_up_ms >= 0.0 &&
               base_latency_down_ms >= 0.0 && loss_ratio >= 0.0 && loss_ratio < 1.0 &&
               (!jitter || jitter->sigma >= 0.0);
    }
};

inline void require_valid(const ChannelParams& ch) {
    if (!ch.valid()) throw config_error("invalid channel parameters");
}

/// Number of packets needed to carry `size_bytes` of payload.
inline std::uint64_t packetize(double size_bytes, double packet_payload_bytes) {
    if (size_bytes < 0.0) throw input_error("packetize: negative size");
    if (!(packet_payload_bytes > 0.0)) throw input_error("packetize: payload must be positive");
    if (size_bytes == 0.0) return 0;
    return static_cast<std::uint64_t>(std::ceil(size_bytes / packet_payload_bytes));
}

/// Probability that all `packet_count` packets arrive, with independent
/// per-packet loss and no retransmission.
inline double delivery_probability(std::uint64_t packet_count, double loss_ratio) {
    if (loss_ratio < 0.0 || loss_ratio >= 1.0) {
        throw input_error("delivery_probability: loss ratio must be in [0,1)");
    }
    if (packet_count == 0 || loss_ratio == 0.0) return 1.0;
    return std::exp(static_cast<double>(packet_count) * std::log1p(-loss_ratio));
}

inline double serialization_ms(double size_bytes, const ChannelParams& ch) {
    return size_bytes * 8.0 / (ch.throughput_mbps * 1000.0);
}

/// Deterministic uplink transfer estimate, split into its three terms.
struct TransferEstimate {
    std::uint64_t packet_count = 0;
    double serialization_ms = 0.0;
    double overhead_ms = 0.0;
    double base_ms = 0.0;
    double total_ms = 0.0;
    double delivery_probability = 1.0;
};

inline TransferEstimate uplink_delay(double size_bytes, const ChannelParams& ch) {
    require_valid(ch);
    if (size_bytes < 0.0) throw input_error("uplink_delay: negative size");

    TransferEstimate est;
    est.packet_count = packetize(size_bytes, ch.packet_payload_bytes);
    est.serialization_ms = serialization_ms(size_bytes, ch);
    est.overhead_ms = static_cast<double>(est.packet_count) * ch.per_packet_overhead_ms;
    est.base_ms = ch.base_latency_up_ms;
    est.total_ms = est.serialization_ms + est.overhead_ms + est.base_ms;
    est.delivery_probability = delivery_probability(est.packet_count, ch.loss_ratio);
    return est;
}

/// Return-path delay for a result payload. Results that fit into one packet
/// cost only the base latency; larger results fall back to the packetized
/// uplink formula with the down-direction base latency.
inline double downlink_delay(double result_size_bytes, const ChannelParams& ch) {
    require_valid(ch);
    if (result_size_bytes < 0.0) throw input_error("downlink_delay: negative size");
    if (result_size_bytes <= ch.packet_payload_bytes) return ch.base_latency_down_ms;

    const std::uint64_t packets = packetize(result_size_bytes, ch.packet_payload_bytes);
    return serialization_ms(result_size_bytes, ch) +
           static_cast<double>(packets) * ch.per_packet_overhead_ms + ch.base_latency_down_ms;
}

/// One calibration observation: a transferred payload, the measured total
/// end-to-end time, and everything in that total which is not the modelled
/// network term (inference, codec time, base latencies).
struct CalibrationObservation {
    double size_bytes = 0.0;
    double measured_total_ms = 0.0;
    double known_non_network_ms = 0.0;
};

enum class CalibrationMode {
    fit_both,            // fit effective throughput and per-packet overhead
    fit_overhead_only,   // keep nominal throughput, fit the overhead
    fit_throughput_only  // keep nominal overhead, fit the throughput
};

inline std::string to_string(CalibrationMode m) {
    switch (m) {
        case CalibrationMode::fit_both: return "both";
        case CalibrationMode::fit_overhead_only: return "overhead";
        case CalibrationMode::fit_throughput_only: return "throughput";
    }
    return "?";
}

struct CalibrationResult {
    double throughput_mbps = 0.0;
    double per_packet_overhead_ms = 0.0;
    CalibrationMode mode = CalibrationMode::fit_overhead_only;
    bool overhead_clamped = false;        // a negative fit was clamped to zero
    std::vector<double> fit_residuals_ms; // observed minus fitted, per observation
};

/// Least-squares fit of the network residual
///     measured - known = size*8 / throughput + packets * overhead
/// over the observations. `fit_both` solves the closed-form two-parameter
/// regression in (size*8, packets); the single-parameter modes hold the
/// other value at its nominal setting. A negative fitted overhead is clamped
/// to zero (and flagged), since the channel model cannot represent it.
inline CalibrationResult calibrate(const std::vector<CalibrationObservation>& observations,
                                   const ChannelParams& nominal,
                                   CalibrationMode mode = CalibrationMode::fit_overhead_only) {
    require_valid(nominal);
    if (observations.size() < 2) {
        throw input_error("calibrate: need at least 2 observations, got " +
                          std::to_string(observations.size()));
    }
    bool distinct_sizes = false;
    for (const auto& o : observations) {
        if (o.size_bytes < 0.0) throw input_error("calibrate: negative size");
        if (o.size_bytes != observations.front().size_bytes) distinct_sizes = true;
    }
    if (!distinct_sizes) throw input_error("calibrate: observations need at least 2 distinct sizes");

    std::vector<double> bits;      // x1
    std::vector<double> packets;   // x2
    std::vector<double> residual;  // y
    for (const auto& o : observations) {
        bits.push_back(o.size_bytes * 8.0);
        packets.push_back(static_cast<double>(packetize(o.size_bytes, nominal.packet_payload_bytes)));
        residual.push_back(o.measured_total_ms - o.known_non_network_ms);
    }

    CalibrationResult result;
    result.mode = mode;

    // Model slopes: a in ms/bit, b in ms/packet.
    double a = 1.0 / (nominal.throughput_mbps * 1000.0);
    double b = nominal.per_packet_overhead_ms;

    if (mode == CalibrationMode::fit_both) {
        // Scale the bits column to packet units so the normal equations stay
        // well conditioned (the two regressors are nearly proportional).
        const double bits_per_packet = nominal.packet_payload_bytes * 8.0;
        double s11 = 0.0, s12 = 0.0, s22 = 0.0, s1y = 0.0, s2y = 0.0;
        for (std::size_t i = 0; i < residual.size(); ++i) {
            const double x1 = bits[i] / bits_per_packet;
            s11 += x1 * x1;
            s12 += x1 * packets[i];
            s22 += packets[i] * packets[i];
            s1y += x1 * residual[i];
            s2y += packets[i] * residual[i];
        }
        const double det = s11 * s22 - s12 * s12;
        if (std::abs(det) <= 1e-9 * s11 * s22 || s11 == 0.0 || s22 == 0.0) {
            throw input_error("calibrate: rank-deficient design (sizes are proportional)");
        }
        a = (s1y * s22 - s2y * s12) / det / bits_per_packet;
        b = (s2y * s11 - s1y * s12) / det;
    } else if (mode == CalibrationMode::fit_overhead_only) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < residual.size(); ++i) {
            num += packets[i] * (residual[i] - bits[i] * a);
            den += packets[i] * packets[i];
        }
        if (den == 0.0) throw input_error("calibrate: no packets in any observation");
        b = num / den;
    } else {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < residual.size(); ++i) {
            num += bits[i] * (residual[i] - packets[i] * b);
            den += bits[i] * bits[i];
        }
        if (den == 0.0) throw input_error("calibrate: all observations are empty");
        a = num / den;
    }

    if (!(a > 0.0)) {
        throw consistency_error(detail::format(
            "calibrate: fitted serialization slope %.3g ms/bit implies a non-positive throughput", a));
    }
    if (b < 0.0) {
        b = 0.0;
        result.overhead_clamped = true;
    }

    // Report nominal values verbatim when a mode holds them fixed.
    result.throughput_mbps = mode == CalibrationMode::fit_overhead_only
                                 ? nominal.throughput_mbps
                                 : 1.0 / (a * 1000.0);
    result.per_packet_overhead_ms = b;
    for (std::size_t i = 0; i < residual.size(); ++i) {
        result.fit_residuals_ms.push_back(residual[i] - (bits[i] * a + packets[i] * b));
    }
    return result;
}

inline ChannelParams apply_calibration(const ChannelParams& nominal, const CalibrationResult& fit) {
    ChannelParams out = nominal;
    out.throughput_mbps = fit.throughput_mbps;
    out.per_packet_overhead_ms = fit.per_packet_overhead_ms;
    return out;
}

/// Stochastic uplink sampler. Each packet's overhead is drawn from the
/// channel's log-normal jitter; everything else stays deterministic. One
/// sampler per worker, each with its own seed.
class UplinkSampler {
public:
    UplinkSampler(const ChannelParams& ch, std::uint64_t seed) : channel_(ch), rng_(seed) {
        require_valid(ch);
        if (!ch.jitter) {
            throw config_error(
                "sample_uplink: channel has no jitter configured; use uplink_delay instead");
        }
    }

    double sample(double size_bytes) {
        const std::uint64_t packets = packetize(size_bytes, channel_.packet_payload_bytes);
        double jitter_ms = 0.0;
        const JitterParams& j = *channel_.jitter;
        if (j.sigma == 0.0) {
            jitter_ms = static_cast<double>(packets) * std::exp(j.mu);
        } else {
            std::lognormal_distribution<double> dist(j.mu, j.sigma);
            for (std::uint64_t i = 0; i < packets; ++i) jitter_ms += dist(rng_);
        }
        return serialization_ms(size_bytes, channel_) + jitter_ms + channel_.base_latency_up_ms;
    }

private:
    ChannelParams channel_;
    std::mt19937_64 rng_;
};

inline double sample_uplink(double size_bytes, const ChannelParams& ch, std::uint64_t seed) {
    UplinkSampler sampler(ch, seed);
    return sampler.sample(size_bytes);
}

}  // namespace offsim
