#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "offsim/common.hpp"

namespace offsim {

enum class Codec { none, jpeg, h265 };

inline std::string to_string(Codec c) {
    switch (c) {
        case Codec::none: return "none";
        case Codec::jpeg: return "jpeg";
        case Codec::h265: return "h265";
    }
    return "?";
}

inline Codec codec_from_string(const std::string& s) {
    if (s == "none" || s == "NONE" || s == "raw") return Codec::none;
    if (s == "jpeg" || s == "JPEG") return Codec::jpeg;
    if (s == "h265" || s == "H265" || s == "H.265") return Codec::h265;
    throw input_error("unknown codec '" + s + "'");
}

/// The named compression scenarios, from high quality to very low, plus RAW.
enum class Scenario {
    raw,
    jpeg_h,
    jpeg_m,
    jpeg_l,
    jpeg_vl,
    h265_h,
    h265_m,
    h265_l,
    h265_vl,
};

inline const std::vector<std::pair<Scenario, const char*>>& scenario_names() {
    static const std::vector<std::pair<Scenario, const char*>> names = {
        {Scenario::raw, "RAW"},       {Scenario::jpeg_h, "JPEG-H"},  {Scenario::jpeg_m, "JPEG-M"},
        {Scenario::jpeg_l, "JPEG-L"}, {Scenario::jpeg_vl, "JPEG-VL"}, {Scenario::h265_h, "H265-H"},
        {Scenario::h265_m, "H265-M"}, {Scenario::h265_l, "H265-L"},  {Scenario::h265_vl, "H265-VL"},
    };
    return names;
}

inline std::string to_string(Scenario s) {
    for (const auto& [value, name] : scenario_names()) {
        if (value == s) return name;
    }
    return "?";
}

inline Scenario scenario_from_string(const std::string& s) {
    for (const auto& [value, name] : scenario_names()) {
        if (s == name) return value;
    }
    if (s == "H.265-H") return Scenario::h265_h;
    if (s == "H.265-M") return Scenario::h265_m;
    if (s == "H.265-L") return Scenario::h265_l;
    if (s == "H.265-VL") return Scenario::h265_vl;
    throw input_error("unknown scenario label '" + s + "'");
}

/// Quality rank used for report ordering: H < M < L < VL; RAW ranks first.
inline int scenario_quality_rank(Scenario s) {
    switch (s) {
        case Scenario::raw: return -1;
        case Scenario::jpeg_h:
        case Scenario::h265_h: return 0;
        case Scenario::jpeg_m:
        case Scenario::h265_m: return 1;
        case Scenario::jpeg_l:
        case Scenario::h265_l: return 2;
        case Scenario::jpeg_vl:
        case Scenario::h265_vl: return 3;
    }
    return 9;
}

/// A codec with its quality parameter and the frame resolution it applies to.
struct CompressionSetting {
    Codec codec = Codec::none;
    int quality = 0;  // JPEG Q in [0,100], H.265 CRF in [0,51]; unused for none
    double width = 0.0;
    double height = 0.0;

    double pixels() const { return width * height; }
    bool quality_in_range() const {
        switch (codec) {
            case Codec::none: return true;
            case Codec::jpeg: return quality >= 0 && quality <= 100;
            case Codec::h265: return quality >= 0 && quality <= 51;
        }
        return false;
    }
};

inline void require_valid(const CompressionSetting& s) {
    if (!(s.width > 0.0 && s.height > 0.0)) {
        throw config_error("compression setting: resolution must be positive");
    }
    if (!s.quality_in_range()) {
        throw config_error("compression setting: quality " + std::to_string(s.quality) +
                           " out of range for codec " + to_string(s.codec));
    }
}

/// Maps a scenario label to its codec and quality parameter.
inline CompressionSetting named_scenario(Scenario label, double width, double height) {
    CompressionSetting s;
    s.width = width;
    s.height = height;
    switch (label) {
        case Scenario::raw: s.codec = Codec::none; s.quality = 0; break;
        case Scenario::jpeg_h: s.codec = Codec::jpeg; s.quality = 100; break;
        case Scenario::jpeg_m: s.codec = Codec::jpeg; s.quality = 80; break;
        case Scenario::jpeg_l: s.codec = Codec::jpeg; s.quality = 30; break;
        case Scenario::jpeg_vl: s.codec = Codec::jpeg; s.quality = 10; break;
        case Scenario::h265_h: s.codec = Codec::h265; s.quality = 0; break;
        case Scenario::h265_m: s.codec = Codec::h265; s.quality = 24; break;
        case Scenario::h265_l: s.codec = Codec::h265; s.quality = 30; break;
        case Scenario::h265_vl: s.codec = Codec::h265; s.quality = 51; break;
    }
    return s;
}

/// Measured mean payload size (and optionally codec times) per quality level,
/// for one codec at one resolution. Sizes must be monotone in the quality
/// parameter: nondecreasing in JPEG Q, nonincreasing in H.265 CRF.
struct CodecCurve {
    struct Sample {
        int quality = 0;
        double mean_bytes = 0.0;
        std::optional<double> compress_ms;
        std::optional<double> decompress_ms;
    };

    Codec codec = Codec::none;
    double width = 0.0;
    double height = 0.0;
    std::vector<Sample> samples;  // sorted by quality ascending

    bool has_times() const {
        if (samples.empty()) return false;
        for (const auto& s : samples) {
            if (!s.compress_ms || !s.decompress_ms) return false;
        }
        return true;
    }

    bool monotone() const {
        for (std::size_t i = 1; i < samples.size(); ++i) {
            const double prev = samples[i - 1].mean_bytes;
            const double cur = samples[i].mean_bytes;
            if (codec == Codec::jpeg && cur < prev) return false;
            if (codec == Codec::h265 && cur > prev) return false;
        }
        return true;
    }
};

inline void require_valid(const CodecCurve& curve) {
    if (curve.codec == Codec::none) throw config_error("codec curve: codec 'none' needs no curve");
    if (curve.samples.size() < 2) throw config_error("codec curve: needs at least 2 sample points");
    for (std::size_t i = 1; i < curve.samples.size(); ++i) {
        if (curve.samples[i].quality <= curve.samples[i - 1].quality) {
            throw config_error("codec curve: samples must have strictly increasing quality");
        }
    }
    if (!curve.monotone()) {
        throw config_error("codec curve: sizes violate the codec's monotonicity");
    }
}

namespace detail {

// Weighted pool-adjacent-violators pass enforcing nondecreasing values.
inline void isotonic_nondecreasing(std::vector<double>& values, std::vector<double>& weights) {
    std::vector<double> v;
    std::vector<double> w;
    std::vector<int> span;
    for (std::size_t i = 0; i < values.size(); ++i) {
        v.push_back(values[i]);
        w.push_back(weights[i]);
        span.push_back(1);
        while (v.size() >= 2 && v[v.size() - 2] > v.back()) {
            const double merged_w = w[w.size() - 2] + w.back();
            const double merged_v = (v[v.size() - 2] * w[w.size() - 2] + v.back() * w.back()) / merged_w;
            const int merged_span = span[span.size() - 2] + span.back();
            v.pop_back(); w.pop_back(); span.pop_back();
            v.back() = merged_v;
            w.back() = merged_w;
            span.back() = merged_span;
        }
    }
    std::size_t out = 0;
    for (std::size_t block = 0; block < v.size(); ++block) {
        for (int k = 0; k < span[block]; ++k) values[out++] = v[block];
    }
}

}  // namespace detail

/// One raw measurement: quality level, observed payload bytes, optional times.
struct MeasurementRecord {
    int quality = 0;
    double bytes = 0.0;
    std::optional<double> compress_ms;
    std::optional<double> decompress_ms;
};

struct IngestReport {
    std::vector<std::string> monotonicity_violations;  // human-readable notes
};

/// Aggregates raw measurements into a curve: per-quality arithmetic means,
/// then an isotonic repair if the means violate the codec's monotonicity.
/// Violations are surfaced through the optional report.
inline CodecCurve ingest_measurements(Codec codec, double width, double height,
                                      const std::vector<MeasurementRecord>& records,
                                      IngestReport* report = nullptr) {
    if (codec == Codec::none) throw input_error("ingest_measurements: codec 'none' has no curve");
    struct Acc {
        double bytes_sum = 0.0;
        double compress_sum = 0.0;
        double decompress_sum = 0.0;
        int count = 0;
        int timed_count = 0;
    };
    std::map<int, Acc> by_quality;
    for (const auto& r : records) {
        if (r.bytes < 0.0) throw input_error("ingest_measurements: negative size");
        auto& acc = by_quality[r.quality];
        acc.bytes_sum += r.bytes;
        acc.count++;
        if (r.compress_ms && r.decompress_ms) {
            acc.compress_sum += *r.compress_ms;
            acc.decompress_sum += *r.decompress_ms;
            acc.timed_count++;
        } else if (r.compress_ms || r.decompress_ms) {
            throw input_error("ingest_measurements: record has only one of the two codec times");
        }
    }
    if (by_quality.size() < 2) {
        throw input_error("ingest_measurements: need at least 2 distinct quality levels, got " +
                          std::to_string(by_quality.size()));
    }

    CodecCurve curve;
    curve.codec = codec;
    curve.width = width;
    curve.height = height;
    bool all_timed = true;
    for (const auto& [quality, acc] : by_quality) {
        CodecCurve::Sample s;
        s.quality = quality;
        s.mean_bytes = acc.bytes_sum / acc.count;
        if (acc.timed_count == acc.count) {
            s.compress_ms = acc.compress_sum / acc.count;
            s.decompress_ms = acc.decompress_sum / acc.count;
        } else {
            all_timed = false;
        }
        curve.samples.push_back(s);
    }
    if (!all_timed) {
        for (auto& s : curve.samples) {
            s.compress_ms.reset();
            s.decompress_ms.reset();
        }
    }

    bool all_identical = true;
    for (const auto& s : curve.samples) {
        if (s.mean_bytes != curve.samples.front().mean_bytes) all_identical = false;
    }
    if (all_identical) {
        throw input_error("ingest_measurements: all mean sizes identical, curve is degenerate");
    }

    if (!curve.monotone()) {
        std::vector<double> values;
        std::vector<double> weights;
        for (const auto& s : curve.samples) {
            values.push_back(s.mean_bytes);
            weights.push_back(static_cast<double>(by_quality.at(s.quality).count));
        }
        if (report) {
            for (std::size_t i = 1; i < curve.samples.size(); ++i) {
                const double prev = curve.samples[i - 1].mean_bytes;
                const double cur = curve.samples[i].mean_bytes;
                const bool bad = codec == Codec::jpeg ? cur < prev : cur > prev;
                if (bad) {
                    report->monotonicity_violations.push_back(detail::format(
                        "%s size at quality %d (%.1f B) breaks monotonicity against quality %d (%.1f B)",
                        to_string(codec).c_str(), curve.samples[i].quality, cur,
                        curve.samples[i - 1].quality, prev));
                }
            }
        }
        // H.265 curves decrease in CRF; repair on the reversed axis.
        if (codec == Codec::h265) {
            std::reverse(values.begin(), values.end());
            std::reverse(weights.begin(), weights.end());
        }
        detail::isotonic_nondecreasing(values, weights);
        if (codec == Codec::h265) std::reverse(values.begin(), values.end());
        for (std::size_t i = 0; i < values.size(); ++i) curve.samples[i].mean_bytes = values[i];
    }
    return curve;
}

inline void require_curve_matches(const CompressionSetting& setting, const CodecCurve& curve) {
    if (curve.codec != setting.codec || curve.width != setting.width ||
        curve.height != setting.height) {
        throw config_error("codec curve does not match setting (codec/resolution mismatch)");
    }
}

/// Expected payload size in bytes for one frame under the given setting.
/// RAW frames are flat 24-bit RGB (W*H*3); compressed sizes come from the
/// curve, exactly at sampled qualities and linearly interpolated between
/// them. Queries outside the sampled span are refused.
inline double expected_size(const CompressionSetting& setting, const CodecCurve& curve) {
    require_valid(setting);
    if (setting.codec == Codec::none) return setting.width * setting.height * 3.0;
    require_valid(curve);
    require_curve_matches(setting, curve);

    const auto& samples = curve.samples;
    if (setting.quality < samples.front().quality || setting.quality > samples.back().quality) {
        throw input_error(detail::format(
            "expected_size: quality %d outside sampled span [%d, %d]; refusing to extrapolate",
            setting.quality, samples.front().quality, samples.back().quality));
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].quality == setting.quality) return samples[i].mean_bytes;
        if (samples[i].quality > setting.quality) {
            const auto& lo = samples[i - 1];
            const auto& hi = samples[i];
            const double t = (setting.quality - lo.quality) /
                             static_cast<double>(hi.quality - lo.quality);
            return lo.mean_bytes + t * (hi.mean_bytes - lo.mean_bytes);
        }
    }
    return samples.back().mean_bytes;  // unreachable
}

enum class CodecRole { compress, decompress };

/// Fallback codec times used when a curve carries no timing samples.
/// Values are per frame at the reference resolution and scale with the
/// pixel count when enabled. All of it is configuration-overridable.
struct CodecTimeModel {
    double jpeg_compress_ms = 2.0;
    double jpeg_decompress_ms = 1.0;
    double h265_compress_ms = 5.0;
    double h265_decompress_ms = 2.0;
    double reference_pixels = 640.0 * 640.0;
    bool scale_with_pixels = true;

    static CodecTimeModel library_default() { return CodecTimeModel{}; }
    static CodecTimeModel zero() {
        CodecTimeModel m;
        m.jpeg_compress_ms = m.jpeg_decompress_ms = 0.0;
        m.h265_compress_ms = m.h265_decompress_ms = 0.0;
        return m;
    }

    double lookup(Codec codec, CodecRole role, double pixels) const {
        double base = 0.0;
        switch (codec) {
            case Codec::none: return 0.0;
            case Codec::jpeg:
                base = role == CodecRole::compress ? jpeg_compress_ms : jpeg_decompress_ms;
                break;
            case Codec::h265:
                base = role == CodecRole::compress ? h265_compress_ms : h265_decompress_ms;
                break;
        }
        return scale_with_pixels ? base * pixels / reference_pixels : base;
    }
};

/// Per-frame codec time in milliseconds: interpolated from the curve's
/// timing samples when it has them, otherwise from the fallback model.
inline double codec_time(const CompressionSetting& setting, CodecRole role,
                         const CodecCurve* curve, const CodecTimeModel& fallback) {
    require_valid(setting);
    if (setting.codec == Codec::none) return 0.0;

    if (curve && curve->has_times()) {
        require_curve_matches(setting, *curve);
        const auto& samples = curve->samples;
        if (setting.quality < samples.front().quality ||
            setting.quality > samples.back().quality) {
            throw input_error(detail::format(
                "codec_time: quality %d outside sampled span [%d, %d]", setting.quality,
                samples.front().quality, samples.back().quality));
        }
        auto pick = [role](const CodecCurve::Sample& s) {
            return role == CodecRole::compress ? *s.compress_ms : *s.decompress_ms;
        };
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (samples[i].quality == setting.quality) return pick(samples[i]);
            if (samples[i].quality > setting.quality) {
                const auto& lo = samples[i - 1];
                const auto& hi = samples[i];
                const double t = (setting.quality - lo.quality) /
                                 static_cast<double>(hi.quality - lo.quality);
                return pick(lo) + t * (pick(hi) - pick(lo));
            }
        }
    }
    return fallback.lookup(setting.codec, role, setting.pixels());
}

/// Immutable lookup of curves keyed by codec and resolution.
class CurveSet {
public:
    CurveSet() = default;

    void add(CodecCurve curve) {
        require_valid(curve);
        const Key key{curve.codec, curve.width, curve.height};
        curves_[key] = std::move(curve);
    }

    const CodecCurve* find(Codec codec, double width, double height) const {
        const auto it = curves_.find(Key{codec, width, height});
        return it == curves_.end() ? nullptr : &it->second;
    }

    const CodecCurve& require(const CompressionSetting& setting) const {
        const CodecCurve* curve = find(setting.codec, setting.width, setting.height);
        if (!curve) {
            throw config_error(detail::format("no codec curve for %s at %.0fx%.0f",
                                              to_string(setting.codec).c_str(), setting.width,
                                              setting.height));
        }
        return *curve;
    }

private:
    using Key = std::tuple<Codec, double, double>;
    std::map<Key, CodecCurve> curves_;
};

}  // namespace offsim
