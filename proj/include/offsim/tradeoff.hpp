#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "offsim/common.hpp"
#include "offsim/eval.hpp"
#include "offsim/pipeline.hpp"

namespace offsim {

inline Codec scenario_codec(Scenario s) {
    switch (s) {
        case Scenario::raw: return Codec::none;
        case Scenario::jpeg_h:
        case Scenario::jpeg_m:
        case Scenario::jpeg_l:
        case Scenario::jpeg_vl: return Codec::jpeg;
        default: return Codec::h265;
    }
}

/// Fixture mAP values and per-class APs are rounded to two decimals in the
/// bundled measurement set; their mean can differ from the stated mAP by up
/// to this much before the per-class data is considered inconsistent.
inline constexpr double kMapConsistencyTolerance = 0.02;

/// One strategy plus everything needed to score it: a measured-mAP fixture
/// and/or a detection-level evaluation, and an optional measured delay that
/// overrides the modelled one.
struct StrategyEvalInput {
    Strategy strategy;
    Scenario scenario = Scenario::raw;
    std::optional<double> fixture_map;
    std::map<int, double> fixture_per_class;
    std::optional<double> delay_override_ms;
    std::optional<EvalSummary> detection_summary;
};

enum class MapProvenance { fixture, detections };

/// A strategy scored on both axes: end-to-end delay and detection quality.
struct TradeoffPoint {
    Strategy strategy;
    Scenario scenario = Scenario::raw;
    DelayBreakdown breakdown;
    double delay_ms = 0.0;  // breakdown total, unless overridden by a measurement
    bool delay_overridden = false;
    double map_value = 0.0;
    std::map<int, double> per_class_ap;
    MapProvenance provenance = MapProvenance::fixture;
    std::vector<std::string> notes;
};

/// Deterministic report ordering: platform, then codec, then quality.
inline bool report_order(const TradeoffPoint& a, const TradeoffPoint& b) {
    const auto key = [](const TradeoffPoint& p) {
        return std::make_tuple(static_cast<int>(p.strategy.platform.name),
                               static_cast<int>(scenario_codec(p.scenario)),
                               scenario_quality_rank(p.scenario));
    };
    return key(a) < key(b);
}

/// Scores every strategy. Raw detections take precedence over fixture mAPs;
/// fixture per-class APs are attached only when they are consistent with the
/// point's mAP. Delays come from the pipeline model unless the input carries
/// a measured override.
inline std::vector<TradeoffPoint> evaluate_strategies(const std::vector<StrategyEvalInput>& inputs,
                                                      const CurveSet& curves,
                                                      const CodecTimeModel& codec_times =
                                                          CodecTimeModel::zero()) {
    std::vector<TradeoffPoint> points;
    points.reserve(inputs.size());
    for (const auto& in : inputs) {
        TradeoffPoint p;
        p.strategy = in.strategy;
        p.scenario = in.scenario;
        p.breakdown = end_to_end_delay(in.strategy, curves, codec_times);
        p.delay_ms = p.breakdown.total_ms;
        if (in.delay_override_ms) {
            p.delay_ms = *in.delay_override_ms;
            p.delay_overridden = true;
        }

        if (in.detection_summary) {
            p.map_value = in.detection_summary->map_value;
            p.per_class_ap = in.detection_summary->per_class_ap;
            p.provenance = MapProvenance::detections;
            if (in.fixture_map) {
                p.notes.push_back("fixture mAP ignored in favour of detections");
            }
        } else if (in.fixture_map || !in.fixture_per_class.empty()) {
            p.provenance = MapProvenance::fixture;
            if (in.fixture_map) {
                p.map_value = *in.fixture_map;
            } else {
                double sum = 0.0;
                for (const auto& [cls, ap] : in.fixture_per_class) sum += ap;
                p.map_value = sum / static_cast<double>(in.fixture_per_class.size());
            }
            if (!in.fixture_per_class.empty()) {
                double sum = 0.0;
                for (const auto& [cls, ap] : in.fixture_per_class) sum += ap;
                const double mean = sum / static_cast<double>(in.fixture_per_class.size());
                if (std::abs(mean - p.map_value) <= kMapConsistencyTolerance + 1e-12) {
                    p.per_class_ap = in.fixture_per_class;
                } else {
                    p.notes.push_back(detail::format(
                        "per-class APs (mean %.3f) inconsistent with mAP %.3f; not attached", mean,
                        p.map_value));
                }
            }
        } else {
            throw input_error("strategy " + in.strategy.label() +
                              ": neither detections nor a fixture mAP available");
        }
        if (p.map_value < 0.0 || p.map_value > 1.0) {
            throw input_error("strategy " + in.strategy.label() + ": mAP out of [0,1]");
        }
        points.push_back(std::move(p));
    }
    return points;
}

/// Non-strict bi-objective dominance with one strict requirement: q dominates
/// p when q is no slower and no worse, and strictly better on one axis.
inline bool dominates(const TradeoffPoint& q, const TradeoffPoint& p) {
    return q.delay_ms <= p.delay_ms && q.map_value >= p.map_value &&
           (q.delay_ms < p.delay_ms || q.map_value > p.map_value);
}

/// Keeps every point no other point dominates. Duplicates survive together.
/// Output is sorted by delay ascending (ties: higher mAP first, then label).
inline std::vector<TradeoffPoint> pareto_frontier(const std::vector<TradeoffPoint>& points) {
    std::vector<std::size_t> order(points.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (points[a].delay_ms != points[b].delay_ms) return points[a].delay_ms < points[b].delay_ms;
        if (points[a].map_value != points[b].map_value) return points[a].map_value > points[b].map_value;
        return points[a].strategy.label() < points[b].strategy.label();
    });

    std::vector<TradeoffPoint> frontier;
    double best_earlier_map = -1.0;  // best mAP among strictly lower delays
    std::size_t i = 0;
    while (i < order.size()) {
        // One group of equal delay at a time.
        std::size_t j = i;
        double group_best = -1.0;
        while (j < order.size() && points[order[j]].delay_ms == points[order[i]].delay_ms) {
            group_best = std::max(group_best, points[order[j]].map_value);
            ++j;
        }
        for (std::size_t k = i; k < j; ++k) {
            const TradeoffPoint& p = points[order[k]];
            if (p.map_value == group_best && p.map_value > best_earlier_map) {
                frontier.push_back(p);
            }
        }
        best_earlier_map = std::max(best_earlier_map, group_best);
        i = j;
    }
    return frontier;
}

/// Feasibility window plus tie-breaking rule for picking one strategy.
struct SelectionPolicy {
    double budget_ms = 50.0;
    double min_map = 0.10;

    bool feasible(const TradeoffPoint& p) const {
        return p.delay_ms <= budget_ms && p.map_value >= min_map;
    }
};

inline void require_valid(const SelectionPolicy& policy) {
    if (!(policy.budget_ms > 0.0)) throw config_error("selection policy: budget must be positive");
    if (policy.min_map < 0.0 || policy.min_map > 1.0) {
        throw config_error("selection policy: min mAP must be in [0,1]");
    }
}

/// Highest-mAP feasible point; ties go to the lower delay, then to the label.
inline std::optional<TradeoffPoint> select_best(const std::vector<TradeoffPoint>& points,
                                                const SelectionPolicy& policy) {
    require_valid(policy);
    const TradeoffPoint* best = nullptr;
    for (const auto& p : points) {
        if (!policy.feasible(p)) continue;
        if (!best || p.map_value > best->map_value ||
            (p.map_value == best->map_value && p.delay_ms < best->delay_ms) ||
            (p.map_value == best->map_value && p.delay_ms == best->delay_ms &&
             p.strategy.label() < best->strategy.label())) {
            best = &p;
        }
    }
    if (!best) return std::nullopt;
    return *best;
}

/// Percent change of `ap` against `base`, truncated toward zero to whole
/// percent, rendered with an explicit sign: 0.81 vs 0.30 -> "+170%".
inline std::string format_delta(double ap, double base) {
    if (!(base > 0.0)) return "n/a";
    const double pct = (ap / base - 1.0) * 100.0;
    // Nudge before truncation so 169.999999999 (a float artifact) stays 170.
    const double nudged = pct + (pct >= 0.0 ? 1e-7 : -1e-7);
    const long long truncated = static_cast<long long>(nudged);
    return detail::format("%+lld%%", truncated);
}

/// Per-class AP for every (platform, scenario) combination, used for the
/// per-class comparison table against the local baseline.
using ApTable = std::map<std::pair<Platform, Scenario>, std::map<int, double>>;

namespace report {

inline std::string csv_points(const std::vector<TradeoffPoint>& points,
                              const std::vector<TradeoffPoint>& frontier,
                              const SelectionPolicy& policy) {
    std::set<std::string> on_frontier;
    for (const auto& p : frontier) on_frontier.insert(p.strategy.label());

    std::vector<TradeoffPoint> rows = points;
    std::sort(rows.begin(), rows.end(), report_order);

    std::string out =
        "platform,scenario,payload_bytes,payload_human,compress_ms,uplink_ms,decompress_ms,"
        "inference_ms,downlink_ms,total_ms,delay_ms,delay_source,delivery_probability,map,"
        "map_source,on_frontier,feasible\n";
    for (const auto& p : rows) {
        const auto& b = p.breakdown;
        out += to_string(p.strategy.platform.name) + "," + to_string(p.scenario) + ",";
        out += detail::format("%.0f", b.payload_bytes) + "," + format_size(b.payload_bytes) + ",";
        out += format_ms(b.compress_ms) + "," + format_ms(b.uplink_ms) + "," +
               format_ms(b.decompress_ms) + "," + format_ms(b.inference_ms) + "," +
               format_ms(b.downlink_ms) + "," + format_ms(b.total_ms) + ",";
        out += format_ms(p.delay_ms) + ",";
        out += p.delay_overridden ? "measured," : "model,";
        out += detail::format("%.5f", b.delivery_probability) + ",";
        out += detail::format("%.4f", p.map_value) + ",";
        out += p.provenance == MapProvenance::detections ? "detections," : "fixture,";
        out += on_frontier.count(p.strategy.label()) ? "yes," : "no,";
        out += policy.feasible(p) ? "yes" : "no";
        out += "\n";
    }
    return out;
}

inline std::string csv_frontier(const std::vector<TradeoffPoint>& frontier) {
    std::string out = "platform,scenario,delay_ms,map\n";
    for (const auto& p : frontier) {
        out += to_string(p.strategy.platform.name) + "," + to_string(p.scenario) + "," +
               format_ms(p.delay_ms) + "," + detail::format("%.4f", p.map_value) + "\n";
    }
    return out;
}

/// Plot-ready (delay, mAP) pairs grouped into one series per platform/codec.
inline std::string csv_plot_data(const std::vector<TradeoffPoint>& points) {
    std::vector<TradeoffPoint> rows = points;
    std::sort(rows.begin(), rows.end(), report_order);
    std::string out = "series,platform,codec,scenario,delay_ms,map\n";
    for (const auto& p : rows) {
        const std::string codec = to_string(scenario_codec(p.scenario));
        out += to_string(p.strategy.platform.name) + "-" + codec + "," +
               to_string(p.strategy.platform.name) + "," + codec + "," + to_string(p.scenario) +
               "," + format_ms(p.delay_ms) + "," + detail::format("%.4f", p.map_value) + "\n";
    }
    return out;
}

inline std::string selection_text(const std::optional<TradeoffPoint>& selection,
                                  const SelectionPolicy& policy) {
    std::string out = detail::format("budget_ms=%s min_map=%.2f\n", format_ms(policy.budget_ms).c_str(),
                                     policy.min_map);
    if (!selection) {
        out += "no feasible strategy\n";
        return out;
    }
    out += "selected=" + selection->strategy.label() +
           detail::format(" map=%.4f delay_ms=%s\n", selection->map_value,
                          format_ms(selection->delay_ms).c_str());
    return out;
}

/// Per-class AP table with percent deltas against the local baseline.
inline std::string csv_per_class(const ApTable& table,
                                 const std::map<int, std::string>& class_names,
                                 Platform baseline_platform = Platform::local,
                                 Scenario baseline_scenario = Scenario::raw) {
    const auto base_it = table.find({baseline_platform, baseline_scenario});
    if (base_it == table.end()) {
        throw input_error("per-class report: baseline entry missing from AP table");
    }
    const auto& base = base_it->second;

    std::set<int> classes;
    for (const auto& [key, row] : table) {
        for (const auto& [cls, ap] : row) classes.insert(cls);
    }

    std::string out = "platform,scenario";
    for (int cls : classes) {
        const auto it = class_names.find(cls);
        const std::string name = it == class_names.end() ? "class_" + std::to_string(cls) : it->second;
        out += "," + name + "_ap," + name + "_delta";
    }
    out += "\n";

    std::vector<std::pair<Platform, Scenario>> keys;
    for (const auto& [key, row] : table) keys.push_back(key);
    std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
        const auto rank = [](const std::pair<Platform, Scenario>& k) {
            return std::make_tuple(static_cast<int>(k.first),
                                   static_cast<int>(scenario_codec(k.second)),
                                   scenario_quality_rank(k.second));
        };
        return rank(a) < rank(b);
    });

    for (const auto& key : keys) {
        const auto& row = table.at(key);
        out += to_string(key.first) + "," + to_string(key.second);
        for (int cls : classes) {
            const auto ap_it = row.find(cls);
            const auto base_ap_it = base.find(cls);
            if (ap_it == row.end() || base_ap_it == base.end()) {
                out += ",,";
                continue;
            }
            out += detail::format(",%.2f,", ap_it->second) +
                   format_delta(ap_it->second, base_ap_it->second);
        }
        out += "\n";
    }
    return out;
}

}  // namespace report

}  // namespace offsim
