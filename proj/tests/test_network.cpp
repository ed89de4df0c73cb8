#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "offsim/config.hpp"
#include "offsim/network.hpp"

#include "testutil.hpp"

using namespace offsim;

// ---------------------------------------------------------------------------
// packetize / delivery_probability
// ---------------------------------------------------------------------------

TEST_CASE("packet counts for reference frame sizes") {
    REQUIRE(packetize(1228800.0, 4096.0) == 300);
    REQUIRE(packetize(4915200.0, 4096.0) == 1200);
    REQUIRE(packetize(1.0, 4096.0) == 1);
    REQUIRE(packetize(0.0, 4096.0) == 0);
    REQUIRE(packetize(4096.0, 4096.0) == 1);
    REQUIRE(packetize(4097.0, 4096.0) == 2);
    REQUIRE_THROWS_AS(packetize(-1.0, 4096.0), input_error);
    REQUIRE_THROWS_AS(packetize(1.0, 0.0), input_error);
}

TEST_CASE("delivery probability matches the closed form") {
    REQUIRE(delivery_probability(0, 1e-4) == 1.0);
    REQUIRE_THAT(delivery_probability(300, 1e-4),
                 Catch::Matchers::WithinAbs(0.97045, 1e-5));
    REQUIRE_THAT(delivery_probability(1200, 1e-4),
                 Catch::Matchers::WithinAbs(0.88692, 1e-5));
}

TEST_CASE("delivery probability strictly decreases with packet count") {
    double prev = delivery_probability(0, 1e-3);
    for (std::uint64_t n = 1; n <= 50; ++n) {
        const double p = delivery_probability(n, 1e-3);
        REQUIRE(p < prev);
        prev = p;
    }
}

// ---------------------------------------------------------------------------
// uplink_delay / downlink_delay
// ---------------------------------------------------------------------------

TEST_CASE("uplink of a raw edge frame") {
    ChannelParams ch = default_edge_channel();
    const auto est = uplink_delay(1228800.0, ch);
    REQUIRE(est.packet_count == 300);
    REQUIRE_THAT(est.serialization_ms, Catch::Matchers::WithinAbs(86.28, 0.005));
    REQUIRE(est.overhead_ms == 0.0);
    REQUIRE(est.base_ms == 0.43);
    REQUIRE_THAT(est.total_ms, Catch::Matchers::WithinAbs(86.71, 0.005));
    REQUIRE_THAT(est.delivery_probability, Catch::Matchers::WithinAbs(0.97045, 1e-5));
}

TEST_CASE("zero bytes cost only the base latency") {
    const auto est = uplink_delay(0.0, default_edge_channel());
    REQUIRE(est.total_ms == 0.43);
    REQUIRE(est.packet_count == 0);
    REQUIRE(est.delivery_probability == 1.0);
}

TEST_CASE("single packet with per-packet overhead") {
    ChannelParams ch = default_edge_channel();
    ch.per_packet_overhead_ms = 0.1;
    const auto est = uplink_delay(4096.0, ch);
    REQUIRE_THAT(est.serialization_ms, Catch::Matchers::WithinAbs(0.2876, 5e-5));
    REQUIRE(est.overhead_ms == 0.1);
    REQUIRE_THAT(est.total_ms, Catch::Matchers::WithinAbs(0.2876 + 0.1 + 0.43, 5e-5));
}

TEST_CASE("uplink is monotone in size and serialization scales linearly") {
    auto rng = testutil::make_rng(51);
    std::uniform_real_distribution<double> size(0.0, 2e6);
    const ChannelParams ch = default_cloud_channel();
    for (int i = 0; i < 300; ++i) {
        const double a = size(rng);
        const double b = size(rng);
        const auto smaller = uplink_delay(std::min(a, b), ch);
        const auto larger = uplink_delay(std::max(a, b), ch);
        REQUIRE(smaller.total_ms <= larger.total_ms);

        const auto single = uplink_delay(a, ch);
        const auto doubled = uplink_delay(2.0 * a, ch);
        REQUIRE(doubled.serialization_ms == 2.0 * single.serialization_ms);
    }
}

TEST_CASE("downlink: results fitting one packet cost the base latency") {
    REQUIRE(downlink_delay(512.0, default_edge_channel()) == 0.43);
    REQUIRE(downlink_delay(512.0, default_cloud_channel()) == 0.45);
}

TEST_CASE("oversized results fall back to the packetized formula") {
    ChannelParams ch = default_edge_channel();
    ch.per_packet_overhead_ms = 0.1;
    const double d = downlink_delay(8192.0, ch);
    const double serialization = 8192.0 * 8.0 / (113.94 * 1000.0);
    REQUIRE_THAT(d, Catch::Matchers::WithinAbs(serialization + 2 * 0.1 + 0.43, 1e-12));
}

TEST_CASE("invalid channels are rejected") {
    ChannelParams ch;  // throughput 0
    REQUIRE_THROWS_AS(uplink_delay(100.0, ch), config_error);
    ch = default_edge_channel();
    ch.loss_ratio = 1.0;
    REQUIRE_THROWS_AS(uplink_delay(100.0, ch), config_error);
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

TEST_CASE("two-parameter fit recovers synthetic parameters exactly") {
    auto rng = testutil::make_rng(52);
    std::uniform_real_distribution<double> tp(20.0, 200.0);
    std::uniform_real_distribution<double> ovh(0.01, 0.5);
    std::uniform_real_distribution<double> size(1000.0, 5e6);
    for (int round = 0; round < 100; ++round) {
        ChannelParams truth = default_edge_channel();
        truth.throughput_mbps = tp(rng);
        truth.per_packet_overhead_ms = ovh(rng);

        std::vector<CalibrationObservation> obs;
        for (int i = 0; i < 5; ++i) {
            const double s = size(rng);
            CalibrationObservation o;
            o.size_bytes = s;
            o.known_non_network_ms = 25.0;
            o.measured_total_ms = o.known_non_network_ms + uplink_delay(s, truth).total_ms -
                                  truth.base_latency_up_ms;
            obs.push_back(o);
        }
        const auto fit = calibrate(obs, default_edge_channel(), CalibrationMode::fit_both);
        REQUIRE_THAT(fit.throughput_mbps, Catch::Matchers::WithinRel(truth.throughput_mbps, 1e-6));
        REQUIRE_THAT(fit.per_packet_overhead_ms,
                     Catch::Matchers::WithinRel(truth.per_packet_overhead_ms, 1e-6));
        REQUIRE_FALSE(fit.overhead_clamped);
        for (double r : fit.fit_residuals_ms) REQUIRE(std::abs(r) < 1e-5);
    }
}

TEST_CASE("reference cloud rows yield roughly 0.12 ms per packet at nominal throughput") {
    // Known non-network time per row: derived inference plus both base latencies.
    const double known = derived_inference_ms(Platform::cloud) + 0.45 + 0.45;
    std::vector<CalibrationObservation> obs = {
        {4915200.0, 521.70, known},
        {690.0, 27.78, known},
    };
    const auto fit = calibrate(obs, default_cloud_channel(), CalibrationMode::fit_overhead_only);
    REQUIRE(fit.throughput_mbps == 113.94);
    REQUIRE_THAT(fit.per_packet_overhead_ms, Catch::Matchers::WithinAbs(0.124, 1e-3));
    REQUIRE_THAT(fit.per_packet_overhead_ms, Catch::Matchers::WithinAbs(0.1240503, 1e-6));
}

TEST_CASE("reference edge rows reconcile with pure serialization") {
    const double known = derived_inference_ms(Platform::edge) + 0.43 + 0.43;
    std::vector<CalibrationObservation> obs = {
        {1228800.0, 123.20, known},
        {260.0, 37.47, known},
    };
    const auto fit = calibrate(obs, default_edge_channel(), CalibrationMode::fit_overhead_only);
    REQUIRE(fit.per_packet_overhead_ms == 0.0);
    REQUIRE(fit.overhead_clamped);  // tiny negative fit, clamped to the model's domain
}

TEST_CASE("a single observation is an error") {
    REQUIRE_THROWS_AS(calibrate({{1000.0, 50.0, 10.0}}, default_edge_channel()), input_error);
}

TEST_CASE("identical sizes are rank deficient") {
    std::vector<CalibrationObservation> obs = {{4096.0, 50.0, 10.0}, {4096.0, 51.0, 10.0}};
    REQUIRE_THROWS_AS(calibrate(obs, default_edge_channel(), CalibrationMode::fit_both),
                      input_error);
    REQUIRE_THROWS_AS(calibrate(obs, default_edge_channel(), CalibrationMode::fit_overhead_only),
                      input_error);
}

TEST_CASE("proportional design is rank deficient for the two-parameter fit") {
    // Exact payload multiples: packets stay proportional to bits.
    std::vector<CalibrationObservation> obs = {{4096.0, 10.0, 0.0}, {8192.0, 20.0, 0.0}};
    REQUIRE_THROWS_AS(calibrate(obs, default_edge_channel(), CalibrationMode::fit_both),
                      input_error);
}

TEST_CASE("throughput-only mode fits the serialization slope") {
    ChannelParams truth = default_edge_channel();
    truth.throughput_mbps = 80.0;
    std::vector<CalibrationObservation> obs;
    for (double s : {1e5, 1e6}) {
        obs.push_back({s, uplink_delay(s, truth).total_ms - truth.base_latency_up_ms, 0.0});
    }
    const auto fit = calibrate(obs, default_edge_channel(), CalibrationMode::fit_throughput_only);
    REQUIRE_THAT(fit.throughput_mbps, Catch::Matchers::WithinRel(80.0, 1e-9));
    REQUIRE(fit.per_packet_overhead_ms == 0.0);
}

TEST_CASE("a fit implying non-positive throughput is an inconsistency") {
    // Measured totals below the known non-network time force a negative slope.
    std::vector<CalibrationObservation> obs = {{1e6, 5.0, 50.0}, {2e6, 6.0, 50.0}};
    REQUIRE_THROWS_AS(calibrate(obs, default_edge_channel(), CalibrationMode::fit_throughput_only),
                      consistency_error);
}

// ---------------------------------------------------------------------------
// sample_uplink
// ---------------------------------------------------------------------------

TEST_CASE("sampling without jitter is an error pointing at the deterministic API") {
    REQUIRE_THROWS_WITH(sample_uplink(4096.0, default_edge_channel(), 1),
                        Catch::Matchers::ContainsSubstring("uplink_delay"));
}

TEST_CASE("zero sigma reproduces the deterministic value") {
    ChannelParams ch = default_edge_channel();
    ch.per_packet_overhead_ms = 0.25;
    ch.jitter = JitterParams{std::log(0.25), 0.0};
    const double sampled = sample_uplink(40960.0, ch, 99);
    const double deterministic = uplink_delay(40960.0, ch).total_ms;
    REQUIRE_THAT(sampled, Catch::Matchers::WithinAbs(deterministic, 1e-9));
}

TEST_CASE("a fixed seed reproduces the identical sequence") {
    ChannelParams ch = default_edge_channel();
    ch.jitter = JitterParams{std::log(0.2), 0.5};
    UplinkSampler a(ch, 1234);
    UplinkSampler b(ch, 1234);
    for (int i = 0; i < 100; ++i) {
        REQUIRE(a.sample(123456.0) == b.sample(123456.0));
    }
    UplinkSampler c(ch, 4321);
    bool any_different = false;
    UplinkSampler a2(ch, 1234);
    for (int i = 0; i < 100; ++i) {
        if (a2.sample(123456.0) != c.sample(123456.0)) any_different = true;
    }
    REQUIRE(any_different);
}

TEST_CASE("sampled mean converges to the deterministic uplink within 1%") {
    ChannelParams ch = default_edge_channel();
    ch.per_packet_overhead_ms = 0.2;
    const double sigma = 0.4;
    // Mean of lognormal(mu, sigma) is exp(mu + sigma^2/2); pick mu so the
    // per-packet mean equals the deterministic overhead.
    ch.jitter = JitterParams{std::log(0.2) - sigma * sigma / 2.0, sigma};

    const double deterministic = uplink_delay(409600.0, ch).total_ms;
    UplinkSampler sampler(ch, 7);
    double sum = 0.0;
    const int n = 100000 / 100;  // 100 packets per sample; 1e5 packet draws total
    for (int i = 0; i < n; ++i) sum += sampler.sample(409600.0);
    const double mean = sum / n;
    REQUIRE_THAT(mean, Catch::Matchers::WithinRel(deterministic, 0.01));
}
