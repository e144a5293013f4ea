#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "trailsim/isi.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

using namespace trailsim;

namespace {

// Relative closeness; doctest's Approx adds an absolute scale of 1.0 which
// makes it useless for the tiny error-rate magnitudes tested here.
bool rel_close(double a, double b, double tol) {
    if (a == b) return true;
    const double denom = std::max(std::abs(a), std::abs(b));
    return std::abs(a - b) <= tol * denom;
}

const Scenario& default_scenario() {
    static const Scenario sc = [] {
        SystemConfig cfg;
        return prepare_scenario(cfg, cfg.analysis.led_index);
    }();
    return sc;
}

const ResponseMatrix& default_matrix() {
    static const ResponseMatrix m = compute_response_matrix(default_scenario());
    return m;
}

// Far-range scenario with the wider mounting radius used by the sweep tests.
const Scenario& far_scenario() {
    static const Scenario sc = [] {
        SystemConfig cfg;
        cfg.analysis.led_index = 3;
        cfg.camera.exposure_target = 1.2;
        cfg.channel.distance = 46.0;
        return prepare_scenario(cfg, 3);
    }();
    return sc;
}

int circular_distance(int a, int b, int n) {
    const int d = std::abs(a - b);
    return std::min(d, n - d);
}

} // namespace

TEST_CASE("q function matches the normal tail") {
    CHECK(q_function(0.0) == 0.5);
    CHECK(q_function(0.5) == doctest::Approx(0.3085375387259869).epsilon(1e-14));
    CHECK(q_function(1.0) == doctest::Approx(0.15865525393145707).epsilon(1e-14));
    CHECK(rel_close(q_function(3.0), 0.0013498980316300957, 1e-12));
    CHECK(q_function(-1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-14));
    CHECK(q_function(1.0) + q_function(-1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(q_function(40.0) == 0.0);  // underflows cleanly
}

TEST_CASE("response matrix is diagonally dominant with exact far zeros") {
    const ResponseMatrix& m = default_matrix();
    REQUIRE(m.segments == 18);
    int second_neighbor_hits = 0;
    for (int j = 0; j < 18; ++j) {
        const int left = (j + 17) % 18, right = (j + 1) % 18;
        CHECK(m.at(j, j) > 0.0);
        CHECK(m.at(j, left) > 0.0);
        CHECK(m.at(j, right) > 0.0);
        CHECK(m.at(j, j) > m.at(j, left));
        CHECK(m.at(j, j) > m.at(j, right));
        // Second neighbors leak less than first neighbors.
        CHECK(m.at(j, left) > m.at(j, (j + 16) % 18));
        CHECK(m.at(j, right) > m.at(j, (j + 2) % 18));
        if (m.at(j, (j + 2) % 18) > 0.0) ++second_neighbor_hits;
        // Beyond the blur and deposit support the entries are exact zeros.
        for (int k = 0; k < 18; ++k)
            if (circular_distance(j, k, 18) >= 3) CHECK(m.at(j, k) == 0.0);
    }
    // At the default range the blur still reaches the second neighbor.
    CHECK(second_neighbor_hits > 0);
}

TEST_CASE("sparse and dense matrix evaluation agree exactly") {
    const ResponseMatrix& sparse = default_matrix();
    const ResponseMatrix dense = compute_response_matrix(default_scenario(), true);
    for (int j = 0; j < 18; ++j)
        for (int k = 0; k < 18; ++k)
            CHECK(sparse.at(j, k) == dense.at(j, k));
}

TEST_CASE("self response varies slowly around the ring") {
    const ResponseMatrix& m = default_matrix();
    double mean = 0.0;
    for (int j = 0; j < 18; ++j) mean += m.at(j, j);
    mean /= 18.0;
    for (int j = 0; j < 18; ++j) {
        const double step = std::abs(m.at((j + 1) % 18, (j + 1) % 18) - m.at(j, j));
        CHECK(step / mean < 0.03);
    }
}

TEST_CASE("component responses window the matrix with wraparound") {
    const ResponseMatrix& m = default_matrix();
    const ComponentResponses c0 = component_responses(m, 0, 1);
    CHECK(c0.segment == 0);
    CHECK(c0.values.size() == 3);
    CHECK(c0.values[0] == m.at(0, 17));  // left neighbor wraps
    CHECK(c0.values[1] == m.at(0, 0));
    CHECK(c0.values[2] == m.at(0, 1));
    CHECK(c0.self() == m.at(0, 0));
    CHECK(c0.adjacent_sum() == m.at(0, 17) + m.at(0, 1));

    double row = 0.0;
    for (int k = 0; k < 18; ++k) row += m.at(0, k);
    CHECK(rel_close(c0.tail, row - m.at(0, 17) - m.at(0, 0) - m.at(0, 1), 1e-9));
    CHECK(c0.tail >= 0.0);

    const ComponentResponses c2 = component_responses(m, 5, 2);
    CHECK(c2.values.size() == 5);
    CHECK(c2.values[0] == m.at(5, 3));
    CHECK(c2.values[4] == m.at(5, 7));

    CHECK_THROWS_AS(component_responses(m, -1, 1), std::invalid_argument);
    CHECK_THROWS_AS(component_responses(m, 18, 1), std::invalid_argument);
    CHECK_THROWS_AS(component_responses(m, 0, -1), std::invalid_argument);
}

TEST_CASE("leakage ratio relates the tail to the adjacent energy") {
    ComponentResponses c;
    c.k_isi = 1;
    c.values = {0.1, 1.0, 0.1};
    c.tail = 0.05;
    CHECK(leakage_ratio(c) == doctest::Approx(0.25).epsilon(1e-15));
    c.tail = 0.0;
    CHECK(leakage_ratio(c) == 0.0);
    c.values = {0.0, 1.0, 0.0};
    c.tail = 0.5;
    CHECK(std::isinf(leakage_ratio(c)));
}

TEST_CASE("triplet means carry the frozen reference values") {
    const TrailAnalysis an = analyze_trail(default_scenario());
    REQUIRE(an.tables.size() == 18);
    const TripletTable& t0 = an.tables[0];
    CHECK(t0.pv[triplet_index(0, 0, 0)] == 0.0);
    CHECK(t0.pv[triplet_index(0, 0, 1)] ==
          doctest::Approx(41.180560483554039).epsilon(1e-12));
    CHECK(t0.pv[triplet_index(0, 1, 0)] ==
          doctest::Approx(207.29197039091326).epsilon(1e-12));
    CHECK(t0.pv[triplet_index(0, 1, 1)] ==
          doctest::Approx(242.1053961598119).epsilon(1e-12));
    CHECK(t0.pv[triplet_index(1, 0, 0)] ==
          doctest::Approx(19.295835714605769).epsilon(1e-12));
    CHECK(t0.pv[triplet_index(1, 0, 1)] ==
          doctest::Approx(138.60388221530988).epsilon(1e-12));
    CHECK(t0.pv[triplet_index(1, 1, 0)] ==
          doctest::Approx(240.28461831660363).epsilon(1e-12));
    CHECK(t0.pv[triplet_index(1, 1, 1)] == 255.0);
}

TEST_CASE("triplet means are monotone in every bit") {
    for (const Scenario* scp : {&default_scenario(), &far_scenario()}) {
        const TrailAnalysis an = analyze_trail(*scp);
        for (const TripletTable& t : an.tables) {
            for (int p = 0; p < 2; ++p)
                for (int n = 0; n < 2; ++n)
                    CHECK(t.pv[triplet_index(p, 1, n)] >= t.pv[triplet_index(p, 0, n)]);
            for (int b = 0; b < 2; ++b)
                for (int n = 0; n < 2; ++n)
                    CHECK(t.pv[triplet_index(1, b, n)] >= t.pv[triplet_index(0, b, n)]);
            for (int b = 0; b < 2; ++b)
                for (int p = 0; p < 2; ++p)
                    CHECK(t.pv[triplet_index(p, b, 1)] >= t.pv[triplet_index(p, b, 0)]);
        }
    }
}

TEST_CASE("triplet means require an adjacent window") {
    ComponentResponses c;
    c.k_isi = 0;
    c.values = {1.0};
    SystemConfig cfg;
    CHECK_THROWS_AS(triplet_means(c, cfg, 1.0), std::invalid_argument);
}

TEST_CASE("thresholds sit at the hardest-pair midpoint") {
    TripletTable t;
    t.pv = {0.0, 30.0, 210.0, 240.0, 20.0, 140.0, 238.0, 255.0};
    // Hardest pair: both-neighbors-lit zero (101) vs isolated one (010).
    CHECK(midpoint_threshold(t) == doctest::Approx(0.5 * (140.0 + 210.0)).epsilon(1e-15));

    TripletTable t2 = t;
    t2.pv[triplet_index(1, 0, 1)] = 150.0;
    t2.pv[triplet_index(0, 1, 0)] = 200.0;
    // Trail threshold averages the class means before taking the midpoint.
    CHECK(trail_threshold({t, t2}) ==
          doctest::Approx(0.5 * ((140.0 + 150.0) / 2 + (210.0 + 200.0) / 2)).epsilon(1e-15));
    CHECK_THROWS_AS(trail_threshold({}), std::invalid_argument);
}

TEST_CASE("default-scenario threshold and noise level are stable") {
    const TrailAnalysis an = analyze_trail(default_scenario());
    CHECK(an.pv_th == doctest::Approx(172.29998098302966).epsilon(1e-12));
    CHECK(an.sigma_prime == doctest::Approx(4.065).epsilon(1e-12));
    CHECK(an.matrix.segments == 18);
}

TEST_CASE("effective sigma passes pixel noise through and maps power noise") {
    const Scenario& sc = default_scenario();
    CHECK(effective_sigma(sc, 100.0) == sc.cfg.camera.sigma_n_pixel);

    // Power-domain level chosen to reproduce the pixel sigma at the
    // threshold operating point maps back to the same value.
    SystemConfig cfg;
    cfg.camera.noise_domain = NoiseDomain::power;
    const double pv_th = 172.29998098302966;
    cfg.camera.sigma_n_power = power_sigma_from_pixel(
        cfg, 4.065, response_inverse_photons(pv_th, cfg.camera));
    Scenario sp = prepare_scenario(cfg, cfg.analysis.led_index);
    CHECK(effective_sigma(sp, pv_th) == doctest::Approx(4.065).epsilon(1e-12));

    cfg.camera.sigma_n_power = 0.0;
    Scenario s0 = prepare_scenario(cfg, cfg.analysis.led_index);
    CHECK_THROWS_AS(effective_sigma(s0, pv_th), std::invalid_argument);
}

TEST_CASE("conditional error forms agree when the eye is open") {
    // Absolute form is side-blind; signed form knows the correct side.
    CHECK(conditional_error(100.0, 104.0, 4.0) ==
          doctest::Approx(q_function(1.0)).epsilon(1e-15));
    CHECK(conditional_error_signed(100.0, 104.0, 4.0, 1) ==
          doctest::Approx(q_function(1.0)).epsilon(1e-15));
    CHECK(conditional_error_signed(100.0, 96.0, 4.0, 0) ==
          doctest::Approx(q_function(1.0)).epsilon(1e-15));
    // Mean on the wrong side: the signed form exceeds one half.
    CHECK(conditional_error_signed(100.0, 96.0, 4.0, 1) ==
          doctest::Approx(q_function(-1.0)).epsilon(1e-15));
    CHECK(conditional_error_signed(100.0, 96.0, 4.0, 1) > 0.5);
    CHECK(conditional_error(100.0, 96.0, 4.0) < 0.5);

    // Zero-noise limits.
    CHECK(conditional_error(100.0, 90.0, 0.0) == 0.0);
    CHECK(conditional_error(100.0, 100.0, 0.0) == 0.5);
    CHECK(conditional_error_signed(100.0, 90.0, 0.0, 1) == 1.0);
    CHECK(conditional_error_signed(100.0, 90.0, 0.0, 0) == 0.0);
    CHECK(conditional_error_signed(100.0, 100.0, 0.0, 0) == 0.5);

    CHECK_THROWS_AS(conditional_error(0.0, 0.0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(conditional_error_signed(0.0, 0.0, -1.0, 0), std::invalid_argument);
}

TEST_CASE("worst-case ordering holds on rendered tables") {
    const TrailAnalysis an = analyze_trail(default_scenario());
    for (const TripletTable& t : an.tables) {
        const WorstCaseReport rep = verify_worst_case(t, an.pv_th, an.sigma_prime);
        CHECK(rep.ok);
        CHECK(rep.detail.empty());
        for (double e : rep.err) {
            CHECK(e >= 0.0);
            CHECK(e <= 1.0);
        }
        // Worst conditional errors sit at both-neighbors-lit for a 0 and
        // both-dark for a 1.
        CHECK(rep.err[triplet_index(1, 0, 1)] >= rep.err[triplet_index(0, 0, 0)]);
        CHECK(rep.err[triplet_index(0, 1, 0)] >= rep.err[triplet_index(1, 1, 1)]);
    }
}

TEST_CASE("worst-case check flags a non-monotone table") {
    TripletTable t;
    t.segment = 4;
    // The single-leak zero (0,0,1) sits closer to the threshold than the
    // double-leak zero (1,0,1), inverting the required ordering.
    t.pv = {0.0, 100.0, 150.0, 200.0, 40.0, 80.0, 190.0, 255.0};
    const WorstCaseReport rep = verify_worst_case(t, 120.0, 4.0);
    CHECK_FALSE(rep.ok);
    CHECK(rep.detail.find("segment 4") != std::string::npos);
    CHECK(rep.detail.find("exceeds") != std::string::npos);
}

TEST_CASE("adjacent-window error rate matches direct enumeration") {
    const Scenario& sc = default_scenario();
    const ResponseMatrix& m = default_matrix();
    const BerBreakdown k1 = k_neighbor_ber(sc, m, 1);
    CHECK(k1.k_isi == 1);
    CHECK(k1.segments.size() == 18);

    // Independent enumeration: one segment at a time, eight triplets,
    // configured priors.
    const double pi1 = sc.cfg.analysis.prior_one;
    double total = 0.0;
    for (int j = 0; j < 18; ++j) {
        const int left = (j + 17) % 18, right = (j + 1) % 18;
        double ber_j = 0.0;
        for (int p = 0; p < 2; ++p)
            for (int b = 0; b < 2; ++b)
                for (int n = 0; n < 2; ++n) {
                    const double r = p * m.at(j, left) + b * m.at(j, j) +
                                     n * m.at(j, right);
                    const double mu = pixel_response(
                        r * sc.exposure_gain / sc.cfg.photon_energy(), sc.cfg.camera);
                    const double err =
                        conditional_error_signed(k1.pv_th, mu, k1.sigma_prime, b);
                    const double prior =
                        sc.cfg.analysis.neighbor_priors[p * 2 + n] * (b ? pi1 : 1 - pi1);
                    ber_j += prior * err;
                }
        CHECK(rel_close(k1.segments[j].ber, ber_j, 1e-12));
        total += ber_j;
    }
    CHECK(rel_close(k1.ber, total / 18.0, 1e-12));

    // Per-segment leakage mirrors the component view.
    for (int j = 0; j < 18; ++j)
        CHECK(k1.segments[j].lambda2 ==
              leakage_ratio(component_responses(m, j, 1)));
}

TEST_CASE("frozen error rates for the default scenario") {
    const Scenario& sc = default_scenario();
    const ResponseMatrix& m = default_matrix();
    const double k0 = k_neighbor_ber(sc, m, 0).ber;
    const double k1 = k_neighbor_ber(sc, m, 1).ber;
    const double k2 = k_neighbor_ber(sc, m, 2).ber;
    const double k3 = k_neighbor_ber(sc, m, 3).ber;
    CHECK(rel_close(k0, 2.8462226898969692e-130, 1e-9));
    CHECK(rel_close(k1, 1.4216673778895546e-12, 1e-9));
    CHECK(rel_close(k2, 1.6081312375846681e-12, 1e-9));
    // No response beyond the second neighbor, so wider windows change nothing.
    CHECK(rel_close(k3, k2, 1e-12));
    // Ignoring interference underestimates the error rate here.
    CHECK(k0 < k1);
    CHECK(k1 < k2);

    double lmin = std::numeric_limits<double>::infinity(), lmax = 0.0;
    for (const SegmentBer& s : k_neighbor_ber(sc, m, 1).segments) {
        lmin = std::min(lmin, s.lambda2);
        lmax = std::max(lmax, s.lambda2);
    }
    CHECK(lmin > 5.0e-4);
    CHECK(lmax < 5.0e-3);
}

TEST_CASE("analytic ber is the adjacent-window model") {
    const Scenario& sc = default_scenario();
    const BerBreakdown a = analytic_ber(sc);
    const BerBreakdown k1 = k_neighbor_ber(sc, 1);
    CHECK(a.ber == k1.ber);
    CHECK(a.pv_th == k1.pv_th);
    CHECK(a.sigma_prime == k1.sigma_prime);
    CHECK(a.k_isi == 1);
}

TEST_CASE("adjacent-only model uses the joint neighbor prior table") {
    SystemConfig cfg;
    cfg.analysis.neighbor_priors = {0.7, 0.1, 0.15, 0.05};
    const Scenario sc = prepare_scenario(cfg, cfg.analysis.led_index);
    const ResponseMatrix m = compute_response_matrix(sc);
    const BerBreakdown skew = k_neighbor_ber(sc, m, 1);
    const BerBreakdown uniform = k_neighbor_ber(default_scenario(), default_matrix(), 1);
    CHECK(skew.ber != uniform.ber);

    // Hand-weighted check on one segment from its stored conditional errors.
    double expect = 0.0;
    for (int p = 0; p < 2; ++p)
        for (int n = 0; n < 2; ++n)
            for (int b = 0; b < 2; ++b)
                expect += cfg.analysis.neighbor_priors[p * 2 + n] * 0.5 *
                          skew.segments[3].cond_err[triplet_index(p, b, n)];
    CHECK(rel_close(skew.segments[3].ber, expect, 1e-12));

    // Wider windows fall back to independent per-bit priors: the joint
    // table must not leak into the k = 2 model.
    const BerBreakdown skew_k2 = k_neighbor_ber(sc, m, 2);
    const BerBreakdown uni_k2 = k_neighbor_ber(default_scenario(), default_matrix(), 2);
    CHECK(rel_close(skew_k2.ber, uni_k2.ber, 1e-12));
}

TEST_CASE("window guards reject oversized neighborhoods") {
    const Scenario& sc = default_scenario();
    const ResponseMatrix& m = default_matrix();
    CHECK_THROWS_AS(k_neighbor_ber(sc, m, -1), std::invalid_argument);
    CHECK_THROWS_AS(k_neighbor_ber(sc, m, 11), std::length_error);
    // A window that wraps past the antipode deduplicates the ring instead
    // of double counting segments.
    const BerBreakdown k8 = k_neighbor_ber(sc, m, 8);
    const BerBreakdown k10 = k_neighbor_ber(sc, m, 10);
    CHECK(rel_close(k8.ber, k10.ber, 1e-9));
}

TEST_CASE("far-range scenario has a clean adjacent-only structure") {
    const Scenario& sc = far_scenario();
    const ResponseMatrix m = compute_response_matrix(sc);
    const BerBreakdown k1 = k_neighbor_ber(sc, m, 1);
    const BerBreakdown k2 = k_neighbor_ber(sc, m, 2);
    CHECK(rel_close(k1.ber, 2.9351217122869762e-85, 1e-9));
    CHECK(rel_close(k2.ber, k1.ber, 1e-12));
    for (const SegmentBer& s : k1.segments) CHECK(s.lambda2 == 0.0);
    // The eye stays open: every isolated one clears every double-leak zero.
    const TrailAnalysis an = analyze_trail(sc);
    for (const TripletTable& t : an.tables)
        CHECK(t.pv[triplet_index(0, 1, 0)] >
              t.pv[triplet_index(1, 0, 1)] + 20.0 * an.sigma_prime);
}
