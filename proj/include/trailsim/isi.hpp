#pragma once

#include "trailsim/camera.hpp"
#include "trailsim/render.hpp"

#include <array>
#include <string>
#include <vector>

namespace trailsim {

// Standard normal tail probability.
double q_function(double x);

// Received energy at each segment's sampling pixel when a single segment is
// lit alone (unit frame energy budget for one active segment). Entry (j, k)
// is the response at centroid j to segment k. Entries whose deposit support
// provably cannot reach the sampling pixel through the blur kernel are
// skipped and stay exactly zero.
struct ResponseMatrix {
    int segments = 0;
    std::vector<double> r;      // row-major, segments x segments
    double& at(int j, int k) { return r[static_cast<std::size_t>(j) * segments + k]; }
    double at(int j, int k) const { return r[static_cast<std::size_t>(j) * segments + k]; }
};

ResponseMatrix compute_response_matrix(const Scenario& sc, bool dense = false);

// Responses around one segment: values[m + k_isi] is the contribution of
// segment j+m at centroid j; tail collects everything beyond the window.
struct ComponentResponses {
    int segment = 0;
    int k_isi = 1;
    std::vector<double> values;
    double tail = 0.0;

    double self() const { return values[static_cast<std::size_t>(k_isi)]; }
    double adjacent_sum() const {
        return values[static_cast<std::size_t>(k_isi) - 1] +
               values[static_cast<std::size_t>(k_isi) + 1];
    }
};

ComponentResponses component_responses(const ResponseMatrix& m, int j, int k_isi);

// Energy beyond the adjacent neighbors relative to the adjacent energy.
// Returns +infinity when the adjacent sum is zero.
double leakage_ratio(const ComponentResponses& c);

// Noise-free pixel-value means for the 8 bit triplets (b_prev, b, b_next)
// at one segment. Index: b_prev*4 + b*2 + b_next.
struct TripletTable {
    int segment = 0;
    std::array<double, 8> pv{};
};

inline int triplet_index(int b_prev, int b, int b_next) {
    return b_prev * 4 + b * 2 + b_next;
}

TripletTable triplet_means(const ComponentResponses& c, const SystemConfig& cfg,
                           double exposure_gain);

// Decision threshold at the midpoint of the hardest pair (1,0,1) vs (0,1,0).
double midpoint_threshold(const TripletTable& t);

// One threshold for the whole trail: midpoint of the segment-averaged
// hardest-pair means.
double trail_threshold(const std::vector<TripletTable>& tables);

// Pixel-domain noise level used by the analysis. Pixel-domain configs pass
// sigma_n_pixel through; power-domain configs map sigma_n_power through the
// response slope at the threshold operating point.
double effective_sigma(const Scenario& sc, double pv_th);

// P(error | mean mu) for a fixed threshold: the absolute form Q(|th-mu|/s),
// and the signed form that knows which side of the threshold the mean
// should be on (they agree whenever the eye is open).
double conditional_error(double pv_th, double mu, double sigma_prime);
double conditional_error_signed(double pv_th, double mu, double sigma_prime,
                                int bit);

// Checks the worst-case-neighbor ordering: for b=0 the conditional error is
// nondecreasing in each neighbor bit (worst at 1,1), for b=1 nonincreasing
// (worst at 0,0).
struct WorstCaseReport {
    bool ok = true;
    std::string detail;        // names the segment and triplet pair on failure
    std::array<double, 8> err{};
};

WorstCaseReport verify_worst_case(const TripletTable& t, double pv_th,
                                  double sigma_prime);

struct SegmentBer {
    int segment = 0;
    double ber = 0.0;
    std::vector<double> cond_err;  // triplet order for k_isi <= 1
    double lambda2 = 0.0;
};

struct BerBreakdown {
    int k_isi = 1;
    double pv_th = 0.0;
    double sigma_prime = 0.0;
    double ber = 0.0;
    std::vector<SegmentBer> segments;
};

// Everything the detector needs, precomputed once per scenario.
struct TrailAnalysis {
    ResponseMatrix matrix;
    std::vector<TripletTable> tables;
    double pv_th = 0.0;
    double sigma_prime = 0.0;
};

TrailAnalysis analyze_trail(const Scenario& sc);

// Closed-form BER with the adjacent-only model (k = 1) or a generalized
// k-neighbor window. Neighbor priors: the configured 4-entry table for
// k = 1, independent per-bit priors otherwise. Throws when the pattern
// count exceeds 2^20.
BerBreakdown k_neighbor_ber(const Scenario& sc, const ResponseMatrix& m, int k_isi);
BerBreakdown k_neighbor_ber(const Scenario& sc, int k_isi);
BerBreakdown analytic_ber(const Scenario& sc);

} // namespace trailsim
