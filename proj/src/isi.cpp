#include "trailsim/isi.hpp"

#include "trailsim/constants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace trailsim {

namespace {

int circ_dist(int a, int b, int n) {
    const int d = std::abs(a - b);
    return std::min(d, n - d);
}

// Smallest circular segment distance at which a segment's deposit support
// provably cannot reach another segment's sample point through the blur
// kernel. Beyond it the response entries are exact zeros. The slack covers
// the bilinear deposit splat (1.0), the interpolation corners (1.42) and
// margin.
int zero_distance(const Scenario& sc) {
    const int j = sc.layout.segments;
    const double dtheta = sc.cfg.tx.control_angle;
    const double r = sc.layout.image_radius;
    const double cutoff = std::sqrt(2.0) * (sc.kernel.reach() + 1) +
                          sc.layout.footprint_radius + 1.8;
    for (int dk = 1; dk <= j / 2; ++dk) {
        const double ang = std::min(kPi, std::max(0.0, (dk - 0.5) * dtheta));
        if (2.0 * r * std::sin(ang / 2.0) > cutoff) return dk;
    }
    return j;  // nothing provably zero, evaluate densely
}

// Neighbor segments within circular distance k of j, nearest first, each
// listed once even when the window wraps around the ring.
std::vector<int> neighbor_segments(int j, int k, int segments) {
    std::vector<int> out;
    for (int m = 1; m <= k; ++m) {
        const int left = ((j - m) % segments + segments) % segments;
        const int right = (j + m) % segments;
        auto add = [&](int s) {
            if (s != j && std::find(out.begin(), out.end(), s) == out.end())
                out.push_back(s);
        };
        add(left);
        add(right);
    }
    return out;
}

double mean_response_photons(const Scenario& sc, double received) {
    return received * sc.exposure_gain / sc.cfg.photon_energy();
}

} // namespace

double q_function(double x) {
    return 0.5 * std::erfc(x / std::sqrt(2.0));
}

ResponseMatrix compute_response_matrix(const Scenario& sc, bool dense) {
    const int j_count = sc.layout.segments;
    ResponseMatrix m;
    m.segments = j_count;
    m.r.assign(static_cast<std::size_t>(j_count) * j_count, 0.0);
    const int dk_zero = dense ? j_count : zero_distance(sc);
    const double e_single = sc.cfg.transmit_energy(1);

#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < j_count; ++k) {
        const Grid blink = render_segment_blink(sc.cfg, sc.layout, k);
        const Grid radio = radiometric_distribution(blink, sc.cfg.camera.luminous_efficacy,
                                                    sc.cfg.camera.luminous_efficiency);
        const Grid alloc = allocate_power(radio, e_single);
        for (int j = 0; j < j_count; ++j) {
            if (!dense && circ_dist(j, k, j_count) >= dk_zero) continue;
            m.at(j, k) = received_at(alloc, sc.gain, sc.kernel,
                                     sc.layout.centroid_x[j], sc.layout.centroid_y[j]);
        }
    }
    return m;
}

ComponentResponses component_responses(const ResponseMatrix& m, int j, int k_isi) {
    if (j < 0 || j >= m.segments)
        throw std::invalid_argument("segment index out of range");
    if (k_isi < 0) throw std::invalid_argument("k_isi must be >= 0");
    ComponentResponses c;
    c.segment = j;
    c.k_isi = k_isi;
    c.values.assign(2 * static_cast<std::size_t>(k_isi) + 1, 0.0);
    double window_sum = 0.0;
    for (int mm = -k_isi; mm <= k_isi; ++mm) {
        const int k = ((j + mm) % m.segments + m.segments) % m.segments;
        const double v = m.at(j, k);
        c.values[static_cast<std::size_t>(mm + k_isi)] = v;
        window_sum += v;
    }
    double row_sum = 0.0;
    for (int k = 0; k < m.segments; ++k) row_sum += m.at(j, k);
    c.tail = std::max(0.0, row_sum - window_sum);
    return c;
}

double leakage_ratio(const ComponentResponses& c) {
    const double adj = c.adjacent_sum();
    if (adj <= 0.0) return std::numeric_limits<double>::infinity();
    return c.tail / adj;
}

TripletTable triplet_means(const ComponentResponses& c, const SystemConfig& cfg,
                           double exposure_gain) {
    if (c.k_isi < 1)
        throw std::invalid_argument("triplet means need at least the adjacent window");
    const double r_prev = c.values[static_cast<std::size_t>(c.k_isi) - 1];
    const double r_self = c.self();
    const double r_next = c.values[static_cast<std::size_t>(c.k_isi) + 1];
    const double q_p = photon_energy(cfg.camera.wavelength);
    TripletTable t;
    t.segment = c.segment;
    for (int p = 0; p < 2; ++p)
        for (int b = 0; b < 2; ++b)
            for (int n = 0; n < 2; ++n) {
                const double r = p * r_prev + b * r_self + n * r_next;
                t.pv[static_cast<std::size_t>(triplet_index(p, b, n))] =
                    pixel_response(r * exposure_gain / q_p, cfg.camera);
            }
    return t;
}

double midpoint_threshold(const TripletTable& t) {
    return 0.5 * (t.pv[static_cast<std::size_t>(triplet_index(1, 0, 1))] +
                  t.pv[static_cast<std::size_t>(triplet_index(0, 1, 0))]);
}

double trail_threshold(const std::vector<TripletTable>& tables) {
    if (tables.empty()) throw std::invalid_argument("no triplet tables");
    double hi = 0.0, lo = 0.0;
    for (const auto& t : tables) {
        hi += t.pv[static_cast<std::size_t>(triplet_index(1, 0, 1))];
        lo += t.pv[static_cast<std::size_t>(triplet_index(0, 1, 0))];
    }
    hi /= static_cast<double>(tables.size());
    lo /= static_cast<double>(tables.size());
    return 0.5 * (hi + lo);
}

double effective_sigma(const Scenario& sc, double pv_th) {
    if (sc.cfg.camera.noise_domain == NoiseDomain::pixel)
        return sc.cfg.camera.sigma_n_pixel;
    if (sc.cfg.camera.sigma_n_power <= 0.0)
        throw std::invalid_argument("power-domain noise level not configured");
    const double i_op = response_inverse_photons(pv_th, sc.cfg.camera);
    return sc.cfg.camera.sigma_n_power *
           response_derivative(i_op, sc.cfg.camera) / sc.cfg.photon_energy();
}

double conditional_error(double pv_th, double mu, double sigma_prime) {
    if (sigma_prime < 0.0) throw std::invalid_argument("sigma must be >= 0");
    if (sigma_prime == 0.0) return mu == pv_th ? 0.5 : 0.0;
    return q_function(std::abs(pv_th - mu) / sigma_prime);
}

double conditional_error_signed(double pv_th, double mu, double sigma_prime,
                                int bit) {
    if (sigma_prime < 0.0) throw std::invalid_argument("sigma must be >= 0");
    // A transmitted 1 errs when the sample falls at or below the threshold,
    // a transmitted 0 errs when it falls above.
    const double margin = bit == 1 ? mu - pv_th : pv_th - mu;
    if (sigma_prime == 0.0) return margin > 0.0 ? 0.0 : (margin < 0.0 ? 1.0 : 0.5);
    return q_function(margin / sigma_prime);
}

WorstCaseReport verify_worst_case(const TripletTable& t, double pv_th,
                                  double sigma_prime) {
    WorstCaseReport rep;
    for (int i = 0; i < 8; ++i) {
        const int b = (i >> 1) & 1;
        rep.err[static_cast<std::size_t>(i)] =
            conditional_error_signed(pv_th, t.pv[static_cast<std::size_t>(i)],
                                     sigma_prime, b);
    }
    const double eps = 1e-12;
    auto expect_le = [&](int lo_p, int lo_n, int hi_p, int hi_n, int b) {
        const double e_lo = rep.err[static_cast<std::size_t>(triplet_index(lo_p, b, lo_n))];
        const double e_hi = rep.err[static_cast<std::size_t>(triplet_index(hi_p, b, hi_n))];
        if (e_lo > e_hi + eps && rep.ok) {
            rep.ok = false;
            rep.detail = "segment " + std::to_string(t.segment) + ": error(" +
                         std::to_string(lo_p) + "," + std::to_string(b) + "," +
                         std::to_string(lo_n) + ") exceeds error(" +
                         std::to_string(hi_p) + "," + std::to_string(b) + "," +
                         std::to_string(hi_n) + ")";
        }
    };
    // b = 0: error grows with each neighbor bit, worst at (1,1).
    expect_le(0, 0, 0, 1, 0);
    expect_le(0, 0, 1, 0, 0);
    expect_le(0, 1, 1, 1, 0);
    expect_le(1, 0, 1, 1, 0);
    // b = 1: error shrinks with each neighbor bit, worst at (0,0).
    expect_le(0, 1, 0, 0, 1);
    expect_le(1, 0, 0, 0, 1);
    expect_le(1, 1, 0, 1, 1);
    expect_le(1, 1, 1, 0, 1);
    return rep;
}

TrailAnalysis analyze_trail(const Scenario& sc) {
    TrailAnalysis an;
    an.matrix = compute_response_matrix(sc);
    const int j_count = an.matrix.segments;
    if (j_count >= 3) {
        an.tables.reserve(static_cast<std::size_t>(j_count));
        for (int j = 0; j < j_count; ++j)
            an.tables.push_back(triplet_means(component_responses(an.matrix, j, 1),
                                              sc.cfg, sc.exposure_gain));
        an.pv_th = trail_threshold(an.tables);
    } else {
        // Degenerate ring: midpoint of worst-neighbor means with the wrapped
        // window deduplicated.
        double hi = 0.0, lo = 0.0;
        const double q_p = sc.cfg.photon_energy();
        for (int j = 0; j < j_count; ++j) {
            double others = 0.0;
            for (int nb : neighbor_segments(j, 1, j_count))
                others += an.matrix.at(j, nb);
            hi += pixel_response(others * sc.exposure_gain / q_p, sc.cfg.camera);
            lo += pixel_response(an.matrix.at(j, j) * sc.exposure_gain / q_p,
                                 sc.cfg.camera);
        }
        hi /= static_cast<double>(j_count);
        lo /= static_cast<double>(j_count);
        an.pv_th = 0.5 * (hi + lo);
    }
    an.sigma_prime = effective_sigma(sc, an.pv_th);
    return an;
}

BerBreakdown k_neighbor_ber(const Scenario& sc, const ResponseMatrix& m, int k_isi) {
    if (k_isi < 0) throw std::invalid_argument("k_isi must be >= 0");
    if (2 * k_isi > 20)
        throw std::length_error("k-neighbor pattern count exceeds 2^20");
    const int j_count = m.segments;
    const auto& an_cfg = sc.cfg.analysis;
    const double pi1 = an_cfg.prior_one;
    const double pi0 = 1.0 - pi1;

    BerBreakdown out;
    out.k_isi = k_isi;

    // Threshold: midpoint of the segment-averaged worst-neighbor means
    // (all neighbors lit for a 0, all dark for a 1). For the adjacent-only
    // window on a full ring this is the hardest-pair midpoint.
    if (k_isi == 1 && j_count >= 3) {
        std::vector<TripletTable> tables;
        tables.reserve(static_cast<std::size_t>(j_count));
        for (int j = 0; j < j_count; ++j)
            tables.push_back(triplet_means(component_responses(m, j, 1),
                                           sc.cfg, sc.exposure_gain));
        out.pv_th = trail_threshold(tables);
    } else {
        double hi = 0.0, lo = 0.0;
        for (int j = 0; j < j_count; ++j) {
            double others = 0.0;
            for (int nb : neighbor_segments(j, k_isi, j_count))
                others += m.at(j, nb);
            hi += pixel_response(mean_response_photons(sc, others), sc.cfg.camera);
            lo += pixel_response(mean_response_photons(sc, m.at(j, j)), sc.cfg.camera);
        }
        hi /= static_cast<double>(j_count);
        lo /= static_cast<double>(j_count);
        out.pv_th = 0.5 * (hi + lo);
    }
    out.sigma_prime = effective_sigma(sc, out.pv_th);

    out.segments.resize(static_cast<std::size_t>(j_count));
    double total = 0.0;
    for (int j = 0; j < j_count; ++j) {
        SegmentBer seg;
        seg.segment = j;
        const auto nbs = neighbor_segments(j, k_isi, j_count);
        const std::size_t n_patterns = std::size_t{1} << nbs.size();
        const bool triplet_layout = k_isi == 1 && nbs.size() == 2;
        seg.cond_err.assign(triplet_layout ? 8 : n_patterns * 2, 0.0);
        const double r_self = m.at(j, j);

        double ber_j = 0.0;
        for (std::size_t pat = 0; pat < n_patterns; ++pat) {
            double r_nb = 0.0;
            double prob = 1.0;
            for (std::size_t t = 0; t < nbs.size(); ++t) {
                const int bit = static_cast<int>((pat >> t) & 1u);
                if (bit) r_nb += m.at(j, nbs[t]);
                prob *= bit ? pi1 : pi0;
            }
            if (triplet_layout) {
                // Neighbor order is (left, right); use the configured joint
                // prior table for the adjacent-only model.
                const int b_prev = static_cast<int>(pat & 1u);
                const int b_next = static_cast<int>((pat >> 1) & 1u);
                prob = an_cfg.neighbor_priors[static_cast<std::size_t>(b_prev * 2 + b_next)];
            }
            for (int b = 0; b < 2; ++b) {
                const double mu = pixel_response(
                    mean_response_photons(sc, r_nb + b * r_self), sc.cfg.camera);
                const double err = conditional_error_signed(out.pv_th, mu,
                                                            out.sigma_prime, b);
                const std::size_t slot = triplet_layout
                    ? static_cast<std::size_t>(triplet_index(
                          static_cast<int>(pat & 1u), b, static_cast<int>((pat >> 1) & 1u)))
                    : pat * 2 + static_cast<std::size_t>(b);
                seg.cond_err[slot] = err;
                ber_j += (b ? pi1 : pi0) * prob * err;
            }
        }
        seg.ber = ber_j;
        // Lambda2 keeps its adjacent-window definition regardless of k_isi.
        seg.lambda2 = leakage_ratio(component_responses(m, j, 1));
        total += ber_j;
        out.segments[static_cast<std::size_t>(j)] = std::move(seg);
    }
    out.ber = total / static_cast<double>(j_count);
    return out;
}

BerBreakdown k_neighbor_ber(const Scenario& sc, int k_isi) {
    const ResponseMatrix m = compute_response_matrix(sc);
    return k_neighbor_ber(sc, m, k_isi);
}

BerBreakdown analytic_ber(const Scenario& sc) {
    return k_neighbor_ber(sc, 1);
}

} // namespace trailsim
