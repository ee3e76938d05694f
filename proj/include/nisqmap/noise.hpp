#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "nisqmap/hardware.hpp"
#include "nisqmap/rng.hpp"

namespace nisqmap {

/// Temporal noise model parameters: AR(1) thermal component, discretized
/// Ornstein-Uhlenbeck drift, and transient measurement spikes.
/// rho defaults to exp(-dt / 10us) for the 10us autocorrelation time.
struct NoiseParams {
    double rho = std::exp(-0.1);
    double sigma_th = 0.01;
    double ou_rate = 0.1;
    double ou_sigma = 0.02;
    double spike_mag = 0.05;
    int spike_len = 5;
    double spike_prob = 0.01;  // per chip per step arrival probability
    double dt_us = 1.0;
    double max_total = 0.15;
    int history_len = 10;

    void validate() const {
        if (rho < 0.0 || rho >= 1.0) throw std::invalid_argument("noise: rho must be in [0, 1)");
        if (sigma_th < 0 || ou_sigma < 0) throw std::invalid_argument("noise: stds must be >= 0");
        if (ou_rate < 0 || ou_rate > 1) throw std::invalid_argument("noise: ou_rate must be in [0, 1]");
        if (spike_len < 1) throw std::invalid_argument("noise: spike_len must be >= 1");
        if (spike_prob < 0 || spike_prob > 1)
            throw std::invalid_argument("noise: spike_prob must be a probability");
        if (dt_us <= 0) throw std::invalid_argument("noise: dt must be > 0");
        if (history_len < 1) throw std::invalid_argument("noise: history_len must be >= 1");
    }

    /// OU innovation std chosen so the stationary std equals ou_sigma exactly.
    double ou_innovation_std() const {
        double a = 1.0 - ou_rate;
        return ou_sigma * std::sqrt(std::max(0.0, 1.0 - a * a));
    }
};

struct TelemetryRow {
    int step;
    int chip;
    double eta, drift, spike, total;
};

/// Per-chip noise trajectory. Owned by one environment instance.
class NoiseState {
public:
    NoiseState() = default;
    explicit NoiseState(int n_chips)
        : n_chips_(n_chips), eta_(n_chips, 0.0), drift_(n_chips, 0.0),
          spike_remaining_(n_chips, 0) {}

    int n_chips() const { return n_chips_; }
    int step_count() const { return t_; }
    double eta(int chip) const { return eta_.at(chip); }
    double drift(int chip) const { return drift_.at(chip); }
    double spike_contrib(int chip, const NoiseParams& p) const {
        return spike_remaining_.at(chip) > 0 ? p.spike_mag : 0.0;
    }
    int spike_remaining(int chip) const { return spike_remaining_.at(chip); }

    double total(int chip, const NoiseParams& p) const {
        double raw = eta_.at(chip) + drift_.at(chip) + spike_contrib(chip, p);
        return std::clamp(raw, 0.0, p.max_total);
    }

    std::vector<double> totals(const NoiseParams& p) const {
        std::vector<double> out(n_chips_);
        for (int c = 0; c < n_chips_; ++c) out[c] = total(c, p);
        return out;
    }

    double mean_total(const NoiseParams& p) const {
        double s = 0;
        for (int c = 0; c < n_chips_; ++c) s += total(c, p);
        return s / n_chips_;
    }

    /// Ring buffer of the last history_len per-chip totals, oldest first.
    const std::deque<std::vector<double>>& history() const { return history_; }

    /// Reset an injected or arrived spike counter on one chip (resets, does
    /// not stack).
    void inject_spike(int chip, const NoiseParams& p) {
        if (chip < 0 || chip >= n_chips_) throw std::out_of_range("inject_spike: bad chip");
        spike_remaining_[chip] = p.spike_len;
    }

    /// Advance one telemetry step. Draw order per chip is fixed (eta
    /// innovations, then drift innovations, then spike arrivals) so streams
    /// are reproducible.
    void step(const NoiseParams& p, Rng& rng) {
        for (int c = 0; c < n_chips_; ++c)
            eta_[c] = p.rho * eta_[c] + p.sigma_th * rng.normal();
        const double s_ou = p.ou_innovation_std();
        for (int c = 0; c < n_chips_; ++c)
            drift_[c] = drift_[c] + p.ou_rate * (0.0 - drift_[c]) + s_ou * rng.normal();
        ++t_;
        history_.push_back(totals(p));
        while (static_cast<int>(history_.size()) > p.history_len) history_.pop_front();
        for (int c = 0; c < n_chips_; ++c)
            if (spike_remaining_[c] > 0) --spike_remaining_[c];
        if (p.spike_prob > 0.0) {
            for (int c = 0; c < n_chips_; ++c)
                if (rng.uniform() < p.spike_prob) spike_remaining_[c] = p.spike_len;
        }
    }

    void append_telemetry(std::vector<TelemetryRow>& out, const NoiseParams& p) const {
        for (int c = 0; c < n_chips_; ++c)
            out.push_back({t_, c, eta_[c], drift_[c], spike_contrib(c, p), total(c, p)});
    }

private:
    int n_chips_ = 0;
    int t_ = 0;
    std::vector<double> eta_;
    std::vector<double> drift_;
    std::vector<int> spike_remaining_;
    std::deque<std::vector<double>> history_;
};

enum class GateClass { OneQ, TwoQIntra, TwoQInter };

/// Time-varying gate error: baseline class error of the chip plus the
/// current per-chip noise total; inter-chip errors average the noise of
/// both endpoint chips. Clamped into [0, 1).
inline double gate_error(const Hardware& hw, GateClass cls, const NoiseState& ns,
                         const NoiseParams& p, int chip, int chip2 = -1) {
    double base = 0.0;
    double noise = 0.0;
    switch (cls) {
        case GateClass::OneQ:
            base = 1.0 - hw.base_f1q(chip);
            noise = ns.total(chip, p);
            break;
        case GateClass::TwoQIntra:
            base = 1.0 - hw.base_f2q_intra(chip);
            noise = ns.total(chip, p);
            break;
        case GateClass::TwoQInter:
            if (chip2 < 0) throw std::invalid_argument("gate_error: inter class needs two chips");
            base = 1.0 - hw.base_f2q_inter(chip, chip2);
            noise = 0.5 * (ns.total(chip, p) + ns.total(chip2, p));
            break;
    }
    return std::clamp(base + noise, 0.0, 1.0 - 1e-12);
}

inline void write_telemetry(std::ostream& os, const std::vector<TelemetryRow>& rows) {
    os << "step,chip,eta,drift,spike,total\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g\n", r.step, r.chip, r.eta,
                      r.drift, r.spike, r.total);
        os << buf;
    }
}

}  // namespace nisqmap
