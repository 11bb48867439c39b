#include "fastgate/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "fastgate/parallel.hpp"
#include "fastgate/rng.hpp"

namespace fastgate {

namespace {

InfidelityTerms eval_terms(const PulseSequence& seq, const NormalModes& modes,
                           const std::array<double, 2>& nbar) {
    const double theta = entangling_phase(seq, modes);
    const auto disp = displacement_amplitudes(seq, modes);
    const std::array<complexd, 2> bp{disp[0].plus, disp[1].plus};
    const std::array<complexd, 2> bm{disp[0].minus, disp[1].minus};
    return infidelity_terms(theta, bp, bm, nbar);
}

NoisePoint reduce(double magnitude, const std::vector<InfidelityTerms>& samples) {
    NoisePoint p;
    p.magnitude = magnitude;
    const double n = double(samples.size());
    double mean = 0.0, phase = 0.0, motional = 0.0;
    for (const auto& t : samples) {
        mean += t.total();
        phase += t.phase;
        motional += t.motional;
    }
    mean /= n;
    p.mean_error = mean;
    p.phase_term = phase / n;
    p.motional_term = motional / n;
    double var = 0.0;
    for (const auto& t : samples) var += (t.total() - mean) * (t.total() - mean);
    p.std_error = std::sqrt(var / n);
    p.sem = p.std_error / std::sqrt(n);
    return p;
}

// Modes with shifted frequencies; eigenvectors are held fixed, the
// Lamb-Dicke factors pick up the sqrt(w/w') of the shifted ground state.
NormalModes shifted_modes(const NormalModes& m, double d_ip, double d_op) {
    NormalModes out = m;
    const std::array<double, 2> delta{d_ip, d_op};
    for (int a = 0; a < 2; ++a) {
        const double w_new = m.omega[a] + delta[a];
        if (!(w_new > 0.0)) throw std::domain_error("drift makes mode frequency <= 0");
        const double scale = std::sqrt(m.omega[a] / w_new);
        out.omega[a] = w_new;
        for (int j = 0; j < 2; ++j) out.eta[a][j] = m.eta[a][j] * scale;
        out.eta_bar_plus[a] = m.eta_bar_plus[a] * scale;
        out.eta_bar_minus[a] = m.eta_bar_minus[a] * scale;
    }
    return out;
}

struct GroupLayout {
    std::vector<double> centers;
    std::vector<std::vector<double>> offsets;  // per group, per kick
    std::vector<std::vector<int>> signs;
};

// Prefer the optimizer's group metadata; otherwise cluster runs of pulses
// spaced at (about) the minimum separation.
GroupLayout group_layout(const GateSolution& sol) {
    GroupLayout layout;
    const double sep = sol.search.min_separation;
    const auto& meta_z = sol.search.group_z;
    const auto& meta_c = sol.search.group_centers;
    if (!meta_z.empty() && meta_z.size() == meta_c.size()) {
        for (std::size_t g = 0; g < meta_z.size(); ++g) {
            const int count = std::abs(meta_z[g]);
            if (count == 0) continue;
            layout.centers.push_back(meta_c[g]);
            std::vector<double> offs(count);
            for (int l = 0; l < count; ++l) offs[l] = (l - 0.5 * (count - 1)) * sep;
            layout.offsets.push_back(std::move(offs));
            layout.signs.push_back(
                std::vector<int>(count, meta_z[g] > 0 ? 1 : -1));
        }
        return layout;
    }
    const auto& t = sol.sequence.times;
    const auto& z = sol.sequence.directions;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= t.size(); ++i) {
        if (i == t.size() || t[i] - t[i - 1] > 1.5 * sep) {
            double center = 0.0;
            for (std::size_t k = start; k < i; ++k) center += t[k];
            center /= double(i - start);
            layout.centers.push_back(center);
            std::vector<double> offs;
            std::vector<int> signs;
            for (std::size_t k = start; k < i; ++k) {
                offs.push_back(t[k] - center);
                signs.push_back(z[k]);
            }
            layout.offsets.push_back(std::move(offs));
            layout.signs.push_back(std::move(signs));
            start = i;
        }
    }
    return layout;
}

}  // namespace

void NoiseSpec::validate() const {
    if (!(magnitude >= 0.0)) throw std::domain_error("noise magnitude must be >= 0");
    if (n_samples < 1) throw std::domain_error("n_samples must be >= 1");
    if (!(min_separation > 0.0)) throw std::domain_error("min_separation must be > 0");
}

NoisePoint jitter_monte_carlo(const GateSolution& sol, double sigma_t,
                              const NoiseSpec& spec) {
    spec.validate();
    if (!(sigma_t >= 0.0)) throw std::domain_error("sigma must be >= 0");
    sol.sequence.validate_expanded();
    const NormalModes modes = normal_modes(sol.trap);
    const std::size_t n = sol.sequence.size();

    std::vector<InfidelityTerms> samples(spec.n_samples);
    parallel_for(
        std::size_t(spec.n_samples),
        [&](std::size_t i) {
            PulseSequence seq = sol.sequence;
            if (sigma_t > 0.0) {
                auto rng = stream_rng(spec.seed, i);
                std::normal_distribution<double> noise(0.0, sigma_t);
                std::vector<std::pair<double, int>> kicks(n);
                const int max_redraws = spec.resample ? 1000 : 1;
                for (int attempt = 0; attempt < max_redraws; ++attempt) {
                    for (std::size_t m = 0; m < n; ++m)
                        kicks[m] = {sol.sequence.times[m] + noise(rng),
                                    sol.sequence.directions[m]};
                    std::stable_sort(kicks.begin(), kicks.end(),
                                     [](const auto& a, const auto& b) {
                                         return a.first < b.first;
                                     });
                    bool ok = true;
                    for (std::size_t m = 1; m < n && ok; ++m)
                        ok = kicks[m].first - kicks[m - 1].first >= spec.min_separation;
                    if (ok || !spec.resample) break;
                }
                for (std::size_t m = 0; m < n; ++m) {
                    seq.times[m] = kicks[m].first;
                    seq.directions[m] = kicks[m].second;
                }
                for (std::size_t m = 1; m < n; ++m)  // forward clamp
                    seq.times[m] =
                        std::max(seq.times[m], seq.times[m - 1] + spec.min_separation);
            }
            samples[i] = eval_terms(seq, modes, sol.nbar);
        },
        spec.threads);
    return reduce(sigma_t, samples);
}

SweepResult jitter_sweep(const GateSolution& sol, std::span<const double> sigma_grid,
                         const NoiseSpec& spec) {
    SweepResult out;
    out.points.reserve(sigma_grid.size());
    for (double s : sigma_grid) out.points.push_back(jitter_monte_carlo(sol, s, spec));
    return out;
}

SweepResult frequency_drift_sweep(const GateSolution& sol, DriftMode which,
                                  std::span<const double> delta_grid) {
    sol.sequence.validate_expanded();
    const NormalModes modes = normal_modes(sol.trap);
    SweepResult out;
    out.points.reserve(delta_grid.size());
    for (double delta : delta_grid) {
        const NormalModes m =
            shifted_modes(modes, which == DriftMode::common ? delta : 0.0, delta);
        NoisePoint p;
        p.magnitude = delta;
        const auto terms = eval_terms(sol.sequence, m, sol.nbar);
        p.mean_error = terms.total();
        p.phase_term = terms.phase;
        p.motional_term = terms.motional;
        out.points.push_back(p);
    }
    return out;
}

SweepResult reprate_drift_sweep(const GateSolution& sol,
                                std::span<const double> fractional_grid) {
    sol.sequence.validate_expanded();
    const NormalModes modes = normal_modes(sol.trap);
    const GroupLayout layout = group_layout(sol);
    SweepResult out;
    out.points.reserve(fractional_grid.size());
    for (double drift : fractional_grid) {
        std::vector<std::pair<double, int>> kicks;
        for (std::size_t g = 0; g < layout.centers.size(); ++g)
            for (std::size_t l = 0; l < layout.offsets[g].size(); ++l)
                kicks.push_back({layout.centers[g] + layout.offsets[g][l] * (1.0 + drift),
                                 layout.signs[g][l]});
        std::stable_sort(kicks.begin(), kicks.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        PulseSequence seq;
        for (auto& [t, s] : kicks) {
            seq.times.push_back(t);
            seq.directions.push_back(s);
        }
        NoisePoint p;
        p.magnitude = drift;
        const auto terms = eval_terms(seq, modes, sol.nbar);
        p.mean_error = terms.total();
        p.phase_term = terms.phase;
        p.motional_term = terms.motional;
        out.points.push_back(p);
    }
    return out;
}

double heating_error(double rate, double gate_time) {
    if (!(rate >= 0.0) || !(gate_time >= 0.0))
        throw std::domain_error("heating_error: inputs must be >= 0");
    return rate * gate_time;
}

double sdk_error_bound(double n_sdks, double eps_pi) {
    if (!(n_sdks >= 0.0) || !(eps_pi >= 0.0))
        throw std::domain_error("sdk_error_bound: inputs must be >= 0");
    const double x = n_sdks * eps_pi;
    if (x >= 1.0) return 0.0;  // bound saturates; no information left
    return (1.0 - x) * (1.0 - x);
}

double dephasing_error(double coherence_time, double op_time) {
    if (!(coherence_time > 0.0))
        throw std::domain_error("dephasing_error: coherence time must be > 0");
    if (!(op_time >= 0.0)) throw std::domain_error("dephasing_error: op_time must be >= 0");
    return 1.0 - std::exp(-op_time / coherence_time);
}

double finite_duration_budget(double n_sdks, double omega0, double tau_sdk) {
    if (!(n_sdks >= 0.0) || !(omega0 >= 0.0) || !(tau_sdk >= 0.0))
        throw std::domain_error("finite_duration_budget: inputs must be >= 0");
    const double dphi = n_sdks * omega0 * tau_sdk;
    return dphi * dphi;
}

}  // namespace fastgate
