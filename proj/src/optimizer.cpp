#include "fastgate/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "fastgate/lbfgs.hpp"
#include "fastgate/parallel.hpp"
#include "fastgate/rng.hpp"

namespace fastgate {

namespace {

// Quality gates a solution must pass to be reported as converged.
constexpr double converged_residual_limit = 1e-4;       // per-mode |sum z e^{iwt}|
constexpr double converged_phase_gap_limit = 1e-2 * pi / 4;
constexpr double smooth_abs_delta = 1e-3;               // sqrt(z^2 + delta^2) relaxation

struct ModeWeights {
    double omega = 0.0;
    double phase_coupling = 0.0;   // K_a = b^(1) b^(2) eta^(1) eta^(2)
    double motional_weight = 0.0;  // (nbar + 1/2) * 16 * (ebp^2 + ebm^2)
};

std::array<ModeWeights, 2> mode_weights(const NormalModes& m,
                                        const std::array<double, 2>& nbar) {
    std::array<ModeWeights, 2> w;
    for (int a = 0; a < 2; ++a) {
        w[a].omega = m.omega[a];
        w[a].phase_coupling = m.phase_coupling(a);
        w[a].motional_weight =
            (nbar[a] + 0.5) * 16.0 *
            (m.eta_bar_plus[a] * m.eta_bar_plus[a] + m.eta_bar_minus[a] * m.eta_bar_minus[a]);
    }
    return w;
}

// Infidelity of a weighted kick pattern (times fixed or variable), shared
// by both stages. Kicks carry real weights: stage 1 passes group
// amplitudes, stage 2 passes +-1 signs of expanded pulses.
struct KickSet {
    std::span<const double> times;
    std::span<const double> weights;
};

struct EpsTerms {
    double theta = 0.0;
    std::array<complexd, 2> kick_sums{};
    double eps = 0.0;
};

EpsTerms evaluate_eps(const KickSet& kicks, const std::array<ModeWeights, 2>& modes) {
    const std::size_t n = kicks.times.size();
    EpsTerms out;
    double motional = 0.0;
    for (int a = 0; a < 2; ++a) {
        const double w = modes[a].omega;
        complexd s{};
        double pair_sum = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            const double zp = kicks.weights[p];
            s += zp * std::polar(1.0, w * kicks.times[p]);
            double inner = 0.0;
            for (std::size_t q = 0; q < p; ++q)
                inner += kicks.weights[q] * std::sin(w * std::abs(kicks.times[p] - kicks.times[q]));
            pair_sum += zp * inner;
        }
        out.kick_sums[a] = s;
        out.theta += 8.0 * modes[a].phase_coupling * pair_sum;
        motional += modes[a].motional_weight * std::norm(s);
    }
    const double dphi = phase_gap(out.theta);
    out.eps = (2.0 / 3.0) * (dphi * dphi + motional);
    return out;
}

// d eps / d weight_k and d eps / d time_k for the same kick pattern.
void eps_gradients(const KickSet& kicks, const std::array<ModeWeights, 2>& modes,
                   const EpsTerms& terms, std::span<double> d_weight,
                   std::span<double> d_time) {
    const std::size_t n = kicks.times.size();
    const double dphi = phase_gap(terms.theta);
    const double wrapped = wrap_angle(terms.theta);
    const double sign = wrapped > 0.0 ? 1.0 : (wrapped < 0.0 ? -1.0 : 0.0);
    const double phase_pref = (2.0 / 3.0) * 2.0 * dphi * sign;

    if (!d_weight.empty()) std::fill(d_weight.begin(), d_weight.end(), 0.0);
    if (!d_time.empty()) std::fill(d_time.begin(), d_time.end(), 0.0);

    for (int a = 0; a < 2; ++a) {
        const double w = modes[a].omega;
        const complexd s = terms.kick_sums[a];
        const double kpref = phase_pref * 8.0 * modes[a].phase_coupling;
        const double mpref = (2.0 / 3.0) * modes[a].motional_weight;
        for (std::size_t p = 0; p < n; ++p) {
            const complexd ph = std::polar(1.0, w * kicks.times[p]);
            double theta_dw = 0.0, theta_dt = 0.0;
            for (std::size_t q = 0; q < n; ++q) {
                if (q == p) continue;
                const double dt = kicks.times[p] - kicks.times[q];
                const double sgn = dt > 0.0 ? 1.0 : (dt < 0.0 ? -1.0 : 0.0);
                theta_dw += kicks.weights[q] * std::sin(w * std::abs(dt));
                theta_dt += kicks.weights[q] * w * std::cos(w * std::abs(dt)) * sgn;
            }
            if (!d_weight.empty()) {
                // d|S|^2/dz_p = 2 Re[conj(S) e^{iwt_p}]
                d_weight[p] += kpref * theta_dw +
                               mpref * 2.0 * (s.real() * ph.real() + s.imag() * ph.imag());
            }
            if (!d_time.empty()) {
                const double zp = kicks.weights[p];
                // d|S|^2/dt_p = -2 w z_p Im[conj(S) e^{iwt_p}]
                const double im = s.real() * ph.imag() - s.imag() * ph.real();
                d_time[p] += kpref * zp * theta_dt - mpref * 2.0 * w * zp * im;
            }
        }
    }
}

double smooth_abs(double z) { return std::sqrt(z * z + smooth_abs_delta * smooth_abs_delta); }

double stage1_penalty(double n_sdks, const SearchConfig& cfg) {
    const double arg = cfg.penalty_c2_stage1 * (n_sdks - (cfg.n_max + 1.0));
    return cfg.penalty_c1_stage1 * (std::tanh(arg) + 1.0);
}

struct Stage1Problem {
    const SearchConfig* cfg;
    std::vector<double> group_times;
    std::array<ModeWeights, 2> modes;

    explicit Stage1Problem(const SearchConfig& config)
        : cfg(&config),
          group_times(GroupVector{std::vector<int>(config.n_groups, 0), config.gate_time}
                          .times()),
          modes(mode_weights(normal_modes(config.trap), config.nbar)) {}

    double eval(std::span<const double> z, std::span<double> grad) const {
        const KickSet kicks{group_times, z};
        const EpsTerms terms = evaluate_eps(kicks, modes);

        double n_smooth = 0.0;
        for (double v : z) n_smooth += smooth_abs(v);
        const double arg = cfg->penalty_c2_stage1 * (n_smooth - (cfg->n_max + 1.0));
        const double th = std::tanh(arg);
        const double penalty = cfg->penalty_c1_stage1 * (th + 1.0);
        const double dpen_dn = cfg->penalty_c1_stage1 * cfg->penalty_c2_stage1 * (1.0 - th * th);

        const double cost =
            cfg->j1_multiplicative ? terms.eps * penalty : terms.eps + penalty;
        if (!grad.empty()) {
            eps_gradients(kicks, modes, terms, grad, {});
            for (std::size_t k = 0; k < z.size(); ++k) {
                const double dn_dz = z[k] / smooth_abs(z[k]);
                if (cfg->j1_multiplicative)
                    grad[k] = grad[k] * penalty + terms.eps * dpen_dn * dn_dz;
                else
                    grad[k] += dpen_dn * dn_dz;
            }
        }
        return cost;
    }
};

std::vector<int> round_and_clamp(std::span<const double> z, int z_max) {
    std::vector<int> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double r = std::round(z[i]);
        out[i] = int(std::clamp(r, double(-z_max), double(z_max)));
    }
    return out;
}

// Flip so the first nonzero amplitude is positive; z and -z implement the
// same gate (Theta invariant, every beta negated).
void canonicalize_sign(std::vector<int>& z) {
    for (int v : z) {
        if (v > 0) return;
        if (v < 0) {
            for (auto& x : z) x = -x;
            return;
        }
    }
}

// Shift the pattern to start at slot 0. On the uniform grid a slot shift
// is a pure time translation, which leaves Theta and every |beta|
// unchanged, so translated candidates are duplicates.
void canonicalize_translation(std::vector<int>& z) {
    std::size_t first = 0;
    while (first < z.size() && z[first] == 0) ++first;
    if (first == 0 || first == z.size()) return;
    std::rotate(z.begin(), z.begin() + first, z.end());
}

struct Stage2Problem {
    const SearchConfig* cfg;
    std::array<ModeWeights, 2> modes;
    std::vector<int> sign;                      // per active group
    std::vector<double> half_width;             // (count-1) * sep / 2
    std::vector<std::vector<double>> offsets;   // per active group kick offsets
    std::size_t n_kicks = 0;

    Stage2Problem(const GroupVector& gv, const SearchConfig& config)
        : cfg(&config), modes(mode_weights(normal_modes(config.trap), config.nbar)) {
        for (int zi : gv.z) {
            if (zi == 0) continue;
            const int count = std::abs(zi);
            sign.push_back(zi > 0 ? 1 : -1);
            half_width.push_back(0.5 * (count - 1) * config.min_separation);
            std::vector<double> offs(count);
            for (int l = 0; l < count; ++l)
                offs[l] = (l - 0.5 * (count - 1)) * config.min_separation;
            offsets.push_back(std::move(offs));
            n_kicks += count;
        }
    }

    std::size_t n_active() const { return sign.size(); }

    double eval(std::span<const double> centers, std::span<double> grad) const {
        std::vector<double> t(n_kicks), zw(n_kicks);
        std::vector<std::size_t> group_of(n_kicks);
        std::size_t p = 0;
        for (std::size_t g = 0; g < n_active(); ++g)
            for (double off : offsets[g]) {
                t[p] = centers[g] + off;
                zw[p] = sign[g];
                group_of[p] = g;
                ++p;
            }

        const KickSet kicks{t, zw};
        const EpsTerms terms = evaluate_eps(kicks, modes);
        double cost = terms.eps;

        std::vector<double> d_time;
        if (!grad.empty()) {
            d_time.resize(n_kicks);
            eps_gradients(kicks, modes, terms, {}, d_time);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t k = 0; k < n_kicks; ++k) grad[group_of[k]] += d_time[k];
        }

        // overlap penalty between nearest pulse edges, ordered pairs
        for (std::size_t g = 0; g < n_active(); ++g)
            for (std::size_t h = g + 1; h < n_active(); ++h) {
                const double d = centers[g] - centers[h];
                const double gap = std::abs(d) - (half_width[g] + half_width[h]);
                const double th = std::tanh(-cfg->penalty_c2_stage2 * gap);
                cost += 2.0 * cfg->penalty_c1_stage2 * (th + 1.0);
                if (!grad.empty()) {
                    const double dpen = -2.0 * cfg->penalty_c1_stage2 *
                                        cfg->penalty_c2_stage2 * (1.0 - th * th);
                    const double sgn = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                    grad[g] += dpen * sgn;
                    grad[h] -= dpen * sgn;
                }
            }
        return cost;
    }
};

bool nearly_equal_eps(double a, double b) {
    return std::abs(a - b) <= 1e-12 + 1e-6 * std::min(a, b);
}

// Ranking: converged first, then infidelity, then fewest SDKs, shortest
// span, preferred phase sign, lexicographic z.
bool better_solution(const GateSolution& a, const GateSolution& b, double target_sign) {
    if (a.search.converged != b.search.converged) return a.search.converged;
    if (!nearly_equal_eps(a.infidelity, b.infidelity))
        return a.infidelity < b.infidelity;
    if (a.n_sdks() != b.n_sdks()) return a.n_sdks() < b.n_sdks();
    if (std::abs(a.gate_time() - b.gate_time()) > 1e-15)
        return a.gate_time() < b.gate_time();
    const bool a_sign = a.theta * target_sign >= 0.0;
    const bool b_sign = b.theta * target_sign >= 0.0;
    if (a_sign != b_sign) return a_sign;
    return a.search.group_z < b.search.group_z;
}

}  // namespace

void SearchConfig::validate() const {
    trap.validate();
    if (!(gate_time > 0.0)) throw std::domain_error("gate_time must be > 0");
    if (n_groups < 2) throw std::domain_error("n_groups must be >= 2");
    if (z_max < 1) throw std::domain_error("z_max must be >= 1");
    if (!(min_separation > 0.0)) throw std::domain_error("min_separation must be > 0");
    if (ensemble_size < 1) throw std::domain_error("ensemble_size must be >= 1");
    if (!(target_infidelity > 0.0)) throw std::domain_error("target must be > 0");
    for (double n : nbar)
        if (!(n >= 0.0)) throw std::domain_error("nbar must be >= 0");
    if (n_max < 1) throw std::domain_error("n_max must be >= 1");
    if (nmax_step < 1 || nmax_ceiling < 1)
        throw std::domain_error("nmax iteration parameters must be >= 1");
}

std::vector<double> GroupVector::times() const {
    std::vector<double> t(z.size());
    for (std::size_t i = 0; i < z.size(); ++i)
        t[i] = gate_time * double(i + 1) / double(z.size());
    return t;
}

int GroupVector::total_sdks() const {
    int n = 0;
    for (int v : z) n += std::abs(v);
    return n;
}

double cost_stage1(std::span<const double> z, const SearchConfig& config) {
    if (int(z.size()) != config.n_groups)
        throw std::invalid_argument("cost_stage1: z length must equal n_groups");
    return Stage1Problem(config).eval(z, {});
}

double cost_stage1_grad(std::span<const double> z, const SearchConfig& config,
                        std::span<double> grad) {
    if (int(z.size()) != config.n_groups || grad.size() != z.size())
        throw std::invalid_argument("cost_stage1_grad: bad lengths");
    return Stage1Problem(config).eval(z, grad);
}

double cost_stage1_integer(const GroupVector& gv, const SearchConfig& config) {
    const Stage1Problem prob(config);
    std::vector<double> z(gv.z.begin(), gv.z.end());
    const KickSet kicks{prob.group_times, z};
    const double eps = evaluate_eps(kicks, prob.modes).eps;
    const double penalty = stage1_penalty(gv.total_sdks(), config);
    return config.j1_multiplicative ? eps * penalty : eps + penalty;
}

std::vector<GroupVector> stage1_search(const SearchConfig& config) {
    config.validate();
    const Stage1Problem prob(config);
    const int n = config.n_groups;

    struct Restart {
        std::vector<double> z_cont;
        std::vector<int> z_int;
        double cost = 0.0;
    };
    std::vector<Restart> restarts(config.ensemble_size);

    auto integer_cost = [&](const std::vector<int>& zi) {
        std::vector<double> zd(zi.begin(), zi.end());
        const double eps = evaluate_eps({prob.group_times, zd}, prob.modes).eps;
        int total = 0;
        for (int v : zi) total += std::abs(v);
        const double penalty = stage1_penalty(total, config);
        return config.j1_multiplicative ? eps * penalty : eps + penalty;
    };

    LbfgsOptions opt;
    opt.max_iterations = config.lbfgs_max_iterations;
    parallel_for(
        std::size_t(config.ensemble_size),
        [&](std::size_t r) {
            auto rng = stream_rng(config.seed, r);
            std::uniform_real_distribution<double> uz(-double(config.z_max),
                                                      double(config.z_max));
            std::vector<double> z0(n);
            double total = 0.0;
            for (auto& v : z0) {
                v = uz(rng);
                total += std::abs(v);
            }
            // A raw uniform draw starts deep in the saturated-penalty
            // plateau (sum |z| ~ N z_max / 2), where J1 carries no count
            // gradient. Rescale into the cap region; the draw supplies
            // the sign/weight pattern, the target the feasible magnitude.
            std::uniform_real_distribution<double> utarget(
                std::max(1.0, 0.5 * config.n_max), double(config.n_max));
            const double scale = utarget(rng) / std::max(total, 1e-12);
            if (scale < 1.0)
                for (auto& v : z0) v *= scale;
            auto res = lbfgs_minimize(
                [&](std::span<const double> x, std::span<double> g) {
                    return prob.eval(x, g);
                },
                std::move(z0), opt);
            restarts[r].z_int = round_and_clamp(res.x, config.z_max);
            restarts[r].z_cont = std::move(res.x);
            restarts[r].cost = integer_cost(restarts[r].z_int);
        },
        config.threads);

    if (restarts.empty()) throw std::runtime_error("stage1_search: empty ensemble");

    // floor/ceil polish of the best rounded candidate: enumerate the most
    // ambiguous coordinates (capped at 2^8 = 256 integer evaluations)
    std::size_t best_r = 0;
    for (std::size_t r = 1; r < restarts.size(); ++r)
        if (restarts[r].cost < restarts[best_r].cost) best_r = r;
    {
        const auto& zc = restarts[best_r].z_cont;
        std::vector<std::pair<double, int>> ambiguity;  // (|frac - round|, index)
        for (int i = 0; i < n; ++i) {
            const double frac = std::abs(zc[i] - std::round(zc[i]));
            if (frac > 1e-9) ambiguity.push_back({-frac, i});
        }
        std::sort(ambiguity.begin(), ambiguity.end());
        const int k = std::min<int>(8, ambiguity.size());
        std::vector<int> best_polished = restarts[best_r].z_int;
        double best_cost = restarts[best_r].cost;
        for (int mask = 0; mask < (1 << k); ++mask) {
            std::vector<int> zi = restarts[best_r].z_int;
            for (int bit = 0; bit < k; ++bit) {
                const int idx = ambiguity[bit].second;
                const double v = (mask >> bit) & 1 ? std::ceil(zc[idx]) : std::floor(zc[idx]);
                zi[idx] = int(std::clamp(v, double(-config.z_max), double(config.z_max)));
            }
            const double c = integer_cost(zi);
            if (c < best_cost) {
                best_cost = c;
                best_polished = zi;
            }
        }
        Restart polished;
        polished.z_int = best_polished;
        polished.cost = best_cost;
        restarts.push_back(std::move(polished));
    }

    std::map<std::vector<int>, double> unique;
    for (auto& r : restarts) {
        canonicalize_sign(r.z_int);
        canonicalize_translation(r.z_int);
        auto [it, inserted] = unique.try_emplace(r.z_int, r.cost);
        if (!inserted) it->second = std::min(it->second, r.cost);
    }

    struct Ranked {
        double cost;
        int total;
        std::vector<int> z;
    };
    std::vector<Ranked> ranked;
    ranked.reserve(unique.size());
    for (auto& [z, cost] : unique) {
        int total = 0;
        for (int v : z) total += std::abs(v);
        ranked.push_back({cost, total, z});
    }
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.cost != b.cost) return a.cost < b.cost;
        if (a.total != b.total) return a.total < b.total;
        return a.z < b.z;
    });

    std::vector<GroupVector> out;
    out.reserve(ranked.size());
    for (auto& r : ranked) out.push_back({std::move(r.z), config.gate_time});
    return out;
}

PulseSequence expand_groups(const GroupVector& gv, double min_separation) {
    if (!(min_separation > 0.0))
        throw std::invalid_argument("expand_groups: min_separation must be > 0");
    const auto group_times = gv.times();
    std::vector<std::pair<double, int>> kicks;
    for (std::size_t i = 0; i < gv.z.size(); ++i) {
        const int count = std::abs(gv.z[i]);
        const int sgn = gv.z[i] > 0 ? 1 : -1;
        for (int l = 0; l < count; ++l)
            kicks.push_back({group_times[i] + (l - 0.5 * (count - 1)) * min_separation, sgn});
    }
    std::stable_sort(kicks.begin(), kicks.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    PulseSequence seq;
    seq.times.reserve(kicks.size());
    seq.directions.reserve(kicks.size());
    for (auto& [t, s] : kicks) {
        seq.times.push_back(t);
        seq.directions.push_back(s);
    }
    return seq;
}

double cost_stage2(std::span<const double> center_times, const GroupVector& gv,
                   const SearchConfig& config) {
    if (center_times.size() != gv.z.size())
        throw std::invalid_argument("cost_stage2: one center time per group");
    Stage2Problem prob(gv, config);
    std::vector<double> active;
    for (std::size_t i = 0; i < gv.z.size(); ++i)
        if (gv.z[i] != 0) active.push_back(center_times[i]);
    return prob.eval(active, {});
}

double cost_stage2_grad(std::span<const double> center_times, const GroupVector& gv,
                        const SearchConfig& config, std::span<double> grad) {
    if (center_times.size() != gv.z.size() || grad.size() != center_times.size())
        throw std::invalid_argument("cost_stage2_grad: bad lengths");
    Stage2Problem prob(gv, config);
    std::vector<double> active;
    std::vector<std::size_t> active_idx;
    for (std::size_t i = 0; i < gv.z.size(); ++i)
        if (gv.z[i] != 0) {
            active.push_back(center_times[i]);
            active_idx.push_back(i);
        }
    std::vector<double> agrad(active.size());
    const double cost = prob.eval(active, agrad);
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t k = 0; k < active_idx.size(); ++k) grad[active_idx[k]] = agrad[k];
    return cost;
}

GateSolution stage2_refine(const GroupVector& candidate, const SearchConfig& config) {
    config.validate();
    if (int(candidate.z.size()) != config.n_groups)
        throw std::invalid_argument("stage2_refine: candidate size mismatch");
    const NormalModes modes = normal_modes(config.trap);
    Stage2Problem prob(candidate, config);

    const auto grid = candidate.times();
    std::vector<double> centers;
    std::vector<int> active_z;
    for (std::size_t i = 0; i < candidate.z.size(); ++i)
        if (candidate.z[i] != 0) {
            centers.push_back(grid[i]);
            active_z.push_back(candidate.z[i]);
        }

    bool lbfgs_converged = true;
    if (!centers.empty()) {
        // optimize in units of the gate time so the variables are O(1)
        const double tau = config.gate_time;
        std::vector<double> x0(centers.size());
        for (std::size_t i = 0; i < centers.size(); ++i) x0[i] = centers[i] / tau;
        LbfgsOptions opt;
        opt.max_iterations = config.lbfgs_max_iterations;
        std::vector<double> c_buf(centers.size()), g_buf(centers.size());
        auto res = lbfgs_minimize(
            [&](std::span<const double> x, std::span<double> g) {
                for (std::size_t i = 0; i < x.size(); ++i) c_buf[i] = x[i] * tau;
                const double cost = prob.eval(c_buf, g_buf);
                for (std::size_t i = 0; i < x.size(); ++i) g[i] = g_buf[i] * tau;
                return cost;
            },
            std::move(x0), opt);
        lbfgs_converged = res.converged;
        for (std::size_t i = 0; i < centers.size(); ++i) centers[i] = res.x[i] * tau;
    }

    // assemble the expanded solution at the refined centers
    GroupVector refined;
    refined.gate_time = candidate.gate_time;
    refined.z = candidate.z;
    std::vector<std::pair<double, int>> kicks;
    for (std::size_t g = 0; g < centers.size(); ++g) {
        const int count = std::abs(active_z[g]);
        const int sgn = active_z[g] > 0 ? 1 : -1;
        for (int l = 0; l < count; ++l)
            kicks.push_back(
                {centers[g] + (l - 0.5 * (count - 1)) * config.min_separation, sgn});
    }
    std::stable_sort(kicks.begin(), kicks.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    GateSolution sol;
    sol.trap = config.trap;
    sol.nbar = config.nbar;
    for (auto& [t, s] : kicks) {
        sol.sequence.times.push_back(t);
        sol.sequence.directions.push_back(s);
    }
    sol.theta = wrap_angle(entangling_phase(sol.sequence, modes));
    const auto disp = displacement_amplitudes(sol.sequence, modes);
    for (int a = 0; a < 2; ++a) {
        sol.beta_plus[a] = disp[a].plus;
        sol.beta_minus[a] = disp[a].minus;
    }
    sol.infidelity = infidelity_truncated(sol.theta, sol.beta_plus, sol.beta_minus, sol.nbar);

    sol.search.seed = config.seed;
    sol.search.n_max = config.n_max;
    sol.search.group_z = active_z;
    sol.search.group_centers = centers;
    sol.search.min_separation = config.min_separation;

    const auto residual = motional_restoration_residual(sol.sequence, modes);
    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < sol.sequence.times.size(); ++i)
        min_gap = std::min(min_gap, sol.sequence.times[i] - sol.sequence.times[i - 1]);
    const bool gaps_ok = min_gap >= config.min_separation - 1e-15;
    sol.search.bandwidth_limited =
        std::isfinite(min_gap) && min_gap <= config.min_separation * (1.0 + 1e-9);
    sol.search.converged = lbfgs_converged && gaps_ok &&
                           sol.infidelity <= config.target_infidelity &&
                           residual[0] <= converged_residual_limit &&
                           residual[1] <= converged_residual_limit &&
                           std::abs(phase_gap(sol.theta)) <= converged_phase_gap_limit;
    return sol;
}

double max_entangling_phase_bound(const NormalModes& modes, double tau, int n_sdks) {
    if (n_sdks < 2) return 0.0;
    double per_pair = 0.0;
    for (int a = 0; a < 2; ++a) {
        const double cap =
            modes.omega[a] * tau < pi / 2 ? std::sin(modes.omega[a] * tau) : 1.0;
        per_pair += 8.0 * std::abs(modes.phase_coupling(a)) * cap;
    }
    return per_pair * 0.5 * double(n_sdks) * double(n_sdks - 1);
}

int min_feasible_sdk_count(const NormalModes& modes, double tau) {
    for (int n = 2; n < 100000; ++n)
        if (max_entangling_phase_bound(modes, tau, n) >= pi / 4) return n;
    return 100000;
}

GateSolution search(const SearchConfig& config, const ProgressFn& progress) {
    config.validate();
    const NormalModes modes = normal_modes(config.trap);

    int nmax = config.nmax_start > 0 ? config.nmax_start
                                     : min_feasible_sdk_count(modes, config.gate_time);
    nmax = std::clamp(nmax, 1, config.nmax_ceiling);

    GateSolution best;
    bool have_best = false;
    std::vector<double> history;

    const int n_groups_hi = std::max(config.n_groups, config.n_groups_max);
    for (; nmax <= config.nmax_ceiling; nmax += config.nmax_step) {
        double round_best = std::numeric_limits<double>::infinity();
        std::size_t n_candidates = 0;
        for (int n_groups = config.n_groups; n_groups <= n_groups_hi; ++n_groups) {
            SearchConfig round_cfg = config;
            round_cfg.n_max = nmax;
            round_cfg.n_groups = n_groups;
            auto candidates = stage1_search(round_cfg);
            // rounding can push a relaxed solution over the SDK cap; those
            // candidates carry the saturated J1 penalty and are not part
            // of this n_max round
            std::erase_if(candidates,
                          [&](const GroupVector& gv) { return gv.total_sdks() > nmax; });
            if (config.max_candidates > 0 &&
                int(candidates.size()) > config.max_candidates)
                candidates.resize(config.max_candidates);
            n_candidates += candidates.size();

            std::vector<GateSolution> solutions(candidates.size());
            parallel_for(
                candidates.size(),
                [&](std::size_t i) {
                    solutions[i] = stage2_refine(candidates[i], round_cfg);
                },
                config.threads);

            for (auto& sol : solutions) {
                round_best = std::min(round_best, sol.infidelity);
                if (!have_best || better_solution(sol, best, config.target_sign)) {
                    best = sol;
                    have_best = true;
                }
            }
        }
        history.push_back(round_best);

        if (progress) {
            std::ostringstream msg;
            msg << "n_max=" << nmax << " candidates=" << n_candidates
                << " best_eps=" << round_best;
            progress(msg.str());
        }
        if (have_best && best.search.converged) break;
    }

    best.search.cost_history = std::move(history);
    return best;
}

double effective_coupling(const NormalModes& modes, int mode) {
    return std::sqrt(std::abs(modes.b[mode][0] * modes.b[mode][1]) * modes.eta[mode][0] *
                     modes.eta[mode][1]);
}

std::vector<RescaledPoint> universal_rescale(std::span<const GateSolution> solutions,
                                             int mode) {
    std::vector<RescaledPoint> out;
    out.reserve(solutions.size());
    for (const auto& sol : solutions) {
        const NormalModes modes = normal_modes(sol.trap);
        RescaledPoint p;
        p.rescaled_gate_time =
            (modes.omega_op() - modes.omega_ip()) * sol.gate_time() / two_pi;
        p.rescaled_n_sdks = effective_coupling(modes, mode) * double(sol.n_sdks());
        out.push_back(p);
    }
    return out;
}

}  // namespace fastgate
