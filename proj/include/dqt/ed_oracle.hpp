#pragma once

// Reference solver: the full system + discretized bath Schroedinger equation
// in a Fock space truncated at K total bath excitations, integrated with RK4
// and a norm-drift guard.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "dqt/bath_model.hpp"
#include "dqt/fock_space.hpp"
#include "dqt/types.hpp"

namespace dqt {

struct EDConfig {
    int excitation_cutoff = 4;  ///< K
    double dt = 0.05;           ///< recording grid; internal steps subdivide it
    double t_max = 0.0;
    int record_stride = 1;
    double norm_tolerance = 1e-8;
    int max_refinements = 8;    ///< internal step dt / 2^r, r <= max_refinements
    bool record_energy = false;

    /// Progress file rewritten every checkpoint_interval time units (empty: off).
    std::string checkpoint_path;
    double checkpoint_interval = 10.0;
    /// Stop early after this many wall-clock seconds (0: no limit).
    double wall_clock_limit = 0.0;

    void validate() const {
        if (excitation_cutoff < 0) throw InvalidInput("EDConfig: excitation cutoff must be >= 0");
        if (!(dt > 0.0)) throw InvalidInput("EDConfig: dt must be positive");
        if (!(t_max >= 0.0)) throw InvalidInput("EDConfig: t_max must be non-negative");
        if (record_stride < 1) throw InvalidInput("EDConfig: record_stride must be >= 1");
        if (!(norm_tolerance > 0.0)) throw InvalidInput("EDConfig: norm_tolerance must be positive");
    }
};

struct EDResult {
    std::vector<double> times;
    std::vector<double> occupation;  ///< <s^dagger s>
    std::vector<Matrix> rho;         ///< Tr_b |Psi><Psi|
    std::vector<double> norm2;
    std::vector<double> energy;      ///< <H(t)>, when requested
    double internal_dt = 0.0;
    double max_norm_drift = 0.0;
    int refinements = 0;
    bool completed = true;
    double t_reached = 0.0;          ///< last full grid step, recorded or not
};

class EDPropagator {
public:
    EDPropagator(SystemModel model, DiscretizedBath bath, int excitation_cutoff)
        : model_(std::move(model)), bath_(std::move(bath)),
          basis_(static_cast<int>(bath_.size()), excitation_cutoff) {
        model_.validate();
        energies_ = ladder::bath_energies(basis_, bath_.omegas);
        s_dag_ = model_.coupling.adjoint();
        for (int m = 0; m <= excitation_cutoff; ++m) root_.push_back(std::sqrt(static_cast<double>(m)));
    }

    const OccupationBasis& basis() const noexcept { return basis_; }
    const SystemModel& model() const noexcept { return model_; }

    /// y = H(t) x with H = H_s(t) + s b^dagger + s^dagger b + H_b.
    void apply(double t, const JointState& x, JointState& y) const {
        h_ = model_.hamiltonian(t);
        const auto d = static_cast<std::size_t>(x.system_dim);
        const std::size_t dim = basis_.dim();
        const int n_modes = basis_.num_modes();
        const cplx* xs = x.amplitudes.data();
        cplx* ys = y.amplitudes.data();
        // flat loops on the column-major layout, one pass over the lowering table
        raised_.assign(d * dim, 0.0);   // b^dagger x
        lowered_.assign(d * dim, 0.0);  // b x
        for (std::size_t f = 1; f < dim; ++f) {
            for (int i = 0; i < n_modes; ++i) {
                const std::int32_t lo = basis_.lowered(f, i);
                if (lo < 0) continue;
                const cplx gi = bath_.couplings[static_cast<std::size_t>(i)] *
                                root_[static_cast<std::size_t>(basis_.occupation(f, i))];
                const cplx gc = std::conj(gi);
                const std::size_t fo = f * d, lo_o = static_cast<std::size_t>(lo) * d;
                for (std::size_t r = 0; r < d; ++r) {
                    raised_[fo + r] += gc * xs[lo_o + r];
                    lowered_[lo_o + r] += gi * xs[fo + r];
                }
            }
        }
        const cplx* h = h_.data();
        const cplx* s = model_.coupling.data();
        const cplx* sd = s_dag_.data();
        for (std::size_t f = 0; f < dim; ++f) {
            const std::size_t o = f * d;
            const double e = energies_[f];
            for (std::size_t r = 0; r < d; ++r) {
                cplx acc = e * xs[o + r];
                for (std::size_t c = 0; c < d; ++c) {
                    const std::size_t rc = c * d + r;
                    acc += h[rc] * xs[o + c] + s[rc] * raised_[o + c] + sd[rc] * lowered_[o + c];
                }
                ys[o + r] = acc;
            }
        }
    }

    JointState apply(double t, const JointState& x) const {
        check_state(x);
        JointState y = x.zeros_like();
        apply(t, x, y);
        return y;
    }

    EDResult propagate(const Vector& psi0, const EDConfig& cfg) const {
        cfg.validate();
        if (cfg.excitation_cutoff != basis_.max_total()) {
            throw InvalidInput("EDConfig cutoff differs from the propagator's basis");
        }
        if (std::abs(psi0.squaredNorm() - 1.0) > 1e-12) {
            throw InvalidInput("propagate_ed: initial state must be normalized");
        }
        for (int r = 0; r <= cfg.max_refinements; ++r) {
            EDResult res;
            if (attempt(psi0, cfg, r, res)) return res;
        }
        throw NormDrift("ED norm drift exceeds " + std::to_string(cfg.norm_tolerance) + " even at dt/" +
                        std::to_string(1 << cfg.max_refinements));
    }

private:
    void check_state(const JointState& x) const {
        if (!(x.basis == basis_) || x.system_dim != model_.dim()) {
            throw InvalidInput("state does not match the ED basis or system dimension");
        }
    }

    void record(const JointState& psi, double t, const EDConfig& cfg, EDResult& res) const {
        const Matrix rho = partial_trace_bath(psi);
        res.times.push_back(t);
        res.rho.push_back(rho);
        res.occupation.push_back((s_dag_ * model_.coupling * rho).trace().real());
        res.norm2.push_back(psi.norm2());
        if (cfg.record_energy) {
            JointState hpsi = psi.zeros_like();
            apply(t, psi, hpsi);
            res.energy.push_back(psi.amplitudes.dot(hpsi.amplitudes).real());
        }
    }

    static void write_checkpoint(const EDResult& res, const EDConfig& cfg) {
        const std::filesystem::path path(cfg.checkpoint_path);
        const auto tmp = path.string() + ".tmp";
        {
            std::ofstream out(tmp);
            if (!out) throw RuntimeFailure("cannot write checkpoint " + tmp);
            out << "# ed progress: t_reached=" << res.t_reached << " t_max=" << cfg.t_max
                << " internal_dt=" << res.internal_dt << "\n# t occupation norm2\n";
            out.precision(17);
            for (std::size_t k = 0; k < res.times.size(); ++k) {
                out << res.times[k] << ' ' << res.occupation[k] << ' ' << res.norm2[k] << '\n';
            }
        }
        std::filesystem::rename(tmp, path);
    }

    bool attempt(const Vector& psi0, const EDConfig& cfg, int refinement, EDResult& res) const {
        const auto start = std::chrono::steady_clock::now();
        const int sub = 1 << refinement;
        const double h = cfg.dt / sub;
        res.internal_dt = h;
        res.refinements = refinement;

        JointState psi = JointState::vacuum_product(basis_, psi0);
        JointState k1 = psi.zeros_like(), k2 = psi.zeros_like(), k3 = psi.zeros_like(), k4 = psi.zeros_like();
        JointState tmp = psi.zeros_like();
        const std::size_t steps = grid_intervals(cfg.t_max, cfg.dt);
        double next_checkpoint = cfg.checkpoint_interval;

        record(psi, 0.0, cfg, res);
        for (std::size_t k = 0; k < steps; ++k) {
            for (int s = 0; s < sub; ++s) {
                const double t = static_cast<double>(k) * cfg.dt + s * h;
                apply(t, psi, k1);
                tmp.amplitudes = psi.amplitudes - (0.5 * h) * I * k1.amplitudes;
                apply(t + 0.5 * h, tmp, k2);
                tmp.amplitudes = psi.amplitudes - (0.5 * h) * I * k2.amplitudes;
                apply(t + 0.5 * h, tmp, k3);
                tmp.amplitudes = psi.amplitudes - h * I * k3.amplitudes;
                apply(t + h, tmp, k4);
                psi.amplitudes -= (h / 6.0) * I *
                                  (k1.amplitudes + 2.0 * k2.amplitudes + 2.0 * k3.amplitudes + k4.amplitudes);
            }
            const double drift = std::abs(psi.norm2() - 1.0);
            res.max_norm_drift = std::max(res.max_norm_drift, drift);
            if (drift > cfg.norm_tolerance) return false;

            const double t_now = static_cast<double>(k + 1) * cfg.dt;
            psi.time = t_now;
            res.t_reached = t_now;
            if ((k + 1) % static_cast<std::size_t>(cfg.record_stride) == 0) {
                record(psi, t_now, cfg, res);
            }
            if (!cfg.checkpoint_path.empty() && t_now >= next_checkpoint) {
                write_checkpoint(res, cfg);
                next_checkpoint += cfg.checkpoint_interval;
            }
            if (cfg.wall_clock_limit > 0.0) {
                const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start;
                if (el.count() > cfg.wall_clock_limit) {
                    res.completed = false;
                    if (!cfg.checkpoint_path.empty()) write_checkpoint(res, cfg);
                    return true;
                }
            }
        }
        if (!cfg.checkpoint_path.empty()) write_checkpoint(res, cfg);
        return true;
    }

    SystemModel model_;
    DiscretizedBath bath_;
    OccupationBasis basis_;
    std::vector<double> energies_;
    Matrix s_dag_;
    std::vector<double> root_;  // sqrt(m)
    mutable Matrix h_;
    mutable std::vector<cplx> raised_, lowered_;
};

inline JointState apply_H_total(const JointState& state, double t, const SystemModel& model,
                                const DiscretizedBath& bath) {
    return EDPropagator(model, bath, state.basis.max_total()).apply(t, state);
}

inline EDResult propagate_ed(const Vector& psi0, const EDConfig& config, const SystemModel& model,
                             const DiscretizedBath& bath) {
    return EDPropagator(model, bath, config.excitation_cutoff).propagate(psi0, config);
}

} // namespace dqt
