#pragma once

// Propagation of a single dressed quantum trajectory.
//
// The nonlinear (self-consistent) trajectory integrates, in the Schroedinger
// picture,
//
//   d/dt |Psi> = -i H_Q |Psi>,
//   H_Q = H_s + s (xi(t) + conj(phi(t)) + b^dagger) + (s^dagger - conj(sbar(t))) b + H_b,
//
// with sbar = <v|s|v>/<v|v> on the vacuum block v = <0|_b Psi and the
// retarded field phi(t) = -i int_0^t M(t - tau) sbar(tau) dtau. The linear
// variant drops phi and the -conj(sbar) shift.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dqt/bath_model.hpp"
#include "dqt/fock_space.hpp"
#include "dqt/noise_source.hpp"
#include "dqt/types.hpp"

namespace dqt {

enum class Method { nonlinear_dressed, linear_dressed };

struct PropagatorConfig {
    double dt = 0.05;
    double t_max = 0.0;
    int truncation = 2;        ///< maximal total virtual-quanta occupation n
    Method method = Method::nonlinear_dressed;
    double projection_floor = 1e-12;
    int record_stride = 1;
    bool record_noise = false; ///< keep the evolved outcome z(t) per record

    void validate() const {
        if (!(dt > 0.0)) throw InvalidInput("PropagatorConfig: dt must be positive");
        if (!(t_max >= 0.0)) throw InvalidInput("PropagatorConfig: t_max must be non-negative");
        if (truncation < 0) throw InvalidInput("PropagatorConfig: truncation must be non-negative");
        if (!(projection_floor > 0.0 && projection_floor < 1.0)) {
            throw InvalidInput("PropagatorConfig: projection_floor must lie in (0, 1)");
        }
        if (record_stride < 1) throw InvalidInput("PropagatorConfig: record_stride must be >= 1");
    }

    std::size_t num_steps() const { return grid_intervals(t_max, dt); }
};

struct TrajectoryRecord {
    std::vector<double> times;
    /// v v^dagger / |v|^2 with v the vacuum block: the conditional state.
    std::vector<Matrix> conditional_rho;
    /// v v^dagger with the true (unrescaled) normalization of the dressed state.
    std::vector<Matrix> projected_rho;
    std::vector<cplx> sbar_history;
    std::vector<cplx> phi_history;
    std::vector<double> husimi_weight;  ///< |Psi(t)|^2
    std::vector<double> vacuum_weight;  ///< |v|^2 / |Psi|^2
    std::vector<std::vector<cplx>> evolved_noise;
    bool degenerate = false;
    double degenerate_time = 0.0;
};

/// sbar from a vacuum block alone.
inline cplx conditional_average(const Vector& v, const Matrix& s_op) {
    return v.dot(s_op * v) / v.squaredNorm();
}

/// <v|s|v>/<v|v> with v = <0|_b state. Throws DegenerateProjection when
/// |v|^2 < floor |state|^2.
inline cplx sbar(const JointState& state, const Matrix& s_op, double projection_floor = 1e-12) {
    const Vector v = vacuum_projection(state);
    const double total = state.norm2();
    const double ratio = total > 0.0 ? v.squaredNorm() / total : 0.0;
    if (!(ratio >= projection_floor)) {
        throw DegenerateProjection(state.time, ratio);
    }
    return conditional_average(v, s_op);
}

/// -i int_0^t M(t - tau) sbar(tau) dtau by the trapezoidal rule, where the
/// history holds sbar at tau_j = j dt, t = (size - 1) dt, and the kernel
/// shares the step dt.
inline cplx phi(std::span<const cplx> sbar_history, const MemoryKernelSeries& kernel) {
    if (sbar_history.size() <= 1) return 0.0;
    const std::size_t k = sbar_history.size() - 1;
    if (kernel.size() < k + 1) {
        throw InvalidInput("phi: kernel table shorter than the history");
    }
    cplx acc = 0.5 * (kernel[k] * sbar_history[0] + kernel[0] * sbar_history[k]);
    for (std::size_t j = 1; j < k; ++j) {
        acc += kernel[k - j] * sbar_history[j];
    }
    return -I * kernel.dt * acc;
}

/// Precomputed operators for one (model, bath, truncation) triple. Holds
/// mutable scratch space, so each worker thread uses its own copy.
class DressedPropagator {
public:
    /// Mutable state of one trajectory between full steps.
    struct State {
        JointState psi;
        std::size_t step = 0;
        NoiseSample noise;
        std::vector<cplx> sbar;       // at grid points 0..step
        std::vector<cplx> phi;        // at grid points 0..step
        double log_scale = 0.0;       // |Psi_true|^2 = |psi|^2 exp(log_scale)
        std::vector<cplx> noise_integral;  // int_0^t exp(-i w_i tau) conj(sbar) dtau
        std::vector<cplx> kernel_sums;     // sum_j exp(-i w_i (t - t_j)) sbar_j per mode
    };

    DressedPropagator(SystemModel model, DiscretizedBath bath, PropagatorConfig config)
        : model_(std::move(model)), bath_(std::move(bath)), config_(config),
          basis_(static_cast<int>(bath_.size()), config.truncation) {
        config_.validate();
        model_.validate();
        if (bath_.size() < 1) throw InvalidInput("DressedPropagator: bath has no modes");
        energies_ = ladder::bath_energies(basis_, bath_.omegas);
        s_dag_ = model_.coupling.adjoint();
        half_kernel_ = tabulate_kernel(bath_, 0.5 * config_.dt, config_.dt);
        for (std::size_t i = 0; i < bath_.size(); ++i) {
            weight2_.push_back(std::norm(bath_.couplings[i]));
            step_phase_.push_back(std::exp(-I * (bath_.omegas[i] * config_.dt)));
            half_phase_.push_back(std::exp(-I * (0.5 * bath_.omegas[i] * config_.dt)));
        }
        // flattened lowering table: a_i |f> = sqrt(m_i) |lo>
        const int n_modes = basis_.num_modes();
        for (std::size_t f = 1; f < basis_.dim(); ++f) {
            for (int i = 0; i < n_modes; ++i) {
                const std::int32_t lo = basis_.lowered(f, i);
                if (lo < 0) continue;
                const double amp = std::sqrt(static_cast<double>(basis_.occupation(f, i)));
                hops_.push_back({static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(lo),
                                 bath_.couplings[static_cast<std::size_t>(i)] * amp});
            }
        }
    }

    const OccupationBasis& basis() const noexcept { return basis_; }
    const SystemModel& model() const noexcept { return model_; }
    const DiscretizedBath& bath() const noexcept { return bath_; }
    const PropagatorConfig& config() const noexcept { return config_; }

    bool nonlinear() const noexcept { return config_.method == Method::nonlinear_dressed; }

    /// |0>_b (x) psi(0) with the sbar/phi bookkeeping at t = 0.
    State begin(const NoiseSample& noise) const {
        if (noise.size() != bath_.size()) {
            throw InvalidInput("noise sample length does not match bath mode count");
        }
        State st{JointState::vacuum_product(basis_, model_.initial_state), 0, noise, {}, {}, 0.0, {}, {}};
        const cplx s0 = stage_sbar(st.psi, 0.0);
        st.sbar.push_back(s0);
        st.phi.push_back(0.0);
        st.noise_integral.assign(bath_.size(), 0.0);
        st.kernel_sums.assign(bath_.size(), s0);
        return st;
    }

    /// -i H_Q x (nonlinear) or -i H_dress x (linear), written into y.
    void derivative(double t, cplx xi_t, cplx sbar_t, cplx phi_t, const JointState& x, JointState& y) const {
        h_ = model_.static_part;
        for (const auto& d : model_.drives) h_ += d.amplitude(t) * d.op;
        const cplx field = nonlinear() ? xi_t + std::conj(phi_t) : xi_t;
        h_ += field * model_.coupling;
        lowered_op_ = s_dag_;
        if (nonlinear()) lowered_op_.diagonal().array() -= std::conj(sbar_t);

        // flat loops on the column-major d_s x dim layout; d_s is tiny and
        // Eigen's per-column overhead dominated here
        const auto d = static_cast<std::size_t>(x.system_dim);
        const std::size_t dim = basis_.dim();
        const cplx* xs = x.amplitudes.data();
        cplx* ys = y.amplitudes.data();
        raised_.assign(d * dim, 0.0);   // b^dagger x
        lowered_.assign(d * dim, 0.0);  // b x
        for (const Hop& e : hops_) {
            const auto f = static_cast<std::size_t>(e.from) * d, lo = static_cast<std::size_t>(e.to) * d;
            const cplx gc = std::conj(e.g_amp);
            for (std::size_t r = 0; r < d; ++r) {
                raised_[f + r] += gc * xs[lo + r];
                lowered_[lo + r] += e.g_amp * xs[f + r];
            }
        }
        const cplx* h = h_.data();
        const cplx* s = model_.coupling.data();
        const cplx* l = lowered_op_.data();
        for (std::size_t f = 0; f < dim; ++f) {
            const std::size_t o = f * d;
            const double e = energies_[f];
            for (std::size_t r = 0; r < d; ++r) {
                cplx acc = e * xs[o + r];
                for (std::size_t c = 0; c < d; ++c) {
                    const std::size_t rc = c * d + r;
                    acc += h[rc] * xs[o + c] + s[rc] * raised_[o + c] + l[rc] * lowered_[o + c];
                }
                ys[o + r] = cplx(acc.imag(), -acc.real());  // -i acc
            }
        }
    }

    /// H_Q x itself (no -i factor).
    JointState apply_hq(const JointState& x, double t, cplx xi_t, cplx sbar_t, cplx phi_t) const {
        check_state(x);
        JointState y = x.zeros_like();
        derivative(t, xi_t, sbar_t, phi_t, x, y);
        y.amplitudes *= I;
        return y;
    }

    /// sbar of a stage state; throws DegenerateProjection below the floor.
    cplx stage_sbar(const JointState& x, double t) const {
        const Vector v = x.amplitudes.head(x.system_dim);
        const double total = x.norm2();
        const double ratio = total > 0.0 ? v.squaredNorm() / total : 0.0;
        if (!(ratio >= config_.projection_floor)) {
            if (nonlinear()) throw DegenerateProjection(t, ratio);
            return 0.0;
        }
        return conditional_average(v, model_.coupling);
    }

    /// One classical RK4 step of length dt. sbar is re-evaluated on every
    /// stage state; phi at stage times combines the full-step history with
    /// the stage's own sbar.
    void step(State& st) const {
        const double dt = config_.dt;
        const double t = static_cast<double>(st.step) * dt;
        const std::size_t k = st.step;

        if (!k1_ || k1_->dim() != st.psi.dim()) {
            k1_.emplace(st.psi.zeros_like());
            k2_.emplace(st.psi.zeros_like());
            k3_.emplace(st.psi.zeros_like());
            k4_.emplace(st.psi.zeros_like());
            tmp_.emplace(st.psi.zeros_like());
        }

        const cplx xi0 = xi(t, st.noise, bath_);
        const cplx xih = xi(t + 0.5 * dt, st.noise, bath_);
        const cplx xi1 = xi(t + dt, st.noise, bath_);

        // history sums are shared by the stages at equal times
        if (nonlinear()) {
            for (std::size_t i = 0; i < bath_.size(); ++i) phase_now_[i] = std::exp(-I * (bath_.omegas[i] * t));
        }
        const cplx hist_half = nonlinear() ? history(st, 1) : 0.0;
        const cplx hist_full = nonlinear() ? history(st, 2) : 0.0;
        auto phi_at = [&](int half, cplx s_stage) -> cplx {
            if (!nonlinear()) return 0.0;
            const double c = 0.5 * half;
            const cplx hist = half == 1 ? hist_half : hist_full;
            const cplx partial = 0.5 * c * dt *
                                 (half_kernel_[static_cast<std::size_t>(half)] * st.sbar[k] + half_kernel_[0] * s_stage);
            return -I * (hist + partial);
        };

        derivative(t, xi0, st.sbar[k], st.phi[k], st.psi, *k1_);

        tmp_->amplitudes = st.psi.amplitudes + (0.5 * dt) * k1_->amplitudes;
        cplx s2 = stage_sbar(*tmp_, t + 0.5 * dt);
        derivative(t + 0.5 * dt, xih, s2, phi_at(1, s2), *tmp_, *k2_);

        tmp_->amplitudes = st.psi.amplitudes + (0.5 * dt) * k2_->amplitudes;
        cplx s3 = stage_sbar(*tmp_, t + 0.5 * dt);
        derivative(t + 0.5 * dt, xih, s3, phi_at(1, s3), *tmp_, *k3_);

        tmp_->amplitudes = st.psi.amplitudes + dt * k3_->amplitudes;
        cplx s4 = stage_sbar(*tmp_, t + dt);
        derivative(t + dt, xi1, s4, phi_at(2, s4), *tmp_, *k4_);

        st.psi.amplitudes += (dt / 6.0) * (k1_->amplitudes + 2.0 * k2_->amplitudes + 2.0 * k3_->amplitudes +
                                           k4_->amplitudes);
        st.step = k + 1;
        st.psi.time = static_cast<double>(st.step) * dt;

        // rescale to keep the amplitudes representable; sbar and the
        // conditional state are invariant under this
        const double n2 = st.psi.norm2();
        if (n2 > 1e100 || (n2 < 1e-100 && n2 > 0.0)) {
            st.psi.amplitudes /= std::sqrt(n2);
            st.log_scale += std::log(n2);
        }

        const cplx s_new = stage_sbar(st.psi, st.psi.time);
        st.sbar.push_back(s_new);
        if (nonlinear()) {
            st.phi.push_back(-I * (hist_full + 0.5 * dt * (half_kernel_[2] * st.sbar[k] + half_kernel_[0] * s_new)));
        } else {
            st.phi.push_back(0.0);
        }

        for (std::size_t i = 0; nonlinear() && i < bath_.size(); ++i) {
            const cplx next = phase_now_[i] * step_phase_[i];
            st.noise_integral[i] += 0.5 * dt * (phase_now_[i] * std::conj(st.sbar[k]) + next * std::conj(s_new));
            st.kernel_sums[i] = step_phase_[i] * st.kernel_sums[i] + s_new;
        }
    }

    /// z_i(t) = z_i(0) + i g_i int_0^t exp(-i w_i tau) conj(sbar(tau)) dtau.
    std::vector<cplx> evolved_noise(const State& st) const {
        std::vector<cplx> z = st.noise.z;
        for (std::size_t i = 0; i < z.size(); ++i) {
            z[i] += I * bath_.couplings[i] * st.noise_integral[i];
        }
        return z;
    }

    TrajectoryRecord run(const NoiseSample& noise) const {
        TrajectoryRecord rec;
        State st = begin(noise);
        const std::size_t steps = config_.num_steps();
        record(st, rec);
        try {
            while (st.step < steps) {
                step(st);
                if (st.step % static_cast<std::size_t>(config_.record_stride) == 0) {
                    record(st, rec);
                }
            }
        } catch (const DegenerateProjection& e) {
            rec.degenerate = true;
            rec.degenerate_time = e.time();
        }
        return rec;
    }

private:
    void check_state(const JointState& x) const {
        if (!(x.basis == basis_) || x.system_dim != model_.dim()) {
            throw InvalidInput("state does not match the propagator's basis or system dimension");
        }
    }

    /// sum_j w_j M((k - j) dt + shift dt/2) sbar_j, trapezoid weights on [0, t_k].
    /// M is a finite sum of exponentials, so the sum is carried per mode in
    /// kernel_sums and costs O(N) instead of O(k). phase_now_ holds exp(-i w t_k).
    cplx history(const State& st, int shift) const {
        const std::size_t k = st.step;
        if (k == 0) return 0.0;
        const cplx s0 = st.sbar.front(), sk = st.sbar[k];
        cplx acc = 0.0;
        for (std::size_t i = 0; i < bath_.size(); ++i) {
            const cplx trap = st.kernel_sums[i] - 0.5 * (phase_now_[i] * s0 + sk);
            const cplx shifted = shift == 2 ? step_phase_[i] * trap : half_phase_[i] * trap;
            acc += weight2_[i] * shifted;
        }
        return config_.dt * acc;
    }

    void record(const State& st, TrajectoryRecord& rec) const {
        const Vector v = st.psi.amplitudes.head(st.psi.system_dim);
        const double total = st.psi.norm2();
        const double vn = v.squaredNorm();
        rec.times.push_back(st.psi.time);
        rec.projected_rho.push_back((v * v.adjoint()) * std::exp(st.log_scale));
        if (vn > 0.0) {
            rec.conditional_rho.push_back((v * v.adjoint()) / vn);
        } else {
            rec.conditional_rho.push_back(Matrix::Zero(v.size(), v.size()));
        }
        rec.sbar_history.push_back(st.sbar.back());
        rec.phi_history.push_back(st.phi.back());
        rec.husimi_weight.push_back(total * std::exp(st.log_scale));
        rec.vacuum_weight.push_back(total > 0.0 ? vn / total : 0.0);
        if (config_.record_noise) rec.evolved_noise.push_back(evolved_noise(st));
    }

    SystemModel model_;
    DiscretizedBath bath_;
    PropagatorConfig config_;
    OccupationBasis basis_;
    std::vector<double> energies_;
    Matrix s_dag_;
    MemoryKernelSeries half_kernel_;  // M at 0, dt/2, dt
    struct Hop {
        Eigen::Index from, to;
        cplx g_amp;
    };
    std::vector<Hop> hops_;
    std::vector<double> weight2_;
    std::vector<cplx> step_phase_, half_phase_;

    mutable Matrix h_, lowered_op_;
    mutable std::vector<cplx> raised_, lowered_;
    mutable std::vector<cplx> phase_now_ = std::vector<cplx>(bath_.size());
    mutable std::optional<JointState> k1_, k2_, k3_, k4_, tmp_;
};

inline TrajectoryRecord run_trajectory(const NoiseSample& sample, PropagatorConfig config, const SystemModel& model,
                                       const DiscretizedBath& bath) {
    config.method = Method::nonlinear_dressed;
    return DressedPropagator(model, bath, config).run(sample);
}

inline TrajectoryRecord run_linear_trajectory(const NoiseSample& sample, PropagatorConfig config,
                                              const SystemModel& model, const DiscretizedBath& bath) {
    config.method = Method::linear_dressed;
    return DressedPropagator(model, bath, config).run(sample);
}

/// H_Q |state> for explicit (sbar, phi) values.
inline JointState apply_H_Q(const JointState& state, double t, const NoiseSample& sample, cplx sbar_now,
                            cplx phi_now, const SystemModel& model, const DiscretizedBath& bath) {
    PropagatorConfig cfg;
    cfg.truncation = state.basis.max_total();
    cfg.t_max = 0.0;
    const DressedPropagator prop(model, bath, cfg);
    return prop.apply_hq(state, t, xi(t, sample, bath), sbar_now, phi_now);
}

} // namespace dqt
