#pragma once

// Bath and system description: continuum coupling c(w), its frequency
// discretization into N modes, the memory kernel M(t), and the open system
// Hamiltonian with its coupling operator.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "dqt/types.hpp"

namespace dqt {

/// Coupling density c(w) on a finite support; zero outside.
class ContinuumBath {
public:
    ContinuumBath(std::function<cplx(double)> coupling, double omega_min, double omega_max)
        : coupling_(std::move(coupling)), omega_min_(omega_min), omega_max_(omega_max) {
        if (!(omega_max > omega_min)) {
            throw InvalidInput("ContinuumBath: empty support");
        }
    }

    /// Semicircular band of a semi-infinite bosonic chain with on-site
    /// energy eps0 and hopping h: c(w) = h sqrt(2/pi) sin(theta),
    /// w = eps0 + 2h cos(theta).
    static ContinuumBath semicircle(double eps0, double h) {
        if (!(h > 0.0)) {
            throw InvalidInput("semicircle bath: h must be positive");
        }
        auto c = [eps0, h](double w) -> cplx {
            const double x = (w - eps0) / (2.0 * h);
            if (std::abs(x) >= 1.0) {
                return 0.0;
            }
            return h * std::sqrt(2.0 / std::numbers::pi) * std::sqrt(1.0 - x * x);
        };
        return ContinuumBath(c, eps0 - 2.0 * h, eps0 + 2.0 * h);
    }

    /// Piecewise-linear interpolation of a tabulated (w, c) list. The support
    /// is the tabulated frequency range.
    static ContinuumBath tabulated(std::vector<double> omega, std::vector<cplx> coupling) {
        if (omega.size() != coupling.size() || omega.size() < 2) {
            throw InvalidInput("tabulated bath: need at least two (omega, c) pairs of equal length");
        }
        if (!std::is_sorted(omega.begin(), omega.end()) ||
            std::adjacent_find(omega.begin(), omega.end()) != omega.end()) {
            throw InvalidInput("tabulated bath: omega must be strictly increasing");
        }
        const double lo = omega.front();
        const double hi = omega.back();
        auto c = [w = std::move(omega), v = std::move(coupling)](double x) -> cplx {
            if (x < w.front() || x > w.back()) {
                return 0.0;
            }
            auto it = std::upper_bound(w.begin(), w.end(), x);
            if (it == w.end()) {
                return v.back();
            }
            const auto k = static_cast<std::size_t>(it - w.begin());
            const double s = (x - w[k - 1]) / (w[k] - w[k - 1]);
            return (1.0 - s) * v[k - 1] + s * v[k];
        };
        return ContinuumBath(c, lo, hi);
    }

    cplx operator()(double omega) const {
        if (omega < omega_min_ || omega > omega_max_) {
            return 0.0;
        }
        return coupling_(omega);
    }

    double omega_min() const noexcept { return omega_min_; }
    double omega_max() const noexcept { return omega_max_; }

private:
    std::function<cplx(double)> coupling_;
    double omega_min_;
    double omega_max_;
};

/// Quadrature weight rule for the cosine grid of the semicircle chain.
enum class WeightRule {
    midpoint, ///< (w[i-1] - w[i+1]) / 2, one-sided at the ends
    uniform,  ///< 4h / N
    chain,    ///< pi / (N+1): exact normal modes of an N-site chain
};

inline std::string to_string(WeightRule rule) {
    switch (rule) {
    case WeightRule::midpoint: return "midpoint";
    case WeightRule::uniform: return "uniform";
    case WeightRule::chain: return "chain";
    }
    return "?";
}

inline WeightRule weight_rule_from_string(const std::string& name) {
    if (name == "midpoint") return WeightRule::midpoint;
    if (name == "uniform") return WeightRule::uniform;
    if (name == "chain") return WeightRule::chain;
    throw InvalidInput("unknown weight rule '" + name + "' (expected midpoint|uniform|chain)");
}

/// N discrete modes with frequencies w_i, quadrature weights dw_i and
/// couplings g_i = sqrt(dw_i) c(w_i).
struct DiscretizedBath {
    std::vector<double> omegas;
    std::vector<double> weights;
    std::vector<cplx> couplings;

    DiscretizedBath() = default;
    DiscretizedBath(std::vector<double> w, std::vector<double> dw, std::vector<cplx> g)
        : omegas(std::move(w)), weights(std::move(dw)), couplings(std::move(g)) {
        if (omegas.size() != weights.size() || omegas.size() != couplings.size()) {
            throw InvalidInput("DiscretizedBath: omegas, weights and couplings differ in length");
        }
    }

    std::size_t size() const noexcept { return omegas.size(); }

    /// sum_i |g_i|^2, the discrete M(0).
    double total_weight() const {
        double s = 0.0;
        for (const auto& g : couplings) {
            s += std::norm(g);
        }
        return s;
    }
};

inline DiscretizedBath discretize_semicircle_chain(double eps0, double h, int num_modes,
                                                   WeightRule rule = WeightRule::midpoint) {
    if (!(h > 0.0)) {
        throw InvalidInput("discretize_semicircle_chain: h must be positive");
    }
    if (num_modes < 1) {
        throw InvalidInput("discretize_semicircle_chain: N must be >= 1");
    }
    const auto n = static_cast<std::size_t>(num_modes);
    const double step = std::numbers::pi / static_cast<double>(num_modes + 1);
    std::vector<double> w(n);
    std::vector<double> c(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double theta = static_cast<double>(k + 1) * step;
        w[k] = eps0 + 2.0 * h * std::cos(theta);
        c[k] = h * std::sqrt(2.0 / std::numbers::pi) * std::sin(theta);
    }

    std::vector<double> dw(n);
    switch (rule) {
    case WeightRule::midpoint:
        if (n == 1) {
            dw[0] = 4.0 * h;
        } else {
            // w is strictly decreasing in k
            dw[0] = w[0] - w[1];
            dw[n - 1] = w[n - 2] - w[n - 1];
            for (std::size_t k = 1; k + 1 < n; ++k) {
                dw[k] = 0.5 * (w[k - 1] - w[k + 1]);
            }
        }
        break;
    case WeightRule::uniform:
        std::fill(dw.begin(), dw.end(), 4.0 * h / static_cast<double>(num_modes));
        break;
    case WeightRule::chain:
        std::fill(dw.begin(), dw.end(), step);
        break;
    }

    std::vector<cplx> g(n);
    for (std::size_t k = 0; k < n; ++k) {
        g[k] = std::sqrt(dw[k]) * c[k];
    }
    return DiscretizedBath(std::move(w), std::move(dw), std::move(g));
}

/// Uniform midpoint discretization of an arbitrary continuum bath.
inline DiscretizedBath discretize_uniform(const ContinuumBath& bath, int num_modes) {
    if (num_modes < 1) {
        throw InvalidInput("discretize_uniform: N must be >= 1");
    }
    const auto n = static_cast<std::size_t>(num_modes);
    const double dw = (bath.omega_max() - bath.omega_min()) / static_cast<double>(num_modes);
    std::vector<double> w(n);
    std::vector<double> weights(n, dw);
    std::vector<cplx> g(n);
    for (std::size_t k = 0; k < n; ++k) {
        w[k] = bath.omega_min() + (static_cast<double>(k) + 0.5) * dw;
        g[k] = std::sqrt(dw) * bath(w[k]);
    }
    return DiscretizedBath(std::move(w), std::move(weights), std::move(g));
}

/// M(t) = sum_i |g_i|^2 exp(-i w_i t).
inline cplx memory_kernel(const DiscretizedBath& bath, double t) {
    cplx m = 0.0;
    for (std::size_t k = 0; k < bath.size(); ++k) {
        m += std::norm(bath.couplings[k]) * std::exp(-I * (bath.omegas[k] * t));
    }
    return m;
}

/// Memory kernel sampled on the uniform grid t_k = k dt.
struct MemoryKernelSeries {
    double dt = 0.0;
    std::vector<cplx> values;

    std::size_t size() const noexcept { return values.size(); }
    cplx operator[](std::size_t k) const { return values[k]; }
};

/// Number of grid intervals covering [0, t_max]; tolerant of round-off in t_max/dt.
inline std::size_t grid_intervals(double t_max, double dt) {
    return static_cast<std::size_t>(std::ceil(t_max / dt - 1e-9));
}

inline MemoryKernelSeries tabulate_kernel(const DiscretizedBath& bath, double dt, double t_max) {
    if (!(dt > 0.0) || !(t_max >= 0.0)) {
        throw InvalidInput("tabulate_kernel: need dt > 0 and t_max >= 0");
    }
    MemoryKernelSeries series;
    series.dt = dt;
    const std::size_t count = grid_intervals(t_max, dt) + 1;
    series.values.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
        series.values[k] = memory_kernel(bath, static_cast<double>(k) * dt);
    }
    return series;
}

/// One time-dependent term amplitude(t) * op of the system Hamiltonian.
struct DriveTerm {
    Matrix op;
    std::function<cplx(double)> amplitude;
};

/// Open system: H_s(t) = static_part + sum_k amplitude_k(t) op_k, coupling
/// operator s, and the initial pure state.
struct SystemModel {
    Matrix static_part;
    std::vector<DriveTerm> drives;
    Matrix coupling;
    Vector initial_state;

    int dim() const noexcept { return static_cast<int>(static_part.rows()); }

    Matrix hamiltonian(double t) const {
        Matrix h = static_part;
        for (const auto& d : drives) {
            h += d.amplitude(t) * d.op;
        }
        return h;
    }

    /// Checks shapes and Hermiticity of H_s at the given sample times.
    void validate(const std::vector<double>& sample_times = {0.0}) const {
        const auto d = static_part.rows();
        if (d < 1 || static_part.cols() != d || coupling.rows() != d || coupling.cols() != d ||
            initial_state.size() != d) {
            throw InvalidInput("SystemModel: inconsistent dimensions");
        }
        for (const auto& term : drives) {
            if (term.op.rows() != d || term.op.cols() != d) {
                throw InvalidInput("SystemModel: drive operator has wrong shape");
            }
        }
        for (double t : sample_times) {
            const Matrix h = hamiltonian(t);
            if ((h - h.adjoint()).norm() > 1e-12 * (1.0 + h.norm())) {
                throw InvalidInput("SystemModel: H_s is not Hermitian at t=" + std::to_string(t));
            }
        }
    }
};

namespace qubit {

// Basis order: index 0 = |g>, index 1 = |e>.
inline constexpr int ground = 0;
inline constexpr int excited = 1;

inline Matrix sigma_minus() {
    Matrix m = Matrix::Zero(2, 2);
    m(ground, excited) = 1.0;
    return m;
}

inline Matrix sigma_plus() { return sigma_minus().adjoint(); }

inline Matrix projector_excited() {
    Matrix m = Matrix::Zero(2, 2);
    m(excited, excited) = 1.0;
    return m;
}

inline Vector basis_state(int which) {
    Vector v = Vector::Zero(2);
    v(which) = 1.0;
    return v;
}

} // namespace qubit

/// Driven two-level system eps s+s- + f(t) s+ + f*(t) s-, f(t) = A cos(W t),
/// coupled to the bath through s = s-.
inline SystemModel make_spin_boson(double epsilon, double drive_amplitude, double drive_frequency,
                                   Vector initial_state) {
    SystemModel m;
    m.static_part = epsilon * qubit::projector_excited();
    if (drive_amplitude != 0.0) {
        auto f = [drive_amplitude, drive_frequency](double t) -> cplx {
            return drive_amplitude * std::cos(drive_frequency * t);
        };
        m.drives.push_back({qubit::sigma_plus(), f});
        m.drives.push_back({qubit::sigma_minus(), [f](double t) { return std::conj(f(t)); }});
    }
    m.coupling = qubit::sigma_minus();
    m.initial_state = std::move(initial_state);
    m.validate({0.0, 0.37, 1.9});
    return m;
}

} // namespace dqt
