#pragma once

// Truncated bosonic Fock space of N modes with total occupation <= n, and
// matrix-free ladder operators acting on joint (system x Fock) states.
//
// Ordering is graded lexicographic: states are grouped by total occupation
// (ascending), and within one grade ordered lexicographically with mode 0
// most significant and larger occupations first. The vacuum is index 0.
//
// A joint state with system dimension d stores amplitude (s, f) at
// f * d + s, i.e. it is a column-major d x dim matrix whose column f is the
// system vector attached to Fock state f.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "dqt/bath_model.hpp"
#include "dqt/types.hpp"

namespace dqt {

class OccupationBasis {
public:
    OccupationBasis(int num_modes, int max_total) {
        if (num_modes < 1) {
            throw InvalidInput("OccupationBasis: need at least one mode");
        }
        if (max_total < 0 || max_total > 255) {
            throw InvalidInput("OccupationBasis: max total occupation must be in [0, 255]");
        }
        auto d = std::make_shared<Data>();
        d->num_modes = num_modes;
        d->max_total = max_total;
        build_tables(*d);
        enumerate(*d);
        data_ = std::move(d);
    }

    int num_modes() const noexcept { return data_->num_modes; }
    int max_total() const noexcept { return data_->max_total; }
    std::size_t dim() const noexcept { return data_->dim; }

    /// Index of the first state with total occupation g; grade_offset(n+1) == dim.
    std::size_t grade_offset(int g) const {
        if (g <= 0) return 0;
        if (g > max_total()) return dim();
        return upto(g - 1, num_modes());
    }

    std::size_t rank(std::span<const int> occ) const { return rank_in(*data_, occ); }

    std::vector<int> unrank(std::size_t index) const {
        if (index >= dim()) {
            throw InvalidInput("unrank: index out of range");
        }
        const int n_modes = num_modes();
        int total = 0;
        while (grade_offset(total + 1) <= index) {
            ++total;
        }
        std::size_t r = index - grade_offset(total);
        std::vector<int> occ(static_cast<std::size_t>(n_modes), 0);
        int remaining = total;
        for (int j = 0; j + 1 < n_modes; ++j) {
            const int rest = n_modes - j - 1;
            // choose the largest entry v whose block (entries > v come first) contains r
            int v = remaining;
            for (;;) {
                const std::size_t block = compositions(remaining - v, rest);
                if (r < block) break;
                r -= block;
                --v;
            }
            occ[static_cast<std::size_t>(j)] = v;
            remaining -= v;
        }
        occ.back() = remaining;
        return occ;
    }

    int occupation(std::size_t index, int mode) const {
        return data_->occ[index * static_cast<std::size_t>(num_modes()) + static_cast<std::size_t>(mode)];
    }

    int total_occupation(std::size_t index) const {
        int t = 0;
        while (grade_offset(t + 1) <= index) ++t;
        return t;
    }

    /// Index of the state with one quantum fewer in `mode`, or -1 if empty.
    std::int32_t lowered(std::size_t index, int mode) const {
        return data_->lowered[index * static_cast<std::size_t>(num_modes()) + static_cast<std::size_t>(mode)];
    }

    bool operator==(const OccupationBasis& other) const noexcept {
        return data_ == other.data_ ||
               (num_modes() == other.num_modes() && max_total() == other.max_total());
    }

    /// Number of weak compositions of r into k parts.
    std::size_t compositions(int r, int k) const {
        if (r < 0) return 0;
        if (k == 0) return r == 0 ? 1 : 0;
        return upto(r, k - 1);
    }

    /// Number of k-vectors with entries summing to at most r, i.e. C(r+k, k).
    std::size_t upto(int r, int k) const { return upto_in(*data_, r, k); }

private:
    struct Data {
        int num_modes = 0;
        int max_total = 0;
        std::size_t dim = 0;
        std::vector<std::size_t> upto;      // (n+1) x (N+1)
        std::vector<std::uint8_t> occ;      // dim x N
        std::vector<std::int32_t> lowered;  // dim x N
    };

    static std::size_t upto_in(const Data& d, int r, int k) {
        if (r < 0) return 0;
        return d.upto[static_cast<std::size_t>(r) * (static_cast<std::size_t>(d.num_modes) + 1) +
                      static_cast<std::size_t>(k)];
    }

    static std::size_t rank_in(const Data& d, std::span<const int> occ) {
        const int n_modes = d.num_modes;
        if (static_cast<int>(occ.size()) != n_modes) {
            throw InvalidInput("rank: occupation vector has wrong length");
        }
        int total = 0;
        for (int m : occ) {
            if (m < 0) throw InvalidInput("rank: negative occupation");
            total += m;
        }
        if (total > d.max_total) {
            throw InvalidInput("rank: total occupation exceeds truncation");
        }
        std::size_t r = total > 0 ? upto_in(d, total - 1, n_modes) : 0;
        int remaining = total;
        for (int j = 0; j + 1 < n_modes; ++j) {
            // states in this grade sharing the prefix but with a larger entry j
            const int slack = remaining - occ[static_cast<std::size_t>(j)] - 1;
            if (slack >= 0) {
                r += upto_in(d, slack, n_modes - j - 1);
            }
            remaining -= occ[static_cast<std::size_t>(j)];
        }
        return r;
    }

    static void build_tables(Data& d) {
        const auto rows = static_cast<std::size_t>(d.max_total) + 1;
        const auto cols = static_cast<std::size_t>(d.num_modes) + 1;
        d.upto.assign(rows * cols, 0);
        constexpr auto cap = static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max());
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t k = 0; k < cols; ++k) {
                std::size_t v = 1;
                if (r > 0 && k > 0) {
                    v = d.upto[r * cols + k - 1] + d.upto[(r - 1) * cols + k];
                    if (v > cap) v = cap + 1;  // saturate; rejected below if reached
                }
                d.upto[r * cols + k] = v;
            }
        }
        d.dim = d.upto[(rows - 1) * cols + cols - 1];
        if (d.dim > cap) {
            throw InvalidInput("OccupationBasis: dimension too large");
        }
    }

    static void enumerate(Data& d) {
        const auto n_modes = static_cast<std::size_t>(d.num_modes);
        d.occ.assign(d.dim * n_modes, 0);
        d.lowered.assign(d.dim * n_modes, -1);

        std::vector<int> v(n_modes, 0);
        std::size_t index = 0;
        for (int g = 0; g <= d.max_total; ++g) {
            std::fill(v.begin(), v.end(), 0);
            v[0] = g;
            for (;;) {
                for (std::size_t j = 0; j < n_modes; ++j) {
                    d.occ[index * n_modes + j] = static_cast<std::uint8_t>(v[j]);
                }
                ++index;
                // successor in descending lexicographic order
                std::ptrdiff_t j = static_cast<std::ptrdiff_t>(n_modes) - 2;
                while (j >= 0 && v[static_cast<std::size_t>(j)] == 0) --j;
                if (j < 0) break;
                const auto ju = static_cast<std::size_t>(j);
                const int tail = v[n_modes - 1];
                --v[ju];
                v[n_modes - 1] = 0;
                v[ju + 1] = tail + 1;
            }
        }

        for (std::size_t f = 0; f < d.dim; ++f) {
            for (std::size_t j = 0; j < n_modes; ++j) {
                v[j] = d.occ[f * n_modes + j];
            }
            for (std::size_t j = 0; j < n_modes; ++j) {
                if (v[j] == 0) continue;
                --v[j];
                d.lowered[f * n_modes + j] = static_cast<std::int32_t>(rank_in(d, v));
                ++v[j];
            }
        }
    }

    std::shared_ptr<const Data> data_;
};

/// Amplitudes over (system x truncated Fock) at a given time.
struct JointState {
    OccupationBasis basis;
    int system_dim = 1;
    Vector amplitudes;
    double time = 0.0;

    JointState(OccupationBasis b, int ds) : basis(std::move(b)), system_dim(ds) {
        if (ds < 1) throw InvalidInput("JointState: system dimension must be >= 1");
        amplitudes = Vector::Zero(static_cast<Eigen::Index>(basis.dim()) * ds);
    }

    /// |0>_b (x) psi
    static JointState vacuum_product(OccupationBasis b, const Vector& psi) {
        JointState s(std::move(b), static_cast<int>(psi.size()));
        s.amplitudes.head(psi.size()) = psi;
        return s;
    }

    Eigen::Index dim() const noexcept { return amplitudes.size(); }
    double norm2() const { return amplitudes.squaredNorm(); }

    Eigen::Map<Matrix> as_matrix() {
        return {amplitudes.data(), system_dim, static_cast<Eigen::Index>(basis.dim())};
    }
    Eigen::Map<const Matrix> as_matrix() const {
        return {amplitudes.data(), system_dim, static_cast<Eigen::Index>(basis.dim())};
    }

    /// Same shape, zero amplitudes.
    JointState zeros_like() const {
        JointState s(basis, system_dim);
        s.time = time;
        return s;
    }
};

namespace ladder {

// Kernels on d x dim column views. Columns are Fock states.

/// y += coef * a_mode x
template <class In, class Out>
void add_annihilation(const OccupationBasis& basis, int mode, cplx coef, const In& x, Out& y) {
    const auto dim = basis.dim();
    for (std::size_t f = 1; f < dim; ++f) {
        const std::int32_t lo = basis.lowered(f, mode);
        if (lo < 0) continue;
        const double amp = std::sqrt(static_cast<double>(basis.occupation(f, mode)));
        y.col(lo) += (coef * amp) * x.col(static_cast<Eigen::Index>(f));
    }
}

/// y += coef * a_mode^dagger x, dropping components above the truncation.
template <class In, class Out>
void add_creation(const OccupationBasis& basis, int mode, cplx coef, const In& x, Out& y) {
    const auto dim = basis.dim();
    for (std::size_t f = 1; f < dim; ++f) {
        const std::int32_t lo = basis.lowered(f, mode);
        if (lo < 0) continue;
        const double amp = std::sqrt(static_cast<double>(basis.occupation(f, mode)));
        y.col(static_cast<Eigen::Index>(f)) += (coef * amp) * x.col(lo);
    }
}

/// y += b x with b = sum_i g_i a_i. One pass over the basis.
template <class In, class Out>
void add_b(const OccupationBasis& basis, std::span<const cplx> g, const In& x, Out& y) {
    const auto dim = basis.dim();
    const int n_modes = basis.num_modes();
    for (std::size_t f = 1; f < dim; ++f) {
        for (int i = 0; i < n_modes; ++i) {
            const std::int32_t lo = basis.lowered(f, i);
            if (lo < 0) continue;
            const double amp = std::sqrt(static_cast<double>(basis.occupation(f, i)));
            y.col(lo) += (g[static_cast<std::size_t>(i)] * amp) * x.col(static_cast<Eigen::Index>(f));
        }
    }
}

/// y += b^dagger x with b^dagger = sum_i conj(g_i) a_i^dagger.
template <class In, class Out>
void add_b_dagger(const OccupationBasis& basis, std::span<const cplx> g, const In& x, Out& y) {
    const auto dim = basis.dim();
    const int n_modes = basis.num_modes();
    for (std::size_t f = 1; f < dim; ++f) {
        for (int i = 0; i < n_modes; ++i) {
            const std::int32_t lo = basis.lowered(f, i);
            if (lo < 0) continue;
            const double amp = std::sqrt(static_cast<double>(basis.occupation(f, i)));
            y.col(static_cast<Eigen::Index>(f)) += (std::conj(g[static_cast<std::size_t>(i)]) * amp) * x.col(lo);
        }
    }
}

/// Diagonal sum_i w_i m_i(f) for every Fock state f.
inline std::vector<double> bath_energies(const OccupationBasis& basis, std::span<const double> omegas) {
    if (static_cast<int>(omegas.size()) != basis.num_modes()) {
        throw InvalidInput("bath_energies: frequency count does not match mode count");
    }
    std::vector<double> e(basis.dim(), 0.0);
    for (std::size_t f = 0; f < basis.dim(); ++f) {
        double s = 0.0;
        for (int i = 0; i < basis.num_modes(); ++i) {
            s += omegas[static_cast<std::size_t>(i)] * basis.occupation(f, i);
        }
        e[f] = s;
    }
    return e;
}

} // namespace ladder

namespace detail {

inline void check_mode(const JointState& s, int mode) {
    if (mode < 0 || mode >= s.basis.num_modes()) {
        throw InvalidInput("invalid mode index " + std::to_string(mode));
    }
}

inline void check_couplings(const JointState& s, std::size_t count) {
    if (static_cast<int>(count) != s.basis.num_modes()) {
        throw InvalidInput("coupling count does not match the number of bath modes");
    }
}

} // namespace detail

/// a_mode |state>. Modes are 0-based.
inline JointState apply_annihilation(const JointState& state, int mode) {
    detail::check_mode(state, mode);
    JointState out = state.zeros_like();
    auto y = out.as_matrix();
    ladder::add_annihilation(state.basis, mode, 1.0, state.as_matrix(), y);
    return out;
}

/// a_mode^dagger |state>, projected back onto total occupation <= n.
inline JointState apply_creation(const JointState& state, int mode) {
    detail::check_mode(state, mode);
    JointState out = state.zeros_like();
    auto y = out.as_matrix();
    ladder::add_creation(state.basis, mode, 1.0, state.as_matrix(), y);
    return out;
}

/// sum_i a_i^dagger a_i |state>
inline JointState apply_bath_number(const JointState& state) {
    JointState out = state.zeros_like();
    auto y = out.as_matrix();
    const auto x = state.as_matrix();
    for (std::size_t f = 0; f < state.basis.dim(); ++f) {
        double m = 0.0;
        for (int i = 0; i < state.basis.num_modes(); ++i) m += state.basis.occupation(f, i);
        y.col(static_cast<Eigen::Index>(f)) = m * x.col(static_cast<Eigen::Index>(f));
    }
    return out;
}

/// H_b |state> = sum_i w_i a_i^dagger a_i |state>
inline JointState apply_bath_energy(const JointState& state, std::span<const double> omegas) {
    const auto e = ladder::bath_energies(state.basis, omegas);
    JointState out = state.zeros_like();
    auto y = out.as_matrix();
    const auto x = state.as_matrix();
    for (std::size_t f = 0; f < e.size(); ++f) {
        y.col(static_cast<Eigen::Index>(f)) = e[f] * x.col(static_cast<Eigen::Index>(f));
    }
    return out;
}

inline JointState apply_coupling_b(const JointState& state, std::span<const cplx> g) {
    detail::check_couplings(state, g.size());
    JointState out = state.zeros_like();
    auto y = out.as_matrix();
    ladder::add_b(state.basis, g, state.as_matrix(), y);
    return out;
}

inline JointState apply_coupling_b_dagger(const JointState& state, std::span<const cplx> g) {
    detail::check_couplings(state, g.size());
    JointState out = state.zeros_like();
    auto y = out.as_matrix();
    ladder::add_b_dagger(state.basis, g, state.as_matrix(), y);
    return out;
}

inline JointState apply_coupling_b(const JointState& state, const DiscretizedBath& bath) {
    return apply_coupling_b(state, std::span<const cplx>(bath.couplings));
}

inline JointState apply_coupling_b_dagger(const JointState& state, const DiscretizedBath& bath) {
    return apply_coupling_b_dagger(state, std::span<const cplx>(bath.couplings));
}

/// <0|_b |state>: the system vector attached to the bath vacuum.
inline Vector vacuum_projection(const JointState& state) {
    return state.amplitudes.head(state.system_dim);
}

/// Reduced system density matrix Tr_b |state><state|.
inline Matrix partial_trace_bath(const JointState& state) {
    const auto x = state.as_matrix();
    return x * x.adjoint();
}

} // namespace dqt
