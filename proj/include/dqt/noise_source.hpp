#pragma once

// Complex Gaussian bath measurement outcomes z and the classical driving
// noise xi(t) = sum_i conj(g_i) z_i exp(i w_i t) they induce.

#include <cstdint>
#include <random>
#include <vector>

#include "dqt/bath_model.hpp"
#include "dqt/types.hpp"

namespace dqt {

struct NoiseSample {
    std::vector<cplx> z;
    std::uint64_t trajectory_id = 0;
    std::uint64_t master_seed = 0;

    std::size_t size() const noexcept { return z.size(); }
};

/// Per-trajectory generator. The stream depends only on (master_seed,
/// trajectory_id), never on how many trajectories ran before it.
inline std::mt19937_64 trajectory_rng(std::uint64_t master_seed, std::uint64_t trajectory_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(trajectory_id), static_cast<std::uint32_t>(trajectory_id >> 32),
                      0x64717421u};
    return std::mt19937_64(seq);
}

/// z_i = (x + i y) / sqrt(2) with x, y standard normal: E z_i z_k* = delta_ik,
/// E z_i z_k = 0.
inline NoiseSample sample_noise(std::uint64_t master_seed, std::uint64_t trajectory_id, int num_modes) {
    if (num_modes < 1) {
        throw InvalidInput("sample_noise: need at least one mode");
    }
    auto rng = trajectory_rng(master_seed, trajectory_id);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    NoiseSample s;
    s.trajectory_id = trajectory_id;
    s.master_seed = master_seed;
    s.z.resize(static_cast<std::size_t>(num_modes));
    for (auto& zi : s.z) {
        const double re = normal(rng);
        const double im = normal(rng);
        zi = {re, im};
    }
    return s;
}

/// All-zero outcome, used for deterministic checks.
inline NoiseSample zero_noise(int num_modes) {
    NoiseSample s;
    s.z.assign(static_cast<std::size_t>(num_modes), 0.0);
    return s;
}

inline cplx xi(double t, const NoiseSample& sample, const DiscretizedBath& bath) {
    if (sample.size() != bath.size()) {
        throw InvalidInput("xi: noise sample length does not match bath mode count");
    }
    cplx s = 0.0;
    for (std::size_t k = 0; k < bath.size(); ++k) {
        s += std::conj(bath.couplings[k]) * sample.z[k] * std::exp(I * (bath.omegas[k] * t));
    }
    return s;
}

} // namespace dqt
