#pragma once

// Monte Carlo ensemble of dressed trajectories averaged to the reduced
// density matrix, with batch-means error bars.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "dqt/trajectory_engine.hpp"

namespace dqt {

struct EnsembleConfig {
    std::size_t trajectories = 1000;
    std::uint64_t master_seed = 1;
    int batches = 10;
    int workers = 1;
    double max_degenerate_fraction = 0.01;

    void validate() const {
        if (trajectories < 1) throw InvalidInput("EnsembleConfig: need at least one trajectory");
        if (batches < 1) throw InvalidInput("EnsembleConfig: batches must be >= 1");
        if (workers < 1) throw InvalidInput("EnsembleConfig: workers must be >= 1");
    }
};

struct EnsembleResult {
    Method method = Method::nonlinear_dressed;
    std::vector<double> times;
    std::vector<Matrix> rho_mean;
    std::vector<Eigen::MatrixXd> rho_stderr_re;
    std::vector<Eigen::MatrixXd> rho_stderr_im;
    /// <s^dagger s>(t); for the spin-boson model this is the qubit occupation.
    std::vector<double> occupation;
    std::vector<double> occupation_stderr;
    /// Mean of the unnormalized projected outer products (diagnostic for the
    /// nonlinear method, the estimator itself for the linear one).
    std::vector<Matrix> rho_projected_mean;
    std::size_t num_trajectories = 0;
    std::size_t num_degenerate = 0;
    int batches_used = 0;
};

namespace detail {

struct BatchAccumulator {
    std::vector<Matrix> estimator_sum;
    std::vector<Matrix> projected_sum;
    std::vector<double> times;
    std::size_t count = 0;
    std::size_t degenerate = 0;

    void add(const TrajectoryRecord& rec, Method method) {
        const auto& est = method == Method::nonlinear_dressed ? rec.conditional_rho : rec.projected_rho;
        if (estimator_sum.empty()) {
            times = rec.times;
            estimator_sum.assign(est.size(), Matrix::Zero(est[0].rows(), est[0].cols()));
            projected_sum = estimator_sum;
        }
        for (std::size_t k = 0; k < est.size(); ++k) {
            estimator_sum[k] += est[k];
            projected_sum[k] += rec.projected_rho[k];
        }
        ++count;
    }
};

} // namespace detail

/// Runs trajectories 0..M-1 with noise derived from (master_seed, id).
/// Batches are contiguous id ranges summed in id order and merged in batch
/// order, so the result does not depend on the worker count.
inline EnsembleResult run_ensemble(const DressedPropagator& propagator, const EnsembleConfig& cfg) {
    cfg.validate();
    const std::size_t m = cfg.trajectories;
    const auto batches = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(cfg.batches), m));
    const Method method = propagator.config().method;
    const int n_modes = static_cast<int>(propagator.bath().size());

    std::vector<detail::BatchAccumulator> acc(batches);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&]() {
        DressedPropagator local = propagator;
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= batches) return;
            const std::size_t lo = b * m / batches;
            const std::size_t hi = (b + 1) * m / batches;
            try {
                for (std::size_t id = lo; id < hi; ++id) {
                    const NoiseSample z = sample_noise(cfg.master_seed, id, n_modes);
                    const TrajectoryRecord rec = local.run(z);
                    if (rec.degenerate) {
                        ++acc[b].degenerate;
                        continue;
                    }
                    acc[b].add(rec, method);
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    const auto n_workers = static_cast<std::size_t>(std::max(1, cfg.workers));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < std::min(n_workers, batches); ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    EnsembleResult res;
    res.method = method;
    res.num_trajectories = m;
    for (const auto& a : acc) res.num_degenerate += a.degenerate;
    if (res.num_degenerate == m) {
        throw AllDegenerate("all " + std::to_string(m) + " trajectories hit a degenerate vacuum projection");
    }
    if (static_cast<double>(res.num_degenerate) > cfg.max_degenerate_fraction * static_cast<double>(m)) {
        throw TooManyDegenerate(std::to_string(res.num_degenerate) + " of " + std::to_string(m) +
                                " trajectories degenerate; outside the method's validity regime");
    }

    const detail::BatchAccumulator* first = nullptr;
    for (const auto& a : acc) {
        if (a.count > 0) {
            first = &a;
            break;
        }
    }
    const std::size_t n_times = first->times.size();
    const auto d = first->estimator_sum[0].rows();
    res.times = first->times;

    std::size_t used = 0;
    std::size_t total = 0;
    std::vector<Matrix> sum(n_times, Matrix::Zero(d, d));
    std::vector<Matrix> psum(n_times, Matrix::Zero(d, d));
    for (const auto& a : acc) {
        if (a.count == 0) continue;
        ++used;
        total += a.count;
        for (std::size_t k = 0; k < n_times; ++k) {
            sum[k] += a.estimator_sum[k];
            psum[k] += a.projected_sum[k];
        }
    }
    res.batches_used = static_cast<int>(used);

    const Matrix occ_op = propagator.model().coupling.adjoint() * propagator.model().coupling;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    res.rho_mean.resize(n_times);
    res.rho_projected_mean.resize(n_times);
    res.rho_stderr_re.resize(n_times);
    res.rho_stderr_im.resize(n_times);
    res.occupation.resize(n_times);
    res.occupation_stderr.resize(n_times);
    for (std::size_t k = 0; k < n_times; ++k) {
        res.rho_mean[k] = sum[k] / static_cast<double>(total);
        res.rho_projected_mean[k] = psum[k] / static_cast<double>(total);
        res.occupation[k] = (occ_op * res.rho_mean[k]).trace().real();

        Matrix bm_mean = Matrix::Zero(d, d);
        double occ_mean = 0.0;
        for (const auto& a : acc) {
            if (a.count == 0) continue;
            const Matrix bm = a.estimator_sum[k] / static_cast<double>(a.count);
            bm_mean += bm;
            occ_mean += (occ_op * bm).trace().real();
        }
        bm_mean /= static_cast<double>(used);
        occ_mean /= static_cast<double>(used);

        Eigen::MatrixXd var_re = Eigen::MatrixXd::Zero(d, d);
        Eigen::MatrixXd var_im = Eigen::MatrixXd::Zero(d, d);
        double occ_var = 0.0;
        for (const auto& a : acc) {
            if (a.count == 0) continue;
            const Matrix diff = a.estimator_sum[k] / static_cast<double>(a.count) - bm_mean;
            var_re += diff.real().cwiseAbs2();
            var_im += diff.imag().cwiseAbs2();
            const double od = (occ_op * (a.estimator_sum[k] / static_cast<double>(a.count))).trace().real() - occ_mean;
            occ_var += od * od;
        }
        if (used >= 2) {
            const double denom = static_cast<double>(used) * static_cast<double>(used - 1);
            res.rho_stderr_re[k] = (var_re / denom).cwiseSqrt();
            res.rho_stderr_im[k] = (var_im / denom).cwiseSqrt();
            res.occupation_stderr[k] = std::sqrt(occ_var / denom);
        } else {
            res.rho_stderr_re[k] = Eigen::MatrixXd::Constant(d, d, nan);
            res.rho_stderr_im[k] = Eigen::MatrixXd::Constant(d, d, nan);
            res.occupation_stderr[k] = nan;
        }
    }
    return res;
}

inline EnsembleResult run_ensemble(std::size_t trajectories, std::uint64_t master_seed, const SystemModel& model,
                                   const DiscretizedBath& bath, const PropagatorConfig& config, int workers = 1) {
    EnsembleConfig ec;
    ec.trajectories = trajectories;
    ec.master_seed = master_seed;
    ec.workers = workers;
    return run_ensemble(DressedPropagator(model, bath, config), ec);
}

struct PositivityReport {
    double min_eigenvalue = 0.0;
    double time_of_min = 0.0;
    std::vector<double> min_eigenvalues;
};

inline double min_eigenvalue(const Matrix& rho) {
    const Matrix herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline PositivityReport positivity_check(const std::vector<double>& times, const std::vector<Matrix>& rhos) {
    PositivityReport rep;
    rep.min_eigenvalue = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < rhos.size(); ++k) {
        const double e = min_eigenvalue(rhos[k]);
        rep.min_eigenvalues.push_back(e);
        if (e < rep.min_eigenvalue) {
            rep.min_eigenvalue = e;
            rep.time_of_min = k < times.size() ? times[k] : 0.0;
        }
    }
    return rep;
}

inline PositivityReport positivity_check(const EnsembleResult& result) {
    return positivity_check(result.times, result.rho_mean);
}

/// Worst deviations of the mean density matrices from unit trace and Hermiticity.
struct StructuralReport {
    double max_trace_error = 0.0;
    double max_hermiticity_error = 0.0;
};

inline StructuralReport structural_check(const std::vector<Matrix>& rhos) {
    StructuralReport r;
    for (const auto& rho : rhos) {
        r.max_trace_error = std::max(r.max_trace_error, std::abs(rho.trace() - 1.0));
        r.max_hermiticity_error = std::max(r.max_hermiticity_error, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
    }
    return r;
}

} // namespace dqt
