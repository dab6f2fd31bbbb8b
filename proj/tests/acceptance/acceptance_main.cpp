// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// DQT_FULL_FIG1=1 turns on the long N=20 / K=8 comparison in AC5.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dqt/cli.hpp"
#include "dqt/ed_oracle.hpp"
#include "dqt/ensemble_driver.hpp"

using namespace dqt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// every nonlinear ensemble produced below, for AC8
std::vector<std::pair<std::string, EnsembleResult>> ensemble_log;

EnsembleResult logged(const std::string& tag, EnsembleResult r) {
    if (r.method == Method::nonlinear_dressed) ensemble_log.emplace_back(tag, r);
    return r;
}

SystemModel fig1_qubit() { return make_spin_boson(1.0, 0.1, 1.0, qubit::basis_state(qubit::ground)); }

// chain weights pi/(N+1): the modes are then the exact normal modes of an
// N-site hopping chain, which is the bath the figures describe
DiscretizedBath fig1_bath(int modes) { return discretize_semicircle_chain(1.0, 0.05, modes, WeightRule::chain); }

Vector random_vector(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Vector v(n);
    for (Eigen::Index k = 0; k < n; ++k) v(k) = cplx(nd(rng), nd(rng));
    return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double w = 0.0;
    for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) w = std::max(w, std::abs(a[k] - b[k]));
    return w;
}

double mean_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
    return s / static_cast<double>(a.size());
}

// ---- AC1 ----------------------------------------------------------------

Outcome ac1() {
    Outcome o;
    std::mt19937_64 rng(101);
    double worst_adj = 0.0, worst_comm = 0.0, worst_lin = 0.0, worst_pars = 0.0;
    std::size_t states = 0;
    for (int modes = 1; modes <= 6; ++modes) {
        for (int n = 0; n <= 6; ++n) {
            const OccupationBasis b(modes, n);
            // rank/unrank are mutually inverse, graded, and count C(N+n, n)
            double count = 1.0;
            for (int k = 1; k <= n; ++k) count = count * (modes + k) / k;
            if (static_cast<double>(b.dim()) != std::round(count)) {
                o.pass = false;
                o.detail += fmt(" dim(N=%d,n=%d)", modes, n);
            }
            int prev_total = 0;
            for (std::size_t f = 0; f < b.dim(); ++f) {
                const auto occ = b.unrank(f);
                int total = 0;
                for (int m : occ) total += m;
                if (b.rank(occ) != f || total < prev_total || total > n) {
                    o.pass = false;
                    o.detail += fmt(" rank(N=%d,n=%d,f=%zu)", modes, n, f);
                    break;
                }
                prev_total = total;
            }
            states += b.dim();

            JointState psi(b, 2), chi(b, 2);
            psi.amplitudes = random_vector(psi.dim(), rng);
            chi.amplitudes = random_vector(chi.dim(), rng);
            JointState below = psi.zeros_like();
            const auto cut = static_cast<Eigen::Index>(b.grade_offset(n)) * 2;
            below.amplitudes.head(cut) = psi.amplitudes.head(cut);
            const double p2 = below.norm2();
            const cplx alpha(0.3, -1.2), beta(-0.7, 0.4);
            JointState comb = psi.zeros_like();
            comb.amplitudes = alpha * psi.amplitudes + beta * chi.amplitudes;

            for (int i = 0; i < modes; ++i) {
                const JointState up = apply_creation(psi, i);
                const JointState down_chi = apply_annihilation(chi, i);
                const cplx lhs = chi.amplitudes.dot(up.amplitudes);
                const cplx rhs = down_chi.amplitudes.dot(psi.amplitudes);
                worst_adj = std::max(worst_adj, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));

                // below the cutoff [a, a^dagger] = 1; the top grade only sees -a^dagger a
                double top_number = 0.0;
                for (std::size_t f = b.grade_offset(n); f < b.dim(); ++f) {
                    const auto fi = static_cast<Eigen::Index>(f);
                    top_number += b.occupation(f, i) * psi.amplitudes.segment(2 * fi, 2).squaredNorm();
                }
                const double aad = up.norm2(), ada = apply_annihilation(psi, i).norm2();
                worst_comm = std::max(worst_comm, std::abs((aad - ada) - (p2 - top_number)) / (1.0 + aad));
                const double pc = apply_creation(below, i).norm2() - apply_annihilation(below, i).norm2();
                worst_comm = std::max(worst_comm, std::abs(pc - p2) / (1.0 + p2));
                // distinct modes commute below the cutoff
                for (int j = 0; j < modes && n >= 1; ++j) {
                    if (j == i) continue;
                    const Vector c1 = apply_annihilation(apply_creation(below, j), i).amplitudes;
                    const Vector c2 = apply_creation(apply_annihilation(below, i), j).amplitudes;
                    worst_comm = std::max(worst_comm, (c1 - c2).norm() / (1.0 + c1.norm()));
                }

                const Vector want = alpha * up.amplitudes + beta * apply_creation(chi, i).amplitudes;
                worst_lin = std::max(worst_lin, (apply_creation(comb, i).amplitudes - want).norm() / (1.0 + want.norm()));
                const Vector want2 =
                    alpha * apply_annihilation(psi, i).amplitudes + beta * down_chi.amplitudes;
                worst_lin =
                    std::max(worst_lin, (apply_annihilation(comb, i).amplitudes - want2).norm() / (1.0 + want2.norm()));
            }
            const Vector v = vacuum_projection(psi);
            const double rest = psi.amplitudes.tail(psi.dim() - 2).squaredNorm();
            worst_pars = std::max(worst_pars, std::abs(v.squaredNorm() + rest - psi.norm2()) / psi.norm2());
            const double tr = partial_trace_bath(psi).trace().real();
            worst_pars = std::max(worst_pars, std::abs(tr - psi.norm2()) / psi.norm2());
        }
    }
    const bool ok = worst_adj < 1e-12 && worst_comm < 1e-10 && worst_lin < 1e-12 && worst_pars < 1e-12;
    o.pass = o.pass && ok;
    o.detail = fmt("%zu basis states; adjoint %.1e commutator %.1e linearity %.1e parseval %.1e", states, worst_adj,
                   worst_comm, worst_lin, worst_pars) +
               o.detail;
    return o;
}

// ---- AC2 ----------------------------------------------------------------

Outcome ac2() {
    const double g = 0.1;
    const double period = std::numbers::pi / g;
    const SystemModel jc = make_spin_boson(1.0, 0.0, 1.0, qubit::basis_state(qubit::excited));
    const DiscretizedBath mode({1.0}, {1.0}, {cplx(g)});

    EDConfig ec;
    ec.excitation_cutoff = 1;
    ec.dt = 1e-2 * period;
    ec.t_max = period;
    const auto ed = propagate_ed(jc.initial_state, ec, jc, mode);
    double ed_err = 0.0;
    for (std::size_t k = 0; k < ed.times.size(); ++k) {
        ed_err = std::max(ed_err, std::abs(ed.occupation[k] - std::pow(std::cos(g * ed.times[k]), 2)));
    }

    PropagatorConfig pc;
    pc.dt = 1e-3 * period;
    pc.t_max = period;
    pc.truncation = 1;
    // the vacuum block passes through zero at half period, sbar is 0 there anyway
    pc.projection_floor = 1e-300;
    const auto rec = DressedPropagator(jc, mode, pc).run(zero_noise(1));
    double tr_err = 0.0;
    for (std::size_t k = 0; k < rec.times.size(); ++k) {
        tr_err = std::max(tr_err, std::abs(rec.projected_rho[k](1, 1).real() - std::pow(std::cos(g * rec.times[k]), 2)));
    }
    Outcome o;
    o.pass = !rec.degenerate && ed_err < 1e-5 && tr_err < 1e-5;
    o.detail = fmt("max |P_e - cos^2(gt)|: ed %.2e, trajectory %.2e (bound 1e-5)", ed_err, tr_err);
    return o;
}

// ---- AC3 ----------------------------------------------------------------

Outcome ac3() {
    const auto bath = fig1_bath(20);
    const int n_modes = 20;
    const int m = 100000;
    std::mt19937_64 pick(303);
    std::uniform_real_distribution<double> u(0.0, 180.0);
    std::vector<std::pair<double, double>> pairs{{0.0, 0.0}, {50.0, 50.0}};
    while (pairs.size() < 20) pairs.emplace_back(u(pick), u(pick));

    std::vector<double> times;
    for (const auto& [a, b] : pairs) {
        times.push_back(a);
        times.push_back(b);
    }
    std::vector<cplx> acc(pairs.size(), 0.0), xs(times.size());
    for (int id = 0; id < m; ++id) {
        const auto s = sample_noise(17, static_cast<std::uint64_t>(id), n_modes);
        for (std::size_t k = 0; k < times.size(); ++k) xs[k] = xi(times[k], s, bath);
        for (std::size_t p = 0; p < pairs.size(); ++p) acc[p] += xs[2 * p] * std::conj(xs[2 * p + 1]);
    }
    const double m0 = memory_kernel(bath, 0.0).real();
    const double bound = 5.0 / std::sqrt(static_cast<double>(m));
    double worst = 0.0, worst_literal = 0.0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const cplx est = acc[p] / static_cast<double>(m);
        // sum_i |g_i|^2 exp(i w_i (t - t')) = M(t' - t) = conj(M(t - t'))
        const double tau = pairs[p].second - pairs[p].first;
        worst = std::max(worst, std::abs(est - memory_kernel(bath, tau)) / m0);
        worst_literal = std::max(worst_literal, std::abs(est - std::conj(memory_kernel(bath, tau))) / m0);
    }
    Outcome o;
    o.pass = worst < bound;
    o.detail = fmt("max |E[xi(t) xi*(t')] - M(t'-t)| / M(0) = %.2e over 20 pairs, bound 5/sqrt(M) = %.2e "
                   "(against conj(M(t'-t)): %.2e)",
                   worst, bound, worst_literal);
    return o;
}

// ---- AC4 ----------------------------------------------------------------

struct Fig1Scaled {
    SystemModel model = fig1_qubit();
    DiscretizedBath bath = fig1_bath(8);
    double t_max = 60.0, dt = 0.05;
    int stride = 10;

    PropagatorConfig config(int n) const {
        PropagatorConfig c;
        c.dt = dt;
        c.t_max = t_max;
        c.truncation = n;
        c.record_stride = stride;
        return c;
    }
};

Outcome ac4() {
    const Fig1Scaled s;
    Outcome o;

    // ED cutoff: scan K upward; K is admissible once K vs K-1 differ < 1e-3
    std::vector<EDResult> eds;
    int chosen = -1;
    std::string scan;
    for (int k = 0; k <= 6; ++k) {
        EDConfig ec;
        ec.excitation_cutoff = k;
        ec.dt = s.dt;
        ec.t_max = s.t_max;
        ec.record_stride = s.stride;
        eds.push_back(propagate_ed(s.model.initial_state, ec, s.model, s.bath));
        if (k == 0) continue;
        const double d = max_abs_diff(eds[k].occupation, eds[k - 1].occupation);
        scan += fmt(" K%d-K%d=%.1e", k, k - 1, d);
        if (d < 1e-3 && chosen < 0) chosen = k;
    }
    if (chosen < 0) {
        o.pass = false;
        o.detail = "no scanned ED cutoff met the 1e-3 rule;" + scan;
        return o;
    }
    // the reference is the largest scanned cutoff, which also meets the rule
    const EDResult& ed = eds.back();

    const std::uint64_t seed = 2024;
    const auto n2 = logged("AC4 n=2", run_ensemble(2000, seed, s.model, s.bath, s.config(2)));
    double worst_ratio = 0.0, worst_dev = 0.0;
    for (std::size_t k = 0; k < n2.times.size(); ++k) {
        const double dev = std::abs(n2.occupation[k] - ed.occupation[k]);
        const double tol = std::max(0.02, 3.0 * n2.occupation_stderr[k]);
        worst_ratio = std::max(worst_ratio, dev / tol);
        worst_dev = std::max(worst_dev, dev);
    }
    const bool pointwise = worst_ratio <= 1.0;

    // truncation comparison on the time-averaged |deviation| from ED
    const auto n0 = logged("AC4 n=0", run_ensemble(2000, seed, s.model, s.bath, s.config(0)));
    const double dev2 = mean_abs_diff(n2.occupation, ed.occupation);
    const double dev0 = mean_abs_diff(n0.occupation, ed.occupation);
    const bool ratio_ok = dev0 >= 5.0 * dev2;

    o.pass = pointwise && ratio_ok;
    o.detail = fmt("ED K=%d admissible, reference K=%d;", chosen, static_cast<int>(eds.size()) - 1) + scan +
               fmt("; n=2 M=2000 max|dev| %.4f, worst dev/max(0.02,3se) %.2f %s", worst_dev, worst_ratio,
                   pointwise ? "ok" : "FAIL") +
               fmt("; mean|dev| n=0 %.5f n=2 %.5f ratio %.1f (need >= 5) %s", dev0, dev2, dev0 / dev2,
                   ratio_ok ? "ok" : "FAIL");
    return o;
}

// ---- AC5 ----------------------------------------------------------------

Outcome ac5() {
    const auto model = fig1_qubit();
    const auto bath = fig1_bath(20);
    const bool full = [] {
        const char* v = std::getenv("DQT_FULL_FIG1");
        return v && std::string(v) == "1";
    }();
    const auto ck = fs::temp_directory_path() / "dqt_acceptance_fig1_ed.txt";
    fs::remove(ck);

    EDConfig ec;
    ec.excitation_cutoff = 8;
    ec.t_max = 180.0;
    ec.record_stride = 20;
    ec.checkpoint_path = ck.string();
    ec.checkpoint_interval = full ? 5.0 : 0.05;
    if (!full) ec.wall_clock_limit = 20.0;
    const auto ed = propagate_ed(model.initial_state, ec, model, bath);

    std::ifstream in(ck);
    std::string head;
    std::getline(in, head);
    const bool checkpointed = head.rfind("# ed progress: t_reached=", 0) == 0 && ed.t_reached > 0.0;
    const std::size_t dim = 2 * OccupationBasis(20, 8).dim();

    Outcome o;
    if (!full) {
        o.pass = checkpointed;
        o.detail = fmt("launch only: ED K=8 N=20 (dim %zu) reached t=%.2f of 180 in 20 s, checkpoint %s; ", dim,
                       ed.t_reached, checkpointed ? "written" : "MISSING") +
                   "the full comparison runs with DQT_FULL_FIG1=1";
        return o;
    }
    std::string detail = fmt("ED K=%d dim %zu internal dt %.4g completed %d;", 8, dim, ed.internal_dt,
                             static_cast<int>(ed.completed));
    bool ok = checkpointed && ed.completed;
    for (int n : {0, 1, 2}) {
        PropagatorConfig pc;
        pc.t_max = 180.0;
        pc.truncation = n;
        pc.record_stride = 20;
        const auto r = logged(fmt("AC5 n=%d", n), run_ensemble(1000, 5, model, bath, pc));
        const double dev = max_abs_diff(r.occupation, ed.occupation);
        detail += fmt(" n=%d max|dev| %.4f", n, dev);
        if (n == 2) ok = ok && dev < 0.03;
    }
    o.pass = ok;
    o.detail = detail + " (n=2 bound 0.03)";
    return o;
}

// ---- AC6 ----------------------------------------------------------------

struct Departure {
    double plateau = 0.0;
    double onset = -1.0;  // < 0: none
};

// first time t >= 300 that starts a run of `span` consecutive records all
// more than 3 stderr away from the [150, 300] plateau mean
Departure sustained_departure(const EnsembleResult& r, std::size_t span) {
    Departure d;
    double sum = 0.0;
    int count = 0;
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        if (r.times[k] >= 150.0 && r.times[k] <= 300.0) {
            sum += r.occupation[k];
            ++count;
        }
    }
    d.plateau = sum / count;
    std::size_t run = 0;
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        if (r.times[k] < 300.0) continue;
        const bool off = std::abs(r.occupation[k] - d.plateau) > 3.0 * r.occupation_stderr[k];
        run = off ? run + 1 : 0;
        if (run == span) {
            d.onset = r.times[k + 1 - span];
            break;
        }
    }
    return d;
}

Outcome ac6() {
    const auto model = fig1_qubit();
    const auto bath = fig1_bath(20);
    auto config = [](int n) {
        PropagatorConfig pc;
        pc.t_max = 600.0;
        pc.truncation = n;
        pc.record_stride = 20;  // one record per unit time
        return pc;
    };
    const std::size_t span = 20;  // sustained: 20 time units in a row
    const auto n1 = logged("AC6 n=1", run_ensemble(500, 6, model, bath, config(1)));
    const auto n0 = logged("AC6 n=0", run_ensemble(500, 6, model, bath, config(0)));
    const Departure d1 = sustained_departure(n1, span);
    const Departure d0 = sustained_departure(n0, span);
    Outcome o;
    o.pass = d1.onset >= 300.0 && d1.onset <= 500.0 && d0.onset < 0.0;
    auto onset = [](const Departure& d) { return d.onset < 0.0 ? std::string("none") : fmt("t=%.0f", d.onset); };
    o.detail = fmt("n=1 plateau %.4f, departure onset %s (window [300, 500]); n=0 plateau %.4f, departure %s "
                   "(want none)",
                   d1.plateau, onset(d1).c_str(), d0.plateau, onset(d0).c_str());
    return o;
}

// ---- AC7 ----------------------------------------------------------------

Outcome ac7() {
    const auto model = fig1_qubit();
    const auto bath = fig1_bath(4);
    PropagatorConfig pc;
    pc.t_max = 20.0;
    pc.truncation = 2;
    pc.record_stride = 20;
    const auto nl = logged("AC7 nonlinear", run_ensemble(5000, 7, model, bath, pc));
    pc.method = Method::linear_dressed;
    const auto li = run_ensemble(5000, 7, model, bath, pc);
    double worst = 0.0;
    std::size_t checked = 0;
    for (std::size_t k = 0; k < nl.times.size(); ++k) {
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                const double se_re = std::hypot(nl.rho_stderr_re[k](i, j), li.rho_stderr_re[k](i, j));
                const double se_im = std::hypot(nl.rho_stderr_im[k](i, j), li.rho_stderr_im[k](i, j));
                const double dre = std::abs(nl.rho_mean[k](i, j).real() - li.rho_mean[k](i, j).real());
                const double dim = std::abs(nl.rho_mean[k](i, j).imag() - li.rho_mean[k](i, j).imag());
                // entries that vanish identically in both (t = 0, Im of the diagonal) have zero stderr
                if (se_re > 0.0) worst = std::max(worst, dre / se_re);
                else if (dre > 1e-14) worst = std::max(worst, 1e300);
                if (se_im > 0.0) worst = std::max(worst, dim / se_im);
                else if (dim > 1e-14) worst = std::max(worst, 1e300);
                checked += 2;
            }
        }
    }
    Outcome o;
    o.pass = worst <= 3.0;
    o.detail = fmt("%zu real components over t <= 20, worst |linear - nonlinear| / combined stderr %.2f (bound 3)",
                   checked, worst);
    return o;
}

// ---- AC8 ----------------------------------------------------------------

Outcome ac8() {
    Outcome o;
    double tr = 0.0, herm = 0.0, mineig = std::numeric_limits<double>::infinity();
    for (const auto& [tag, r] : ensemble_log) {
        const auto s = structural_check(r.rho_mean);
        tr = std::max(tr, s.max_trace_error);
        herm = std::max(herm, s.max_hermiticity_error);
        mineig = std::min(mineig, positivity_check(r).min_eigenvalue);
    }
    const bool structural = tr <= 1e-10 && herm <= 1e-12 && mineig >= -1e-12;

    // two CLI runs from the same config and seed, with different worker
    // counts, must produce byte-identical data sections (the header echoes
    // workers and output path, so it legitimately differs)
    const auto dir = fs::temp_directory_path() / "dqt_acceptance";
    fs::create_directories(dir);
    const auto cfg = dir / "rerun.json";
    std::ofstream(cfg) << R"({"bath": {"kind": "semicircle_chain", "eps0": 1.0, "h": 0.05, "N": 8},
        "method": {"truncation": 2, "t_max": 30.0, "record_stride": 10},
        "ensemble": {"trajectories": 100, "seed": 8}})";
    auto run = [&](const fs::path& out, const char* workers) {
        const std::string c = cfg.string(), p = out.string();
        const char* argv[] = {"dqt_sim", "--config", c.c_str(), "--output", p.c_str(), "--workers", workers};
        std::ostringstream so, se;
        return cli_main(7, argv, so, se);
    };
    const auto a = dir / "a.dat", b = dir / "b.dat";
    const bool ran = run(a, "1") == exit_ok && run(b, "2") == exit_ok;
    auto data_section = [](const fs::path& p) {
        std::istringstream in(read_file(p.string()));
        std::string line, data;
        while (std::getline(in, line)) {
            if (!line.empty() && line[0] != '#') data += line + '\n';
        }
        return data;
    };
    const bool identical = ran && !data_section(a).empty() && data_section(a) == data_section(b);
    // a third run regenerated from the results file itself
    const auto c = dir / "c.dat";
    bool regen = false;
    if (ran) {
        const std::string src = a.string(), p = c.string();
        const char* argv[] = {"dqt_sim", "--config", src.c_str(), "--output", p.c_str()};
        std::ostringstream so, se;
        regen = cli_main(5, argv, so, se) == exit_ok &&
                read_results(c.string()).rows == read_results(a.string()).rows;
    }
    o.pass = structural && identical && regen;
    o.detail = fmt("%zu nonlinear ensembles: max|Tr-1| %.1e, max Hermiticity %.1e, min eigenvalue %.2e; ",
                   ensemble_log.size(), tr, herm, mineig) +
               "rerun data sections " + (identical ? "byte-identical" : "DIFFER") + ", regenerated from results file " +
               (regen ? "identical" : "DIFFER");
    return o;
}

// ---- AC9 ----------------------------------------------------------------

Outcome ac9() {
    const auto model = fig1_qubit();
    const DiscretizedBath off({1.0}, {1.0}, {0.0});
    auto final_block = [&](double dt) {
        PropagatorConfig cfg;
        cfg.dt = dt;
        cfg.t_max = 10.0;
        cfg.truncation = 1;
        const DressedPropagator prop(model, off, cfg);
        auto st = prop.begin(zero_noise(1));
        while (st.step < cfg.num_steps()) prop.step(st);
        return Vector(vacuum_projection(st.psi));
    };
    const Vector ref = final_block(0.2 / 16);
    std::vector<double> errs;
    std::string detail = "errors";
    for (double dt : {0.2, 0.1, 0.05}) {
        errs.push_back((final_block(dt) - ref).norm());
        detail += fmt(" dt=%.2f:%.2e", dt, errs.back());
    }
    const double s1 = std::log2(errs[0] / errs[1]), s2 = std::log2(errs[1] / errs[2]);
    Outcome o;
    o.pass = s1 >= 3.8 && s2 >= 3.8;
    o.detail = detail + fmt("; slopes %.2f %.2f (need >= 3.8)", s1, s2);
    return o;
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
        double time_limit;  // seconds, 0 = none
    };
    const std::vector<Criterion> all{
        {"AC1", ac1, 10.0}, {"AC2", ac2, 10.0}, {"AC3", ac3, 60.0}, {"AC4", ac4, 0.0}, {"AC5", ac5, 0.0},
        {"AC6", ac6, 0.0},  {"AC7", ac7, 300.0}, {"AC8", ac8, 0.0}, {"AC9", ac9, 0.0},
    };
    int failures = 0;
    for (const auto& c : all) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.time_limit > 0.0 && secs > c.time_limit) {
            o.pass = false;
            o.detail += fmt("; runtime %.1f s over the %.0f s limit", secs, c.time_limit);
        }
        std::printf("%s %s %s [%.1f s]\n", c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failures, all.size());
    return failures == 0 ? 0 : 1;
}
