#include "etrack/simharness.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

namespace etrack::sim {

namespace {

// Pairwise summation over a fixed order; the result depends only on the values.
double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s += x[i];
        }
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

kinematics::GaussianState initial_kinematics(const ScenarioConfig& cfg, const TruthStep& truth,
                                             const EstimatorConfig& est, const Eigen::VectorXd& perturbation) {
    const Eigen::Index n = est.state_dim();
    Eigen::VectorXd stds(5);
    const double turn_std = cfg.init.turn_rate_std_deg * std::numbers::pi / 180.0;
    stds << cfg.init.position_std, cfg.init.position_std, cfg.init.velocity_std, cfg.init.velocity_std, turn_std;
    Eigen::VectorXd mean = truth.kinematic(n);
    if (!cfg.noise_free) {
        mean += stds.head(n).cwiseProduct(perturbation.head(n));
    }
    return {mean, stds.head(n).cwiseAbs2().asDiagonal()};
}

bool finite_state(const Estimate& e) {
    const int d = e.extent.dim();
    return e.kin.mean.allFinite() && e.kin.cov.allFinite() && std::isfinite(e.extent.nu) &&
           e.extent.nu > 2.0 * d + 2.0 && e.extent.v_mat.matrix().allFinite();
}

}  // namespace

std::vector<RunTrace> run_single(const ScenarioConfig& cfg, const GroundTruth& truth, int run) {
    Rng rng = make_stream(cfg.master_seed, static_cast<std::uint64_t>(run));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd perturbation(5);
    for (Eigen::Index i = 0; i < 5; ++i) {
        perturbation(i) = normal(rng);
    }
    const Eigen::Matrix2d r = cfg.noise_free ? Eigen::Matrix2d::Zero() : cfg.r;
    const int exact_count = std::max(3, static_cast<int>(std::lround(cfg.poisson_mean)));
    std::vector<correction::MeasurementSet> scans;
    scans.reserve(truth.steps.size());
    for (const auto& step : truth.steps) {
        scans.push_back(cfg.noise_free ? generate_exact_measurements(step, exact_count)
                                       : generate_measurements(rng, step, r, cfg.poisson_mean));
    }

    const correction::SensorModel sensor{kinematics::position_selector(4), r, cfg.lambda};
    std::vector<RunTrace> traces;
    traces.reserve(cfg.estimators.size());
    for (const auto& est_cfg : cfg.estimators) {
        RunTrace trace;
        try {
            correction::SensorModel s = sensor;
            s.h = kinematics::position_selector(est_cfg.state_dim());
            Tracker tracker(est_cfg, cfg.dt, s);
            const TruthStep& first = truth.steps.front();
            const double scale = cfg.init.nu - 2.0 * 2 - 2.0;
            tracker.initialize(initial_kinematics(cfg, first, est_cfg, perturbation),
                               extent::ExtentState{cfg.init.nu, SpdMatrix(scale * first.extent)});
            trace.steps.reserve(truth.steps.size());
            for (std::size_t k = 0; k < truth.steps.size(); ++k) {
                if (k > 0) {
                    tracker.predict();
                }
                tracker.correct(scans[k]);
                const Estimate e = tracker.estimate();
                if (!finite_state(e)) {
                    throw DomainError("estimate left the admissible region");
                }
                const TruthStep& t = truth.steps[k];
                StepMetrics m;
                m.gw = gw_distance(t.position, t.extent, e.kin, e.extent);
                m.anees_x = nees_kinematic(e.kin, t.kinematic(est_cfg.state_dim()));
                m.anees_ext = nees_extent(e.extent, t.extent);
                m.nu = e.extent.nu;
                m.logdet_v = e.extent.v_mat.logdet();
                trace.steps.push_back(m);
            }
        } catch (const std::domain_error& err) {
            trace.steps.clear();
            trace.diverged = true;
            trace.message = err.what();
        }
        traces.push_back(std::move(trace));
    }
    return traces;
}

MetricsReport run_monte_carlo(const ScenarioConfig& cfg, unsigned threads) {
    cfg.validate();
    const GroundTruth truth = generate_truth(cfg);
    const int n_runs = cfg.n_runs;
    std::vector<std::vector<RunTrace>> results(static_cast<std::size_t>(n_runs));

    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = std::min<unsigned>(threads, static_cast<unsigned>(n_runs));
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
        for (int run = next.fetch_add(1); run < n_runs; run = next.fetch_add(1)) {
            try {
                results[static_cast<std::size_t>(run)] = run_single(cfg, truth, run);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    MetricsReport report;
    report.scenario = cfg.name;
    report.n_runs = n_runs;
    report.n_steps = static_cast<int>(truth.steps.size());
    const auto n_steps = truth.steps.size();
    for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
        EstimatorReport er;
        er.name = cfg.estimators[e].name;
        std::vector<const RunTrace*> valid;
        for (int run = 0; run < n_runs; ++run) {
            const RunTrace& tr = results[static_cast<std::size_t>(run)][e];
            if (tr.diverged) {
                ++er.diverged_runs;
                er.divergence_messages.push_back(tr.message);
            } else {
                valid.push_back(&tr);
            }
        }
        er.valid_runs = static_cast<int>(valid.size());
        er.steps.resize(n_steps);
        if (!valid.empty()) {
            std::vector<double> buf(valid.size());
            const double inv = 1.0 / static_cast<double>(valid.size());
            auto mean_of = [&](std::size_t k, auto field) {
                for (std::size_t i = 0; i < valid.size(); ++i) {
                    buf[i] = field(valid[i]->steps[k]);
                }
                return pairwise_sum(buf.data(), buf.size()) * inv;
            };
            for (std::size_t k = 0; k < n_steps; ++k) {
                StepMetrics& m = er.steps[k];
                m.gw = std::sqrt(mean_of(k, [](const StepMetrics& s) { return s.gw * s.gw; }));
                m.anees_x = mean_of(k, [](const StepMetrics& s) { return s.anees_x; });
                m.anees_ext = mean_of(k, [](const StepMetrics& s) { return s.anees_ext; });
                m.nu = mean_of(k, [](const StepMetrics& s) { return s.nu; });
                m.logdet_v = mean_of(k, [](const StepMetrics& s) { return s.logdet_v; });
            }
        }
        report.estimators.push_back(std::move(er));
    }
    return report;
}

}  // namespace etrack::sim
