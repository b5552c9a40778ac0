#include "dybw/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dybw::engine {

namespace {

bool all_finite(const learning::ParamVector& w) {
    for (double v : w) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace

double consensus_disagreement(const std::vector<learning::ParamVector>& params) {
    if (params.empty()) throw std::invalid_argument("no worker parameters");
    const std::size_t dim = params[0].size();
    std::vector<double> mean(dim, 0.0);
    for (const auto& w : params) {
        if (w.size() != dim) throw std::invalid_argument("parameter dimension mismatch");
        for (std::size_t f = 0; f < dim; ++f) mean[f] += w[f];
    }
    for (double& v : mean) v /= params.size();
    double worst = 0.0;
    for (const auto& w : params) {
        double dist2 = 0.0;
        for (std::size_t f = 0; f < dim; ++f) {
            const double diff = w[f] - mean[f];
            dist2 += diff * diff;
        }
        worst = std::max(worst, std::sqrt(dist2));
    }
    return worst;
}

learning::ParamVector local_update(const learning::Dataset& ds, WorkerState& ws, double eta,
                                   int batch) {
    if (eta < 0.0) throw std::invalid_argument("learning rate must be >= 0");
    const learning::ParamVector grad =
        learning::minibatch_gradient(ds, ws.shard, ws.params, batch, ws.stream);
    learning::ParamVector tilde = ws.params;
    for (std::size_t f = 0; f < tilde.size(); ++f) tilde[f] -= eta * grad[f];
    if (!all_finite(tilde)) {
        throw std::runtime_error("worker " + std::to_string(ws.index) +
                                 " diverged: non-finite parameters after local update");
    }
    return tilde;
}

std::vector<learning::ParamVector> consensus_update(
    const std::vector<learning::ParamVector>& tilde_params, const consensus::MixingMatrix& p) {
    const int n = p.entries.size();
    if (static_cast<int>(tilde_params.size()) != n) {
        throw std::invalid_argument("worker count does not match mixing matrix");
    }
    if (!consensus::is_doubly_stochastic(p.entries, 1e-9)) {
        throw std::invalid_argument("mixing matrix is not doubly stochastic");
    }
    const std::size_t dim = tilde_params.empty() ? 0 : tilde_params[0].size();
    for (const auto& w : tilde_params) {
        if (w.size() != dim) throw std::invalid_argument("parameter dimension mismatch");
    }
    std::vector<learning::ParamVector> out(n, learning::ParamVector(dim, 0.0));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double weight = p.entries(i, j);
            if (weight == 0.0) continue;
            const auto& src = tilde_params[i];
            auto& dst = out[j];
            for (std::size_t f = 0; f < dim; ++f) dst[f] += weight * src[f];
        }
    }
    return out;
}

ConsensusPhaseResult consensus_phase(std::vector<learning::ParamVector> params,
                                     const topology::Graph& g, double tol, long max_iters) {
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
    ConsensusPhaseResult result;
    // Full participation every round: the matrix is constant.
    const scheduler::ParticipationPlan plan = scheduler::plan_full(g, 0);
    consensus::MixingMatrix mix = consensus::build_metropolis(g, plan.active_sets, 0);
    double dis = consensus_disagreement(params);
    long iters = 0;
    while (dis > tol && iters < max_iters) {
        params = consensus_update(params, mix);
        dis = consensus_disagreement(params);
        ++iters;
    }
    result.params = std::move(params);
    result.iterations = iters;
    result.disagreement = dis;
    result.converged = dis <= tol;
    return result;
}

EvalResult evaluate(const learning::ParamVector& params, const learning::Dataset& test) {
    if (test.n_examples == 0) throw std::invalid_argument("empty dataset");
    EvalResult r;
    r.loss = learning::loss(test, params);
    r.error = learning::classification_error(test, params);
    return r;
}

RunResult run(const RunInputs& in, const IterationObserver& observer) {
    if (in.graph == nullptr || in.train == nullptr || in.test == nullptr) {
        throw std::invalid_argument("run inputs need graph, train and test");
    }
    const topology::Graph& g = *in.graph;
    const int n = g.n_workers();
    if (static_cast<int>(in.shards.size()) != n) {
        throw std::invalid_argument("need one shard per worker");
    }
    if (in.batch < 1) throw std::invalid_argument("batch must be >= 1");
    if (in.k_max < 0) throw std::invalid_argument("k_max must be >= 0");

    const std::size_t dim = static_cast<std::size_t>(in.train->dim) * in.train->n_classes;
    std::vector<WorkerState> workers(n);
    for (int j = 0; j < n; ++j) {
        workers[j].index = j;
        workers[j].params.assign(dim, 0.0);
        workers[j].shard = in.shards[j];
        workers[j].stream = rng::Stream::make(
            in.seed, {rng::kTagWorker, static_cast<std::uint64_t>(j)});
    }

    straggler::DelayModel delay = in.delay;
    delay.seed = in.seed;

    topology::CoveragePath path;
    scheduler::EpochState epoch;
    if (in.strategy.kind == scheduler::StrategyKind::kDtur) path = topology::coverage_path(g);

    RunResult result;
    result.records.reserve(in.k_max);

    std::vector<learning::ParamVector> params(n), tilde(n);
    for (int j = 0; j < n; ++j) params[j] = workers[j].params;

    for (long k = 1; k <= in.k_max; ++k) {
        const straggler::DelayDraw delays = straggler::draw(delay, k, n);

        scheduler::ParticipationPlan plan;
        switch (in.strategy.kind) {
            case scheduler::StrategyKind::kFull:
                plan = scheduler::plan_full(g, k);
                break;
            case scheduler::StrategyKind::kStaticP:
                plan = scheduler::plan_static_p(g, delays, in.strategy.p);
                break;
            case scheduler::StrategyKind::kDtur: {
                auto [p, next] = scheduler::plan_dtur(g, path, epoch, delays);
                plan = std::move(p);
                epoch = std::move(next);
                break;
            }
        }

        // The schedule is indexed so the very first step uses eta0.
        const double eta = learning::eta_at(in.eta, k - 1);
        for (int j = 0; j < n; ++j) {
            workers[j].params = params[j];
            if (!plan.active_sets[j].empty() || in.straggler_applies_local) {
                tilde[j] = local_update(*in.train, workers[j], eta, in.batch);
            } else {
                // Missed the cutoff: the half-finished gradient is abandoned
                // and the worker carries last iteration's parameters.
                tilde[j] = params[j];
            }
        }

        const consensus::MixingMatrix mix =
            consensus::build_metropolis(g, plan.active_sets, k);
        params = consensus_update(tilde, mix);

        if (observer) observer(IterationTrace{plan, mix, delays, params});

        IterationRecord rec;
        rec.k = k;
        rec.duration = straggler::duration_partial(delays, plan);
        rec.theta = plan.theta;
        rec.backup_counts.resize(n);
        for (int j = 0; j < n; ++j) {
            rec.backup_counts[j] = g.degree(j) - static_cast<int>(plan.active_sets[j].size());
        }

        std::vector<double> mean(dim, 0.0);
        for (int j = 0; j < n; ++j) {
            for (std::size_t f = 0; f < dim; ++f) mean[f] += params[j][f];
        }
        for (double& v : mean) v /= n;
        rec.global_loss = learning::global_loss(*in.train, in.shards, mean);
        rec.test_error = learning::classification_error(*in.test, mean);
        rec.consensus_disagreement = consensus_disagreement(params);

        result.total_sim_time += rec.duration;
        if (in.eps_target && !result.k_eps && rec.global_loss <= *in.eps_target) {
            result.k_eps = k;
            result.time_to_eps = result.total_sim_time;
        }
        result.records.push_back(std::move(rec));

        if (in.early_stop && result.k_eps) break;
    }

    ConsensusPhaseResult phase =
        consensus_phase(std::move(params), g, in.consensus_tol, in.consensus_max_iters);
    result.final_params = std::move(phase.params);
    result.consensus_phase_iters = phase.iterations;
    result.consensus_phase_disagreement = phase.disagreement;
    result.consensus_phase_converged = phase.converged;
    return result;
}

}  // namespace dybw::engine
