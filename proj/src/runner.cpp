#include "dybw/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <thread>

#include "json.hpp"

#include "dybw/rng.hpp"

namespace dybw::cli {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

json optional_json(const std::optional<long>& v) { return v ? json(*v) : json(nullptr); }
json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

const char* strategy_name(scheduler::StrategyKind kind) {
    switch (kind) {
        case scheduler::StrategyKind::kFull: return "full";
        case scheduler::StrategyKind::kStaticP: return "static_p";
        case scheduler::StrategyKind::kDtur: return "dtur";
    }
    return "?";
}

// Run task(0..count-1) on up to `jobs` threads; any exception is rethrown
// (lowest index wins) after all workers join.
void run_parallel(int jobs, int count, const std::function<void(int)>& task) {
    jobs = std::max(1, std::min(jobs, count));
    if (jobs <= 1) {
        for (int i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int t = 0; t < jobs; ++t) {
        pool.emplace_back([&] {
            while (true) {
                const int i = next.fetch_add(1);
                if (i >= count) break;
                try {
                    task(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

struct RepOutput {
    std::uint64_t seed = 0;
    engine::RunResult result;
    double final_loss = 0.0;
    double final_test_error = 0.0;
    std::string delays_csv;
    std::string plans_jsonl;
};

// One full replication, with optional delay/plan logging via the engine's
// iteration observer.
RepOutput run_replication(const ExperimentConfig& cfg, const Experiment& exp,
                          scheduler::StrategyKind kind, std::uint64_t rep_seed,
                          const RunOptions& opt) {
    RepOutput rep;
    rep.seed = rep_seed;
    std::vector<learning::Shard> shards =
        learning::partition(exp.train, exp.graph.n_workers(), cfg.partition.mode,
                            cfg.partition.classes_per_worker, rep_seed);
    engine::RunInputs in = make_run_inputs(cfg, exp, kind, rep_seed, shards);

    engine::IterationObserver observer;
    if (opt.log_delays) rep.delays_csv = "k,j,t\n";
    if (opt.log_delays || opt.log_plans) {
        observer = [&](const engine::IterationTrace& trace) {
            if (opt.log_delays) {
                for (int j = 0; j < static_cast<int>(trace.delays.times.size()); ++j) {
                    rep.delays_csv += std::to_string(trace.delays.iteration);
                    rep.delays_csv += ',';
                    rep.delays_csv += std::to_string(j);
                    rep.delays_csv += ',';
                    rep.delays_csv += fmt(trace.delays.times[j]);
                    rep.delays_csv += '\n';
                }
            }
            if (opt.log_plans) {
                json line;
                line["k"] = trace.plan.iteration;
                line["active_sets"] = trace.plan.active_sets;
                line["theta"] = optional_json(trace.plan.theta);
                if (trace.plan.established_edge) {
                    line["established"] = {trace.plan.established_edge->first,
                                           trace.plan.established_edge->second};
                } else {
                    line["established"] = nullptr;
                }
                rep.plans_jsonl += line.dump();
                rep.plans_jsonl += '\n';
            }
        };
    }

    rep.result = engine::run(in, observer);

    const auto& finals = rep.result.final_params;
    learning::ParamVector mean(finals[0].size(), 0.0);
    for (const auto& w : finals) {
        for (std::size_t f = 0; f < mean.size(); ++f) mean[f] += w[f];
    }
    for (double& v : mean) v /= finals.size();
    rep.final_loss = learning::global_loss(exp.train, shards, mean);
    rep.final_test_error = learning::classification_error(exp.test, mean);
    return rep;
}

json summary_json(const RepOutput& rep, scheduler::StrategyKind kind) {
    json s;
    s["seed"] = rep.seed;
    s["strategy"] = strategy_name(kind);
    s["iterations"] = rep.result.records.size();
    s["final_loss"] = rep.final_loss;
    s["final_test_error"] = rep.final_test_error;
    s["total_sim_time"] = rep.result.total_sim_time;
    s["k_eps"] = optional_json(rep.result.k_eps);
    s["time_to_eps"] = optional_json(rep.result.time_to_eps);
    s["consensus_phase_iters"] = rep.result.consensus_phase_iters;
    s["consensus_phase_disagreement"] = rep.result.consensus_phase_disagreement;
    s["consensus_phase_converged"] = rep.result.consensus_phase_converged;
    return s;
}

learning::Dataset slice_dataset(const learning::Dataset& src, int start, int count) {
    learning::Dataset out;
    out.n_examples = count;
    out.dim = src.dim;
    out.n_classes = src.n_classes;
    const auto first = static_cast<std::size_t>(start) * src.dim;
    const auto len = static_cast<std::size_t>(count) * src.dim;
    out.features.assign(src.features.begin() + first, src.features.begin() + first + len);
    out.labels.assign(src.labels.begin() + start, src.labels.begin() + start + count);
    return out;
}

std::string resolve_out_dir(const ExperimentConfig& cfg, const RunOptions& opt) {
    const std::string dir = opt.out_dir.empty() ? cfg.out_dir : opt.out_dir;
    std::filesystem::create_directories(dir);
    return dir;
}

// Metropolis built column-by-column with no consistency validation; only the
// check command's asymmetry injection hook needs this.
consensus::MixingMatrix metropolis_unchecked(const topology::Graph& g,
                                             const std::vector<std::vector<int>>& sets, long k) {
    const int n = g.n_workers();
    consensus::MixingMatrix m;
    m.iteration = k;
    m.entries = consensus::SquareMatrix(n);
    std::vector<int> p(n);
    for (int j = 0; j < n; ++j) p[j] = static_cast<int>(sets[j].size());
    for (int j = 0; j < n; ++j) {
        double col = 0.0;
        for (int i : sets[j]) {
            const double w = 1.0 / (1.0 + std::max(p[i], p[j]));
            m.entries(i, j) = w;
            col += w;
        }
        m.entries(j, j) = 1.0 - col;
    }
    return m;
}

}  // namespace

Experiment build_experiment(const ExperimentConfig& cfg) {
    const std::uint64_t graph_seed = cfg.graph.seed.value_or(cfg.seed);
    topology::Graph graph =
        cfg.graph.is_explicit
            ? topology::Graph(cfg.graph.n, cfg.graph.edges)
            : topology::generate_graph(cfg.graph.n, cfg.graph.kind, cfg.graph.edge_probability,
                                       graph_seed);

    const std::uint64_t ds_seed = cfg.dataset.seed.value_or(cfg.seed);
    learning::Dataset train, test;
    if (cfg.dataset.use_idx) {
        train = learning::load_idx(cfg.dataset.images, cfg.dataset.labels, cfg.dataset.limit);
        if (!cfg.dataset.test_images.empty()) {
            test = learning::load_idx(cfg.dataset.test_images, cfg.dataset.test_labels,
                                      cfg.dataset.test_limit);
            // The truncated test split may be missing the top classes; keep
            // the parameter dimension consistent across both sets.
            train.n_classes = test.n_classes = std::max(train.n_classes, test.n_classes);
        } else {
            test = train;
        }
    } else {
        if (cfg.dataset.test_examples > 0) {
            // Draw train and holdout as one dataset so both splits share the
            // same class centers; the generator emits examples sequentially,
            // so the train prefix is unchanged by the extra rows.
            const learning::Dataset all = learning::synth_classification(
                cfg.dataset.examples + cfg.dataset.test_examples, cfg.dataset.dim,
                cfg.dataset.classes, ds_seed);
            train = slice_dataset(all, 0, cfg.dataset.examples);
            test = slice_dataset(all, cfg.dataset.examples, cfg.dataset.test_examples);
        } else {
            train = learning::synth_classification(cfg.dataset.examples, cfg.dataset.dim,
                                                   cfg.dataset.classes, ds_seed);
            test = train;
        }
    }
    if (cfg.dataset.project_dim) {
        train = learning::random_projection(train, *cfg.dataset.project_dim, ds_seed);
        test = learning::random_projection(test, *cfg.dataset.project_dim, ds_seed);
    }
    return Experiment{std::move(graph), std::move(train), std::move(test)};
}

std::vector<int> resolve_static_p(const ExperimentConfig& cfg, const topology::Graph& g) {
    const int n = g.n_workers();
    if (!cfg.strategy.p.empty()) {
        if (static_cast<int>(cfg.strategy.p.size()) != n) {
            throw ConfigError("strategy.p must have one entry per worker");
        }
        for (int j = 0; j < n; ++j) {
            if (cfg.strategy.p[j] < 1 || cfg.strategy.p[j] > g.degree(j)) {
                throw ConfigError("strategy.p[" + std::to_string(j) +
                                  "] must be in [1, degree]");
            }
        }
        return cfg.strategy.p;
    }
    std::vector<int> p(n);
    for (int j = 0; j < n; ++j) {
        const int deg = g.degree(j);
        const int want = cfg.strategy.p_scalar ? *cfg.strategy.p_scalar : (deg + 1) / 2;
        p[j] = std::clamp(want, 1, deg);
    }
    return p;
}

engine::RunInputs make_run_inputs(const ExperimentConfig& cfg, const Experiment& exp,
                                  scheduler::StrategyKind kind, std::uint64_t rep_seed,
                                  std::vector<learning::Shard> shards) {
    engine::RunInputs in;
    in.graph = &exp.graph;
    in.train = &exp.train;
    in.test = &exp.test;
    in.shards = std::move(shards);
    in.strategy.kind = kind;
    if (kind == scheduler::StrategyKind::kStaticP) in.strategy.p = resolve_static_p(cfg, exp.graph);
    in.delay = cfg.delay;
    in.eta = cfg.eta;
    in.k_max = cfg.k_max;
    in.batch = cfg.batch;
    in.consensus_tol = cfg.consensus_tol;
    in.consensus_max_iters = cfg.consensus_max_iters;
    in.straggler_applies_local = cfg.straggler_applies_local;
    in.eps_target = cfg.eps_target;
    in.early_stop = cfg.early_stop;
    in.seed = rep_seed;
    return in;
}

std::string records_csv_text(const std::vector<engine::IterationRecord>& records) {
    std::string out = "k,loss,test_error,disagreement,duration,theta,mean_backup,max_backup\n";
    for (const auto& r : records) {
        double backup_sum = 0.0;
        int backup_max = 0;
        for (int b : r.backup_counts) {
            backup_sum += b;
            backup_max = std::max(backup_max, b);
        }
        const double backup_mean = r.backup_counts.empty() ? 0.0 : backup_sum / r.backup_counts.size();
        out += std::to_string(r.k);
        out += ',';
        out += fmt(r.global_loss);
        out += ',';
        out += fmt(r.test_error);
        out += ',';
        out += fmt(r.consensus_disagreement);
        out += ',';
        out += fmt(r.duration);
        out += ',';
        if (r.theta) out += fmt(*r.theta);
        out += ',';
        out += fmt(backup_mean);
        out += ',';
        out += std::to_string(backup_max);
        out += '\n';
    }
    return out;
}

int cmd_simulate(const ExperimentConfig& cfg, const RunOptions& opt) {
    const std::string out_dir = resolve_out_dir(cfg, opt);
    const Experiment exp = build_experiment(cfg);

    std::vector<RepOutput> reps(cfg.replications);
    run_parallel(opt.jobs, cfg.replications, [&](int r) {
        reps[r] = run_replication(cfg, exp, cfg.strategy.kind, replication_seed(cfg, r), opt);
    });

    // All writes happen here, in seed order, so output is independent of the
    // thread interleaving above.
    json merged;
    merged["replications"] = cfg.replications;
    merged["runs"] = json::array();
    double loss_sum = 0.0;
    for (const RepOutput& rep : reps) {
        const std::string tag = std::to_string(rep.seed);
        write_file(out_dir + "/records_" + tag + ".csv", records_csv_text(rep.result.records));
        const json s = summary_json(rep, cfg.strategy.kind);
        write_file(out_dir + "/summary_" + tag + ".json", s.dump(2) + "\n");
        if (opt.log_delays) write_file(out_dir + "/delays_" + tag + ".csv", rep.delays_csv);
        if (opt.log_plans) write_file(out_dir + "/plans_" + tag + ".jsonl", rep.plans_jsonl);
        merged["runs"].push_back(s);
        loss_sum += rep.final_loss;
        std::cout << "replication seed=" << rep.seed << " final_loss=" << fmt(rep.final_loss)
                  << " sim_time=" << fmt(rep.result.total_sim_time) << "\n";
    }
    merged["mean_final_loss"] = loss_sum / cfg.replications;
    write_file(out_dir + "/summary.json", merged.dump(2) + "\n");
    std::cout << "wrote " << out_dir << "/summary.json\n";
    return 0;
}

int cmd_compare(const ExperimentConfig& cfg, const RunOptions& opt) {
    const std::string out_dir = resolve_out_dir(cfg, opt);
    const Experiment exp = build_experiment(cfg);
    const scheduler::StrategyKind kinds[] = {scheduler::StrategyKind::kFull,
                                             scheduler::StrategyKind::kStaticP,
                                             scheduler::StrategyKind::kDtur};

    json strategies;
    double full_mean_duration = 0.0;
    std::printf("%-10s %16s %16s %16s\n", "strategy", "mean_duration", "ratio_vs_full",
                "final_loss");
    for (scheduler::StrategyKind kind : kinds) {
        std::vector<RepOutput> reps(cfg.replications);
        run_parallel(opt.jobs, cfg.replications, [&](int r) {
            reps[r] = run_replication(cfg, exp, kind, replication_seed(cfg, r), opt);
        });

        double duration_sum = 0.0;
        long duration_count = 0;
        double loss_sum = 0.0, dis_sum = 0.0, phase_dis_sum = 0.0;
        double keps_sum = 0.0, teps_sum = 0.0;
        int reached = 0;
        for (const RepOutput& rep : reps) {
            for (const auto& rec : rep.result.records) {
                duration_sum += rec.duration;
                ++duration_count;
            }
            loss_sum += rep.final_loss;
            if (!rep.result.records.empty()) {
                dis_sum += rep.result.records.back().consensus_disagreement;
            }
            phase_dis_sum += rep.result.consensus_phase_disagreement;
            if (rep.result.k_eps) {
                keps_sum += static_cast<double>(*rep.result.k_eps);
                teps_sum += *rep.result.time_to_eps;
                ++reached;
            }
            if (opt.log_delays) {
                write_file(out_dir + "/delays_" + std::string(strategy_name(kind)) + "_" +
                               std::to_string(rep.seed) + ".csv",
                           rep.delays_csv);
            }
        }
        const double mean_duration = duration_count ? duration_sum / duration_count : 0.0;
        if (kind == scheduler::StrategyKind::kFull) full_mean_duration = mean_duration;
        const double ratio =
            full_mean_duration > 0.0 ? mean_duration / full_mean_duration : 1.0;

        json s;
        s["mean_duration"] = mean_duration;
        s["duration_ratio_vs_full"] = ratio;
        s["reduction_vs_full"] = 1.0 - ratio;
        s["k_eps"] = reached ? json(keps_sum / reached) : json(nullptr);
        s["time_to_eps"] = reached ? json(teps_sum / reached) : json(nullptr);
        s["final_loss"] = loss_sum / cfg.replications;
        s["final_disagreement"] = dis_sum / cfg.replications;
        s["post_phase_disagreement"] = phase_dis_sum / cfg.replications;
        strategies[strategy_name(kind)] = s;
        std::printf("%-10s %16.6f %16.3f %16.6f\n", strategy_name(kind), mean_duration, ratio,
                    loss_sum / cfg.replications);
    }

    json report;
    report["replications"] = cfg.replications;
    report["eps_target"] = optional_json(cfg.eps_target);
    report["strategies"] = strategies;
    write_file(out_dir + "/comparison.json", report.dump(2) + "\n");
    std::cout << "wrote " << out_dir << "/comparison.json\n";
    return 0;
}

int cmd_check(const ExperimentConfig& cfg, const RunOptions& opt, bool inject_asymmetry) {
    ExperimentConfig checked = cfg;
    checked.strategy.kind = scheduler::StrategyKind::kDtur;
    checked.k_max = 50;
    checked.replications = 1;
    (void)resolve_out_dir(checked, opt);

    const Experiment exp = build_experiment(checked);
    const topology::CoveragePath path = topology::coverage_path(exp.graph);
    const int n = exp.graph.n_workers();
    const int d = path.length_d;

    std::vector<learning::Shard> shards =
        learning::partition(exp.train, n, checked.partition.mode,
                            checked.partition.classes_per_worker, checked.seed);
    engine::RunInputs in = make_run_inputs(checked, exp, scheduler::StrategyKind::kDtur,
                                           checked.seed, std::move(shards));

    std::vector<scheduler::ParticipationPlan> plans;
    std::vector<consensus::MixingMatrix> matrices;
    engine::run(in, [&](const engine::IterationTrace& trace) {
        plans.push_back(trace.plan);
        matrices.push_back(trace.matrix);
    });

    if (inject_asymmetry && !plans.empty()) {
        // Test hook: drop one neighbor from one side of the first plan and
        // rebuild its matrix without validation, as a buggy scheduler would.
        auto sets = plans[0].active_sets;
        for (auto& s : sets) {
            if (!s.empty()) {
                s.pop_back();
                break;
            }
        }
        matrices[0] = metropolis_unchecked(exp.graph, sets, matrices[0].iteration);
    }

    bool stochastic_ok = true, symmetric_ok = true;
    for (const auto& m : matrices) {
        stochastic_ok = stochastic_ok && consensus::is_doubly_stochastic(m.entries, 1e-12);
        symmetric_ok = symmetric_ok && consensus::is_symmetric(m.entries);
    }

    bool coverage_ok = true;
    const std::vector<topology::Edge> want(path.links.begin(), path.links.end());
    for (std::size_t start = 0; start + d <= plans.size(); start += d) {
        std::vector<topology::Edge> got;
        for (int l = 0; l < d; ++l) {
            if (plans[start + l].established_edge) got.push_back(*plans[start + l].established_edge);
        }
        std::sort(got.begin(), got.end());
        std::vector<topology::Edge> sorted_want = want;
        std::sort(sorted_want.begin(), sorted_want.end());
        coverage_ok = coverage_ok && got == sorted_want;
    }

    topology::EdgeSetSequence seq;
    for (const auto& plan : plans) seq.sets.push_back(scheduler::edge_set_of(plan));
    const bool connectivity_ok = topology::check_b_connectivity(exp.graph, seq, d);

    bool lemma_ok = true;
    consensus::ProductChain chain = consensus::chain_identity(n, 1);
    for (const auto& m : matrices) {
        chain = consensus::multiply_chain(chain, m);
        if (chain.beta < 1.0) {
            lemma_ok = lemma_ok &&
                       consensus::consensus_deviation(chain) <= consensus::lemma2_bound(chain, n, d);
        }
    }

    struct Row {
        const char* name;
        bool ok;
    };
    const Row rows[] = {{"doubly_stochastic", stochastic_ok},
                        {"symmetric", symmetric_ok},
                        {"epoch_coverage", coverage_ok},
                        {"b_connectivity", connectivity_ok},
                        {"lemma2_bound", lemma_ok}};
    bool all_ok = true;
    std::printf("%-20s %s\n", "check", "result");
    for (const Row& row : rows) {
        std::printf("%-20s %s\n", row.name, row.ok ? "PASS" : "FAIL");
        all_ok = all_ok && row.ok;
    }
    return all_ok ? 0 : 2;
}

}  // namespace dybw::cli
