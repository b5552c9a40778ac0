#include "dybw/config.hpp"

#include <fstream>

namespace dybw::cli {

namespace {

using nlohmann::json;

bool is_comment_key(const std::string& key) { return key.rfind("//", 0) == 0; }

std::string joined(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

void check_keys(const json& obj, const std::string& prefix,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (is_comment_key(key)) continue;
        bool known = false;
        for (const char* a : allowed) {
            if (key == a) {
                known = true;
                break;
            }
        }
        if (!known) throw ConfigError("unknown key \"" + joined(prefix, key) + "\"");
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("bad value for \"") + key + "\"");
    }
}

GraphConfig parse_graph(const json& obj) {
    check_keys(obj, "graph", {"kind", "n", "p", "seed", "edges"});
    GraphConfig g;
    const std::string kind = get_or<std::string>(obj, "kind", "random");
    if (kind == "explicit") {
        g.is_explicit = true;
        if (!obj.contains("edges")) throw ConfigError("graph.edges required for explicit graphs");
        for (const auto& e : obj.at("edges")) {
            if (!e.is_array() || e.size() != 2) {
                throw ConfigError("graph.edges entries must be [i, j] pairs");
            }
            g.edges.push_back(topology::make_edge(e[0].get<int>(), e[1].get<int>()));
        }
        g.n = get_or<int>(obj, "n", 0);
        if (g.n == 0) {
            for (const auto& [i, j] : g.edges) g.n = std::max({g.n, i + 1, j + 1});
        }
        // Construct once now so schema errors (disconnected, bad indices)
        // surface at parse time.
        try {
            topology::Graph probe(g.n, g.edges);
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    } else {
        try {
            g.kind = topology::topology_kind_from_string(kind);
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
        g.n = get_or<int>(obj, "n", 6);
        if (g.n < 2) throw ConfigError("graph.n must be >= 2");
    }
    g.edge_probability = get_or<double>(obj, "p", 0.5);
    if (obj.contains("seed") && !obj.at("seed").is_null()) {
        g.seed = obj.at("seed").get<std::uint64_t>();
    }
    return g;
}

DatasetConfig parse_dataset(const json& obj) {
    check_keys(obj, "dataset",
               {"kind", "examples", "dim", "classes", "test_examples", "seed", "images", "labels",
                "limit", "test_images", "test_labels", "test_limit", "project_dim"});
    DatasetConfig d;
    const std::string kind = get_or<std::string>(obj, "kind", "synth");
    if (kind == "idx") {
        d.use_idx = true;
        d.images = get_or<std::string>(obj, "images", "");
        d.labels = get_or<std::string>(obj, "labels", "");
        if (d.images.empty() || d.labels.empty()) {
            throw ConfigError("dataset.images and dataset.labels required for idx datasets");
        }
        d.test_images = get_or<std::string>(obj, "test_images", "");
        d.test_labels = get_or<std::string>(obj, "test_labels", "");
        d.limit = get_or<long>(obj, "limit", -1);
        d.test_limit = get_or<long>(obj, "test_limit", -1);
    } else if (kind == "synth") {
        d.examples = get_or<int>(obj, "examples", 600);
        d.dim = get_or<int>(obj, "dim", 10);
        d.classes = get_or<int>(obj, "classes", 3);
        d.test_examples = get_or<int>(obj, "test_examples", 200);
        if (d.examples < d.classes || d.classes < 2 || d.dim < 1) {
            throw ConfigError("dataset: need examples >= classes >= 2 and dim >= 1");
        }
    } else {
        throw ConfigError("dataset.kind must be synth or idx");
    }
    if (obj.contains("seed") && !obj.at("seed").is_null()) {
        d.seed = obj.at("seed").get<std::uint64_t>();
    }
    if (obj.contains("project_dim") && !obj.at("project_dim").is_null()) {
        d.project_dim = obj.at("project_dim").get<int>();
        if (*d.project_dim < 1) throw ConfigError("dataset.project_dim must be >= 1");
    }
    return d;
}

PartitionConfig parse_partition(const json& obj) {
    check_keys(obj, "partition", {"mode", "classes_per_worker"});
    PartitionConfig p;
    const std::string mode = get_or<std::string>(obj, "mode", "iid");
    if (mode == "iid") {
        p.mode = learning::PartitionMode::kIid;
    } else if (mode == "label_skew") {
        p.mode = learning::PartitionMode::kLabelSkew;
    } else {
        throw ConfigError("partition.mode must be iid or label_skew");
    }
    p.classes_per_worker = get_or<int>(obj, "classes_per_worker", 2);
    if (p.classes_per_worker < 1) throw ConfigError("partition.classes_per_worker must be >= 1");
    return p;
}

scheduler::StrategyKind strategy_kind_from_string(const std::string& s) {
    if (s == "full") return scheduler::StrategyKind::kFull;
    if (s == "static_p") return scheduler::StrategyKind::kStaticP;
    if (s == "dtur") return scheduler::StrategyKind::kDtur;
    throw ConfigError("strategy must be full, static_p or dtur");
}

StrategySpec parse_strategy(const json& node) {
    StrategySpec s;
    if (node.is_string()) {
        s.kind = strategy_kind_from_string(node.get<std::string>());
        return s;
    }
    if (!node.is_object()) throw ConfigError("strategy must be a string or an object");
    check_keys(node, "strategy", {"kind", "p"});
    s.kind = strategy_kind_from_string(get_or<std::string>(node, "kind", "dtur"));
    if (node.contains("p")) {
        const json& p = node.at("p");
        if (p.is_number_integer()) {
            s.p_scalar = p.get<int>();
            if (*s.p_scalar < 1) throw ConfigError("strategy.p must be >= 1");
        } else if (p.is_array()) {
            for (const auto& v : p) s.p.push_back(v.get<int>());
        } else {
            throw ConfigError("strategy.p must be an integer or an array");
        }
    }
    return s;
}

straggler::DelayModel parse_delay(const json& obj) {
    check_keys(obj, "delay", {"kind", "rate", "shift", "mu", "sigma", "means", "jitter"});
    straggler::DelayModel m;
    const std::string kind = get_or<std::string>(obj, "kind", "shifted_exponential");
    if (kind == "exponential") {
        m.kind = straggler::DelayKind::kExponential;
        m.rate = get_or<double>(obj, "rate", 1.0);
    } else if (kind == "shifted_exponential") {
        m.kind = straggler::DelayKind::kShiftedExponential;
        m.shift = get_or<double>(obj, "shift", 0.5);
        m.rate = get_or<double>(obj, "rate", 2.0);
    } else if (kind == "lognormal") {
        m.kind = straggler::DelayKind::kLognormal;
        m.mu = get_or<double>(obj, "mu", 0.0);
        m.sigma = get_or<double>(obj, "sigma", 0.5);
    } else if (kind == "fixed_heterogeneous") {
        m.kind = straggler::DelayKind::kFixedHeterogeneous;
        if (!obj.contains("means")) {
            throw ConfigError("delay.means required for fixed_heterogeneous");
        }
        for (const auto& v : obj.at("means")) m.means.push_back(v.get<double>());
        m.jitter = get_or<double>(obj, "jitter", 0.0);
    } else {
        throw ConfigError(
            "delay.kind must be exponential, shifted_exponential, lognormal or "
            "fixed_heterogeneous");
    }
    return m;
}

learning::LearningRateSchedule parse_eta(const json& obj) {
    check_keys(obj, "eta", {"mode", "eta0", "delta"});
    learning::LearningRateSchedule sched;
    const std::string mode = get_or<std::string>(obj, "mode", "geometric");
    if (mode == "constant") {
        sched.mode = learning::EtaMode::kConstant;
    } else if (mode == "geometric") {
        sched.mode = learning::EtaMode::kGeometric;
    } else {
        throw ConfigError("eta.mode must be constant or geometric");
    }
    sched.eta0 = get_or<double>(obj, "eta0", 0.2);
    sched.delta = get_or<double>(obj, "delta", 0.95);
    if (!(sched.eta0 > 0.0)) throw ConfigError("eta.eta0 must be > 0");
    if (!(sched.delta > 0.0 && sched.delta <= 1.0)) throw ConfigError("eta.delta must be in (0,1]");
    return sched;
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    check_keys(doc, "",
               {"seed", "replications", "k_max", "batch", "eps_target", "early_stop",
                "straggler_applies_local", "graph", "dataset", "partition", "strategy", "delay",
                "eta", "consensus_phase", "out_dir"});
    ExperimentConfig cfg;
    cfg.seed = get_or<std::uint64_t>(doc, "seed", 42);
    cfg.replications = get_or<int>(doc, "replications", 1);
    if (cfg.replications < 1) throw ConfigError("replications must be >= 1");
    cfg.k_max = get_or<long>(doc, "k_max", 500);
    if (cfg.k_max < 0) throw ConfigError("k_max must be >= 0");
    cfg.batch = get_or<int>(doc, "batch", 32);
    if (cfg.batch < 1) throw ConfigError("batch must be >= 1");
    if (doc.contains("eps_target") && !doc.at("eps_target").is_null()) {
        cfg.eps_target = doc.at("eps_target").get<double>();
    }
    cfg.early_stop = get_or<bool>(doc, "early_stop", false);
    cfg.straggler_applies_local = get_or<bool>(doc, "straggler_applies_local", false);
    if (doc.contains("graph")) cfg.graph = parse_graph(doc.at("graph"));
    if (doc.contains("dataset")) cfg.dataset = parse_dataset(doc.at("dataset"));
    if (doc.contains("partition")) cfg.partition = parse_partition(doc.at("partition"));
    if (doc.contains("strategy")) cfg.strategy = parse_strategy(doc.at("strategy"));
    if (doc.contains("delay")) cfg.delay = parse_delay(doc.at("delay"));
    if (doc.contains("eta")) cfg.eta = parse_eta(doc.at("eta"));
    if (doc.contains("consensus_phase")) {
        const json& cp = doc.at("consensus_phase");
        check_keys(cp, "consensus_phase", {"tol", "max_iters"});
        cfg.consensus_tol = get_or<double>(cp, "tol", 1e-6);
        cfg.consensus_max_iters = get_or<long>(cp, "max_iters", 500);
        if (!(cfg.consensus_tol > 0.0)) throw ConfigError("consensus_phase.tol must be > 0");
        if (cfg.consensus_max_iters < 0) {
            throw ConfigError("consensus_phase.max_iters must be >= 0");
        }
    }
    cfg.out_dir = get_or<std::string>(doc, "out_dir", "out");
    return cfg;
}

nlohmann::json load_config_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return doc;
}

ExperimentConfig parse_config_file(const std::string& path) {
    return parse_config(load_config_json(path));
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override must look like key=value: " + assignment);
    }
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::exception&) {
        value = raw;  // bare strings like strategy=full
    }
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot - start);
        if (part.empty()) throw ConfigError("bad override key: " + key);
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

std::string default_config_text() {
    return R"cfg({
  "// experiment": "deterministic base seed; replication r runs on seed + r",
  "seed": 42,
  "replications": 1,
  "k_max": 500,
  "batch": 32,
  "// eps_target": "set to a loss value to track (and with early_stop, halt at) first crossing",
  "eps_target": null,
  "early_stop": false,
  "// straggler_applies_local": "workers past the cutoff apply their local step instead of discarding it",
  "straggler_applies_local": false,

  "// graph": "kind: ring | path | complete | random | explicit (explicit takes an edges list)",
  "graph": { "kind": "random", "n": 6, "p": 0.5, "seed": null },

  "// dataset": "kind synth (gaussian clusters) or idx (images/labels file paths, optional limit)",
  "dataset": { "kind": "synth", "examples": 600, "dim": 10, "classes": 3, "test_examples": 200, "seed": null },

  "partition": { "mode": "iid", "classes_per_worker": 2 },

  "// strategy": "full | static_p | dtur; static_p takes {\"kind\": \"static_p\", \"p\": 2 or [per-worker]}",
  "strategy": "dtur",

  "// delay": "exponential(rate) | shifted_exponential(shift, rate) | lognormal(mu, sigma) | fixed_heterogeneous(means, jitter)",
  "delay": { "kind": "shifted_exponential", "shift": 0.5, "rate": 2.0 },

  "eta": { "mode": "geometric", "eta0": 0.2, "delta": 0.95 },

  "consensus_phase": { "tol": 1e-6, "max_iters": 500 },

  "out_dir": "out"
}
)cfg";
}

std::uint64_t replication_seed(const ExperimentConfig& cfg, int r) {
    return cfg.seed + static_cast<std::uint64_t>(r);
}

}  // namespace dybw::cli
