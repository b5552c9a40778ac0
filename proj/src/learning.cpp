#include "dybw/learning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace dybw::learning {

namespace {

void check_param_dim(const Dataset& ds, const ParamVector& w) {
    const std::size_t want = static_cast<std::size_t>(ds.dim) * ds.n_classes;
    if (w.size() != want) {
        throw std::invalid_argument("parameter dimension mismatch: expected " +
                                    std::to_string(want) + ", got " + std::to_string(w.size()));
    }
}

// Per-example softmax probabilities with the usual max-shift for stability.
void softmax_probs(const Dataset& ds, const ParamVector& w, int l, std::vector<double>& probs) {
    const int c_count = ds.n_classes;
    const double* x = ds.example(l);
    double max_logit = -1e300;
    for (int c = 0; c < c_count; ++c) {
        const double* wc = w.data() + static_cast<std::size_t>(c) * ds.dim;
        double z = 0.0;
        for (int f = 0; f < ds.dim; ++f) z += wc[f] * x[f];
        probs[c] = z;
        max_logit = std::max(max_logit, z);
    }
    double denom = 0.0;
    for (int c = 0; c < c_count; ++c) {
        probs[c] = std::exp(probs[c] - max_logit);
        denom += probs[c];
    }
    for (int c = 0; c < c_count; ++c) probs[c] /= denom;
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t off) {
    return (static_cast<std::uint32_t>(buf[off]) << 24) |
           (static_cast<std::uint32_t>(buf[off + 1]) << 16) |
           (static_cast<std::uint32_t>(buf[off + 2]) << 8) |
           static_cast<std::uint32_t>(buf[off + 3]);
}

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                      std::istreambuf_iterator<char>());
}

}  // namespace

Dataset synth_classification(int n_examples, int dim, int n_classes, std::uint64_t seed) {
    if (n_classes < 2 || n_examples < n_classes || dim < 1) {
        throw std::invalid_argument("degenerate sizes for synthetic dataset");
    }
    rng::Stream stream = rng::Stream::make(seed, {rng::kTagSynth});

    // Class centers: gaussian directions rescaled to norm 3.
    std::vector<double> centers(static_cast<std::size_t>(n_classes) * dim);
    for (int c = 0; c < n_classes; ++c) {
        double* center = centers.data() + static_cast<std::size_t>(c) * dim;
        double norm2 = 0.0;
        for (int f = 0; f < dim; ++f) {
            center[f] = stream.next_gaussian();
            norm2 += center[f] * center[f];
        }
        const double scale = 3.0 / std::sqrt(norm2);
        for (int f = 0; f < dim; ++f) center[f] *= scale;
    }

    Dataset ds;
    ds.n_examples = n_examples;
    ds.dim = dim;
    ds.n_classes = n_classes;
    ds.features.resize(static_cast<std::size_t>(n_examples) * dim);
    ds.labels.resize(n_examples);
    for (int l = 0; l < n_examples; ++l) {
        const int label = l % n_classes;
        ds.labels[l] = label;
        const double* center = centers.data() + static_cast<std::size_t>(label) * dim;
        double* x = ds.features.data() + static_cast<std::size_t>(l) * dim;
        for (int f = 0; f < dim; ++f) x[f] = center[f] + stream.next_gaussian();
    }
    return ds;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path, long limit) {
    const std::vector<unsigned char> img = read_file(images_path);
    const std::vector<unsigned char> lab = read_file(labels_path);
    if (img.size() < 16) throw std::runtime_error("truncated image file " + images_path);
    if (lab.size() < 8) throw std::runtime_error("truncated label file " + labels_path);
    if (read_be32(img, 0) != 0x00000803u) throw std::runtime_error("bad magic in " + images_path);
    if (read_be32(lab, 0) != 0x00000801u) throw std::runtime_error("bad magic in " + labels_path);

    const std::uint32_t img_count = read_be32(img, 4);
    const std::uint32_t rows = read_be32(img, 8);
    const std::uint32_t cols = read_be32(img, 12);
    const std::uint32_t lab_count = read_be32(lab, 4);
    if (img_count != lab_count) {
        throw std::runtime_error("image/label count mismatch: " + std::to_string(img_count) +
                                 " vs " + std::to_string(lab_count));
    }
    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    if (img.size() < 16 + static_cast<std::size_t>(img_count) * pixels) {
        throw std::runtime_error("truncated image file " + images_path);
    }
    if (lab.size() < 8 + static_cast<std::size_t>(lab_count)) {
        throw std::runtime_error("truncated label file " + labels_path);
    }

    long count = static_cast<long>(img_count);
    if (limit >= 0) count = std::min(count, limit);
    if (count == 0) throw std::runtime_error("empty dataset");

    Dataset ds;
    ds.n_examples = static_cast<int>(count);
    ds.dim = static_cast<int>(pixels);
    ds.features.resize(static_cast<std::size_t>(count) * pixels);
    ds.labels.resize(count);
    int max_label = 0;
    for (long l = 0; l < count; ++l) {
        const unsigned char* src = img.data() + 16 + static_cast<std::size_t>(l) * pixels;
        double* dst = ds.features.data() + static_cast<std::size_t>(l) * pixels;
        for (std::size_t p = 0; p < pixels; ++p) dst[p] = src[p] / 255.0;
        ds.labels[l] = lab[8 + static_cast<std::size_t>(l)];
        max_label = std::max(max_label, ds.labels[l]);
    }
    ds.n_classes = max_label + 1;
    return ds;
}

std::vector<Shard> partition(const Dataset& ds, int n_workers, PartitionMode mode,
                             int classes_per_worker, std::uint64_t seed) {
    const int total = ds.n_examples;
    if (n_workers < 1 || total < n_workers) {
        throw std::invalid_argument("more workers than examples");
    }
    rng::Stream stream = rng::Stream::make(seed, {rng::kTagPartition});

    std::vector<int> order(total);
    std::iota(order.begin(), order.end(), 0);
    for (int t = total - 1; t > 0; --t) {
        const int u = static_cast<int>(stream.next_below(static_cast<std::uint64_t>(t) + 1));
        std::swap(order[t], order[u]);
    }

    std::vector<Shard> shards(n_workers);
    for (int j = 0; j < n_workers; ++j) shards[j].owner = j;

    if (mode == PartitionMode::kIid) {
        const int base = total / n_workers;
        const int extra = total % n_workers;
        int pos = 0;
        for (int j = 0; j < n_workers; ++j) {
            const int size = base + (j < extra ? 1 : 0);
            shards[j].indices.assign(order.begin() + pos, order.begin() + pos + size);
            pos += size;
        }
    } else {
        if (classes_per_worker < 1) throw std::invalid_argument("classes_per_worker must be >= 1");
        const int c_count = ds.n_classes;
        // claimants[c] = workers whose preferred class list contains c.
        std::vector<std::vector<int>> claimants(c_count);
        for (int j = 0; j < n_workers; ++j) {
            for (int t = 0; t < classes_per_worker; ++t) {
                claimants[(static_cast<long>(j) * classes_per_worker + t) % c_count].push_back(j);
            }
        }
        std::vector<int> per_class_cursor(c_count, 0);
        std::vector<int> leftovers;
        for (int idx : order) {
            const int c = ds.labels[idx];
            auto& owners = claimants[c];
            if (owners.empty()) {
                leftovers.push_back(idx);
            } else {
                shards[owners[per_class_cursor[c] % owners.size()]].indices.push_back(idx);
                ++per_class_cursor[c];
            }
        }
        int wheel = 0;
        for (int idx : leftovers) shards[wheel++ % n_workers].indices.push_back(idx);
        // A worker may come up empty when its preferred classes are scarce;
        // rebalance from the largest shard so every invariant holds.
        for (int j = 0; j < n_workers; ++j) {
            while (shards[j].indices.empty()) {
                auto big = std::max_element(shards.begin(), shards.end(),
                                            [](const Shard& a, const Shard& b) {
                                                return a.indices.size() < b.indices.size();
                                            });
                shards[j].indices.push_back(big->indices.back());
                big->indices.pop_back();
            }
        }
    }
    for (auto& shard : shards) std::sort(shard.indices.begin(), shard.indices.end());
    return shards;
}

double loss(const Dataset& ds, const std::vector<int>& indices, const ParamVector& w) {
    check_param_dim(ds, w);
    if (indices.empty()) throw std::invalid_argument("empty index set");
    double total = 0.0;
    const int c_count = ds.n_classes;
    for (int l : indices) {
        const double* x = ds.example(l);
        double max_logit = -1e300;
        double target = 0.0;
        std::vector<double> logits(c_count);
        for (int c = 0; c < c_count; ++c) {
            const double* wc = w.data() + static_cast<std::size_t>(c) * ds.dim;
            double z = 0.0;
            for (int f = 0; f < ds.dim; ++f) z += wc[f] * x[f];
            logits[c] = z;
            max_logit = std::max(max_logit, z);
            if (c == ds.labels[l]) target = z;
        }
        double denom = 0.0;
        for (int c = 0; c < c_count; ++c) denom += std::exp(logits[c] - max_logit);
        total += max_logit + std::log(denom) - target;
    }
    return total / indices.size();
}

double loss(const Dataset& ds, const ParamVector& w) {
    std::vector<int> all(ds.n_examples);
    std::iota(all.begin(), all.end(), 0);
    return loss(ds, all, w);
}

double global_loss(const Dataset& ds, const std::vector<Shard>& shards, const ParamVector& w) {
    if (shards.empty()) throw std::invalid_argument("no shards");
    double total = 0.0;
    for (const Shard& shard : shards) total += loss(ds, shard.indices, w);
    return total / shards.size();
}

ParamVector gradient(const Dataset& ds, const std::vector<int>& indices, const ParamVector& w) {
    check_param_dim(ds, w);
    if (indices.empty()) throw std::invalid_argument("empty index set");
    ParamVector grad(w.size(), 0.0);
    std::vector<double> probs(ds.n_classes);
    for (int l : indices) {
        softmax_probs(ds, w, l, probs);
        const double* x = ds.example(l);
        for (int c = 0; c < ds.n_classes; ++c) {
            const double coeff = probs[c] - (c == ds.labels[l] ? 1.0 : 0.0);
            double* gc = grad.data() + static_cast<std::size_t>(c) * ds.dim;
            for (int f = 0; f < ds.dim; ++f) gc[f] += coeff * x[f];
        }
    }
    const double inv = 1.0 / indices.size();
    for (double& g : grad) g *= inv;
    return grad;
}

ParamVector minibatch_gradient(const Dataset& ds, const Shard& shard, const ParamVector& w,
                               int batch, rng::Stream& stream) {
    if (shard.indices.empty()) throw std::invalid_argument("empty shard");
    if (batch < 1) throw std::invalid_argument("batch must be >= 1");
    const int size = static_cast<int>(shard.indices.size());
    if (batch == size) return gradient(ds, shard.indices, w);

    std::vector<int> chosen;
    chosen.reserve(batch);
    if (batch < size) {
        // Partial Fisher-Yates: the first `batch` slots are a uniform sample
        // without replacement.
        std::vector<int> pool = shard.indices;
        for (int t = 0; t < batch; ++t) {
            const int u =
                t + static_cast<int>(stream.next_below(static_cast<std::uint64_t>(size - t)));
            std::swap(pool[t], pool[u]);
            chosen.push_back(pool[t]);
        }
    } else {
        for (int t = 0; t < batch; ++t) {
            chosen.push_back(shard.indices[stream.next_below(static_cast<std::uint64_t>(size))]);
        }
    }
    return gradient(ds, chosen, w);
}

double eta_at(const LearningRateSchedule& sched, long k) {
    if (k < 0) throw std::invalid_argument("iteration must be >= 0");
    if (sched.mode == EtaMode::kConstant) return sched.eta0;
    return sched.eta0 * std::pow(sched.delta, static_cast<double>(k));
}

double classification_error(const Dataset& ds, const ParamVector& w) {
    check_param_dim(ds, w);
    int wrong = 0;
    for (int l = 0; l < ds.n_examples; ++l) {
        const double* x = ds.example(l);
        int best = 0;
        double best_z = -1e300;
        for (int c = 0; c < ds.n_classes; ++c) {
            const double* wc = w.data() + static_cast<std::size_t>(c) * ds.dim;
            double z = 0.0;
            for (int f = 0; f < ds.dim; ++f) z += wc[f] * x[f];
            if (z > best_z) {
                best_z = z;
                best = c;
            }
        }
        if (best != ds.labels[l]) ++wrong;
    }
    return static_cast<double>(wrong) / ds.n_examples;
}

Dataset random_projection(const Dataset& ds, int out_dim, std::uint64_t seed) {
    if (out_dim < 1) throw std::invalid_argument("projection dimension must be >= 1");
    rng::Stream stream = rng::Stream::make(seed, {rng::kTagProject});
    std::vector<double> proj(static_cast<std::size_t>(ds.dim) * out_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(out_dim));
    for (double& v : proj) v = stream.next_gaussian() * scale;

    Dataset out;
    out.n_examples = ds.n_examples;
    out.dim = out_dim;
    out.n_classes = ds.n_classes;
    out.labels = ds.labels;
    out.features.resize(static_cast<std::size_t>(ds.n_examples) * out_dim);
    for (int l = 0; l < ds.n_examples; ++l) {
        const double* x = ds.example(l);
        double* y = out.features.data() + static_cast<std::size_t>(l) * out_dim;
        for (int f = 0; f < ds.dim; ++f) {
            const double xv = x[f];
            if (xv == 0.0) continue;
            const double* row = proj.data() + static_cast<std::size_t>(f) * out_dim;
            for (int m = 0; m < out_dim; ++m) y[m] += xv * row[m];
        }
    }
    return out;
}

void dataset_to_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    char buf[64];
    for (int l = 0; l < ds.n_examples; ++l) {
        const double* x = ds.example(l);
        for (int f = 0; f < ds.dim; ++f) {
            std::snprintf(buf, sizeof(buf), "%.17g", x[f]);
            out << buf << ',';
        }
        out << ds.labels[l] << '\n';
    }
}

}  // namespace dybw::learning
