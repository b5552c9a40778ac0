#ifndef DYBW_LEARNING_HPP
#define DYBW_LEARNING_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dybw/rng.hpp"

namespace dybw::learning {

// Row-major feature matrix plus integer class labels.
struct Dataset {
    std::vector<double> features;  // n_examples * dim
    std::vector<int> labels;       // values in [0, n_classes)
    int n_examples = 0;
    int dim = 0;
    int n_classes = 0;

    const double* example(int l) const { return features.data() + static_cast<std::size_t>(l) * dim; }
};

// Index list owned by one worker; indices point into the parent dataset.
struct Shard {
    int owner = 0;
    std::vector<int> indices;
};

// Flattened multinomial-logistic weights, class-major: w[c * dim + f].
using ParamVector = std::vector<double>;

enum class EtaMode { kConstant, kGeometric };

struct LearningRateSchedule {
    double eta0 = 0.2;
    double delta = 0.95;
    EtaMode mode = EtaMode::kGeometric;
};

// Class-conditional Gaussian clusters: C centers of norm 3, unit-variance
// noise, labels assigned round-robin so every class appears when
// n_examples >= n_classes.
Dataset synth_classification(int n_examples, int dim, int n_classes, std::uint64_t seed);

// IDX-format loader (big-endian, magic 0x803 for images and 0x801 for
// labels). Pixels scaled to [0,1], images flattened to dim = rows * cols.
Dataset load_idx(const std::string& images_path, const std::string& labels_path, long limit = -1);

enum class PartitionMode { kIid, kLabelSkew };

// Split example indices into one shard per worker. iid: random permutation
// cut into near-equal pieces. label_skew: worker j prefers s round-robin
// classes, leftovers spread iid; every shard is non-empty.
std::vector<Shard> partition(const Dataset& ds, int n_workers, PartitionMode mode,
                             int classes_per_worker, std::uint64_t seed);

// Mean softmax cross-entropy over the given index set (all examples in the
// overload without indices).
double loss(const Dataset& ds, const std::vector<int>& indices, const ParamVector& w);
double loss(const Dataset& ds, const ParamVector& w);

// Unweighted mean of per-shard mean losses, the objective the network
// minimizes jointly.
double global_loss(const Dataset& ds, const std::vector<Shard>& shards, const ParamVector& w);

// Analytic gradient of the mean cross-entropy over the index set.
ParamVector gradient(const Dataset& ds, const std::vector<int>& indices, const ParamVector& w);

// Gradient over a uniform mini-batch from the shard: without replacement,
// falling back to with-replacement when batch > |shard|. batch == |shard|
// is an in-order full pass and consumes no randomness.
ParamVector minibatch_gradient(const Dataset& ds, const Shard& shard, const ParamVector& w,
                               int batch, rng::Stream& stream);

double eta_at(const LearningRateSchedule& sched, long k);

// Fraction of examples whose argmax class (ties to the lowest index)
// disagrees with the label.
double classification_error(const Dataset& ds, const ParamVector& w);

// Gaussian random projection of the feature matrix onto out_dim columns,
// a cheap stand-in for PCA-style dimension reduction.
Dataset random_projection(const Dataset& ds, int out_dim, std::uint64_t seed);

// features then a label column, one row per example.
void dataset_to_csv(const Dataset& ds, const std::string& path);

}  // namespace dybw::learning

#endif  // DYBW_LEARNING_HPP
