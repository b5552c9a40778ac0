#ifndef DYBW_CONSENSUS_HPP
#define DYBW_CONSENSUS_HPP

#include <cstddef>
#include <vector>

#include "dybw/topology.hpp"

namespace dybw::consensus {

// Dense square matrix, row-major. Network sizes stay small (<= 64 workers in
// every supported config), so there is no sparse path.
class SquareMatrix {
  public:
    SquareMatrix() = default;
    explicit SquareMatrix(int n) : n_(n), data_(static_cast<std::size_t>(n) * n, 0.0) {}

    static SquareMatrix identity(int n);

    int size() const { return n_; }
    double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * n_ + j]; }
    double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * n_ + j]; }
    const std::vector<double>& data() const { return data_; }

    SquareMatrix multiplied_by(const SquareMatrix& rhs) const;

  private:
    int n_ = 0;
    std::vector<double> data_;
};

// One iteration's Metropolis weight matrix.
struct MixingMatrix {
    SquareMatrix entries;
    long iteration = 0;
};

// Metropolis weights over the active sets: with p_i = |S_i|, off-diagonal
// entries are 1/(1 + max(p_i, p_j)) for j in S_i, the diagonal absorbs the
// residual, and inactive workers (S_j empty) keep the identity row/column.
// Active sets must be mutually consistent and within graph neighborhoods.
MixingMatrix build_metropolis(const topology::Graph& g,
                              const std::vector<std::vector<int>>& active_sets,
                              long iteration);

bool is_symmetric(const SquareMatrix& m);
bool is_doubly_stochastic(const SquareMatrix& m, double tol);

// Running product P(s) P(s+1) ... P(k) with the smallest positive entry seen
// across the factors (the beta of the geometric convergence bound).
struct ProductChain {
    SquareMatrix phi;
    long start_s = 0;
    long end_k = 0;
    double beta = 1.0;
};

// Empty product: phi = identity, spanning [start_s, start_s - 1].
ProductChain chain_identity(int n, long start_s);

ProductChain multiply_chain(const ProductChain& chain, const MixingMatrix& next);

// max_{i,j} |phi[i][j] - 1/N|: distance of the product from the uniform
// averaging matrix.
double consensus_deviation(const ProductChain& chain);

// Geometric envelope on consensus_deviation for a b-connected sequence:
// 2 (1 + beta^-nb) / (1 - beta^nb) * (1 - beta^nb)^((k-s)/nb).
double lemma2_bound(const ProductChain& chain, int n, int b);

}  // namespace dybw::consensus

#endif  // DYBW_CONSENSUS_HPP
