#include "dybw/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dybw::consensus {

SquareMatrix SquareMatrix::identity(int n) {
    SquareMatrix m(n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

SquareMatrix SquareMatrix::multiplied_by(const SquareMatrix& rhs) const {
    if (n_ != rhs.n_) throw std::invalid_argument("matrix size mismatch");
    SquareMatrix out(n_);
    for (int i = 0; i < n_; ++i) {
        for (int l = 0; l < n_; ++l) {
            double a = (*this)(i, l);
            if (a == 0.0) continue;
            for (int j = 0; j < n_; ++j) {
                out(i, j) += a * rhs(l, j);
            }
        }
    }
    return out;
}

MixingMatrix build_metropolis(const topology::Graph& g,
                              const std::vector<std::vector<int>>& active_sets,
                              long iteration) {
    const int n = g.n_workers();
    if (static_cast<int>(active_sets.size()) != n) {
        throw std::invalid_argument("active_sets size does not match worker count");
    }
    for (int j = 0; j < n; ++j) {
        for (int i : active_sets[j]) {
            if (i < 0 || i >= n) {
                throw std::invalid_argument("active set of worker " + std::to_string(j) +
                                            " references invalid worker " + std::to_string(i));
            }
            if (i == j) {
                throw std::invalid_argument("active set of worker " + std::to_string(j) +
                                            " contains the worker itself");
            }
            if (!g.has_edge(i, j)) {
                throw std::invalid_argument("active set of worker " + std::to_string(j) +
                                            " contains non-neighbor " + std::to_string(i));
            }
            const auto& back = active_sets[i];
            if (std::find(back.begin(), back.end(), j) == back.end()) {
                throw std::invalid_argument("active sets are asymmetric between workers " +
                                            std::to_string(i) + " and " + std::to_string(j));
            }
        }
    }

    MixingMatrix m;
    m.iteration = iteration;
    m.entries = SquareMatrix(n);
    std::vector<int> p(n);
    for (int j = 0; j < n; ++j) p[j] = static_cast<int>(active_sets[j].size());
    for (int j = 0; j < n; ++j) {
        double row_sum = 0.0;
        for (int i : active_sets[j]) {
            double w = 1.0 / (1.0 + std::max(p[i], p[j]));
            m.entries(i, j) = w;
            m.entries(j, i) = w;
            row_sum += w;
        }
        m.entries(j, j) = 1.0 - row_sum;
    }
    return m;
}

bool is_symmetric(const SquareMatrix& m) {
    const int n = m.size();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (m(i, j) != m(j, i)) return false;
        }
    }
    return true;
}

bool is_doubly_stochastic(const SquareMatrix& m, double tol) {
    const int n = m.size();
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        double col = 0.0;
        for (int j = 0; j < n; ++j) {
            if (m(i, j) < 0.0) return false;
            row += m(i, j);
            col += m(j, i);
        }
        if (std::abs(row - 1.0) > tol || std::abs(col - 1.0) > tol) return false;
    }
    return true;
}

ProductChain chain_identity(int n, long start_s) {
    ProductChain chain;
    chain.phi = SquareMatrix::identity(n);
    chain.start_s = start_s;
    chain.end_k = start_s - 1;
    chain.beta = 1.0;
    return chain;
}

ProductChain multiply_chain(const ProductChain& chain, const MixingMatrix& next) {
    if (next.iteration != chain.end_k + 1) {
        throw std::invalid_argument("chain expects iteration " + std::to_string(chain.end_k + 1) +
                                    " but got " + std::to_string(next.iteration));
    }
    ProductChain out;
    out.phi = chain.phi.multiplied_by(next.entries);
    out.start_s = chain.start_s;
    out.end_k = next.iteration;
    out.beta = chain.beta;
    const int n = next.entries.size();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double v = next.entries(i, j);
            if (v > 0.0 && v < out.beta) out.beta = v;
        }
    }
    return out;
}

double consensus_deviation(const ProductChain& chain) {
    const int n = chain.phi.size();
    const double uniform = 1.0 / n;
    double dev = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            dev = std::max(dev, std::abs(chain.phi(i, j) - uniform));
        }
    }
    return dev;
}

double lemma2_bound(const ProductChain& chain, int n, int b) {
    if (!(chain.beta > 0.0 && chain.beta < 1.0)) {
        throw std::domain_error("chain beta must lie in (0, 1)");
    }
    if (n < 1 || b < 1) throw std::invalid_argument("n and b must be positive");
    const double nb = static_cast<double>(n) * b;
    const double beta_nb = std::pow(chain.beta, nb);
    const double steps = static_cast<double>(chain.end_k - chain.start_s);
    const double front = 2.0 * (1.0 + std::pow(chain.beta, -nb)) / (1.0 - beta_nb);
    return front * std::pow(1.0 - beta_nb, steps / nb);
}

}  // namespace dybw::consensus
