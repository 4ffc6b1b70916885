#pragma once

#include <span>
#include <vector>

#include "instret/dsp.hpp"

namespace instret {

// cosine similarity in [-1, 1]; raises ZeroVector when either norm < 1e-12
double cosine(std::span<const double> a, std::span<const double> b);

// N x M matrix of embedding mismatch costs: entry (n, j) = 1 - cos(outputs[j],
// targets[n]). Rows are targets, columns are output slots; requires N <= M.
struct CostMatrix {
    Matrix values;  // N x M
    int targets() const { return values.rows; }
    int slots() const { return values.cols; }
};

CostMatrix cost_matrix(const Matrix& targets, const Matrix& outputs);

// injective map target n -> output slot mapping[n]
struct Assignment {
    std::vector<int> mapping;
};

// Minimum-cost injective assignment via the Kuhn-Munkres algorithm with
// potentials; rectangular inputs are padded to square with zero-cost dummy
// rows. Worst-case cubic in the slot count.
Assignment hungarian(const CostMatrix& cost);

// Exhaustive oracle over all injective maps; ties break to the
// lexicographically smallest mapping. Limited to M <= 8.
Assignment brute_force_assign(const CostMatrix& cost);

double assignment_cost(const CostMatrix& cost, const Assignment& assignment);

struct PitLossResult {
    double loss = 0.0;
    Assignment assignment;
    Matrix output_grads;  // M x D, zero rows for unassigned slots
};

// Permutation-invariant cosine embedding loss: min over injective assignments
// of sum_n (1 - cos(outputs[pi(n)], targets[n])), with analytic gradients for
// the assigned output rows. At assignment-switch points the solver's
// assignment defines the subgradient.
PitLossResult pit_loss(const Matrix& targets, const Matrix& outputs);

}  // namespace instret
