#include "instret/pit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "instret/error.hpp"

namespace instret {

namespace {
constexpr double kNormFloor = 1e-12;

double norm(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

std::span<const double> row(const Matrix& m, int r) {
    return {&m.values[static_cast<size_t>(r) * m.cols], static_cast<size_t>(m.cols)};
}
}  // namespace

double cosine(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), Err::ShapeMismatch, "cosine of different-length vectors");
    double na = norm(a);
    double nb = norm(b);
    require(na >= kNormFloor && nb >= kNormFloor, Err::ZeroVector,
            "cosine of (near-)zero vector");
    double dot = 0.0;
    for (size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return std::clamp(dot / (na * nb), -1.0, 1.0);
}

CostMatrix cost_matrix(const Matrix& targets, const Matrix& outputs) {
    require(targets.cols == outputs.cols, Err::ShapeMismatch,
            "target/output embedding widths differ");
    require(targets.rows <= outputs.rows, Err::TooManyTargets,
            std::to_string(targets.rows) + " targets but only " +
                std::to_string(outputs.rows) + " output slots");
    CostMatrix cost;
    cost.values = Matrix(targets.rows, outputs.rows);
    for (int n = 0; n < targets.rows; ++n)
        for (int j = 0; j < outputs.rows; ++j)
            cost.values.at(n, j) = 1.0 - cosine(row(outputs, j), row(targets, n));
    return cost;
}

Assignment hungarian(const CostMatrix& cost) {
    int n_targets = cost.targets();
    int m = cost.slots();
    require(n_targets >= 1 && m >= 1, Err::ShapeMismatch, "empty cost matrix");
    require(n_targets <= m, Err::TooManyTargets, "more targets than slots");
    for (double v : cost.values.values)
        require(std::isfinite(v), Err::NonFiniteCost, "cost matrix has non-finite entry");

    // Kuhn-Munkres with row/column potentials on the square m x m padding;
    // dummy rows cost zero everywhere, so real rows keep their optimal total.
    auto at = [&](int r, int c) -> double {
        return r < n_targets ? cost.values.at(r, c) : 0.0;
    };

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<size_t>(m) + 1, 0.0), v(static_cast<size_t>(m) + 1, 0.0);
    std::vector<int> match(static_cast<size_t>(m) + 1, 0), way(static_cast<size_t>(m) + 1, 0);

    for (int i = 1; i <= m; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<size_t>(m) + 1, inf);
        std::vector<char> used(static_cast<size_t>(m) + 1, 0);
        do {
            used[static_cast<size_t>(j0)] = 1;
            int i0 = match[static_cast<size_t>(j0)];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= m; ++j) {
                if (used[static_cast<size_t>(j)]) continue;
                double cur = at(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
                if (cur < minv[static_cast<size_t>(j)]) {
                    minv[static_cast<size_t>(j)] = cur;
                    way[static_cast<size_t>(j)] = j0;
                }
                if (minv[static_cast<size_t>(j)] < delta) {
                    delta = minv[static_cast<size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[static_cast<size_t>(j)]) {
                    u[static_cast<size_t>(match[static_cast<size_t>(j)])] += delta;
                    v[static_cast<size_t>(j)] -= delta;
                } else {
                    minv[static_cast<size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<size_t>(j0)] != 0);
        do {
            int j1 = way[static_cast<size_t>(j0)];
            match[static_cast<size_t>(j0)] = match[static_cast<size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    Assignment out;
    out.mapping.assign(static_cast<size_t>(n_targets), -1);
    for (int j = 1; j <= m; ++j) {
        int i = match[static_cast<size_t>(j)];
        if (i >= 1 && i <= n_targets) out.mapping[static_cast<size_t>(i) - 1] = j - 1;
    }
    return out;
}

Assignment brute_force_assign(const CostMatrix& cost) {
    int n = cost.targets();
    int m = cost.slots();
    require(m <= 8, Err::TooLarge, "brute force limited to 8 slots");
    require(n >= 1 && n <= m, Err::TooManyTargets, "need 1 <= targets <= slots");
    for (double v : cost.values.values)
        require(std::isfinite(v), Err::NonFiniteCost, "cost matrix has non-finite entry");

    std::vector<int> current(static_cast<size_t>(n), -1);
    std::vector<char> used(static_cast<size_t>(m), 0);
    Assignment best;
    double best_cost = std::numeric_limits<double>::infinity();

    // lexicographic DFS; strict improvement keeps the smallest optimal mapping
    auto dfs = [&](auto&& self, int depth, double acc) -> void {
        if (depth == n) {
            if (acc < best_cost) {
                best_cost = acc;
                best.mapping = current;
            }
            return;
        }
        for (int j = 0; j < m; ++j) {
            if (used[static_cast<size_t>(j)]) continue;
            used[static_cast<size_t>(j)] = 1;
            current[static_cast<size_t>(depth)] = j;
            self(self, depth + 1, acc + cost.values.at(depth, j));
            used[static_cast<size_t>(j)] = 0;
        }
    };
    dfs(dfs, 0, 0.0);
    return best;
}

double assignment_cost(const CostMatrix& cost, const Assignment& assignment) {
    require(static_cast<int>(assignment.mapping.size()) == cost.targets(), Err::ShapeMismatch,
            "assignment length differs from target count");
    double total = 0.0;
    for (int n = 0; n < cost.targets(); ++n) total += cost.values.at(n, assignment.mapping[static_cast<size_t>(n)]);
    return total;
}

PitLossResult pit_loss(const Matrix& targets, const Matrix& outputs) {
    CostMatrix cost = cost_matrix(targets, outputs);
    PitLossResult result;
    result.assignment = hungarian(cost);
    result.loss = assignment_cost(cost, result.assignment);
    result.output_grads = Matrix(outputs.rows, outputs.cols);

    for (int n = 0; n < targets.rows; ++n) {
        int j = result.assignment.mapping[static_cast<size_t>(n)];
        auto o = row(outputs, j);
        auto t = row(targets, n);
        double no = norm(o);
        double nt = norm(t);
        double dot = 0.0;
        for (size_t i = 0; i < o.size(); ++i) dot += o[i] * t[i];
        // d(1 - cos)/d o = cos * o / |o|^2 - t / (|o| |t|)
        double c = dot / (no * nt);
        for (int i = 0; i < outputs.cols; ++i)
            result.output_grads.at(j, i) =
                c * o[static_cast<size_t>(i)] / (no * no) - t[static_cast<size_t>(i)] / (no * nt);
    }
    return result;
}

}  // namespace instret
