#include "hypocert/metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hypocert/parallel.hpp"

namespace hypocert {

void MetricParams::validate() const {
    if (!potential) throw std::invalid_argument("MetricParams: potential not set");
    if (r <= 0.0 || r > 1.0) throw std::invalid_argument("MetricParams: r must lie in (0, 1]");
    if (delta <= 0.0) throw std::invalid_argument("MetricParams: delta must be positive");
    if (beta_w <= 0.0 || beta_w >= 1.0)
        throw std::invalid_argument("MetricParams: beta_w must lie in (0, 1)");
}

namespace {

// 32-point Gauss-Legendre nodes/weights on [0, 1], computed once by Newton
// iteration on the Legendre polynomial.
struct GaussLegendre32 {
    double node[32];
    double weight[32];
    GaussLegendre32() {
        const int n = 32;
        for (int i = 0; i < n; ++i) {
            // initial guess on [-1, 1]
            double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double pp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                pp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / pp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            node[i] = 0.5 * (1.0 - x); // map to [0, 1]
            weight[i] = 1.0 / ((1.0 - x * x) * pp * pp);
        }
    }
};

const GaussLegendre32& gl32() {
    static const GaussLegendre32 table;
    return table;
}

} // namespace

double rho_upper(const PhaseState& z1, const PhaseState& z2, const MetricParams& mp,
                 double exponent) {
    mp.validate();
    if (exponent < 0.0) throw std::invalid_argument("rho_upper: exponent must be nonnegative");
    const Eigen::VectorXd a = z1.packed();
    const Eigen::VectorXd step = z2.packed() - a;
    const double len = step.norm();
    if (len == 0.0) return 0.0;
    if (exponent == 0.0) return len; // L^0 = 1: plain Euclidean length
    const auto& q = gl32();
    double acc = 0.0;
    for (int i = 0; i < 32; ++i) {
        const PhaseState zt = PhaseState::from_packed(a + q.node[i] * step);
        const WeightValue w = weight_L(zt, *mp.potential, mp.lp, exponent);
        if (w.saturated) return std::numeric_limits<double>::infinity();
        acc += q.weight[i] * w.value;
    }
    return len * acc;
}

double metric_d(const PhaseState& z1, const PhaseState& z2, const MetricParams& mp) {
    const double rr = rho_upper(z1, z2, mp, mp.r);
    const double rho = rho_upper(z1, z2, mp, 1.0);
    if (std::isinf(rho)) return std::numeric_limits<double>::infinity();
    return std::min(rr / mp.delta, 1.0) + mp.beta_w * rho;
}

namespace {

// Dense Jonker-Volgenant: column reduction, reduction transfer, two rounds
// of augmenting row reduction, then shortest augmenting paths for the rows
// still free. Templated on the scalar: float halves the memory traffic of
// the augmentation scans, which dominates on large instances.
template <typename T>
T solve_assignment_impl(int n, const std::vector<T>& cost, std::vector<int>& row_to_col) {
    if (n < 1) throw std::invalid_argument("solve_assignment: n must be >= 1");
    if (cost.size() != static_cast<std::size_t>(n) * n)
        throw std::invalid_argument("solve_assignment: cost matrix size mismatch");
    for (T c : cost)
        if (!std::isfinite(c)) throw std::invalid_argument("solve_assignment: non-finite cost");

    const T big = std::numeric_limits<T>::infinity();
    std::vector<int>& x = row_to_col;
    x.assign(n, -1);
    std::vector<int> y(n, -1), matches(n, 0), free_rows(n);
    std::vector<T> v(n);

    // column reduction
    for (int j = n - 1; j >= 0; --j) {
        T min = cost[j];
        int imin = 0;
        for (int i = 1; i < n; ++i) {
            const T c = cost[static_cast<std::size_t>(i) * n + j];
            if (c < min) {
                min = c;
                imin = i;
            }
        }
        v[j] = min;
        if (++matches[imin] == 1) {
            x[imin] = j;
            y[j] = imin;
        }
    }

    // reduction transfer
    int num_free = 0;
    for (int i = 0; i < n; ++i) {
        if (matches[i] == 0) {
            free_rows[num_free++] = i;
        } else if (matches[i] == 1) {
            const int j1 = x[i];
            T min = big;
            const T* row = cost.data() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j)
                if (j != j1) min = std::min(min, row[j] - v[j]);
            v[j1] -= min;
        }
    }

    // augmenting row reduction
    for (int loop = 0; loop < 2; ++loop) {
        int k = 0;
        const int prev_free = num_free;
        num_free = 0;
        while (k < prev_free) {
            const int i = free_rows[k++];
            const T* row = cost.data() + static_cast<std::size_t>(i) * n;
            T umin = big, usubmin = big;
            int j1 = 0, j2 = -1;
            for (int j = 0; j < n; ++j) {
                const T h = row[j] - v[j];
                if (h < usubmin) {
                    if (h >= umin) {
                        usubmin = h;
                        j2 = j;
                    } else {
                        usubmin = umin;
                        umin = h;
                        j2 = j1;
                        j1 = j;
                    }
                }
            }
            int i0 = y[j1];
            if (umin < usubmin) {
                v[j1] -= usubmin - umin;
            } else if (i0 >= 0) {
                j1 = j2;
                i0 = y[j1];
            }
            x[i] = j1;
            y[j1] = i;
            // Displaced rows go to the next pass rather than being
            // reprocessed immediately: with real-valued costs the classic
            // immediate-reprocess variant can ping-pong on near-ties,
            // shrinking duals by ulp-sized steps.
            if (i0 >= 0) free_rows[num_free++] = i0;
        }
    }

    // shortest augmenting paths for the remaining free rows
    std::vector<T> d(n);
    std::vector<int> pred(n), collist(n);
    for (int f = 0; f < num_free; ++f) {
        const int free_row = free_rows[f];
        const T* frow = cost.data() + static_cast<std::size_t>(free_row) * n;
        for (int j = 0; j < n; ++j) {
            d[j] = frow[j] - v[j];
            pred[j] = free_row;
            collist[j] = j;
        }
        int low = 0, up = 0, endofpath = -1;
        T min = 0;
        bool done = false;
        while (!done) {
            if (up == low) {
                min = d[collist[up++]];
                for (int k = up; k < n; ++k) {
                    const int j = collist[k];
                    const T h = d[j];
                    if (h <= min) {
                        if (h < min) {
                            up = low;
                            min = h;
                        }
                        collist[k] = collist[up];
                        collist[up++] = j;
                    }
                }
                for (int k = low; k < up; ++k) {
                    const int j = collist[k];
                    if (y[j] < 0) {
                        endofpath = j;
                        done = true;
                        break;
                    }
                }
            }
            if (!done) {
                const int j1 = collist[low++];
                const int i = y[j1];
                const T* row = cost.data() + static_cast<std::size_t>(i) * n;
                const T h = row[j1] - v[j1] - min;
                for (int k = up; k < n; ++k) {
                    const int j = collist[k];
                    const T v2 = row[j] - v[j] - h;
                    if (v2 < d[j]) {
                        d[j] = v2;
                        pred[j] = i;
                        if (v2 == min) {
                            if (y[j] < 0) {
                                endofpath = j;
                                done = true;
                                break;
                            }
                            collist[k] = collist[up];
                            collist[up++] = j;
                        }
                    }
                }
            }
        }
        for (int k = 0; k < up; ++k) {
            const int j = collist[k];
            v[j] += d[j] - min;
        }
        int i;
        do {
            i = pred[endofpath];
            y[endofpath] = i;
            std::swap(x[i], endofpath);
        } while (i != free_row);
    }

    T total = 0;
    for (int i = 0; i < n; ++i) total += cost[static_cast<std::size_t>(i) * n + x[i]];
    return total;
}

} // namespace

double solve_assignment(int n, const std::vector<double>& cost, std::vector<int>& row_to_col) {
    return solve_assignment_impl<double>(n, cost, row_to_col);
}

double wasserstein1(const std::vector<PhaseState>& samples_a,
                    const std::vector<PhaseState>& samples_b,
                    const GroundMetric& ground, int workers, bool float_costs) {
    if (samples_a.size() != samples_b.size())
        throw std::invalid_argument("wasserstein1: sample sets must have equal size");
    if (samples_a.empty()) throw std::invalid_argument("wasserstein1: empty samples");
    const int n = static_cast<int>(samples_a.size());
    std::vector<int> assignment;
    if (float_costs) {
        // The matching is optimal for the float-rounded costs; the returned
        // value re-sums the true costs over that matching, so the result
        // over-estimates the exact W1 by at most the rounding slack.
        std::vector<float> cost(static_cast<std::size_t>(n) * n);
        std::vector<double> exact(static_cast<std::size_t>(n) * n);
        parallel_for(static_cast<std::size_t>(n), resolve_workers(workers),
                     [&](std::size_t begin, std::size_t end) {
                         for (std::size_t i = begin; i < end; ++i)
                             for (int j = 0; j < n; ++j) {
                                 exact[i * n + j] = ground(samples_a[i], samples_b[j]);
                                 cost[i * n + j] = static_cast<float>(exact[i * n + j]);
                             }
                     });
        solve_assignment_impl<float>(n, cost, assignment);
        double total = 0.0;
        for (int i = 0; i < n; ++i) total += exact[static_cast<std::size_t>(i) * n + assignment[i]];
        return total / n;
    }
    std::vector<double> cost(static_cast<std::size_t>(n) * n);
    parallel_for(static_cast<std::size_t>(n), resolve_workers(workers),
                 [&](std::size_t begin, std::size_t end) {
                     for (std::size_t i = begin; i < end; ++i)
                         for (int j = 0; j < n; ++j)
                             cost[i * n + j] = ground(samples_a[i], samples_b[j]);
                 });
    return solve_assignment_impl<double>(n, cost, assignment) / n;
}

double wasserstein1_1d_euclidean(std::vector<double> a, std::vector<double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("wasserstein1_1d_euclidean: sample sets must have equal size");
    if (a.empty()) throw std::invalid_argument("wasserstein1_1d_euclidean: empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return acc / a.size();
}

} // namespace hypocert
