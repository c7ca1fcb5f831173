#include "clab/finite_chain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

namespace clab {

namespace {

void require_state(int n, int x, const char* what) {
    if (x < 0 || x >= n)
        throw std::domain_error(std::string(what) + " state " + std::to_string(x) +
                                " outside chain of size " + std::to_string(n));
}

// Partial-pivot Gaussian elimination; A is n x n row-major, returns x with Ax = b.
std::vector<double> solve_linear(std::vector<double> A, std::vector<double> b, int n) {
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(A[static_cast<std::size_t>(r * n + col)]) >
                std::abs(A[static_cast<std::size_t>(pivot * n + col)]))
                pivot = r;
        if (std::abs(A[static_cast<std::size_t>(pivot * n + col)]) < 1e-300)
            throw std::domain_error("singular linear system in invariant-measure solve");
        if (pivot != col) {
            for (int c = 0; c < n; ++c)
                std::swap(A[static_cast<std::size_t>(col * n + c)],
                          A[static_cast<std::size_t>(pivot * n + c)]);
            std::swap(b[static_cast<std::size_t>(col)], b[static_cast<std::size_t>(pivot)]);
        }
        for (int r = col + 1; r < n; ++r) {
            double f = A[static_cast<std::size_t>(r * n + col)] /
                       A[static_cast<std::size_t>(col * n + col)];
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c)
                A[static_cast<std::size_t>(r * n + c)] -=
                    f * A[static_cast<std::size_t>(col * n + c)];
            b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(col)];
        }
    }
    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double acc = b[static_cast<std::size_t>(r)];
        for (int c = r + 1; c < n; ++c)
            acc -= A[static_cast<std::size_t>(r * n + c)] * x[static_cast<std::size_t>(c)];
        x[static_cast<std::size_t>(r)] = acc / A[static_cast<std::size_t>(r * n + r)];
    }
    return x;
}

// Strongly connected components (iterative Tarjan); returns component id per
// state, components numbered in reverse topological order.
std::vector<int> scc_ids(int n, const std::function<bool(int, int)>& edge, int& n_comps) {
    std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0);
    std::vector<bool> on_stack(static_cast<std::size_t>(n), false);
    std::vector<int> stack, comp(static_cast<std::size_t>(n), -1);
    int next_index = 0;
    n_comps = 0;

    struct Frame {
        int v;
        int next_child;
    };
    for (int root = 0; root < n; ++root) {
        if (index[static_cast<std::size_t>(root)] != -1) continue;
        std::vector<Frame> call;
        call.push_back({root, 0});
        index[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = next_index++;
        stack.push_back(root);
        on_stack[static_cast<std::size_t>(root)] = true;
        while (!call.empty()) {
            Frame& f = call.back();
            if (f.next_child < n) {
                int w = f.next_child++;
                if (!edge(f.v, w)) continue;
                if (index[static_cast<std::size_t>(w)] == -1) {
                    index[static_cast<std::size_t>(w)] = low[static_cast<std::size_t>(w)] =
                        next_index++;
                    stack.push_back(w);
                    on_stack[static_cast<std::size_t>(w)] = true;
                    call.push_back({w, 0});
                } else if (on_stack[static_cast<std::size_t>(w)]) {
                    low[static_cast<std::size_t>(f.v)] =
                        std::min(low[static_cast<std::size_t>(f.v)],
                                 index[static_cast<std::size_t>(w)]);
                }
            } else {
                if (low[static_cast<std::size_t>(f.v)] == index[static_cast<std::size_t>(f.v)]) {
                    while (true) {
                        int w = stack.back();
                        stack.pop_back();
                        on_stack[static_cast<std::size_t>(w)] = false;
                        comp[static_cast<std::size_t>(w)] = n_comps;
                        if (w == f.v) break;
                    }
                    ++n_comps;
                }
                int v = f.v;
                call.pop_back();
                if (!call.empty())
                    low[static_cast<std::size_t>(call.back().v)] =
                        std::min(low[static_cast<std::size_t>(call.back().v)],
                                 low[static_cast<std::size_t>(v)]);
            }
        }
    }
    return comp;
}

} // namespace

Distribution point_mass(int n, int x) {
    require_state(n, x, "point-mass");
    Distribution d;
    d.p.assign(static_cast<std::size_t>(n), 0.0);
    d.p[static_cast<std::size_t>(x)] = 1.0;
    return d;
}

double total_variation(const Distribution& mu, const Distribution& nu) {
    if (mu.size() != nu.size())
        throw std::domain_error("total variation of distributions with different state counts");
    double l1 = 0.0;
    for (std::size_t i = 0; i < mu.p.size(); ++i) l1 += std::abs(mu.p[i] - nu.p[i]);
    return 0.5 * l1;
}

FiniteChain FiniteChain::from_rows(const std::vector<std::vector<double>>& rows, double row_tol) {
    FiniteChain c;
    c.n = static_cast<int>(rows.size());
    if (c.n == 0) throw validation_error("chain has no states");
    c.P.reserve(static_cast<std::size_t>(c.n) * static_cast<std::size_t>(c.n));
    for (int i = 0; i < c.n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        if (static_cast<int>(row.size()) != c.n)
            throw validation_error("row " + std::to_string(i) + " has " +
                                   std::to_string(row.size()) + " entries, expected " +
                                   std::to_string(c.n));
        double sum = 0.0;
        for (double v : row) {
            if (v < 0.0)
                throw validation_error("row " + std::to_string(i) + " has a negative entry");
            sum += v;
        }
        if (std::abs(sum - 1.0) > row_tol)
            throw validation_error("row " + std::to_string(i) + " sums to " +
                                   std::to_string(sum));
        c.P.insert(c.P.end(), row.begin(), row.end());
    }
    return c;
}

Distribution evolve(const FiniteChain& chain, const Distribution& mu) {
    if (mu.size() != chain.n) throw std::domain_error("distribution size does not match chain");
    Distribution out;
    out.p.assign(static_cast<std::size_t>(chain.n), 0.0);
    for (int i = 0; i < chain.n; ++i) {
        double m = mu.p[static_cast<std::size_t>(i)];
        if (m == 0.0) continue;
        for (int j = 0; j < chain.n; ++j) out.p[static_cast<std::size_t>(j)] += m * chain.at(i, j);
    }
    return out;
}

std::vector<Distribution> invariant_measures(const FiniteChain& chain) {
    int n_comps = 0;
    std::vector<int> comp =
        scc_ids(chain.n, [&](int i, int j) { return chain.at(i, j) > 0.0; }, n_comps);

    // A component is recurrent iff it has no edge out of itself.
    std::vector<bool> recurrent(static_cast<std::size_t>(n_comps), true);
    for (int i = 0; i < chain.n; ++i)
        for (int j = 0; j < chain.n; ++j)
            if (chain.at(i, j) > 0.0 && comp[static_cast<std::size_t>(i)] !=
                                            comp[static_cast<std::size_t>(j)])
                recurrent[static_cast<std::size_t>(comp[static_cast<std::size_t>(i)])] = false;

    std::vector<Distribution> out;
    for (int c = 0; c < n_comps; ++c) {
        if (!recurrent[static_cast<std::size_t>(c)]) continue;
        std::vector<int> states;
        for (int i = 0; i < chain.n; ++i)
            if (comp[static_cast<std::size_t>(i)] == c) states.push_back(i);
        int m = static_cast<int>(states.size());

        // Solve mu Q = mu with the normalization row sum(mu) = 1.
        std::vector<double> A(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0.0);
        std::vector<double> b(static_cast<std::size_t>(m), 0.0);
        for (int r = 0; r < m; ++r)
            for (int cix = 0; cix < m; ++cix)
                A[static_cast<std::size_t>(r * m + cix)] =
                    chain.at(states[static_cast<std::size_t>(cix)],
                             states[static_cast<std::size_t>(r)]) -
                    (r == cix ? 1.0 : 0.0);
        for (int cix = 0; cix < m; ++cix) A[static_cast<std::size_t>(cix)] = 1.0;
        b[0] = 1.0;
        std::vector<double> mu = solve_linear(std::move(A), std::move(b), m);

        Distribution d;
        d.p.assign(static_cast<std::size_t>(chain.n), 0.0);
        for (int k = 0; k < m; ++k)
            d.p[static_cast<std::size_t>(states[static_cast<std::size_t>(k)])] =
                mu[static_cast<std::size_t>(k)];
        out.push_back(std::move(d));
    }
    return out;
}

Distribution invariant_measure(const FiniteChain& chain) {
    std::vector<Distribution> all = invariant_measures(chain);
    if (all.size() != 1)
        throw std::domain_error("chain has " + std::to_string(all.size()) +
                                " recurrent classes; invariant measure is not unique");
    return all.front();
}

double invariant_residual(const FiniteChain& chain, const Distribution& mu) {
    Distribution next = evolve(chain, mu);
    double r = 0.0;
    for (std::size_t i = 0; i < mu.p.size(); ++i)
        r = std::max(r, std::abs(next.p[i] - mu.p[i]));
    return r;
}

CouplingKernel independent_glued_kernel(const FiniteChain& chain) {
    CouplingKernel k;
    k.n = chain.n;
    int ns = k.states();
    k.K.assign(static_cast<std::size_t>(ns) * static_cast<std::size_t>(ns), 0.0);
    for (int a = 0; a < chain.n; ++a) {
        for (int b = 0; b < chain.n; ++b) {
            int s = a * chain.n + b;
            if (a == b) {
                for (int c = 0; c < chain.n; ++c)
                    k.K[static_cast<std::size_t>(s) * static_cast<std::size_t>(ns) +
                        static_cast<std::size_t>(c * chain.n + c)] = chain.at(a, c);
            } else {
                for (int c = 0; c < chain.n; ++c)
                    for (int d = 0; d < chain.n; ++d)
                        k.K[static_cast<std::size_t>(s) * static_cast<std::size_t>(ns) +
                            static_cast<std::size_t>(c * chain.n + d)] =
                            chain.at(a, c) * chain.at(b, d);
            }
        }
    }
    return k;
}

void validate_kernel(const FiniteChain& chain, const CouplingKernel& kernel, double tol) {
    if (kernel.n != chain.n)
        throw validation_error("kernel base size does not match the chain");
    int n = chain.n;
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            int s = a * n + b;
            for (int c = 0; c < n; ++c) {
                double m1 = 0.0, m2 = 0.0;
                for (int d = 0; d < n; ++d) {
                    m1 += kernel.at(s, c * n + d);
                    m2 += kernel.at(s, d * n + c);
                }
                if (std::abs(m1 - chain.at(a, c)) > tol)
                    throw validation_error("kernel first marginal broken at pair (" +
                                           std::to_string(a) + "," + std::to_string(b) +
                                           ") target " + std::to_string(c));
                if (std::abs(m2 - chain.at(b, c)) > tol)
                    throw validation_error("kernel second marginal broken at pair (" +
                                           std::to_string(a) + "," + std::to_string(b) +
                                           ") target " + std::to_string(c));
            }
            if (a == b) {
                for (int c = 0; c < n; ++c)
                    for (int d = 0; d < n; ++d)
                        if (c != d && kernel.at(s, c * n + d) > tol)
                            throw validation_error("kernel does not glue the diagonal at state " +
                                                   std::to_string(a));
            }
        }
    }
}

namespace {

void require_absorbing_diagonal(const CouplingKernel& kernel) {
    int n = kernel.n;
    for (int a = 0; a < n; ++a) {
        int s = a * n + a;
        for (int c = 0; c < n; ++c)
            for (int d = 0; d < n; ++d)
                if (c != d && kernel.at(s, c * n + d) > 0.0)
                    throw std::domain_error("kernel diagonal is not absorbing at state " +
                                            std::to_string(a));
    }
}

} // namespace

std::vector<double> meeting_survival(const CouplingKernel& kernel, int x, int y, int T) {
    require_state(kernel.n, x, "survival start");
    require_state(kernel.n, y, "survival start");
    require_absorbing_diagonal(kernel);
    int ns = kernel.states();
    std::vector<double> dist(static_cast<std::size_t>(ns), 0.0);
    dist[static_cast<std::size_t>(x * kernel.n + y)] = 1.0;
    std::vector<double> survival;
    survival.reserve(static_cast<std::size_t>(T) + 1);
    auto offdiag = [&](const std::vector<double>& d) {
        double m = 0.0;
        for (int a = 0; a < kernel.n; ++a)
            for (int b = 0; b < kernel.n; ++b)
                if (a != b) m += d[static_cast<std::size_t>(a * kernel.n + b)];
        return m;
    };
    survival.push_back(offdiag(dist));
    std::vector<double> next(static_cast<std::size_t>(ns));
    for (int t = 1; t <= T; ++t) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int s = 0; s < ns; ++s) {
            double m = dist[static_cast<std::size_t>(s)];
            if (m == 0.0) continue;
            for (int u = 0; u < ns; ++u) next[static_cast<std::size_t>(u)] += m * kernel.at(s, u);
        }
        dist.swap(next);
        survival.push_back(offdiag(dist));
    }
    return survival;
}

std::vector<double> meeting_survival_via_inflow(const CouplingKernel& kernel, int x, int y, int T) {
    require_state(kernel.n, x, "survival start");
    require_state(kernel.n, y, "survival start");
    require_absorbing_diagonal(kernel);
    int n = kernel.n;
    int ns = kernel.states();
    std::vector<double> dist(static_cast<std::size_t>(ns), 0.0);
    dist[static_cast<std::size_t>(x * n + y)] = 1.0;
    double absorbed = (x == y) ? 1.0 : 0.0;
    std::vector<double> survival{1.0 - absorbed};
    std::vector<double> next(static_cast<std::size_t>(ns));
    for (int t = 1; t <= T; ++t) {
        std::fill(next.begin(), next.end(), 0.0);
        double inflow = 0.0;
        for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n; ++b) {
                int s = a * n + b;
                double m = dist[static_cast<std::size_t>(s)];
                if (m == 0.0) continue;
                for (int u = 0; u < ns; ++u) {
                    double w = m * kernel.at(s, u);
                    if (w == 0.0) continue;
                    next[static_cast<std::size_t>(u)] += w;
                    if (a != b && (u / n) == (u % n)) inflow += w;
                }
            }
        }
        absorbed += inflow;
        dist.swap(next);
        survival.push_back(1.0 - absorbed);
    }
    return survival;
}

InequalityReport coupling_inequality_verify(const FiniteChain& chain, const CouplingKernel& kernel,
                                            int x, int y, int T, double tol) {
    require_state(chain.n, x, "start");
    require_state(chain.n, y, "start");
    validate_kernel(chain, kernel, tol);
    std::vector<double> survival = meeting_survival(kernel, x, y, T);
    Distribution mx = point_mass(chain.n, x);
    Distribution my = point_mass(chain.n, y);
    InequalityReport report;
    for (int t = 0; t <= T; ++t) {
        double tv = total_variation(mx, my);
        InequalityRow row{t, tv, survival[static_cast<std::size_t>(t)],
                          tv <= survival[static_cast<std::size_t>(t)] + tol};
        report.max_excess = std::max(report.max_excess, tv - row.survival);
        report.holds = report.holds && row.ok;
        report.rows.push_back(row);
        if (t < T) {
            mx = evolve(chain, mx);
            my = evolve(chain, my);
        }
    }
    return report;
}

SpliceReport splice_marginal_check(const FiniteChain& chain, const CouplingKernel& kernel, int x,
                                   int y, int T, double tol, long path_cap) {
    require_state(chain.n, x, "start");
    require_state(chain.n, y, "start");
    validate_kernel(chain, kernel, tol);
    int n = chain.n;

    std::vector<std::vector<double>> laws(static_cast<std::size_t>(T) + 1,
                                          std::vector<double>(static_cast<std::size_t>(n), 0.0));
    long leaves = 0;

    // Depth-first over positive-probability coupled paths; the spliced state
    // at time t is the first component once a meeting happened strictly
    // earlier, the second otherwise.
    std::function<void(int, int, int, bool, double)> dfs = [&](int t, int a, int b,
                                                               bool met_before, double prob) {
        int state = met_before ? a : b;
        laws[static_cast<std::size_t>(t)][static_cast<std::size_t>(state)] += prob;
        if (t == T) {
            if (++leaves > path_cap)
                throw validation_error("splice check: path count exceeds cap of " +
                                       std::to_string(path_cap));
            return;
        }
        int s = a * n + b;
        bool met = met_before || (a == b);
        for (int c = 0; c < n; ++c)
            for (int d = 0; d < n; ++d) {
                double w = kernel.at(s, c * n + d);
                if (w > 0.0) dfs(t + 1, c, d, met, prob * w);
            }
    };
    dfs(0, x, y, false, 1.0);

    SpliceReport report;
    report.leaves = leaves;
    Distribution my = point_mass(n, y);
    for (int t = 0; t <= T; ++t) {
        double l1 = 0.0;
        for (int s = 0; s < n; ++s)
            l1 += std::abs(laws[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] -
                           my.p[static_cast<std::size_t>(s)]);
        report.l1.push_back(l1);
        report.max_l1 = std::max(report.max_l1, l1);
        if (t < T) my = evolve(chain, my);
    }
    report.ok = report.max_l1 <= tol;
    return report;
}

std::vector<Distribution> spliced_laws(const CoupledPathEnsemble& ensemble) {
    if (ensemble.paths.empty()) throw std::domain_error("empty path ensemble");
    std::size_t len = ensemble.paths.front().first.size();
    std::vector<Distribution> laws(len);
    for (auto& d : laws) d.p.assign(static_cast<std::size_t>(ensemble.n), 0.0);
    for (const auto& [path, prob] : ensemble.paths) {
        if (path.size() != len) throw std::domain_error("ragged path ensemble");
        bool met_before = false;
        for (std::size_t t = 0; t < len; ++t) {
            int state = met_before ? path[t].first : path[t].second;
            laws[t].p[static_cast<std::size_t>(state)] += prob;
            if (path[t].first == path[t].second) met_before = true;
        }
    }
    return laws;
}

namespace {

std::vector<double> read_matrix_file(const std::string& path, int& n) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open matrix file '" + path + "'");
    if (!(in >> n) || n <= 0)
        throw validation_error("matrix file '" + path + "' must start with a positive state count");
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    double v;
    while (in >> v) values.push_back(v);
    if (values.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n))
        throw validation_error("matrix file '" + path + "' has " + std::to_string(values.size()) +
                               " entries, expected " + std::to_string(n) + "x" + std::to_string(n));
    return values;
}

void check_rows(const std::vector<double>& values, int n, const std::string& path) {
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            double v = values[static_cast<std::size_t>(i * n + j)];
            if (v < 0.0)
                throw validation_error("matrix file '" + path + "': row " + std::to_string(i) +
                                       " has a negative entry");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw validation_error("matrix file '" + path + "': row " + std::to_string(i) +
                                   " sums to " + std::to_string(sum));
    }
}

} // namespace

FiniteChain load_chain(const std::string& path) {
    int n = 0;
    std::vector<double> values = read_matrix_file(path, n);
    check_rows(values, n, path);
    FiniteChain c;
    c.n = n;
    c.P = std::move(values);
    return c;
}

CouplingKernel load_kernel(const std::string& path) {
    int m = 0;
    std::vector<double> values = read_matrix_file(path, m);
    int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m))));
    if (n * n != m)
        throw validation_error("kernel file '" + path + "': state count " + std::to_string(m) +
                               " is not a perfect square");
    check_rows(values, m, path);
    CouplingKernel k;
    k.n = n;
    k.K = std::move(values);
    return k;
}

RationalChain rational_chain_from_weights(int n, const std::vector<long>& weights) {
    if (static_cast<int>(weights.size()) != n * n)
        throw std::invalid_argument("weight count does not match state count");
    RationalChain c;
    c.n = n;
    c.P.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        long sum = 0;
        for (int j = 0; j < n; ++j) {
            long w = weights[static_cast<std::size_t>(i * n + j)];
            if (w < 0) throw std::invalid_argument("negative weight");
            sum += w;
        }
        if (sum == 0) throw std::invalid_argument("row " + std::to_string(i) + " has zero weight");
        for (int j = 0; j < n; ++j)
            c.P[static_cast<std::size_t>(i * n + j)] =
                BigRat(weights[static_cast<std::size_t>(i * n + j)], sum);
    }
    return c;
}

RationalChain rational_chain_from_doubles(const FiniteChain& chain) {
    RationalChain c;
    c.n = chain.n;
    c.P.resize(chain.P.size());
    for (std::size_t i = 0; i < chain.P.size(); ++i) c.P[i] = BigRat(chain.P[i]);
    for (int i = 0; i < c.n; ++i) {
        BigRat sum = 0;
        for (int j = 0; j < c.n; ++j) sum += c.at(i, j);
        if (sum != 1)
            throw validation_error("row " + std::to_string(i) +
                                   " does not sum to 1 exactly; use rational weights instead");
    }
    return c;
}

RationalKernel rational_kernel_from_doubles(const CouplingKernel& kernel) {
    RationalKernel k;
    k.n = kernel.n;
    k.K.resize(kernel.K.size());
    for (std::size_t i = 0; i < kernel.K.size(); ++i) k.K[i] = BigRat(kernel.K[i]);
    for (int s = 0; s < k.states(); ++s) {
        BigRat sum = 0;
        for (int t = 0; t < k.states(); ++t) sum += k.at(s, t);
        if (sum != 1)
            throw validation_error("kernel row " + std::to_string(s) +
                                   " does not sum to 1 exactly; exact mode needs exact rows");
    }
    return k;
}

FiniteChain to_double_chain(const RationalChain& chain) {
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(chain.n));
    for (int i = 0; i < chain.n; ++i)
        for (int j = 0; j < chain.n; ++j)
            rows[static_cast<std::size_t>(i)].push_back(
                chain.at(i, j).convert_to<double>());
    return FiniteChain::from_rows(rows, 1e-9);
}

RationalKernel independent_glued_kernel(const RationalChain& chain) {
    RationalKernel k;
    k.n = chain.n;
    int ns = k.states();
    k.K.assign(static_cast<std::size_t>(ns) * static_cast<std::size_t>(ns), BigRat(0));
    for (int a = 0; a < chain.n; ++a)
        for (int b = 0; b < chain.n; ++b) {
            int s = a * chain.n + b;
            if (a == b) {
                for (int c = 0; c < chain.n; ++c)
                    k.K[static_cast<std::size_t>(s) * static_cast<std::size_t>(ns) +
                        static_cast<std::size_t>(c * chain.n + c)] = chain.at(a, c);
            } else {
                for (int c = 0; c < chain.n; ++c)
                    for (int d = 0; d < chain.n; ++d)
                        k.K[static_cast<std::size_t>(s) * static_cast<std::size_t>(ns) +
                            static_cast<std::size_t>(c * chain.n + d)] =
                            chain.at(a, c) * chain.at(b, d);
            }
        }
    return k;
}

void validate_kernel_exact(const RationalChain& chain, const RationalKernel& kernel) {
    if (kernel.n != chain.n) throw validation_error("kernel base size does not match the chain");
    int n = chain.n;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            int s = a * n + b;
            for (int c = 0; c < n; ++c) {
                BigRat m1 = 0, m2 = 0;
                for (int d = 0; d < n; ++d) {
                    m1 += kernel.at(s, c * n + d);
                    m2 += kernel.at(s, d * n + c);
                }
                if (m1 != chain.at(a, c) || m2 != chain.at(b, c))
                    throw validation_error("exact kernel marginal broken at pair (" +
                                           std::to_string(a) + "," + std::to_string(b) + ")");
            }
            if (a == b)
                for (int c = 0; c < n; ++c)
                    for (int d = 0; d < n; ++d)
                        if (c != d && kernel.at(s, c * n + d) != 0)
                            throw validation_error("exact kernel does not glue the diagonal");
        }
}

namespace {

// Common-denominator integer form: entries N with row sums equal to den.
struct ScaledMatrix {
    int n = 0;
    BigInt den = 1;
    std::vector<BigInt> N;

    const BigInt& at(int i, int j) const { return N[static_cast<std::size_t>(i * n + j)]; }
};

ScaledMatrix scale(const std::vector<BigRat>& entries, int n) {
    ScaledMatrix m;
    m.n = n;
    for (const BigRat& r : entries) {
        BigInt d = denominator(r);
        m.den = boost::multiprecision::lcm(m.den, d);
    }
    m.N.resize(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i)
        m.N[i] = numerator(entries[i]) * (m.den / denominator(entries[i]));
    return m;
}

std::vector<BigInt> evolve_scaled(const ScaledMatrix& m, const std::vector<BigInt>& v) {
    std::vector<BigInt> out(static_cast<std::size_t>(m.n), BigInt(0));
    for (int i = 0; i < m.n; ++i) {
        if (v[static_cast<std::size_t>(i)] == 0) continue;
        for (int j = 0; j < m.n; ++j) {
            const BigInt& e = m.at(i, j);
            if (e != 0) out[static_cast<std::size_t>(j)] += v[static_cast<std::size_t>(i)] * e;
        }
    }
    return out;
}

} // namespace

InequalityReport coupling_inequality_verify_exact(const RationalChain& chain,
                                                  const RationalKernel& kernel, int x, int y,
                                                  int T) {
    require_state(chain.n, x, "start");
    require_state(chain.n, y, "start");
    validate_kernel_exact(chain, kernel);

    ScaledMatrix mc = scale(chain.P, chain.n);
    ScaledMatrix mk = scale(kernel.K, kernel.states());

    std::vector<BigInt> vx(static_cast<std::size_t>(chain.n), BigInt(0));
    std::vector<BigInt> vy = vx;
    vx[static_cast<std::size_t>(x)] = 1;
    vy[static_cast<std::size_t>(y)] = 1;
    std::vector<BigInt> w(static_cast<std::size_t>(kernel.states()), BigInt(0));
    w[static_cast<std::size_t>(x * chain.n + y)] = 1;

    BigInt den_c = 1; // Dc^t
    BigInt den_k = 1; // Dk^t
    InequalityReport report;
    for (int t = 0; t <= T; ++t) {
        BigInt l1 = 0;
        for (int s = 0; s < chain.n; ++s) {
            BigInt d = vx[static_cast<std::size_t>(s)] - vy[static_cast<std::size_t>(s)];
            l1 += d < 0 ? -d : d;
        }
        BigInt off = 0;
        for (int a = 0; a < chain.n; ++a)
            for (int b = 0; b < chain.n; ++b)
                if (a != b) off += w[static_cast<std::size_t>(a * chain.n + b)];

        // tv = l1 / (2 Dc^t), survival = off / Dk^t; compare exactly.
        bool ok = l1 * den_k <= 2 * off * den_c;
        InequalityRow row;
        row.t = t;
        row.tv = BigRat(l1, 2 * den_c).convert_to<double>();
        row.survival = BigRat(off, den_k).convert_to<double>();
        row.ok = ok;
        report.holds = report.holds && ok;
        report.max_excess = std::max(report.max_excess, row.tv - row.survival);
        report.rows.push_back(row);

        if (t < T) {
            vx = evolve_scaled(mc, vx);
            vy = evolve_scaled(mc, vy);
            w = evolve_scaled(mk, w);
            den_c *= mc.den;
            den_k *= mk.den;
        }
    }
    return report;
}

} // namespace clab
