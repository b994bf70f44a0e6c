#include "gsc/ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "gsc/errors.hpp"

namespace gsc::ot {

namespace {

void check_dims(const char* op, const Matrix& plan, std::size_t n, std::size_t m) {
  if (plan.rows != n || plan.cols != m)
    throw ContractViolation(std::string(op) + ": plan is " + std::to_string(plan.rows) + "x" +
                            std::to_string(plan.cols) + ", expected " + std::to_string(n) + "x" + std::to_string(m));
}

void check_marginal(const char* which, std::span<const double> w, std::size_t n) {
  if (w.size() != n) throw ContractViolation(std::string("sinkhorn: marginal ") + which + " has wrong length");
  double s = 0.0;
  for (double x : w) {
    if (!(x > 0.0) || !std::isfinite(x))
      throw ContractViolation(std::string("sinkhorn: marginal ") + which + " must be positive");
    s += x;
  }
  if (std::abs(s - 1.0) > 1e-9) throw ContractViolation(std::string("sinkhorn: marginal ") + which + " must sum to 1");
}

// out_i = logsumexp_j (K_ij + g_j)
void row_lse(const Matrix& k, std::span<const double> g, std::span<double> out) {
  for (std::size_t i = 0; i < k.rows; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k.cols; ++j) mx = std::max(mx, k(i, j) + g[j]);
    double s = 0.0;
    for (std::size_t j = 0; j < k.cols; ++j) s += std::exp(k(i, j) + g[j] - mx);
    out[i] = mx + std::log(s);
  }
}

// out_j = logsumexp_i (K_ij + f_i)
void col_lse(const Matrix& k, std::span<const double> f, std::span<double> out) {
  const std::size_t n = k.rows, m = k.cols;
  std::vector<double> mx(m, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) mx[j] = std::max(mx[j], k(i, j) + f[i]);
  std::vector<double> s(m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) s[j] += std::exp(k(i, j) + f[i] - mx[j]);
  for (std::size_t j = 0; j < m; ++j) out[j] = mx[j] + std::log(s[j]);
}

Matrix scaled_kernel(const Matrix& cost, double beta) {
  Matrix k(cost.rows, cost.cols);
  for (std::size_t i = 0; i < cost.data.size(); ++i) k.data[i] = -cost.data[i] / beta;
  return k;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace

std::vector<double> uniform_marginal(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

Matrix node_cost_matrix(const Matrix& a, const Matrix& b, double tau) {
  if (!(tau > 0.0)) throw ContractViolation("node_cost_matrix: tau must be positive");
  if (a.cols != b.cols) throw DimensionError("node_cost_matrix", "embedding widths differ");
  Matrix c(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j) c(i, j) = std::exp(-cosine(a.row(i), b.row(j)) / tau);
  return c;
}

namespace {

struct LogProblem {
  Matrix k;  // -C/β
  std::vector<double> log_u, log_v;
};

LogProblem log_problem(const Matrix& cost, std::span<const double> u, std::span<const double> v, double beta) {
  LogProblem p{scaled_kernel(cost, beta), std::vector<double>(u.size()), std::vector<double>(v.size())};
  for (std::size_t i = 0; i < u.size(); ++i) p.log_u[i] = std::log(u[i]);
  for (std::size_t j = 0; j < v.size(); ++j) p.log_v[j] = std::log(v[j]);
  return p;
}

// Exact column update g(f) followed by the row log-sums r it leaves behind.
void column_update(const LogProblem& p, std::span<const double> f, std::span<double> g, std::span<double> r) {
  col_lse(p.k, f, g);
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = p.log_v[j] - g[j];
  row_lse(p.k, g, r);
}

// Row deviations |Σ_j T_ij - u_i| given f and the row log-sums r.
std::pair<double, double> row_violation(std::span<const double> f, std::span<const double> r,
                                        std::span<const double> u) {
  double worst = 0.0, total = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double dev = std::abs(std::exp(f[i] + r[i]) - u[i]);
    worst = std::max(worst, dev);
    total += dev;
  }
  return {worst, total};
}

Matrix plan_of(const LogProblem& p, std::span<const double> f, std::span<const double> g) {
  Matrix t(p.k.rows, p.k.cols);
  for (std::size_t i = 0; i < t.rows; ++i)
    for (std::size_t j = 0; j < t.cols; ++j) t(i, j) = std::exp(p.k(i, j) + f[i] + g[j]);
  return t;
}

// diag(r) - T diag(1/c) Tᵀ with r, c the plan's row and column sums: the
// Jacobian of the row sums with respect to f when g follows f exactly.
Eigen::MatrixXd row_jacobian(const Matrix& t) {
  const std::size_t n = t.rows, m = t.cols;
  std::vector<double> c(m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) c[j] += t(i, j);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < m; ++j) r += t(i, j);
    jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += r;
    for (std::size_t k = i; k < n; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += t(i, j) * t(k, j) / c[j];
      jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) -= s;
      if (k != i) jac(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) -= s;
    }
  }
  return jac;
}

// Newton step for the Jacobian system with the last potential pinned. The
// full system has the constant vector in its kernel and its last equation
// follows from the others by mass conservation. Returns false when the
// reduced system cannot be factored.
bool pinned_step(const Eigen::MatrixXd& jac, const Eigen::VectorXd& residual, Eigen::VectorXd& step) {
  const Eigen::Index q = jac.rows() - 1;
  Eigen::MatrixXd reduced = jac.topLeftCorner(q, q);
  reduced.diagonal().array() += 1e-14;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(reduced);
  if (ldlt.info() != Eigen::Success) return false;
  step = Eigen::VectorXd::Zero(q + 1);
  step.head(q) = ldlt.solve(residual.head(q));
  return step.allFinite();
}

}  // namespace

SinkhornResult sinkhorn(const Matrix& cost, std::span<const double> u, std::span<const double> v,
                        const SinkhornOptions& opts, bool keep_trace) {
  if (!(opts.beta > 0.0)) throw ContractViolation("sinkhorn: beta must be positive");
  if (opts.max_iters < 1) throw ContractViolation("sinkhorn: max_iters must be at least 1");
  if (cost.rows == 0 || cost.cols == 0) throw ContractViolation("sinkhorn: empty cost matrix");
  for (double c : cost.data)
    if (!std::isfinite(c)) throw ContractViolation("sinkhorn: non-finite cost entry");
  check_marginal("u", u, cost.rows);
  check_marginal("v", v, cost.cols);

  const std::size_t n = cost.rows, m = cost.cols;
  LogProblem p = log_problem(cost, u, v, opts.beta);
  std::vector<double> f(n, 0.0), g(m, 0.0), r(n);
  SinkhornResult res;
  int t = 0;
  auto record = [&](std::pair<double, double> viol) {
    res.violation_history.push_back(viol.second);
    res.iterations = t;
    res.marginal_violation = viol.first;
    res.converged = viol.first < opts.tol;
  };
  auto sweep = [&] {
    ++t;
    for (std::size_t i = 0; i < n; ++i) f[i] = p.log_u[i] - r[i];
    column_update(p, f, g, r);
    record(row_violation(f, r, u));
  };

  row_lse(p.k, g, r);
  const int plain = opts.accelerate_after > 0 ? std::min(opts.accelerate_after, opts.max_iters) : opts.max_iters;
  while (t < plain && !res.converged) {
    sweep();
    if (keep_trace) {
      res.trace.f.push_back(f);
      res.trace.g.push_back(g);
    }
  }
  if (res.converged || t >= opts.max_iters) {
    res.plan = plan_of(p, f, g);
    return res;
  }

  // Accelerated phase. β is annealed geometrically from the cost range and
  // each stage is solved from the previous one's potentials. Within a stage,
  // both sweeps and Newton steps on f (g eliminated) ascend the dual
  // φ(f) = <u, f> + <v, g(f)> - 1; a Newton step is kept when it satisfies
  // Armijo on φ or, at full length, halves the violation, and is otherwise
  // replaced by one sweep.
  res.accelerated = true;
  std::vector<double> f_try(n), g_try(m), r_try(n);
  Eigen::VectorXd residual(static_cast<Eigen::Index>(n)), step;
  auto dual = [&](std::span<const double> ff, std::span<const double> gg) {
    double d = -1.0;
    for (std::size_t i = 0; i < n; ++i) d += u[i] * ff[i];
    for (std::size_t j = 0; j < m; ++j) d += v[j] * gg[j];
    return d;
  };
  auto newton = [&] {
    if (n < 2) return false;
    for (std::size_t i = 0; i < n; ++i) residual(static_cast<Eigen::Index>(i)) = u[i] - std::exp(f[i] + r[i]);
    if (!pinned_step(row_jacobian(plan_of(p, f, g)), residual, step)) return false;
    const double phi = dual(f, g), slope = residual.dot(step);
    const double current = row_violation(f, r, u).first;
    for (double alpha = 1.0; alpha > 1e-12; alpha *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) f_try[i] = f[i] + alpha * step(static_cast<Eigen::Index>(i));
      column_update(p, f_try, g_try, r_try);
      const auto viol = row_violation(f_try, r_try, u);
      const bool ascent = dual(f_try, g_try) >= phi + 1e-4 * alpha * slope;
      if (ascent || (alpha == 1.0 && viol.first < 0.5 * current)) {
        f.swap(f_try);
        g.swap(g_try);
        r.swap(r_try);
        ++t;
        record(viol);
        return true;
      }
    }
    return false;
  };

  const auto [lo, hi] = std::minmax_element(cost.data.begin(), cost.data.end());
  double stage_beta = opts.beta;
  std::fill(f.begin(), f.end(), 0.0);
  std::fill(g.begin(), g.end(), 0.0);
  auto set_beta = [&](double b) {
    for (double& x : f) x *= stage_beta / b;
    for (double& x : g) x *= stage_beta / b;
    stage_beta = b;
    p.k = scaled_kernel(cost, b);
    row_lse(p.k, g, r);
  };
  std::vector<double> schedule;
  for (double b = *hi - *lo; b > opts.beta; b *= 0.7) schedule.push_back(b);
  schedule.push_back(opts.beta);
  for (std::size_t s = 0; s < schedule.size() && t < opts.max_iters; ++s) {
    set_beta(schedule[s]);
    const double stage_tol = s + 1 == schedule.size() ? opts.tol : 1e-4;
    while (t < opts.max_iters) {
      if (!newton()) sweep();
      if (res.marginal_violation < stage_tol) break;
    }
  }
  if (stage_beta != opts.beta) {
    set_beta(opts.beta);
    res.marginal_violation = row_violation(f, r, u).first;
  }
  res.converged = res.marginal_violation < opts.tol;

  res.plan = plan_of(p, f, g);
  return res;
}

Matrix sinkhorn_backward(const Matrix& cost, std::span<const double> u, std::span<const double> v,
                         const SinkhornOptions& opts, const SinkhornResult& result, const Matrix& grad_plan) {
  const std::size_t n = cost.rows, m = cost.cols;
  check_dims("sinkhorn_backward", grad_plan, n, m);
  if (result.accelerated) return sinkhorn_implicit_backward(result.plan, opts.beta, grad_plan);

  const auto steps = static_cast<std::size_t>(result.iterations);
  if (result.trace.f.size() != steps || steps == 0)
    throw ContractViolation("sinkhorn_backward: result carries no iteration trace");
  const LogProblem p = log_problem(cost, u, v, opts.beta);

  Matrix dk(n, m);
  std::vector<double> df(n, 0.0), dg(m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double w = grad_plan(i, j) * result.plan(i, j);
      dk(i, j) = w;
      df[i] += w;
      dg[j] += w;
    }

  const std::vector<double> zeros(m, 0.0);
  for (std::size_t t = steps; t-- > 0;) {
    const auto& f = result.trace.f[t];
    const auto& g = result.trace.g[t];
    const auto& g_prev = t > 0 ? result.trace.g[t - 1] : zeros;
    // g_j = log v_j - LSE_i(K_ij + f_i); ∂g_j/∂K_ij = ∂g_j/∂f_i = -P_ij
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const double q = std::exp(p.k(i, j) + f[i] + g[j] - p.log_v[j]);
        dk(i, j) -= dg[j] * q;
        df[i] -= dg[j] * q;
      }
    // f_i = log u_i - LSE_j(K_ij + g_prev_j); ∂f_i/∂K_ij = ∂f_i/∂g_prev_j = -Q_ij
    std::fill(dg.begin(), dg.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const double q = std::exp(p.k(i, j) + g_prev[j] + f[i] - p.log_u[i]);
        dk(i, j) -= df[i] * q;
        dg[j] -= df[i] * q;
      }
    std::fill(df.begin(), df.end(), 0.0);
  }

  Matrix dcost(n, m);
  for (std::size_t i = 0; i < dk.data.size(); ++i) dcost.data[i] = -dk.data[i] / opts.beta;
  return dcost;
}

Matrix sinkhorn_implicit_backward(const Matrix& plan, double beta, const Matrix& grad_plan) {
  const std::size_t n = plan.rows, m = plan.cols;
  check_dims("sinkhorn_implicit_backward", grad_plan, n, m);
  // dL/dC = -(1/β) T∘(G - a 1ᵀ - 1 bᵀ) with (a, b) making every row and column
  // of T∘(G - a - b) sum to zero; b is eliminated through the column equations.
  std::vector<double> c(m, 0.0), col_w(m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      c[j] += plan(i, j);
      col_w[j] += plan(i, j) * grad_plan(i, j);
    }
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += plan(i, j) * (grad_plan(i, j) - col_w[j] / c[j]);
    rhs(static_cast<Eigen::Index>(i)) = s;
  }
  Eigen::VectorXd a;
  if (!pinned_step(row_jacobian(plan), rhs, a))
    throw ContractViolation("sinkhorn_implicit_backward: plan support is disconnected");
  std::vector<double> b(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += plan(i, j) * (grad_plan(i, j) - a(static_cast<Eigen::Index>(i)));
    b[j] = s / c[j];
  }
  Matrix dcost(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      dcost(i, j) = -plan(i, j) * (grad_plan(i, j) - a(static_cast<Eigen::Index>(i)) - b[j]) / beta;
  return dcost;
}

double wasserstein(const Matrix& cost, const Matrix& plan) {
  check_dims("wasserstein", plan, cost.rows, cost.cols);
  double s = 0.0;
  for (std::size_t i = 0; i < cost.data.size(); ++i) s += plan.data[i] * cost.data[i];
  return s;
}

double marginal_violation(const Matrix& plan, std::span<const double> u, std::span<const double> v) {
  double worst = 0.0;
  std::vector<double> col(plan.cols, 0.0);
  for (std::size_t i = 0; i < plan.rows; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < plan.cols; ++j) {
      row += plan(i, j);
      col[j] += plan(i, j);
    }
    worst = std::max(worst, std::abs(row - u[i]));
  }
  for (std::size_t j = 0; j < plan.cols; ++j) worst = std::max(worst, std::abs(col[j] - v[j]));
  return worst;
}

Matrix intra_distances(const Matrix& adjacency, double tau) {
  if (!(tau > 0.0)) throw ContractViolation("intra_distances: tau must be positive");
  Matrix c(adjacency.rows, adjacency.cols);
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] = std::exp(-adjacency.data[i] / tau);
  return c;
}

Matrix intra_distances_sampled(const Subgraph& s, double tau) { return intra_distances(s.adjacency, tau); }

double gromov_wasserstein_direct(const Matrix& c1, const Matrix& c2, const Matrix& plan) {
  const std::size_t n = c1.rows, m = c2.rows;
  if (c1.cols != n || c2.cols != m) throw ContractViolation("gromov_wasserstein: intra matrices must be square");
  check_dims("gromov_wasserstein", plan, n, m);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double tij = plan(i, j);
      if (tij == 0.0) continue;
      double inner = 0.0;
      for (std::size_t ip = 0; ip < n; ++ip)
        for (std::size_t jp = 0; jp < m; ++jp) inner += plan(ip, jp) * std::abs(c1(i, ip) - c2(j, jp));
      total += tij * inner;
    }
  return total;
}

double gromov_wasserstein_layered(const Matrix& c1, const Matrix& c2, const Matrix& plan) {
  const std::size_t n = c1.rows, m = c2.rows;
  if (c1.cols != n || c2.cols != m) throw ContractViolation("gromov_wasserstein: intra matrices must be square");
  check_dims("gromov_wasserstein", plan, n, m);

  std::vector<double> levels(c1.data);
  levels.insert(levels.end(), c2.data.begin(), c2.data.end());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  std::vector<double> r(n, 0.0), s(m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      r[i] += plan(i, j);
      s[j] += plan(i, j);
    }

  Matrix b1(n, n), b2(m, m), tb2(n, m), x(n, m);
  double total = 0.0;
  // Layer k covers (levels[k-1], levels[k]]; below the minimum both indicators are 1.
  for (std::size_t lk = 1; lk < levels.size(); ++lk) {
    const double t = levels[lk];
    const double delta = t - levels[lk - 1];
    for (std::size_t q = 0; q < c1.data.size(); ++q) b1.data[q] = c1.data[q] >= t ? 1.0 : 0.0;
    for (std::size_t q = 0; q < c2.data.size(); ++q) b2.data[q] = c2.data[q] >= t ? 1.0 : 0.0;

    double term1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t ip = 0; ip < n; ++ip) acc += b1(i, ip) * r[ip];
      term1 += r[i] * acc;
    }
    double term2 = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t jp = 0; jp < m; ++jp) acc += b2(j, jp) * s[jp];
      term2 += s[j] * acc;
    }
    // tb2 = T · B2ᵀ, x = B1 · tb2
    for (std::size_t ip = 0; ip < n; ++ip)
      for (std::size_t j = 0; j < m; ++j) {
        double acc = 0.0;
        for (std::size_t jp = 0; jp < m; ++jp) acc += plan(ip, jp) * b2(j, jp);
        tb2(ip, j) = acc;
      }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        double acc = 0.0;
        for (std::size_t ip = 0; ip < n; ++ip) acc += b1(i, ip) * tb2(ip, j);
        x(i, j) = acc;
      }
    double cross = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += plan(i, j) * x(i, j);
      cross += acc;
    }
    total += delta * ((term1 + term2) - 2.0 * cross);
  }
  return total;
}

double gromov_wasserstein(const Matrix& c1, const Matrix& c2, const Matrix& plan) {
  if (std::max(c1.rows, c2.rows) <= 32) return gromov_wasserstein_direct(c1, c2, plan);
  return gromov_wasserstein_layered(c1, c2, plan);
}

GromovGradient gromov_wasserstein_grad(const Matrix& c1, const Matrix& c2, const Matrix& plan) {
  const std::size_t n = c1.rows, m = c2.rows;
  check_dims("gromov_wasserstein_grad", plan, n, m);
  GromovGradient g{Matrix(n, m), Matrix(n, n), Matrix(m, m)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double tij = plan(i, j);
      for (std::size_t ip = 0; ip < n; ++ip)
        for (std::size_t jp = 0; jp < m; ++jp) {
          const double diff = c1(i, ip) - c2(j, jp);
          const double tp = plan(ip, jp);
          // (i,j) appears as the first and as the second factor of the product.
          g.d_plan(i, j) += tp * std::abs(diff);
          g.d_plan(ip, jp) += tij * std::abs(diff);
          const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
          const double w = tij * tp * sgn;
          g.d_c1(i, ip) += w;
          g.d_c2(j, jp) -= w;
        }
    }
  return g;
}

}  // namespace gsc::ot
