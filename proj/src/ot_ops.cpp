#include "gsc/ot_ops.hpp"

#include <memory>

#include "gsc/errors.hpp"

namespace gsc::ot {

namespace {

void accumulate(ad::Node& n, const Matrix& g) {
  if (!n.requires_grad) return;
  n.ensure_grad();
  for (std::size_t i = 0; i < g.data.size(); ++i) n.grad[i] += g.data[i];
}

Matrix grad_matrix(const ad::Node& n, std::size_t rows, std::size_t cols) {
  if (n.grad.empty()) return Matrix(rows, cols);
  return Matrix(rows, cols, n.grad);
}

}  // namespace

ad::Tensor node_cost(ad::Tape& tape, const ad::Tensor& a, const ad::Tensor& b, double tau) {
  if (!(tau > 0.0)) throw ContractViolation("node_cost: tau must be positive");
  return tape.exp(tape.scale(ad::cosine_matrix(tape, a, b), -1.0 / tau));
}

ad::Tensor intra_cost(ad::Tape& tape, const ad::Tensor& adjacency, double tau) {
  if (!(tau > 0.0)) throw ContractViolation("intra_cost: tau must be positive");
  return tape.exp(tape.scale(adjacency, -1.0 / tau));
}

std::vector<ad::Tensor> sinkhorn_plans(ad::Tape& tape, std::span<const ad::Tensor> costs,
                                       const SinkhornOptions& opts, PlanGradient mode, std::vector<PlanStats>* stats,
                                       kernels::Exec exec) {
  const std::size_t count = costs.size();
  struct PairState {
    Matrix cost;
    std::vector<double> u, v;
    SinkhornResult result;
  };
  auto states = std::make_shared<std::vector<PairState>>(count);
  const bool trace = mode == PlanGradient::unrolled && ad::Tape::any_requires_grad(costs);
  for (std::size_t p = 0; p < count; ++p) {
    auto& st = (*states)[p];
    st.cost = costs[p].to_matrix();
    st.u = uniform_marginal(st.cost.rows);
    st.v = uniform_marginal(st.cost.cols);
  }

  const auto n_pairs = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic) if (exec == kernels::Exec::parallel && count > 1)
  for (std::ptrdiff_t p = 0; p < n_pairs; ++p) {
    auto& st = (*states)[static_cast<std::size_t>(p)];
    st.result = sinkhorn(st.cost, st.u, st.v, opts, trace);
  }

  std::vector<ad::Tensor> plans;
  plans.reserve(count);
  if (stats) stats->clear();
  for (std::size_t p = 0; p < count; ++p) {
    const auto& r = (*states)[p].result;
    if (stats) stats->push_back({r.converged, r.iterations, r.marginal_violation});
    plans.push_back(ad::Tape::make_output(costs[p].shape(), r.plan.data, trace && costs[p].requires_grad()));
  }
  if (!trace) return plans;

  std::vector<ad::Tensor> ins(costs.begin(), costs.end());
  auto capture_in = std::make_shared<std::vector<ad::Tensor>>(ins);
  auto capture_out = std::make_shared<std::vector<ad::Tensor>>(plans);
  tape.record(ins, plans, [states, capture_in, capture_out, opts, exec] {
    const std::size_t count = states->size();
    std::vector<Matrix> grads(count);
    const auto n_pairs = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic) if (exec == kernels::Exec::parallel && count > 1)
    for (std::ptrdiff_t pp = 0; pp < n_pairs; ++pp) {
      const auto p = static_cast<std::size_t>(pp);
      const auto& out = ad::Tape::node_of((*capture_out)[p]);
      if (out.grad.empty() || !(*capture_in)[p].requires_grad()) continue;
      const auto& st = (*states)[p];
      grads[p] = sinkhorn_backward(st.cost, st.u, st.v, opts, st.result,
                                   grad_matrix(out, st.cost.rows, st.cost.cols));
    }
    for (std::size_t p = 0; p < count; ++p)
      if (!grads[p].empty()) accumulate(ad::Tape::node_of((*capture_in)[p]), grads[p]);
  });
  return plans;
}

ad::Tensor wasserstein(ad::Tape& tape, const ad::Tensor& cost, const ad::Tensor& plan) {
  if (cost.shape() != plan.shape())
    throw ContractViolation("wasserstein: cost " + ad::shape_str(cost.shape()) + " vs plan " +
                            ad::shape_str(plan.shape()));
  return tape.dot(plan, cost);
}

std::vector<ad::Tensor> gromov_wasserstein(ad::Tape& tape, std::span<const GromovTerm> terms, kernels::Exec exec) {
  const std::size_t count = terms.size();
  struct TermState {
    Matrix c1, c2, plan;
  };
  auto states = std::make_shared<std::vector<TermState>>(count);
  for (std::size_t p = 0; p < count; ++p) {
    const auto& t = terms[p];
    auto& st = (*states)[p];
    st.c1 = t.c1.to_matrix();
    st.c2 = t.c2.to_matrix();
    st.plan = t.plan.to_matrix();
    if (st.c1.rows != st.c1.cols || st.c2.rows != st.c2.cols || st.plan.rows != st.c1.rows ||
        st.plan.cols != st.c2.rows)
      throw ContractViolation("gromov_wasserstein: plan " + ad::shape_str(t.plan.shape()) + " does not match " +
                              ad::shape_str(t.c1.shape()) + " and " + ad::shape_str(t.c2.shape()));
  }
  std::vector<double> values(count);
  const auto n_terms = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic) if (exec == kernels::Exec::parallel && count > 1)
  for (std::ptrdiff_t p = 0; p < n_terms; ++p) {
    const auto& st = (*states)[static_cast<std::size_t>(p)];
    values[static_cast<std::size_t>(p)] = ot::gromov_wasserstein(st.c1, st.c2, st.plan);
  }

  std::vector<ad::Tensor> outs;
  outs.reserve(count);
  std::vector<ad::Tensor> ins;
  for (std::size_t p = 0; p < count; ++p) {
    const auto& t = terms[p];
    const ad::Tensor parts[] = {t.c1, t.c2, t.plan};
    outs.push_back(ad::Tape::make_output({1, 1}, {values[p]}, ad::Tape::any_requires_grad(parts)));
    ins.insert(ins.end(), {t.c1, t.c2, t.plan});
  }
  if (!ad::Tape::any_requires_grad(ins)) return outs;

  auto capture_in = std::make_shared<std::vector<ad::Tensor>>(ins);
  auto capture_out = std::make_shared<std::vector<ad::Tensor>>(outs);
  tape.record(ins, outs, [states, capture_in, capture_out, exec] {
    const std::size_t count = states->size();
    std::vector<GromovGradient> grads(count);
    std::vector<double> scale(count, 0.0);
    const auto n_terms = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic) if (exec == kernels::Exec::parallel && count > 1)
    for (std::ptrdiff_t pp = 0; pp < n_terms; ++pp) {
      const auto p = static_cast<std::size_t>(pp);
      const auto& out = ad::Tape::node_of((*capture_out)[p]);
      if (out.grad.empty() || !(*capture_out)[p].requires_grad()) continue;
      const auto& st = (*states)[p];
      scale[p] = out.grad[0];
      grads[p] = gromov_wasserstein_grad(st.c1, st.c2, st.plan);
    }
    for (std::size_t p = 0; p < count; ++p) {
      if (scale[p] == 0.0) continue;
      auto& g = grads[p];
      for (auto* m : {&g.d_c1, &g.d_c2, &g.d_plan})
        for (double& x : m->data) x *= scale[p];
      accumulate(ad::Tape::node_of((*capture_in)[3 * p]), g.d_c1);
      accumulate(ad::Tape::node_of((*capture_in)[3 * p + 1]), g.d_c2);
      accumulate(ad::Tape::node_of((*capture_in)[3 * p + 2]), g.d_plan);
    }
  });
  return outs;
}

}  // namespace gsc::ot
