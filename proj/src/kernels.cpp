#include "gsc/kernels.hpp"

#include <algorithm>
#include <atomic>

#include "gsc/errors.hpp"

namespace gsc::kernels {

namespace {

std::atomic<Exec> g_default_exec{Exec::parallel};

// Rows below this count never pay the thread-team startup cost.
constexpr std::size_t kParallelMinRows = 32;

bool go_parallel(Exec exec, std::size_t rows) { return exec == Exec::parallel && rows >= kParallelMinRows; }

void check_sizes(const char* name, std::size_t a, std::size_t want_a, std::size_t b, std::size_t want_b,
                 std::size_t c, std::size_t want_c) {
  if (a != want_a || b != want_b || c != want_c) throw DimensionError(name, "buffer sizes do not match dimensions");
}

}  // namespace

Exec default_exec() noexcept { return g_default_exec.load(std::memory_order_relaxed); }
void set_default_exec(Exec e) noexcept { g_default_exec.store(e, std::memory_order_relaxed); }

void matmul(Exec exec, std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
            std::span<const double> b, std::span<double> c, bool accumulate) {
  check_sizes("matmul", a.size(), m * k, b.size(), k * n, c.size(), m * n);
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (go_parallel(exec, m))
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* crow = pc + i * n;
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_tn(Exec exec, std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
               std::span<const double> b, std::span<double> c, bool accumulate) {
  check_sizes("matmul_tn", a.size(), k * m, b.size(), k * n, c.size(), m * n);
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (go_parallel(exec, m))
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* crow = pc + i * n;
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[p * m + i];
      if (av == 0.0) continue;
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt(Exec exec, std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
               std::span<const double> b, std::span<double> c, bool accumulate) {
  check_sizes("matmul_nt", a.size(), m * k, b.size(), n * k, c.size(), m * n);
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (go_parallel(exec, m))
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* arow = pa + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = pb + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      pc[i * n + j] = accumulate ? pc[i * n + j] + acc : acc;
    }
  }
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
  const auto first = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
  const auto last = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
  const auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(j));
  if (it == last || *it != j) return 0.0;
  return values[static_cast<std::size_t>(it - col_idx.begin())];
}

void spmm(Exec exec, const CsrMatrix& s, std::size_t n, std::span<const double> x, std::span<double> y,
          bool accumulate) {
  check_sizes("spmm", x.size(), s.cols * n, y.size(), s.rows * n, s.row_ptr.size(), s.rows + 1);
  const double* px = x.data();
  double* py = y.data();
  const auto rows = static_cast<std::ptrdiff_t>(s.rows);
#pragma omp parallel for schedule(static) if (go_parallel(exec, s.rows))
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* yrow = py + i * n;
    if (!accumulate) std::fill(yrow, yrow + n, 0.0);
    for (std::size_t e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e) {
      const double w = s.values[e];
      const double* xrow = px + static_cast<std::size_t>(s.col_idx[e]) * n;
      for (std::size_t j = 0; j < n; ++j) yrow[j] += w * xrow[j];
    }
  }
}

void spmm_t(const CsrMatrix& s, std::size_t n, std::span<const double> x, std::span<double> y) {
  check_sizes("spmm_t", x.size(), s.rows * n, y.size(), s.cols * n, s.row_ptr.size(), s.rows + 1);
  for (std::size_t i = 0; i < s.rows; ++i) {
    const double* xrow = x.data() + i * n;
    for (std::size_t e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e) {
      const double w = s.values[e];
      double* yrow = y.data() + static_cast<std::size_t>(s.col_idx[e]) * n;
      for (std::size_t j = 0; j < n; ++j) yrow[j] += w * xrow[j];
    }
  }
}

}  // namespace gsc::kernels
