#pragma once

// Dense and sparse products used by the autodiff engine and the encoder.
//
// Every kernel has one code path; Exec::parallel distributes output rows over
// OpenMP threads and Exec::serial runs the identical loop on the calling thread.
// Each output element is produced by exactly one thread with a fixed
// summation order, so the two policies agree bit-for-bit.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gsc::kernels {

enum class Exec { serial, parallel };

// Process-wide default used by the tape. Tests flip it to compare policies.
Exec default_exec() noexcept;
void set_default_exec(Exec e) noexcept;

// C(m×n) (+)= A(m×k) · B(k×n)
void matmul(Exec exec, std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
            std::span<const double> b, std::span<double> c, bool accumulate);

// C(m×n) (+)= A(k×m)ᵀ · B(k×n)
void matmul_tn(Exec exec, std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
               std::span<const double> b, std::span<double> c, bool accumulate);

// C(m×n) (+)= A(m×k) · B(n×k)ᵀ
void matmul_nt(Exec exec, std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
               std::span<const double> b, std::span<double> c, bool accumulate);

// Compressed sparse row matrix with double values.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr;  // rows + 1 entries
  std::vector<std::uint32_t> col_idx;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return col_idx.size(); }
  double at(std::size_t i, std::size_t j) const;
};

// Y(rows×n) (+)= S · X(cols×n)
void spmm(Exec exec, const CsrMatrix& s, std::size_t n, std::span<const double> x, std::span<double> y,
          bool accumulate);

// Y(cols×n) (+)= Sᵀ · X(rows×n). Serial: scatter-style accumulation.
void spmm_t(const CsrMatrix& s, std::size_t n, std::span<const double> x, std::span<double> y);

}  // namespace gsc::kernels
