#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace usdot {

/// Symmetric tridiagonal matrix stored as its diagonal and off-diagonal.
struct TridiagSym {
  std::vector<double> diag;
  std::vector<double> off;  // off[i] couples rows i and i + 1

  TridiagSym() = default;
  explicit TridiagSym(std::size_t n) : diag(n, 0.0), off(n > 0 ? n - 1 : 0, 0.0) {}
  TridiagSym(std::vector<double> d, std::vector<double> o)
      : diag(std::move(d)), off(std::move(o)) {
    if (!diag.empty() && off.size() + 1 != diag.size()) {
      throw std::invalid_argument("TridiagSym: off-diagonal size mismatch");
    }
  }

  [[nodiscard]] std::size_t size() const { return diag.size(); }
  [[nodiscard]] std::vector<double> multiply(std::span<const double> x) const;
  /// Largest absolute row sum.
  [[nodiscard]] double norm_inf() const;
};

/// Raised when a factorization meets a nonpositive pivot.
class NotPositiveDefinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solves T x = rhs by one forward elimination and back substitution
/// (LDL^T without pivoting). Throws NotPositiveDefinite on a nonpositive
/// pivot.
[[nodiscard]] std::vector<double> tridiag_solve(const TridiagSym& t,
                                                std::span<const double> rhs);

/// Streaming form of tridiag_solve: rows are pushed one at a time as they
/// are produced, so the matrix never has to be stored.
class TridiagEliminator {
 public:
  explicit TridiagEliminator(std::size_t n);

  /// Pushes row i: its diagonal, its coupling to row i - 1 (ignored for the
  /// first row) and its right-hand side entry.
  void push_row(double diag, double off_prev, double rhs);
  [[nodiscard]] std::vector<double> solve();

 private:
  std::vector<double> ratio_;  // off[i - 1] / pivot[i - 1]
  std::vector<double> pivot_;
  std::vector<double> y_;
  std::size_t rows_ = 0;
};

}  // namespace usdot
