#include "usdot/tridiag.hpp"

#include <cmath>
#include <string>

namespace usdot {

std::vector<double> TridiagSym::multiply(std::span<const double> x) const {
  const std::size_t n = size();
  if (x.size() != n) throw std::invalid_argument("TridiagSym: size mismatch");
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double v = diag[i] * x[i];
    if (i > 0) v += off[i - 1] * x[i - 1];
    if (i + 1 < n) v += off[i] * x[i + 1];
    out[i] = v;
  }
  return out;
}

double TridiagSym::norm_inf() const {
  double best = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    double row = std::abs(diag[i]);
    if (i > 0) row += std::abs(off[i - 1]);
    if (i + 1 < size()) row += std::abs(off[i]);
    best = std::max(best, row);
  }
  return best;
}

TridiagEliminator::TridiagEliminator(std::size_t n) {
  ratio_.reserve(n);
  pivot_.reserve(n);
  y_.reserve(n);
}

void TridiagEliminator::push_row(double diag, double off_prev, double rhs) {
  double pivot = diag;
  double y = rhs;
  double ratio = 0.0;
  if (rows_ > 0) {
    ratio = off_prev / pivot_.back();
    pivot -= ratio * off_prev;
    y -= ratio * y_.back();
  }
  if (!(pivot > 0.0)) {
    throw NotPositiveDefinite("not positive definite: nonpositive pivot at row " +
                              std::to_string(rows_));
  }
  ratio_.push_back(ratio);
  pivot_.push_back(pivot);
  y_.push_back(y);
  ++rows_;
}

std::vector<double> TridiagEliminator::solve() {
  std::vector<double> x(rows_, 0.0);
  for (std::size_t k = rows_; k-- > 0;) {
    double v = y_[k];
    if (k + 1 < rows_) v -= ratio_[k + 1] * pivot_[k] * x[k + 1];
    x[k] = v / pivot_[k];
  }
  return x;
}

std::vector<double> tridiag_solve(const TridiagSym& t,
                                  std::span<const double> rhs) {
  if (rhs.size() != t.size()) {
    throw std::invalid_argument("tridiag_solve: size mismatch");
  }
  TridiagEliminator elim(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    elim.push_row(t.diag[i], i > 0 ? t.off[i - 1] : 0.0, rhs[i]);
  }
  return elim.solve();
}

}  // namespace usdot
