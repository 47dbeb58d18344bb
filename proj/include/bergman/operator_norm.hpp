#pragma once
//
// The maximal projection restricted to radial functions,
//   (Tf)(r) = 2 int_0^1 f(s) phi_1(r s) omega(s) s ds,
// discretized on a dyadic grid, and power-type estimates of its norm
// L^p_nu -> L^p_eta.
//

#include <memory>
#include <vector>

#include "bergman/bergman_kernel.hpp"
#include "bergman/characterization.hpp"

namespace bergman {

namespace detail {
struct OperatorData;
}

/// Nonnegative matrix K with source and target measures. The adjoint is a
/// view on the same data.
class RadialOperator {
 public:
  /// K is row-major, rows = target points, columns = source points.
  static RadialOperator from_matrix(std::vector<double> K, std::size_t rows,
                                    std::size_t cols,
                                    std::vector<double> source_measure,
                                    std::vector<double> target_measure, double p);

  std::size_t rows() const;
  std::size_t cols() const;
  /// Exponent of the space the operator acts on: p, or p' for the adjoint.
  double exponent() const;
  bool is_adjoint() const { return adjoint_; }

  /// Entry of the matrix acting as this operator (K or its weighted transpose).
  double entry(std::size_t i, std::size_t j) const;
  std::vector<double> apply(const std::vector<double>& f) const;
  const std::vector<double>& source_measure() const;
  const std::vector<double>& target_measure() const;

  double min_entry() const;
  /// Relative mass of T1 lost by truncating s at the last grid knot, largest
  /// over the rows; an error bar, not a correction.
  double truncation_error() const;

  /// (Tf)(r) at an arbitrary radius, f given on the source nodes. Available
  /// for assembled operators only.
  double apply_at(Radius r, const std::vector<double>& f) const;
  /// Row K(r, s_j) at an arbitrary radius.
  std::vector<double> kernel_row(Radius r) const;
  /// omega(s_j) s_j w_j, the column factor of assembled kernels.
  std::vector<double> column_factor() const;

  bool operator==(const RadialOperator& other) const {
    return data_ == other.data_ && adjoint_ == other.adjoint_;
  }

 private:
  friend RadialOperator assemble(const TripleConfig&, const RadialGrid&,
                                 const MeanTable&);
  friend RadialOperator adjoint(const RadialOperator&);
  RadialOperator(std::shared_ptr<const detail::OperatorData> data, bool adjoint)
      : data_(std::move(data)), adjoint_(adjoint) {}

  std::shared_ptr<const detail::OperatorData> data_;
  bool adjoint_ = false;
};

/// K[i][j] = 2 phi_1(r_i s_j) omega(s_j) s_j w_j, source measure 2 nu(s) s w,
/// target measure 2 eta(r) r w. The table must be the p = 1 mean table of
/// omega and reach the largest product r_i s_j.
RadialOperator assemble(const TripleConfig& cfg, const RadialGrid& grid,
                        const MeanTable& means);

/// Maps L^{p'}(target) -> L^{p'}(source); adjoint(adjoint(T)) == T.
RadialOperator adjoint(const RadialOperator& T);

struct NormEstimate {
  double value = 0.0;
  int iterations = 0;
  std::vector<double> trace;  ///< Rayleigh quotient per iteration
  bool converged = false;
  std::vector<double> vector;  ///< final iterate, unit norm
};

struct BoydOptions {
  double tolerance = 1e-6;
  int max_iterations = 500;
  std::vector<double> seed;  ///< empty: f = 1
};

/// Power-type iteration f <- [T*((Tf)^{p-1})]^{1/(p-1)} for positive T.
NormEstimate boyd_norm(const RadialOperator& T, const BoydOptions& options = {});

/// ||Tf|| / ||f|| in the operator's measures.
double rayleigh(const RadialOperator& T, const std::vector<double>& f);

/// |2 omega_{2n+1} a_n z^n - z^n| / |z^n| with the moment integrated directly,
/// independently of the coefficient cache.
double monomial_identity_check(const KernelEvaluator& k, int n, double z);

}  // namespace bergman
