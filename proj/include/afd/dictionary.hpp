#pragma once

#include <vector>

#include "afd/numerics.hpp"

namespace afd {

enum class KernelFamily { Szego, PoissonCircle };

/// A dictionary element: kernel family, disc parameter q (|q| < 1) and
/// multiplicity order (order 1 is the plain kernel, order l >= 2 the
/// (l-1)-th derivative in the conjugate parameter).
struct KernelDescriptor {
  KernelFamily family = KernelFamily::Szego;
  Complex parameter{0.0, 0.0};
  int order = 1;
};

/// Ordered parameter list; the multiplicity of entry j is the number of
/// occurrences of its value among the first j+1 entries.
struct ParameterTuple {
  std::vector<Complex> values;
  std::vector<int> orders;  // parallel to values

  Eigen::Index size() const { return static_cast<Eigen::Index>(values.size()); }

  /// Append a parameter, deriving its order from exact repeats so far.
  void push(Complex q) {
    int count = 1;
    for (const Complex& v : values)
      if (v == q) ++count;
    values.push_back(q);
    orders.push_back(count);
  }

  KernelDescriptor descriptor(Eigen::Index j, KernelFamily family) const {
    return KernelDescriptor{family, values[static_cast<std::size_t>(j)],
                            orders[static_cast<std::size_t>(j)]};
  }

  static ParameterTuple from_values(const std::vector<Complex>& vals) {
    ParameterTuple t;
    for (Complex q : vals) t.push(q);
    return t;
  }
};

/// Ordered orthonormal functions with parameter provenance.
///
/// Columns of `functions` have unit norm in `mode` on the construction grid.
/// For Gram-Schmidt-built systems, `gs_upper` is the upper-triangular change
/// of basis K_j = sum_{k<=j} gs_upper(k,j) E_k back to the raw kernels.
struct OrthonormalSystem {
  Eigen::MatrixXcd functions;  // m x n
  ParameterTuple params;
  KernelFamily family = KernelFamily::Szego;
  InnerProductMode mode = InnerProductMode::NormalizedArc;
  double gram_defect = 0.0;
  Eigen::MatrixXcd gs_upper;  // empty for closed-form (TM) systems

  Eigen::Index size() const { return functions.cols(); }
};

/// Samples of the (order-1)-th conjugate-parameter derivative of the Szego
/// kernel 1/(1 - conj(a) z) at z = exp(i t_i).
Eigen::VectorXcd szego_eval(const KernelDescriptor& desc, const Grid& grid);

/// Samples of the Poisson kernel (1/2pi)(1-r^2)/(1 - 2 r cos(t - theta) + r^2);
/// order >= 2 uses central finite differences in the parameter radius.
Eigen::VectorXcd poisson_eval(const KernelDescriptor& desc, const Grid& grid);

/// Dispatch on the descriptor family.
Eigen::VectorXcd kernel_eval(const KernelDescriptor& desc, const Grid& grid);

/// Order-1 kernels at the given points, one column per point.
Eigen::MatrixXcd kernel_matrix(const std::vector<Complex>& points, KernelFamily family,
                               const Grid& grid);

/// Kernel scaled to unit norm in the declared mode (discrete normalization).
Eigen::VectorXcd normalized_element(const KernelDescriptor& desc, const Grid& grid,
                                    InnerProductMode mode);

/// Value of the harmonic extension of a Poisson dictionary element at the
/// interior point rho * exp(i theta), via the kernel semigroup.
double lifted_poisson_value(const KernelDescriptor& desc, double rho, double theta);

/// Takenaka-Malmquist system for the parameter tuple: closed-form Blaschke
/// products with continuous normalization, orthonormal under NormalizedArc.
OrthonormalSystem tm_system(const ParameterTuple& params, const Grid& grid);

/// Single TM-style candidate: normalized kernel at `a` times the Blaschke
/// product over `prior` (Eq.-(10)-type extension of the system by one term).
Eigen::VectorXcd tm_candidate(const std::vector<Complex>& prior, Complex a, const Grid& grid);

/// Max |G - I| over the discrete Gram matrix of the columns.
double gram_defect_of(const Eigen::MatrixXcd& functions, const Grid& grid, InnerProductMode mode);

/// Boundary-vanishing diagnostic: for each radius, the sup over a uniform
/// angular sweep of |<f, e_a>| with a = r exp(i phi).
std::vector<double> bvc_probe(const Eigen::VectorXcd& f, KernelFamily family,
                              const std::vector<double>& radii, const Grid& grid,
                              InnerProductMode mode, int angular_points = 128);

}  // namespace afd
