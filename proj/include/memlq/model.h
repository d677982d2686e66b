#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace memlq {

/// Convolution weight k(t) acting on past inputs. Scalar forms are multiples
/// of the identity; the matrix-table form stores one n×n sample per grid node.
struct MemoryKernel {
  enum class Form { kZero, kScalarExponential, kScalarTable, kMatrixTable };

  Form form{Form::kZero};
  double a{0.0};  // k(t) = a·exp(-b t)·I
  double b{0.0};
  double table_h{0.0};  // spacing of the table samples
  std::vector<double> scalar_samples;
  std::vector<Eigen::MatrixXd> matrix_samples;

  static MemoryKernel Zero();
  static MemoryKernel ScalarExponential(double a, double b);
  static MemoryKernel ScalarTable(std::vector<double> samples, double h);
  static MemoryKernel MatrixTable(std::vector<Eigen::MatrixXd> samples,
                                  double h);

  bool is_zero() const;
  /// Largest time covered by a table form (infinite for analytic forms).
  double table_end() const;
};

/// Returns k(t) as an n×n matrix. Table forms interpolate linearly.
/// Throws std::domain_error for t outside [0, T].
Eigen::MatrixXd kernel_eval(const MemoryKernel& kernel, double t, int n,
                            double T);

/// Orthogonal eigendecomposition A = V diag(a) Vᵀ.
struct SpectralData {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
};

struct ControlSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
  MemoryKernel kernel;
  double T{1.0};
  double gamma{0.75};  // metadata only
  std::optional<SpectralData> eigen;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int p() const { return static_cast<int>(C.rows()); }

  Eigen::MatrixXd k(double t) const { return kernel_eval(kernel, t, n(), T); }

  /// Checks dimensions, eigen data and the commutation e^{Ah}K = K e^{Ah}.
  /// Throws std::invalid_argument on failure.
  void Validate(double h) const;
};

/// Uniform grid t_i = i·h on [0, T].
class TimeGrid {
 public:
  TimeGrid(double T, int N);

  double T() const { return T_; }
  int N() const { return N_; }
  double h() const { return T_ / N_; }
  double t(int i) const { return i * h(); }
  /// Node index of time t; throws if t is not a node.
  int index_of(double t) const;

 private:
  double T_;
  int N_;
};

/// Samples on consecutive grid nodes starting at `start`. Controls are held
/// constant on [t_j, t_{j+1}), so a control trajectory on [s, T) has N - s
/// samples; a state trajectory on [s, T] has N - s + 1.
struct Trajectory {
  int start{0};
  std::vector<Eigen::VectorXd> values;

  int size() const { return static_cast<int>(values.size()); }
  const Eigen::VectorXd& at(int node) const { return values.at(node - start); }
  /// Stacks the samples into one column.
  Eigen::VectorXd Stacked() const;
  static Trajectory FromStacked(int start, const Eigen::VectorXd& v, int dim);
  void CheckFinite() const;
};
using ControlTrajectory = Trajectory;
using StateTrajectory = Trajectory;

/// Initial datum (w0, η) at node s_index; η holds one sample per interval of
/// [0, s).
struct StatePoint {
  int s_index{0};
  Eigen::VectorXd w0;
  std::vector<Eigen::VectorXd> eta;

  void Validate(int n, int m) const;
};

/// Spectral truncation of the 1D Dirichlet heat equation on (0, 1) with the
/// boundary control at x = 1.
ControlSystem build_heat_model(int n_modes, const MemoryKernel& kernel,
                               double T,
                               std::optional<Eigen::MatrixXd> C = std::nullopt);

}  // namespace memlq
