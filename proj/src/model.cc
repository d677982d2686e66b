#include "memlq/model.h"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

namespace memlq {

MemoryKernel MemoryKernel::Zero() { return MemoryKernel{}; }

MemoryKernel MemoryKernel::ScalarExponential(double a, double b) {
  MemoryKernel k;
  k.form = Form::kScalarExponential;
  k.a = a;
  k.b = b;
  return k;
}

MemoryKernel MemoryKernel::ScalarTable(std::vector<double> samples, double h) {
  if (samples.size() < 2 || !(h > 0.0)) {
    throw std::invalid_argument("scalar kernel table needs >= 2 samples");
  }
  MemoryKernel k;
  k.form = Form::kScalarTable;
  k.scalar_samples = std::move(samples);
  k.table_h = h;
  return k;
}

MemoryKernel MemoryKernel::MatrixTable(std::vector<Eigen::MatrixXd> samples,
                                       double h) {
  if (samples.size() < 2 || !(h > 0.0)) {
    throw std::invalid_argument("matrix kernel table needs >= 2 samples");
  }
  MemoryKernel k;
  k.form = Form::kMatrixTable;
  k.matrix_samples = std::move(samples);
  k.table_h = h;
  return k;
}

bool MemoryKernel::is_zero() const {
  switch (form) {
    case Form::kZero:
      return true;
    case Form::kScalarExponential:
      return a == 0.0;
    case Form::kScalarTable:
      for (double v : scalar_samples) {
        if (v != 0.0) return false;
      }
      return true;
    case Form::kMatrixTable:
      for (const auto& M : matrix_samples) {
        if (!M.isZero(0.0)) return false;
      }
      return true;
  }
  return false;
}

double MemoryKernel::table_end() const {
  switch (form) {
    case Form::kScalarTable:
      return table_h * (scalar_samples.size() - 1);
    case Form::kMatrixTable:
      return table_h * (matrix_samples.size() - 1);
    default:
      return INFINITY;
  }
}

namespace {

// Locates t in a table with spacing h: returns the left index and the weight
// of the right sample.
std::pair<int, double> Bracket(double t, double h, int count) {
  double x = t / h;
  int i = static_cast<int>(std::floor(x));
  if (i >= count - 1) i = count - 2;
  if (i < 0) i = 0;
  return {i, x - i};
}

}  // namespace

Eigen::MatrixXd kernel_eval(const MemoryKernel& kernel, double t, int n,
                            double T) {
  // Small slack so that t = i·h computed in floating point is accepted.
  const double slack = 1e-12 * std::max(1.0, T);
  if (t < -slack || t > T + slack) {
    throw std::domain_error("kernel_eval: t = " + std::to_string(t) +
                            " outside [0, T]");
  }
  t = std::clamp(t, 0.0, T);
  using Form = MemoryKernel::Form;
  switch (kernel.form) {
    case Form::kZero:
      return Eigen::MatrixXd::Zero(n, n);
    case Form::kScalarExponential:
      return kernel.a * std::exp(-kernel.b * t) *
             Eigen::MatrixXd::Identity(n, n);
    case Form::kScalarTable: {
      if (t > kernel.table_end() + slack) {
        throw std::domain_error("kernel_eval: t beyond kernel table");
      }
      auto [i, w] = Bracket(t, kernel.table_h,
                            static_cast<int>(kernel.scalar_samples.size()));
      double v = (1.0 - w) * kernel.scalar_samples[i] +
                 w * kernel.scalar_samples[i + 1];
      return v * Eigen::MatrixXd::Identity(n, n);
    }
    case Form::kMatrixTable: {
      if (t > kernel.table_end() + slack) {
        throw std::domain_error("kernel_eval: t beyond kernel table");
      }
      auto [i, w] = Bracket(t, kernel.table_h,
                            static_cast<int>(kernel.matrix_samples.size()));
      const auto& K0 = kernel.matrix_samples[i];
      const auto& K1 = kernel.matrix_samples[i + 1];
      if (K0.rows() != n || K0.cols() != n) {
        throw std::invalid_argument("kernel_eval: matrix table is not n×n");
      }
      return (1.0 - w) * K0 + w * K1;
    }
  }
  throw std::logic_error("kernel_eval: unknown kernel form");
}

void ControlSystem::Validate(double h) const {
  if (A.rows() < 1 || A.rows() != A.cols()) {
    throw std::invalid_argument("A must be square with n >= 1");
  }
  if (B.rows() != A.rows() || B.cols() < 1) {
    throw std::invalid_argument("B must be n×m with m >= 1");
  }
  if (C.cols() != A.rows() || C.rows() < 1) {
    throw std::invalid_argument("C must be p×n with p >= 1");
  }
  if (!(T > 0.0)) throw std::invalid_argument("horizon T must be positive");
  if (!A.allFinite() || !B.allFinite() || !C.allFinite()) {
    throw std::invalid_argument("system matrices must be finite");
  }
  if (eigen) {
    const auto& V = eigen->eigenvectors;
    Eigen::MatrixXd R = V * eigen->eigenvalues.asDiagonal() * V.transpose();
    double scale = std::max(A.norm(), 1e-300);
    if ((R - A).norm() > 1e-12 * scale) {
      throw std::invalid_argument("eigen data does not reconstruct A");
    }
  }
  if (kernel.form == MemoryKernel::Form::kMatrixTable) {
    if (kernel.table_end() < T - 1e-12) {
      throw std::invalid_argument("kernel table does not cover [0, T]");
    }
    Eigen::MatrixXd E = (A * h).exp();
    for (const auto& K : kernel.matrix_samples) {
      if (K.rows() != n() || K.cols() != n()) {
        throw std::invalid_argument("kernel table samples must be n×n");
      }
      if ((E * K - K * E).norm() > 1e-10) {
        throw std::invalid_argument("kernel does not commute with e^{Ah}");
      }
    }
  } else if (kernel.form == MemoryKernel::Form::kScalarTable &&
             kernel.table_end() < T - 1e-12) {
    throw std::invalid_argument("kernel table does not cover [0, T]");
  }
}

TimeGrid::TimeGrid(double T, int N) : T_(T), N_(N) {
  if (N < 2) throw std::invalid_argument("grid needs N >= 2 intervals");
  if (!(T > 0.0)) throw std::invalid_argument("grid needs T > 0");
}

int TimeGrid::index_of(double t) const {
  double x = t / h();
  long i = std::lround(x);
  if (std::abs(x - i) > 1e-9 || i < 0 || i > N_) {
    throw std::invalid_argument("time " + std::to_string(t) +
                                " is not a grid node");
  }
  return static_cast<int>(i);
}

Eigen::VectorXd Trajectory::Stacked() const {
  if (values.empty()) return Eigen::VectorXd();
  const int d = static_cast<int>(values.front().size());
  Eigen::VectorXd v(d * size());
  for (int j = 0; j < size(); ++j) v.segment(j * d, d) = values[j];
  return v;
}

Trajectory Trajectory::FromStacked(int start, const Eigen::VectorXd& v,
                                   int dim) {
  Trajectory tr;
  tr.start = start;
  const int count = static_cast<int>(v.size()) / dim;
  tr.values.reserve(count);
  for (int j = 0; j < count; ++j) tr.values.push_back(v.segment(j * dim, dim));
  return tr;
}

void Trajectory::CheckFinite() const {
  for (const auto& x : values) {
    if (!x.allFinite()) throw std::runtime_error("nonfinite trajectory entry");
  }
}

void StatePoint::Validate(int n, int m) const {
  if (s_index < 0) throw std::invalid_argument("s_index must be >= 0");
  if (w0.size() != n) throw std::invalid_argument("w0 must have length n");
  if (!w0.allFinite()) throw std::invalid_argument("w0 is not finite");
  if (static_cast<int>(eta.size()) != s_index) {
    throw std::invalid_argument("eta must have exactly s_index samples");
  }
  for (const auto& e : eta) {
    if (e.size() != m) throw std::invalid_argument("eta samples need length m");
    if (!e.allFinite()) throw std::invalid_argument("eta is not finite");
  }
}

ControlSystem build_heat_model(int n_modes, const MemoryKernel& kernel,
                               double T, std::optional<Eigen::MatrixXd> C) {
  if (n_modes <= 0) throw std::invalid_argument("n_modes must be positive");
  const double pi = std::numbers::pi;
  ControlSystem sys;
  Eigen::VectorXd a(n_modes);
  sys.B.resize(n_modes, 1);
  for (int k = 1; k <= n_modes; ++k) {
    a(k - 1) = -(k * pi) * (k * pi);
    // B = -A D with D the Dirichlet lift x ↦ x·v in the sine basis.
    sys.B(k - 1, 0) = std::sqrt(2.0) * ((k % 2 == 1) ? 1.0 : -1.0) * k * pi;
  }
  sys.A = a.asDiagonal();
  sys.C = C ? *C : Eigen::MatrixXd::Identity(n_modes, n_modes);
  sys.kernel = kernel;
  sys.T = T;
  sys.gamma = 0.75;
  sys.eigen = SpectralData{a, Eigen::MatrixXd::Identity(n_modes, n_modes)};
  return sys;
}

}  // namespace memlq
