#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace se3kit {

template <typename Scalar> using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar> using Vec6 = Eigen::Matrix<Scalar, 6, 1>;
template <typename Scalar> using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar> using Mat4 = Eigen::Matrix<Scalar, 4, 4>;
template <typename Scalar> using Mat6 = Eigen::Matrix<Scalar, 6, 6>;

using Vector6d = Vec6<double>;
using Matrix6d = Mat6<double>;

enum class ErrorCode {
  NotSkew,
  NotOrthonormal,
  AntipodalSingularity,
  InconsistentDerivative,
  FrameMismatch,
  DimensionMismatch,
  DomainError,
  NotUnit,
  InsufficientSamples,
  ZeroDisplacement,
  QueryOnPoint,
  ShapeMismatch,
  NearSingularJacobian,
  InvalidInput,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotSkew: return "NotSkew";
    case ErrorCode::NotOrthonormal: return "NotOrthonormal";
    case ErrorCode::AntipodalSingularity: return "AntipodalSingularity";
    case ErrorCode::InconsistentDerivative: return "InconsistentDerivative";
    case ErrorCode::FrameMismatch: return "FrameMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NotUnit: return "NotUnit";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::ZeroDisplacement: return "ZeroDisplacement";
    case ErrorCode::QueryOnPoint: return "QueryOnPoint";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NearSingularJacobian: return "NearSingularJacobian";
    case ErrorCode::InvalidInput: return "InvalidInput";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Seeded generator used by every stochastic sweep in the project.
using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double gaussian(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

inline Eigen::VectorXd gaussian_vector(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = gaussian(rng);
  return v;
}

namespace detail {

inline int& thread_slot() {
  static int count = [] {
    const char* env = std::getenv("SE3KIT_THREADS");
    const int n = env ? std::atoi(env) : 1;
    return n > 0 ? n : 1;
  }();
  return count;
}

}  // namespace detail

/// Worker count for parallel loops; SE3KIT_THREADS sets the initial value.
inline int thread_count() { return detail::thread_slot(); }
inline void set_thread_count(int n) { detail::thread_slot() = n > 0 ? n : 1; }

/// Runs fn(i) for i in [0, n). Each index is handled exactly once, so
/// results written per index do not depend on the worker count.
template <typename Fn>
void parallel_for(int n, Fn&& fn) {
  const int workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace se3kit
