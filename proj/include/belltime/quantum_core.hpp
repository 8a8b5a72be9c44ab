#pragma once

// Exact quantum mechanics of spin-1/2 measurements: pure states, projective
// measurement with collapse, the sequential and singlet correlators, and
// brute-force matrix oracles for both.

#include <array>
#include <complex>

namespace belltime {

using Complex = std::complex<double>;

// Tolerance for unit-norm validation of directions and states.
inline constexpr double kNormTolerance = 1e-12;

// +1 or -1.
using Spin = int;

// Unit 3-vector measurement direction. Only constructible when unit-norm.
class Direction3 {
 public:
  // Throws ValidationError unless x^2 + y^2 + z^2 = 1 within kNormTolerance.
  static Direction3 make(double x, double y, double z);
  // Rescales any nonzero vector to unit length.
  static Direction3 normalized(double x, double y, double z);
  // Polar angle theta from +z, azimuth phi from +x, both in radians.
  static Direction3 from_angles(double theta, double phi);

  static Direction3 unit_x() { return Direction3(1.0, 0.0, 0.0); }
  static Direction3 unit_y() { return Direction3(0.0, 1.0, 0.0); }
  static Direction3 unit_z() { return Direction3(0.0, 0.0, 1.0); }

  double x() const noexcept { return x_; }
  double y() const noexcept { return y_; }
  double z() const noexcept { return z_; }

  double dot(const Direction3& other) const noexcept {
    return x_ * other.x_ + y_ * other.y_ + z_ * other.z_;
  }
  Direction3 operator-() const noexcept { return Direction3(-x_, -y_, -z_); }

  friend bool operator==(const Direction3&, const Direction3&) = default;

 private:
  Direction3(double x, double y, double z) noexcept : x_(x), y_(y), z_(z) {}

  double x_;
  double y_;
  double z_;
};

// Pure state of one spin-1/2 particle in the z basis.
class QubitState {
 public:
  // Throws ValidationError unless |up|^2 + |down|^2 = 1 within kNormTolerance.
  static QubitState make(Complex up, Complex down);
  static QubitState normalized(Complex up, Complex down);
  static QubitState spin_up() { return QubitState(1.0, 0.0); }
  static QubitState spin_down() { return QubitState(0.0, 1.0); }
  // Normalized eigenstate of n.sigma with eigenvalue `spin`, phase fixed by
  // projecting the better-conditioned basis vector.
  static QubitState eigenstate(const Direction3& n, Spin spin);

  Complex up() const noexcept { return amp_[0]; }
  Complex down() const noexcept { return amp_[1]; }
  double norm_squared() const noexcept;

 private:
  QubitState(Complex up, Complex down) noexcept : amp_{up, down} {}

  std::array<Complex, 2> amp_;
};

// Pure state of two spin-1/2 particles A, B in the basis
// |up up>, |up down>, |down up>, |down down>.
class TwoQubitState {
 public:
  static TwoQubitState make(const std::array<Complex, 4>& amplitudes);
  // (0, 1/sqrt2, -1/sqrt2, 0).
  static TwoQubitState singlet();

  const std::array<Complex, 4>& amplitudes() const noexcept { return amp_; }
  double norm_squared() const noexcept;

 private:
  explicit TwoQubitState(const std::array<Complex, 4>& amplitudes) noexcept
      : amp_(amplitudes) {}

  std::array<Complex, 4> amp_;
};

struct MeasurementResult {
  Spin outcome;
  QubitState post_state;
};

struct OutcomePair {
  Spin first;
  Spin second;

  friend bool operator==(const OutcomePair&, const OutcomePair&) = default;
};

// <state| (I + n.sigma)/2 |state>, clamped to [0, 1].
double plus_probability(const QubitState& state, const Direction3& n);

// Outcome is +1 iff u < plus_probability(state, n); the post-measurement
// state is the eigenstate of n.sigma for that outcome. u must be in [0, 1).
MeasurementResult measure_spin(const QubitState& state, const Direction3& n, double u);

// Two consecutive measurements on one particle: along d1, then along d2 on
// the collapsed state.
OutcomePair sequential_trial(const QubitState& initial, const Direction3& d1,
                             const Direction3& d2, double u1, double u2);

// Branch probabilities used by sequential_trial, for batched sampling.
struct BranchProbabilities {
  double first_plus;
  double second_plus_after_plus;
  double second_plus_after_minus;
};

BranchProbabilities sequential_branching(const QubitState& initial,
                                         const Direction3& d1,
                                         const Direction3& d2);

// E[s1 s2] for sequential measurement: d1.d2, independent of the prepared state.
double analytic_sequential_correlator(const Direction3& d1, const Direction3& d2);

// Sum over the four outcome branches of s1 s2 |P2(s2) P1(s1) psi|^2 with
// explicit 2x2 projector matrices.
double brute_force_sequential_correlator(const QubitState& initial,
                                         const Direction3& d1,
                                         const Direction3& d2);

// Simultaneous measurement of both singlet spins: sA from the marginal with
// u1, sB from the collapsed pair state with u2.
OutcomePair singlet_joint_trial(const Direction3& dA, const Direction3& dB,
                                double u1, double u2);

BranchProbabilities singlet_branching(const Direction3& dA, const Direction3& dB);

// -dA.dB
double singlet_analytic_correlator(const Direction3& dA, const Direction3& dB);

// <singlet| (dA.sigma) (x) (dB.sigma) |singlet> by explicit 4x4 arithmetic.
double singlet_brute_force_correlator(const Direction3& dA, const Direction3& dB);

}  // namespace belltime
