#include "belltime/quantum_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "belltime/errors.hpp"

namespace belltime {
namespace {

using Mat2 = std::array<std::array<Complex, 2>, 2>;
using Mat4 = std::array<std::array<Complex, 4>, 4>;
using Vec2 = std::array<Complex, 2>;
using Vec4 = std::array<Complex, 4>;

constexpr Complex kI{0.0, 1.0};

// (I + s n.sigma) / 2
Mat2 projector(const Direction3& n, Spin s) {
  const double sd = static_cast<double>(s);
  return {{{0.5 * (1.0 + sd * n.z()), 0.5 * sd * (n.x() - kI * n.y())},
           {0.5 * sd * (n.x() + kI * n.y()), 0.5 * (1.0 - sd * n.z())}}};
}

// n.sigma
Mat2 spin_operator(const Direction3& n) {
  return {{{n.z(), n.x() - kI * n.y()}, {n.x() + kI * n.y(), -n.z()}}};
}

Mat2 identity2() { return {{{1.0, 0.0}, {0.0, 1.0}}}; }

Vec2 mul(const Mat2& m, const Vec2& v) {
  return {m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]};
}

Mat4 kron(const Mat2& a, const Mat2& b) {
  Mat4 out{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) out[2 * i + j][2 * k + l] = a[i][k] * b[j][l];
  return out;
}

Vec4 mul(const Mat4& m, const Vec4& v) {
  Vec4 out{};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) out[r] += m[r][c] * v[c];
  return out;
}

template <std::size_t N>
Complex inner(const std::array<Complex, N>& a, const std::array<Complex, N>& b) {
  Complex sum = 0.0;
  for (std::size_t i = 0; i < N; ++i) sum += std::conj(a[i]) * b[i];
  return sum;
}

double clamp_probability(double p) { return std::clamp(p, 0.0, 1.0); }

void check_uniform(double u, const char* name) {
  if (!(u >= 0.0 && u < 1.0)) {
    std::ostringstream msg;
    msg << name << " = " << u << " is outside [0, 1)";
    throw ValidationError(msg.str());
  }
}

Spin threshold(double u, double p_plus) { return u < p_plus ? 1 : -1; }

// (P_A(s) (x) I) psi, renormalized.
Vec4 collapse_first(const Vec4& psi, const Direction3& dA, Spin s) {
  Vec4 phi = mul(kron(projector(dA, s), identity2()), psi);
  const double norm = std::sqrt(inner(phi, phi).real());
  for (auto& a : phi) a /= norm;
  return phi;
}

double first_plus_probability(const Vec4& psi, const Direction3& dA) {
  const Vec4 projected = mul(kron(projector(dA, +1), identity2()), psi);
  return clamp_probability(inner(psi, projected).real());
}

double second_plus_probability(const Vec4& psi, const Direction3& dB) {
  const Vec4 projected = mul(kron(identity2(), projector(dB, +1)), psi);
  return clamp_probability(inner(psi, projected).real());
}

}  // namespace

Direction3 Direction3::make(double x, double y, double z) {
  const double n2 = x * x + y * y + z * z;
  if (!(std::abs(n2 - 1.0) <= kNormTolerance)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "direction (" << x << ", " << y << ", " << z << ") is not unit length (|n|^2 = "
        << n2 << ")";
    throw ValidationError(msg.str());
  }
  return Direction3(x, y, z);
}

Direction3 Direction3::normalized(double x, double y, double z) {
  const double norm = std::sqrt(x * x + y * y + z * z);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw ValidationError("cannot normalize a zero or non-finite direction");
  }
  return make(x / norm, y / norm, z / norm);
}

Direction3 Direction3::from_angles(double theta, double phi) {
  return make(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
              std::cos(theta));
}

QubitState QubitState::make(Complex up, Complex down) {
  const double n2 = std::norm(up) + std::norm(down);
  if (!(std::abs(n2 - 1.0) <= kNormTolerance)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "qubit state is not normalized (norm^2 = " << n2 << ")";
    throw ValidationError(msg.str());
  }
  return QubitState(up, down);
}

QubitState QubitState::normalized(Complex up, Complex down) {
  const double norm = std::sqrt(std::norm(up) + std::norm(down));
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw ValidationError("cannot normalize a zero or non-finite qubit state");
  }
  return make(up / norm, down / norm);
}

QubitState QubitState::eigenstate(const Direction3& n, Spin spin) {
  const Mat2 p = projector(n, spin);
  // Column norms^2 are (1 + s nz)/2 and (1 - s nz)/2; take the larger one.
  const int col = spin * n.z() >= 0.0 ? 0 : 1;
  const Complex up = p[0][col];
  const Complex down = p[1][col];
  const double norm = std::sqrt(std::norm(up) + std::norm(down));
  return QubitState(up / norm, down / norm);
}

double QubitState::norm_squared() const noexcept {
  return std::norm(amp_[0]) + std::norm(amp_[1]);
}

TwoQubitState TwoQubitState::make(const std::array<Complex, 4>& amplitudes) {
  TwoQubitState state(amplitudes);
  const double n2 = state.norm_squared();
  if (!(std::abs(n2 - 1.0) <= kNormTolerance)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "two-qubit state is not normalized (norm^2 = " << n2 << ")";
    throw ValidationError(msg.str());
  }
  return state;
}

TwoQubitState TwoQubitState::singlet() {
  const double h = 1.0 / std::sqrt(2.0);
  return TwoQubitState({0.0, h, -h, 0.0});
}

double TwoQubitState::norm_squared() const noexcept {
  double sum = 0.0;
  for (const auto& a : amp_) sum += std::norm(a);
  return sum;
}

double plus_probability(const QubitState& state, const Direction3& n) {
  const Vec2 psi{state.up(), state.down()};
  return clamp_probability(inner(psi, mul(projector(n, +1), psi)).real());
}

MeasurementResult measure_spin(const QubitState& state, const Direction3& n, double u) {
  check_uniform(u, "u");
  const Spin outcome = threshold(u, plus_probability(state, n));
  return {outcome, QubitState::eigenstate(n, outcome)};
}

OutcomePair sequential_trial(const QubitState& initial, const Direction3& d1,
                             const Direction3& d2, double u1, double u2) {
  check_uniform(u2, "u2");
  const MeasurementResult first = measure_spin(initial, d1, u1);
  const MeasurementResult second = measure_spin(first.post_state, d2, u2);
  return {first.outcome, second.outcome};
}

BranchProbabilities sequential_branching(const QubitState& initial,
                                         const Direction3& d1,
                                         const Direction3& d2) {
  return {plus_probability(initial, d1),
          plus_probability(QubitState::eigenstate(d1, +1), d2),
          plus_probability(QubitState::eigenstate(d1, -1), d2)};
}

double analytic_sequential_correlator(const Direction3& d1, const Direction3& d2) {
  return d1.dot(d2);
}

double brute_force_sequential_correlator(const QubitState& initial,
                                         const Direction3& d1,
                                         const Direction3& d2) {
  const Vec2 psi{initial.up(), initial.down()};
  double sum = 0.0;
  for (Spin s1 : {+1, -1}) {
    const Vec2 after_first = mul(projector(d1, s1), psi);
    for (Spin s2 : {+1, -1}) {
      const Vec2 branch = mul(projector(d2, s2), after_first);
      // p(s1) p(s2 | s1) = |P2 P1 psi|^2
      sum += s1 * s2 * inner(branch, branch).real();
    }
  }
  return sum;
}

OutcomePair singlet_joint_trial(const Direction3& dA, const Direction3& dB,
                                double u1, double u2) {
  check_uniform(u1, "u1");
  check_uniform(u2, "u2");
  const Vec4 psi = TwoQubitState::singlet().amplitudes();
  const Spin sA = threshold(u1, first_plus_probability(psi, dA));
  const Vec4 collapsed = collapse_first(psi, dA, sA);
  return {sA, threshold(u2, second_plus_probability(collapsed, dB))};
}

BranchProbabilities singlet_branching(const Direction3& dA, const Direction3& dB) {
  const Vec4 psi = TwoQubitState::singlet().amplitudes();
  return {first_plus_probability(psi, dA),
          second_plus_probability(collapse_first(psi, dA, +1), dB),
          second_plus_probability(collapse_first(psi, dA, -1), dB)};
}

double singlet_analytic_correlator(const Direction3& dA, const Direction3& dB) {
  return -dA.dot(dB);
}

double singlet_brute_force_correlator(const Direction3& dA, const Direction3& dB) {
  const Vec4 psi = TwoQubitState::singlet().amplitudes();
  const Mat4 joint = kron(spin_operator(dA), spin_operator(dB));
  return inner(psi, mul(joint, psi)).real();
}

}  // namespace belltime
