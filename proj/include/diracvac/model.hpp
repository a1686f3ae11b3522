#pragma once

#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace diracvac {

inline constexpr std::string_view kUnits = "hbar=c=1";

/// Geometry of the one-dimensional bag: the particle is confined to
/// |x| < a by an infinite Lorentz-scalar wall. Only the massless case has
/// the closed-form spectrum used throughout, so m != 0 is rejected.
class ModelParams {
 public:
  explicit ModelParams(double half_width, double mass = 0.0)
      : a_(half_width), m_(mass) {
    if (!(half_width > 0.0))
      throw std::invalid_argument("ModelParams: half-width must be > 0");
    if (mass != 0.0)
      throw std::invalid_argument(
          "ModelParams: only the massless model (m = 0) is supported");
  }

  double half_width() const noexcept { return a_; }
  double mass() const noexcept { return m_; }
  /// Spacing between adjacent levels, pi/(2a).
  double level_spacing() const noexcept { return std::numbers::pi / (2.0 * a_); }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  double a_;
  double m_;
};

/// Nonzero level label k. Positive k is the particle branch, negative k the
/// Dirac sea. The quantum number n(k) = k - 1 (k >= 1) or k (k <= -1) makes
/// eps_k = (2n + 1) pi / (4a) increasing in k with sign(eps_k) = sign(k).
class LevelIndex {
 public:
  constexpr explicit LevelIndex(int k) : k_(k) {
    if (k == 0) throw std::invalid_argument("LevelIndex: k must be nonzero");
  }

  static constexpr LevelIndex particle(int i) { return LevelIndex(i); }
  static constexpr LevelIndex antiparticle(int j) { return LevelIndex(-j); }
  static constexpr LevelIndex from_quantum_number(int n) {
    return LevelIndex(n >= 0 ? n + 1 : n);
  }

  constexpr int value() const noexcept { return k_; }
  constexpr int quantum_number() const noexcept { return k_ >= 1 ? k_ - 1 : k_; }
  constexpr bool positive() const noexcept { return k_ > 0; }

  friend constexpr bool operator==(LevelIndex, LevelIndex) = default;
  friend constexpr auto operator<=>(LevelIndex, LevelIndex) = default;

 private:
  int k_;
};

/// eps_k = (2 n(k) + 1) pi / (4a).
inline double unperturbed_eigenvalue(LevelIndex k, const ModelParams& params) {
  return (2.0 * k.quantum_number() + 1.0) * std::numbers::pi /
         (4.0 * params.half_width());
}

}  // namespace diracvac
