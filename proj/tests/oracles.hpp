#pragma once

// Reference values produced by tools/oracles.py (mpmath quadrature of the
// explicit spinor integrands, numpy brute-force sums). They share no code
// with the library. Regenerate with `python3 tools/oracles.py`.

namespace oracle {

// <phi_1| x |phi_-1>, a = 1 (purely imaginary)
inline constexpr double kV1m1Imag = 0.40528473456935109;

// <phi_-2| x^2 |phi_-2>, a = 1
inline constexpr double kQuadraticDiagonal = 0.33333333333333333;

// <psi_k|phi_n> for V = lambda x, a = 1
struct Overlap {
  int k, n;
  double lambda, re, im;
};
inline constexpr Overlap kOverlaps[] = {
    {1, -1, 0.1, 0.001289109672986199, 0.025760704716794541},
    {1, 1, 0.1, 0.99808453256850404, -0.049945855112929026},
    {-2, 3, 0.1, 1.9236574058979211e-5, -9.6263102920389218e-7},
    {2, -1, 0.1, -0.00030752822417611248, 1.5389237711468338e-5},
    {1, -1, 1.0, 0.11976529809146507, 0.21922890764365855},
    {1, 1, 1.0, 0.81999924784595769, -0.44796763076828216},
    {-2, 3, 1.0, 0.0017924025545260807, -0.0009791939783399684},
    {2, -1, 1.0, -0.026449318756639686, 0.01444932869142433},
};

// Pauli-enforced second-order sum for V = x, a = 1, at N = 4096
inline constexpr double kPairSumLinear4096 = -0.10610329539447805;

// Exact vacuum shift at N = 64, a = 1, every overlap by 4000-point quadrature
inline constexpr double kExactShiftLinear64 = -0.1061032641876635;
inline constexpr double kExactShiftSine64 = -0.15915463510738284;

// Pauli-enforced second-order sum for V = sin(pi x), a = 1, at N = 64
inline constexpr double kPairSumSine64 = -0.15915463510718017;

}  // namespace oracle
