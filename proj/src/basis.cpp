#include "cvxwave/basis.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "cvxwave/error.hpp"

namespace cvxwave {

namespace {

namespace mp = boost::multiprecision;
using Rational = mp::cpp_rational;
using Float = mp::cpp_bin_float_50;
using Poly = std::vector<Rational>; // coefficients of s^k on the unit interval

// <p, q> on L2(0, 1): sum_ij p_i q_j / (i + j + 1).
Rational inner(const Poly& p, const Poly& q) {
  Rational acc = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0) continue;
    for (std::size_t j = 0; j < q.size(); ++j) {
      if (q[j] == 0) continue;
      acc += p[i] * q[j] / Rational(static_cast<long>(i + j + 1));
    }
  }
  return acc;
}

Poly derivative(const Poly& p) {
  Poly d(p.size(), Rational(0));
  for (std::size_t k = 1; k < p.size(); ++k) d[k - 1] = p[k] * Rational(static_cast<long>(k));
  return d;
}

Float to_float(const Rational& r) {
  return Float(mp::numerator(r)) / Float(mp::denominator(r));
}

} // namespace

PolyBasis::PolyBasis(double T1, int N) : T1_(T1), N_(N) {
  if (!(T1 > 0.0)) throw ConfigError("basis: T1 must be positive");
  if (N < 1 || N > max_order) throw ConfigError("basis: N must lie in [1, 8]");

  const auto n_terms = static_cast<std::size_t>(N + 1);
  std::vector<Poly> ortho; // unnormalized orthogonal polynomials on (0, 1)
  std::vector<Rational> norm2;
  for (int n = 1; n <= N; ++n) {
    Poly v(n_terms, Rational(0));
    v[static_cast<std::size_t>(n)] = 1;
    const Poly mono = v;
    for (std::size_t m = 0; m < ortho.size(); ++m) {
      const Rational proj = inner(mono, ortho[m]) / norm2[m];
      for (std::size_t k = 0; k < n_terms; ++k) v[k] -= proj * ortho[m][k];
    }
    norm2.push_back(inner(v, v));
    ortho.push_back(std::move(v));
  }

  // P_n(t) = Q_n(t / T1) / sqrt(T1), with Q_n = v_n / |v_n| orthonormal on (0, 1).
  const Float T1f(T1);
  const Float sqrtT1 = mp::sqrt(T1f);
  std::vector<Float> inv_norm(static_cast<std::size_t>(N));
  coeffs_.resize(static_cast<std::size_t>(N));
  for (int n = 0; n < N; ++n) {
    const auto un = static_cast<std::size_t>(n);
    inv_norm[un] = 1 / mp::sqrt(to_float(norm2[un]));
    auto& c = coeffs_[un];
    c.assign(n_terms, 0.0);
    Float scale = inv_norm[un] / sqrtT1;
    for (std::size_t k = 0; k < n_terms; ++k) {
      c[k] = static_cast<double>(to_float(ortho[un][k]) * scale);
      scale /= T1f;
    }
    s_.push_back(c[1]);
  }

  // D_mn = (1/T1) int_0^1 Q_n'(s) Q_m(s) ds
  D_.assign(static_cast<std::size_t>(N) * static_cast<std::size_t>(N), 0.0);
  for (int m = 0; m < N; ++m)
    for (int n = 0; n < N; ++n) {
      const auto um = static_cast<std::size_t>(m), un = static_cast<std::size_t>(n);
      const Rational raw = inner(derivative(ortho[un]), ortho[um]);
      D_[um * static_cast<std::size_t>(N) + un] =
          static_cast<double>(to_float(raw) * inv_norm[un] * inv_norm[um] / T1f);
    }
}

double PolyBasis::eval(int n, double t) const {
  const auto& c = coeffs(n);
  double acc = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) acc = acc * t + c[k];
  return acc;
}

double PolyBasis::eval_deriv(int n, double t) const {
  const auto& c = coeffs(n);
  double acc = 0.0;
  for (std::size_t k = c.size(); k-- > 1;) acc = acc * t + static_cast<double>(k) * c[k];
  return acc;
}

nlohmann::json PolyBasis::to_json() const {
  nlohmann::json j;
  j["T1"] = T1_;
  j["N"] = N_;
  j["coefficients"] = coeffs_;
  j["s"] = s_;
  nlohmann::json rows = nlohmann::json::array();
  for (int m = 1; m <= N_; ++m) {
    std::vector<double> row;
    for (int n = 1; n <= N_; ++n) row.push_back(D(m, n));
    rows.push_back(row);
  }
  j["D"] = rows;
  return j;
}

} // namespace cvxwave
