#include "ricci_lab/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "ricci_lab/error.hpp"

namespace rlab::quadrature {

GaussLegendre gauss_legendre(int n) {
  if (n < 1) fail(ErrorCode::kInvalidArgument, "gauss_legendre: n < 1");
  GaussLegendre rule{Vec(n), Vec(n)};
  for (int i = 0; i < n; ++i) {
    // Tricomi-type initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      const double pn = n == 1 ? x : p1;
      const double pnm1 = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pnm1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      const double pn = n == 1 ? x : p1;
      const double pnm1 = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pnm1) / (x * x - 1.0);
    }
    // guesses come out descending; store ascending
    rule.nodes[n - 1 - i] = x;
    rule.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

Vec barycentric_weights(const Vec& nodes) {
  const Eigen::Index n = nodes.size();
  Vec logmag(n);
  Vec sign(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double lm = 0.0, s = 1.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == j) continue;
      const double d = nodes[j] - nodes[k];
      lm += std::log(std::abs(d));
      if (d < 0) s = -s;
    }
    logmag[j] = -lm;
    sign[j] = s;
  }
  const double shift = logmag.maxCoeff();
  Vec w(n);
  for (Eigen::Index j = 0; j < n; ++j) w[j] = sign[j] * std::exp(logmag[j] - shift);
  return w;
}

Mat differentiation_matrix(const Vec& nodes, const Vec& bary) {
  const Eigen::Index n = nodes.size();
  Mat d = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double diag = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      d(i, j) = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
      diag -= d(i, j);
    }
    d(i, i) = diag;
  }
  return d;
}

double interpolate(const Vec& nodes, const Vec& bary, const Vec& values,
                   double x) {
  double num = 0.0, den = 0.0;
  for (Eigen::Index j = 0; j < nodes.size(); ++j) {
    const double d = x - nodes[j];
    if (d == 0.0) return values[j];
    const double t = bary[j] / d;
    num += t * values[j];
    den += t;
  }
  return num / den;
}

Mat interpolation_matrix(const Vec& nodes, const Vec& bary, const Vec& targets) {
  const Eigen::Index n = nodes.size();
  Mat m = Mat::Zero(targets.size(), n);
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    const double x = targets[i];
    double den = 0.0;
    Eigen::Index exact = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = x - nodes[j];
      if (d == 0.0) {
        exact = j;
        break;
      }
      m(i, j) = bary[j] / d;
      den += m(i, j);
    }
    if (exact >= 0) {
      m.row(i).setZero();
      m(i, exact) = 1.0;
    } else {
      m.row(i) /= den;
    }
  }
  return m;
}

Vec legendre_values(int kmax, double x) {
  Vec p(kmax + 1);
  p[0] = 1.0;
  if (kmax >= 1) p[1] = x;
  for (int k = 2; k <= kmax; ++k)
    p[k] = ((2.0 * k - 1.0) * x * p[k - 1] - (k - 1.0) * p[k - 2]) / k;
  return p;
}

Mat legendre_analysis(const GaussLegendre& rule) {
  const Eigen::Index n = rule.nodes.size();
  Mat a(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Vec p = legendre_values(static_cast<int>(n) - 1, rule.nodes[j]);
    for (Eigen::Index k = 0; k < n; ++k)
      a(k, j) = 0.5 * (2.0 * k + 1.0) * rule.weights[j] * p[k];
  }
  return a;
}

Mat integration_matrix(const GaussLegendre& rule) {
  const Eigen::Index n = rule.nodes.size();
  Mat e(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = rule.nodes[i];
    const Vec p = legendre_values(static_cast<int>(n), x);
    e(i, 0) = x + 1.0;
    for (Eigen::Index k = 1; k < n; ++k)
      e(i, k) = (p[k + 1] - p[k - 1]) / (2.0 * k + 1.0);
  }
  return e * legendre_analysis(rule);
}

}  // namespace rlab::quadrature
