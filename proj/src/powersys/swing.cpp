#include <fmt/format.h>

#include <cmath>
#include <memory>

#include "roa/powersys.hpp"

namespace roa::power {

namespace {

using Eigen::Index;

struct Coefficients {
  std::size_t n = 0;
  Eigen::VectorXd e;  // |E_i|
  Eigen::MatrixXd g;
  Eigen::MatrixXd b;
  Eigen::VectorXd p_net;  // P_i - E_i^2 G_ii
  Eigen::VectorXd m;
  Eigen::VectorXd d;

  double interaction(std::size_t i, std::size_t j, double di, double dj) const {
    const auto ii = static_cast<Index>(i);
    const auto jj = static_cast<Index>(j);
    const double s = di - dj;
    return e(ii) * e(jj) * (b(ii, jj) * std::sin(s) + g(ii, jj) * std::cos(s));
  }
};

Coefficients coefficients(const ReducedSystem& sys, bool lossless) {
  if (sys.n_mach == 0 || static_cast<std::size_t>(sys.y_reduced.rows()) != sys.n_mach) {
    throw PreconditionError("reduced system is empty or inconsistent");
  }
  Coefficients k;
  k.n = sys.n_mach;
  k.e = sys.e_internal.cwiseAbs();
  k.b = sys.y_reduced.imag();
  k.g = lossless ? Eigen::MatrixXd::Zero(k.b.rows(), k.b.cols()) : Eigen::MatrixXd(sys.y_reduced.real());
  k.p_net.resize(static_cast<Index>(k.n));
  for (Index i = 0; i < static_cast<Index>(k.n); ++i) k.p_net(i) = sys.p_mech(i) - k.e(i) * k.e(i) * k.g(i, i);
  k.m = sys.m_inertia;
  k.d = sys.d_damp;
  return k;
}

}  // namespace

double interaction_power(const ReducedSystem& sys, std::size_t i, std::size_t j, double delta_i, double delta_j,
                         bool lossless) {
  if (i >= sys.n_mach || j >= sys.n_mach) throw PreconditionError("machine index out of range");
  const double ei = std::abs(sys.e_internal(static_cast<Index>(i)));
  const double ej = std::abs(sys.e_internal(static_cast<Index>(j)));
  const Complex y = sys.y_reduced(static_cast<Index>(i), static_cast<Index>(j));
  const double s = delta_i - delta_j;
  return ei * ej * (y.imag() * std::sin(s) + (lossless ? 0.0 : y.real()) * std::cos(s));
}

double net_injection(const ReducedSystem& sys, std::size_t i, bool lossless) {
  if (i >= sys.n_mach) throw PreconditionError("machine index out of range");
  const auto ii = static_cast<Index>(i);
  const double e = std::abs(sys.e_internal(ii));
  const double g = lossless ? 0.0 : sys.y_reduced(ii, ii).real();
  return sys.p_mech(ii) - e * e * g;
}

Eigen::VectorXd electrical_power(const ReducedSystem& sys, const Eigen::VectorXd& delta, bool lossless) {
  if (static_cast<std::size_t>(delta.size()) != sys.n_mach) throw PreconditionError("angle vector has wrong size");
  const Coefficients k = coefficients(sys, lossless);
  Eigen::VectorXd pe(delta.size());
  for (std::size_t i = 0; i < k.n; ++i) {
    const auto ii = static_cast<Index>(i);
    double acc = k.e(ii) * k.e(ii) * k.g(ii, ii);
    for (std::size_t j = 0; j < k.n; ++j) {
      if (j != i) acc += k.interaction(i, j, delta(ii), delta(static_cast<Index>(j)));
    }
    pe(ii) = acc;
  }
  return pe;
}

DecomposedField swing_field(const ReducedSystem& sys, SwingOptions options) {
  const auto k = std::make_shared<const Coefficients>(coefficients(sys, options.lossless));
  const std::size_t n = k->n;
  const std::size_t dim = 2 * n;

  std::vector<VectorField> parts;
  std::vector<std::string> labels;
  parts.emplace_back(dim, [k, n](const State& x) {
    State f(x.size());
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Index>(i);
      const auto wi = static_cast<Index>(n + i);
      f(ii) = x(wi);
      f(wi) = (k->p_net(ii) - k->d(ii) * x(wi)) / k->m(ii);
    }
    return f;
  });
  labels.emplace_back("linear");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      parts.emplace_back(dim, [k, n, i, j](const State& x) {
        State f = State::Zero(x.size());
        const auto ii = static_cast<Index>(i);
        const auto jj = static_cast<Index>(j);
        f(static_cast<Index>(n + i)) = -k->interaction(i, j, x(ii), x(jj)) / k->m(ii);
        f(static_cast<Index>(n + j)) = -k->interaction(j, i, x(jj), x(ii)) / k->m(jj);
        return f;
      });
      labels.push_back(fmt::format("pair {}-{}", i + 1, j + 1));
    }
  }

  // Same operations in the same order as the part sum: each machine adds
  // its pair terms with j ascending.
  VectorField fused(dim, [k, n](const State& x) {
    State f(x.size());
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Index>(i);
      const auto wi = static_cast<Index>(n + i);
      f(ii) = x(wi);
      double acc = (k->p_net(ii) - k->d(ii) * x(wi)) / k->m(ii);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        acc += -k->interaction(i, j, x(ii), x(static_cast<Index>(j))) / k->m(ii);
      }
      f(wi) = acc;
    }
    return f;
  });
  return DecomposedField(std::move(parts), std::move(labels), std::move(fused));
}

DecomposedField reduced_angle_field(const ReducedSystem& sys, SwingOptions options) {
  const auto k = std::make_shared<const Coefficients>(coefficients(sys, options.lossless));
  const std::size_t n = k->n;
  if (n < 2) throw PreconditionError("the reduced angle model needs at least two machines");
  const std::size_t dim = n - 1;

  // Full angle vector with machine 1 as the zero reference.
  auto angles = [n](const State& y) {
    Eigen::VectorXd delta(static_cast<Index>(n));
    delta(0) = 0.0;
    delta.tail(static_cast<Index>(n - 1)) = y;
    return delta;
  };

  std::vector<VectorField> parts;
  std::vector<std::string> labels;
  parts.emplace_back(dim, [k, n](const State&) {
    State f(static_cast<Index>(n - 1));
    const double a1 = k->p_net(0) / k->m(0);
    for (std::size_t q = 1; q < n; ++q) {
      const auto qq = static_cast<Index>(q);
      f(qq - 1) = k->p_net(qq) / k->m(qq) - a1;
    }
    return f;
  });
  labels.emplace_back("injection");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      parts.emplace_back(dim, [k, n, i, j, angles](const State& y) {
        const Eigen::VectorXd delta = angles(y);
        const auto ii = static_cast<Index>(i);
        const auto jj = static_cast<Index>(j);
        Eigen::VectorXd a = Eigen::VectorXd::Zero(static_cast<Index>(n));
        a(ii) = -k->interaction(i, j, delta(ii), delta(jj)) / k->m(ii);
        a(jj) = -k->interaction(j, i, delta(jj), delta(ii)) / k->m(jj);
        return State(a.tail(static_cast<Index>(n - 1)).array() - a(0));
      });
      labels.push_back(fmt::format("pair {}-{}", i + 1, j + 1));
    }
  }
  return DecomposedField(std::move(parts), std::move(labels));
}

}  // namespace roa::power
