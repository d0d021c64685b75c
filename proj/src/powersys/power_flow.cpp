#include <fmt/format.h>

#include "roa/log.hpp"
#include "roa/powersys.hpp"

namespace roa::power {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

VectorXcd scheduled_injection(const PowerCase& c) {
  VectorXcd s = VectorXcd::Zero(static_cast<Eigen::Index>(c.buses.size()));
  for (std::size_t i = 0; i < c.buses.size(); ++i) {
    s(static_cast<Eigen::Index>(i)) = Complex(-c.buses[i].p_load, -c.buses[i].q_load);
  }
  for (const Machine& m : c.machines) {
    s(static_cast<Eigen::Index>(c.bus_index(m.bus))) += Complex(m.p_mech, 0.0);
  }
  return s;
}

}  // namespace

Eigen::MatrixXcd build_ybus(const PowerCase& c, std::optional<std::size_t> skip_branch) {
  const auto n = static_cast<Eigen::Index>(c.buses.size());
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t k = 0; k < c.branches.size(); ++k) {
    const Branch& br = c.branches[k];
    if (!br.in_service || (skip_branch && *skip_branch == k)) continue;
    const auto f = static_cast<Eigen::Index>(c.bus_index(br.from));
    const auto t = static_cast<Eigen::Index>(c.bus_index(br.to));
    const Complex ys = 1.0 / Complex(br.r, br.x);
    const Complex ysh(0.0, br.b / 2.0);
    const double tap = br.ratio;
    y(f, f) += (ys + ysh) / (tap * tap);
    y(t, t) += ys + ysh;
    y(f, t) -= ys / tap;
    y(t, f) -= ys / tap;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const Bus& b = c.buses[static_cast<std::size_t>(i)];
    y(i, i) += Complex(b.g_shunt, b.b_shunt);
  }
  return y;
}

Eigen::VectorXcd power_mismatch(const PowerCase& c, const Eigen::VectorXcd& voltage) {
  const Eigen::MatrixXcd y = build_ybus(c);
  const VectorXcd current = y * voltage;
  return voltage.cwiseProduct(current.conjugate()) - scheduled_injection(c);
}

Complex PowerFlowSolution::generation(const PowerCase& c, std::size_t bus) const {
  const Bus& b = c.buses.at(bus);
  return injection(static_cast<Eigen::Index>(bus)) + Complex(b.p_load, b.q_load);
}

PowerFlowSolution power_flow(const PowerCase& c, double tol, int max_iterations) {
  if (!(tol > 0.0)) throw PreconditionError("power flow tolerance must be positive");
  const auto n = static_cast<Eigen::Index>(c.buses.size());
  const Eigen::MatrixXcd y = build_ybus(c);
  const VectorXcd s_spec = scheduled_injection(c);

  // Unknowns: angles of every non-slack bus, then magnitudes of PQ buses.
  std::vector<Eigen::Index> ang, mag;
  for (Eigen::Index i = 0; i < n; ++i) {
    const BusType t = c.buses[static_cast<std::size_t>(i)].type;
    if (t != BusType::slack) ang.push_back(i);
    if (t == BusType::pq) mag.push_back(i);
  }
  const auto na = static_cast<Eigen::Index>(ang.size());
  const auto nm = static_cast<Eigen::Index>(mag.size());

  VectorXd va = VectorXd::Zero(n);
  VectorXd vm(n);
  for (Eigen::Index i = 0; i < n; ++i) vm(i) = c.buses[static_cast<std::size_t>(i)].v;

  auto voltage = [&] {
    VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = std::polar(vm(i), va(i));
    return v;
  };
  auto residual = [&](const VectorXcd& v, VectorXd& f) {
    const VectorXcd s = v.cwiseProduct((y * v).conjugate()) - s_spec;
    f.resize(na + nm);
    for (Eigen::Index k = 0; k < na; ++k) f(k) = s(ang[static_cast<std::size_t>(k)]).real();
    for (Eigen::Index k = 0; k < nm; ++k) f(na + k) = s(mag[static_cast<std::size_t>(k)]).imag();
    return f.size() == 0 ? 0.0 : f.lpNorm<Eigen::Infinity>();
  };

  VectorXd f;
  VectorXcd v = voltage();
  double mismatch = residual(v, f);
  int it = 0;
  while (mismatch > tol) {
    if (it == max_iterations) {
      throw PowerFlowDiverged(
          fmt::format("power flow did not converge in {} iterations (mismatch {:.3e})", max_iterations, mismatch),
          mismatch);
    }
    ++it;
    // dS/dVa = j diag(V) conj(diag(I) - Y diag(V))
    // dS/dVm = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|)
    const VectorXcd current = y * v;
    const VectorXcd vnorm = v.cwiseQuotient(vm.cast<Complex>());
    Eigen::MatrixXcd ds_da = -(y * v.asDiagonal()).conjugate();
    ds_da.diagonal() += current.conjugate();
    ds_da = (Complex(0.0, 1.0) * v).asDiagonal() * ds_da;
    Eigen::MatrixXcd ds_dm = v.asDiagonal() * (y * vnorm.asDiagonal()).conjugate();
    ds_dm.diagonal() += current.conjugate().cwiseProduct(vnorm);

    MatrixXd jac(na + nm, na + nm);
    for (Eigen::Index r = 0; r < na + nm; ++r) {
      const bool p_row = r < na;
      const Eigen::Index bus = p_row ? ang[static_cast<std::size_t>(r)] : mag[static_cast<std::size_t>(r - na)];
      for (Eigen::Index col = 0; col < na + nm; ++col) {
        const Complex d = col < na ? ds_da(bus, ang[static_cast<std::size_t>(col)])
                                   : ds_dm(bus, mag[static_cast<std::size_t>(col - na)]);
        jac(r, col) = p_row ? d.real() : d.imag();
      }
    }
    const VectorXd dx = jac.partialPivLu().solve(-f);
    if (!dx.allFinite()) {
      throw PowerFlowDiverged(fmt::format("power flow Jacobian is singular at iteration {}", it), mismatch);
    }
    for (Eigen::Index k = 0; k < na; ++k) va(ang[static_cast<std::size_t>(k)]) += dx(k);
    for (Eigen::Index k = 0; k < nm; ++k) vm(mag[static_cast<std::size_t>(k)]) += dx(na + k);
    v = voltage();
    mismatch = residual(v, f);
    log().debug("power flow iteration {}: mismatch {:.3e}", it, mismatch);
  }

  PowerFlowSolution sol;
  sol.voltage = v;
  sol.injection = v.cwiseProduct((y * v).conjugate());
  sol.iterations = it;
  sol.mismatch = mismatch;
  return sol;
}

}  // namespace roa::power
