#include <fmt/format.h>

#include <numeric>

#include "roa/powersys.hpp"

namespace roa::power {

namespace {

// Component label per bus over in-service branches, optionally skipping one.
std::vector<int> components(const PowerCase& c, std::optional<std::size_t> skip) {
  std::vector<int> parent(c.buses.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (std::size_t k = 0; k < c.branches.size(); ++k) {
    const Branch& br = c.branches[k];
    if (!br.in_service || (skip && *skip == k)) continue;
    parent[static_cast<std::size_t>(find(static_cast<int>(c.bus_index(br.from))))] =
        find(static_cast<int>(c.bus_index(br.to)));
  }
  std::vector<int> label(c.buses.size());
  for (std::size_t i = 0; i < label.size(); ++i) label[i] = find(static_cast<int>(i));
  return label;
}

}  // namespace

Eigen::VectorXd ReducedSystem::internal_angles() const { return e_internal.array().arg().matrix(); }

double ReducedSystem::symmetry_residual() const { return (y_reduced - y_reduced.transpose()).cwiseAbs().maxCoeff(); }

ReducedSystem kron_reduce(const PowerCase& c, const PowerFlowSolution& pf, const Topology& topology) {
  const std::size_t nb = c.buses.size();
  const std::size_t nm = c.machines.size();
  if (static_cast<std::size_t>(pf.voltage.size()) != nb) {
    throw PreconditionError("power flow solution does not match the case");
  }

  std::optional<std::size_t> skip;
  std::optional<std::size_t> grounded;
  std::vector<bool> dead(nb, false);  // cut off from every machine
  if (topology.state != NetworkState::pre_fault) {
    if (!topology.contingency) throw PreconditionError("fault-on and post-fault topologies need a contingency");
    const Contingency& k = *topology.contingency;
    validate_contingency(c, k);
    if (topology.state == NetworkState::fault_on) {
      grounded = c.bus_index(k.faulted_bus);
    } else {
      skip = c.find_branch(k.from, k.to);
      const auto label = components(c, skip);
      const int first = label[c.bus_index(c.machines.front().bus)];
      for (const Machine& m : c.machines) {
        if (label[c.bus_index(m.bus)] != first) {
          throw ReductionFailed(
              fmt::format("tripping {} separates the machine at bus {} from the rest", k.line(), m.bus));
        }
      }
      for (std::size_t i = 0; i < nb; ++i) dead[i] = label[i] != first;
    }
  }

  // Nodes: machine internal nodes first, then buses in case order.
  const auto n_int = static_cast<Eigen::Index>(nm);
  const auto total = static_cast<Eigen::Index>(nm + nb);
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(total, total);
  y.bottomRightCorner(static_cast<Eigen::Index>(nb), static_cast<Eigen::Index>(nb)) = build_ybus(c, skip);
  for (std::size_t i = 0; i < nb; ++i) {
    const Bus& b = c.buses[i];
    const double vm = std::abs(pf.voltage(static_cast<Eigen::Index>(i)));
    const auto node = n_int + static_cast<Eigen::Index>(i);
    y(node, node) += Complex(b.p_load, -b.q_load) / (vm * vm);
  }

  ReducedSystem sys;
  sys.n_mach = nm;
  sys.omega_s = c.omega_s();
  sys.e_internal.resize(n_int);
  sys.p_mech.resize(n_int);
  sys.m_inertia.resize(n_int);
  sys.d_damp.resize(n_int);
  for (std::size_t i = 0; i < nm; ++i) {
    const Machine& m = c.machines[i];
    const auto ii = static_cast<Eigen::Index>(i);
    const std::size_t bus = c.bus_index(m.bus);
    const auto node = n_int + static_cast<Eigen::Index>(bus);
    const Complex ya = 1.0 / Complex(0.0, m.xd_prime);
    y(ii, ii) += ya;
    y(node, node) += ya;
    y(ii, node) -= ya;
    y(node, ii) -= ya;

    const Complex v = pf.voltage(static_cast<Eigen::Index>(bus));
    const Complex s_gen = pf.generation(c, bus);
    const Complex current = std::conj(s_gen / v);
    sys.e_internal(ii) = v + Complex(0.0, m.xd_prime) * current;
    sys.p_mech(ii) = s_gen.real();
    sys.m_inertia(ii) = 2.0 * m.h / sys.omega_s;
    sys.d_damp(ii) = m.d / sys.omega_s;
    sys.machine_buses.push_back(m.bus);
  }

  // A grounded node sits at zero voltage: dropping its row and column is the
  // same as eliminating it with an infinite shunt. An island without
  // machines carries no current and is dropped as well.
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < total; ++k) {
    if (grounded && k == n_int + static_cast<Eigen::Index>(*grounded)) continue;
    if (k >= n_int && dead[static_cast<std::size_t>(k - n_int)]) continue;
    keep.push_back(k);
  }
  Eigen::MatrixXcd work(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    for (std::size_t s = 0; s < keep.size(); ++s) {
      work(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) = y(keep[r], keep[s]);
    }
  }

  // Eliminate network nodes one at a time, last first. Each update
  // Y_ij -= (Y_ik Y_kj) / Y_kk keeps an exactly symmetric matrix symmetric.
  const double scale = work.cwiseAbs().maxCoeff();
  for (auto last = static_cast<Eigen::Index>(keep.size()) - 1; last >= n_int; --last) {
    const Complex pivot = work(last, last);
    if (std::abs(pivot) <= 1e-12 * scale) {
      const Bus& b = c.buses[static_cast<std::size_t>(keep[static_cast<std::size_t>(last)] - n_int)];
      throw ReductionFailed(fmt::format("singular pivot while eliminating bus {}", b.id));
    }
    for (Eigen::Index i = 0; i < last; ++i) {
      const Complex a = work(i, last);
      if (a == Complex(0.0, 0.0)) continue;
      for (Eigen::Index j = 0; j < last; ++j) work(i, j) -= (a * work(last, j)) / pivot;
    }
  }
  sys.y_reduced = work.topLeftCorner(n_int, n_int);
  return sys;
}

}  // namespace roa::power
