#pragma once

// Mass-action kinetics as an independent check of the algebraic equilibrium.
// Small implicit integrator (variable-step BDF2, backward-Euler error
// estimate); intended for toy schemes with moderate constants only.

#include "conservation.hpp"
#include "errors.hpp"
#include "scheme.hpp"
#include "scheme_parser.hpp"

#include <Eigen/Core>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace speciation {

/// k+_i / k-_i = K_i. The default normalisation is k-_i = 1.
struct RateAssignment {
  std::vector<double> k_plus;
  std::vector<double> k_minus;

  static RateAssignment from_scheme(const Scheme& scheme, double k_minus_scale = 1.0) {
    if (!(k_minus_scale > 0.0) || !std::isfinite(k_minus_scale)) throw std::invalid_argument("rate scale must be positive");
    RateAssignment r;
    for (const auto& rx : scheme.reactions()) {
      r.k_minus.push_back(k_minus_scale);
      r.k_plus.push_back(rx.K() * k_minus_scale);
    }
    return r;
  }
};

namespace detail {

inline double mass_action(const std::map<std::size_t, int>& side, const Eigen::VectorXd& xi) {
  double p = 1.0;
  for (const auto& [k, c] : side) p *= std::pow(xi(static_cast<Eigen::Index>(k)), c);
  return p;
}

// d/dxi_k of prod_j xi_j^c_j
inline double mass_action_derivative(const std::map<std::size_t, int>& side, const Eigen::VectorXd& xi, std::size_t k) {
  auto it = side.find(k);
  if (it == side.end()) return 0.0;
  double p = it->second * std::pow(xi(static_cast<Eigen::Index>(k)), it->second - 1);
  for (const auto& [j, c] : side) {
    if (j != k) p *= std::pow(xi(static_cast<Eigen::Index>(j)), c);
  }
  return p;
}

}  // namespace detail

/// sigma_i = -k+_i prod(left) + k-_i prod(right). Negative when the reaction
/// runs left to right.
inline double reaction_rate(const Scheme& scheme, std::size_t i, const Eigen::VectorXd& xi, const RateAssignment& rates) {
  const auto& rx = scheme.reaction(i);
  return -rates.k_plus.at(i) * detail::mass_action(rx.forward, xi) + rates.k_minus.at(i) * detail::mass_action(rx.backward, xi);
}

/// dxi_k/dt = -sum_i nu_ik sigma_i with nu = right - left.
inline Eigen::VectorXd species_rates(const Scheme& scheme, const Eigen::VectorXd& xi, const RateAssignment& rates) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(xi.size());
  for (std::size_t i = 0; i < scheme.reaction_count(); ++i) {
    const double s = reaction_rate(scheme, i, xi, rates);
    for (std::size_t k = 0; k < scheme.species_count(); ++k) {
      if (const int nu = scheme.reaction(i).net(k)) f(static_cast<Eigen::Index>(k)) -= nu * s;
    }
  }
  return f;
}

inline Eigen::MatrixXd species_rates_jacobian(const Scheme& scheme, const Eigen::VectorXd& xi, const RateAssignment& rates) {
  const auto n = static_cast<Eigen::Index>(scheme.species_count());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < scheme.reaction_count(); ++i) {
    const auto& rx = scheme.reaction(i);
    Eigen::RowVectorXd ds(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      ds(k) = -rates.k_plus[i] * detail::mass_action_derivative(rx.forward, xi, kk) +
              rates.k_minus[i] * detail::mass_action_derivative(rx.backward, xi, kk);
    }
    for (Eigen::Index k = 0; k < n; ++k) {
      if (const int nu = rx.net(static_cast<std::size_t>(k))) J.row(k) -= nu * ds;
    }
  }
  return J;
}

struct IntegrationOptions {
  double rtol = 1e-8;
  double atol = 1e-14;
  double initial_step = 1e-6;
  double t_max = 1e12;
  int max_steps = 200000;
  /// Steady when ||dxi/dt|| / ||xi|| falls below this.
  double steady_tol = 1e-10;
  bool record = true;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> xi;
  /// a_s(t) - a_s(0) for each supplied moiety.
  std::vector<std::vector<double>> drift;

  /// max_t |a_s(t) - a_s(0)| / a_s(0) over all moieties.
  double max_relative_drift(std::span<const Moiety> moieties, const Eigen::VectorXd& xi0) const {
    double worst = 0.0;
    for (std::size_t s = 0; s < moieties.size(); ++s) {
      const double a0 = analytical_concentration(moieties[s], std::span<const double>(xi0.data(), static_cast<std::size_t>(xi0.size())));
      for (const auto& row : drift) worst = std::max(worst, std::abs(row[s]) / std::abs(a0));
    }
    return worst;
  }
};

struct KineticsResult {
  Trajectory trajectory;
  Eigen::VectorXd terminal;
  double t_final = 0.0;
  bool steady = false;
  int accepted_steps = 0;
  int rejected_steps = 0;
};

inline KineticsResult integrate_to_steady_state(const Scheme& scheme, const RateAssignment& rates, const Eigen::VectorXd& xi0,
                                                std::span<const Moiety> moieties = {}, const IntegrationOptions& opt = {}) {
  const auto n = static_cast<Eigen::Index>(scheme.species_count());
  if (xi0.size() != n) throw std::invalid_argument("initial state has wrong length");
  if ((xi0.array() < 0.0).any()) throw std::invalid_argument("initial concentrations must be non-negative");
  if (rates.k_plus.size() != scheme.reaction_count() || rates.k_minus.size() != scheme.reaction_count()) {
    throw std::invalid_argument("rate assignment does not match the scheme");
  }

  KineticsResult out;
  auto totals = [&](const Eigen::VectorXd& y) {
    std::vector<double> a;
    for (const auto& m : moieties) a.push_back(analytical_concentration(m, std::span<const double>(y.data(), static_cast<std::size_t>(y.size()))));
    return a;
  };
  const std::vector<double> a0 = totals(xi0);
  auto record = [&](double t, const Eigen::VectorXd& y) {
    if (!opt.record) return;
    out.trajectory.t.push_back(t);
    out.trajectory.xi.push_back(y);
    auto a = totals(y);
    for (std::size_t s = 0; s < a.size(); ++s) a[s] -= a0[s];
    out.trajectory.drift.push_back(std::move(a));
  };
  auto weights = [&](const Eigen::VectorXd& y) { return (opt.atol + opt.rtol * y.array().abs()).matrix(); };
  auto steady = [&](const Eigen::VectorXd& y) {
    const double norm = y.norm();
    return norm > 0.0 && species_rates(scheme, y, rates).norm() / norm < opt.steady_tol;
  };

  // Solves y = c + beta f(y) by Newton, starting from guess.
  auto implicit = [&](const Eigen::VectorXd& c, double beta, Eigen::VectorXd y, bool& ok) {
    ok = false;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    for (int it = 0; it < 25; ++it) {
      const Eigen::VectorXd g = y - c - beta * species_rates(scheme, y, rates);
      const Eigen::VectorXd dy = (I - beta * species_rates_jacobian(scheme, y, rates)).partialPivLu().solve(-g);
      if (!dy.allFinite()) return y;
      y += dy;
      if (it > 0 && (dy.array() / weights(y).array()).abs().maxCoeff() < 1e-3) {
        ok = true;
        return y;
      }
    }
    return y;
  };

  Eigen::VectorXd y = xi0;
  Eigen::VectorXd y_prev;
  double t = 0.0;
  double h = opt.initial_step;
  double h_prev = 0.0;
  record(t, y);

  while (!steady(y)) {
    if (out.accepted_steps >= opt.max_steps || t >= opt.t_max) {
      out.terminal = y;
      out.t_final = t;
      return out;
    }
    if (h < 1e-15 * std::max(1.0, t)) {
      throw IntegrationError("step size underflow at t = " + std::to_string(t) +
                             "; the scheme is too stiff, rescale the rate constants");
    }
    bool ok_be = false, ok_2 = false;
    const Eigen::VectorXd y_be = implicit(y, h, y, ok_be);
    Eigen::VectorXd y_new;
    double err = std::numeric_limits<double>::infinity();
    if (ok_be) {
      if (h_prev == 0.0) {
        // Startup: compare one backward-Euler step with two half steps.
        bool ok_a = false, ok_b = false;
        const Eigen::VectorXd half = implicit(y, 0.5 * h, y, ok_a);
        y_new = implicit(half, 0.5 * h, half, ok_b);
        ok_2 = ok_a && ok_b;
        if (ok_2) err = 2.0 * ((y_new - y_be).array() / weights(y_new).array()).abs().maxCoeff();
      } else {
        const double w = h / h_prev;
        const double c1 = (1 + w) * (1 + w) / (1 + 2 * w);
        const double c0 = w * w / (1 + 2 * w);
        const double beta = (1 + w) / (1 + 2 * w);
        y_new = implicit(c1 * y - c0 * y_prev, beta * h, y_be, ok_2);
        if (ok_2) err = ((y_new - y_be).array() / weights(y_new).array()).abs().maxCoeff();
      }
    }
    const double floor = -(opt.atol + opt.rtol * y.cwiseAbs().maxCoeff());
    if (!ok_2 || !(err <= 1.0) || (y_new.array() < floor).any()) {
      ++out.rejected_steps;
      h *= (ok_2 && std::isfinite(err)) ? std::max(0.1, 0.9 / std::sqrt(err)) : 0.25;
      continue;
    }
    y_new = y_new.cwiseMax(0.0);
    y_prev = y;
    y = y_new;
    t += h;
    h_prev = h;
    ++out.accepted_steps;
    record(t, y);
    h *= std::min(4.0, 0.9 / std::sqrt(std::max(err, 1e-12)));
  }
  out.steady = true;
  out.terminal = y;
  out.t_final = t;
  return out;
}

/// Small schemes with moderate constants for the oracle comparison.
struct ToyCase {
  std::string name;
  Scheme scheme;
  Eigen::VectorXd xi0;
};

inline std::vector<ToyCase> toy_schemes() {
  std::vector<ToyCase> out;
  auto add = [&](std::string name, const std::string& text, std::initializer_list<std::pair<const char*, double>> start) {
    Scheme s = parse_scheme(text);
    Eigen::VectorXd xi0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.species_count()));
    for (const auto& [sp, v] : start) xi0(static_cast<Eigen::Index>(*s.find(sp))) = v;
    out.push_back({std::move(name), std::move(s), std::move(xi0)});
  };
  add("isomerisation", "A{0} = B{0} ; pK=0\n", {{"A", 1.0}});
  add("dissociation", "A{0} = B{0} + C{0} ; pK=2\n", {{"A", 0.1}});
  add("dimerisation", "2*A{0} = D{0} ; pK=-1\n", {{"A", 0.2}});
  add("chain", "A{0} = B{0} ; pK=0.5\nB = C{0} + D{0} ; pK=1\n", {{"A", 0.3}});
  add("weak acid", "HX{0} = X{-1} + H{+1} ; pK=2\n", {{"HX", 0.05}});
  return out;
}

}  // namespace speciation
