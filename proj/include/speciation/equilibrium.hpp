#pragma once

// Equilibrium speciation in log-concentration variables u_k = ln xi_k.
//
// The square system has one row per reaction (sum_k nu_ik u_k = ln K'_i), one
// row per conserved moiety ((lambda . xi - a_s) / a_s) and, when the scheme
// has charged species, the electroneutrality row (z . xi) / (|z| . xi).
// Ionic strength enters through K' and is handled by an outer fixed-point loop.

#include "activity.hpp"
#include "conservation.hpp"
#include "errors.hpp"
#include "scheme.hpp"

#include <Eigen/Core>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace speciation {

enum class InitialGuess {
  /// pH 7, each moiety spread evenly over its members; continuation on failure.
  neutral_pH,
  user_supplied,
  /// Always march lg K from 0 to the target values.
  continuation,
};

struct SolverConfig {
  double newton_tol = 1e-10;
  int max_newton_iters = 100;
  double correction_tol = 1e-6;
  int max_correction_iters = 50;
  InitialGuess initial_guess = InitialGuess::neutral_pH;
  Eigen::VectorXd user_guess;  // ln xi, used with InitialGuess::user_supplied
  bool damping = true;
  int max_halvings = 30;
  double max_log_step = 10.0;
  int continuation_steps = 4;
  DebyeHuckel activity{};
  bool ionic_correction = true;
  /// Also correct the water constant for ionic strength.
  bool correct_water = false;
  /// After the correction loop, run Newton on the fully I-coupled system.
  bool direct_coupled = false;
  std::ostream* trace = nullptr;

  void validate() const {
    if (!(newton_tol > 0.0) || !(correction_tol > 0.0)) throw std::invalid_argument("tolerances must be positive");
    if (max_newton_iters < 1 || max_correction_iters < 1 || continuation_steps < 1) {
      throw std::invalid_argument("iteration caps must be at least 1");
    }
    if (max_halvings < 0 || !(max_log_step > 0.0)) throw std::invalid_argument("invalid damping settings");
  }
};

struct EquilibriumState {
  Eigen::VectorXd xi;
  Eigen::VectorXd u;
  double pH = std::numeric_limits<double>::quiet_NaN();
  double pH_a = std::numeric_limits<double>::quiet_NaN();
  /// pH of the first correction pass, i.e. with uncorrected constants.
  double pH_I0 = std::numeric_limits<double>::quiet_NaN();
  double I = 0.0;
  /// Activity coefficient of a singly charged ion.
  double gamma = 1.0;
  std::vector<double> corrected_pK;
  double residual_norm = std::numeric_limits<double>::infinity();
  int newton_iters = 0;
  int correction_iters = 0;
  bool converged = false;
  std::vector<std::string> diagnostics;
};

inline constexpr double kMaxLogConcentration = 700.0;

class EquilibriumSystem {
 public:
  using PkOfI = std::function<std::vector<double>(double)>;

  EquilibriumSystem(const Scheme& scheme, std::span<const Moiety> moieties, std::span<const double> pK)
      : scheme_(&scheme) {
    const auto n = static_cast<Eigen::Index>(scheme.species_count());
    const auto r = static_cast<Eigen::Index>(scheme.reaction_count());
    const auto m = static_cast<Eigen::Index>(moieties.size());
    if (pK.size() != scheme.reaction_count()) throw std::invalid_argument("one pK per reaction required");

    nu_ = stoichiometric_matrix(scheme).cast<double>();
    lambda_.resize(m, n);
    totals_.resize(m);
    for (Eigen::Index s = 0; s < m; ++s) {
      const auto& mo = moieties[static_cast<std::size_t>(s)];
      if (mo.lambda.size() != n) throw std::invalid_argument("moiety '" + mo.name + "' has wrong length");
      if (!(mo.total > 0.0)) throw DegenerateInput("moiety absent from mixture: total of '" + mo.name + "' must be > 0");
      lambda_.row(s) = mo.lambda.cast<double>().transpose();
      totals_(s) = mo.total;
    }
    z_ = charge_vector(scheme).cast<double>();
    charge_row_ = (z_.array() != 0.0).any();
    if (r + m + (charge_row_ ? 1 : 0) != n) {
      throw std::invalid_argument("dimension mismatch: " + std::to_string(r) + " reactions + " + std::to_string(m) +
                                  " moieties" + (charge_row_ ? " + electroneutrality" : "") + " != " +
                                  std::to_string(n) + " species");
    }
    set_pK(pK);
  }

  Eigen::Index size() const { return nu_.cols(); }
  const Scheme& scheme() const { return *scheme_; }

  void set_pK(std::span<const double> pK) {
    lnK_.resize(static_cast<Eigen::Index>(pK.size()));
    for (std::size_t i = 0; i < pK.size(); ++i) lnK_(static_cast<Eigen::Index>(i)) = -pK[i] * std::numbers::ln10;
  }
  const Eigen::VectorXd& lnK() const { return lnK_; }

  /// Makes ln K' a function of the ionic strength implied by u.
  void couple_ionic_strength(PkOfI pk_of_I) { pk_of_I_ = std::move(pk_of_I); }

  Eigen::VectorXd concentrations(const Eigen::VectorXd& u) const {
    clamped_ = (u.array() > kMaxLogConcentration).any();
    return u.array().min(kMaxLogConcentration).exp().matrix();
  }
  bool overflowed() const { return clamped_; }

  Eigen::VectorXd residuals(const Eigen::VectorXd& u) const {
    if (u.size() != size()) throw std::invalid_argument("residuals: dimension mismatch");
    const Eigen::VectorXd xi = concentrations(u);
    Eigen::VectorXd f(size());
    const Eigen::Index r = nu_.rows();
    const Eigen::Index m = lambda_.rows();
    f.head(r) = nu_ * u - ln_k(xi);
    f.segment(r, m) = ((lambda_ * xi).array() / totals_.array() - 1.0).matrix();
    if (charge_row_) f(r + m) = z_.dot(xi) / charge_scale(xi);
    return f;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& u) const {
    if (u.size() != size()) throw std::invalid_argument("jacobian: dimension mismatch");
    const Eigen::VectorXd xi = concentrations(u);
    Eigen::MatrixXd J(size(), size());
    const Eigen::Index r = nu_.rows();
    const Eigen::Index m = lambda_.rows();
    J.topRows(r) = nu_;
    if (pk_of_I_) J.topRows(r) -= ln_k_gradient(xi);
    for (Eigen::Index s = 0; s < m; ++s) {
      J.row(r + s) = (lambda_.row(s).array() * xi.transpose().array() / totals_(s)).matrix();
    }
    if (charge_row_) {
      const double q = charge_scale(xi);
      const double p = z_.dot(xi);
      for (Eigen::Index k = 0; k < size(); ++k) {
        J(r + m, k) = (z_(k) * q - p * std::abs(z_(k))) * xi(k) / (q * q);
      }
    }
    return J;
  }

  double ionic_strength_of(const Eigen::VectorXd& xi) const { return 0.5 * (z_.array().square() * xi.array()).sum(); }

 private:
  double charge_scale(const Eigen::VectorXd& xi) const {
    return std::max(z_.cwiseAbs().dot(xi), std::numeric_limits<double>::min());
  }

  Eigen::VectorXd ln_k(const Eigen::VectorXd& xi) const {
    if (!pk_of_I_) return lnK_;
    const auto pk = pk_of_I_(ionic_strength_of(xi));
    Eigen::VectorXd out(static_cast<Eigen::Index>(pk.size()));
    for (std::size_t i = 0; i < pk.size(); ++i) out(static_cast<Eigen::Index>(i)) = -pk[i] * std::numbers::ln10;
    return out;
  }

  // d ln K'_i / d u_k through I(u); d I / d u_k = z_k^2 xi_k / 2.
  Eigen::MatrixXd ln_k_gradient(const Eigen::VectorXd& xi) const {
    const double I = ionic_strength_of(xi);
    const double h = std::max(1e-7 * I, 1e-12);
    const double lo = std::max(I - h, 0.0);
    const auto up = pk_of_I_(I + h);
    const auto dn = pk_of_I_(lo);
    Eigen::VectorXd dlnk_dI(static_cast<Eigen::Index>(up.size()));
    for (std::size_t i = 0; i < up.size(); ++i) {
      dlnk_dI(static_cast<Eigen::Index>(i)) = -(up[i] - dn[i]) * std::numbers::ln10 / (I + h - lo);
    }
    const Eigen::VectorXd dI_du = 0.5 * (z_.array().square() * xi.array()).matrix();
    return dlnk_dI * dI_du.transpose();
  }

  const Scheme* scheme_;
  Eigen::MatrixXd nu_;
  Eigen::MatrixXd lambda_;
  Eigen::VectorXd totals_;
  Eigen::VectorXd z_;
  Eigen::VectorXd lnK_;
  bool charge_row_ = false;
  PkOfI pk_of_I_;
  mutable bool clamped_ = false;
};

inline Eigen::VectorXd residuals(const Eigen::VectorXd& u, const Scheme& scheme, std::span<const Moiety> moieties,
                                 std::span<const double> pK) {
  return EquilibriumSystem(scheme, moieties, pK).residuals(u);
}

inline Eigen::MatrixXd jacobian(const Eigen::VectorXd& u, const Scheme& scheme, std::span<const Moiety> moieties) {
  const std::vector<double> pk(scheme.reaction_count(), 0.0);
  return EquilibriumSystem(scheme, moieties, pk).jacobian(u);
}

namespace detail {

struct NewtonOutcome {
  Eigen::VectorXd u;
  int iterations = 0;
  double residual_norm = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::string failure;
};

inline NewtonOutcome damped_newton(const EquilibriumSystem& sys, Eigen::VectorXd u, const SolverConfig& cfg) {
  NewtonOutcome out;
  Eigen::VectorXd f = sys.residuals(u);
  double norm2 = f.norm();
  for (int it = 0;; ++it) {
    out.iterations = it;
    out.residual_norm = f.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(out.residual_norm)) {
      out.failure = "non-finite residual";
      break;
    }
    if (cfg.trace) *cfg.trace << "  newton " << it << "  |F| = " << out.residual_norm << '\n';
    if (out.residual_norm < cfg.newton_tol) {
      out.converged = true;
      break;
    }
    if (it >= cfg.max_newton_iters) {
      out.failure = "newton iteration cap reached";
      break;
    }
    const Eigen::MatrixXd J = sys.jacobian(u);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-18)) throw SingularJacobian("singular Jacobian in equilibrium solve", rcond > 0 ? 1.0 / rcond : INFINITY);
    Eigen::VectorXd du = lu.solve(-f);
    const double biggest = du.lpNorm<Eigen::Infinity>();
    if (biggest > cfg.max_log_step) du *= cfg.max_log_step / biggest;

    double step = 1.0;
    Eigen::VectorXd trial = u + du;
    Eigen::VectorXd ft = sys.residuals(trial);
    if (cfg.damping) {
      int halvings = 0;
      while (!(ft.allFinite() && ft.norm() < norm2) && halvings < cfg.max_halvings) {
        step *= 0.5;
        trial = u + step * du;
        ft = sys.residuals(trial);
        ++halvings;
      }
      if (!(ft.allFinite() && ft.norm() < norm2)) {
        out.failure = "line search could not reduce the residual";
        break;
      }
    }
    u = std::move(trial);
    f = std::move(ft);
    norm2 = f.norm();
  }
  out.u = std::move(u);
  return out;
}

inline Eigen::VectorXd neutral_guess(const Scheme& scheme, std::span<const Moiety> moieties) {
  const auto n = static_cast<Eigen::Index>(scheme.species_count());
  Eigen::VectorXd xi = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  for (const auto& mo : moieties) {
    double weight = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) weight += std::abs(static_cast<double>(mo.lambda(k)));
    for (Eigen::Index k = 0; k < n; ++k) {
      if (mo.lambda(k) != 0) xi(k) = std::min(xi(k), mo.total / weight);
    }
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!std::isfinite(xi(k))) xi(k) = 1e-7;
  }
  if (scheme.has_hydrogen()) xi(0) = 1e-7;
  return xi.array().log().matrix();
}

}  // namespace detail

/// Solves the equilibrium system at fixed constants pK (one per reaction).
/// Never throws on non-convergence; the returned state says so.
inline EquilibriumState newton_solve(const Scheme& scheme, std::span<const Moiety> moieties, std::span<const double> pK,
                                     const SolverConfig& cfg = {}, std::optional<Eigen::VectorXd> warm_start = {}) {
  cfg.validate();
  EquilibriumSystem sys(scheme, moieties, pK);
  EquilibriumState st;

  detail::NewtonOutcome res;
  int total_iters = 0;
  auto run = [&](Eigen::VectorXd u0) {
    res = detail::damped_newton(sys, std::move(u0), cfg);
    total_iters += res.iterations;
    return res.converged;
  };

  auto continuation = [&](Eigen::VectorXd u0) {
    st.diagnostics.push_back("continuation in lg K");
    const std::vector<double> target(pK.begin(), pK.end());
    std::vector<double> scaled(target.size());
    double t = 0.0;
    double dt = 1.0 / cfg.continuation_steps;
    Eigen::VectorXd u = std::move(u0);
    auto at = [&](double s) {
      for (std::size_t i = 0; i < target.size(); ++i) scaled[i] = s * target[i];
      sys.set_pK(scaled);
    };
    at(0.0);
    if (!run(u)) return false;
    u = res.u;
    while (t < 1.0) {
      const double next = std::min(1.0, t + dt);
      at(next);
      if (run(u)) {
        u = res.u;
        t = next;
      } else {
        dt *= 0.5;
        if (dt < 1.0 / 1024) return false;
      }
    }
    return true;
  };

  bool ok = false;
  switch (cfg.initial_guess) {
    case InitialGuess::user_supplied:
      if (cfg.user_guess.size() != sys.size()) throw std::invalid_argument("user_guess has wrong length");
      ok = run(cfg.user_guess);
      break;
    case InitialGuess::continuation:
      ok = continuation(detail::neutral_guess(scheme, moieties));
      break;
    case InitialGuess::neutral_pH:
      if (warm_start && warm_start->size() == sys.size()) ok = run(*warm_start);
      if (!ok) ok = run(detail::neutral_guess(scheme, moieties));
      if (!ok) {
        if (!res.failure.empty()) st.diagnostics.push_back("direct newton failed: " + res.failure);
        ok = continuation(detail::neutral_guess(scheme, moieties));
      }
      break;
  }
  sys.set_pK(pK);

  st.u = res.u;
  st.xi = sys.concentrations(st.u);
  if (sys.overflowed()) st.diagnostics.push_back("log-concentration clamped at " + std::to_string(kMaxLogConcentration));
  st.residual_norm = res.residual_norm;
  st.newton_iters = total_iters;
  st.converged = ok;
  if (!ok) st.diagnostics.push_back("not converged: " + res.failure);
  st.corrected_pK.assign(pK.begin(), pK.end());

  st.I = sys.ionic_strength_of(st.xi);
  st.gamma = std::pow(10.0, cfg.activity.log10_gamma(1, st.I));
  if (scheme.has_hydrogen()) {
    st.pH = plain_pH(st.xi(0));
    st.pH_a = activity_pH(st.xi(0), std::pow(10.0, cfg.activity.log10_gamma(1, st.I)));
  }
  return st;
}

/// Fixed-point loop: solve at K, recompute I from the solution, correct the
/// constants, repeat until pH moves by less than correction_tol.
inline EquilibriumState solve_with_ionic_correction(const Scheme& scheme, std::span<const Moiety> moieties,
                                                    const SolverConfig& cfg = {}) {
  cfg.validate();
  std::vector<double> pk;
  for (const auto& rx : scheme.reactions()) pk.push_back(rx.pK);

  if (cfg.trace) *cfg.trace << "pass 0 (I = 0)\n";
  EquilibriumState st = newton_solve(scheme, moieties, pk, cfg);
  st.pH_I0 = st.pH;
  int newton_total = st.newton_iters;
  if (!st.converged || !cfg.ionic_correction) {
    st.correction_iters = 0;
    return st;
  }

  auto measure = [&](const EquilibriumState& s) { return scheme.has_hydrogen() ? s.pH : s.I; };
  double previous = measure(st);
  std::vector<double> history{previous};
  bool settled = false;
  int iter = 0;
  const double pH_I0 = st.pH_I0;
  std::vector<std::string> carried = st.diagnostics;
  while (iter < cfg.max_correction_iters) {
    ++iter;
    const double I = st.I;
    pk = corrected_pK(scheme, I, cfg.activity, cfg.correct_water);
    if (cfg.trace) *cfg.trace << "pass " << iter << " (I = " << I << ")\n";
    Eigen::VectorXd warm = st.u;
    st = newton_solve(scheme, moieties, pk, cfg, warm);
    newton_total += st.newton_iters;
    if (!st.converged) break;
    const double now = measure(st);
    history.push_back(now);
    if (std::abs(now - previous) < cfg.correction_tol) {
      settled = true;
      break;
    }
    previous = now;
  }

  st.diagnostics.insert(st.diagnostics.begin(), carried.begin(), carried.end());
  st.pH_I0 = pH_I0;
  st.correction_iters = iter;
  st.newton_iters = newton_total;
  if (st.converged && !settled) {
    st.converged = false;
    std::string trail = "ionic-strength correction did not settle; last values:";
    for (std::size_t i = history.size() > 5 ? history.size() - 5 : 0; i < history.size(); ++i) {
      trail += " " + std::to_string(history[i]);
    }
    st.diagnostics.push_back(trail);
  }

  if (st.converged && cfg.direct_coupled) {
    EquilibriumSystem sys(scheme, moieties, pk);
    sys.couple_ionic_strength(
        [&](double I) { return corrected_pK(scheme, I, cfg.activity, cfg.correct_water); });
    auto coupled = detail::damped_newton(sys, st.u, cfg);
    st.newton_iters += coupled.iterations;
    if (coupled.converged) {
      st.u = coupled.u;
      st.xi = sys.concentrations(st.u);
      st.residual_norm = coupled.residual_norm;
      st.I = sys.ionic_strength_of(st.xi);
      st.corrected_pK = corrected_pK(scheme, st.I, cfg.activity, cfg.correct_water);
      if (scheme.has_hydrogen()) st.pH = plain_pH(st.xi(0));
      st.diagnostics.push_back("direct coupled newton converged");
    } else {
      st.diagnostics.push_back("direct coupled newton failed (" + coupled.failure + "); keeping corrected result");
    }
  }

  st.gamma = std::pow(10.0, cfg.activity.log10_gamma(1, st.I));
  if (scheme.has_hydrogen()) st.pH_a = activity_pH(st.xi(0), st.gamma);
  if (st.I > kIonicStrengthValidity) st.diagnostics.push_back("ionic strength above 1 mol/L: limiting law is unreliable");
  return st;
}

/// Largest violations of the equilibrium-state invariants.
struct InvariantReport {
  double electroneutrality = 0.0;  // |z.xi| / (|z|.xi)
  double moiety = 0.0;             // max |lambda.xi - a| / a
  double equilibrium = 0.0;        // max |sum nu ln xi - ln K'|
  bool positive = true;

  bool within(double tol) const { return positive && electroneutrality <= tol && moiety <= tol && equilibrium <= tol; }
};

inline InvariantReport verify_state(const Scheme& scheme, std::span<const Moiety> moieties, const EquilibriumState& st) {
  InvariantReport rep;
  rep.positive = (st.xi.array() > 0.0).all();
  const Eigen::VectorXd z = charge_vector(scheme).cast<double>();
  const double scale = z.cwiseAbs().dot(st.xi);
  if (scale > 0.0) rep.electroneutrality = std::abs(z.dot(st.xi)) / scale;
  for (const auto& m : moieties) {
    rep.moiety = std::max(rep.moiety, std::abs(m.lambda.cast<double>().dot(st.xi) - m.total) / m.total);
  }
  const Eigen::MatrixXd nu = stoichiometric_matrix(scheme).cast<double>();
  const Eigen::VectorXd lhs = nu * st.xi.array().log().matrix();
  for (Eigen::Index i = 0; i < nu.rows(); ++i) {
    const double lnk = -st.corrected_pK[static_cast<std::size_t>(i)] * std::numbers::ln10;
    rep.equilibrium = std::max(rep.equilibrium, std::abs(lhs(i) - lnk));
  }
  return rep;
}

}  // namespace speciation
