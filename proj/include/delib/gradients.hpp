#pragma once

#include <functional>
#include <string>
#include <vector>

#include "delib/deliberation.hpp"
#include "delib/options.hpp"

namespace delib {

enum class GradientRegime { Plain, LambdaGamma, LambdaZero };

/// Exact gradient blocks, shaped like the corresponding Theta blocks.
struct GradientReport {
    std::vector<double> d_theta_pi;    // [(o*S + s)*A + a]
    std::vector<double> d_theta_beta;  // [o*S + s]
    GradientRegime regime = GradientRegime::Plain;

    std::string to_json_text() const;
};

/// gamma-discounted expected visit measure over (s,o) of the augmented
/// chain started from alpha; total mass 1/(1-gamma). Solved exactly.
std::vector<double> discounted_occupancy(const Mdp& mdp, const Theta& theta,
                                         const std::vector<double>& alpha, double tol = 1e-10);

/// Exact dJ/d(theta_pi) with terminations and mu held fixed.
GradientReport option_policy_gradient(const Mdp& mdp, const Theta& theta,
                                      const std::vector<double>& alpha);

/// Exact dJ/d(theta_beta) for the selected objective:
///   Plain       - expected return, eta ignored
///   LambdaGamma - J^{gamma,lambda=gamma}: margin form with A^c + eta
///   LambdaZero  - J^{gamma,lambda=0}: base advantage plus the immediate-cost term
GradientReport termination_gradient(const Mdp& mdp, const Theta& theta,
                                    const std::vector<double>& alpha,
                                    const DeliberationConfig& config, GradientRegime regime);

/// d(sum_alpha D^lambda)/d(theta_beta) for the switching cost, exact.
std::vector<double> deliberation_gradient(const Mdp& mdp, const Theta& theta,
                                          const std::vector<double>& alpha, double lambda);

/// Plain-regime termination gradient via the derivative of the intra-option
/// Bellman equations: solve the linear fixed point in dQ/d(theta_beta) per
/// coordinate, then contract with alpha.
GradientReport termination_gradient_exact_bellman(const Mdp& mdp, const Theta& theta,
                                                  const std::vector<double>& alpha,
                                                  double tol = 1e-10);

enum class ThetaBlock { Pi, Beta, Both };

/// Central finite differences of a scalar objective over the selected
/// theta blocks. Coordinates are independent, so the loop parallelizes
/// without changing any result.
GradientReport fd_gradient(const std::function<double(const Theta&)>& objective,
                           const Theta& theta, ThetaBlock block = ThetaBlock::Both,
                           double h = 1e-6);

struct FdReport {
    double max_rel_error = 0.0;
    std::string worst_coordinate;
};

/// Worst-coordinate comparison of `analytic` against central differences of
/// `objective`; relative error uses max(1, |analytic|) as denominator.
FdReport finite_difference_check(const std::function<double(const Theta&)>& objective,
                                 const Theta& theta, const GradientReport& analytic,
                                 ThetaBlock block = ThetaBlock::Both, double h = 1e-6);

}  // namespace delib
