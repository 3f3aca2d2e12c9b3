#pragma once

// Independent reference implementations used only by tests. Each one
// computes its target the slow, direct way: enumeration over strata, O(n^2)
// pair loops, or closed-form normal equations.

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "cfpred/core.hpp"

namespace oracle {

// Sum over i != j of wc_i wn_j [s_i > s_j] + 1/2 [s_i == s_j], divided by
// sum over i != j of wc_i wn_j.
double pairwise_auc(const std::vector<double>& s, const std::vector<double>& wc, const std::vector<double>& wn);

// (X' W X)^{-1} X' W y by LDLT of the normal equations.
Eigen::VectorXd normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w);

// Binomial log-likelihood sum w [y eta - log(1 + e^eta)].
double logit_loglik(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                    const Eigen::VectorXd& beta);

// Central finite-difference gradient.
Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& at,
                                 double h);

// Empirical g-formula for a discrete time-fixed dataset: strata are the
// distinct covariate rows; pi1(x) is the probability the regime assigns
// A = 1 (0 or 1 for static regimes). losses[i] is L(Y_i, mu(X*_i)).
double gformula_fixed(const Eigen::MatrixXd& x, const std::vector<int>& a, const std::vector<double>& losses,
                      const std::function<double(const Eigen::VectorXd&)>& pi1);

// Empirical g-formula for two periods with a static regime (a0, a1):
// sum_{x0} P(x0) sum_{x1} P(x1 | x0, a0) E[L | x0, x1, a0, a1].
double gformula_two_period(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& x1, const std::vector<int>& a0,
                           const std::vector<int>& a1, const std::vector<double>& losses, int g0, int g1);

}  // namespace oracle
