#pragma once

#include <functional>
#include <limits>
#include <vector>

namespace feasip {

/// Every barrier, safety-margin and step-control constant of the solver.
struct BarrierSpec {
    double x0 = 1e-3;         ///< support width of P
    double d0 = 1e-3;         ///< required clearance
    double mu = 1e-2;         ///< initial barrier weight
    double L2 = 1e-4;         ///< safety-margin coefficient
    double eta = 1.0 / 7.0;   ///< safety-margin exponent, must stay below 1/6
    double eps_mu = 1e-6;     ///< outer loop stops once mu <= eps_mu
    double eps_d = 1e-4;      ///< inner loop stops once |grad E|_inf <= eps_d
    double gamma = 0.5;       ///< shrink factor for mu, alpha and eps_alpha
    double c_wolfe = 1e-4;    ///< sufficient-decrease constant
    double alpha0 = 1.0;      ///< first trial step
    double eps_alpha = 1e-4;  ///< initial step floor before subdividing

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// Sentinel for an infeasible barrier evaluation. Sums stay infinite and the
/// sufficient-decrease test always rejects it.
inline constexpr double kInfeasible = std::numeric_limits<double>::infinity();

struct PenaltyValue {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

enum class PenaltyKind {
    local,  ///< (x0 - x)^3 / x^4 on (0, x0], zero beyond
    log,    ///< -log x; only a negative control, it is not a valid SIP barrier
};

/// P(x) with first and second derivatives; value is kInfeasible for x <= 0.
PenaltyValue penalty(double x, double x0);
PenaltyValue penalty(double x, PenaltyKind kind, double x0);

/// psi(len) = L1 * len / 2 + L2 * len^eta
double safety_margin(double length, double lipschitz, const BarrierSpec& spec);

struct BarrierLawReport {
    std::vector<double> x;
    std::vector<double> x_times_p;
    bool monotone_increasing = false;
    double final_value = 0.0;

    bool exceeds(double threshold) const { return final_value > threshold; }
};

/// Samples x * P(x) on x = x0 * 2^-n, n = 1..samples.
BarrierLawReport assumption3_check(const BarrierSpec& spec, int samples, PenaltyKind kind = PenaltyKind::local);

/// Composite midpoint rule for the integral of P(dist(t) - d0) over [t0, t1].
/// Diagnostic only.
double quadrature_penalty_integral(const std::function<double(double)>& distance_profile, double t0, double t1,
                                   PenaltyKind kind, double x0, double d0, long resolution);

}  // namespace feasip
