#include "feasip/barrier.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace feasip {

namespace {

void require(bool ok, const char* field, const char* what)
{
    if (!ok)
        throw std::invalid_argument(std::string(field) + ": " + what);
}

}  // namespace

void BarrierSpec::validate() const
{
    require(std::isfinite(x0) && x0 > 0.0, "x0", "must be > 0");
    require(std::isfinite(d0) && d0 >= 0.0, "d0", "must be >= 0");
    require(std::isfinite(mu) && mu > 0.0, "mu", "must be > 0");
    require(std::isfinite(L2) && L2 > 0.0, "L2", "must be > 0");
    require(eta > 0.0 && eta < 1.0 / 6.0, "eta", "must lie in (0, 1/6)");
    require(std::isfinite(eps_mu) && eps_mu > 0.0, "eps_mu", "must be > 0");
    require(std::isfinite(eps_d) && eps_d > 0.0, "eps_d", "must be > 0");
    require(gamma > 0.0 && gamma < 1.0, "gamma", "must lie in (0, 1)");
    require(c_wolfe > 0.0 && c_wolfe < 1.0, "c_wolfe", "must lie in (0, 1)");
    require(std::isfinite(alpha0) && alpha0 > 0.0, "alpha0", "must be > 0");
    require(std::isfinite(eps_alpha) && eps_alpha > 0.0, "eps_alpha", "must be > 0");
}

PenaltyValue penalty(double x, double x0)
{
    if (!(x > 0.0))
        return {kInfeasible, -kInfeasible, kInfeasible};
    if (x >= x0)
        return {};
    const double r = x0 - x;
    const double x2 = x * x;
    const double x4 = x2 * x2;
    const double x5 = x4 * x;
    const double x6 = x4 * x2;
    PenaltyValue p;
    p.value = r * r * r / x4;
    p.d1 = -3.0 * r * r / x4 - 4.0 * r * r * r / x5;
    p.d2 = 6.0 * r / x4 + 24.0 * r * r / x5 + 20.0 * r * r * r / x6;
    return p;
}

PenaltyValue penalty(double x, PenaltyKind kind, double x0)
{
    if (kind == PenaltyKind::local)
        return penalty(x, x0);
    if (!(x > 0.0))
        return {kInfeasible, -kInfeasible, kInfeasible};
    return {-std::log(x), -1.0 / x, 1.0 / (x * x)};
}

double safety_margin(double length, double lipschitz, const BarrierSpec& spec)
{
    if (length <= 0.0)
        return 0.0;
    return lipschitz * length / 2.0 + spec.L2 * std::pow(length, spec.eta);
}

BarrierLawReport assumption3_check(const BarrierSpec& spec, int samples, PenaltyKind kind)
{
    if (samples < 2)
        throw std::invalid_argument("assumption3_check: samples must be >= 2");
    BarrierLawReport r;
    r.monotone_increasing = true;
    for (int n = 1; n <= samples; ++n) {
        const double x = std::ldexp(spec.x0, -n);
        const double xp = x * penalty(x, kind, spec.x0).value;
        if (!r.x_times_p.empty() && !(xp > r.x_times_p.back()))
            r.monotone_increasing = false;
        r.x.push_back(x);
        r.x_times_p.push_back(xp);
    }
    r.final_value = r.x_times_p.back();
    return r;
}

double quadrature_penalty_integral(const std::function<double(double)>& distance_profile, double t0, double t1,
                                   PenaltyKind kind, double x0, double d0, long resolution)
{
    if (resolution < 1)
        throw std::invalid_argument("quadrature_penalty_integral: resolution must be >= 1");
    const double h = (t1 - t0) / static_cast<double>(resolution);
    // Neumaier summation: 1e6+ terms of widely varying size.
    double sum = 0.0, comp = 0.0;
    for (long i = 0; i < resolution; ++i) {
        const double t = t0 + (static_cast<double>(i) + 0.5) * h;
        const double v = penalty(distance_profile(t) - d0, kind, x0).value;
        if (!std::isfinite(v))
            return kInfeasible;
        const double s = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - s) + v;
        else
            comp += (v - s) + sum;
        sum = s;
    }
    return (sum + comp) * h;
}

}  // namespace feasip
