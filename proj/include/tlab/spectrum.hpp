#pragma once

#include <cmath>
#include <map>
#include <string>

#include "tlab/common.hpp"

namespace tlab {

enum class CutoffProfile { hat, bump };

struct SpectrumParams {
    double alpha = 0.5;
    double beta = 0.75;
    int d = 2;
    double a0 = 1.0;
    double r0 = 1.0;
    CutoffProfile cutoff_profile = CutoffProfile::hat;
    double cutoff_radius = 1.0;

    void validate() const;
    double cutoff(double xi) const;  // a(xi)
    double rate(double xi) const { return r0 * std::pow(xi, 2.0 * beta); }
};

struct ScalingExponents {
    double delta;
    double hurst;
};

ScalingExponents scaling_exponents(const SpectrumParams& p);

// Orthogonal projection onto the complement of k (first d entries used).
Mat3 gamma_project(int d, const Vec3& k);

enum class KernelVariant { E, E_T, E_inf };

double kernel_eval(const SpectrumParams& p, KernelVariant v, double T, double s, double s2, const Vec3& k,
                   const Vec3& k2);

// Area of the unit sphere in R^d.
double sphere_area(int d);

// Integral over R^d of a(|k|/T) |k|^{1-alpha-d}; exact scaling T^{1-alpha}.
double spectral_mass(const SpectrumParams& p, double T_scale = 1.0);

// One-dimensional radial integral  int_0^R a(u) u^{-alpha} du  by panel Gauss-Legendre in v = u^{1-alpha}.
double radial_integral(const SpectrumParams& p);

std::string profile_name(CutoffProfile c);
CutoffProfile parse_profile(const std::string& s);

// Flat key=value text. Lines may be sectioned ("params.alpha=0.5"); '#' starts a comment.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(const std::string& text);
std::string format_key_values(const KeyValues& kv);

// Reads params from keys "<prefix>alpha" etc.; missing keys keep defaults.
SpectrumParams params_from_kv(const KeyValues& kv, const std::string& prefix = "params.");
void params_to_kv(const SpectrumParams& p, KeyValues& kv, const std::string& prefix = "params.");

}  // namespace tlab
