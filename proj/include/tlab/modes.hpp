#pragma once

#include <complex>
#include <string>
#include <vector>

#include "tlab/common.hpp"
#include "tlab/rng.hpp"
#include "tlab/spectrum.hpp"

namespace tlab {

enum class ModeScheme { radial_stratified, lattice };

struct ModeOptions {
    int n_modes = 256;
    ModeScheme scheme = ModeScheme::radial_stratified;
    double T_scale = 1.0;
    // Limit integrand: a == a0 on |k| <= k_max instead of the cutoff profile.
    bool flat = false;
    double k_max = 0.0;
    uint64_t seed = 0;  // stratum jitter and directions
};

constexpr int kMaxModes = 2048;

// Modes [0, half) carry the independent degrees of freedom; mode m + half is
// the reflection -k_m of mode m.
struct ModeSet {
    int d = 2;
    int half = 0;
    double T_scale = 1.0;
    bool flat = false;
    double k_max = 0.0;
    std::vector<Vec3> k;
    std::vector<double> weight;  // quadrature cell measure
    std::vector<double> theta;   // OU rate r(|k|)/2
    std::vector<double> amp;     // folded amplitude, amp^2/(2 theta) = weight * spectral density

    int size() const { return 2 * half; }
    int partner(int m) const { return m < half ? m + half : m - half; }
    double spectral_weight(int m) const { return amp[m] * amp[m] / (2.0 * theta[m]); }
    double theta_max() const;
    uint64_t fingerprint() const;
};

// Spectral density of the stored modes at |k| = rho (before weighting).
double mode_density(const SpectrumParams& p, const ModeSet& ms, double rho);

ModeSet build_mode_set(const SpectrumParams& p, const ModeOptions& opt);

// Inverse CDF of the normalized radial law  a(rho / T) rho^{-alpha} on [0, R T]
// (or rho^{-alpha} on [0, k_max] in the flat case).
class RadialLaw {
public:
    RadialLaw(const SpectrumParams& p, double T_scale, bool flat, double k_max);
    double quantile(double u) const;
    double mass() const { return mass_; }  // full d-dimensional integral

private:
    double vq(double u) const;
    SpectrumParams p_;
    double T_, g_, vmax_, mass_;
    bool flat_;
    std::vector<double> vgrid_, cdf_;
};

struct OUEnsemble {
    double time = 0.0;
    int d = 2;
    int n = 0;  // number of modes
    uint64_t modes_fp = 0;
    uint64_t seed = 0;
    std::vector<std::complex<double>> g;  // index j * n + m
    NormalSource rng;

    std::complex<double>& at(int j, int m) { return g[static_cast<size_t>(j) * n + m]; }
    const std::complex<double>& at(int j, int m) const { return g[static_cast<size_t>(j) * n + m]; }

    // cached exact-update coefficients for the last dt
    double cached_dt = -1.0;
    std::vector<double> decay, noise_sd;
    const ModeSet* verified = nullptr;  // mode set already matched against modes_fp
};

OUEnsemble ou_init_stationary(const ModeSet& ms, uint64_t seed);
void ou_step(OUEnsemble& ens, const ModeSet& ms, double dt);

// Versioned binary checkpoint: mode table, complex states, generator state.
void save_checkpoint(const std::string& path, const ModeSet& ms, const OUEnsemble& ens);
void load_checkpoint(const std::string& path, ModeSet& ms, OUEnsemble& ens);

}  // namespace tlab
