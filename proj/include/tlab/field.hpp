#pragma once

#include <utility>
#include <vector>

#include "tlab/modes.hpp"
#include "tlab/spectrum.hpp"

namespace tlab {

// Middle factor of the pair kernel: Gamma (physical field / X), identity (Z),
// or I - Gamma (the complementary process).
enum class Projection { gamma, identity, complement };

// gaussian: first-chaos control field sum_m Gamma(k_m) A_m g_m e^{i k_m x} with one
// fast OU rate for every mode (diffusive tracer reference).
enum class FieldVariant { base, rescaled, limit, gaussian };

struct SamplerOptions {
    FieldVariant variant = FieldVariant::base;
    double T = 1.0;
    int n_modes = 256;
    ModeScheme scheme = ModeScheme::radial_stratified;
    double k_max = 0.0;  // limit variant only
    double control_rate = 200.0;  // gaussian variant: OU rate of every mode
    Projection projection = Projection::gamma;
    bool pair_geometry = true;  // false: only the identity projection is available
    uint64_t mode_seed = 0;
    uint64_t noise_seed = 0;
};

class FieldSampler {
public:
    FieldSampler(const SpectrumParams& p, const SamplerOptions& opt);
    FieldSampler(const SpectrumParams& p, ModeSet modes, OUEnsemble ens, const SamplerOptions& opt);

    const SpectrumParams& params() const { return p_; }
    const ScalingExponents& exponents() const { return ex_; }
    const SamplerOptions& options() const { return opt_; }
    const ModeSet& modes() const { return ms_; }
    const OUEnsemble& ensemble() const { return ens_; }
    OUEnsemble& ensemble() { return ens_; }
    double time() const { return ens_.time; }

    void step(double dt) { ou_step(ens_, ms_, dt); }

    // Field at the ensemble's current time. x is in the sampler's own spatial
    // coordinates (for V_T pass z / T).
    Vec3 evaluate(const Vec3& x) const;
    Vec3 evaluate(double t, const Vec3& x) const;
    // Same projection but a caller-chosen one (shares the noise).
    Vec3 evaluate(const Vec3& x, Projection proj) const;

    // Naive sum over all ordered mode pairs in complex arithmetic; also reports
    // the largest imaginary residue relative to the real magnitude.
    Vec3 evaluate_exact(const Vec3& x, double* imag_residue = nullptr) const;

private:
    void init_geometry();
    void load_b(const Vec3& x) const;
    Vec3 evaluate_linear(Projection proj) const;

    SpectrumParams p_;
    ScalingExponents ex_{};
    SamplerOptions opt_;
    ModeSet ms_;
    OUEnsemble ens_;
    // Unit total wavevectors for pairs (h1 < h2): sum k1 + k2 and difference k1 - k2.
    std::vector<double> ks_[3], kd_[3];
    std::vector<size_t> row_;
    mutable std::vector<double> br_[3], bi_[3];
};

// Quadrature value with standard error.
struct Estimate {
    double value = 0.0;
    double stderr_ = 0.0;
};

struct CovarianceResult {
    Mat3 value{};
    Mat3 stderr_{};
    bool divergent = false;
};

// R_{jj'}(t, x) = E[V_j(t + s, x + y) V_{j'}(s, y)] of the continuum field by
// randomized quasi-Monte Carlo (scrambled Sobol' points through the radial law).
CovarianceResult covariance_R(const SpectrumParams& p, double t, const Vec3& x, long budget, uint64_t seed = 1);

// Radial energy spectrum: |q|^{d-1} times the angular density of R(t, .) at |q| = xi.
double energy_spectrum_hat(const SpectrumParams& p, double t, double xi, int budget);

struct TaylorKuboResult {
    bool finite = false;
    Mat3 D{};
    std::vector<double> partial;  // scalar diffusivity per refinement level
    double ratio = 0.0;           // last increment ratio
};

TaylorKuboResult taylor_kubo(const SpectrumParams& p, int refinement_levels);
// The same covariance from synthesized fields: each replica draws its own modes and
// stationary noise, evaluates V(0, 0), advances the noise by t and evaluates V(t, x).
CovarianceResult covariance_mc(const SpectrumParams& p, double t, const Vec3& x, long replicas, int n_modes,
                               uint64_t seed, int workers = 1, int blocks = 20);
// Several (t, x) on the same replicas (one noise path each, points visited in order of t).
std::vector<CovarianceResult> covariance_mc(const SpectrumParams& p, const std::vector<std::pair<double, Vec3>>& points,
                                            long replicas, int n_modes, uint64_t seed, int workers = 1,
                                            int blocks = 20);

struct VarianceScaling {
    std::vector<double> T, mean, stderr_;
    double slope = 0.0, slope_stderr = 0.0;
    bool unstable = false;
};

VarianceScaling variance_scaling_VT(const SpectrumParams& p, const std::vector<double>& T_list, int replicas,
                                    int n_modes = 256, uint64_t seed = 7, int workers = 1);

// 2 (d-1) M_T^2 with M_T the spectral mass at scale T.
double variance_VT_exact(const SpectrumParams& p, double T);

}  // namespace tlab
