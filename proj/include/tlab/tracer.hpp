#pragma once

#include <string>
#include <vector>

#include "tlab/field.hpp"

namespace tlab {

enum class Integrator { rk4, midpoint };

struct TrajectoryConfig {
    double T = 1.0;
    double t_max = 1.0;
    double dt = 0.01;
    int substeps = 2;  // OU steps per macro step; even so the stage midpoint lies on the grid
    Integrator integrator = Integrator::rk4;
    Vec3 x0{0.0, 0.0, 0.0};
    bool frozen = false;  // hold the field realization fixed (convergence tests)
    int record_every = 1;

    void validate() const;
};

// Smallest even substep count with theta_max * dt / substeps <= 0.1.
int default_substeps(double theta_max, double dt);

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec3> positions;
    std::vector<Vec3> velocities;  // V_T(t, z(t)/T) at the recorded times (z runs only)
    uint64_t mode_seed = 0, noise_seed = 0;
    TrajectoryConfig config;
    SpectrumParams params;
    int d = 2;
};

struct TrajectoryPair {
    Trajectory z;  // dz/dt = V_T(t, z/T)
    Trajectory y;  // y(t) = int_0^t V_T(s, 0) ds on the same noise path
};

Trajectory integrate_z_T(FieldSampler& sampler, const TrajectoryConfig& cfg);
Trajectory integrate_y_T(FieldSampler& sampler, const TrajectoryConfig& cfg);
TrajectoryPair integrate_pair(FieldSampler& sampler, const TrajectoryConfig& cfg);

struct MsdPoint {
    double t, value, stderr_;
};

// Mean |z(t) - z(0)|^2 over the ensemble with 20-block jackknife errors.
std::vector<MsdPoint> msd_curve(const std::vector<Trajectory>& ens, const std::vector<double>& lags, int blocks = 20);

// Position at time t by linear interpolation of the recorded samples.
Vec3 position_at(const Trajectory& tr, double t);

// Replays the noise of a fresh sampler (same seeds, time 0) along the trajectory
// and returns V_T(t_i, z(t_i)/T) at the recorded times.
std::vector<Vec3> lagrangian_series(FieldSampler& fresh, const Trajectory& tr);

// Ensembles. Member r uses mode seed derive_seed(seed, 1, r) and noise seed
// derive_seed(seed, 2, r), so an ensemble can be enlarged without re-simulating.
struct EnsembleSpec {
    SpectrumParams params;
    FieldVariant variant = FieldVariant::rescaled;  // rescaled, or gaussian for the diffusive control
    int n_modes = 128;
    double control_rate = 400.0;
    TrajectoryConfig traj;  // traj.T is the rescaling; substeps <= 0 picks default_substeps
    bool want_y = false;
};

// Macro step resolving the fastest OU rate: t_max / ceil(t_max * theta_max / resolution), capped at dt_max.
double resolved_dt(double theta_max, double t_max, double dt_max, double resolution = 0.5);

std::vector<TrajectoryPair> simulate_ensemble(const EnsembleSpec& spec, long first, long count, uint64_t seed,
                                              int workers = 1);

struct ProximityResult {
    std::vector<double> T, median_ratio;
    std::vector<double> dt;
    bool decreasing = false;  // strictly, over increasing T
};

// median over pairs of |z_T(t) - y_T(t)| / rms|y_T(t)| on shared noise, per T.
ProximityResult frozen_proximity(const SpectrumParams& p, const std::vector<double>& T_list, long pairs, double t,
                                 int n_modes, uint64_t seed, int workers = 1, double dt_max = 0.01);

struct StationarityCheck {
    int component = 0, order = 1;
    Estimate early, late, diff;  // per-replica window means of v_j^order; diff = late - early (paired)
    double z = 0.0;
    bool pass = false;
};

// Two-window moment comparison of the recorded Lagrangian velocities (first vs last third).
std::vector<StationarityCheck> lagrangian_stationarity(const std::vector<Trajectory>& ens, int max_order = 2,
                                                       int blocks = 20);

void write_trajectory_csv(const std::string& path, const Trajectory& tr);
void write_trajectory_sidecar(const std::string& path, const Trajectory& tr);

}  // namespace tlab
