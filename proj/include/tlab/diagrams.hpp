#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "tlab/field.hpp"
#include "tlab/spectrum.hpp"

namespace tlab {

// Hands are numbered node * r + slot.
struct Diagram {
    int n = 0;
    int r = 2;
    std::vector<std::pair<int, int>> links;  // (h, h') with h < h'
    std::vector<int> free;

    bool complete() const { return free.empty(); }
    int node_of(int hand) const { return hand / r; }
    void validate() const;
};

// Complete diagrams with r hands per node (r = 2, or r = 1 for the Gaussian control),
// streamed in canonical order: the lowest unmatched hand is always linked first.
void for_each_complete(int n, int r, const std::function<void(const Diagram&)>& visit);
std::vector<Diagram> enumerate_complete(int n);

// Inclusion-exclusion count  sum_j (-1)^j C(n,j) (2n-2j-1)!!  of the r = 2 class.
int64_t count_complete_formula(int n);

std::vector<std::vector<int>> connected_components(const Diagram& g);

// Nodes of a single cycle in traversal order (each node has exactly two links).
std::vector<int> cycle_order(const Diagram& g, const std::vector<int>& component);

struct DiagramCensus {
    int64_t complete = 0;
    int64_t single_cycle = 0;
    std::map<std::vector<int>, int64_t> by_component_sizes;  // sorted sizes -> count
};

DiagramCensus diagram_census(int n);

// Per-link constant: int a0 |k|^{1-alpha-d} exp(-r0 |k|^{2 beta} |s| / 2) dk = C |s|^{H-1}.
double cycle_constant_C(const SpectrumParams& p);

// psi(t) = sum_m b_m 1[0, r_m](t)
struct Psi {
    std::vector<double> b, r;
    double operator()(double t) const;
    void validate() const;
};

// int prod_j psi(t_j) |t_j - t_{j+1}|^{H-1} dt_1..dt_n with t_{n+1} = t_1 (no C^n).
// Exact for n = 2; Galerkin transfer matrix with Richardson extrapolation otherwise.
Estimate cycle_time_integral(int n, const Psi& psi, double H, int quad_points);

Estimate eval_IG_cycle(int n, const Psi& psi, double H, int quad_points, double C);

// E (sum_m b_m Z_j(r_m))^n from the component census of the complete diagrams.
Estimate moment_Z(const Psi& psi, int n, const SpectrumParams& p, int quad_points = 200);

struct XNode {
    double t = 1.0;
    int component = 0;
    Projection projection = Projection::gamma;  // gamma: X, complement: X~, identity: Z
};

struct MomentXResult {
    Estimate value;
    bool flagged = false;  // relative error above 5%
};

// E prod_l Y_l(t_l) for Y in {X, X~, Z} components, n <= 4, by randomized quasi-Monte
// Carlo over the time chain and the link wavevectors of every diagram component.
MomentXResult moment_X(const std::vector<XNode>& nodes, const SpectrumParams& p, long budget, uint64_t seed = 11);

struct ProductFormulaReport {
    int n = 0, cells = 0;
    long samples = 0;
    double mc_mean = 0.0, mc_stderr = 0.0, exact = 0.0, z = 0.0;
    bool pass = false;
    // Gaussian (one hand per node) control on the same cells
    double g_mc_mean = 0.0, g_mc_stderr = 0.0, g_exact = 0.0, g_z = 0.0;
    bool g_pass = false;
};

ProductFormulaReport validate_product_formula(int n, int grid_cells, uint64_t seed, long samples = 100000);

}  // namespace tlab
