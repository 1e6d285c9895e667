#pragma once

#include <map>
#include <string>
#include <vector>

namespace menisim::verification {

// ---------------------------------------------------------------------------
// Reduced ODE oracle: the cell system for spatially uniform data, where all
// transport terms vanish. Deliberately independent of the FE solvers.
// ---------------------------------------------------------------------------

struct OdeParams {
    double alpha1 = 0.05;
    double alpha2 = 0.05;
    double beta = 0.5;
    double gamma1 = 0.01;
    double delta1 = 0.01;
};

struct OdeState {
    double c1 = 0.0, c2 = 0.0, h = 0.0, k = 0.0;
};

OdeState ode_rhs(const OdeParams& p, const OdeState& y);

/// Adaptive Dormand-Prince integration to time T, relative/absolute
/// tolerance `tol` (default 1e-12). Throws SolverError on step underflow.
OdeState ode_oracle(const OdeParams& p, const OdeState& y0, double T, double tol = 1e-12);

/// Dense trajectory sampled every dt_out.
std::vector<std::pair<double, OdeState>> ode_oracle_trajectory(const OdeParams& p,
                                                               const OdeState& y0, double T,
                                                               double dt_out, double tol = 1e-12);

/// Implicit Euler at the PDE solver's dt, Newton to 1e-14: the exact
/// time-discrete trajectory a spatially uniform PDE run must reproduce.
std::vector<OdeState> implicit_euler_oracle(const OdeParams& p, const OdeState& y0, double dt,
                                            int n_steps);

/// Closed-form logistic solution of c1' = beta c1 (1 - c1).
double logistic_solution(double c10, double beta, double t);

// ---------------------------------------------------------------------------
// Terzaghi consolidation: truncated Fourier series for a column of height L
// drained at one end, loaded by a step traction p0, lateral strain blocked.
// ---------------------------------------------------------------------------

struct TerzaghiSetup {
    double L = 1.0;          // drainage path length (mm)
    double p0 = 1.0;         // applied load (MPa)
    double lambda = 17.19;   // Lame lambda (MPa)
    double mu = 34.28;       // Lame mu (MPa)
    double alpha = 1.0;      // Biot-Willis
    double inv_M = 68.9;     // storativity (1/MPa)
    double mobility = 10.0;  // kappa/mu_f (mm^2/(MPa s))

    double confined_modulus() const { return lambda + 2.0 * mu; }
    /// Undrained instantaneous pressure response to the step load.
    double undrained_pressure() const;
    /// Consolidation coefficient c_v (mm^2/s).
    double consolidation_coefficient() const;
    double time_factor(double t) const { return consolidation_coefficient() * t / (L * L); }
};

/// Excess pore pressure at distance z from the drained end at time t,
/// truncated at `terms` series terms.
double terzaghi_pressure(const TerzaghiSetup& s, double z_from_drained, double t, int terms = 50);

/// Degree of consolidation U(T_v) = 1 - mean excess pressure ratio.
double terzaghi_consolidation_degree(double Tv, int terms = 50);

// ---------------------------------------------------------------------------
// Convergence bookkeeping shared by the MMS and Terzaghi harnesses.
// ---------------------------------------------------------------------------

struct ConvergenceReport {
    std::vector<double> h;                                // mesh sizes, coarse to fine
    std::map<std::string, std::vector<double>> errors;    // per field
    std::map<std::string, std::vector<double>> orders;    // log2(e_l / e_{l+1})
    std::map<std::string, double> scalars;                // extra reported quantities
    bool pass = false;

    /// Computes orders from errors; requires at least 3 levels.
    void finalize();
    std::string to_text() const;
    double min_order(const std::string& field) const;
};

// ---------------------------------------------------------------------------
// Convergence harnesses (these drive the production solvers; the expected
// values they compare against come from the oracles above).
// ---------------------------------------------------------------------------

struct MmsOptions {
    int levels = 3;
    bool with_taxis = false;
    int base_n = 8;        // coarsest mesh is base_n x base_n
    double T = 0.1;        // final time
    double dt0 = 0.016;    // coarsest dt; refined by 4 per level (dt ~ h^2)
    double order_threshold = 1.8;  // gate on min observed order of c1 and c2
};
/// Manufactured trigonometric-in-space, exponential-in-time solution with
/// matching sources; reports final-time L2 errors and observed orders.
ConvergenceReport mms_cells(const MmsOptions& opts);

struct TerzaghiOptions {
    int levels = 3;
    int base_ny = 16;          // coarsest column resolution
    int nx = 2;                // strip width resolution
    double Tv_step = 0.008;    // coarsest time-factor step; halved per level
    double Tv_end = 1.0;
    double Tv_compare_from = 0.05;  // skip the loading transient in the error norm
    int series_terms = 50;
    double u_tolerance = 0.02;      // |U(1.0) - 0.931|
    double error_tolerance = 0.02;  // relative space-time L2 pressure error, finest level
};
/// Thin-strip consolidation column against the truncated series solution.
ConvergenceReport terzaghi(const TerzaghiOptions& opts);

} // namespace menisim::verification
