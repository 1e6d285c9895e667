#pragma once

#include <vector>

#include "menisim/biology.hpp"
#include "menisim/config.hpp"
#include "menisim/poro.hpp"

namespace menisim {

/// Per-element mechanical stimulus, nonnegative and finite.
struct StimulusField {
    std::vector<double> S;
};

/// S = gamma_oct / a_strain + |u_p / Phi| / a_vel per element, from the
/// octahedral shear strain and the seepage-speed magnitude.
StimulusField compute_stimulus(const StressField& stress, const Field& darcy_flux, double Phi,
                               const StimulusParams& params);

/// Piecewise-affine trapezoidal bump: alpha_min outside [S_min, S_max],
/// alpha_max on the inner plateau, affine ramps of width
/// ramp_fraction * (S_max - S_min) in between. Always within
/// [alpha_min, alpha_max].
double rate_map_value(double S, const StimulusParams& params);
RateField rate_map(const StimulusField& stimulus, const StimulusParams& params);

/// Share of elements whose stimulus falls inside the window.
double window_occupancy(const StimulusField& stimulus, const StimulusParams& params);

/// Holds the most recent mechanics-derived stimulus and produces the rate
/// field for the next biology window. Throws if rates are requested in
/// stress-mapped mechanics mode before any mechanics solution was supplied.
class StimulusCoupler {
public:
    /// centroids: element centroids, used to sample expression-sourced
    /// stimulus fields.
    StimulusCoupler(StimulusParams params, std::vector<Vec2> centroids);

    void update_from_mechanics(const StressField& stress, const Field& darcy_flux, double Phi);
    void update_from_expression(double t);

    RateField rates() const;
    const StimulusField& stimulus() const;
    bool has_stimulus() const { return has_stimulus_; }
    double occupancy() const;

private:
    StimulusParams params_;
    std::vector<Vec2> centroids_;
    StimulusField current_;
    bool has_stimulus_ = false;
};

} // namespace menisim
