#include "menisim/stimulus.hpp"

#include <cmath>

#include "menisim/common.hpp"

namespace menisim {

StimulusField compute_stimulus(const StressField& stress, const Field& darcy_flux, double Phi,
                               const StimulusParams& params) {
    const Mesh& mesh = darcy_flux.space->mesh();
    require(static_cast<int>(stress.octahedral_shear_strain.size()) == mesh.num_elements(),
            "compute_stimulus: stress field does not match the mesh");
    StimulusField out;
    out.S.resize(mesh.num_elements(), 0.0);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        if (mesh.subdomain(e) != Subdomain::Porous) continue;
        const Vec2 seep =
            evaluate_vector(darcy_flux, e, {1. / 3, 1. / 3, 1. / 3}).value / Phi;
        out.S[e] = stress.octahedral_shear_strain[e] / params.a_strain +
                   seep.norm() / params.a_vel;
    }
    return out;
}

double rate_map_value(double S, const StimulusParams& p) {
    const double w = p.ramp_fraction * (p.S_max - p.S_min);
    if (S <= p.S_min || S >= p.S_max) return p.alpha_min;
    if (S < p.S_min + w)
        return p.alpha_min + (p.alpha_max - p.alpha_min) * (S - p.S_min) / w;
    if (S > p.S_max - w)
        return p.alpha_min + (p.alpha_max - p.alpha_min) * (p.S_max - S) / w;
    return p.alpha_max;
}

RateField rate_map(const StimulusField& stimulus, const StimulusParams& params) {
    RateField out;
    out.alpha1.resize(stimulus.S.size());
    out.alpha2.resize(stimulus.S.size());
    for (std::size_t e = 0; e < stimulus.S.size(); ++e) {
        // alpha1 and alpha2 share the same map by default
        const double a = rate_map_value(stimulus.S[e], params);
        out.alpha1[e] = a;
        out.alpha2[e] = a;
    }
    return out;
}

double window_occupancy(const StimulusField& stimulus, const StimulusParams& params) {
    if (stimulus.S.empty()) return 0.0;
    int inside = 0;
    for (double s : stimulus.S)
        if (s > params.S_min && s < params.S_max) ++inside;
    return static_cast<double>(inside) / static_cast<double>(stimulus.S.size());
}

StimulusCoupler::StimulusCoupler(StimulusParams params, std::vector<Vec2> centroids)
    : params_(std::move(params)), centroids_(std::move(centroids)) {
    params_.validate();
    current_.S.assign(centroids_.size(), 0.0);
}

void StimulusCoupler::update_from_mechanics(const StressField& stress, const Field& darcy_flux,
                                            double Phi) {
    current_ = compute_stimulus(stress, darcy_flux, Phi, params_);
    require(current_.S.size() == centroids_.size(),
            "stimulus: mechanics mesh does not match the coupler");
    has_stimulus_ = true;
}

void StimulusCoupler::update_from_expression(double t) {
    require(params_.source == StimulusSource::ExpressionField,
            "stimulus: expression update requested but source is mechanics");
    for (std::size_t e = 0; e < centroids_.size(); ++e)
        current_.S[e] = std::max(0.0, params_.expression(centroids_[e], t));
    has_stimulus_ = true;
}

RateField StimulusCoupler::rates() const {
    const int n = static_cast<int>(centroids_.size());
    if (params_.mode == StimulusMode::ConstantRates)
        return RateField::constant(n, params_.alpha_min, params_.alpha_min);
    if (!has_stimulus_)
        throw SolverError(
            "stimulus: stress-mapped rates requested before any mechanics solution");
    return rate_map(current_, params_);
}

const StimulusField& StimulusCoupler::stimulus() const { return current_; }

double StimulusCoupler::occupancy() const { return window_occupancy(current_, params_); }

} // namespace menisim
