#pragma once

#include <memory>
#include <optional>
#include <string>

#include "menisim/biology.hpp"
#include "menisim/config.hpp"
#include "menisim/io.hpp"
#include "menisim/stimulus.hpp"
#include "menisim/stokes.hpp"

namespace menisim {

struct RunReport {
    int steps = 0;
    double wall_time_s = 0.0;
    int newton_total = 0;
    int newton_max = 0;
    double conservation_drift = 0.0;  // relative drift of int(c1 + c2)
    double min_c1 = 0.0, min_c2 = 0.0;
    double int_c1 = 0.0, int_c2 = 0.0, int_h = 0.0, int_k = 0.0;
    double max_displacement = 0.0, max_pressure = 0.0;
    double final_energy = 0.0;       // coupled mechanics only
    double window_occupancy = 0.0;   // last coupling step

    std::string to_text() const;
};

/// Top-level staggered time loop: [mechanics if due] -> [stimulus/rates] ->
/// [biology step] -> [observers]. Deterministic with the direct solver:
/// identical config + mesh give bitwise-identical CSV output.
class Orchestrator {
public:
    explicit Orchestrator(const Config& config);
    ~Orchestrator();

    RunReport run();

    void checkpoint(const std::string& path) const;
    /// Throws InputError when the checkpoint's config or mesh hash does not
    /// match this orchestrator.
    void restore(const std::string& path);

    const Mesh& mechanics_mesh() const { return *mesh_; }
    const Mesh& biology_mesh() const;
    int current_step() const { return step_; }
    const CellState* cell_state() const { return cell_state_ ? &*cell_state_ : nullptr; }
    const CoupledState* coupled_state() const {
        return coupled_state_ ? &*coupled_state_ : nullptr;
    }
    const PoroState* poro_state() const { return poro_state_ ? &*poro_state_ : nullptr; }

private:
    void solve_mechanics_if_due();
    void write_outputs(int step, const NewtonReport* newton);
    void write_final_report(const RunReport& report) const;

    Config config_;
    std::unique_ptr<Mesh> mesh_;       // mechanics (full) mesh
    std::optional<Submesh> bio_sub_;   // porous restriction when fluid present
    const Mesh* bio_mesh_ = nullptr;

    std::unique_ptr<CellSolver> cells_;
    std::unique_ptr<PoroSolver> poro_;
    std::unique_ptr<CoupledSolver> coupled_;
    std::unique_ptr<StimulusCoupler> coupler_;

    std::optional<CellState> cell_state_;
    std::optional<PoroState> poro_state_;
    std::optional<CoupledState> coupled_state_;

    std::optional<SeriesWriter> cells_csv_;
    std::optional<SeriesWriter> mech_csv_;
    std::optional<SeriesWriter> stim_csv_;

    int step_ = 0;
    bool mech_solved_once_ = false;
    double mech_max_disp_ = 0.0, mech_max_p_ = 0.0;
};

} // namespace menisim
