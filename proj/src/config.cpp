#include "menisim/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "menisim/common.hpp"
#include "menisim/mesh.hpp"

namespace menisim {

using nlohmann::json;

namespace {

void check(bool cond, const std::string& key, const std::string& bound) {
    if (!cond) throw InputError("config: '" + key + "' violates " + bound);
}

// Rejects keys not in the schema so typos cannot silently fall back to
// defaults.
void check_keys(const json& obj, const std::string& section, const std::set<std::string>& known) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!known.count(key))
            throw InputError("config: unknown key '" + section + (section.empty() ? "" : ".") +
                             key + "'");
    }
}

double num(const json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw InputError(std::string("config: '") + key + "' must be a number");
    return obj[key].get<double>();
}

int integer(const json& obj, const char* key, int fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer())
        throw InputError(std::string("config: '") + key + "' must be an integer");
    return obj[key].get<int>();
}

std::string str(const json& obj, const char* key, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    return obj[key].get<std::string>();
}

bool boolean(const json& obj, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    return obj[key].get<bool>();
}

} // namespace

void BiologyParams::validate() const {
    check(a1 > 0, "biology.a1", "> 0");
    // b1, b2, beta admit zero: the conservation check runs with beta = 0 and
    // the diffusion-only verification cases switch taxis off
    check(b1 >= 0, "biology.b1", ">= 0");
    check(b2 >= 0, "biology.b2", ">= 0");
    check(beta >= 0, "biology.beta", ">= 0");
    check(gamma1 > 0, "biology.gamma1", "> 0");
    check(delta1 > 0, "biology.delta1", "> 0");
    check(eta0 > 0, "biology.eta0", "> 0");
}

void MechParams::validate() const {
    check(p_max >= 0, "mechanics.p_max", ">= 0");
    check(mu_f > 0, "mechanics.mu_f", "> 0");
    check(rho_p > 0, "mechanics.rho_p", "> 0");
    check(kappa > 0, "mechanics.kappa", "> 0");
    check(rho_f > 0, "mechanics.rho_f", "> 0");
    check(Phi > 0 && Phi < 1, "mechanics.Phi", "in (0,1)");
    check(E > 0, "mechanics.E", "> 0");
    check(inv_M >= 0, "mechanics.inv_M", ">= 0");
    check(nu > 0 && nu < 0.5, "mechanics.nu", "in (0, 0.5)");
    check(alpha_biot > 0 && alpha_biot <= 1, "mechanics.alpha_biot", "in (0, 1]");
}

LameParameters lame_from_table(const MechParams& p) {
    require(p.nu < 0.5, "lame_from_table: nu must be < 0.5");
    LameParameters lame;
    lame.lambda = p.E * p.nu / ((1.0 + p.nu) * (1.0 - 2.0 * p.nu));
    lame.mu = p.E / (2.0 * (1.0 + p.nu));
    return lame;
}

void StimulusParams::validate() const {
    check(S_min < S_max, "stimulus.S_min", "< S_max");
    check(alpha_min <= alpha_max, "stimulus.alpha_min", "<= alpha_max");
    check(a_strain > 0, "stimulus.a_strain", "> 0");
    check(a_vel > 0, "stimulus.a_vel", "> 0");
    check(ramp_fraction > 0 && ramp_fraction <= 0.5, "stimulus.ramp_fraction", "in (0, 0.5]");
}

void RunPlan::validate() const {
    check(dt > 0, "run.dt", "> 0");
    check(n_steps >= 1, "run.n_steps", ">= 1");
    check(mechanics_cadence >= 1, "run.mechanics_cadence", ">= 1");
    check(output_stride >= 1, "run.output_stride", ">= 1");
    check(checkpoint_stride >= 0, "run.checkpoint_stride", ">= 0");
    check(threads >= 1, "run.threads", ">= 1");
}

void GeometryConfig::validate() const {
    if (mesh_file.empty()) GeometrySpec::parse(spec);  // throws on bad name
    check(nx >= 1 && ny >= 1, "geometry.nx/ny", ">= 1");
    check(length > 0 && porous_height > 0 && fluid_height > 0, "geometry lengths", "> 0");
    for (const std::string* tag : {&left_tag, &right_tag, &bottom_tag, &top_tag}) {
        if (!tag->empty() && !boundary_tag_from_string(*tag))
            throw InputError("config: unknown boundary tag '" + *tag + "'");
    }
}

void SolverSettings::validate() const {
    check(linear.rel_tolerance > 0, "solver.rel_tolerance", "> 0");
    check(linear.max_iterations >= 1, "solver.max_iterations", ">= 1");
    check(newton_tolerance > 0, "solver.newton_tolerance", "> 0");
    check(newton_max_iterations >= 1, "solver.newton_max_iterations", ">= 1");
}

void CouplingParams::validate() const {
    check(gamma_N > 0, "coupling.gamma_N", "> 0");
    check(bjs_slip >= 0, "coupling.bjs_slip", ">= 0");
    check(pressure_stabilization >= 0, "coupling.pressure_stabilization", ">= 0");
}

void Config::validate() const {
    biology.validate();
    mechanics.validate();
    stimulus.validate();
    run.validate();
    geometry.validate();
    solver.validate();
    coupling.validate();
}

namespace {

StimulusMode parse_stim_mode(const std::string& s) {
    if (s == "constant-rates") return StimulusMode::ConstantRates;
    if (s == "stress-mapped") return StimulusMode::StressMapped;
    throw InputError("config: stimulus.mode must be constant-rates or stress-mapped, got '" + s +
                     "'");
}
StimulusSource parse_stim_source(const std::string& s) {
    if (s == "mechanics") return StimulusSource::Mechanics;
    if (s == "expression") return StimulusSource::ExpressionField;
    throw InputError("config: stimulus.source must be mechanics or expression, got '" + s + "'");
}
RunMode parse_run_mode(const std::string& s) {
    if (s == "biology-only") return RunMode::BiologyOnly;
    if (s == "mechanics-only") return RunMode::MechanicsOnly;
    if (s == "coupled") return RunMode::Coupled;
    throw InputError("config: run.mode must be biology-only, mechanics-only or coupled, got '" +
                     s + "'");
}
MechanicsModel parse_mech_model(const std::string& s) {
    if (s == "poro-traction") return MechanicsModel::PoroTraction;
    if (s == "stokes-biot") return MechanicsModel::StokesBiot;
    throw InputError("config: run.mechanics_model must be poro-traction or stokes-biot, got '" +
                     s + "'");
}
SolveMethod parse_method(const std::string& s) {
    if (s == "direct-lu") return SolveMethod::DirectLU;
    if (s == "gmres") return SolveMethod::GMRES;
    if (s == "bicgstab") return SolveMethod::BiCGStab;
    throw InputError("config: solver.method must be direct-lu, gmres or bicgstab, got '" + s +
                     "'");
}
Preconditioner parse_precond(const std::string& s) {
    if (s == "none") return Preconditioner::None;
    if (s == "jacobi") return Preconditioner::Jacobi;
    if (s == "ilu0") return Preconditioner::ILU0;
    throw InputError("config: solver.preconditioner must be none, jacobi or ilu0, got '" + s +
                     "'");
}

const char* to_string(StimulusMode m) {
    return m == StimulusMode::ConstantRates ? "constant-rates" : "stress-mapped";
}
const char* to_string(StimulusSource s) {
    return s == StimulusSource::Mechanics ? "mechanics" : "expression";
}
const char* to_string(RunMode m) {
    switch (m) {
        case RunMode::BiologyOnly: return "biology-only";
        case RunMode::MechanicsOnly: return "mechanics-only";
        case RunMode::Coupled: return "coupled";
    }
    return "?";
}
const char* to_string(MechanicsModel m) {
    return m == MechanicsModel::PoroTraction ? "poro-traction" : "stokes-biot";
}
const char* to_string(SolveMethod m) {
    switch (m) {
        case SolveMethod::DirectLU: return "direct-lu";
        case SolveMethod::GMRES: return "gmres";
        case SolveMethod::BiCGStab: return "bicgstab";
    }
    return "?";
}
const char* to_string(Preconditioner p) {
    switch (p) {
        case Preconditioner::None: return "none";
        case Preconditioner::Jacobi: return "jacobi";
        case Preconditioner::ILU0: return "ilu0";
    }
    return "?";
}

Config from_json(const json& j) {
    Config c;
    check_keys(j, "", {"biology", "mechanics", "stimulus", "run", "geometry", "initial", "solver",
                       "coupling"});

    if (j.contains("biology")) {
        const json& b = j["biology"];
        check_keys(b, "biology", {"a1", "b1", "b2", "beta", "gamma1", "delta1", "eta0"});
        c.biology.a1 = num(b, "a1", c.biology.a1);
        c.biology.b1 = num(b, "b1", c.biology.b1);
        c.biology.b2 = num(b, "b2", c.biology.b2);
        c.biology.beta = num(b, "beta", c.biology.beta);
        c.biology.gamma1 = num(b, "gamma1", c.biology.gamma1);
        c.biology.delta1 = num(b, "delta1", c.biology.delta1);
        c.biology.eta0 = num(b, "eta0", c.biology.eta0);
    }
    if (j.contains("mechanics")) {
        const json& m = j["mechanics"];
        check_keys(m, "mechanics",
                   {"p_max", "mu_f", "rho_p", "kappa", "rho_f", "Phi", "E", "inv_M", "nu",
                    "alpha_biot", "gravity"});
        c.mechanics.p_max = num(m, "p_max", c.mechanics.p_max);
        c.mechanics.mu_f = num(m, "mu_f", c.mechanics.mu_f);
        c.mechanics.rho_p = num(m, "rho_p", c.mechanics.rho_p);
        c.mechanics.kappa = num(m, "kappa", c.mechanics.kappa);
        c.mechanics.rho_f = num(m, "rho_f", c.mechanics.rho_f);
        c.mechanics.Phi = num(m, "Phi", c.mechanics.Phi);
        c.mechanics.E = num(m, "E", c.mechanics.E);
        c.mechanics.inv_M = num(m, "inv_M", c.mechanics.inv_M);
        c.mechanics.nu = num(m, "nu", c.mechanics.nu);
        c.mechanics.alpha_biot = num(m, "alpha_biot", c.mechanics.alpha_biot);
        if (m.contains("gravity")) {
            const auto g = m["gravity"].get<std::vector<double>>();
            require(g.size() == 2, "config: mechanics.gravity must have 2 components");
            c.mechanics.gravity = {g[0], g[1]};
        }
    }
    if (j.contains("stimulus")) {
        const json& s = j["stimulus"];
        check_keys(s, "stimulus",
                   {"S_min", "S_max", "alpha_min", "alpha_max", "a_strain", "a_vel",
                    "ramp_fraction", "mode", "source", "expression"});
        c.stimulus.S_min = num(s, "S_min", c.stimulus.S_min);
        c.stimulus.S_max = num(s, "S_max", c.stimulus.S_max);
        c.stimulus.alpha_min = num(s, "alpha_min", c.stimulus.alpha_min);
        c.stimulus.alpha_max = num(s, "alpha_max", c.stimulus.alpha_max);
        c.stimulus.a_strain = num(s, "a_strain", c.stimulus.a_strain);
        c.stimulus.a_vel = num(s, "a_vel", c.stimulus.a_vel);
        c.stimulus.ramp_fraction = num(s, "ramp_fraction", c.stimulus.ramp_fraction);
        c.stimulus.mode = parse_stim_mode(str(s, "mode", to_string(c.stimulus.mode)));
        c.stimulus.source = parse_stim_source(str(s, "source", to_string(c.stimulus.source)));
        c.stimulus.expression = Expression::parse(str(s, "expression", "0"));
    }
    if (j.contains("run")) {
        const json& r = j["run"];
        check_keys(r, "run",
                   {"dt", "n_steps", "mechanics_cadence", "mode", "mechanics_model",
                    "frozen_stress", "output_stride", "checkpoint_stride", "output_dir",
                    "threads"});
        c.run.dt = num(r, "dt", c.run.dt);
        c.run.n_steps = integer(r, "n_steps", c.run.n_steps);
        c.run.mechanics_cadence = integer(r, "mechanics_cadence", c.run.mechanics_cadence);
        c.run.mode = parse_run_mode(str(r, "mode", to_string(c.run.mode)));
        c.run.mechanics_model =
            parse_mech_model(str(r, "mechanics_model", to_string(c.run.mechanics_model)));
        c.run.frozen_stress = boolean(r, "frozen_stress", c.run.frozen_stress);
        c.run.output_stride = integer(r, "output_stride", c.run.output_stride);
        c.run.checkpoint_stride = integer(r, "checkpoint_stride", c.run.checkpoint_stride);
        c.run.output_dir = str(r, "output_dir", c.run.output_dir);
        c.run.threads = integer(r, "threads", c.run.threads);
    }
    if (j.contains("geometry")) {
        const json& g = j["geometry"];
        check_keys(g, "geometry",
                   {"spec", "nx", "ny", "ny_porous", "length", "porous_height", "fluid_height",
                    "mesh_file", "left_tag", "right_tag", "bottom_tag", "top_tag"});
        c.geometry.spec = str(g, "spec", c.geometry.spec);
        c.geometry.nx = integer(g, "nx", c.geometry.nx);
        c.geometry.ny = integer(g, "ny", c.geometry.ny);
        c.geometry.ny_porous = integer(g, "ny_porous", c.geometry.ny_porous);
        c.geometry.length = num(g, "length", c.geometry.length);
        c.geometry.porous_height = num(g, "porous_height", c.geometry.porous_height);
        c.geometry.fluid_height = num(g, "fluid_height", c.geometry.fluid_height);
        c.geometry.mesh_file = str(g, "mesh_file", c.geometry.mesh_file);
        c.geometry.left_tag = str(g, "left_tag", c.geometry.left_tag);
        c.geometry.right_tag = str(g, "right_tag", c.geometry.right_tag);
        c.geometry.bottom_tag = str(g, "bottom_tag", c.geometry.bottom_tag);
        c.geometry.top_tag = str(g, "top_tag", c.geometry.top_tag);
    }
    if (j.contains("initial")) {
        const json& i = j["initial"];
        check_keys(i, "initial", {"c1", "c2", "h", "k"});
        c.initial.c1 = Expression::parse(str(i, "c1", c.initial.c1.text()));
        c.initial.c2 = Expression::parse(str(i, "c2", c.initial.c2.text()));
        c.initial.h = Expression::parse(str(i, "h", c.initial.h.text()));
        c.initial.k = Expression::parse(str(i, "k", c.initial.k.text()));
    }
    if (j.contains("solver")) {
        const json& s = j["solver"];
        check_keys(s, "solver",
                   {"method", "rel_tolerance", "max_iterations", "preconditioner",
                    "newton_tolerance", "newton_max_iterations"});
        c.solver.linear.method = parse_method(str(s, "method", to_string(c.solver.linear.method)));
        c.solver.linear.rel_tolerance = num(s, "rel_tolerance", c.solver.linear.rel_tolerance);
        c.solver.linear.max_iterations =
            integer(s, "max_iterations", c.solver.linear.max_iterations);
        c.solver.linear.preconditioner =
            parse_precond(str(s, "preconditioner", to_string(c.solver.linear.preconditioner)));
        c.solver.newton_tolerance = num(s, "newton_tolerance", c.solver.newton_tolerance);
        c.solver.newton_max_iterations =
            integer(s, "newton_max_iterations", c.solver.newton_max_iterations);
    }
    if (j.contains("coupling")) {
        const json& cp = j["coupling"];
        check_keys(cp, "coupling", {"gamma_N", "bjs_slip", "pressure_stabilization"});
        c.coupling.gamma_N = num(cp, "gamma_N", c.coupling.gamma_N);
        c.coupling.bjs_slip = num(cp, "bjs_slip", c.coupling.bjs_slip);
        c.coupling.pressure_stabilization =
            num(cp, "pressure_stabilization", c.coupling.pressure_stabilization);
    }
    c.validate();
    return c;
}

json to_json(const Config& c) {
    json j;
    j["biology"] = {{"a1", c.biology.a1},         {"b1", c.biology.b1},
                    {"b2", c.biology.b2},         {"beta", c.biology.beta},
                    {"gamma1", c.biology.gamma1}, {"delta1", c.biology.delta1},
                    {"eta0", c.biology.eta0}};
    j["mechanics"] = {{"p_max", c.mechanics.p_max},
                      {"mu_f", c.mechanics.mu_f},
                      {"rho_p", c.mechanics.rho_p},
                      {"kappa", c.mechanics.kappa},
                      {"rho_f", c.mechanics.rho_f},
                      {"Phi", c.mechanics.Phi},
                      {"E", c.mechanics.E},
                      {"inv_M", c.mechanics.inv_M},
                      {"nu", c.mechanics.nu},
                      {"alpha_biot", c.mechanics.alpha_biot},
                      {"gravity", {c.mechanics.gravity.x, c.mechanics.gravity.y}}};
    j["stimulus"] = {{"S_min", c.stimulus.S_min},
                     {"S_max", c.stimulus.S_max},
                     {"alpha_min", c.stimulus.alpha_min},
                     {"alpha_max", c.stimulus.alpha_max},
                     {"a_strain", c.stimulus.a_strain},
                     {"a_vel", c.stimulus.a_vel},
                     {"ramp_fraction", c.stimulus.ramp_fraction},
                     {"mode", to_string(c.stimulus.mode)},
                     {"source", to_string(c.stimulus.source)},
                     {"expression", c.stimulus.expression.text()}};
    j["run"] = {{"dt", c.run.dt},
                {"n_steps", c.run.n_steps},
                {"mechanics_cadence", c.run.mechanics_cadence},
                {"mode", to_string(c.run.mode)},
                {"mechanics_model", to_string(c.run.mechanics_model)},
                {"frozen_stress", c.run.frozen_stress},
                {"output_stride", c.run.output_stride},
                {"checkpoint_stride", c.run.checkpoint_stride},
                {"output_dir", c.run.output_dir},
                {"threads", c.run.threads}};
    j["geometry"] = {{"spec", c.geometry.spec},
                     {"nx", c.geometry.nx},
                     {"ny", c.geometry.ny},
                     {"ny_porous", c.geometry.ny_porous},
                     {"length", c.geometry.length},
                     {"porous_height", c.geometry.porous_height},
                     {"fluid_height", c.geometry.fluid_height},
                     {"mesh_file", c.geometry.mesh_file},
                     {"left_tag", c.geometry.left_tag},
                     {"right_tag", c.geometry.right_tag},
                     {"bottom_tag", c.geometry.bottom_tag},
                     {"top_tag", c.geometry.top_tag}};
    j["initial"] = {{"c1", c.initial.c1.text()},
                    {"c2", c.initial.c2.text()},
                    {"h", c.initial.h.text()},
                    {"k", c.initial.k.text()}};
    j["solver"] = {{"method", to_string(c.solver.linear.method)},
                   {"rel_tolerance", c.solver.linear.rel_tolerance},
                   {"max_iterations", c.solver.linear.max_iterations},
                   {"preconditioner", to_string(c.solver.linear.preconditioner)},
                   {"newton_tolerance", c.solver.newton_tolerance},
                   {"newton_max_iterations", c.solver.newton_max_iterations}};
    j["coupling"] = {{"gamma_N", c.coupling.gamma_N},
                     {"bjs_slip", c.coupling.bjs_slip},
                     {"pressure_stabilization", c.coupling.pressure_stabilization}};
    return j;
}

} // namespace

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

Config Config::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& err) {
        // translate the byte offset into a line number
        std::size_t line = 1;
        for (std::size_t i = 0; i < err.byte && i < text.size(); ++i)
            if (text[i] == '\n') ++line;
        throw InputError("config: parse error at line " + std::to_string(line) + ": " +
                         err.what());
    }
    return from_json(j);
}

std::string Config::to_json_text() const { return to_json(*this).dump(2) + "\n"; }

void Config::save(const std::string& path) const {
    std::ofstream out(path);
    require(out.good(), "config: cannot open '" + path + "' for writing");
    out << to_json_text();
}

std::uint64_t Config::content_hash() const {
    Config masked = *this;
    masked.run.output_dir.clear();
    const std::string text = masked.to_json_text();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace menisim
