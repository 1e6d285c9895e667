#include "menisim/verification.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "menisim/common.hpp"

namespace menisim::verification {

OdeState ode_rhs(const OdeParams& p, const OdeState& y) {
    OdeState f;
    f.c1 = -p.alpha1 * y.c1 + p.alpha2 * y.c2 + p.beta * y.c1 * (1.0 - y.c1 - y.c2 - y.k);
    f.c2 = p.alpha1 * y.c1 - p.alpha2 * y.c2;
    f.h = -p.gamma1 * y.h * y.c2 + y.c2 / (1.0 + y.c2);
    f.k = -p.delta1 * y.k * y.c1 + y.c2;
    return f;
}

namespace {

using Vec4 = Eigen::Vector4d;

Vec4 to_vec(const OdeState& y) { return Vec4(y.c1, y.c2, y.h, y.k); }
OdeState to_state(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }

Vec4 rhs_vec(const OdeParams& p, const Vec4& v) { return to_vec(ode_rhs(p, to_state(v))); }

Eigen::Matrix4d rhs_jacobian(const OdeParams& p, const Vec4& y) {
    Eigen::Matrix4d J;
    const double c1 = y[0], c2 = y[1], h = y[2], k = y[3];
    J << -p.alpha1 + p.beta * (1.0 - 2.0 * c1 - c2 - k), p.alpha2 - p.beta * c1, 0.0,
        -p.beta * c1,
        p.alpha1, -p.alpha2, 0.0, 0.0,
        0.0, -p.gamma1 * h + 1.0 / ((1.0 + c2) * (1.0 + c2)), -p.gamma1 * c2, 0.0,
        -p.delta1 * k, 1.0, 0.0, -p.delta1 * c1;
    return J;
}

// Dormand-Prince 5(4) pair.
struct Dopri {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    // clang-format off
    static constexpr double a21 = 1.0/5;
    static constexpr double a31 = 3.0/40,       a32 = 9.0/40;
    static constexpr double a41 = 44.0/45,      a42 = -56.0/15,      a43 = 32.0/9;
    static constexpr double a51 = 19372.0/6561, a52 = -25360.0/2187, a53 = 64448.0/6561, a54 = -212.0/729;
    static constexpr double a61 = 9017.0/3168,  a62 = -355.0/33,     a63 = 46732.0/5247, a64 = 49.0/176,  a65 = -5103.0/18656;
    static constexpr double b1 = 35.0/384,   b3 = 500.0/1113, b4 = 125.0/192, b5 = -2187.0/6784, b6 = 11.0/84;
    static constexpr double e1 = 5179.0/57600, e3 = 7571.0/16695, e4 = 393.0/640, e5 = -92097.0/339200, e6 = 187.0/2100, e7 = 1.0/40;
    // clang-format on
};

// One adaptive integration with optional dense output at multiples of dt_out.
std::vector<std::pair<double, OdeState>> integrate(const OdeParams& p, const OdeState& y0,
                                                   double T, double tol, double dt_out) {
    std::vector<std::pair<double, OdeState>> samples;
    samples.push_back({0.0, y0});
    if (T <= 0.0) return samples;

    Vec4 y = to_vec(y0);
    double t = 0.0;
    double dt = std::min(T, 1e-2);
    double next_out = dt_out > 0.0 ? dt_out : T + 1.0;
    Vec4 k1 = rhs_vec(p, y);

    int rejected_in_a_row = 0;
    while (t < T) {
        if (dt < 1e-14 * std::max(1.0, T))
            throw SolverError("ode_oracle: step size underflow at t = " + std::to_string(t));
        dt = std::min(dt, T - t);
        // stop exactly on output points so samples are not interpolated
        dt = std::min(dt, next_out - t <= 0 ? dt : next_out - t);

        const Vec4 k2 = rhs_vec(p, y + dt * (Dopri::a21 * k1));
        const Vec4 k3 = rhs_vec(p, y + dt * (Dopri::a31 * k1 + Dopri::a32 * k2));
        const Vec4 k4 = rhs_vec(p, y + dt * (Dopri::a41 * k1 + Dopri::a42 * k2 + Dopri::a43 * k3));
        const Vec4 k5 = rhs_vec(
            p, y + dt * (Dopri::a51 * k1 + Dopri::a52 * k2 + Dopri::a53 * k3 + Dopri::a54 * k4));
        const Vec4 k6 =
            rhs_vec(p, y + dt * (Dopri::a61 * k1 + Dopri::a62 * k2 + Dopri::a63 * k3 +
                                 Dopri::a64 * k4 + Dopri::a65 * k5));
        const Vec4 y5 = y + dt * (Dopri::b1 * k1 + Dopri::b3 * k3 + Dopri::b4 * k4 +
                                  Dopri::b5 * k5 + Dopri::b6 * k6);
        const Vec4 k7 = rhs_vec(p, y5);
        const Vec4 y4 = y + dt * (Dopri::e1 * k1 + Dopri::e3 * k3 + Dopri::e4 * k4 +
                                  Dopri::e5 * k5 + Dopri::e6 * k6 + Dopri::e7 * k7);

        double err = 0.0;
        for (int i = 0; i < 4; ++i) {
            const double scale = tol * (1.0 + std::max(std::abs(y[i]), std::abs(y5[i])));
            err = std::max(err, std::abs(y5[i] - y4[i]) / scale);
        }
        if (err <= 1.0) {
            t += dt;
            y = y5;
            k1 = k7;  // FSAL
            rejected_in_a_row = 0;
            if (dt_out > 0.0 && t >= next_out - 1e-14 * std::max(1.0, T)) {
                samples.push_back({t, to_state(y)});
                next_out += dt_out;
            }
        } else if (++rejected_in_a_row > 60) {
            throw SolverError("ode_oracle: repeated step rejection at t = " + std::to_string(t));
        }
        const double factor = 0.9 * std::pow(1.0 / std::max(err, 1e-10), 0.2);
        dt *= std::min(5.0, std::max(0.2, factor));
    }
    if (dt_out <= 0.0 || samples.back().first < T - 1e-12) samples.push_back({T, to_state(y)});
    return samples;
}

} // namespace

OdeState ode_oracle(const OdeParams& p, const OdeState& y0, double T, double tol) {
    return integrate(p, y0, T, tol, 0.0).back().second;
}

std::vector<std::pair<double, OdeState>> ode_oracle_trajectory(const OdeParams& p,
                                                               const OdeState& y0, double T,
                                                               double dt_out, double tol) {
    require(dt_out > 0.0, "ode_oracle_trajectory: dt_out must be positive");
    return integrate(p, y0, T, tol, dt_out);
}

std::vector<OdeState> implicit_euler_oracle(const OdeParams& p, const OdeState& y0, double dt,
                                            int n_steps) {
    require(dt > 0.0 && n_steps >= 1, "implicit_euler_oracle: dt > 0 and n_steps >= 1 required");
    std::vector<OdeState> out;
    out.reserve(n_steps + 1);
    out.push_back(y0);
    Vec4 y = to_vec(y0);
    for (int n = 0; n < n_steps; ++n) {
        Vec4 z = y;  // initial guess: previous state
        for (int it = 0; it < 60; ++it) {
            const Vec4 r = z - y - dt * rhs_vec(p, z);
            if (r.norm() <= 1e-14 * std::max(1.0, z.norm())) break;
            const Eigen::Matrix4d J =
                Eigen::Matrix4d::Identity() - dt * rhs_jacobian(p, z);
            z -= J.fullPivLu().solve(r);
        }
        y = z;
        out.push_back(to_state(y));
    }
    return out;
}

double logistic_solution(double c10, double beta, double t) {
    if (c10 == 0.0) return 0.0;
    return c10 / (c10 + (1.0 - c10) * std::exp(-beta * t));
}

double TerzaghiSetup::undrained_pressure() const {
    // zero-lateral-strain step load: p_i = alpha M p0 / (K_v + alpha^2 M)
    if (inv_M <= 0.0) return p0 / alpha;  // incompressible storage limit
    const double M = 1.0 / inv_M;
    return alpha * M * p0 / (confined_modulus() + alpha * alpha * M);
}

double TerzaghiSetup::consolidation_coefficient() const {
    return mobility / (inv_M + alpha * alpha / confined_modulus());
}

double terzaghi_pressure(const TerzaghiSetup& s, double z_from_drained, double t, int terms) {
    const double Tv = s.time_factor(t);
    const double pi0 = s.undrained_pressure();
    double sum = 0.0;
    for (int kk = 0; kk < terms; ++kk) {
        const double m = 0.5 * M_PI * (2 * kk + 1);
        sum += (2.0 / m) * std::sin(m * z_from_drained / s.L) * std::exp(-m * m * Tv);
    }
    return pi0 * sum;
}

double terzaghi_consolidation_degree(double Tv, int terms) {
    double sum = 0.0;
    for (int kk = 0; kk < terms; ++kk) {
        const double m = 0.5 * M_PI * (2 * kk + 1);
        sum += (2.0 / (m * m)) * std::exp(-m * m * Tv);
    }
    return 1.0 - sum;
}

void ConvergenceReport::finalize() {
    require(h.size() >= 3, "ConvergenceReport: orders need at least 3 levels");
    for (const auto& [field, errs] : errors) {
        require(errs.size() == h.size(), "ConvergenceReport: error/level count mismatch");
        std::vector<double> ord;
        for (std::size_t l = 0; l + 1 < errs.size(); ++l)
            ord.push_back(std::log2(errs[l] / errs[l + 1]));
        orders[field] = ord;
    }
}

double ConvergenceReport::min_order(const std::string& field) const {
    const auto it = orders.find(field);
    require(it != orders.end() && !it->second.empty(), "no orders for field " + field);
    double m = it->second.front();
    for (double o : it->second) m = std::min(m, o);
    return m;
}

std::string ConvergenceReport::to_text() const {
    std::ostringstream os;
    os << "level   h";
    for (const auto& [field, errs] : errors) os << "   err(" << field << ")   order";
    os << "\n";
    for (std::size_t l = 0; l < h.size(); ++l) {
        os << l << "  " << h[l];
        for (const auto& [field, errs] : errors) {
            os << "  " << errs[l] << "  ";
            const auto it = orders.find(field);
            if (l > 0 && it != orders.end())
                os << it->second[l - 1];
            else
                os << "-";
        }
        os << "\n";
    }
    for (const auto& [name, value] : scalars) os << name << " = " << value << "\n";
    os << (pass ? "PASS" : "FAIL") << "\n";
    return os.str();
}

} // namespace menisim::verification
