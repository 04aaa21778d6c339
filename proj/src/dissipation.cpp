#include "qdiss/dissipation.hpp"

#include <algorithm>
#include <cmath>

#include "qdiss/errors.hpp"

namespace qdiss {

namespace {

void check_omega_grid(const std::vector<double>& omega) {
    if (omega.empty()) throw ConfigError("frequency grid is empty");
    for (std::size_t i = 0; i < omega.size(); ++i) {
        if (omega[i] <= 0.0)
            throw ConfigError("frequency grid entries must be positive");
        if (i > 0 && omega[i] <= omega[i - 1])
            throw ConfigError("frequency grid must be strictly increasing");
    }
}

}  // namespace

std::vector<double> dissipative_potential(const DecayProfile& prof, double b, double beta,
                                          const std::vector<double>& omega) {
    check_omega_grid(omega);
    std::vector<double> out(omega.size());
    for (std::size_t i = 0; i < omega.size(); ++i) {
        const double w = omega[i];
        const double n = bose_occupation(beta, w);
        const double rp = half_fourier(prof, b + w).real();
        const double rm = half_fourier(prof, b - w).real();
        out[i] = mode_kernel(rp, rm, n);
    }
    return out;
}

std::vector<double> dissipative_potential(const SpectrumTable& table, double b, double beta,
                                          const std::vector<double>& omega) {
    check_omega_grid(omega);
    std::vector<double> out(omega.size());
    for (std::size_t i = 0; i < omega.size(); ++i) {
        const double w = omega[i];
        const double n = bose_occupation(beta, w);
        out[i] = mode_kernel(table(b + w).real(), table(b - w).real(), n);
    }
    return out;
}

namespace {

// Reshape without reallocating when the capacity is already there.
void size_grid(DissipationGrid& grid, std::size_t channels, std::size_t nw, std::size_t nt) {
    grid.n_t = nt;
    grid.d.resize(channels);
    grid.e.resize(channels);
    grid.e_inf.resize(channels);
    for (auto& v : grid.d) v.assign(nw * nt, 0.0);
    for (auto& v : grid.e) v.assign(nw * nt, 0.0);
    for (auto& v : grid.e_inf) v.assign(nw, 0.0);
}

}  // namespace

DissipationGrid assemble_dimer_grid(const std::vector<double>& omega,
                                    const std::vector<double>& j_over_w,
                                    const std::vector<double>& i21,
                                    const std::vector<double>& i12, double v,
                                    const PopulationTrajectory& traj,
                                    const std::vector<double>& s_excess) {
    DissipationGrid grid;
    assemble_dimer_grid(omega, j_over_w, i21, i12, v, traj, s_excess, grid);
    return grid;
}

void assemble_dimer_grid(const std::vector<double>& omega,
                         const std::vector<double>& j_over_w,
                         const std::vector<double>& i21,
                         const std::vector<double>& i12, double v,
                         const PopulationTrajectory& traj,
                         const std::vector<double>& s_excess, DissipationGrid& grid) {
    check_omega_grid(omega);
    if (traj.n_states() != 2 || s_excess.size() != 2)
        throw ConfigError("dimer raster assembly expects a two state trajectory");
    if (j_over_w.size() != omega.size() || i21.size() != omega.size() ||
        i12.size() != omega.size())
        throw ConfigError("dimer raster inputs must share the frequency grid");

    grid.omega = omega;
    grid.t_step = traj.dt;
    size_grid(grid, 2, omega.size(), traj.n_samples());

    const auto& p1 = traj.p[0];
    const auto& p2 = traj.p[1];
    for (std::size_t iw = 0; iw < omega.size(); ++iw) {
        const double pref = 2.0 * v * v * j_over_w[iw];
        const double jj21 = pref * i21[iw];
        const double jj12 = pref * i12[iw];
        double acc = 0.0;
        double prev = jj21 * p1[0] + jj12 * p2[0];
        grid.at_d(0, iw, 0) = prev;
        for (std::size_t it = 1; it < grid.n_t; ++it) {
            const double cur = jj21 * p1[it] + jj12 * p2[it];
            acc += 0.5 * grid.t_step * (prev + cur);
            grid.at_d(0, iw, it) = cur;
            grid.at_e(0, iw, it) = acc;
            prev = cur;
        }
        grid.e_inf[0][iw] = jj21 * s_excess[0] + jj12 * s_excess[1];
    }
    grid.d[1] = grid.d[0];
    grid.e[1] = grid.e[0];
    grid.e_inf[1] = grid.e_inf[0];
}

FrequencyBins::FrequencyBins(const std::vector<double>& grid) {
    check_omega_grid(grid);
    if (grid.size() < 2)
        throw ConfigError("frequency binning needs a grid with at least two points");
    center = grid;
    edge.resize(grid.size() + 1);
    edge.front() = std::max(0.0, grid.front() - 0.5 * (grid[1] - grid[0]));
    for (std::size_t i = 1; i < grid.size(); ++i) edge[i] = 0.5 * (grid[i - 1] + grid[i]);
    edge.back() = grid.back() + 0.5 * (grid.back() - grid[grid.size() - 2]);
}

std::size_t FrequencyBins::locate(double w) const {
    if (w < edge.front() || w >= edge.back()) return npos;
    const auto it = std::upper_bound(edge.begin(), edge.end(), w);
    return static_cast<std::size_t>(it - edge.begin()) - 1;
}

BinnedModeRates bin_mode_rates(const FrequencyBins& bins, const DiscretizedBath& bath,
                               double l_scale, double v, double b21, double b12,
                               double beta, const SpectrumTable& table) {
    BinnedModeRates out;
    out.k21.assign(bins.center.size(), 0.0);
    out.k12.assign(bins.center.size(), 0.0);
    const double pref = 2.0 * v * v * l_scale;
    for (std::size_t j = 0; j < bath.size(); ++j) {
        const double w = bath.omega[j];
        const double lam = pref * bath.lambda[j];
        const double n = bose_occupation(beta, w);
        const double k21 = lam * mode_kernel(table(b21 + w).real(), table(b21 - w).real(), n);
        const double k12 = lam * mode_kernel(table(b12 + w).real(), table(b12 - w).real(), n);
        out.total_k21 += k21;
        out.total_k12 += k12;
        const std::size_t bin = bins.locate(w);
        if (bin != FrequencyBins::npos) {
            out.k21[bin] += k21;
            out.k12[bin] += k12;
        }
    }
    return out;
}

DissipationGrid assemble_mode_grid(const FrequencyBins& bins, const BinnedModeRates& rates,
                                   const PopulationTrajectory& traj,
                                   const std::vector<double>& s_excess) {
    DissipationGrid grid;
    assemble_mode_grid(bins, rates, traj, s_excess, grid);
    return grid;
}

void assemble_mode_grid(const FrequencyBins& bins, const BinnedModeRates& rates,
                        const PopulationTrajectory& traj,
                        const std::vector<double>& s_excess, DissipationGrid& grid) {
    if (traj.n_states() != 2 || s_excess.size() != 2)
        throw ConfigError("mode raster assembly expects a two state trajectory");
    if (rates.k21.size() != bins.center.size() || rates.k12.size() != bins.center.size())
        throw ConfigError("mode raster inputs must share the binning");

    grid.omega = bins.center;
    grid.t_step = traj.dt;
    size_grid(grid, 1, grid.omega.size(), traj.n_samples());

    const auto& p1 = traj.p[0];
    const auto& p2 = traj.p[1];
    // Running trapezoid integrals of the populations, shared by all bins.
    std::vector<double> ip1(grid.n_t, 0.0), ip2(grid.n_t, 0.0);
    for (std::size_t it = 1; it < grid.n_t; ++it) {
        ip1[it] = ip1[it - 1] + 0.5 * grid.t_step * (p1[it - 1] + p1[it]);
        ip2[it] = ip2[it - 1] + 0.5 * grid.t_step * (p2[it - 1] + p2[it]);
    }
    for (std::size_t iw = 0; iw < grid.omega.size(); ++iw) {
        const double inv_w = 1.0 / bins.width(iw);
        const double k21 = rates.k21[iw] * inv_w;
        const double k12 = rates.k12[iw] * inv_w;
        for (std::size_t it = 0; it < grid.n_t; ++it) {
            grid.at_d(0, iw, it) = k21 * p1[it] + k12 * p2[it];
            grid.at_e(0, iw, it) = k21 * ip1[it] + k12 * ip2[it];
        }
        grid.e_inf[0][iw] = k21 * s_excess[0] + k12 * s_excess[1];
    }
}

}  // namespace qdiss
