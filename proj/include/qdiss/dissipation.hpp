#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "qdiss/mqme.hpp"
#include "qdiss/spectrum.hpp"

namespace qdiss {

// Frequency resolved dissipation. The central object for a transfer pair
// (B <- A) with energy offset b and decay profile exp(-G) is the dissipative
// potential
//
//   I_BA(w) = Re int_0^T exp(-i b t - G(t)) [cos wt - i coth(beta w / 2) sin wt] dt
//           = (1 + n(w)) Re A(b + w) - n(w) Re A(b - w),
//
// the net weight for emitting a quantum at frequency w during the transfer.
// The second form is how it is evaluated: stimulated and spontaneous parts
// meet the thermal occupation in a way that cancels identically at detailed
// balance, and that cancellation survives the discrete quadrature because
// both terms come from the same profile.

// I_BA on a frequency grid, direct quadrature.
std::vector<double> dissipative_potential(const DecayProfile& prof, double b, double beta,
                                          const std::vector<double>& omega);

// Same quantity from a cached spectrum table (argument range must cover
// b +- max(omega)).
std::vector<double> dissipative_potential(const SpectrumTable& table, double b, double beta,
                                          const std::vector<double>& omega);

// Single-mode rate kernel: the per-mode rate constant of pair (B <- A)
// through a mode at frequency w with effective coupling weight l_eff
// (l_eff = lambda_AA - 2 lambda_AB + lambda_BB restricted to that mode) is
//
//   k_mode = 2 |V|^2 l_eff [ (1 + n(w)) Re A(b + w) - n(w) Re A(b - w) ].
inline double mode_kernel(double re_plus, double re_minus, double occupation) {
    return (1.0 + occupation) * re_plus - occupation * re_minus;
}

// Time lattice data for one run: per channel rasters of the dissipation
// density D(w, t) and its running integral E(w, t), both resolved on the
// output lattice.
struct DissipationGrid {
    std::vector<double> omega;
    double t_step = 0.0;
    std::size_t n_t = 0;
    // raster[channel][iw * n_t + it]
    std::vector<std::vector<double>> d;
    std::vector<std::vector<double>> e;
    // steady values per channel and frequency
    std::vector<std::vector<double>> e_inf;

    double& at_d(std::size_t ch, std::size_t iw, std::size_t it) { return d[ch][iw * n_t + it]; }
    double& at_e(std::size_t ch, std::size_t iw, std::size_t it) { return e[ch][iw * n_t + it]; }
    double d_at(std::size_t ch, std::size_t iw, std::size_t it) const { return d[ch][iw * n_t + it]; }
    double e_at(std::size_t ch, std::size_t iw, std::size_t it) const { return e[ch][iw * n_t + it]; }
};

// Assembles the two-channel raster of a dimer with identical local baths.
// Both channels carry the same density
//
//   D(w, t) = 2 V^2 (J(w)/w) [ I_21(w) p_1(t) + I_12(w) p_2(t) ];
//
// the transfer reorganizes both sites equally, so the released energy splits
// evenly and the two channel rasters are identical by construction.
// s_excess[A] = int_0^inf (p_A(t) - p_A(inf)) dt feeds the steady values.
DissipationGrid assemble_dimer_grid(const std::vector<double>& omega,
                                    const std::vector<double>& j_over_w,
                                    const std::vector<double>& i21,
                                    const std::vector<double>& i12, double v,
                                    const PopulationTrajectory& traj,
                                    const std::vector<double>& s_excess);

// In-place variant for tight loops; reuses whatever capacity `grid` holds.
void assemble_dimer_grid(const std::vector<double>& omega,
                         const std::vector<double>& j_over_w,
                         const std::vector<double>& i21,
                         const std::vector<double>& i12, double v,
                         const PopulationTrajectory& traj,
                         const std::vector<double>& s_excess, DissipationGrid& grid);

// Frequency binning for per-mode data. Bin i is centered on grid point i with
// edges halfway to its neighbours; the outermost bins extend symmetrically.
struct FrequencyBins {
    std::vector<double> center;
    std::vector<double> edge;  // size center.size() + 1

    explicit FrequencyBins(const std::vector<double>& grid);
    // index of the bin containing w, or npos when outside the covered range
    std::size_t locate(double w) const;
    double width(std::size_t i) const { return edge[i + 1] - edge[i]; }
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

// Per-bin aggregated mode rates of a two state system: k21[i] (k12[i]) is the
// summed per-mode rate kernel of all modes in bin i for the downhill (uphill)
// direction. total_* hold the sums over every mode, inside the grid or not;
// they carry the full energy bookkeeping for conservation checks.
struct BinnedModeRates {
    std::vector<double> k21, k12;
    double total_k21 = 0.0, total_k12 = 0.0;
};

// Aggregates per-mode rate kernels over bins. l_scale multiplies each mode's
// lambda_j into the effective coupling weight (4 for a shared bath coupled
// with opposite sign to the two states).
BinnedModeRates bin_mode_rates(const FrequencyBins& bins, const DiscretizedBath& bath,
                               double l_scale, double v, double b21, double b12,
                               double beta, const SpectrumTable& table);

// Raster for a two state system from binned mode rates. Densities divide by
// the bin width so the numbers remain comparable across grids.
void assemble_mode_grid(const FrequencyBins& bins, const BinnedModeRates& rates,
                        const PopulationTrajectory& traj,
                        const std::vector<double>& s_excess, DissipationGrid& grid);

DissipationGrid assemble_mode_grid(const FrequencyBins& bins, const BinnedModeRates& rates,
                                   const PopulationTrajectory& traj,
                                   const std::vector<double>& s_excess);

}  // namespace qdiss
