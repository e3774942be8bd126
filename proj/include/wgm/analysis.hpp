#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

#include "wgm/errors.hpp"
#include "wgm/modes.hpp"
#include "wgm/spectroscopy.hpp"

namespace wgm {

/// Half-open sample index range [begin, end) of a trace.
struct IndexRange {
    Eigen::Index begin = 0;
    Eigen::Index end = 0;
};

/// Result of a three-parameter Lorentzian dip fit.
struct DipFit {
    double center_thz = 0.0;
    double loaded_q = 0.0;
    double depth = 0.0;
    double residual_rms = 0.0;
    Eigen::Vector3d covariance_diag = Eigen::Vector3d::Zero();  // center, gamma, depth
};

/// Nonlinear fit failure; carries the last iterate and its residual.
class FitError : public NumericError {
public:
    FitError(const std::string& what, DipFit last)
        : NumericError(what), last_iterate_(last) {}
    const DipFit& last_iterate() const { return last_iterate_; }

private:
    DipFit last_iterate_;
};

enum class PolarizationGuess { TE, TM, Unknown };

struct SlopeFit {
    double slope_ghz_per_v = 0.0;
    double intercept_ghz = 0.0;   // center at V = 0
    double r_squared = 0.0;
    PolarizationGuess polarization_guess = PolarizationGuess::Unknown;
};

/// Mode labels for a set of observed dips plus the fitted geometry.
struct ModeAssignment {
    std::vector<ModeId> labels;    // one per input dip, input order
    double fitted_radius_um = 0.0;
    double fitted_ellipticity = 0.0;
    double objective_ghz2 = 0.0;   // sum of squared pairwise-interval residuals
    bool assigned = false;         // false: best candidate above threshold
};

struct AssignOptions {
    double radius_tolerance = 0.10;        // search +-10% around the prior
    double ellipticity_max = 0.6;
    int delta_m_max = 3;
    int q_max = 1;
    double objective_threshold_ghz2_per_pair = 25.0;  // (5 GHz)^2
    int radius_steps = 21;
    int ellipticity_steps = 13;
};

struct CalibrationResult {
    double strain_per_volt = 0.0;
    double slope_te_ghz_per_v = 0.0;
    double slope_tm_ghz_per_v = 0.0;
    double ratio = 0.0;
    std::vector<std::string> warnings;
};

struct CalibrateOptions {
    double prominence = 0.1;
    // max |observed - predicted| when extending a track; generous enough to
    // absorb the first sweep step, where no slope estimate exists yet
    double track_gate_ghz = 25.0;
};

/**
 * Candidate dip windows: disjoint index ranges around local minima whose
 * relative depth (baseline - min)/baseline exceeds `prominence`; the baseline
 * is the trace median, so the result is invariant under rescaling the
 * transmission by any positive constant.  Sorted by frequency; may be empty.
 */
std::vector<IndexRange> detect_dips(const TransmissionTrace& trace, double prominence);

/**
 * Three-parameter (center, width, depth) Lorentzian least-squares fit on a
 * window, baseline fixed at 1.  Initial guesses: center at the window
 * minimum, depth from 1 - minimum, width from the half-depth crossing.
 * Levenberg-Marquardt with analytic Jacobian; converged when the maximum
 * relative parameter step drops below 1e-8, at most 100 iterations.
 *
 * @throws DomainError window smaller than 7 samples or out of bounds
 * @throws FitError    no dip in the window, or no convergence
 */
DipFit fit_lorentzian(const TransmissionTrace& trace, const IndexRange& window);

/**
 * Ordinary least squares of dip center (THz) versus voltage; slope in GHz/V.
 * If te_reference_slope_ghz_per_v > 0, the polarization is guessed: TE if the
 * slope is within 25% of the reference, TM if within 25% of 1.75x the
 * reference, otherwise unknown.
 *
 * @throws DomainError fewer than 3 points or all voltages equal
 */
SlopeFit fit_tuning_slope(const std::vector<std::pair<double, double>>& voltage_center_thz,
                          double te_reference_slope_ghz_per_v = 0.0);

/**
 * Label observed dip centers with mode ids by matching pairwise intervals
 * against the model spectrum over a bounded search: radius within +-10% of
 * the prior, ellipticity in [0, 0.6], q = 1, |l - m| <= 3, both
 * polarizations.  Exhaustive over the bounded label set with deterministic
 * lexicographic tie-breaks; the best (radius, ellipticity) is polished by
 * Gauss-Newton on the fixed labeling.  The objective uses intervals only, so
 * the result is insensitive to an absolute laser-calibration offset.
 *
 * If no labeling beats the objective threshold, the best candidate is
 * returned with assigned = false.
 *
 * @throws DomainError fewer than 2 dips or span below 0.3 FSR of the prior
 */
ModeAssignment assign_modes(const std::vector<double>& dip_centers_thz,
                            const SpheroidGeometry& geometry_prior,
                            const OpticalMaterial& material,
                            const AssignOptions& options = {});

/**
 * Full inverse chain over a voltage sweep: detect + fit every trace, track
 * dips across voltages by nearest-neighbor to the predicted position
 * (previous center + current slope estimate), fit per-track slopes, classify
 * TE/TM by slope order (TM tunes faster), and invert the tuning model for
 * the strain per volt from the TE track.
 *
 * Track losses or a missing polarization are reported in `warnings` and the
 * remaining quantities are still returned (partial result).
 *
 * @throws DomainError fewer than 3 distinct voltages, or no trackable dip
 */
CalibrationResult calibrate_device(const std::vector<TransmissionTrace>& sweep,
                                   const SpheroidGeometry& geometry_prior,
                                   const OpticalMaterial& material,
                                   const CalibrateOptions& options = {});

}  // namespace wgm
