#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "serocontact/age_grid.hpp"
#include "serocontact/bspline.hpp"
#include "serocontact/common.hpp"
#include "serocontact/contact_matrix.hpp"
#include "serocontact/contact_surface.hpp"
#include "serocontact/contact_survey.hpp"
#include "serocontact/demography.hpp"

namespace sero {

/// Knobs for the contact-rate estimation pipeline: the spline basis spans
/// [basis_lo, basis_hi] with basis_size functions per margin, everything else
/// passes straight to the surface fit.
struct SmoothingSettings {
    std::size_t basis_size = 11;
    double basis_lo = 0.0;
    double basis_hi = 101.0;
    SurfaceOptions surface;
};

/// Everything the contact pipeline produces, from the raw fitted surface down
/// to per-capita rates on the analysis classes.
struct ContactPipelineResult {
    SmoothSurface surface;
    SocialContactMatrix smoothed;     ///< fitted means on the fine grid
    SocialContactMatrix symmetrized;  ///< after the reciprocity projection
    SocialContactMatrix aggregated;   ///< symmetrized matrix on the analysis classes
    std::vector<double> analysis_population;
    ContactRates rates;
};

/// Fit the contact surface on the fine grid, enforce reciprocity there, then
/// coarsen to the analysis classes and convert to per-capita rates.
inline ContactPipelineResult smooth_contact_rates(const ContactSurvey& survey,
                                                  const Demography& demo,
                                                  const AgeGrid& smoothing_grid,
                                                  const AgeGrid& analysis_grid,
                                                  const SmoothingSettings& settings = {}) {
    BsplineBasis basis(settings.basis_size, settings.basis_lo, settings.basis_hi);
    for (std::size_t i = 0; i < smoothing_grid.classes(); ++i)
        if (!basis.covers(smoothing_grid.midpoint(i)))
            throw DomainError("smoothing basis does not cover the fine grid midpoints");

    CountTable table = build_count_table(survey, smoothing_grid);
    SmoothSurface surface = fit_negbin_tensor_gam(table, basis, settings.surface);
    SocialContactMatrix smoothed = evaluate_surface(surface, smoothing_grid);

    std::vector<double> fine_pop = demo.band_population(smoothing_grid);
    SocialContactMatrix symmetrized = symmetrize_reciprocal(smoothed, fine_pop);
    SocialContactMatrix aggregated = aggregate_matrix(symmetrized, fine_pop, analysis_grid);
    std::vector<double> analysis_pop =
        aggregate_population(smoothing_grid, fine_pop, analysis_grid);
    ContactRates rates = contact_rates_from_matrix(aggregated, analysis_pop);

    return {std::move(surface),    std::move(smoothed),     std::move(symmetrized),
            std::move(aggregated), std::move(analysis_pop), std::move(rates)};
}

}  // namespace sero
