#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "serocontact/common.hpp"
#include "serocontact/contact_survey.hpp"
#include "serocontact/demography.hpp"
#include "serocontact/pipeline.hpp"
#include "serocontact/rng.hpp"
#include "serocontact/serology.hpp"
#include "serocontact/stats.hpp"
#include "serocontact/transmission.hpp"

namespace sero {

/// Replace interval-censored ages with uniform draws: participants recorded at
/// whole years move somewhere into [age, age+1), reported contact age ranges
/// collapse to a point inside the range. Participants are drawn before
/// contacts, in survey order.
inline ContactSurvey randomize_survey_ages(const ContactSurvey& survey, Rng& rng) {
    std::vector<Participant> parts = survey.participants();
    std::vector<ContactRecord> contacts = survey.contacts();
    for (auto& p : parts)
        if (p.age == std::floor(p.age)) p.age += rng.uniform01();
    for (auto& c : contacts) {
        double a = rng.uniform(c.age_low, c.age_high);
        c.age_low = a;
        c.age_high = a;
    }
    return ContactSurvey(std::move(parts), std::move(contacts));
}

/// Same treatment for serology records whose age is only known to the
/// completed year; exact ages pass through untouched.
inline SerologyDataset randomize_serology_ages(const SerologyDataset& data, Rng& rng) {
    std::vector<SerologySample> samples = data.samples();
    for (auto& s : samples) {
        if (s.age_known_exactly) continue;
        s.age += rng.uniform01();
        s.age_known_exactly = true;
    }
    return SerologyDataset(std::move(samples));
}

/// Draw participants with replacement, each keeping its reported contacts.
/// Picked participants get fresh ids so the same diary can appear twice.
inline ContactSurvey resample_participants(const ContactSurvey& survey, Rng& rng) {
    const auto& parts = survey.participants();
    if (parts.empty()) throw DomainError("resample: survey has no participants");

    std::unordered_map<std::string, std::vector<ContactRecord>> diary;
    for (const auto& c : survey.contacts()) diary[c.participant_id].push_back(c);

    std::vector<Participant> new_parts;
    std::vector<ContactRecord> new_contacts;
    new_parts.reserve(parts.size());
    new_contacts.reserve(survey.contacts().size());
    for (std::size_t i = 0; i < parts.size(); ++i) {
        Participant p = parts[rng.uniform_index(parts.size())];
        std::string fresh = "r" + std::to_string(i) + ":" + p.id;
        auto it = diary.find(p.id);
        p.id = fresh;
        new_parts.push_back(std::move(p));
        if (it == diary.end()) continue;
        for (ContactRecord c : it->second) {
            c.participant_id = fresh;
            new_contacts.push_back(std::move(c));
        }
    }
    return ContactSurvey(std::move(new_parts), std::move(new_contacts));
}

/// Draw serology records with replacement; ids are kept as-is.
inline SerologyDataset resample_serology(const SerologyDataset& data, Rng& rng) {
    if (data.size() == 0) throw DomainError("resample: serology is empty");
    std::vector<SerologySample> out;
    out.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out.push_back(data[rng.uniform_index(data.size())]);
    return SerologyDataset(std::move(out));
}

/// Bootstrap configuration. Smoothing settings are taken as given, so fixing
/// the penalty weights from a point fit keeps replicates on the same surface
/// family while the dispersion is still re-estimated each time. The two
/// randomization switches exist to run the machinery degenerately (every
/// replicate sees the original data) when exercising the plumbing.
struct BootstrapSpec {
    std::size_t replicates = 200;
    std::uint64_t master_seed = 1;
    double level = 0.95;
    std::size_t jobs = 1;
    ContactFilter filter = ContactFilter::C1;
    SmoothingSettings smoothing;
    std::vector<ProportionalityModel> models;
    bool jitter_ages = true;
    bool resample = true;

    void validate() const {
        if (replicates < 1) throw ConfigError("bootstrap: replicates must be >= 1");
        if (!(level > 0.0 && level < 1.0)) throw ConfigError("bootstrap: level must be in (0,1)");
        if (jobs < 1) throw ConfigError("bootstrap: jobs must be >= 1");
        if (models.empty()) throw ConfigError("bootstrap: no models to fit");
    }
};

struct ReplicateModelFit {
    std::string model;
    bool converged = false;
    bool non_identifiable = false;
    std::vector<double> params;
    double loglik = std::numeric_limits<double>::quiet_NaN();
    double r0 = std::numeric_limits<double>::quiet_NaN();
};

/// One replicate: `converged` covers the data preparation and surface fit;
/// individual model fits carry their own flags.
struct ReplicateResult {
    std::size_t index = 0;
    bool converged = false;
    std::string message;
    double surface_k = std::numeric_limits<double>::quiet_NaN();
    std::vector<ReplicateModelFit> models;
};

struct BootstrapResult {
    std::vector<ReplicateResult> replicates;
    std::size_t converged = 0;
    std::size_t failed = 0;
};

namespace detail {

inline ReplicateResult run_replicate(std::size_t index, const BootstrapSpec& spec,
                                     const ContactSurvey& survey,
                                     const SerologyDataset& serology, const Demography& demo,
                                     const AgeGrid& smoothing_grid,
                                     const AgeGrid& analysis_grid) {
    ReplicateResult out;
    out.index = index;
    Rng rng = Rng::for_replicate(spec.master_seed, static_cast<std::uint64_t>(index));
    try {
        ContactSurvey s = spec.jitter_ages ? randomize_survey_ages(survey, rng) : survey;
        SerologyDataset sero =
            spec.jitter_ages ? randomize_serology_ages(serology, rng) : serology;
        if (spec.resample) s = resample_participants(s, rng);
        s.compute_diary_weights(demo);
        ContactSurvey analysed = s.filtered(spec.filter);

        ContactPipelineResult pipe =
            smooth_contact_rates(analysed, demo, smoothing_grid, analysis_grid, spec.smoothing);
        out.surface_k = pipe.surface.k;

        if (spec.resample) sero = resample_serology(sero, rng);

        out.models.reserve(spec.models.size());
        for (const auto& model : spec.models) {
            ReplicateModelFit mf;
            mf.model = model.name();
            try {
                ProportionalityFit fit =
                    fit_proportionality(model, pipe.rates, sero, demo, analysis_grid);
                mf.converged = fit.converged;
                mf.non_identifiable = fit.non_identifiable;
                mf.params = fit.model.params();
                mf.loglik = fit.loglik;
                mf.r0 = fit.r0;
            } catch (const Error& e) {
                mf.converged = false;
            }
            out.models.push_back(std::move(mf));
        }
        out.converged = true;
    } catch (const Error& e) {
        out.converged = false;
        out.message = e.what();
    }
    return out;
}

}  // namespace detail

/// Nonparametric bootstrap of the whole estimation chain. Replicate r draws
/// its own generator stream from (master_seed, r), so results do not depend
/// on scheduling and a parallel run reproduces the serial one exactly.
inline BootstrapResult run_bootstrap(const BootstrapSpec& spec, const ContactSurvey& survey,
                                     const SerologyDataset& serology, const Demography& demo,
                                     const AgeGrid& smoothing_grid,
                                     const AgeGrid& analysis_grid) {
    spec.validate();
    if (survey.participants().empty()) throw DomainError("bootstrap: survey has no participants");
    if (serology.size() == 0) throw DomainError("bootstrap: serology is empty");

    std::vector<ReplicateResult> reps(spec.replicates);
    auto work = [&](std::size_t first, std::size_t stride) {
        for (std::size_t r = first; r < spec.replicates; r += stride)
            reps[r] = detail::run_replicate(r, spec, survey, serology, demo, smoothing_grid,
                                            analysis_grid);
    };

    std::size_t jobs = std::min(spec.jobs, spec.replicates);
    if (jobs <= 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(work, t, jobs);
        for (auto& th : pool) th.join();
    }

    BootstrapResult out;
    out.replicates = std::move(reps);
    std::string first_failure;
    for (const auto& r : out.replicates) {
        if (r.converged) {
            ++out.converged;
        } else {
            ++out.failed;
            if (first_failure.empty()) first_failure = r.message;
        }
    }
    if (out.converged == 0)
        throw ConvergenceError("bootstrap: no replicate completed", first_failure);
    return out;
}

/// Percentile summary for one model across the replicates where both the
/// replicate pipeline and that model's fit succeeded.
struct ModelBootstrapSummary {
    std::string model;
    std::size_t used = 0;
    PercentileInterval r0;
    std::vector<PercentileInterval> params;
};

inline ModelBootstrapSummary summarize_model(const BootstrapResult& result,
                                             const std::string& model, double level = 0.95) {
    std::vector<double> r0_draws;
    std::vector<std::vector<double>> param_draws;
    for (const auto& rep : result.replicates) {
        if (!rep.converged) continue;
        for (const auto& mf : rep.models) {
            if (mf.model != model) continue;
            if (!mf.converged || !std::isfinite(mf.r0)) break;
            r0_draws.push_back(mf.r0);
            if (param_draws.empty()) param_draws.resize(mf.params.size());
            if (param_draws.size() != mf.params.size())
                throw DomainError("bootstrap summary: parameter count changed between replicates");
            for (std::size_t p = 0; p < mf.params.size(); ++p)
                param_draws[p].push_back(mf.params[p]);
            break;
        }
    }
    if (r0_draws.size() < 2)
        throw DomainError("bootstrap summary: fewer than two usable replicates for model '" +
                          model + "'");

    ModelBootstrapSummary out;
    out.model = model;
    out.used = r0_draws.size();
    out.r0 = percentile_ci(r0_draws, level);
    out.params.reserve(param_draws.size());
    for (const auto& draws : param_draws) out.params.push_back(percentile_ci(draws, level));
    return out;
}

}  // namespace sero
