#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "serocontact/common.hpp"
#include "serocontact/csv.hpp"
#include "serocontact/stats.hpp"

namespace sero {

struct ModelFitSummary {
    std::string name;
    std::size_t n_params = 0;
    double loglik = 0.0;
    double r0 = std::numeric_limits<double>::quiet_NaN();

    double aic() const { return -2.0 * loglik + 2.0 * static_cast<double>(n_params); }
    double bic(std::size_t n_obs) const {
        return -2.0 * loglik + static_cast<double>(n_params) * std::log(static_cast<double>(n_obs));
    }
};

struct SelectionRow {
    ModelFitSummary model;
    double aic = 0.0;
    double delta = 0.0;
    double weight = 0.0;
    double evidence_ratio = 0.0;
};

struct SelectionTable {
    std::vector<SelectionRow> rows;
    std::size_t best = 0;
};

inline SelectionTable akaike_table(const std::vector<ModelFitSummary>& summaries) {
    if (summaries.empty()) throw DomainError("model selection: no candidate models");
    SelectionTable table;
    table.rows.reserve(summaries.size());
    double min_aic = std::numeric_limits<double>::infinity();
    for (const auto& s : summaries) {
        double aic = s.aic();
        if (!std::isfinite(aic))
            throw DomainError("model selection: non-finite AIC for model '" + s.name + "'");
        table.rows.push_back({s, aic, 0.0, 0.0, 0.0});
        if (aic < min_aic) {
            min_aic = aic;
            table.best = table.rows.size() - 1;
        }
    }
    double total = 0.0;
    for (auto& r : table.rows) {
        r.delta = r.aic - min_aic;
        r.weight = std::exp(-0.5 * r.delta);
        total += r.weight;
    }
    for (auto& r : table.rows) r.weight /= total;
    double w_best = table.rows[table.best].weight;
    for (auto& r : table.rows) r.evidence_ratio = w_best / r.weight;
    return table;
}

inline double model_average_r0(const std::vector<ModelFitSummary>& summaries) {
    SelectionTable table = akaike_table(summaries);
    double avg = 0.0;
    for (const auto& r : table.rows) {
        if (!std::isfinite(r.model.r0))
            throw DomainError("model selection: model '" + r.model.name + "' carries no R0");
        avg += r.weight * r.model.r0;
    }
    return avg;
}

inline void write_selection_table(const std::string& path, const SelectionTable& table,
                                  std::size_t n_obs) {
    csv::Writer out(path, {"model", "n_params", "loglik", "aic", "bic", "delta", "weight",
                           "evidence_ratio", "r0"});
    for (const auto& r : table.rows)
        out.row({r.model.name, std::to_string(r.model.n_params), csv::format_double(r.model.loglik),
                 csv::format_double(r.aic), csv::format_double(r.model.bic(n_obs)),
                 csv::format_double(r.delta), csv::format_double(r.weight),
                 csv::format_double(r.evidence_ratio), csv::format_double(r.model.r0)});
}

/// One model's fit outcome on one bootstrap replicate.
struct ReplicateFit {
    double loglik = std::numeric_limits<double>::quiet_NaN();
    double r0 = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
};

struct BootstrapModelSet {
    std::string name;
    std::size_t n_params = 0;
    std::vector<ReplicateFit> replicates;
};

struct ModelAverageCI {
    std::vector<double> averaged; // one model-averaged R0 per usable replicate
    std::size_t replicates_used = 0;
    double lower = 0.0;
    double upper = 0.0;
};

/// Reweights the candidate set on every replicate: each replicate's AIC
/// weights come from that replicate's logliks, so model uncertainty flows
/// into the interval. Replicates where any candidate failed are dropped.
inline ModelAverageCI bootstrap_model_average(const std::vector<BootstrapModelSet>& models,
                                              double level = 0.95) {
    if (models.empty()) throw DomainError("model averaging: no candidate models");
    const std::size_t b = models.front().replicates.size();
    for (const auto& m : models)
        if (m.replicates.size() != b)
            throw DomainError("model averaging: replicate count mismatch for model '" + m.name +
                              "' (" + std::to_string(m.replicates.size()) + " vs " +
                              std::to_string(b) + ")");

    ModelAverageCI out;
    std::vector<ModelFitSummary> snapshot(models.size());
    for (std::size_t r = 0; r < b; ++r) {
        bool usable = true;
        for (std::size_t m = 0; m < models.size(); ++m) {
            const ReplicateFit& f = models[m].replicates[r];
            if (!f.converged || !std::isfinite(f.loglik) || !std::isfinite(f.r0)) {
                usable = false;
                break;
            }
            snapshot[m] = {models[m].name, models[m].n_params, f.loglik, f.r0};
        }
        if (!usable) continue;
        out.averaged.push_back(model_average_r0(snapshot));
    }
    out.replicates_used = out.averaged.size();
    if (out.replicates_used == 0)
        throw DomainError("model averaging: no replicate converged for every model");
    PercentileInterval ci = percentile_ci(out.averaged, level);
    out.lower = ci.lower;
    out.upper = ci.upper;
    return out;
}

} // namespace sero
