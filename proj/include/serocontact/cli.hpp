#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "serocontact/serocontact.hpp"

namespace sero {

/// Everything a command run needs, resolved from the config file with
/// command line overrides applied on top.
struct RunConfig {
    std::string serology_path;
    std::string participants_path;
    std::string contacts_path;
    std::string census_path;

    double life_expectancy = 80.0;
    double maternal_antibody_age = 0.5;
    double infectious_duration = 7.0 / 365.0;

    std::vector<double> analysis_breaks{0.5, 2.0, 6.0, 12.0, 19.0, 31.0, 80.0};
    double smoothing_upper = 101.0;

    ContactFilter filter = ContactFilter::C1;
    std::size_t basis_size = 11;
    SurfaceOptions surface;

    std::vector<std::string> models{"constant"};

    std::size_t replicates = 200;
    std::uint64_t seed = 1;
    double level = 0.95;
    std::size_t jobs = 1;

    std::string out_dir = ".";

    std::string sim_mode = "constant";
    double sim_prevalence = 0.983;
    std::vector<double> sim_lambdas;
    std::size_t sim_n = 1000;
    double sim_age_low = 40.0;
    double sim_age_high = 80.0;
    std::string sim_base;

    static RunConfig from_config(const Config& cfg);
};

inline bool is_mixing_pattern_name(const std::string& name) {
    return name.size() == 2 && name[0] == 'W' && name[1] >= '1' && name[1] <= '6';
}

inline RunConfig RunConfig::from_config(const Config& cfg) {
    RunConfig rc;
    rc.serology_path = cfg.get_string("data", "serology", "");
    rc.participants_path = cfg.get_string("data", "participants", "");
    rc.contacts_path = cfg.get_string("data", "contacts", "");
    rc.census_path = cfg.get_string("data", "census", "");

    rc.life_expectancy = cfg.get_double("demography", "life_expectancy", rc.life_expectancy);
    rc.maternal_antibody_age =
        cfg.get_double("demography", "maternal_antibody_age", rc.maternal_antibody_age);
    rc.infectious_duration =
        cfg.get_double("demography", "infectious_duration_days", 7.0) / 365.0;

    if (cfg.has("grid", "analysis_breaks"))
        rc.analysis_breaks = cfg.get_double_list("grid", "analysis_breaks");
    AgeGrid probe(rc.analysis_breaks);
    rc.smoothing_upper = cfg.get_double("grid", "smoothing_upper", rc.smoothing_upper);
    if (!(rc.smoothing_upper > 1.0))
        throw ConfigError("config: [grid] smoothing_upper must exceed 1");

    rc.filter = contact_filter_from_string(cfg.get_string("contacts", "filter", "C1"));
    long k = cfg.get_long("contacts", "basis_size", static_cast<long>(rc.basis_size));
    if (k < 4) throw ConfigError("config: [contacts] basis_size must be at least 4");
    rc.basis_size = static_cast<std::size_t>(k);
    if (cfg.has("contacts", "lambda_grid"))
        rc.surface.lambda_grid = cfg.get_double_list("contacts", "lambda_grid");
    rc.surface.fixed_lambda_a =
        cfg.get_double("contacts", "fixed_lambda_a", rc.surface.fixed_lambda_a);
    rc.surface.fixed_lambda_b =
        cfg.get_double("contacts", "fixed_lambda_b", rc.surface.fixed_lambda_b);
    rc.surface.fixed_k = cfg.get_double("contacts", "fixed_k", rc.surface.fixed_k);

    if (cfg.has("models", "list")) rc.models = cfg.get_string_list("models", "list");
    for (const auto& name : rc.models) {
        if (is_mixing_pattern_name(name))
            MixingPattern::standard(name);
        else
            ProportionalityModel::named(name);
    }

    long reps = cfg.get_long("bootstrap", "replicates", static_cast<long>(rc.replicates));
    if (reps < 0) throw ConfigError("config: [bootstrap] replicates must be nonnegative");
    rc.replicates = static_cast<std::size_t>(reps);
    long seed = cfg.get_long("bootstrap", "seed", static_cast<long>(rc.seed));
    if (seed < 0) throw ConfigError("config: [bootstrap] seed must be nonnegative");
    rc.seed = static_cast<std::uint64_t>(seed);
    rc.level = cfg.get_double("bootstrap", "level", rc.level);
    long jobs = cfg.get_long("bootstrap", "jobs", static_cast<long>(rc.jobs));
    if (jobs < 1) throw ConfigError("config: [bootstrap] jobs must be at least 1");
    rc.jobs = static_cast<std::size_t>(jobs);

    rc.out_dir = cfg.get_string("output", "dir", rc.out_dir);

    rc.sim_mode = cfg.get_string("simulate", "mode", rc.sim_mode);
    rc.sim_prevalence = cfg.get_double("simulate", "prevalence", rc.sim_prevalence);
    if (cfg.has("simulate", "lambdas"))
        rc.sim_lambdas = cfg.get_double_list("simulate", "lambdas");
    long n = cfg.get_long("simulate", "n", static_cast<long>(rc.sim_n));
    if (n < 1) throw ConfigError("config: [simulate] n must be positive");
    rc.sim_n = static_cast<std::size_t>(n);
    rc.sim_age_low = cfg.get_double("simulate", "age_low", rc.sim_age_low);
    rc.sim_age_high = cfg.get_double("simulate", "age_high", rc.sim_age_high);
    rc.sim_base = cfg.get_string("simulate", "base", "");
    return rc;
}

namespace cli_detail {

inline void require_file(const std::string& path, const std::string& what) {
    if (path.empty()) throw ConfigError("config: missing " + what + " path");
    if (!std::filesystem::exists(path))
        throw ConfigError(what + " file '" + path + "' does not exist");
}

inline std::filesystem::path prepare_out_dir(const RunConfig& rc) {
    std::filesystem::path dir(rc.out_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline Demography load_demography(const RunConfig& rc) {
    require_file(rc.census_path, "census");
    return Demography::from_census(CensusTable::load(rc.census_path), rc.life_expectancy,
                                   rc.infectious_duration, rc.maternal_antibody_age);
}

inline SerologyDataset load_serology(const RunConfig& rc) {
    require_file(rc.serology_path, "serology");
    return SerologyDataset::load(rc.serology_path, rc.maternal_antibody_age,
                                 rc.life_expectancy);
}

inline ContactSurvey load_survey(const RunConfig& rc) {
    require_file(rc.participants_path, "participants");
    require_file(rc.contacts_path, "contacts");
    return ContactSurvey::load(rc.participants_path, rc.contacts_path);
}

inline SmoothingSettings smoothing_settings(const RunConfig& rc) {
    SmoothingSettings st;
    st.basis_size = rc.basis_size;
    st.basis_lo = 0.0;
    st.basis_hi = rc.smoothing_upper;
    st.surface = rc.surface;
    return st;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open file for writing: " + path.string());
    out << j.dump(2) << '\n';
}

inline void write_matrix_csv(const std::filesystem::path& path, const AgeGrid& grid,
                             const Eigen::MatrixXd& m) {
    std::vector<std::string> header{"age"};
    for (std::size_t j = 0; j < grid.classes(); ++j)
        header.push_back(csv::format_double(grid.breakpoints()[j]));
    csv::Writer w(path, header);
    for (std::size_t i = 0; i < grid.classes(); ++i) {
        std::vector<std::string> row{csv::format_double(grid.breakpoints()[i])};
        for (std::size_t j = 0; j < grid.classes(); ++j)
            row.push_back(csv::format_double(m(static_cast<Eigen::Index>(i),
                                               static_cast<Eigen::Index>(j))));
        w.row(row);
    }
}

}  // namespace cli_detail

inline nlohmann::json surface_to_json(const SmoothSurface& s) {
    nlohmann::json delta = nlohmann::json::array();
    for (Eigen::Index r = 0; r < s.delta.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < s.delta.cols(); ++c) row.push_back(s.delta(r, c));
        delta.push_back(std::move(row));
    }
    return {{"basis",
             {{"size", s.basis.size()}, {"lower", s.basis.lower()}, {"upper", s.basis.upper()}}},
            {"beta0", s.beta0},
            {"delta", std::move(delta)},
            {"k", s.k},
            {"k_capped", s.k_capped},
            {"lambda_a", s.lambda_a},
            {"lambda_b", s.lambda_b},
            {"edf", s.edf},
            {"deviance", s.deviance},
            {"loglik", s.loglik},
            {"conditional_aic", s.conditional_aic},
            {"irls_iterations", s.irls_iterations}};
}

inline SmoothSurface surface_from_json(const nlohmann::json& j) {
    const auto& jb = j.at("basis");
    BsplineBasis basis(jb.at("size").get<std::size_t>(), jb.at("lower").get<double>(),
                       jb.at("upper").get<double>());
    const auto& jd = j.at("delta");
    if (jd.size() != basis.size())
        throw ParseError("surface json", "delta row count does not match the basis");
    Eigen::MatrixXd delta(basis.size(), basis.size());
    for (std::size_t r = 0; r < basis.size(); ++r) {
        if (jd[r].size() != basis.size())
            throw ParseError("surface json", "delta column count does not match the basis");
        for (std::size_t c = 0; c < basis.size(); ++c)
            delta(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                jd[r][c].get<double>();
    }
    return SmoothSurface{basis,
                         j.at("beta0").get<double>(),
                         std::move(delta),
                         j.at("k").get<double>(),
                         j.at("k_capped").get<bool>(),
                         j.at("lambda_a").get<double>(),
                         j.at("lambda_b").get<double>(),
                         j.at("edf").get<double>(),
                         j.at("deviance").get<double>(),
                         j.at("loglik").get<double>(),
                         j.at("conditional_aic").get<double>(),
                         j.at("irls_iterations").get<std::size_t>()};
}

inline int cmd_fit_foi(const RunConfig& rc, std::ostream& log) {
    AgeGrid grid(rc.analysis_breaks);
    SerologyDataset data = cli_detail::load_serology(rc);
    FoiFit fit = fit_piecewise_foi(data, grid);

    std::filesystem::path out = cli_detail::prepare_out_dir(rc);
    nlohmann::json j{{"command", "fit-foi"},
                     {"n", data.size()},
                     {"immune", data.count_immune()},
                     {"breakpoints", grid.breakpoints()},
                     {"lambdas", fit.foi.lambdas()},
                     {"loglik", fit.loglik},
                     {"converged", fit.converged},
                     {"clamp_events", fit.clamp_events},
                     {"iterations", fit.iterations},
                     {"has_data", fit.has_data},
                     {"tied_to_last_observed", fit.tied_to_last_observed}};
    cli_detail::write_json_file(out / "foi.json", j);

    csv::Writer curve(out / "foi_curve.csv", {"age", "prevalence", "foi"});
    for (long i = 0;; ++i) {
        double age = 0.1 * static_cast<double>(i);
        if (age > rc.life_expectancy + 1e-9) break;
        age = std::min(age, grid.upper());
        double pi = age <= grid.lower() ? 0.0 : fit.foi.prevalence(age);
        double lam = grid.contains(age) ? fit.foi.lambdas()[grid.class_of(age)] : 0.0;
        curve.row({csv::format_double(age), csv::format_double(pi), csv::format_double(lam)});
    }

    log << "fit-foi: n=" << data.size() << ", loglik=" << fit.loglik << ", lambda=[";
    for (std::size_t c = 0; c < fit.foi.lambdas().size(); ++c)
        log << (c ? ", " : "") << fit.foi.lambdas()[c];
    log << "]\n";
    return 0;
}

inline int cmd_smooth_contacts(const RunConfig& rc, std::ostream& log) {
    Demography demo = cli_detail::load_demography(rc);
    ContactSurvey survey = cli_detail::load_survey(rc);
    survey.compute_diary_weights(demo);
    ContactSurvey analysed = survey.filtered(rc.filter);

    AgeGrid fine = AgeGrid::one_year(0.0, rc.smoothing_upper);
    AgeGrid analysis(rc.analysis_breaks);
    ContactPipelineResult pipe = smooth_contact_rates(analysed, demo, fine, analysis,
                                                      cli_detail::smoothing_settings(rc));

    std::filesystem::path out = cli_detail::prepare_out_dir(rc);
    cli_detail::write_matrix_csv(out / "contact_matrix_raw.csv", fine, pipe.smoothed.m);
    cli_detail::write_matrix_csv(out / "contact_matrix_symmetrized.csv", fine,
                                 pipe.symmetrized.m);
    cli_detail::write_matrix_csv(out / "contact_rates.csv", analysis, pipe.rates.c);

    double residual = reciprocity_residual(pipe.symmetrized, demo.band_population(fine));
    nlohmann::json j = surface_to_json(pipe.surface);
    j["command"] = "smooth-contacts";
    j["filter"] = to_string(rc.filter);
    j["participants"] = analysed.participants().size();
    j["contacts"] = analysed.contacts().size();
    j["reciprocity_residual"] = residual;
    cli_detail::write_json_file(out / "surface.json", j);

    log << "smooth-contacts: " << analysed.participants().size() << " participants, "
        << analysed.contacts().size() << " contacts (" << to_string(rc.filter)
        << "), dispersion k=" << pipe.surface.k << ", edf=" << pipe.surface.edf
        << ", reciprocity residual=" << residual << "\n";
    return 0;
}

inline int cmd_fit_models(const RunConfig& rc, std::ostream& log) {
    Demography demo = cli_detail::load_demography(rc);
    SerologyDataset data = cli_detail::load_serology(rc);
    AgeGrid analysis(rc.analysis_breaks);

    bool any_proportionality = false;
    for (const auto& name : rc.models)
        if (!is_mixing_pattern_name(name)) any_proportionality = true;

    std::optional<ContactPipelineResult> pipe;
    if (any_proportionality) {
        ContactSurvey survey = cli_detail::load_survey(rc);
        survey.compute_diary_weights(demo);
        AgeGrid fine = AgeGrid::one_year(0.0, rc.smoothing_upper);
        pipe = smooth_contact_rates(survey.filtered(rc.filter), demo, fine, analysis,
                                    cli_detail::smoothing_settings(rc));
    }

    std::vector<ModelFitSummary> summaries;
    nlohmann::json details = nlohmann::json::array();
    for (const auto& name : rc.models) {
        if (is_mixing_pattern_name(name)) {
            MixingFit fit =
                fit_mixing_pattern(MixingPattern::standard(name), data, demo, analysis);
            double r0 = basic_reproduction_number(fit.waifw, demo);
            summaries.push_back({name, fit.n_params, fit.loglik, r0});
            details.push_back({{"model", name},
                               {"kind", "mixing"},
                               {"params", fit.params},
                               {"loglik", fit.loglik},
                               {"r0", r0},
                               {"converged", fit.converged},
                               {"non_identifiable", fit.non_identifiable}});
        } else {
            ProportionalityFit fit = fit_proportionality(ProportionalityModel::named(name),
                                                         pipe->rates, data, demo, analysis);
            summaries.push_back({name, fit.n_params, fit.loglik, fit.r0});
            details.push_back({{"model", name},
                               {"kind", "proportionality"},
                               {"params", fit.model.params()},
                               {"loglik", fit.loglik},
                               {"r0", fit.r0},
                               {"converged", fit.converged},
                               {"non_identifiable", fit.non_identifiable}});
        }
    }

    SelectionTable table = akaike_table(summaries);
    double averaged = model_average_r0(summaries);

    std::filesystem::path out = cli_detail::prepare_out_dir(rc);
    write_selection_table((out / "selection_table.csv").string(), table, data.size());

    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : table.rows)
        rows.push_back({{"model", r.model.name},
                        {"n_params", r.model.n_params},
                        {"loglik", r.model.loglik},
                        {"aic", r.aic},
                        {"bic", r.model.bic(data.size())},
                        {"delta", r.delta},
                        {"weight", r.weight},
                        {"evidence_ratio", r.evidence_ratio},
                        {"r0", r.model.r0}});
    nlohmann::json j{{"command", "fit-models"},
                     {"n_obs", data.size()},
                     {"best", table.rows[table.best].model.name},
                     {"model_average_r0", averaged},
                     {"table", std::move(rows)},
                     {"fits", std::move(details)}};
    cli_detail::write_json_file(out / "model_selection.json", j);

    log << "fit-models: " << summaries.size() << " candidates, best "
        << table.rows[table.best].model.name << " (AIC " << table.rows[table.best].aic
        << "), model-average R0 " << averaged << "\n";
    return 0;
}

inline int cmd_bootstrap(const RunConfig& rc, std::ostream& log) {
    BootstrapSpec spec;
    spec.replicates = rc.replicates;
    spec.master_seed = rc.seed;
    spec.level = rc.level;
    spec.jobs = rc.jobs;
    spec.filter = rc.filter;
    spec.smoothing = cli_detail::smoothing_settings(rc);
    for (const auto& name : rc.models) {
        if (is_mixing_pattern_name(name))
            throw ConfigError(
                "bootstrap resamples the contact pipeline; mixing patterns are not supported");
        spec.models.push_back(ProportionalityModel::named(name));
    }
    spec.validate();

    Demography demo = cli_detail::load_demography(rc);
    ContactSurvey survey = cli_detail::load_survey(rc);
    SerologyDataset data = cli_detail::load_serology(rc);
    AgeGrid fine = AgeGrid::one_year(0.0, rc.smoothing_upper);
    AgeGrid analysis(rc.analysis_breaks);

    BootstrapResult res = run_bootstrap(spec, survey, data, demo, fine, analysis);

    std::filesystem::path out = cli_detail::prepare_out_dir(rc);
    csv::Writer reps(out / "replicates.csv",
                     {"replicate", "pipeline_converged", "surface_k", "model", "converged",
                      "non_identifiable", "loglik", "r0", "param1", "param2", "param3"});
    for (const auto& rep : res.replicates) {
        if (!rep.converged) {
            reps.row({std::to_string(rep.index), "0", "", "", "", "", "", "", "", "", ""});
            continue;
        }
        for (const auto& mf : rep.models) {
            std::vector<std::string> row{std::to_string(rep.index), "1",
                                         csv::format_double(rep.surface_k), mf.model,
                                         mf.converged ? "1" : "0",
                                         mf.non_identifiable ? "1" : "0",
                                         csv::format_double(mf.loglik),
                                         csv::format_double(mf.r0)};
            for (std::size_t p = 0; p < 3; ++p)
                row.push_back(p < mf.params.size() ? csv::format_double(mf.params[p]) : "");
            reps.row(row);
        }
    }

    nlohmann::json models = nlohmann::json::array();
    for (const auto& model : spec.models) {
        try {
            ModelBootstrapSummary sum = summarize_model(res, model.name(), spec.level);
            nlohmann::json params = nlohmann::json::array();
            for (const auto& ci : sum.params)
                params.push_back({{"lower", ci.lower}, {"upper", ci.upper}});
            models.push_back({{"model", sum.model},
                              {"used", sum.used},
                              {"r0", {{"lower", sum.r0.lower}, {"upper", sum.r0.upper}}},
                              {"params", std::move(params)}});
        } catch (const DomainError& e) {
            models.push_back({{"model", model.name()}, {"error", e.what()}});
        }
    }
    nlohmann::json j{{"command", "bootstrap"}, {"replicates", spec.replicates},
                     {"converged", res.converged}, {"failed", res.failed},
                     {"level", spec.level},       {"seed", spec.master_seed},
                     {"jobs", spec.jobs},         {"models", std::move(models)}};
    cli_detail::write_json_file(out / "bootstrap_summary.json", j);

    log << "bootstrap: " << res.converged << "/" << spec.replicates
        << " replicates converged\n";
    return 0;
}

inline int cmd_simulate_serology(const RunConfig& rc, std::ostream& log) {
    Demography demo = cli_detail::load_demography(rc);
    Rng rng(rc.seed);
    std::filesystem::path out = cli_detail::prepare_out_dir(rc);

    if (rc.sim_mode == "constant" || rc.sim_mode == "augment") {
        if (!(rc.sim_prevalence >= 0.0 && rc.sim_prevalence <= 1.0))
            throw ConfigError("config: [simulate] prevalence must lie in [0,1]");
    }

    if (rc.sim_mode == "constant" || rc.sim_mode == "piecewise") {
        std::vector<double> ages =
            draw_ages_by_population(demo, rc.sim_age_low, rc.sim_age_high, rc.sim_n, rng);
        SerologyDataset data =
            rc.sim_mode == "constant"
                ? simulate_serology_constant(rc.sim_prevalence, ages, rng)
                : simulate_serology(PiecewiseFoi(AgeGrid(rc.analysis_breaks), rc.sim_lambdas),
                                    ages, rng);
        std::filesystem::path path = out / "serology_simulated.csv";
        data.write(path.string());
        log << "simulate-serology: " << data.size() << " records, "
            << static_cast<double>(data.count_immune()) / static_cast<double>(data.size())
            << " immune, written to " << path.string() << "\n";
        return 0;
    }

    if (rc.sim_mode == "augment") {
        cli_detail::require_file(rc.sim_base, "base serology");
        SerologyDataset base = SerologyDataset::load(rc.sim_base, rc.maternal_antibody_age,
                                                     rc.life_expectancy);
        std::vector<double> ages =
            draw_ages_by_population(demo, rc.sim_age_low, rc.sim_age_high, rc.sim_n, rng);
        SerologyDataset extra = simulate_serology_constant(rc.sim_prevalence, ages, rng, "aug");
        SerologyDataset merged = base;
        for (const auto& s : extra.samples()) merged.push_back(s);
        std::filesystem::path path = out / "serology_augmented.csv";
        merged.write(path.string());
        log << "simulate-serology: augmented " << base.size() << " + " << extra.size() << " = "
            << merged.size() << " records, written to " << path.string() << "\n";
        return 0;
    }

    throw ConfigError("config: [simulate] mode must be constant, piecewise, or augment");
}

}  // namespace sero
