#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "serocontact/common.hpp"
#include "serocontact/csv.hpp"
#include "serocontact/demography.hpp"

namespace sero {

enum class DayType { weekday, weekend };
enum class Closeness { close, nonclose };
enum class Duration { lt5m, m5_15, m15_60, h1_4, gt4h };

inline std::string to_string(DayType d) { return d == DayType::weekday ? "weekday" : "weekend"; }
inline std::string to_string(Closeness c) { return c == Closeness::close ? "close" : "nonclose"; }
inline std::string to_string(Duration d) {
    switch (d) {
        case Duration::lt5m: return "lt5m";
        case Duration::m5_15: return "m5_15";
        case Duration::m15_60: return "m15_60";
        case Duration::h1_4: return "h1_4";
        case Duration::gt4h: return "gt4h";
    }
    return "";
}

struct Participant {
    std::string id;
    double age = 0.0;
    int household_size = 1;
    DayType day_type = DayType::weekday;
    double weight = 1.0;
};

struct ContactRecord {
    std::string participant_id;
    double age_low = 0.0;
    double age_high = 0.0;
    Closeness closeness = Closeness::close;
    Duration duration = Duration::lt5m;

    /// Age surrogate used whenever a single value is needed.
    double age_mid() const { return 0.5 * (age_low + age_high); }
};

/// Which reported contacts count as adequate for transmission.
enum class ContactFilter { C1, C2, C3, C4, C5 };

inline std::string to_string(ContactFilter f) {
    switch (f) {
        case ContactFilter::C1: return "C1";
        case ContactFilter::C2: return "C2";
        case ContactFilter::C3: return "C3";
        case ContactFilter::C4: return "C4";
        case ContactFilter::C5: return "C5";
    }
    return "";
}

inline ContactFilter contact_filter_from_string(const std::string& s) {
    if (s == "C1") return ContactFilter::C1;
    if (s == "C2") return ContactFilter::C2;
    if (s == "C3") return ContactFilter::C3;
    if (s == "C4") return ContactFilter::C4;
    if (s == "C5") return ContactFilter::C5;
    throw ConfigError("unknown contact filter '" + s + "'");
}

inline bool filter_keeps(ContactFilter f, Closeness c, Duration d) {
    bool long_nonclose = c == Closeness::nonclose && (d == Duration::h1_4 || d == Duration::gt4h);
    switch (f) {
        case ContactFilter::C1:
            return true;
        case ContactFilter::C2:
            return c == Closeness::close;
        case ContactFilter::C3:
            return c == Closeness::close &&
                   (d == Duration::m15_60 || d == Duration::h1_4 || d == Duration::gt4h);
        case ContactFilter::C4:
            return c == Closeness::close || long_nonclose;
        case ContactFilter::C5:
            return filter_keeps(ContactFilter::C3, c, d) || long_nonclose;
    }
    return false;
}

class ContactSurvey {
public:
    ContactSurvey() = default;
    ContactSurvey(std::vector<Participant> participants, std::vector<ContactRecord> contacts)
        : participants_(std::move(participants)), contacts_(std::move(contacts)) {
        index_participants();
        for (const auto& c : contacts_)
            if (!index_.count(c.participant_id))
                throw DomainError("contact references unknown participant '" + c.participant_id + "'");
    }

    static ContactSurvey load(const std::string& participants_path,
                              const std::string& contacts_path,
                              std::size_t outlier_contact_threshold = 1000) {
        csv::Table pt = csv::read_table(participants_path,
                                        {"part_id", "part_age", "household_size", "day_type"});
        std::vector<Participant> parts;
        parts.reserve(pt.rows.size());
        std::set<std::string> seen;
        for (std::size_t i = 0; i < pt.rows.size(); ++i) {
            Participant p;
            p.id = pt.rows[i][0];
            if (!seen.insert(p.id).second)
                throw ParseError(participants_path, pt.lines[i],
                                 "duplicate participant id '" + p.id + "'");
            p.age = csv::parse_double(pt, i, 1);
            p.household_size = static_cast<int>(csv::parse_long(pt, i, 2));
            if (p.household_size < 1)
                throw ParseError(participants_path, pt.lines[i], "household_size must be >= 1");
            const std::string& day = pt.rows[i][3];
            if (day == "weekday") p.day_type = DayType::weekday;
            else if (day == "weekend") p.day_type = DayType::weekend;
            else
                throw ParseError(participants_path, pt.lines[i],
                                 "day_type must be weekday or weekend, got '" + day + "'");
            parts.push_back(std::move(p));
        }

        csv::Table ct = csv::read_table(contacts_path,
                                        {"part_id", "cnt_age_low", "cnt_age_high", "closeness", "duration"});
        std::vector<ContactRecord> contacts;
        contacts.reserve(ct.rows.size());
        std::size_t dropped_missing_age = 0;
        for (std::size_t i = 0; i < ct.rows.size(); ++i) {
            ContactRecord c;
            c.participant_id = ct.rows[i][0];
            bool has_low = !ct.rows[i][1].empty();
            bool has_high = !ct.rows[i][2].empty();
            if (!has_low && !has_high) {
                ++dropped_missing_age;
                continue;
            }
            if (has_low) c.age_low = csv::parse_double(ct, i, 1);
            if (has_high) c.age_high = csv::parse_double(ct, i, 2);
            if (!has_low) c.age_low = c.age_high;
            if (!has_high) c.age_high = c.age_low;
            if (c.age_low > c.age_high)
                throw ParseError(contacts_path, ct.lines[i], "cnt_age_low exceeds cnt_age_high");
            const std::string& cl = ct.rows[i][3];
            if (cl == "close") c.closeness = Closeness::close;
            else if (cl == "nonclose") c.closeness = Closeness::nonclose;
            else
                throw ParseError(contacts_path, ct.lines[i],
                                 "closeness must be close or nonclose, got '" + cl + "'");
            const std::string& du = ct.rows[i][4];
            if (du == "lt5m") c.duration = Duration::lt5m;
            else if (du == "m5_15") c.duration = Duration::m5_15;
            else if (du == "m15_60") c.duration = Duration::m15_60;
            else if (du == "h1_4") c.duration = Duration::h1_4;
            else if (du == "gt4h") c.duration = Duration::gt4h;
            else
                throw ParseError(contacts_path, ct.lines[i], "unknown duration '" + du + "'");
            contacts.push_back(std::move(c));
        }

        ContactSurvey survey(std::move(parts), std::move(contacts));
        survey.dropped_missing_age_ = dropped_missing_age;
        survey.exclude_outliers(outlier_contact_threshold);
        return survey;
    }

    void write(const std::string& participants_path, const std::string& contacts_path) const {
        csv::Writer pw(participants_path, {"part_id", "part_age", "household_size", "day_type"});
        for (const auto& p : participants_)
            pw.row({p.id, csv::format_double(p.age), std::to_string(p.household_size),
                    to_string(p.day_type)});
        csv::Writer cw(contacts_path,
                       {"part_id", "cnt_age_low", "cnt_age_high", "closeness", "duration"});
        for (const auto& c : contacts_)
            cw.row({c.participant_id, csv::format_double(c.age_low), csv::format_double(c.age_high),
                    to_string(c.closeness), to_string(c.duration)});
    }

    const std::vector<Participant>& participants() const { return participants_; }
    const std::vector<ContactRecord>& contacts() const { return contacts_; }
    std::size_t dropped_missing_age() const { return dropped_missing_age_; }
    std::size_t excluded_outliers() const { return excluded_outliers_; }

    const Participant& participant(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end())
            throw DomainError("unknown participant '" + id + "'");
        return participants_[it->second];
    }

    std::size_t contact_count(const std::string& participant_id) const {
        std::size_t n = 0;
        for (const auto& c : contacts_)
            if (c.participant_id == participant_id) ++n;
        return n;
    }

    /// Restrict the contact set; participants are kept as-is so that people
    /// who reported nothing matching the filter still contribute zeros.
    ContactSurvey filtered(ContactFilter f) const {
        ContactSurvey out;
        out.participants_ = participants_;
        out.dropped_missing_age_ = dropped_missing_age_;
        out.excluded_outliers_ = excluded_outliers_;
        for (const auto& c : contacts_)
            if (filter_keeps(f, c.closeness, c.duration)) out.contacts_.push_back(c);
        out.index_participants();
        return out;
    }

    /// Post-stratification on age band x household size against the census
    /// composition carried by the demography. Cells the census lacks fall
    /// back to the age-band margin; weights are rescaled to mean one.
    void compute_diary_weights(const Demography& demo) {
        if (!demo.has_household_structure())
            throw DomainError("diary weights need census household-size structure");
        const auto& census = demo.household_size_by_age();
        double census_total = 0.0;
        for (const auto& row : census)
            for (double v : row) census_total += v;
        if (!(census_total > 0))
            throw DomainError("diary weights: census counts are all zero");

        auto band_of = [](double age) {
            int b = static_cast<int>(std::floor(age / 10.0));
            return std::min(b, 7); // 0-9, 10-19, ..., 60-69, 70+
        };
        auto hh_cat = [](int size) { return std::min(size, 5); }; // 1,2,3,4,5+

        double census_cell[8][5] = {};
        double census_band[8] = {};
        for (std::size_t a = 0; a < census.size(); ++a) {
            int b = band_of(static_cast<double>(a) + 0.5);
            for (std::size_t h = 0; h < census[a].size(); ++h) {
                int hc = hh_cat(static_cast<int>(h) + 1);
                census_cell[b][hc - 1] += census[a][h];
                census_band[b] += census[a][h];
            }
        }

        double survey_cell[8][5] = {};
        double survey_band[8] = {};
        double n = static_cast<double>(participants_.size());
        if (n == 0) throw DomainError("diary weights: survey has no participants");
        for (const auto& p : participants_) {
            int b = band_of(p.age);
            ++survey_cell[b][hh_cat(p.household_size) - 1];
            ++survey_band[b];
        }

        double sum = 0.0;
        for (auto& p : participants_) {
            int b = band_of(p.age);
            int h = hh_cat(p.household_size) - 1;
            double w;
            if (census_cell[b][h] > 0) {
                w = (census_cell[b][h] / census_total) / (survey_cell[b][h] / n);
            } else if (census_band[b] > 0) {
                w = (census_band[b] / census_total) / (survey_band[b] / n);
            } else {
                w = 1.0;
            }
            p.weight = w;
            sum += w;
        }
        double mean = sum / n;
        for (auto& p : participants_) p.weight /= mean;
    }

    bool weights_normalized(double tol = 1e-9) const {
        if (participants_.empty()) return true;
        double s = 0.0;
        for (const auto& p : participants_) s += p.weight;
        return std::abs(s / static_cast<double>(participants_.size()) - 1.0) <= tol;
    }

    std::vector<Participant>& mutable_participants() { return participants_; }
    std::vector<ContactRecord>& mutable_contacts() { return contacts_; }
    void reindex() { index_participants(); }

private:
    void index_participants() {
        index_.clear();
        for (std::size_t i = 0; i < participants_.size(); ++i)
            index_[participants_[i].id] = i;
    }

    void exclude_outliers(std::size_t threshold) {
        std::map<std::string, std::size_t> counts;
        for (const auto& c : contacts_) ++counts[c.participant_id];
        std::set<std::string> drop;
        for (const auto& [id, cnt] : counts)
            if (cnt > threshold) drop.insert(id);
        if (drop.empty()) return;
        excluded_outliers_ = drop.size();
        std::vector<Participant> keep_p;
        for (auto& p : participants_)
            if (!drop.count(p.id)) keep_p.push_back(std::move(p));
        std::vector<ContactRecord> keep_c;
        for (auto& c : contacts_)
            if (!drop.count(c.participant_id)) keep_c.push_back(std::move(c));
        participants_ = std::move(keep_p);
        contacts_ = std::move(keep_c);
        index_participants();
    }

    std::vector<Participant> participants_;
    std::vector<ContactRecord> contacts_;
    std::map<std::string, std::size_t> index_;
    std::size_t dropped_missing_age_ = 0;
    std::size_t excluded_outliers_ = 0;
};

} // namespace sero
